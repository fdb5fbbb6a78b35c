"""Numerical bounds for two-encoder source coding and a small-blocklength typicality lab."""

__version__ = "0.1.0"

from .errors import DomainError, InfeasibleError, ParseError, ResourceCapError, ValidationError
from .instance import (
    DistortionMeasure,
    ProblemInstance,
    SolverOptions,
    distortion_floor,
    hamming_instance,
    load_instance,
    make_instance,
    rate_zero_ceiling,
    serialize,
)
from .prob import (
    Alphabet,
    JointPMF,
    Kernel,
    Tolerances,
    conditional_entropy,
    conditional_mutual_information,
    entropy,
    l1_distance,
    marginalize,
    markov_gap,
    markov_projection,
    mutual_information,
)
from .region import (
    RateRegion,
    RateTriple,
    blahut_arimoto,
    convex_closure_frontier,
    region_from_triples,
    sandwich_check,
    slepian_wolf_region,
)
