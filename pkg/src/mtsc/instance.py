"""Problem instances: source p(xy), distortion measures, targets and solver options."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .errors import DomainError, ParseError, ValidationError
from .prob import Alphabet, JointPMF, marginalize, NORMALIZATION_TOL


@dataclass(frozen=True, eq=False)
class DistortionMeasure:
    source_alphabet: Alphabet
    recon_alphabet: Alphabet
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.shape != (self.source_alphabet.size, self.recon_alphabet.size):
            raise DomainError(f"distortion matrix shape {m.shape} does not match alphabets")
        if not np.all(np.isfinite(m)) or np.any(m < 0):
            raise DomainError("distortion entries must be finite and nonnegative")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def d_max(self) -> float:
        return float(self.matrix.max())

    @classmethod
    def hamming(cls, size: int, labels=None) -> "DistortionMeasure":
        a = Alphabet(tuple(labels)) if labels else Alphabet.of_size(size)
        return cls(a, a, 1.0 - np.eye(size))


@dataclass(frozen=True)
class SolverOptions:
    starts: int = 32
    seed: int = 0
    beta_schedule: tuple[float, ...] = (1.0, 10.0, 1e2, 1e3, 1e4)
    grid_K: int = 8
    feasibility_tol: float = 1e-6
    objective_tol: float = 1e-9
    max_iter: int = 400
    u_size: int | None = None
    v_size: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "beta_schedule", tuple(float(b) for b in self.beta_schedule))
        if self.starts < 1:
            raise DomainError("starts must be >= 1")
        if self.grid_K < 1:
            raise DomainError("grid_K must be >= 1")
        if self.feasibility_tol < 0 or self.objective_tol < 0:
            raise DomainError("tolerances must be nonnegative")
        if not self.beta_schedule or any(b <= 0 for b in self.beta_schedule):
            raise DomainError("beta_schedule must be a nonempty list of positive numbers")

    @classmethod
    def from_dict(cls, d: dict) -> "SolverOptions":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise DomainError(f"unknown solver option(s): {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["beta_schedule"] = list(self.beta_schedule)
        return {k: v for k, v in d.items() if v is not None}


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    source: JointPMF
    d1: DistortionMeasure
    d2: DistortionMeasure
    D1: float
    D2: float
    solver: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        problems = []
        if self.source.ndim != 2:
            problems.append("source must be a pmf over (X, Y)")
        else:
            if self.d1.source_alphabet != self.source.axes[0]:
                problems.append("d1 rows do not match the X alphabet")
            if self.d2.source_alphabet != self.source.axes[1]:
                problems.append("d2 rows do not match the Y alphabet")
        for name in ("D1", "D2"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v >= 0):
                problems.append(f"{name} must be a finite nonnegative number")
        if problems:
            raise ValidationError(problems)

    @property
    def x_alphabet(self) -> Alphabet:
        return self.source.axes[0]

    @property
    def y_alphabet(self) -> Alphabet:
        return self.source.axes[1]

    @property
    def xhat_alphabet(self) -> Alphabet:
        return self.d1.recon_alphabet

    @property
    def yhat_alphabet(self) -> Alphabet:
        return self.d2.recon_alphabet

    @property
    def p_xy(self) -> np.ndarray:
        return self.source.mass

    @property
    def targets(self) -> tuple[float, float]:
        return (self.D1, self.D2)

    def with_targets(self, D1: float, D2: float) -> "ProblemInstance":
        return replace(self, D1=float(D1), D2=float(D2))

    def with_solver(self, **overrides) -> "ProblemInstance":
        return replace(self, solver=replace(self.solver, **overrides))


def make_instance(p_xy, d1, d2, D1, D2, solver: SolverOptions | None = None) -> ProblemInstance:
    """Convenience constructor from bare arrays with default labels."""
    p = JointPMF.from_array(p_xy)
    d1 = np.asarray(d1, dtype=float)
    d2 = np.asarray(d2, dtype=float)
    dm1 = DistortionMeasure(p.axes[0], Alphabet.of_size(d1.shape[1]), d1)
    dm2 = DistortionMeasure(p.axes[1], Alphabet.of_size(d2.shape[1]), d2)
    return ProblemInstance(p, dm1, dm2, float(D1), float(D2), solver or SolverOptions())


def hamming_instance(p_xy, D1, D2, solver: SolverOptions | None = None) -> ProblemInstance:
    p = np.asarray(p_xy, dtype=float)
    return make_instance(p, 1 - np.eye(p.shape[0]), 1 - np.eye(p.shape[1]), D1, D2, solver)


_REQUIRED = ("x_labels", "y_labels", "p_xy", "d1", "d2", "D1", "D2")
_OPTIONAL = ("xhat_labels", "yhat_labels", "solver")


def _matrix(doc: dict, key: str, shape: tuple[int, int], problems: list[str]):
    raw = doc[key]
    if not isinstance(raw, list) or not all(isinstance(r, list) for r in raw):
        problems.append(f"{key}: must be a 2-D array")
        return None
    if len({len(r) for r in raw}) > 1:
        problems.append(f"{key}: array is not rectangular")
        return None
    try:
        m = np.array(raw, dtype=float)
    except (TypeError, ValueError):
        problems.append(f"{key}: entries must be numbers")
        return None
    if m.shape != shape:
        problems.append(f"{key}: shape {m.shape} does not match expected {shape}")
        return None
    if not np.all(np.isfinite(m)):
        problems.append(f"{key}: entries must be finite")
        return None
    return m


def instance_from_dict(doc: dict) -> ProblemInstance:
    """Validate a parsed instance document; collects every violation before raising."""
    if not isinstance(doc, dict):
        raise ValidationError(["document must be a JSON object"])
    problems: list[str] = []
    missing = [k for k in _REQUIRED if k not in doc]
    if missing:
        raise ValidationError([f"missing field '{k}'" for k in missing])
    unknown = set(doc) - set(_REQUIRED) - set(_OPTIONAL)
    if unknown:
        problems.append(f"unknown field(s): {sorted(unknown)}")

    alphabets = {}
    for key, fallback in (("x_labels", None), ("y_labels", None), ("xhat_labels", "x_labels"), ("yhat_labels", "y_labels")):
        labels = doc.get(key, doc.get(fallback) if fallback else None)
        try:
            alphabets[key] = Alphabet(tuple(labels))
        except (DomainError, TypeError) as exc:
            problems.append(f"{key}: {exc}")
    if problems:
        raise ValidationError(problems)

    nx, ny = alphabets["x_labels"].size, alphabets["y_labels"].size
    p = _matrix(doc, "p_xy", (nx, ny), problems)
    d1 = _matrix(doc, "d1", (nx, alphabets["xhat_labels"].size), problems)
    d2 = _matrix(doc, "d2", (ny, alphabets["yhat_labels"].size), problems)
    if p is not None:
        if np.any(p < 0):
            problems.append("p_xy: source has negative mass")
        elif abs(p.sum() - 1.0) > NORMALIZATION_TOL:
            problems.append(f"p_xy: source not normalized (sums to {p.sum()!r})")
    for key, m in (("d1", d1), ("d2", d2)):
        if m is not None and np.any(m < 0):
            problems.append(f"{key}: negative distortion")
    for key in ("D1", "D2"):
        v = doc[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v) or v < 0:
            problems.append(f"{key}: must be a finite nonnegative number")
    solver = SolverOptions()
    if "solver" in doc:
        try:
            solver = SolverOptions.from_dict(dict(doc["solver"]))
        except (DomainError, TypeError, ValueError) as exc:
            problems.append(f"solver: {exc}")
    if problems:
        raise ValidationError(problems)

    source = JointPMF((alphabets["x_labels"], alphabets["y_labels"]), p)
    dm1 = DistortionMeasure(alphabets["x_labels"], alphabets["xhat_labels"], d1)
    dm2 = DistortionMeasure(alphabets["y_labels"], alphabets["yhat_labels"], d2)
    return ProblemInstance(source, dm1, dm2, float(doc["D1"]), float(doc["D2"]), solver)


def load_instance(document) -> ProblemInstance:
    """Parse and validate an instance from JSON text, a path, or an already-parsed dict."""
    if isinstance(document, dict):
        return instance_from_dict(document)
    if isinstance(document, Path):
        document = document.read_text()
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed instance document at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return instance_from_dict(doc)


def load_instance_file(path) -> ProblemInstance:
    return load_instance(Path(path))


def instance_to_dict(inst: ProblemInstance) -> dict:
    return {
        "x_labels": list(inst.x_alphabet.labels),
        "y_labels": list(inst.y_alphabet.labels),
        "xhat_labels": list(inst.xhat_alphabet.labels),
        "yhat_labels": list(inst.yhat_alphabet.labels),
        "p_xy": inst.p_xy.tolist(),
        "d1": inst.d1.matrix.tolist(),
        "d2": inst.d2.matrix.tolist(),
        "D1": inst.D1,
        "D2": inst.D2,
        "solver": inst.solver.to_dict(),
    }


def serialize(inst: ProblemInstance) -> str:
    # repr-based float formatting round-trips exactly
    return json.dumps(instance_to_dict(inst), indent=2)


def distortion_floor(inst: ProblemInstance) -> tuple[float, float]:
    """Smallest expected distortions reachable with full knowledge of the sources."""
    px = marginalize(inst.source, 0).mass
    py = marginalize(inst.source, 1).mass
    return (
        float(px @ inst.d1.matrix.min(axis=1)),
        float(py @ inst.d2.matrix.min(axis=1)),
    )


def rate_zero_ceiling(inst: ProblemInstance) -> tuple[float, float]:
    """Best expected distortion of a constant reconstruction, per source."""
    px = marginalize(inst.source, 0).mass
    py = marginalize(inst.source, 1).mass
    return (
        float((px @ inst.d1.matrix).min()),
        float((py @ inst.d2.matrix).min()),
    )
