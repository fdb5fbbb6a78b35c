"""Rate-region geometry, inner/outer comparisons and classical single-terminal baselines."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .errors import DomainError, InfeasibleError
from .instance import DistortionMeasure
from .prob import JointPMF, conditional_entropy, entropy

LN2 = math.log(2.0)


@dataclass(frozen=True)
class RateTriple:
    """Lower limits (bits) of the polyhedron R1 >= r1, R2 >= r2, R1 + R2 >= sum."""

    r1_floor: float
    r2_floor: float
    sum_floor: float

    def __post_init__(self):
        for name in ("r1_floor", "r2_floor", "sum_floor"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < -1e-12:
                raise DomainError(f"{name} must be finite and nonnegative, got {v}")
            object.__setattr__(self, name, max(float(v), 0.0))

    def vertices(self) -> tuple[tuple[float, float], tuple[float, float]]:
        a, b, c = self.r1_floor, self.r2_floor, self.sum_floor
        return (a, max(b, c - a)), (max(a, c - b), b)

    def support(self, mu: Sequence[float]) -> float:
        """min of mu1*R1 + mu2*R2 over the polyhedron (ties toward the first vertex)."""
        return min(mu[0] * v[0] + mu[1] * v[1] for v in self.vertices())

    def contains(self, r1: float, r2: float, tol: float = 0.0) -> bool:
        return (r1 >= self.r1_floor - tol and r2 >= self.r2_floor - tol
                and r1 + r2 >= self.sum_floor - tol)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.r1_floor, self.r2_floor, self.sum_floor)


def _pareto_min(points: Iterable[tuple[float, float]]) -> list[tuple[float, float]]:
    pts = sorted(set(points))
    front: list[tuple[float, float]] = []
    best_r2 = math.inf
    for r1, r2 in pts:
        if r2 < best_r2:
            front.append((r1, r2))
            best_r2 = r2
    return front


@dataclass(frozen=True, eq=False)
class RateRegion:
    triples: tuple[tuple[RateTriple, str], ...]
    kind: str = "outer"
    frontier: tuple[tuple[float, float], ...] = field(default=())

    def __post_init__(self):
        if self.kind not in ("inner", "outer"):
            raise DomainError(f"kind must be 'inner' or 'outer', not {self.kind!r}")
        if not self.triples:
            raise DomainError("a region needs at least one rate triple")
        object.__setattr__(self, "triples", tuple(self.triples))
        if not self.frontier:
            verts = [v for t, _ in self.triples for v in t.vertices()]
            object.__setattr__(self, "frontier", tuple(_pareto_min(verts)))

    def contains(self, r1: float, r2: float, tol: float = 0.0) -> bool:
        """Union membership: some member polyhedron contains the point."""
        return any(t.contains(r1, r2, tol) for t, _ in self.triples)

    def support(self, mu: Sequence[float]) -> tuple[float, str]:
        """Scalarized support of the (convex closure of the) union, with the attaining candidate id."""
        best, best_id = math.inf, ""
        for t, cid in self.triples:
            v = t.support(mu)
            if v < best:
                best, best_id = v, cid
        return best, best_id

    def hull_contains(self, r1: float, r2: float, directions=None, tol: float = 1e-9) -> bool:
        """Membership in the convex closure, tested through supporting half-planes."""
        directions = default_directions() if directions is None else directions
        for mu in directions:
            if mu[0] * r1 + mu[1] * r2 < self.support(mu)[0] - tol:
                return False
        return r1 >= -tol and r2 >= -tol


def region_from_triples(triples, kind: str = "outer") -> RateRegion:
    """Build a union region. Accepts RateTriples or (RateTriple, candidate_id) pairs."""
    items = []
    for i, t in enumerate(triples):
        if isinstance(t, RateTriple):
            items.append((t, f"c{i}"))
        else:
            items.append((t[0], str(t[1])))
    if not items:
        raise DomainError("empty triple list")
    return RateRegion(tuple(items), kind)


def convex_closure_frontier(region: RateRegion) -> list[tuple[float, float]]:
    """Lower-left convex hull of the region's Pareto frontier, sorted by R1."""
    pts = sorted(region.frontier)
    hull: list[tuple[float, float]] = []
    for p in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            # drop hull[-1] if it is on or above the chord hull[-2] -> p
            cross = (x2 - x1) * (p[1] - y1) - (y2 - y1) * (p[0] - x1)
            if cross <= 0:
                hull.pop()
            else:
                break
        hull.append(p)
    return hull


def default_directions(count: int = 17) -> list[tuple[float, float]]:
    """Weights (t, 1 - t) with t evenly spaced on [0, 1]."""
    return [(i / (count - 1), 1 - i / (count - 1)) for i in range(count)]


@dataclass(frozen=True)
class SandwichEntry:
    mu: tuple[float, float]
    inner_value: float
    outer_value: float
    gap: float
    ok: bool


def sandwich_check(inner: RateRegion, outer: RateRegion, directions=None, tol: float = 1e-3) -> list[SandwichEntry]:
    """Per-direction comparison; the outer support should not exceed the inner one by more than tol."""
    directions = default_directions() if directions is None else directions
    report = []
    for mu in directions:
        vi, _ = inner.support(mu)
        vo, _ = outer.support(mu)
        gap = vi - vo
        report.append(SandwichEntry(tuple(mu), vi, vo, gap, gap >= -tol))
    return report


def slepian_wolf_region(p: JointPMF) -> RateTriple:
    return RateTriple(
        conditional_entropy(p, 0, 1),
        conditional_entropy(p, 1, 0),
        entropy(p, (0, 1)),
    )


def _ba_at_slope(px, d, s, tol=1e-9, max_iter=100_000, allowed=None):
    """Blahut-Arimoto at slope s (bits per unit distortion). Returns (rate, distortion, Q)."""
    if allowed is None:
        logits = -s * LN2 * d
    else:
        logits = np.where(allowed, 0.0, -np.inf)
    return _kernels.ba_iterate(np.ascontiguousarray(px, float), np.ascontiguousarray(logits, float),
                               np.ascontiguousarray(d, float), tol, max_iter)


def blahut_arimoto(p: JointPMF, d: DistortionMeasure, D: float, tol: float = 1e-9, dist_tol: float = 1e-6) -> float:
    """Rate-distortion function R(D) in bits for a single finite source.

    Alternating minimization at a fixed slope, wrapped in a bisection on the
    slope so that the achieved distortion lands within ``dist_tol`` of ``D``.
    """
    if p.ndim != 1:
        raise DomainError("blahut_arimoto expects a single-axis pmf")
    px = p.mass
    dm = d.matrix
    if dm.shape[0] != px.shape[0]:
        raise DomainError("distortion rows do not match the source alphabet")
    floor = float(px @ dm.min(axis=1))
    ceiling = float((px @ dm).min())
    if D < floor - 1e-12:
        raise InfeasibleError(f"D={D} is below the distortion floor {floor}")
    if D >= ceiling:
        return 0.0
    if D <= floor + 1e-12:
        allowed = dm <= dm.min(axis=1, keepdims=True) + 1e-15
        rate, _, _ = _ba_at_slope(px, dm, 0.0, tol=tol, allowed=allowed)
        return rate

    lo, hi = 0.0, 1.0
    while _ba_at_slope(px, dm, hi, tol=tol)[1] > D:
        lo, hi = hi, hi * 2
        if hi > 1e6:
            break
    rate, dist = 0.0, ceiling
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        rate, dist, _ = _ba_at_slope(px, dm, mid, tol=tol)
        if abs(dist - D) <= dist_tol:
            break
        if dist > D:
            lo = mid
        else:
            hi = mid
    # first-order correction along the tangent of slope -mid
    return max(rate + mid * (dist - D), 0.0)
