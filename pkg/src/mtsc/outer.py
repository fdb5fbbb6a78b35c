"""The outer region: joints on (X, Y, Xhat, Yhat) with X - (Xhat, Yhat) - Y.

Search runs over the reconstruction kernel w(xhat, yhat | x, y), so the source
marginal holds by construction. Distortion limits are kept by KL projection.
The Markov condition is a penalty beta * I(X; Y | Xhat Yhat), raised stage by
stage from a warm start.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels
from .errors import DomainError, InfeasibleError, ResourceCapError
from .instance import ProblemInstance, distortion_floor
from .optim import LinearConstraint, kl_project, mirror_descent
from .prob import (
    JointPMF,
    conditional_mutual_information,
    marginalize,
    markov_gap,
    mutual_information,
)
from .region import RateRegion, RateTriple, region_from_triples

EXTRA_BETA_STAGES = 3


@dataclass(frozen=True, eq=False)
class OuterCandidate:
    joint: JointPMF
    marginal_l1: float
    markov_gap_bits: float
    distortion_slack: tuple[float, float]
    tol: float = 1e-6
    start: int = -1
    converged: bool = True

    @property
    def violations(self) -> list[str]:
        out = []
        if self.marginal_l1 > self.tol:
            out.append(f"source marginal off by {self.marginal_l1:.3g} (L1)")
        if self.markov_gap_bits > self.tol:
            out.append(f"Markov gap {self.markov_gap_bits:.3g} bits")
        for i, s in enumerate(self.distortion_slack, start=1):
            if s < -self.tol:
                out.append(f"distortion {i} exceeds target by {-s:.3g}")
        return out

    @property
    def feasible(self) -> bool:
        return not self.violations

    @property
    def residual(self) -> float:
        """Largest constraint violation, for reporting."""
        return max(self.marginal_l1, self.markov_gap_bits, *(-s for s in self.distortion_slack), 0.0)


def membership_check(q: JointPMF, inst: ProblemInstance, tol: float | None = None,
                     start: int = -1, converged: bool = True) -> OuterCandidate:
    """Compute the feasibility residuals of ``q`` for the instance's outer-bound class."""
    tol = inst.solver.feasibility_tol if tol is None else tol
    shape = inst.p_xy.shape + (inst.xhat_alphabet.size, inst.yhat_alphabet.size)
    if q.shape != shape:
        raise DomainError(f"candidate shape {q.shape} does not match instance axes {shape}")
    src = marginalize(q, (0, 1))
    marginal_l1 = float(np.abs(src.mass - inst.p_xy).sum())
    gap = markov_gap(q, 0, 1, (2, 3))
    e1 = float(np.einsum("xyab,xa->", q.mass, inst.d1.matrix))
    e2 = float(np.einsum("xyab,yb->", q.mass, inst.d2.matrix))
    return OuterCandidate(q, marginal_l1, gap, (inst.D1 - e1, inst.D2 - e2), tol, start, converged)


def rate_triple(cand: OuterCandidate | JointPMF) -> RateTriple:
    q = cand.joint if isinstance(cand, OuterCandidate) else cand
    return RateTriple(
        conditional_mutual_information(q, 0, (2, 3), 1),
        conditional_mutual_information(q, 1, (2, 3), 0),
        mutual_information(q, (0, 1), (2, 3)),
    )


def _h(m: np.ndarray) -> float:
    m = m[m > 0]
    return float(-(m * np.log2(m)).sum())


def _log2(m: np.ndarray) -> np.ndarray:
    out = np.zeros_like(m)
    np.log2(m, out=out, where=m > 0)
    return out


def vertex_value(mu, a: float, b: float, c: float) -> tuple[float, int, bool]:
    """Scalarized support of one polyhedron; also which vertex won and which max branch."""
    val1 = mu[0] * a + mu[1] * max(b, c - a)
    val2 = mu[0] * max(a, c - b) + mu[1] * b
    if val1 <= val2:
        return val1, 1, b >= c - a
    return val2, 2, a >= c - b


class _OuterModel:
    """Vectorized rate and Markov-gap evaluation on the kernel w[s, k]."""

    def __init__(self, inst: ProblemInstance, mu):
        self.p = inst.p_xy.reshape(-1)
        self.nx, self.ny = inst.p_xy.shape
        self.na, self.nb = inst.xhat_alphabet.size, inst.yhat_alphabet.size
        self.K = self.na * self.nb
        self.S = self.nx * self.ny
        self.mu = (float(mu[0]), float(mu[1]))
        self.hxy = _h(inst.p_xy)
        self.hx = _h(inst.p_xy.sum(axis=1))
        self.hy = _h(inst.p_xy.sum(axis=0))
        xs = np.repeat(np.arange(self.nx), self.ny)
        ys = np.tile(np.arange(self.ny), self.nx)
        ks_a = np.repeat(np.arange(self.na), self.nb)
        ks_b = np.tile(np.arange(self.nb), self.na)
        self.cost1 = inst.d1.matrix[xs][:, ks_a]
        self.cost2 = inst.d2.matrix[ys][:, ks_b]
        self.constraints = [
            LinearConstraint(self.p, self.cost1, inst.D1),
            LinearConstraint(self.p, self.cost2, inst.D2),
        ]
        self.live = self.p > 0

    def joint(self, w: np.ndarray) -> np.ndarray:
        return (self.p[:, None] * w).reshape(self.nx, self.ny, self.na, self.nb)

    def pieces(self, w):
        q = (self.p[:, None] * w).reshape(self.nx, self.ny, self.K)
        qxw = q.sum(axis=1)
        qyw = q.sum(axis=0)
        qw = qxw.sum(axis=0)
        h_xyw, h_xw, h_yw, h_w = _h(q), _h(qxw), _h(qyw), _h(qw)
        a = self.hxy - self.hy - h_xyw + h_yw
        b = self.hxy - self.hx - h_xyw + h_xw
        c = self.hxy + h_w - h_xyw
        gap = h_xw + h_yw - h_xyw - h_w
        return q, qxw, qyw, qw, a, b, c, gap

    def triple(self, w) -> tuple[float, float, float]:
        _, _, _, _, a, b, c, _ = self.pieces(w)
        return max(a, 0.0), max(b, 0.0), max(c, 0.0)

    def objective(self, beta: float):
        mu0, mu1 = self.mu

        def f(w):
            g = np.empty_like(w)
            val = _kernels.outer_eval(w, self.p, self.nx, self.ny, self.hxy, self.hx, self.hy,
                                      mu0, mu1, beta, g)[0]
            return val, g

        return f

    def project(self, w):
        out, ok = kl_project(w, self.constraints)
        return out if ok else None


def _seed_kernels(inst: ProblemInstance, model: _OuterModel) -> list[np.ndarray]:
    """Deterministic maps: per-symbol best reconstructions, constants, and the two mixed maps."""
    d1, d2 = inst.d1.matrix, inst.d2.matrix
    px, py = inst.p_xy.sum(axis=1), inst.p_xy.sum(axis=0)
    best_a = d1.argmin(axis=1)
    best_b = d2.argmin(axis=1)
    const_a = int((px @ d1).argmin())
    const_b = int((py @ d2).argmin())
    maps = [
        (lambda x, y: (best_a[x], best_b[y])),
        (lambda x, y: (best_a[x], const_b)),
        (lambda x, y: (const_a, best_b[y])),
        (lambda x, y: (const_a, const_b)),
    ]
    seeds = []
    for m in maps:
        w = np.zeros((model.S, model.K))
        for x in range(model.nx):
            for y in range(model.ny):
                a, b = m(x, y)
                w[x * model.ny + y, a * model.nb + b] = 1.0
        seeds.append(w)
    return seeds


def initial_kernels(inst: ProblemInstance, model: _OuterModel, starts: int, seed: int) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    pure = _seed_kernels(inst, model)
    uniform = np.full((model.S, model.K), 1.0 / model.K)
    out = list(pure) + [0.7 * w + 0.3 * uniform for w in pure]
    out = out[:starts]
    while len(out) < starts:
        out.append(rng.dirichlet(np.ones(model.K), size=model.S))
    return out


@dataclass
class OuterResult:
    value: float
    candidate: OuterCandidate
    triple: RateTriple
    status: str
    weights: tuple[float, float]
    pool: list[OuterCandidate] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.status == "ok"


def check_targets(inst: ProblemInstance) -> None:
    f1, f2 = distortion_floor(inst)
    if inst.D1 < f1 - 1e-12 or inst.D2 < f2 - 1e-12:
        raise InfeasibleError(
            f"targets ({inst.D1}, {inst.D2}) below the distortion floor ({f1:.6g}, {f2:.6g})"
        )


def _run_start(model: _OuterModel, w0: np.ndarray, opts, start: int, inst) -> OuterCandidate | None:
    w = model.project(w0)
    if w is None:
        return None
    schedule = list(opts.beta_schedule)
    last = schedule[-1]
    stage = 0
    converged = True
    while True:
        beta = schedule[stage] if stage < len(schedule) else last * 10 ** (stage - len(schedule) + 1)
        res = mirror_descent(w, model.objective(beta), model.p, model.project,
                             max_iter=opts.max_iter, objective_tol=opts.objective_tol)
        w = res.w
        converged = res.converged
        stage += 1
        if stage >= len(schedule):
            gap = model.pieces(w)[-1]
            if gap <= opts.feasibility_tol or stage >= len(schedule) + EXTRA_BETA_STAGES:
                break
    q = JointPMF(
        (inst.x_alphabet, inst.y_alphabet, inst.xhat_alphabet, inst.yhat_alphabet),
        model.joint(w) / model.joint(w).sum(),
    )
    return membership_check(q, inst, opts.feasibility_tol, start, converged)


def candidate_pool(inst: ProblemInstance, weights, opts=None) -> list[OuterCandidate]:
    """Run every start for one weight direction; returns all end points (feasible or not)."""
    opts = opts or inst.solver
    check_targets(inst)
    model = _OuterModel(inst, weights)
    pool = []
    for i, w0 in enumerate(initial_kernels(inst, model, opts.starts, opts.seed)):
        cand = _run_start(model, w0, opts, i, inst)
        if cand is not None:
            pool.append(cand)
    return pool


def best_of(pool: Sequence[OuterCandidate], weights) -> tuple[float, OuterCandidate | None]:
    best, best_c = math.inf, None
    for c in pool:
        if not c.feasible:
            continue
        v = rate_triple(c).support(weights)
        if v < best - 1e-15:
            best, best_c = v, c
    return best, best_c


def scalarized_minimum(inst: ProblemInstance, weights, opts=None) -> OuterResult:
    """Smallest mu1*R1 + mu2*R2 found over outer-class candidates (an upper estimate).

    Multi-start local search; the best feasible end point wins, ties going to
    the lowest start index. If no start ends feasible, the least-violating
    iterate is returned with status "unconverged".
    """
    mu = (float(weights[0]), float(weights[1]))
    if mu[0] < 0 or mu[1] < 0 or mu[0] + mu[1] <= 0:
        raise DomainError("weights must be nonnegative and not both zero")
    pool = candidate_pool(inst, mu, opts)
    value, cand = best_of(pool, mu)
    if cand is None:
        if not pool:
            raise InfeasibleError("no start could be made distortion-feasible")
        cand = min(pool, key=lambda c: c.residual)
        triple = rate_triple(cand)
        return OuterResult(triple.support(mu), cand, triple, "unconverged", mu, pool)
    return OuterResult(value, cand, rate_triple(cand), "ok", mu, pool)


def trace_region(inst: ProblemInstance, weight_sweep, opts=None) -> tuple[RateRegion, list[OuterResult]]:
    """Trace supporting points for each weight; the region pools every feasible candidate found."""
    if not weight_sweep:
        raise DomainError("weight sweep must be nonempty")
    results = [scalarized_minimum(inst, mu, opts) for mu in weight_sweep]
    triples = []
    for k, r in enumerate(results):
        for c in r.pool:
            if c.feasible:
                triples.append((rate_triple(c), f"outer-w{k}-s{c.start}"))
    if not triples:
        triples = [(r.triple, f"outer-w{k}-unconverged") for k, r in enumerate(results)]
    region = region_from_triples(triples, kind="outer")
    for r in results:
        v, _ = region.support(r.weights)
        r.value = min(r.value, v)
    return region, results


@dataclass
class Bracket:
    lower: float
    upper: float
    lattice_best: float
    K: int
    points: int
    candidate: OuterCandidate | None


def _compositions(total: int, parts: int) -> np.ndarray:
    rows = []
    for bars in itertools.combinations(range(total + parts - 1), parts - 1):
        prev, row = -1, []
        for b in bars:
            row.append(b - prev - 1)
            prev = b
        row.append(total + parts - 1 - prev - 1)
        rows.append(row)
    return np.array(rows, dtype=float) / total


def certified_bracket(inst: ProblemInstance, weights, K: int | None = None, cap: int = 2_000_000,
                      batch: int = 20_000) -> Bracket:
    """Exhaustive lattice search over w with step 1/K, plus local refinement.

    Only for tiny instances (|X||Y||Xhat||Yhat| <= 16). ``upper`` is the best
    exactly feasible value found (lattice or refined). ``lower`` is the best
    lattice value after relaxing feasibility by one lattice step (distortion
    by d_max/K, Markov gap by 1/K bits); it brackets the search, it is not a
    proof of optimality. K shrinks automatically until the lattice fits ``cap``.
    """
    check_targets(inst)
    model = _OuterModel(inst, weights)
    if model.S * model.K > 16:
        raise ResourceCapError("certified mode is limited to |X||Y||Xhat||Yhat| <= 16")
    K = K or inst.solver.grid_K
    live_rows = np.flatnonzero(model.live)
    while True:
        comps = _compositions(K, model.K)
        points = len(comps) ** len(live_rows)
        if points <= cap:
            break
        if K == 1:
            raise ResourceCapError(f"deterministic lattice has {points} points > cap {cap}")
        K -= 1
    tol = inst.solver.feasibility_tol
    dmax = max(inst.d1.d_max, inst.d2.d_max)
    best_exact, best_w = math.inf, None
    best_relaxed = math.inf
    n_comp = len(comps)
    for start in range(0, points, batch):
        idx = np.arange(start, min(points, start + batch))
        digits = []
        rem = idx.copy()
        for _ in live_rows:
            digits.append(rem % n_comp)
            rem //= n_comp
        W = np.zeros((len(idx), model.S, model.K))
        W[:, ~model.live, :] = 1.0 / model.K
        for r, dig in zip(live_rows, digits):
            W[:, r, :] = comps[dig]
        vals, gaps, e1, e2 = _batch_eval(model, W)
        exact = (gaps <= tol) & (e1 <= inst.D1 + tol) & (e2 <= inst.D2 + tol)
        relaxed = (gaps <= 1.0 / K) & (e1 <= inst.D1 + dmax / K) & (e2 <= inst.D2 + dmax / K)
        if relaxed.any():
            best_relaxed = min(best_relaxed, float(vals[relaxed].min()))
        if exact.any():
            j = int(np.argmin(np.where(exact, vals, np.inf)))
            if vals[j] < best_exact:
                best_exact, best_w = float(vals[j]), W[j].copy()
    lattice_best = best_exact
    upper = best_exact
    cand = None
    if best_w is not None:
        opts = inst.solver
        refined = _run_start(model, 0.9 * best_w + 0.1 / model.K, opts, 0, inst)
        cand = _run_start(model, best_w, opts, 0, inst)
        for c in (refined, cand):
            if c is not None and c.feasible:
                v = rate_triple(c).support(model.mu)
                if v <= upper:
                    upper, cand = v, c
    return Bracket(min(best_relaxed, upper), upper, lattice_best, K, points, cand)


def _batch_eval(model: _OuterModel, W: np.ndarray):
    p = model.p
    q = (p[None, :, None] * W).reshape(len(W), model.nx, model.ny, model.K)

    def H(m, axes):
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(m > 0, -m * np.log2(m), 0.0)
        return t.sum(axis=axes)

    qxw = q.sum(axis=2)
    qyw = q.sum(axis=1)
    qw = qxw.sum(axis=1)
    h_xyw = H(q, (1, 2, 3))
    h_xw = H(qxw, (1, 2))
    h_yw = H(qyw, (1, 2))
    h_w = H(qw, (1,))
    a = np.maximum(model.hxy - model.hy - h_xyw + h_yw, 0.0)
    b = np.maximum(model.hxy - model.hx - h_xyw + h_xw, 0.0)
    c = np.maximum(model.hxy + h_w - h_xyw, 0.0)
    gap = h_xw + h_yw - h_xyw - h_w
    mu = model.mu
    v1 = mu[0] * a + mu[1] * np.maximum(b, c - a)
    v2 = mu[0] * np.maximum(a, c - b) + mu[1] * b
    vals = np.minimum(v1, v2)
    e1 = np.einsum("s,nsk,sk->n", p, W, model.cost1)
    e2 = np.einsum("s,nsk,sk->n", p, W, model.cost2)
    return vals, gap, e1, e2
