"""The Berger-Tung inner region: test channels p(u|x), p(v|y) with decoder maps gamma1, gamma2.

The joint p(xy) p(u|x) p(v|y) satisfies the long chain U - X - Y - V by
construction, so only the distortion limits constrain the search. Those are
kept by rejecting infeasible trial points plus a log barrier on the slack.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import DomainError, InfeasibleError
from .instance import ProblemInstance, distortion_floor
from .optim import mirror_descent
from .outer import check_targets
from .prob import Alphabet, JointPMF, Kernel, markov_gap, markov_projection
from .region import RateRegion, RateTriple, region_from_triples

TAU_SCHEDULE = (1e-2, 1e-3, 1e-4, 1e-5, 0.0)
ROUNDING_ULPS = 16


class PreconditionError(DomainError):
    """A chain condition required by the check does not hold; ``gap`` is the offending value in bits."""

    def __init__(self, message: str, gap: float):
        super().__init__(message)
        self.gap = gap


@dataclass(frozen=True, eq=False)
class InnerCandidate:
    u_alphabet: Alphabet
    v_alphabet: Alphabet
    test_channel_1: Kernel
    test_channel_2: Kernel
    gamma1: np.ndarray
    gamma2: np.ndarray
    distortions: tuple[float, float] = (math.nan, math.nan)
    targets: tuple[float, float] = (math.inf, math.inf)
    tol: float = 1e-6
    start: int = -1

    @property
    def feasible(self) -> bool:
        return all(e <= D + self.tol for e, D in zip(self.distortions, self.targets))

    @property
    def residual(self) -> float:
        return max(0.0, *(e - D for e, D in zip(self.distortions, self.targets)))

    def to_dict(self, inst: ProblemInstance | None = None) -> dict:
        out = {
            "u_size": self.u_alphabet.size,
            "v_size": self.v_alphabet.size,
            "tc1": self.test_channel_1.matrix().tolist(),
            "tc2": self.test_channel_2.matrix().tolist(),
            "gamma1": self.gamma1.tolist(),
            "gamma2": self.gamma2.tolist(),
            "distortions": list(self.distortions),
        }
        if inst is not None:
            out["rate_triple"] = list(rate_triple_inner(self, inst).as_tuple())
        return out

    def to_json(self, inst: ProblemInstance | None = None) -> str:
        return json.dumps(self.to_dict(inst), indent=2)


def five_way_joint(inst: ProblemInstance, tc1: Kernel, tc2: Kernel) -> np.ndarray:
    """p(x, y, u, v) = p(xy) p(u|x) p(v|y)."""
    A, B = tc1.matrix(), tc2.matrix()
    if A.shape[0] != inst.x_alphabet.size or B.shape[0] != inst.y_alphabet.size:
        raise DomainError("test channel rows do not match the source alphabets")
    return np.einsum("xy,xu,yv->xyuv", inst.p_xy, A, B)


def _expected(q, d1, d2, g1, g2) -> tuple[float, float]:
    e1 = float(np.einsum("xyuv,xuv->", q, d1[:, g1]))
    e2 = float(np.einsum("xyuv,yuv->", q, d2[:, g2]))
    return e1, e2


def optimal_reconstruction(inst: ProblemInstance, tc1: Kernel, tc2: Kernel) -> tuple[np.ndarray, np.ndarray]:
    """Bayes decoder maps; ties go to the lowest index and empty (u, v) cells map to 0."""
    q = five_way_joint(inst, tc1, tc2)
    g1 = np.zeros(q.shape[2:], dtype=np.int64)
    g2 = np.zeros(q.shape[2:], dtype=np.int64)
    _kernels.best_maps(q, np.asarray(inst.d1.matrix), np.asarray(inst.d2.matrix), g1, g2)
    return g1, g2


def expected_distortions(inst: ProblemInstance, tc1: Kernel, tc2: Kernel, gamma1, gamma2) -> tuple[float, float]:
    q = five_way_joint(inst, tc1, tc2)
    return _expected(q, inst.d1.matrix, inst.d2.matrix, np.asarray(gamma1), np.asarray(gamma2))


def make_candidate(inst: ProblemInstance, tc1, tc2, start: int = -1) -> InnerCandidate:
    """Wrap two test-channel matrices (or Kernels) with their optimal decoder maps."""
    if not isinstance(tc1, Kernel):
        tc1 = Kernel((inst.x_alphabet,), (Alphabet.of_size(np.shape(tc1)[1], "u"),), np.asarray(tc1, float))
    if not isinstance(tc2, Kernel):
        tc2 = Kernel((inst.y_alphabet,), (Alphabet.of_size(np.shape(tc2)[1], "v"),), np.asarray(tc2, float))
    g1, g2 = optimal_reconstruction(inst, tc1, tc2)
    dist = expected_distortions(inst, tc1, tc2, g1, g2)
    return InnerCandidate(tc1.to_axes[0], tc2.to_axes[0], tc1, tc2, g1, g2, dist,
                          (inst.D1, inst.D2), inst.solver.feasibility_tol, start)


def rate_triple_inner(c: InnerCandidate, inst: ProblemInstance) -> RateTriple:
    """(I(XY;U|V), I(XY;V|U), I(XY;UV)) under p(xy) p(u|x) p(v|y)."""
    q = JointPMF.from_array(five_way_joint(inst, c.test_channel_1, c.test_channel_2))
    from .prob import conditional_mutual_information, mutual_information

    return RateTriple(
        conditional_mutual_information(q, (0, 1), 2, 3),
        conditional_mutual_information(q, (0, 1), 3, 2),
        mutual_information(q, (0, 1), (2, 3)),
    )


@dataclass
class InnerResult:
    value: float
    candidate: InnerCandidate
    triple: RateTriple
    status: str
    weights: tuple[float, float]
    pool: list[InnerCandidate] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.status == "ok"


class _InnerModel:
    def __init__(self, inst: ProblemInstance, mu, nu: int, nv: int):
        self.inst = inst
        self.p = np.ascontiguousarray(inst.p_xy)
        self.nx, self.ny = self.p.shape
        self.nu, self.nv = nu, nv
        self.m = max(nu, nv)
        self.mu = (float(mu[0]), float(mu[1]))
        self.d1 = np.ascontiguousarray(inst.d1.matrix)
        self.d2 = np.ascontiguousarray(inst.d2.matrix)
        self.row_weight = np.concatenate([self.p.sum(axis=1), self.p.sum(axis=0)])
        floor = distortion_floor(inst)
        # no barrier when the target sits on the floor: the slack is zero at every feasible point
        self.barrier = (inst.D1 - floor[0] > 1e-12, inst.D2 - floor[1] > 1e-12)

    def pack(self, A, B) -> np.ndarray:
        W = np.zeros((self.nx + self.ny, self.m))
        W[: self.nx, : self.nu] = A
        W[self.nx:, : self.nv] = B
        return W

    def unpack(self, W):
        return W[: self.nx, : self.nu].copy(), W[self.nx:, : self.nv].copy()

    def evaluate(self, W, tau: float = 0.0, grad=None):
        g = np.empty_like(W) if grad is None else grad
        t1 = tau if self.barrier[0] else 0.0
        t2 = tau if self.barrier[1] else 0.0
        return _kernels.inner_eval(W, self.p, self.nu, self.nv, self.d1, self.d2, self.mu[0], self.mu[1],
                                   self.inst.D1, self.inst.D2, t1, t2, g)

    def objective(self, tau: float):
        def f(W):
            g = np.empty_like(W)
            return self.evaluate(W, tau, g)[0], g

        return f


def _deterministic(rows: int, cols: int, targets) -> np.ndarray:
    M = np.zeros((rows, cols))
    M[np.arange(rows), targets] = 1.0
    return M


def initial_channels(model: _InnerModel, starts: int, seed: int) -> list[np.ndarray]:
    """Identity-style and constant seeds, their smoothed versions, then Dirichlet(1) kernels."""
    nx, ny, nu, nv = model.nx, model.ny, model.nu, model.nv
    ident_a = _deterministic(nx, nu, np.arange(nx) % nu)
    ident_b = _deterministic(ny, nv, np.arange(ny) % nv)
    const_a = _deterministic(nx, nu, np.zeros(nx, dtype=int))
    const_b = _deterministic(ny, nv, np.zeros(ny, dtype=int))
    pure = [(ident_a, ident_b), (ident_a, const_b), (const_a, ident_b), (const_a, const_b)]
    out = [model.pack(a, b) for a, b in pure]
    ua, ub = np.full((nx, nu), 1.0 / nu), np.full((ny, nv), 1.0 / nv)
    out += [model.pack(0.7 * a + 0.3 * ua, 0.7 * b + 0.3 * ub) for a, b in pure]
    out = out[:starts]
    rng = np.random.default_rng(seed)
    while len(out) < starts:
        out.append(model.pack(rng.dirichlet(np.ones(nu), size=nx), rng.dirichlet(np.ones(nv), size=ny)))
    return out


def _make_feasible(model: _InnerModel, W: np.ndarray, tau: float) -> np.ndarray | None:
    """Pull an infeasible start toward the identity seed by halving its weight."""
    if math.isfinite(model.evaluate(W, tau)[0]):
        return W
    anchor = initial_channels(model, 1, 0)[0]
    lam = 0.5
    for _ in range(60):
        trial = lam * W + (1 - lam) * anchor
        if math.isfinite(model.evaluate(trial, tau)[0]):
            return trial
        lam *= 0.5
    return anchor if math.isfinite(model.evaluate(anchor, 0.0)[0]) else None


def _finish(model: _InnerModel, W, start: int) -> InnerCandidate:
    A, B = model.unpack(W)
    A /= A.sum(axis=1, keepdims=True)
    B /= B.sum(axis=1, keepdims=True)
    return make_candidate(model.inst, A, B, start)


def _run_start(model: _InnerModel, W0, opts, start: int) -> InnerCandidate | None:
    # a start on the boundary (e.g. constant maps at the ceiling) is itself a candidate
    raw = model.evaluate(W0)[0]
    W = _make_feasible(model, W0, TAU_SCHEDULE[0])
    if W is None:
        return _finish(model, W0, start) if math.isfinite(raw) else None
    for tau in TAU_SCHEDULE:
        if not math.isfinite(model.evaluate(W, tau)[0]):
            break
        res = mirror_descent(W, model.objective(tau), model.row_weight,
                             max_iter=opts.max_iter, objective_tol=opts.objective_tol)
        W = res.w
    if math.isfinite(raw) and raw <= model.evaluate(W)[0]:
        W = W0
    return _finish(model, W, start)


def aux_sizes(inst: ProblemInstance, opts=None) -> tuple[int, int]:
    """Auxiliary cardinalities: user override, else |X|+2 and |Y|+2 (a heuristic, not a proven bound)."""
    opts = opts or inst.solver
    nu = opts.u_size or inst.x_alphabet.size + 2
    nv = opts.v_size or inst.y_alphabet.size + 2
    if nu < 1 or nv < 1:
        raise DomainError("auxiliary alphabet sizes must be positive")
    return nu, nv


def candidate_pool_inner(inst: ProblemInstance, weights, opts=None) -> list[InnerCandidate]:
    opts = opts or inst.solver
    check_targets(inst)
    nu, nv = aux_sizes(inst, opts)
    model = _InnerModel(inst, weights, nu, nv)
    pool = []
    for i, W0 in enumerate(initial_channels(model, opts.starts, opts.seed)):
        cand = _run_start(model, W0, opts, i)
        if cand is not None:
            pool.append(cand)
    return pool


def scalarized_minimum_inner(inst: ProblemInstance, weights, opts=None) -> InnerResult:
    """Smallest mu1*R1 + mu2*R2 found over Berger-Tung candidates (an achievable value, so an upper estimate)."""
    mu = (float(weights[0]), float(weights[1]))
    if mu[0] < 0 or mu[1] < 0 or mu[0] + mu[1] <= 0:
        raise DomainError("weights must be nonnegative and not both zero")
    pool = candidate_pool_inner(inst, mu, opts)
    best, best_c, best_t = math.inf, None, None
    for c in pool:
        if not c.feasible:
            continue
        t = rate_triple_inner(c, inst)
        v = t.support(mu)
        if v < best - 1e-15:
            best, best_c, best_t = v, c, t
    if best_c is None:
        if not pool:
            raise InfeasibleError("no start could be made distortion-feasible")
        best_c = min(pool, key=lambda c: c.residual)
        best_t = rate_triple_inner(best_c, inst)
        return InnerResult(best_t.support(mu), best_c, best_t, "unconverged", mu, pool)
    return InnerResult(best, best_c, best_t, "ok", mu, pool)


def trace_region_inner(inst: ProblemInstance, weight_sweep, opts=None) -> tuple[RateRegion, list[InnerResult]]:
    """Per-weight supporting points; the region pools every feasible candidate found."""
    if not weight_sweep:
        raise DomainError("weight sweep must be nonempty")
    results = [scalarized_minimum_inner(inst, mu, opts) for mu in weight_sweep]
    triples = []
    for k, r in enumerate(results):
        for c in r.pool:
            if c.feasible:
                triples.append((rate_triple_inner(c, inst), f"inner-w{k}-s{c.start}"))
    if not triples:
        triples = [(r.triple, f"inner-w{k}-unconverged") for k, r in enumerate(results)]
    region = region_from_triples(triples, kind="inner")
    for r in results:
        r.value = min(r.value, region.support(r.weights)[0])
    return region, results


def intersection_degeneracy_check(q: JointPMF, tol: float = 1e-6) -> float:
    """max |p(xv)p(yu) - p(xy)p(uv)| over cells with q(xyuv) > 0, axes ordered (X, Y, U, V).

    Requires both X - UV - Y and U - X - Y - V within ``tol``.
    """
    if q.ndim != 4:
        raise DomainError("expected a joint over (X, Y, U, V)")
    gaps = {
        "X - UV - Y": markov_gap(q, 0, 1, (2, 3)),
        "U - X - YV": markov_gap(q, 2, (1, 3), 0),
        "V - Y - XU": markov_gap(q, 3, (0, 2), 1),
    }
    for name, g in gaps.items():
        if g > tol:
            raise PreconditionError(f"chain {name} fails: gap {g:.3g} bits", g)
    m = q.mass
    pxv = m.sum(axis=(1, 2))
    pyu = m.sum(axis=(0, 3))
    pxy = m.sum(axis=(2, 3))
    puv = m.sum(axis=(0, 1))
    lhs = pxv[:, None, None, :] * pyu[None, :, :, None]
    rhs = pxy[:, :, None, None] * puv[None, None, :, :]
    diff = np.abs(lhs - rhs)
    # below the rounding bound of two 4-term sums times a product: exact zero
    diff[diff <= ROUNDING_ULPS * np.finfo(float).eps * np.maximum(lhs, rhs)] = 0.0
    return float(diff[m > 0].max()) if (m > 0).any() else 0.0


def _long_chain_projection(m: np.ndarray) -> np.ndarray:
    pxy = m.sum(axis=(2, 3))
    pxu = m.sum(axis=(1, 3))
    pyv = m.sum(axis=(0, 2))
    px, py = pxu.sum(axis=1), pyv.sum(axis=1)
    A = np.divide(pxu, px[:, None], out=np.zeros_like(pxu), where=px[:, None] > 0)
    B = np.divide(pyv, py[:, None], out=np.zeros_like(pyv), where=py[:, None] > 0)
    return np.einsum("xy,xu,yv->xyuv", pxy, A, B)


def intersection_member(shape=(2, 2, 2, 2), seed: int = 0, max_rounds: int = 200_000,
                        step_tol: float = 1e-15, gap_tol: float = 1e-12) -> JointPMF | None:
    """Alternate the two chain projections from a random start until they reach a common fixed point.

    Stops when one round moves the joint by less than ``step_tol`` in L1; the
    result is returned only if all three chain gaps are below ``gap_tol``.
    """
    rng = np.random.default_rng(seed)
    m = rng.dirichlet(np.ones(int(np.prod(shape)))).reshape(shape)
    for _ in range(max_rounds):
        prev = m
        m = _long_chain_projection(m)
        m = markov_projection(JointPMF.normalized(m), 0, (2, 3), 1).mass
        if np.abs(m - prev).sum() < step_tol:
            break
    q = JointPMF.normalized(m)
    if (markov_gap(q, 2, (1, 3), 0) <= gap_tol and markov_gap(q, 3, (0, 2), 1) <= gap_tol
            and markov_gap(q, 0, 1, (2, 3)) <= gap_tol):
        return q
    return None
