"""Distributed codes at desk-scale blocklengths and empirical checks of the cover lemmas.

Sequences are indexed by their lexicographic rank among all |A|^n
sequences. A code is a pair of encoder label arrays over those ranks plus a
table of reconstruction sequences per cell pair.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError
from .instance import ProblemInstance
from .outer import OuterCandidate
from .prob import JointPMF, conditional_entropy, l1_distance, markov_projection
from .typicality import (
    DEFAULT_CAP,
    _typical_rows,
    all_sequences,
    check_cap,
    conditional_typical_codes,
    sequence_index,
)

EXHAUSTIVE_CAP = 10**6
SA_COOLING = 0.995


@dataclass(frozen=True, eq=False)
class DistributedCode:
    """Encoders f1 (over X^n ranks) and f2 (over Y^n ranks), decoder tables xhat[i, j], yhat[i, j].

    ``cover`` optionally replaces the product cells S_ij = S_1i x S_2j by
    explicit sets of (x rank, y rank) pairs; it exists to exercise the cover
    checks on non-product covers.
    """

    n: int
    f1: np.ndarray
    f2: np.ndarray
    xhat: np.ndarray
    yhat: np.ndarray
    cover: dict | None = None

    def __post_init__(self):
        f1 = np.asarray(self.f1, dtype=np.int64)
        f2 = np.asarray(self.f2, dtype=np.int64)
        xhat = np.asarray(self.xhat, dtype=np.int64)
        yhat = np.asarray(self.yhat, dtype=np.int64)
        if self.n < 1:
            raise DomainError("blocklength must be >= 1")
        if f1.min() < 0 or f2.min() < 0:
            raise DomainError("cell labels must be nonnegative")
        m1, m2 = int(f1.max()) + 1, int(f2.max()) + 1
        if xhat.shape[:2] != yhat.shape[:2] or xhat.shape[0] < m1 or xhat.shape[1] < m2:
            raise DomainError("decoder tables must cover every (i, j) cell pair")
        if xhat.shape[2:] != (self.n,) or yhat.shape[2:] != (self.n,):
            raise DomainError("reconstruction sequences must have length n")
        for name, v in (("f1", f1), ("f2", f2), ("xhat", xhat), ("yhat", yhat)):
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @property
    def sizes(self) -> tuple[int, int]:
        return self.xhat.shape[0], self.xhat.shape[1]

    @property
    def rates(self) -> tuple[float, float]:
        m1, m2 = self.sizes
        return math.log2(m1) / self.n, math.log2(m2) / self.n

    def cells_1(self) -> list[np.ndarray]:
        return [np.flatnonzero(self.f1 == i) for i in range(self.sizes[0])]

    def cells_2(self) -> list[np.ndarray]:
        return [np.flatnonzero(self.f2 == j) for j in range(self.sizes[1])]

    def cell(self, i: int, j: int) -> set[tuple[int, int]]:
        """S_ij as a set of (x rank, y rank) pairs."""
        if self.cover is not None:
            return set(self.cover.get((i, j), set()))
        return {(int(x), int(y)) for x in np.flatnonzero(self.f1 == i) for y in np.flatnonzero(self.f2 == j)}


def identity_code(inst: ProblemInstance, n: int = 1) -> DistributedCode:
    """Every sequence in its own cell, reconstructed as itself (needs matched alphabets)."""
    nx, ny = inst.x_alphabet.size, inst.y_alphabet.size
    X, Y = all_sequences(nx, n), all_sequences(ny, n)
    xhat = np.broadcast_to(X[:, None, :], (len(X), len(Y), n))
    yhat = np.broadcast_to(Y[None, :, :], (len(X), len(Y), n))
    return DistributedCode(n, np.arange(len(X)), np.arange(len(Y)), xhat, yhat)


def constant_code(inst: ProblemInstance, n: int = 1, xhat=None, yhat=None) -> DistributedCode:
    """One cell per encoder; reconstruction defaults to the best constant symbol."""
    px, py = inst.p_xy.sum(axis=1), inst.p_xy.sum(axis=0)
    a = int((px @ inst.d1.matrix).argmin()) if xhat is None else None
    b = int((py @ inst.d2.matrix).argmin()) if yhat is None else None
    xs = np.full(n, a) if xhat is None else np.asarray(xhat)
    ys = np.full(n, b) if yhat is None else np.asarray(yhat)
    nx, ny = inst.x_alphabet.size, inst.y_alphabet.size
    return DistributedCode(n, np.zeros(nx**n, int), np.zeros(ny**n, int), xs[None, None, :], ys[None, None, :])


class _Space:
    """Enumerated product space for one instance and blocklength."""

    def __init__(self, inst: ProblemInstance, n: int, cap: int = DEFAULT_CAP):
        self.inst, self.n = inst, n
        self.nx, self.ny = inst.x_alphabet.size, inst.y_alphabet.size
        check_cap((self.nx * self.ny) ** n, cap)
        self.X = all_sequences(self.nx, n, cap)
        self.Y = all_sequences(self.ny, n, cap)
        p = inst.p_xy
        P = np.ones((len(self.X), len(self.Y)))
        for k in range(n):
            P *= p[self.X[:, k]][:, self.Y[:, k]]
        self.P = P

    def block_distortion(self, d: np.ndarray, seqs: np.ndarray, recon: np.ndarray) -> np.ndarray:
        """(len(seqs), len(recon)) matrix of normalized block distortions."""
        out = np.zeros((len(seqs), len(recon)))
        for k in range(self.n):
            out += d[seqs[:, k]][:, recon[:, k]]
        return out / self.n

    def typical(self, eps: float) -> np.ndarray:
        """Boolean (x rank, y rank) matrix of joint typicality."""
        codes = self.X[:, None, :] * self.ny + self.Y[None, :, :]
        flat = codes.reshape(-1, self.n)
        return _typical_rows(flat, self.inst.p_xy.ravel(), eps).reshape(len(self.X), len(self.Y))


@dataclass
class DistortionReport:
    probability: float
    threshold: float
    passed: bool


def event_matrix(code: DistributedCode, inst: ProblemInstance, eps: float, space: _Space | None = None) -> np.ndarray:
    """Boolean (x rank, y rank) matrix of the distortion-constraint event with D+ = D + eps."""
    sp = space or _Space(inst, code.n)
    xh = code.xhat[code.f1[:, None], code.f2[None, :]]
    yh = code.yhat[code.f1[:, None], code.f2[None, :]]
    d1 = np.zeros(sp.P.shape)
    d2 = np.zeros(sp.P.shape)
    for k in range(code.n):
        d1 += inst.d1.matrix[sp.X[:, k][:, None], xh[:, :, k]]
        d2 += inst.d2.matrix[sp.Y[:, k][None, :], yh[:, :, k]]
    return (d1 / code.n < inst.D1 + eps) & (d2 / code.n < inst.D2 + eps)


def verify_distortion_constraint(code: DistributedCode, inst: ProblemInstance, eps: float,
                                 cap: int = DEFAULT_CAP) -> DistortionReport:
    """Exact probability of the distortion event; passes when it is at least 1 - eps."""
    sp = _Space(inst, code.n, cap)
    if len(code.f1) != len(sp.X) or len(code.f2) != len(sp.Y):
        raise DomainError("encoder tables do not match the sequence spaces")
    prob = float(sp.P[event_matrix(code, inst, eps, sp)].sum())
    return DistortionReport(prob, 1 - eps, prob >= 1 - eps)


@dataclass
class Witness:
    i: int
    j: int
    xn: tuple[int, ...]
    yn: tuple[int, ...]


def prop2_check(code: DistributedCode, inst: ProblemInstance, eps: float,
                cap: int = DEFAULT_CAP) -> tuple[bool, Witness | None]:
    """Every typical (xn, yn) with xn in S_1i and yn in S_2j must lie in S_ij."""
    sp = _Space(inst, code.n, cap)
    T = sp.typical(eps)
    cells = {}
    for x, y in zip(*np.nonzero(T)):
        i, j = int(code.f1[x]), int(code.f2[y])
        if (i, j) not in cells:
            cells[(i, j)] = code.cell(i, j)
        if (int(x), int(y)) not in cells[(i, j)]:
            return False, Witness(i, j, tuple(int(v) for v in sp.X[x]), tuple(int(v) for v in sp.Y[y]))
    return True, None


def _pairs_to_ranks(S, nx: int, ny: int) -> set[tuple[int, int]]:
    out = set()
    for xn, yn in S:
        out.add((int(sequence_index(np.asarray(xn), nx)[0]), int(sequence_index(np.asarray(yn), ny)[0])))
    return out


def distributed_typical_witness(S: Iterable, joint: JointPMF, n: int, eps: float):
    """None when S is a distributed typical set, else a typical cross pair missing from S."""
    S = set(S)
    nx, ny = joint.shape
    flat = joint.mass.ravel()

    def typ(xn, yn):
        return bool(_typical_rows((np.asarray(xn) * ny + np.asarray(yn))[None, :], flat, eps)[0])

    for xn, yn in S:
        if len(xn) != n or len(yn) != n:
            raise DomainError("pair length does not match n")
        if not typ(xn, yn):
            raise DomainError(f"pair {(xn, yn)} is not jointly typical")
    xs = {xn for xn, _ in S}
    ys = {yn for _, yn in S}
    for xn in sorted(xs):
        for yn in sorted(ys):
            if (xn, yn) not in S and typ(xn, yn):
                return (xn, yn)
    return None


def is_distributed_typical_set(S: Iterable, joint: JointPMF, n: int, eps: float) -> bool:
    return distributed_typical_witness(S, joint, n, eps) is None


@dataclass
class ReverseMarkovReport:
    witnessed: bool
    witness: tuple[int, ...] | None
    l1: float
    conclusion_holds: bool
    epsilon: float
    n: int


def _zn_representatives(nz: int, n: int):
    """One sorted sequence per type class of Z^n."""
    def comps(total, parts):
        if parts == 1:
            yield (total,)
            return
        for k in range(total, -1, -1):
            for rest in comps(total - k, parts - 1):
                yield (k,) + rest

    for counts in comps(n, nz):
        yield np.repeat(np.arange(nz), counts)


def product_condition(p: JointPMF, zn: np.ndarray, n: int, eps: float, cap: int = DEFAULT_CAP) -> bool:
    """T(X|zn) x T(Y|zn) equals T(XY|zn), with the joint set nonempty; p is over (X, Z, Y)."""
    nx, _, ny = p.shape
    Tx = conditional_typical_codes(p, zn, n, eps, target=0, given=1, cap=cap)
    Ty = conditional_typical_codes(p, zn, n, eps, target=2, given=1, cap=cap)
    Txy = conditional_typical_codes(p, zn, n, eps, target=(0, 2), given=1, cap=cap)
    if len(Txy) == 0:
        return False
    joint = set(map(tuple, Txy.tolist()))
    if len(Tx) * len(Ty) != len(joint):
        return False
    for xr in Tx:
        for yr in Ty:
            if tuple((xr * ny + yr).tolist()) not in joint:
                return False
    return True


def reverse_markov_check(p: JointPMF, n: int, eps: float, cap: int = DEFAULT_CAP) -> ReverseMarkovReport:
    """Search Z^n type classes for a witness of the product condition and test the l1 conclusion.

    Conditional typical sets are permutation-equivariant, so one zn per type
    class decides the whole class. A witness must have a nonempty joint set.
    """
    if p.ndim != 3:
        raise DomainError("expected a pmf over (X, Z, Y)")
    check_cap((p.shape[0] * p.shape[2]) ** n, cap)
    l1 = l1_distance(p, markov_projection(p, 0, 1, 2))
    witness = None
    for zn in _zn_representatives(p.shape[1], n):
        if product_condition(p, zn, n, eps, cap):
            witness = tuple(int(v) for v in zn)
            break
    witnessed = witness is not None
    return ReverseMarkovReport(witnessed, witness, l1, (not witnessed) or l1 < 2 * eps, eps, n)


def random_markov_chain(rng: np.random.Generator, shape=(2, 2, 2), sparsity: float = 0.0) -> JointPMF:
    """p(z) p(x|z) p(y|z) with Dirichlet(1) factors, axes ordered (X, Z, Y).

    Each conditional row is replaced by a random point mass with probability
    ``sparsity``; near-deterministic rows are where product witnesses occur.
    """
    nx, nz, ny = shape
    pz = rng.dirichlet(np.ones(nz))

    def rows(k):
        out = rng.dirichlet(np.ones(k), size=nz)
        for r in range(nz):
            if rng.random() < sparsity:
                out[r] = np.eye(k)[rng.integers(k)]
        return out

    px_z, py_z = rows(nx), rows(ny)
    mass = np.einsum("z,zx,zy->xzy", pz, px_z, py_z)
    return JointPMF.from_array(mass / mass.sum())


@dataclass
class AuditRow:
    i: int
    j: int
    log2_cell_size: float
    bound_bits: float
    margin_bits: float


@dataclass
class Lemma3Report:
    rows: list[AuditRow]
    worst_joint_margin: float
    worst_x_margin: float
    worst_y_margin: float

    @property
    def passed(self) -> bool:
        return min(self.worst_joint_margin, self.worst_x_margin, self.worst_y_margin) >= 0


def _log2_size(k: int) -> float:
    return math.log2(k) if k > 0 else -math.inf


def lemma3_size_audit(code: DistributedCode, inst: ProblemInstance, pi, eps: float, slack: float,
                      cap: int = DEFAULT_CAP) -> Lemma3Report:
    """Compare cell sizes against the entropy bounds of a supplied pi over (X, Y, Xhat, Yhat).

    Joint bound: log2|[S_1i x S_2j] cap T(XY)| <= n (H(XY|XhatYhat) + slack).
    Conditional bounds: log2|S_1i cap T(X|yn)| <= n (H(X|XhatYhat Y) + slack)
    over every yn, and the mirror image for S_2j.
    """
    q = pi.joint if isinstance(pi, OuterCandidate) else pi
    if q.shape != inst.p_xy.shape + (inst.xhat_alphabet.size, inst.yhat_alphabet.size):
        raise DomainError("pi must be a pmf over the instance's (X, Y, Xhat, Yhat)")
    if slack < 0:
        raise DomainError("slack must be nonnegative")
    n = code.n
    sp = _Space(inst, n, cap)
    T = sp.typical(eps)
    h_joint = conditional_entropy(q, (0, 1), (2, 3))
    h_x = conditional_entropy(q, 0, (1, 2, 3))
    h_y = conditional_entropy(q, 1, (0, 2, 3))
    m1, m2 = code.sizes
    E1 = np.zeros((len(sp.X), m1))
    E1[np.arange(len(sp.X)), code.f1] = 1
    E2 = np.zeros((len(sp.Y), m2))
    E2[np.arange(len(sp.Y)), code.f2] = 1
    sizes = E1.T @ T.astype(float) @ E2
    bound = n * (h_joint + slack)
    rows = []
    worst = math.inf
    for i in range(m1):
        for j in range(m2):
            ls = _log2_size(int(round(sizes[i, j])))
            rows.append(AuditRow(i, j, ls, bound, bound - ls))
            worst = min(worst, bound - ls)
    # column counts: |S_1i cap T(X|yn)| for every (i, yn), and the mirror
    by_y = E1.T @ T.astype(float)
    by_x = T.astype(float) @ E2
    bx = n * (h_x + slack)
    by = n * (h_y + slack)
    worst_x = min((bx - _log2_size(int(round(v))) for v in by_y.ravel()), default=math.inf)
    worst_y = min((by - _log2_size(int(round(v))) for v in by_x.ravel()), default=math.inf)
    return Lemma3Report(rows, worst, worst_x, worst_y)


def empirical_pi(code: DistributedCode, inst: ProblemInstance, cap: int = DEFAULT_CAP) -> JointPMF:
    """Single-letter joint type of (X, Y, Xhat, Yhat) induced by the code, averaged over positions."""
    sp = _Space(inst, code.n, cap)
    shape = inst.p_xy.shape + (inst.xhat_alphabet.size, inst.yhat_alphabet.size)
    acc = np.zeros(shape)
    xh = code.xhat[code.f1[:, None], code.f2[None, :]]
    yh = code.yhat[code.f1[:, None], code.f2[None, :]]
    for k in range(code.n):
        xs = np.broadcast_to(sp.X[:, k][:, None], sp.P.shape)
        ys = np.broadcast_to(sp.Y[:, k][None, :], sp.P.shape)
        np.add.at(acc, (xs, ys, xh[:, :, k], yh[:, :, k]), sp.P)
    return JointPMF.normalized(acc, (inst.x_alphabet, inst.y_alphabet, inst.xhat_alphabet, inst.yhat_alphabet))


# --- brute-force code search ----------------------------------------------------------


def partition_count(N: int, M: int) -> int:
    """Set partitions of N labeled items into at most M blocks."""
    # Stirling numbers of the second kind by the usual recurrence
    S = [[0] * (M + 1) for _ in range(N + 1)]
    S[0][0] = 1
    for a in range(1, N + 1):
        for k in range(1, min(a, M) + 1):
            S[a][k] = k * S[a - 1][k] + S[a - 1][k - 1]
    return sum(S[N][k] for k in range(0, M + 1)) if N > 0 else 1


def restricted_growth_strings(N: int, M: int):
    """Canonical labelings of partitions of N items into at most M blocks."""
    s = [0] * N

    def rec(pos, used):
        if pos == N:
            yield np.array(s, dtype=np.int64)
            return
        for lab in range(min(used + 1, M)):
            s[pos] = lab
            yield from rec(pos + 1, max(used, lab + 1))

    if N == 0:
        yield np.zeros(0, dtype=np.int64)
        return
    yield from rec(0, 0)


def cells_for_rate(n: int, R: float) -> int:
    if R < 0:
        raise DomainError("rates must be nonnegative")
    return max(1, int(math.floor(2 ** (n * R) + 1e-9)))


class _Evaluator:
    """Best decoder and distortion-constraint event probability for a pair of encoder labelings."""

    def __init__(self, inst: ProblemInstance, n: int, eps: float, cap: int = DEFAULT_CAP):
        self.sp = _Space(inst, n, cap)
        self.inst, self.n, self.eps = inst, n, eps
        self.Xh = all_sequences(inst.xhat_alphabet.size, n, cap)
        self.Yh = all_sequences(inst.yhat_alphabet.size, n, cap)
        self.D1m = self.sp.block_distortion(inst.d1.matrix, self.sp.X, self.Xh)
        self.D2m = self.sp.block_distortion(inst.d2.matrix, self.sp.Y, self.Yh)
        self.A1 = (self.D1m < inst.D1 + eps).astype(float)
        self.A2 = (self.D2m < inst.D2 + eps).astype(float)

    def _tables(self, l1, l2, m1, m2):
        E1 = np.zeros((len(l1), m1))
        E1[np.arange(len(l1)), l1] = 1
        E2 = np.zeros((len(l2), m2))
        E2[np.arange(len(l2)), l2] = 1
        return E1, E2

    def success(self, l1, l2, m1, m2):
        """(probability, xhat index table, yhat index table) with the per-cell best decoder."""
        E1, E2 = self._tables(l1, l2, m1, m2)
        nxh, nyh = self.A1.shape[1], self.A2.shape[1]
        L = (E1[:, :, None] * self.A1[:, None, :]).reshape(len(l1), m1 * nxh)
        R = (E2[:, :, None] * self.A2[:, None, :]).reshape(len(l2), m2 * nyh)
        G = (L.T @ self.sp.P @ R).reshape(m1, nxh, m2, nyh).transpose(0, 2, 1, 3).reshape(m1, m2, nxh * nyh)
        arg = G.argmax(axis=2)
        prob = float(np.take_along_axis(G, arg[:, :, None], axis=2).sum())
        return prob, arg // nyh, arg % nyh

    def distortions(self, l1, l2, m1, m2):
        """Smallest expected (d1, d2) for these encoders, each decoder chosen per cell."""
        E1, E2 = self._tables(l1, l2, m1, m2)
        cell_y = self.sp.P @ E2
        t1 = np.einsum("xi,xa,xj->ija", E1, self.D1m, cell_y)
        cell_x = self.sp.P.T @ E1
        t2 = np.einsum("yj,yb,yi->ijb", E2, self.D2m, cell_x)
        return float(t1.min(axis=2).sum()), float(t2.min(axis=2).sum())

    def code(self, l1, l2, m1, m2, ai, bi) -> DistributedCode:
        return DistributedCode(self.n, l1, l2, self.Xh[ai], self.Yh[bi])


@dataclass
class BruteForceResult:
    mode: str
    fell_back: bool
    n: int
    cells: tuple[int, int]
    evaluated: int
    best_probability: float
    best_code: DistributedCode | None
    best_distortions: tuple[float, float]
    codes: list[DistributedCode] = field(default_factory=list)

    @property
    def achievable(self) -> bool:
        return bool(self.codes)

    @property
    def certified_not_achievable(self) -> bool:
        return self.mode == "exhaustive" and not self.codes

    @property
    def verdict(self) -> str:
        if self.codes:
            return "achievable"
        return "not achievable" if self.mode == "exhaustive" else "unknown"


def brute_force_achievable(inst: ProblemInstance, n: int, R1: float, R2: float, eps: float,
                           budget: int = 100_000, seed: int = 0, keep: int = 16,
                           cap: int = DEFAULT_CAP) -> BruteForceResult:
    """Search encoder partitions with at most 2^{nR} cells each for codes meeting the distortion-constraint event.

    Exhaustive over canonical partition pairs when there are at most 10^6 of
    them; otherwise seeded simulated annealing (T_k = 0.995^k) within
    ``budget`` evaluations, flagged as a fallback.
    """
    if not eps > 0:
        raise DomainError("epsilon must be > 0")
    ev = _Evaluator(inst, n, eps, cap)
    m1, m2 = cells_for_rate(n, R1), cells_for_rate(n, R2)
    N1, N2 = len(ev.sp.X), len(ev.sp.Y)
    m1, m2 = min(m1, N1), min(m2, N2)
    total = partition_count(N1, m1) * partition_count(N2, m2)
    codes: list[DistributedCode] = []
    best = (-1.0, None)
    best_dist, best_dsum = (math.inf, math.inf), math.inf
    evaluated = 0

    def consider(l1, l2):
        nonlocal best, best_dist, best_dsum, evaluated
        evaluated += 1
        prob, ai, bi = ev.success(l1, l2, m1, m2)
        if prob > best[0] + 1e-15:
            best = (prob, (l1.copy(), l2.copy(), ai, bi))
        if prob >= 1 - eps and len(codes) < keep:
            codes.append(ev.code(l1, l2, m1, m2, ai, bi))
        dist = ev.distortions(l1, l2, m1, m2)
        if sum(dist) < best_dsum - 1e-15:
            best_dist, best_dsum = dist, sum(dist)
        return prob

    if total <= EXHAUSTIVE_CAP:
        parts2 = list(restricted_growth_strings(N2, m2))
        for l1 in restricted_growth_strings(N1, m1):
            for l2 in parts2:
                consider(l1, l2)
        mode, fell_back = "exhaustive", False
    else:
        mode, fell_back = "randomized", True
        rng = np.random.default_rng(seed)
        l1 = rng.integers(0, m1, N1)
        l2 = rng.integers(0, m2, N2)
        cur = consider(l1, l2)
        temp = 1.0
        while evaluated < budget:
            t1, t2 = l1.copy(), l2.copy()
            if rng.random() < 0.5:
                t1[rng.integers(N1)] = rng.integers(m1)
            else:
                t2[rng.integers(N2)] = rng.integers(m2)
            val = consider(t1, t2)
            if val >= cur or rng.random() < math.exp((val - cur) / max(temp, 1e-300)):
                l1, l2, cur = t1, t2, val
            temp *= SA_COOLING
    prob, payload = best
    best_code = ev.code(payload[0], payload[1], m1, m2, payload[2], payload[3]) if payload else None
    return BruteForceResult(mode, fell_back, n, (m1, m2), evaluated, prob, best_code, best_dist, codes)


@dataclass
class SweepPoint:
    n: int
    R1: float
    R2: float
    D1: float
    D2: float
    verdict: str
    best_probability: float


def operational_sweep(inst: ProblemInstance, ns: Sequence[int], rate_steps: Sequence[int],
                      targets: Sequence[tuple[float, float]], eps: float, seed: int = 0) -> list[SweepPoint]:
    """Brute force every (n, nR1, nR2, D1, D2) combination; rates are nR / n bits."""
    out = []
    for n in ns:
        for k1 in rate_steps:
            for k2 in rate_steps:
                for D1, D2 in targets:
                    res = brute_force_achievable(inst.with_targets(D1, D2), n, k1 / n, k2 / n, eps, seed=seed)
                    out.append(SweepPoint(n, k1 / n, k2 / n, D1, D2, res.verdict, res.best_probability))
    return out


def relaxed_targets(inst: ProblemInstance, eps: float) -> tuple[float, float]:
    """Expected-distortion targets implied by meeting the distortion-constraint event at slack eps.

    With probability at least 1 - eps the block distortion is below D + eps,
    and it never exceeds d_max, so E[d] <= D + eps + eps * d_max.
    """
    return (inst.D1 + eps + eps * inst.d1.d_max, inst.D2 + eps + eps * inst.d2.d_max)
