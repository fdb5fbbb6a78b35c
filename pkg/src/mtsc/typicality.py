"""Strong typicality at small blocklengths, by exhaustive enumeration.

Sequences are tuples of symbol indices. Sets are returned as frozensets of
such tuples; for a joint pmf over several axes an element is a tuple of
per-axis sequences, e.g. (xn, yn). All membership tests use strict
inequalities, and zero-probability symbols may not occur.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import DomainError, ResourceCapError
from .instance import DistortionMeasure
from .prob import JointPMF, marginalize

DEFAULT_CAP = 10**7
CHUNK = 1 << 16


def type_counts(xn: Sequence[int], size: int) -> np.ndarray:
    """N(a; xn) for every symbol a of an alphabet with ``size`` symbols."""
    xn = np.asarray(xn)
    if xn.ndim != 1 or len(xn) < 1:
        raise DomainError("sequence must be one-dimensional with n >= 1")
    if np.any(xn < 0) or np.any(xn >= size) or not np.all(np.equal(np.mod(xn, 1), 0)):
        raise DomainError(f"sequence has symbols outside 0..{size - 1}")
    return np.bincount(xn.astype(np.int64), minlength=size)


def check_cap(space: int, cap: int = DEFAULT_CAP) -> None:
    if space > cap:
        raise ResourceCapError(f"enumeration of {space} sequences exceeds cap {cap}")


def sequence_chunks(size: int, n: int, cap: int = DEFAULT_CAP, chunk: int = CHUNK) -> Iterator[np.ndarray]:
    """All size**n sequences in lexicographic order, as (rows, n) int arrays."""
    total = size**n
    check_cap(total, cap)
    powers = size ** np.arange(n - 1, -1, -1, dtype=np.int64)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(total, start + chunk), dtype=np.int64)
        yield (idx[:, None] // powers[None, :]) % size


def all_sequences(size: int, n: int, cap: int = DEFAULT_CAP) -> np.ndarray:
    return np.concatenate(list(sequence_chunks(size, n, cap)), axis=0)


def sequence_index(seqs: np.ndarray, size: int) -> np.ndarray:
    """Lexicographic rank of each row."""
    seqs = np.atleast_2d(seqs)
    n = seqs.shape[1]
    powers = size ** np.arange(n - 1, -1, -1, dtype=np.int64)
    return seqs.astype(np.int64) @ powers


def _typical_rows(codes: np.ndarray, p_flat: np.ndarray, eps: float) -> np.ndarray:
    """Rows of cell codes whose empirical type is within eps/|cells| of p_flat in every cell.

    Cells of zero probability must also be absent (the usual support clause).
    """
    n = codes.shape[1]
    C = len(p_flat)
    counts = np.zeros((codes.shape[0], C))
    for c in range(C):
        counts[:, c] = (codes == c).sum(axis=1)
    close = np.all(np.abs(counts / n - p_flat[None, :]) < eps / C, axis=1)
    return close & np.all(counts[:, p_flat <= 0] == 0, axis=1)


def is_typical(codes: Sequence[int], p_flat, eps: float) -> bool:
    return bool(_typical_rows(np.atleast_2d(np.asarray(codes)), np.asarray(p_flat, float).ravel(), eps)[0])


@dataclass(frozen=True)
class TypicalSetSpec:
    n: int
    epsilon: float
    pmf: JointPMF
    cap: int = DEFAULT_CAP

    def __post_init__(self):
        if self.n < 1:
            raise DomainError("blocklength must be >= 1")
        if not self.epsilon > 0:
            raise DomainError("epsilon must be > 0")
        check_cap(self.space, self.cap)

    @property
    def space(self) -> int:
        return int(self.pmf.mass.size) ** self.n


def _split(codes: np.ndarray, shape: tuple[int, ...]):
    """Flat cell codes -> one tuple per axis."""
    parts = np.unravel_index(codes, shape)
    return tuple(tuple(int(v) for v in part) for part in parts)


def _to_elements(rows: np.ndarray, shape: tuple[int, ...]):
    if len(shape) == 1:
        return [tuple(int(v) for v in r) for r in rows]
    return [_split(r, shape) for r in rows]


def typical_set(spec: TypicalSetSpec) -> frozenset:
    """T_eps^n of the pmf's (product) alphabet."""
    p_flat = spec.pmf.mass.ravel()
    out = []
    for rows in sequence_chunks(len(p_flat), spec.n, spec.cap):
        out.extend(_to_elements(rows[_typical_rows(rows, p_flat, spec.epsilon)], spec.pmf.shape))
    return frozenset(out)


def typical_probability(spec: TypicalSetSpec) -> float:
    """P(T_eps^n) under the i.i.d. extension of the pmf."""
    p_flat = spec.pmf.mass.ravel()
    total = 0.0
    for rows in sequence_chunks(len(p_flat), spec.n, spec.cap):
        keep = rows[_typical_rows(rows, p_flat, spec.epsilon)]
        total += float(np.prod(p_flat[keep], axis=1).sum())
    return total


def _block(joint: JointPMF, target, given) -> tuple[np.ndarray, tuple[int, ...], int]:
    """Joint mass as a (target cells, given cells) matrix, plus the target shape and given size."""
    target = (target,) if isinstance(target, int) else tuple(target)
    given = (given,) if isinstance(given, int) else tuple(given)
    if set(target) & set(given):
        raise DomainError("target and given axes overlap")
    m = marginalize(joint, target + given).mass
    tshape = m.shape[: len(target)]
    gsize = int(np.prod(m.shape[len(target):]))
    return m.reshape(int(np.prod(tshape)), gsize), tshape, gsize


def _given_codes(joint: JointPMF, given, given_seq) -> np.ndarray:
    given = (given,) if isinstance(given, int) else tuple(given)
    if len(given) == 1:
        g = np.asarray(given_seq, dtype=np.int64)
        type_counts(g, joint.shape[given[0]])
        return g
    gshape = tuple(joint.shape[a] for a in given)
    parts = [np.asarray(s, dtype=np.int64) for s in given_seq]
    return np.ravel_multi_index(tuple(parts), gshape)


def conditional_typical_codes(joint: JointPMF, given_seq, n: int, eps: float, target=0, given=1,
                              cap: int = DEFAULT_CAP) -> np.ndarray:
    """Rows of flat target codes t^n with (t^n, g^n) jointly typical (width eps / |T||G|)."""
    m, tshape, gsize = _block(joint, target, given)
    g = _given_codes(joint, given, given_seq)
    if len(g) != n:
        raise DomainError(f"conditioning sequence has length {len(g)}, expected {n}")
    T = m.shape[0]
    p_flat = m.ravel()
    keep = []
    for rows in sequence_chunks(T, n, cap):
        codes = rows * gsize + g[None, :]
        keep.append(rows[_typical_rows(codes, p_flat, eps)])
    return np.concatenate(keep, axis=0) if keep else np.zeros((0, n), dtype=np.int64)


def conditional_typical_set(joint: JointPMF, given_seq, n: int, eps: float, target=0, given=1,
                            cap: int = DEFAULT_CAP) -> frozenset:
    """T_eps^n(target | given_seq) under ``joint``; defaults to X given Y for a pmf over (X, Y)."""
    m, tshape, _ = _block(joint, target, given)
    rows = conditional_typical_codes(joint, given_seq, n, eps, target, given, cap)
    return frozenset(_to_elements(rows, tshape))


def typical_with_set(joint: JointPMF, S: Iterable, n: int, eps: float, target=0, given=1,
                     cap: int = DEFAULT_CAP) -> frozenset:
    """Union of conditional typical sets over the conditioning sequences in S."""
    out: set = set()
    for s in S:
        out |= conditional_typical_set(joint, s, n, eps, target, given, cap)
    return frozenset(out)


def extended_support(joint: JointPMF, n: int, eps: float, target=0, other=1, cap: int = DEFAULT_CAP) -> frozenset:
    """Sequences of ``target`` having at least one jointly typical partner on ``other``."""
    m, tshape, osize = _block(joint, target, other)
    p_flat = m.ravel()
    check_cap(len(p_flat) ** n, cap)
    found: set = set()
    for rows in sequence_chunks(len(p_flat), n, cap):
        ok = rows[_typical_rows(rows, p_flat, eps)]
        for r in ok // osize:
            found.add(tuple(int(v) for v in r))
    if len(tshape) == 1:
        return frozenset(found)
    return frozenset(_split(np.array(r), tshape) for r in found)


def sequence_probability(seq, pmf: JointPMF) -> float:
    """Probability of one sequence (or tuple of per-axis sequences) under the i.i.d. extension."""
    if pmf.ndim == 1:
        return float(np.prod(pmf.mass[np.asarray(seq, dtype=np.int64)]))
    idx = tuple(np.asarray(s, dtype=np.int64) for s in seq)
    return float(np.prod(pmf.mass[idx]))


def weak_inclusion(A: Iterable, B: Iterable, pmf: JointPMF, eps: float) -> bool:
    """A is weakly included in B when P(B | A) > 1 - eps."""
    A = set(A)
    B = set(B)
    pa = sum(sequence_probability(s, pmf) for s in A)
    if pa <= 0:
        raise DomainError("P(A) = 0, conditional probability undefined")
    pab = sum(sequence_probability(s, pmf) for s in A & B)
    return pab / pa > 1 - eps


def distortion_ball(center: Sequence[int], D: float, d: DistortionMeasure, n: int | None = None,
                    cap: int = DEFAULT_CAP) -> frozenset:
    """{xn : (1/n) sum_i d(x_i, center_i) < D}."""
    center = np.asarray(center, dtype=np.int64)
    n = len(center) if n is None else n
    if len(center) != n:
        raise DomainError("center length does not match n")
    type_counts(center, d.recon_alphabet.size)
    cols = d.matrix[:, center]
    out = []
    for rows in sequence_chunks(d.source_alphabet.size, n, cap):
        dist = cols[rows, np.arange(n)[None, :]].mean(axis=1)
        out.extend(tuple(int(v) for v in r) for r in rows[dist < D])
    return frozenset(out)
