"""Finite-alphabet probability objects and information measures (bits)."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError

NORMALIZATION_TOL = 1e-12
CLAMP_TOL = 1e-12


@dataclass(frozen=True)
class Alphabet:
    labels: tuple[str, ...]

    def __post_init__(self):
        labels = tuple(str(s) for s in self.labels)
        object.__setattr__(self, "labels", labels)
        if len(labels) < 1:
            raise DomainError("alphabet must have at least one symbol")
        if len(set(labels)) != len(labels):
            raise DomainError(f"alphabet labels not distinct: {labels}")

    @property
    def size(self) -> int:
        return len(self.labels)

    @classmethod
    def of_size(cls, size: int, prefix: str = "") -> "Alphabet":
        return cls(tuple(f"{prefix}{i}" for i in range(size)))

    def __len__(self):
        return len(self.labels)


@dataclass(frozen=True)
class Tolerances:
    normalization_tol: float = 1e-12
    feasibility_tol: float = 1e-6
    objective_tol: float = 1e-9
    audit_slack: float = 0.0

    def __post_init__(self):
        for name in ("normalization_tol", "feasibility_tol", "objective_tol", "audit_slack"):
            if not getattr(self, name) >= 0:
                raise DomainError(f"{name} must be nonnegative")


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class JointPMF:
    """Dense mass function over a product of finite alphabets.

    ``mass`` has one array axis per entry of ``axes``. Construction validates
    nonnegativity and normalization; it never renormalizes silently.
    """

    axes: tuple[Alphabet, ...]
    mass: np.ndarray

    def __post_init__(self):
        axes = tuple(self.axes)
        mass = _frozen(self.mass)
        if mass.shape != tuple(a.size for a in axes):
            raise DomainError(f"mass shape {mass.shape} does not match axes {[a.size for a in axes]}")
        if not np.all(np.isfinite(mass)) or np.any(mass < 0):
            raise DomainError("mass must be finite and nonnegative")
        total = mass.sum()
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise DomainError(f"mass sums to {total!r}, not 1")
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "mass", mass)

    @classmethod
    def from_array(cls, mass, labels: Sequence[Sequence[str]] | None = None) -> "JointPMF":
        mass = np.asarray(mass, dtype=float)
        if labels is None:
            axes = tuple(Alphabet.of_size(n) for n in mass.shape)
        else:
            axes = tuple(Alphabet(tuple(l)) for l in labels)
        return cls(axes, mass)

    @classmethod
    def normalized(cls, mass, axes=None) -> "JointPMF":
        """Build from an unnormalized nonnegative array (explicit, never implicit)."""
        mass = np.asarray(mass, dtype=float)
        mass = mass / mass.sum()
        if axes is None:
            axes = tuple(Alphabet.of_size(n) for n in mass.shape)
        return cls(tuple(axes), mass)

    @property
    def ndim(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.mass.shape

    def __repr__(self):
        return f"JointPMF(shape={self.shape})"


@dataclass(frozen=True, eq=False)
class Kernel:
    """Conditional mass function of ``to_axes`` given ``from_axes``.

    ``rows`` has shape ``from_shape + to_shape``. Conditioning cells with zero
    probability are not fabricated: ``support`` is False there and the row is
    all zeros.
    """

    from_axes: tuple[Alphabet, ...]
    to_axes: tuple[Alphabet, ...]
    rows: np.ndarray
    support: np.ndarray = field(default=None)

    def __post_init__(self):
        rows = _frozen(self.rows)
        nfrom = len(self.from_axes)
        expected = tuple(a.size for a in self.from_axes) + tuple(a.size for a in self.to_axes)
        if rows.shape != expected:
            raise DomainError(f"kernel rows shape {rows.shape} != {expected}")
        sums = rows.reshape(rows.shape[:nfrom] + (-1,)).sum(axis=-1)
        support = self.support
        if support is None:
            support = np.ones(rows.shape[:nfrom], dtype=bool)
        support = np.array(support, dtype=bool)
        support.setflags(write=False)
        if np.any(rows < 0) or np.any(np.abs(sums[support] - 1.0) > NORMALIZATION_TOL):
            raise DomainError("kernel rows must be nonnegative and sum to 1")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "from_axes", tuple(self.from_axes))
        object.__setattr__(self, "to_axes", tuple(self.to_axes))

    @classmethod
    def from_matrix(cls, matrix) -> "Kernel":
        m = np.asarray(matrix, dtype=float)
        return cls((Alphabet.of_size(m.shape[0]),), (Alphabet.of_size(m.shape[1]),), m)

    def matrix(self) -> np.ndarray:
        """Rows flattened to a 2-D (from cells x to cells) matrix."""
        nfrom = int(np.prod([a.size for a in self.from_axes]))
        return self.rows.reshape(nfrom, -1)


def _axes_tuple(p: JointPMF, axes) -> tuple[int, ...]:
    if isinstance(axes, (int, np.integer)):
        axes = (int(axes),)
    axes = tuple(int(a) for a in axes)
    for a in axes:
        if not 0 <= a < p.ndim:
            raise DomainError(f"axis {a} out of range for {p.ndim}-axis pmf")
    if len(set(axes)) != len(axes):
        raise DomainError(f"repeated axis in {axes}")
    return axes


def _disjoint(*groups: tuple[int, ...]) -> None:
    seen: set[int] = set()
    for g in groups:
        if seen & set(g):
            raise DomainError(f"axis sets overlap: {groups}")
        seen |= set(g)


def _marginal_array(p: JointPMF, keep: tuple[int, ...]) -> np.ndarray:
    drop = tuple(i for i in range(p.ndim) if i not in keep)
    m = p.mass.sum(axis=drop) if drop else p.mass
    # restore requested axis order
    order = sorted(keep)
    return np.transpose(m, [order.index(k) for k in keep])


def _h(m: np.ndarray) -> float:
    m = m[m > 0]
    return float(-np.sum(m * np.log2(m)))


def marginalize(p: JointPMF, keep) -> JointPMF:
    keep = _axes_tuple(p, keep)
    if not keep:
        raise DomainError("keep set must be nonempty")
    m = _marginal_array(p, keep)
    return JointPMF(tuple(p.axes[k] for k in keep), m / m.sum())


def entropy(p: JointPMF, subset=None) -> float:
    """Entropy in bits of the marginal on ``subset`` (all axes by default)."""
    subset = tuple(range(p.ndim)) if subset is None else _axes_tuple(p, subset)
    if not subset:
        raise DomainError("subset must be nonempty")
    return max(_h(_marginal_array(p, subset)), 0.0)


def _hj(p: JointPMF, axes: tuple[int, ...]) -> float:
    return _h(_marginal_array(p, axes)) if axes else 0.0


def _clamp(v: float) -> float:
    return 0.0 if v < 0 and v > -CLAMP_TOL else v


def conditional_entropy(p: JointPMF, target, given=()) -> float:
    target = _axes_tuple(p, target)
    given = _axes_tuple(p, given)
    _disjoint(target, given)
    return _clamp(_hj(p, target + given) - _hj(p, given))


def mutual_information(p: JointPMF, a, b) -> float:
    a, b = _axes_tuple(p, a), _axes_tuple(p, b)
    _disjoint(a, b)
    return _clamp(_hj(p, a) + _hj(p, b) - _hj(p, a + b))


def conditional_mutual_information(p: JointPMF, a, b, c=()) -> float:
    """I(a ; b | c) in bits, clamped at zero within 1e-12."""
    a, b, c = _axes_tuple(p, a), _axes_tuple(p, b), _axes_tuple(p, c)
    _disjoint(a, b, c)
    v = _hj(p, a + c) + _hj(p, b + c) - _hj(p, a + b + c) - _hj(p, c)
    return _clamp(v)


def markov_gap(p: JointPMF, a, b, given) -> float:
    """I(a ; b | given); zero exactly when a - given - b is a Markov chain."""
    return conditional_mutual_information(p, a, b, given)


def condition(p: JointPMF, given) -> Kernel:
    given = _axes_tuple(p, given)
    rest = tuple(i for i in range(p.ndim) if i not in given)
    if not rest:
        raise DomainError("conditioning on every axis leaves nothing to condition")
    joint = np.transpose(p.mass, given + rest)
    gshape = joint.shape[: len(given)]
    flat = joint.reshape(gshape + (-1,))
    totals = flat.sum(axis=-1)
    support = totals > 0
    rows = np.zeros_like(flat)
    rows[support] = flat[support] / totals[support][:, None]
    return Kernel(
        tuple(p.axes[i] for i in given),
        tuple(p.axes[i] for i in rest),
        rows.reshape(joint.shape),
        support,
    )


def compose(marginal: JointPMF, kernel: Kernel) -> JointPMF:
    """marginal(given) (x) kernel, axes ordered given-then-target."""
    if marginal.shape != kernel.rows.shape[: len(kernel.from_axes)]:
        raise DomainError("marginal does not match kernel conditioning axes")
    extra = (None,) * len(kernel.to_axes)
    mass = marginal.mass[(Ellipsis,) + extra] * kernel.rows
    return JointPMF(marginal.axes + kernel.to_axes, mass)


def l1_distance(p: JointPMF, q: JointPMF) -> float:
    if p.shape != q.shape:
        raise DomainError(f"axis mismatch: {p.shape} vs {q.shape}")
    return float(np.abs(p.mass - q.mass).sum())


def markov_projection(p: JointPMF, x_axes, z_axes, y_axes) -> JointPMF:
    """Return p(z) p(x|z) p(y|z), keeping the axis order of ``p``.

    The result agrees with ``p`` on the (x, z) and (z, y) marginals. Cells
    with p(z) = 0 stay at zero.
    """
    x, z, y = _axes_tuple(p, x_axes), _axes_tuple(p, z_axes), _axes_tuple(p, y_axes)
    _disjoint(x, z, y)
    if set(x + z + y) != set(range(p.ndim)):
        raise DomainError("x, z and y blocks must cover every axis")
    t = np.transpose(p.mass, x + z + y)
    sx = t.shape[: len(x)]
    sz = t.shape[len(x): len(x) + len(z)]
    sy = t.shape[len(x) + len(z):]
    nx, nz, ny = int(np.prod(sx)), int(np.prod(sz)), int(np.prod(sy))
    t = t.reshape(nx, nz, ny)
    pxz = t.sum(axis=2)
    pzy = t.sum(axis=0)
    pz = pxz.sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        proj = np.where(pz[None, :, None] > 0, pxz[:, :, None] * pzy[None, :, :] / pz[None, :, None], 0.0)
    proj = proj.reshape(sx + sz + sy)
    order = x + z + y
    inverse = [order.index(i) for i in range(p.ndim)]
    proj = np.transpose(proj, inverse)
    return JointPMF(p.axes, proj / proj.sum())


def product_pmf(*marginals: Iterable[float]) -> JointPMF:
    mass = np.array(1.0)
    for m in marginals:
        mass = np.multiply.outer(mass, np.asarray(m, dtype=float))
    return JointPMF.from_array(mass)


def binary_entropy(x: float) -> float:
    if x <= 0 or x >= 1:
        return 0.0
    return float(-x * np.log2(x) - (1 - x) * np.log2(1 - x))


def dsbs(crossover: float) -> JointPMF:
    """Doubly symmetric binary source: uniform X, Y = X through a BSC."""
    c = crossover
    return JointPMF.from_array([[0.5 * (1 - c), 0.5 * c], [0.5 * c, 0.5 * (1 - c)]])
