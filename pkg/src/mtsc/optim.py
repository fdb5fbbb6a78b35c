"""Mirror-descent machinery over products of probability simplices.

Iterates are row-stochastic matrices. Steps are exponentiated-gradient
updates; linear expected-cost constraints are enforced by the KL (I-)
projection, an exponential tilt whose multipliers solve the dual problem.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import _kernels

LAMBDA_MAX = 1e9


@dataclass
class LinearConstraint:
    """sum_s weight[s] * sum_k w[s, k] * cost[s, k] <= bound"""

    weight: np.ndarray
    cost: np.ndarray
    bound: float

    def value(self, w: np.ndarray) -> float:
        return float(self.weight @ (w * self.cost).sum(axis=1))


def _tilt(logw: np.ndarray, shift: np.ndarray) -> np.ndarray:
    out = np.empty_like(logw)
    _kernels.softmax_rows(logw - shift, out)
    return out


def _solve_multiplier(logw, shift_other, con: LinearConstraint, target: float) -> float:
    """Smallest lambda >= 0 with E_lambda[cost] <= target, by bracketing and bisection."""

    def expect(lam):
        return con.value(_tilt(logw, shift_other + lam * con.cost))

    if expect(0.0) <= target:
        return 0.0
    lo, hi = 0.0, 1.0
    while expect(hi) > target:
        lo, hi = hi, hi * 8
        if hi > LAMBDA_MAX:
            return LAMBDA_MAX
    for _ in range(100):
        mid = math.sqrt(lo * hi) if lo > 0 and hi > 4 * lo else 0.5 * (lo + hi)
        if expect(mid) > target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-12 * max(1.0, hi):
            break
    return hi


def _cyclic_bisection(logw, constraints, slack, rounds):
    lam = np.zeros(len(constraints))
    for _ in range(rounds):
        changed = False
        for i, con in enumerate(constraints):
            other = sum((lam[j] * constraints[j].cost for j in range(len(constraints)) if j != i),
                        np.zeros_like(logw))
            new = _solve_multiplier(logw, other, con, con.bound - 0.5 * slack)
            if abs(new - lam[i]) > 1e-10 * max(1.0, lam[i]):
                changed = True
            lam[i] = new
        if not changed:
            break
    shift = sum((l * c.cost for l, c in zip(lam, constraints)), np.zeros_like(logw))
    return _tilt(logw, shift)


def kl_project(w: np.ndarray, constraints: Sequence[LinearConstraint], slack: float = 1e-12,
               rounds: int = 100) -> tuple[np.ndarray, bool]:
    """I-projection of row-stochastic ``w`` onto at most two linear constraints.

    Returns the projected matrix and whether every constraint holds within
    ``slack``. Zero entries of ``w`` stay zero. Projected Newton on the dual
    first; cyclic one-multiplier bisection as the fallback.
    """
    if all(c.value(w) <= c.bound + slack for c in constraints):
        return w, True
    if len(constraints) > 2:
        raise ValueError("kl_project handles at most two constraints")
    with np.errstate(divide="ignore"):
        logw = np.log(w)
    weight = constraints[0].weight
    # a bound at the support's minimum forces the lambda -> infinity limit
    for c in constraints:
        masked = np.where(w > 0, c.cost, np.inf)
        row_min = masked.min(axis=1)
        if float(weight @ np.where(np.isfinite(row_min), row_min, 0.0)) >= c.bound - slack:
            keep = (masked <= row_min[:, None] + 1e-15) & (w > 0)
            logw = np.where(keep, logw, -np.inf)
    cons = list(constraints)
    if len(cons) == 1:
        cons.append(LinearConstraint(weight, np.zeros_like(w), 0.0))
    out = np.empty_like(w)
    _kernels.kl_newton2(logw, weight, cons[0].cost, cons[1].cost,
                        cons[0].bound - 0.5 * slack, cons[1].bound - 0.5 * slack, out)
    if all(c.value(out) <= c.bound + slack for c in constraints):
        return out, True
    out = _cyclic_bisection(logw, constraints, slack, rounds)
    return out, all(c.value(out) <= c.bound + slack for c in constraints)


def eg_step(w: np.ndarray, grad: np.ndarray, eta: float) -> np.ndarray:
    return _kernels.eg_step(w, grad, eta)


@dataclass
class DescentResult:
    w: np.ndarray
    value: float
    iterations: int
    converged: bool


def mirror_descent(
    w0: np.ndarray,
    objective: Callable[[np.ndarray], tuple[float, np.ndarray]],
    row_weight: np.ndarray,
    project: Callable[[np.ndarray], np.ndarray | None] | None = None,
    max_iter: int = 400,
    objective_tol: float = 1e-9,
    patience: int = 10,
    eta0: float = 1.0,
    armijo: float = 1e-4,
    max_halvings: int = 30,
) -> DescentResult:
    """Exponentiated-gradient descent with backtracking.

    ``objective`` returns (value, grad) where grad is the per-row natural
    gradient (already divided by ``row_weight``). ``project`` maps a trial
    point to a feasible one, or returns None to reject it. Stops when the
    objective moves less than ``objective_tol`` for ``patience`` iterations
    in a row, or when no step size gives sufficient decrease.
    """
    w = w0
    f, g = objective(w)
    eta = eta0
    small = 0
    it = 0
    converged = False
    for it in range(1, max_iter + 1):
        accepted = False
        for _ in range(max_halvings):
            trial = eg_step(w, g, eta)
            if project is not None:
                trial = project(trial)
            if trial is not None:
                ft, gt = objective(trial)
                decrease = float(row_weight @ (g * (trial - w)).sum(axis=1))
                if math.isfinite(ft) and ft <= f + armijo * min(decrease, 0.0):
                    accepted = True
                    break
            eta *= 0.5
        if not accepted:
            converged = True
            break
        change = f - ft
        w, f, g = trial, ft, gt
        eta = min(eta * 2.0, 1e6)
        small = small + 1 if abs(change) < objective_tol else 0
        if small >= patience:
            converged = True
            break
    return DescentResult(w, f, it, converged)
