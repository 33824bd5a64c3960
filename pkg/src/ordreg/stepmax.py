"""Exact maximization of a sum of step functions ``x -> sum_t 1(u_t + v_t x > 0)``.

Every term with ``v_t != 0`` switches at ``r_t = -u_t / v_t``: on for
``x > r_t`` when ``v_t > 0``, off for ``x > r_t`` when ``v_t < 0``. Sorting
the switch points and sweeping left to right with a running count finds
the global maximum in O(T log T).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, ProblemTooLarge

BRUTE_FORCE_MAX_T = 10_000


@dataclass(frozen=True, eq=False)
class StepSumProblem:
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        u = np.array(self.u, dtype=np.float64, copy=True).reshape(-1)
        v = np.array(self.v, dtype=np.float64, copy=True).reshape(-1)
        if u.shape != v.shape:
            raise DimensionMismatch(f"u has {u.size} terms, v has {v.size}")
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
            raise ValueError("step-sum coefficients must be finite")
        u.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @property
    def T(self) -> int:
        return self.u.size

    def evaluate(self, x: float) -> int:
        return int(np.count_nonzero(self.u + self.v * x > 0))


@dataclass(frozen=True)
class StepSumSolution:
    x_hat: float
    value: float


def _step_outside(r: float, direction: float) -> float:
    # r +- 1, unless |r| is so large that adding 1 is lost to rounding
    x = r + direction
    if x == r:
        x = r + direction * abs(r)
    return x


def _candidates(points: np.ndarray) -> np.ndarray:
    """One point inside each interval cut out by the sorted distinct switch points."""
    inner = 0.5 * (points[:-1] + points[1:])
    return np.concatenate(([_step_outside(points[0], -1.0)], inner, [_step_outside(points[-1], 1.0)]))


def _maximize(u: np.ndarray, v: np.ndarray) -> tuple[float, int]:
    flat = v == 0
    base = int(np.count_nonzero(u[flat] > 0)) if flat.any() else 0
    if flat.all():
        return 0.0, base
    u, v = u[~flat], v[~flat]
    points, rank = np.unique(-u / v, return_inverse=True)
    cand = _candidates(points)
    K = cand.size
    # Rounded arithmetic is monotone, so "u + v x > 0" flips at most once along
    # the sorted candidates. Locate the flip from the rounded switch point, then
    # correct it against the predicate itself; the counts below then equal
    # direct evaluation at every candidate, even for near-coincident switch points.
    rising = v > 0

    def flipped(idx):
        x = cand[np.minimum(idx, K - 1)]
        return ((u + v * x > 0) != ~rising) | (idx >= K)

    # cand[j + 1] is the first candidate right of points[j]
    idx = rank.reshape(-1) + 1
    while True:
        back = (idx > 0) & flipped(np.maximum(idx - 1, 0))
        if not back.any():
            break
        idx[back] -= 1
    while True:
        fwd = ~flipped(idx)
        if not fwd.any():
            break
        idx[fwd] += 1
    # rising terms are on from idx onwards, falling terms before idx
    delta = np.bincount(idx[rising], minlength=K + 1)[:K]
    delta -= np.bincount(idx[~rising], minlength=K + 1)[:K]
    values = base + np.count_nonzero(~rising) + np.cumsum(delta)
    k = int(np.argmax(values))
    return float(cand[k]), int(values[k])


def maximize_step_sum(prob: StepSumProblem) -> StepSumSolution:
    """Global maximizer of the step sum, placed strictly inside the leftmost maximizing interval.

    A bounded interval yields its midpoint; an interval unbounded below
    (above) yields the smallest (largest) switch point minus (plus) one.
    Terms with ``v_t == 0`` are constants and never create switch points.
    """
    x_hat, value = _maximize(prob.u, prob.v)
    return StepSumSolution(x_hat, value)


def maximize_step_sum_l0(prob: StepSumProblem, lam: float) -> StepSumSolution:
    """Maximize ``sum_t 1(u_t + v_t x > 0) - lam * (x != 0)``.

    The unpenalized maximizer competes against ``x = 0``; zero wins ties.
    ``value`` is the penalized objective at the returned point.
    """
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    x_hat, value = _maximize(prob.u, prob.v)
    at_zero = int(np.count_nonzero(prob.u > 0))
    penalized = value - (lam if x_hat != 0.0 else 0.0)
    if penalized <= at_zero:
        return StepSumSolution(0.0, float(at_zero))
    return StepSumSolution(x_hat, float(penalized))


def brute_force_step_sum(prob: StepSumProblem) -> StepSumSolution:
    """O(T^2) reference: evaluate the sum at one point inside every interval between switch points."""
    if prob.T > BRUTE_FORCE_MAX_T:
        raise ProblemTooLarge(f"T = {prob.T} exceeds brute-force guard {BRUTE_FORCE_MAX_T}")
    u, v = prob.u, prob.v
    nz = v != 0
    points = sorted(set((-u[nz] / v[nz]).tolist()))
    if not points:
        candidates = [0.0]
    else:
        candidates = [_step_outside(points[0], -1.0)]
        candidates += [(a + b) / 2 for a, b in zip(points[:-1], points[1:])]
        candidates.append(_step_outside(points[-1], 1.0))
    best_x, best = candidates[0], -1
    for x in candidates:
        value = sum(1 for ut, vt in zip(u, v) if ut + vt * x > 0)
        if value > best:
            best_x, best = x, value
    return StepSumSolution(float(best_x), best)
