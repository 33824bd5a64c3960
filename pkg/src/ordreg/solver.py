"""Coordinate-ascent maximization of the concordance objective.

Each entry ``B[r, s]`` is updated in turn to the exact maximizer of the
objective with every other entry held fixed. Only pairs that involve
response ``s`` depend on ``B[r, s]``, and each of them contributes one
step function of the new value, so the update is a step-sum problem
(:mod:`ordreg.stepmax`). After each full sweep the matrix is returned to
canonical form, which leaves the objective unchanged.

With an L0 penalty ``lam`` every coordinate update competes against zero,
and the reported objective is ``(count - lam * nnz(B)) / normalizer``.

Random streams: restart ``k`` of a fit with master seed ``seed`` draws its
starting matrix from ``numpy.random.default_rng(SeedSequence(seed,
spawn_key=(k,)))`` (PCG64), so restarts are independent of one another and
of execution order.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .core import (
    CoefficientMatrix,
    DataSet,
    ObjectiveValue,
    as_matrix,
    average_row_kendall,
    canonicalize,
    concordant_pairs,
    pair_count,
    scores,
)
from .errors import (
    AllRestartsDegenerate,
    DegenerateMatrix,
    DimensionMismatch,
    IndexOutOfRange,
    InsufficientData,
)
from .stepmax import StepSumProblem, _maximize, maximize_step_sum_l0


@dataclass(frozen=True)
class FitConfig:
    restarts: int = 10
    lam: float = 0.0
    max_sweeps: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be >= 1")
        if not (self.lam >= 0 and math.isfinite(self.lam)):
            raise ValueError("lambda must be a finite non-negative number")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")


@dataclass(frozen=True)
class RestartOutcome:
    index: int
    sweeps: int
    penalized: float | None  # None when the restart hit a degenerate matrix
    trace: tuple = ()
    hit_cap: bool = False


@dataclass(frozen=True, eq=False)
class FitResult:
    B_hat: CoefficientMatrix
    objective: ObjectiveValue
    penalized: float
    lam: float
    nnz: int
    sweeps_used: int
    restart_index: int
    trace: tuple
    restarts: tuple = field(default=())

    @property
    def value(self) -> float:
        """Penalized objective (equals ``objective.value`` when ``lam == 0``)."""
        return self.penalized


def restart_rng(seed: int, k: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(k,)))


def coordinate_problem(data: DataSet, B, r: int, s: int) -> StepSumProblem:
    """Step-sum problem whose variable is the new value of ``B[r, s]`` (0-based indices).

    One term per instance ``i`` and response ``j != s`` with
    ``Y[i, j] != Y[i, s]``; the term is on exactly when the pair ``(j, s)``
    is concordant in row ``i``.
    """
    B = as_matrix(B)
    if B.shape != (data.p, data.q):
        raise DimensionMismatch(f"B has shape {B.shape}, data needs {(data.p, data.q)}")
    if not (0 <= r < data.p and 0 <= s < data.q):
        raise IndexOutOfRange(f"(r, s) = ({r}, {s}) outside {B.shape}")
    u, v = _terms(data.X, scores(data.X, B), B, r, s, *_pair_index(data.Y, s))
    return StepSumProblem(u, v)


def _pair_index(Y, s):
    g = (Y > Y[:, s:s + 1]).astype(np.int8) - (Y < Y[:, s:s + 1])
    rows, cols = np.nonzero(g)
    return rows, cols, g[rows, cols].astype(np.float64)


def _terms(X, S, B, r, s, rows, cols, g):
    xr = X[rows, r]
    u = g * (S[rows, cols] - S[rows, s] + xr * B[r, s])
    v = -g * xr
    return u, v


def _penalized(count, nnz, lam):
    return count - lam * nnz if lam else float(count)


def sweep(data: DataSet, B, lam: float = 0.0, *, on_update=None, _pairs=None):
    """One pass over all entries in row-major order, then canonicalize.

    Returns ``(B_new, objective)`` where ``objective`` is the
    :class:`ObjectiveValue` of the canonical result.

    ``on_update(r, s, B, count)`` is called after every coordinate update
    with the current (read-only) matrix and its exact concordant count.
    An update that would lower the exact objective through floating-point
    rounding is rejected, so the count never decreases within a sweep.
    """
    B = np.array(as_matrix(B), dtype=np.float64)
    if B.shape != (data.p, data.q):
        raise DimensionMismatch(f"B has shape {B.shape}, data needs {(data.p, data.q)}")
    X, Y = data.X, data.Y
    pairs = _pairs if _pairs is not None else [_pair_index(Y, s) for s in range(data.q)]
    S = scores(X, B)
    count = concordant_pairs(Y, S)
    nnz = int(np.count_nonzero(B))
    current = _penalized(count, nnz, lam)
    for r in range(data.p):
        for s in range(data.q):
            u, v = _terms(X, S, B, r, s, *pairs[s])
            if lam:
                x_new = maximize_step_sum_l0(StepSumProblem(u, v), lam).x_hat
            else:
                x_new = _maximize(u, v)[0]
            old = B[r, s]
            if x_new != old:
                B[r, s] = x_new
                S_new = scores(X, B)
                count_new = concordant_pairs(Y, S_new)
                nnz_new = nnz + (x_new != 0) - (old != 0)
                new = _penalized(count_new, nnz_new, lam)
                if new >= current:
                    S, count, nnz, current = S_new, count_new, nnz_new, new
                else:
                    B[r, s] = old
            if on_update is not None:
                view = B.view()
                view.flags.writeable = False
                on_update(r, s, view, count)
    B_can = canonicalize(B)
    return B_can, ObjectiveValue(concordant_pairs(Y, scores(X, B_can.B)), pair_count(data.n, data.q))


def _run_restart(data: DataSet, config: FitConfig, k: int, on_update=None):
    lam = config.lam
    pairs = [_pair_index(data.Y, s) for s in range(data.q)]
    B0 = restart_rng(config.seed, k).standard_normal((data.p, data.q))
    try:
        B = canonicalize(B0)
    except DegenerateMatrix:
        return RestartOutcome(k, 0, None), None
    obj = ObjectiveValue(concordant_pairs(data.Y, scores(data.X, B.B)), pair_count(data.n, data.q))
    best = _penalized(obj.concordant_count, int(np.count_nonzero(B.B)), lam)
    trace = [best]
    sweeps = 0
    hit_cap = True
    hook = None
    if on_update is not None:
        def hook(r, s, M, count):
            on_update(k, r, s, M, count)
    while sweeps < config.max_sweeps:
        sweeps += 1
        try:
            B_new, obj_new = sweep(data, B, lam, on_update=hook, _pairs=pairs)
        except DegenerateMatrix:
            return RestartOutcome(k, sweeps, None, tuple(trace)), None
        value = _penalized(obj_new.concordant_count, int(np.count_nonzero(B_new.B)), lam)
        if value <= best:
            # a sweep that fails to increase the objective ends the restart;
            # keep whichever matrix scores higher
            if value == best:
                B, obj = B_new, obj_new
            hit_cap = False
            break
        B, obj, best = B_new, obj_new, value
        trace.append(value)
    outcome = RestartOutcome(k, sweeps, best, tuple(trace), hit_cap)
    return outcome, (B, obj)


def _restart_job(args):
    data, config, k = args
    return _run_restart(data, config, k)


def fit(data: DataSet, config: FitConfig = FitConfig(), *, n_jobs: int = 1, on_update=None) -> FitResult:
    """Best of ``config.restarts`` coordinate-ascent runs from standard-normal starts.

    The winner has the highest final (penalized) objective; ties go to
    the lower restart index. Parallel (``n_jobs > 1``) and serial runs
    return identical results. ``on_update(k, r, s, B, count)`` observes
    every coordinate update and requires ``n_jobs == 1``.
    """
    ks = range(config.restarts)
    if n_jobs > 1:
        if on_update is not None:
            raise ValueError("on_update requires serial execution")
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(_restart_job, [(data, config, k) for k in ks]))
    else:
        results = [_run_restart(data, config, k, on_update) for k in ks]

    outcomes = tuple(o for o, _ in results)
    winner = None
    for outcome, state in results:
        if state is None:
            continue
        if winner is None or outcome.penalized > winner[0].penalized:
            winner = (outcome, state)
    if winner is None:
        raise AllRestartsDegenerate(
            f"all {config.restarts} restarts collapsed to a degenerate matrix (lambda = {config.lam})"
        )
    outcome, (B, obj) = winner
    return FitResult(
        B_hat=B,
        objective=obj,
        penalized=outcome.penalized / obj.normalizer,
        lam=config.lam,
        nnz=int(np.count_nonzero(B.B)),
        sweeps_used=outcome.sweeps,
        restart_index=outcome.index,
        trace=tuple(t / obj.normalizer for t in outcome.trace),
        restarts=outcomes,
    )


def predict(B_hat, X_new) -> np.ndarray:
    """Score matrix ``X_new @ B_hat``; row ``i`` orders the responses for instance ``i``."""
    B = as_matrix(B_hat)
    X_new = np.asarray(X_new, dtype=np.float64)
    if X_new.ndim == 1:
        X_new = X_new[None, :]
    if X_new.ndim != 2 or X_new.shape[1] != B.shape[0]:
        raise DimensionMismatch(f"X has shape {X_new.shape}, B has shape {B.shape}")
    return scores(X_new, B)


@dataclass(frozen=True)
class CVResult:
    best_lambda: float
    scores: dict


def cross_validate_lambda(data: DataSet, grid, folds: int = 5, config: FitConfig = FitConfig()) -> CVResult:
    """Pick the penalty with the best mean held-out average row Kendall tau.

    Instances are shuffled with ``config.seed`` and cut into contiguous
    folds. A penalty whose fit collapses on any fold scores ``-inf``.
    Ties go to the smaller penalty.
    """
    grid = sorted(float(g) for g in grid)
    if not grid:
        raise ValueError("empty lambda grid")
    if folds < 2 or data.n < folds:
        raise InsufficientData(f"need folds >= 2 and n >= folds (n = {data.n}, folds = {folds})")
    order = np.random.default_rng(config.seed).permutation(data.n)
    parts = np.array_split(order, folds)
    results = {}
    for lam in grid:
        taus = []
        for f, test in enumerate(parts):
            train = np.concatenate([p for g, p in enumerate(parts) if g != f])
            try:
                res = fit(data.subset(np.sort(train)), replace(config, lam=lam))
            except AllRestartsDegenerate:
                taus = [-math.inf]
                break
            held = data.subset(np.sort(test))
            taus.append(average_row_kendall(predict(res.B_hat, held.X), held.Y))
        results[lam] = float(np.mean(taus))
    best = max(grid, key=lambda lam: (results[lam], -lam))
    return CVResult(best, results)
