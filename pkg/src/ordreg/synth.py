"""Synthetic data, recovery metrics and the consistency-experiment runner.

Data follow ``Y = U(X B* + E)``: Gaussian predictors with AR(1)-style
covariance ``0.7**|i-j|``, a sparse canonical ``B*``, noise rescaled so
that ``||E||_F = 0.2 * ||X B*||_F``, and a monotone utility applied
elementwise.

Seeding: every generator takes an int or a ``numpy.random.SeedSequence``.
The experiment runner gives dataset ``(n, run)`` the stream
``SeedSequence(seed, spawn_key=(n, run))`` and splits it into four
children for predictors, coefficients, noise and the solver seed.
"""
from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .core import CoefficientMatrix, DataSet, as_matrix, canonicalize, scores
from .errors import (
    DegenerateMatrix,
    DimensionMismatch,
    GenerationFailed,
    NotApplicable,
    OrdRegError,
    ZeroNorm,
    ZeroVariance,
)
from .solver import FitConfig, fit

AR_RHO = 0.7
DEFAULT_N_GRID = tuple(2**k for k in range(3, 13))


class NoiseKind(enum.Enum):
    E1 = "E1"  # standard normal
    E2 = "E2"  # Student t with one degree of freedom (standard Cauchy)
    E3 = "E3"  # 0.8 N(0, 0.2^2) + 0.2 N(1, 0.2^2), component std 0.2


class UtilityKind(enum.Enum):
    U1 = "U1"  # identity
    U2 = "U2"  # 1 / (1 + exp(-x / 5))
    U3 = "U3"  # floor


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def predictor_covariance(p: int, rho: float = AR_RHO) -> np.ndarray:
    idx = np.arange(p)
    return rho ** np.abs(idx[:, None] - idx[None, :])


def gen_predictors(n: int, p: int, seed) -> np.ndarray:
    """n x p matrix with i.i.d. rows ``N(0, Sigma)``, ``Sigma[i, j] = 0.7**|i - j|``."""
    if n < 1 or p < 1:
        raise ValueError("n and p must be positive")
    L = np.linalg.cholesky(predictor_covariance(p))
    return _rng(seed).standard_normal((n, p)) @ L.T


def gen_coefficients(p: int, q: int, density: float, seed, max_attempts: int = 100,
                     support: str = "all") -> CoefficientMatrix:
    """Random canonical coefficient matrix.

    With ``support="all"``, ``ceil(density * p * q)`` entries placed
    uniformly at random get standard-normal values and the rest are zero
    before canonicalization. Subtracting the last column then spreads any
    non-zero ``B[r, -1]`` across row ``r``, so the canonical matrix is
    usually denser than ``density``.

    With ``support="free"`` the last column is zero from the start and
    ``ceil(density * p * (q - 1))`` non-zeros are placed in the other
    columns; canonicalization only rescales, so the canonical matrix has
    exactly that support.

    Draws that are degenerate (or rank one when ``p, q >= 2``) are
    redrawn from the next child stream.
    """
    if not 0 < density <= 1:
        raise ValueError("density must lie in (0, 1]")
    if q < 2:
        raise DimensionMismatch("need q >= 2")
    if support not in ("all", "free"):
        raise ValueError(f"unknown support mode {support!r}")
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    cols = q if support == "all" else q - 1
    k = math.ceil(density * p * cols)
    for child in ss.spawn(max_attempts):
        rng = _rng(child)
        raw = np.zeros((p, q))
        flat = np.zeros(p * cols)
        flat[rng.choice(p * cols, size=k, replace=False)] = rng.standard_normal(k)
        raw[:, :cols] = flat.reshape(p, cols)
        try:
            B = canonicalize(raw)
        except DegenerateMatrix:
            continue
        if min(p, q) >= 2 and np.linalg.matrix_rank(B.B) < 2:
            continue
        return B
    raise GenerationFailed(f"no usable coefficient matrix in {max_attempts} attempts")


def gen_noise(n: int, q: int, kind: NoiseKind, seed) -> np.ndarray:
    """i.i.d. noise. Cauchy via ``tan(pi (u - 1/2))``; mixture via a uniform component pick."""
    kind = NoiseKind(kind)
    rng = _rng(seed)
    if kind is NoiseKind.E1:
        return rng.standard_normal((n, q))
    if kind is NoiseKind.E2:
        return np.tan(np.pi * (rng.random((n, q)) - 0.5))
    outlier = rng.random((n, q)) < 0.2
    return np.where(outlier, 1.0, 0.0) + 0.2 * rng.standard_normal((n, q))


def scale_noise(E, signal, ratio: float = 0.2) -> np.ndarray:
    E = np.asarray(E, dtype=np.float64)
    e_norm = np.linalg.norm(E)
    s_norm = np.linalg.norm(np.asarray(signal, dtype=np.float64))
    if e_norm == 0 or s_norm == 0:
        raise ZeroNorm("noise and signal must both have non-zero Frobenius norm")
    return E * (ratio * s_norm / e_norm)


def apply_utility(M, kind: UtilityKind) -> np.ndarray:
    kind = UtilityKind(kind)
    M = np.asarray(M, dtype=np.float64)
    if kind is UtilityKind.U1:
        return M.copy()
    if kind is UtilityKind.U2:
        return 1.0 / (1.0 + np.exp(-M / 5.0))
    return np.floor(M)


def _same_shape(A, B):
    A, B = as_matrix(A), as_matrix(B)
    if A.shape != B.shape:
        raise DimensionMismatch(f"shapes {A.shape} and {B.shape} differ")
    return A, B


def metric_m1(B_tilde, B_star) -> float:
    """Squared Frobenius distance."""
    A, B = _same_shape(B_tilde, B_star)
    return float(np.sum((A - B) ** 2))


def metric_m2(B_tilde, B_star) -> float:
    """Pearson correlation between the entries of the two matrices."""
    A, B = _same_shape(B_tilde, B_star)
    a = A.ravel() - A.mean()
    b = B.ravel() - B.mean()
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ZeroVariance("metric_m2 needs two non-constant matrices")
    return float(a @ b / (na * nb))


def signed_sensitivity(B_hat, B_star) -> float:
    A, B = _same_shape(B_hat, B_star)
    nonzero = np.count_nonzero(B)
    if nonzero == 0:
        raise NotApplicable("B* has no non-zero entries")
    return np.count_nonzero(A * B > 0) / nonzero


def specificity(B_hat, B_star) -> float:
    A, B = _same_shape(B_hat, B_star)
    zeros = B == 0
    if not zeros.any():
        raise NotApplicable("B* has no zero entries")
    return np.count_nonzero(zeros & (A == 0)) / np.count_nonzero(zeros)


def selection_metrics(B_hat, B_star) -> tuple[float, float]:
    """``(signed_sensitivity, specificity)``; an undefined metric is reported as NaN."""
    out = []
    for metric in (signed_sensitivity, specificity):
        try:
            out.append(metric(B_hat, B_star))
        except NotApplicable:
            out.append(math.nan)
    return tuple(out)


@dataclass(frozen=True)
class ExperimentConfig:
    p: int = 5
    q: int = 5
    density: float = 0.75
    noise: NoiseKind = NoiseKind.E1
    utility: UtilityKind = UtilityKind.U2
    noise_ratio: float = 0.2
    runs: int = 10
    fit: FitConfig = field(default_factory=FitConfig)
    support: str = "all"

    def __post_init__(self):
        object.__setattr__(self, "noise", NoiseKind(self.noise))
        object.__setattr__(self, "utility", UtilityKind(self.utility))
        if not 0 < self.density <= 1:
            raise ValueError("density must lie in (0, 1]")
        if not self.noise_ratio > 0:
            raise ValueError("noise_ratio must be positive")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if self.support not in ("all", "free"):
            raise ValueError(f"unknown support mode {self.support!r}")


@dataclass(frozen=True, eq=False)
class SyntheticDraw:
    data: DataSet
    B_star: CoefficientMatrix
    fit_seed: int


def generate_dataset(config: ExperimentConfig, n: int, run: int) -> SyntheticDraw:
    """Dataset number ``run`` at sample size ``n`` for the master seed ``config.fit.seed``."""
    ss = np.random.SeedSequence(config.fit.seed, spawn_key=(n, run))
    s_x, s_b, s_e, s_fit = ss.spawn(4)
    X = gen_predictors(n, config.p, s_x)
    B_star = gen_coefficients(config.p, config.q, config.density, s_b, support=config.support)
    signal = scores(X, B_star)
    E = scale_noise(gen_noise(n, config.q, config.noise, s_e), signal, config.noise_ratio)
    Y = apply_utility(signal + E, config.utility)
    fit_seed = int(s_fit.generate_state(1, np.uint64)[0])
    return SyntheticDraw(DataSet(X, Y), B_star, fit_seed)


@dataclass(frozen=True)
class RunMetrics:
    n: int
    run: int
    m1: float
    m2: float
    sensitivity: float
    specificity: float
    objective: float


def run_single(config: ExperimentConfig, n: int, run: int) -> RunMetrics:
    """Generate one dataset, fit it, and score the estimate against ``B*``."""
    try:
        draw = generate_dataset(config, n, run)
        res = fit(draw.data, replace(config.fit, seed=draw.fit_seed))
    except OrdRegError as exc:
        raise type(exc)(f"n={n} run={run}: {exc}") from exc
    sens, spec = selection_metrics(res.B_hat, draw.B_star)
    return RunMetrics(
        n, run,
        metric_m1(res.B_hat, draw.B_star),
        metric_m2(res.B_hat, draw.B_star),
        sens, spec, res.value,
    )


def _run_job(args):
    return run_single(*args)


@dataclass(frozen=True)
class ExperimentRow:
    n: int
    noise: str
    utility: str
    median_m1: float
    median_m2: float
    median_sensitivity: float
    median_specificity: float


def run_consistency_experiment(config: ExperimentConfig, n_grid=DEFAULT_N_GRID, *, n_jobs: int = 1):
    """Per-``n`` medians of M1, M2 and the selection metrics over ``config.runs`` datasets.

    Returns ``(rows, runs)``: one :class:`ExperimentRow` per grid point and
    every per-dataset :class:`RunMetrics`. Output does not depend on ``n_jobs``.
    """
    jobs = [(config, int(n), k) for n in n_grid for k in range(config.runs)]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            runs = list(pool.map(_run_job, jobs))
    else:
        runs = [_run_job(j) for j in jobs]
    rows = []
    for n in n_grid:
        sel = [m for m in runs if m.n == int(n)]
        rows.append(ExperimentRow(
            int(n), config.noise.value, config.utility.value,
            float(np.median([m.m1 for m in sel])),
            float(np.median([m.m2 for m in sel])),
            float(np.median([m.sensitivity for m in sel])),
            float(np.median([m.specificity for m in sel])),
        ))
    return rows, runs
