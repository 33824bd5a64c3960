"""Domain types, canonical coefficient matrices and the rank-concordance objective.

Responses are only ever used through strict pairwise comparisons, so any
strictly increasing transform of a response row leaves every quantity here
unchanged. Tied pairs (in the response or in the linear scores) contribute
nothing to a concordance count but still count in the normalizer.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMatrix, DimensionMismatch

DEGENERACY_TOL = 1e-12


def _frozen(a, ndim, name):
    arr = np.array(a, dtype=np.float64, copy=True)
    if arr.ndim != ndim:
        raise DimensionMismatch(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class DataSet:
    """Predictors ``X`` (n x p) paired with responses ``Y`` (n x q), one instance per row."""

    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        X = _frozen(self.X, 2, "X")
        Y = _frozen(self.Y, 2, "Y")
        if X.shape[0] != Y.shape[0]:
            raise DimensionMismatch(f"X has {X.shape[0]} rows but Y has {Y.shape[0]}")
        if X.shape[0] < 1 or X.shape[1] < 1:
            raise DimensionMismatch("need n >= 1 and p >= 1")
        if Y.shape[1] < 2:
            raise DimensionMismatch("need q >= 2 responses")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def q(self) -> int:
        return self.Y.shape[1]

    def subset(self, rows) -> "DataSet":
        return DataSet(self.X[rows], self.Y[rows])


@dataclass(frozen=True, eq=False)
class CoefficientMatrix:
    """A p x q coefficient matrix.

    When ``canonical`` is set the last column is exactly zero and the
    Frobenius norm is one (to 1e-12).
    """

    B: np.ndarray
    canonical: bool = False

    def __post_init__(self):
        B = _frozen(self.B, 2, "B")
        if B.shape[1] < 2:
            raise DimensionMismatch("coefficient matrix needs q >= 2 columns")
        if self.canonical:
            if np.any(B[:, -1] != 0.0) or abs(np.linalg.norm(B) - 1.0) > 1e-12:
                raise ValueError("matrix flagged canonical is not canonical")
        object.__setattr__(self, "B", B)

    @property
    def shape(self):
        return self.B.shape


@dataclass(frozen=True)
class ObjectiveValue:
    """Exact concordant-pair count together with its normalizer ``n*q*(q-1)/2``."""

    concordant_count: int
    normalizer: int

    @property
    def value(self) -> float:
        return self.concordant_count / self.normalizer


def as_matrix(B) -> np.ndarray:
    if isinstance(B, CoefficientMatrix):
        return B.B
    return np.asarray(B, dtype=np.float64)


def canonicalize(B) -> CoefficientMatrix:
    """Subtract the last column from every column, then scale to unit Frobenius norm.

    Raises
    ------
    DegenerateMatrix
        If all columns are (numerically) equal.
    """
    B = as_matrix(B)
    if B.ndim != 2 or B.shape[1] < 2:
        raise DimensionMismatch(f"expected a p x q matrix with q >= 2, got shape {B.shape}")
    if not np.all(np.isfinite(B)):
        raise ValueError("B contains non-finite entries")
    centered = B - B[:, -1:]
    norm = np.linalg.norm(centered)
    if norm < DEGENERACY_TOL:
        raise DegenerateMatrix("all columns of B are equal")
    return CoefficientMatrix(centered / norm, canonical=True)


def scores(X, B) -> np.ndarray:
    """Linear scores ``X @ B``; every objective evaluation goes through here."""
    return np.asarray(X, dtype=np.float64) @ as_matrix(B)


def pair_count(n: int, q: int) -> int:
    return n * q * (q - 1) // 2


def concordant_pairs(Y: np.ndarray, S: np.ndarray) -> int:
    """Count pairs ``j < k`` per row ordered the same way (strictly) by ``Y`` and ``S``."""
    total = 0
    for j in range(Y.shape[1] - 1):
        yj, yk = Y[:, j:j + 1], Y[:, j + 1:]
        sj, sk = S[:, j:j + 1], S[:, j + 1:]
        total += int(np.count_nonzero((yj > yk) & (sj > sk)))
        total += int(np.count_nonzero((yj < yk) & (sj < sk)))
    return total


def concordance_objective(data: DataSet, B) -> ObjectiveValue:
    B = as_matrix(B)
    if B.shape != (data.p, data.q):
        raise DimensionMismatch(f"B has shape {B.shape}, data needs {(data.p, data.q)}")
    count = concordant_pairs(data.Y, scores(data.X, B))
    return ObjectiveValue(count, pair_count(data.n, data.q))


def _row_taus(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    q = a.shape[1]
    net = np.zeros(a.shape[0], dtype=np.int64)
    for j in range(q - 1):
        sa =(a[:, j:j + 1] > a[:, j + 1:]).astype(np.int8) - (a[:, j:j + 1] < a[:, j + 1:])
        sb = (b[:, j:j + 1] > b[:, j + 1:]).astype(np.int8) - (b[:, j:j + 1] < b[:, j + 1:])
        net += (sa * sb).sum(axis=1)
    return net / (q * (q - 1) / 2)


def kendall_tau(a, b) -> float:
    """Kendall tau-a between two equal-length vectors.

    Pairs tied in either vector count as neither concordant nor
    discordant but stay in the ``q(q-1)/2`` denominator.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 1 or a.shape != b.shape:
        raise DimensionMismatch(f"shapes {a.shape} and {b.shape} differ")
    if a.shape[0] < 2:
        raise DimensionMismatch("need at least 2 entries")
    return float(_row_taus(a[None, :], b[None, :])[0])


def row_kendall(predicted, truth) -> np.ndarray:
    """Per-row Kendall tau-a between two n x q matrices."""
    predicted = np.asarray(predicted, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if predicted.ndim != 2 or predicted.shape != truth.shape:
        raise DimensionMismatch(f"shapes {predicted.shape} and {truth.shape} differ")
    if predicted.shape[1] < 2:
        raise DimensionMismatch("need at least 2 columns")
    return _row_taus(predicted, truth)


def average_row_kendall(predicted, truth) -> float:
    return float(np.mean(row_kendall(predicted, truth)))


def row_ordering(x, B) -> np.ndarray:
    """Score vector ``x^T B``; its entries order the q responses for instance ``x``."""
    x = np.asarray(x, dtype=np.float64)
    B = as_matrix(B)
    if x.ndim != 1 or x.shape[0] != B.shape[0]:
        raise DimensionMismatch(f"x has shape {x.shape}, B has shape {B.shape}")
    return x @ B
