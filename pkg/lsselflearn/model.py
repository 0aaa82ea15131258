"""Least squares classifier core.

Label encodings, closed-form ridge fits, decision and prediction functions,
the supervised / label based / responsibility based objectives and the two
evaluation measures.

Plain numpy arrays are accepted wherever a ``FeatureMatrix`` is; they follow
the package convention that the last column is the intercept column.
"""

import logging
from dataclasses import dataclass
from typing import Hashable, Iterable, Sequence, Tuple, Union

import numpy as np
from scipy import linalg

from .errors import (
    ConfigError,
    DomainError,
    EncodingError,
    RankDeficiencyError,
    ShapeError,
    TooManyClassesError,
)

logger = logging.getLogger(__name__)

ERROR = "Error"
AVERAGE_LOSS_TEST = "AverageLossTest"
MEASURES = (ERROR, AVERAGE_LOSS_TEST)


@dataclass(frozen=True)
class LabelEncoding:
    """Numeric codes for the two classes.

    ``m`` encodes the first class symbol, ``n`` the second.
    """

    m: float = -1.0
    n: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.m) and np.isfinite(self.n)):
            raise ConfigError(f"label codes must be finite, got m={self.m}, n={self.n}")
        if self.m == self.n:
            raise ConfigError(f"label codes must differ, got m = n = {self.m}")

    def midpoint(self) -> float:
        return (self.m + self.n) / 2.0

    def lo(self) -> float:
        return min(self.m, self.n)

    def hi(self) -> float:
        return max(self.m, self.n)

    def swapped(self) -> "LabelEncoding":
        return LabelEncoding(m=self.n, n=self.m)


@dataclass(frozen=True)
class RidgeConfig:
    """Regularization of the least squares fit."""

    lam: float = 0.0
    penalize_intercept: bool = False

    def __post_init__(self):
        if not np.isfinite(self.lam) or self.lam < 0:
            raise ConfigError(f"lambda must be a finite value >= 0, got {self.lam}")


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """Row-major real matrix, optionally carrying a trailing constant-1 column."""

    values: np.ndarray
    has_intercept_column: bool = False

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2:
            raise ShapeError(f"feature matrix must be 2-D, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise DomainError("feature values must be finite")
        if self.has_intercept_column and (
            values.shape[1] == 0 or not np.all(values[:, -1] == 1.0)
        ):
            raise ShapeError("intercept column must be exactly 1.0 in every row")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    def with_intercept(self) -> "FeatureMatrix":
        """Return this matrix with a constant-1 column appended."""
        if self.has_intercept_column:
            return self
        return FeatureMatrix(np.hstack([self.values, np.ones((self.rows, 1))]), True)


MatrixLike = Union[FeatureMatrix, np.ndarray, Sequence[Sequence[float]]]
VectorLike = Union[np.ndarray, Sequence[float]]


def add_intercept(X: MatrixLike) -> FeatureMatrix:
    """Append the intercept column to a raw feature matrix."""
    if isinstance(X, FeatureMatrix):
        return X.with_intercept()
    return FeatureMatrix(np.asarray(X, dtype=float)).with_intercept()


def _as_matrix(X: MatrixLike, name: str = "X") -> Tuple[np.ndarray, bool]:
    """Return the raw array and whether its last column is the intercept."""
    if isinstance(X, FeatureMatrix):
        return X.values, X.has_intercept_column
    values = np.asarray(X, dtype=float)
    if values.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {values.shape}")
    return values, True


def _as_vector(v: VectorLike, name: str) -> np.ndarray:
    values = np.asarray(v, dtype=float)
    if values.ndim != 1:
        raise ShapeError(f"{name} must be 1-D, got shape {values.shape}")
    return values


def _check_rows(A: np.ndarray, t: np.ndarray, what: str) -> None:
    if A.shape[0] != t.shape[0]:
        raise ShapeError(f"{what}: {A.shape[0]} rows but {t.shape[0]} targets")


def _check_cols(A: np.ndarray, w: np.ndarray, what: str) -> None:
    if A.shape[1] != w.shape[0]:
        raise ShapeError(f"{what}: {A.shape[1]} columns but {w.shape[0]} weights")


def penalty_diagonal(cols: int, cfg: RidgeConfig, has_intercept: bool = True) -> np.ndarray:
    """Diagonal of D: ones, with the intercept coordinate zeroed when unpenalized."""
    diag = np.ones(cols)
    if has_intercept and not cfg.penalize_intercept and cols > 0:
        diag[-1] = 0.0
    return diag


def _penalty(w: np.ndarray, has_intercept: bool, cfg: RidgeConfig) -> float:
    return float(cfg.lam * np.sum(penalty_diagonal(w.shape[0], cfg, has_intercept) * w * w))


# ----------------------------------------------------------------------------
# Labels
# ----------------------------------------------------------------------------


def encode_labels(
    labels: Iterable[Hashable],
    encoding: LabelEncoding,
    classes: Tuple[Hashable, Hashable],
) -> np.ndarray:
    """Replace class symbols by their numeric codes.

    ``classes[0]`` maps to ``encoding.m`` and ``classes[1]`` to ``encoding.n``.
    """
    labels = list(labels)
    distinct = sorted(set(labels), key=str)
    if len(distinct) > 2:
        raise TooManyClassesError(
            f"expected at most two classes, found {len(distinct)}: {distinct}"
        )
    if classes[0] == classes[1]:
        raise EncodingError(f"class map assigns {classes[0]!r} to both codes")
    codes = {classes[0]: encoding.m, classes[1]: encoding.n}
    for symbol in distinct:
        if symbol not in codes:
            raise EncodingError(
                f"unmapped class symbol {symbol!r}; expected one of {list(classes)}"
            )
    return np.array([codes[s] for s in labels], dtype=float)


def decode_labels(
    codes: VectorLike,
    encoding: LabelEncoding,
    classes: Tuple[Hashable, Hashable],
) -> np.ndarray:
    """Inverse of ``encode_labels``."""
    codes = _as_vector(codes, "codes")
    bad = ~np.isin(codes, [encoding.m, encoding.n])
    if np.any(bad):
        raise EncodingError(f"code {codes[bad][0]} is neither {encoding.m} nor {encoding.n}")
    out = np.empty(codes.shape[0], dtype=object)
    out[codes == encoding.m] = classes[0]
    out[codes == encoding.n] = classes[1]
    return out


# ----------------------------------------------------------------------------
# Fitting and prediction
# ----------------------------------------------------------------------------


class RidgeSolver:
    """Factorized regularized normal matrix of one design.

    Factoring once and solving for many target vectors is what the w-steps of
    block coordinate descent need: the stacked design never changes, only the
    targets do.
    """

    def __init__(self, X: MatrixLike, cfg: RidgeConfig = RidgeConfig()):
        A, has_intercept = _as_matrix(X)
        if A.shape[1] == 0:
            raise ShapeError("design matrix has no columns")
        self.cfg = cfg
        self.has_intercept = has_intercept
        self._X = A
        penalty = cfg.lam * penalty_diagonal(A.shape[1], cfg, has_intercept)

        augmented = np.vstack([A, np.diag(np.sqrt(penalty))])
        rank = np.linalg.matrix_rank(augmented)
        if rank < A.shape[1]:
            raise RankDeficiencyError(self._describe(rank))
        try:
            self._factor = linalg.cho_factor(
                A.T @ A + np.diag(penalty), lower=True, check_finite=False
            )
        except linalg.LinAlgError as exc:
            raise RankDeficiencyError(self._describe(rank)) from exc

    def _describe(self, rank: int) -> str:
        rows, cols = self._X.shape
        return (
            f"regularized normal matrix is singular ({rows} rows, {cols} columns, "
            f"rank {rank}, lambda={self.cfg.lam}, "
            f"penalize_intercept={self.cfg.penalize_intercept})"
        )

    @property
    def rows(self) -> int:
        return self._X.shape[0]

    @property
    def cols(self) -> int:
        return self._X.shape[1]

    def solve(self, t: VectorLike) -> np.ndarray:
        """Minimizer of ||Xw - t||^2 + lambda ||w_pen||^2."""
        t = _as_vector(t, "targets")
        _check_rows(self._X, t, "ridge fit")
        return linalg.cho_solve(self._factor, self._X.T @ t, check_finite=False)


def fit_ridge(X: MatrixLike, t: VectorLike, cfg: RidgeConfig = RidgeConfig()) -> np.ndarray:
    """Closed-form ridge least squares fit."""
    return RidgeSolver(X, cfg).solve(t)


def decision_values(w: VectorLike, X: MatrixLike) -> np.ndarray:
    A, _ = _as_matrix(X)
    w = _as_vector(w, "weights")
    _check_cols(A, w, "decision values")
    return A @ w


def predict(w: VectorLike, X: MatrixLike, encoding: LabelEncoding) -> np.ndarray:
    """Nearest class code to each decision value; ties go to ``m``."""
    d = decision_values(w, X)
    return np.where(np.abs(d - encoding.n) < np.abs(d - encoding.m), encoding.n, encoding.m)


def decision_boundary_1d(w: VectorLike, encoding: LabelEncoding) -> float:
    """Position where a one-feature classifier crosses the encoding midpoint."""
    w = _as_vector(w, "weights")
    if w.shape[0] != 2:
        raise ShapeError(f"expected one feature plus intercept, got {w.shape[0]} weights")
    if w[0] == 0.0:
        return float("nan")
    return float((encoding.midpoint() - w[1]) / w[0])


# ----------------------------------------------------------------------------
# Objectives
# ----------------------------------------------------------------------------


def objective_supervised(
    w: VectorLike, X_lab: MatrixLike, y: VectorLike, cfg: RidgeConfig = RidgeConfig()
) -> float:
    A, has_intercept = _as_matrix(X_lab, "X_lab")
    w = _as_vector(w, "weights")
    y = _as_vector(y, "y")
    _check_cols(A, w, "supervised objective")
    _check_rows(A, y, "supervised objective")
    r = A @ w - y
    return float(r @ r) + _penalty(w, has_intercept, cfg)


def objective_label_based(
    w: VectorLike,
    u: VectorLike,
    X_lab: MatrixLike,
    y: VectorLike,
    X_unl: MatrixLike,
    cfg: RidgeConfig = RidgeConfig(),
) -> float:
    """Supervised objective plus squared residuals of the imputed labels ``u``."""
    B, _ = _as_matrix(X_unl, "X_unl")
    w = _as_vector(w, "weights")
    u = _as_vector(u, "u")
    _check_rows(B, u, "label based objective")
    _check_cols(B, w, "label based objective")
    r = B @ w - u
    return objective_supervised(w, X_lab, y, cfg) + float(r @ r)


def check_responsibilities(q: VectorLike) -> np.ndarray:
    q = _as_vector(q, "responsibilities")
    if np.any((q < 0.0) | (q > 1.0)) or not np.all(np.isfinite(q)):
        raise DomainError("responsibilities must lie in [0, 1]")
    return q


def objective_responsibility(
    w: VectorLike,
    q: VectorLike,
    X_lab: MatrixLike,
    y: VectorLike,
    X_unl: MatrixLike,
    encoding: LabelEncoding,
    cfg: RidgeConfig = RidgeConfig(),
) -> float:
    """Supervised objective plus responsibility-weighted losses to both codes."""
    q = check_responsibilities(q)
    B, _ = _as_matrix(X_unl, "X_unl")
    w = _as_vector(w, "weights")
    _check_rows(B, q, "responsibility objective")
    _check_cols(B, w, "responsibility objective")
    d = B @ w
    unlabeled = q * (d - encoding.m) ** 2 + (1.0 - q) * (d - encoding.n) ** 2
    return objective_supervised(w, X_lab, y, cfg) + float(np.sum(unlabeled))


# ----------------------------------------------------------------------------
# Measures
# ----------------------------------------------------------------------------


def error_rate(predicted: VectorLike, truth: VectorLike) -> float:
    predicted = _as_vector(predicted, "predicted")
    truth = _as_vector(truth, "truth")
    if predicted.shape != truth.shape:
        raise ShapeError(f"{predicted.shape[0]} predictions for {truth.shape[0]} labels")
    if truth.shape[0] == 0:
        raise DomainError("error rate of an empty set is undefined")
    return float(np.mean(predicted != truth))


def average_quadratic_loss(w: VectorLike, X_test: MatrixLike, y_test: VectorLike) -> float:
    """Mean squared residual on the test objects, without the penalty term."""
    A, _ = _as_matrix(X_test, "X_test")
    y_test = _as_vector(y_test, "y_test")
    if A.shape[0] == 0:
        raise DomainError("average loss of an empty test set is undefined")
    _check_rows(A, y_test, "average loss")
    r = decision_values(w, A) - y_test
    return float(np.mean(r * r))
