"""Soft-label and hard-label self-learning.

Both procedures are block coordinate descent: alternate an exact update of the
pseudo-labels of the unlabeled objects with an exact ridge refit of the
weights on the labeled plus pseudo-labeled objects.

- soft-label self-learning minimizes the label based objective over (w, u),
  with every imputed label u_j constrained to the encoding interval;
- hard-label self-learning minimizes the responsibility based objective over
  (w, q); its q-step assigns each object fully to the nearest class code.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from .errors import ConfigError, DomainError, InvariantViolation, SelfLearnError, ShapeError
from .model import (
    FeatureMatrix,
    LabelEncoding,
    MatrixLike,
    RidgeConfig,
    RidgeSolver,
    VectorLike,
    _as_matrix,
    _as_vector,
    check_responsibilities,
    decision_values,
    fit_ridge,
    objective_label_based,
    objective_responsibility,
)
from .seeding import rng_for

logger = logging.getLogger(__name__)

_MONOTONE_SLACK = 1e-10
_TINY = np.finfo(float).tiny

FIXED_POINT_TOLERANCE = 1e-12
FIXED_POINT_MAX_ITERATIONS = 20000


class Variant(str, Enum):
    SOFT_LABEL = "soft_label"
    HARD_LABEL = "hard_label"


@dataclass(frozen=True)
class BcdConfig:
    """Stopping rule and regularization of block coordinate descent."""

    max_iterations: int = 500
    objective_tolerance: float = 1e-8
    ridge: RidgeConfig = field(default_factory=RidgeConfig)

    def __post_init__(self):
        if int(self.max_iterations) < 1:
            raise ConfigError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if not self.objective_tolerance >= 0:
            raise ConfigError(
                f"objective_tolerance must be >= 0, got {self.objective_tolerance}"
            )


@dataclass(eq=False)
class FitResult:
    """Outcome of one block coordinate descent run."""

    variant: Variant
    weights: np.ndarray
    pseudo_targets: np.ndarray
    objective_trace: np.ndarray
    iterations: int
    converged: bool
    weight_history: List[np.ndarray] = field(default_factory=list)
    responsibilities: Optional[np.ndarray] = None

    @property
    def objective(self) -> float:
        return float(self.objective_trace[-1])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "variant": self.variant.value,
            "weights": self.weights.tolist(),
            "pseudo_targets": self.pseudo_targets.tolist(),
            "objective": self.objective,
            "objective_trace": self.objective_trace.tolist(),
            "iterations": self.iterations,
            "converged": self.converged,
        }


# ----------------------------------------------------------------------------
# Block steps
# ----------------------------------------------------------------------------


def soft_label_update(w: VectorLike, X_unl: MatrixLike, encoding: LabelEncoding) -> np.ndarray:
    """Imputed labels minimizing the label based objective for fixed ``w``."""
    return np.clip(decision_values(w, X_unl), encoding.lo(), encoding.hi())


def hard_responsibility_update(
    w: VectorLike, X_unl: MatrixLike, encoding: LabelEncoding
) -> np.ndarray:
    """Responsibilities minimizing the responsibility objective for fixed ``w``.

    q_j = 1 (class m) when m is at least as close as n to the decision value.
    """
    d = decision_values(w, X_unl)
    return np.where((d - encoding.m) ** 2 <= (d - encoding.n) ** 2, 1.0, 0.0)


def responsibilities_to_targets(q: VectorLike, encoding: LabelEncoding) -> np.ndarray:
    q = check_responsibilities(q)
    return q * encoding.m + (1.0 - q) * encoding.n


def _stack(X_lab: MatrixLike, X_unl: MatrixLike) -> MatrixLike:
    A, has_intercept = _as_matrix(X_lab, "X_lab")
    B, _ = _as_matrix(X_unl, "X_unl")
    if A.shape[1] != B.shape[1]:
        raise ShapeError(
            f"labeled objects have {A.shape[1]} columns, unlabeled {B.shape[1]}"
        )
    stacked = np.vstack([A, B])
    if isinstance(X_lab, FeatureMatrix):
        return FeatureMatrix(stacked, has_intercept)
    return stacked


class _Problem:
    """Data of one semi-supervised fit, with the stacked design factored once."""

    def __init__(
        self,
        variant: Variant,
        X_lab: MatrixLike,
        y: VectorLike,
        X_unl: MatrixLike,
        encoding: LabelEncoding,
        ridge: RidgeConfig,
    ):
        self.variant = Variant(variant)
        self.X_lab = X_lab
        self.X_unl = X_unl
        self.y = _as_vector(y, "y")
        self.encoding = encoding
        self.ridge = ridge

        A, _ = _as_matrix(X_lab, "X_lab")
        if A.shape[0] == 0:
            raise DomainError("at least one labeled object is required")
        if A.shape[0] != self.y.shape[0]:
            raise ShapeError(f"{A.shape[0]} labeled objects but {self.y.shape[0]} labels")
        self.n_unlabeled = _as_matrix(X_unl, "X_unl")[0].shape[0]
        self.solver = RidgeSolver(_stack(X_lab, X_unl), ridge)

    def supervised_weights(self) -> np.ndarray:
        return fit_ridge(self.X_lab, self.y, self.ridge)

    def pseudo_step(self, w: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Return (pseudo-labels, implied targets): (u, u) or (q, t(q))."""
        if self.variant is Variant.SOFT_LABEL:
            u = soft_label_update(w, self.X_unl, self.encoding)
            return u, u
        q = hard_responsibility_update(w, self.X_unl, self.encoding)
        return q, responsibilities_to_targets(q, self.encoding)

    def targets_from(self, pseudo: VectorLike) -> np.ndarray:
        pseudo = _as_vector(pseudo, "initial pseudo-labels")
        if pseudo.shape[0] != self.n_unlabeled:
            raise ShapeError(
                f"{pseudo.shape[0]} initial pseudo-labels for {self.n_unlabeled} unlabeled objects"
            )
        if self.variant is Variant.SOFT_LABEL:
            return pseudo
        return responsibilities_to_targets(pseudo, self.encoding)

    def refit(self, targets: np.ndarray) -> np.ndarray:
        return self.solver.solve(np.concatenate([self.y, targets]))

    def objective(self, w: np.ndarray, pseudo: np.ndarray) -> float:
        if self.variant is Variant.SOFT_LABEL:
            return objective_label_based(w, pseudo, self.X_lab, self.y, self.X_unl, self.ridge)
        return objective_responsibility(
            w, pseudo, self.X_lab, self.y, self.X_unl, self.encoding, self.ridge
        )


# ----------------------------------------------------------------------------
# Block coordinate descent
# ----------------------------------------------------------------------------


def run_bcd(
    variant: Union[Variant, str],
    X_lab: MatrixLike,
    y: VectorLike,
    X_unl: MatrixLike,
    encoding: LabelEncoding = LabelEncoding(),
    cfg: BcdConfig = BcdConfig(),
    *,
    initial_pseudo: Optional[VectorLike] = None,
    initial_weights: Optional[VectorLike] = None,
) -> FitResult:
    """Alternate pseudo-label updates and ridge refits until the objective settles.

    The weights start at the supervised fit unless ``initial_pseudo`` (u for
    soft, q for hard) or ``initial_weights`` is given. Each iteration is one
    pseudo-label update followed by one refit; the objective after the refit
    is appended to the trace. Iteration stops when the relative decrease is at
    most ``cfg.objective_tolerance``, when hard responsibilities repeat, or
    after ``cfg.max_iterations``.
    """
    variant = Variant(variant)
    problem = _Problem(variant, X_lab, y, X_unl, encoding, cfg.ridge)

    if initial_pseudo is not None and initial_weights is not None:
        raise ConfigError("give initial pseudo-labels or initial weights, not both")
    if initial_weights is not None:
        w = _as_vector(initial_weights, "initial weights").copy()
        if w.shape[0] != problem.solver.cols:
            raise ShapeError(f"{w.shape[0]} initial weights for {problem.solver.cols} columns")
    elif initial_pseudo is not None:
        w = problem.refit(problem.targets_from(initial_pseudo))
    else:
        w = problem.supervised_weights()

    pseudo, targets = problem.pseudo_step(w)
    previous = problem.objective(w, pseudo)
    previous_pseudo: Optional[np.ndarray] = None
    trace: List[float] = []
    history: List[np.ndarray] = []
    converged = False

    for iteration in range(1, int(cfg.max_iterations) + 1):
        if iteration > 1:
            pseudo, targets = problem.pseudo_step(w)
        repeated = (
            variant is Variant.HARD_LABEL
            and previous_pseudo is not None
            and np.array_equal(pseudo, previous_pseudo)
        )
        w = problem.refit(targets)
        value = problem.objective(w, pseudo)
        if value > previous + _MONOTONE_SLACK * max(1.0, abs(previous)):
            raise InvariantViolation(
                f"{variant.value} objective increased at iteration {iteration}: "
                f"{previous!r} -> {value!r}"
            )
        trace.append(value)
        history.append(w.copy())

        decrease = (previous - value) / max(abs(previous), _TINY)
        if problem.n_unlabeled == 0 or repeated or decrease <= cfg.objective_tolerance:
            converged = True
            break
        previous = value
        previous_pseudo = pseudo

    logger.debug(
        "%s BCD stopped after %d iterations (converged=%s, objective=%.12g)",
        variant.value,
        len(trace),
        converged,
        trace[-1],
    )
    return FitResult(
        variant=variant,
        weights=w,
        pseudo_targets=targets,
        objective_trace=np.array(trace),
        iterations=len(trace),
        converged=converged,
        weight_history=history,
        responsibilities=pseudo if variant is Variant.HARD_LABEL else None,
    )


def bcd_step(
    variant: Union[Variant, str],
    w: VectorLike,
    X_lab: MatrixLike,
    y: VectorLike,
    X_unl: MatrixLike,
    encoding: LabelEncoding = LabelEncoding(),
    ridge: RidgeConfig = RidgeConfig(),
) -> Tuple[np.ndarray, float, float]:
    """One BCD iteration from ``w``.

    Returns the refitted weights, the objective at ``w`` with its optimal
    pseudo-labels and the objective after the refit.
    """
    problem = _Problem(Variant(variant), X_lab, y, X_unl, encoding, ridge)
    return _step(problem, _as_vector(w, "weights"))


def _step(problem: _Problem, w: np.ndarray) -> Tuple[np.ndarray, float, float]:
    pseudo, targets = problem.pseudo_step(w)
    before = problem.objective(w, pseudo)
    w_next = problem.refit(targets)
    return w_next, before, problem.objective(w_next, pseudo)


def fixed_point_gap(
    variant: Union[Variant, str],
    w: VectorLike,
    X_lab: MatrixLike,
    y: VectorLike,
    X_unl: MatrixLike,
    encoding: LabelEncoding = LabelEncoding(),
    ridge: RidgeConfig = RidgeConfig(),
) -> float:
    """Relative objective change caused by one more BCD iteration from ``w``."""
    _, before, after = bcd_step(variant, w, X_lab, y, X_unl, encoding, ridge)
    return abs(before - after) / max(abs(before), _TINY)


# ----------------------------------------------------------------------------
# Local minima
# ----------------------------------------------------------------------------


@dataclass(eq=False)
class LocalMinimum:
    weights: np.ndarray
    objective: float
    basin_count: int
    fixed_point_gap: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "weights": self.weights.tolist(),
            "objective": self.objective,
            "basin_count": self.basin_count,
            "fixed_point_gap": self.fixed_point_gap,
        }


@dataclass(eq=False)
class MinimaReport:
    """Distinct BCD fixed points reached from random restarts.

    ``n_runs`` counts the random restarts plus the supervised-initialized run;
    the basin counts sum to ``n_runs``.
    """

    variant: Variant
    distinct_minima: List[LocalMinimum]
    n_restarts: int
    n_runs: int
    dedup_tolerance: float
    weight_tolerance: float
    seed: int
    n_unconverged: int = 0

    @property
    def n_distinct(self) -> int:
        return len(self.distinct_minima)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "variant": self.variant.value,
            "n_distinct": self.n_distinct,
            "n_restarts": self.n_restarts,
            "n_runs": self.n_runs,
            "n_unconverged": self.n_unconverged,
            "dedup_tolerance": self.dedup_tolerance,
            "weight_tolerance": self.weight_tolerance,
            "seed": self.seed,
            "distinct_minima": [m.to_dict() for m in self.distinct_minima],
        }


def _polish_soft(problem: _Problem, w: np.ndarray) -> np.ndarray:
    """Solve the active-set system of a soft-label solution exactly.

    Unlabeled objects whose decision value lies strictly inside the encoding
    interval have zero residual at a fixed point, so the fixed point is the
    ridge fit on the labeled objects plus the clamped unlabeled objects. The
    exact solution is kept only if it verifies as a fixed point.
    """
    A, _ = _as_matrix(problem.X_lab)
    B, _ = _as_matrix(problem.X_unl)
    d = B @ w
    lo, hi = problem.encoding.lo(), problem.encoding.hi()
    clamped = (d <= lo) | (d >= hi)
    design = np.vstack([A, B[clamped]])
    if isinstance(problem.X_lab, FeatureMatrix):
        design = FeatureMatrix(design, problem.X_lab.has_intercept_column)
    targets = np.concatenate([problem.y, np.clip(d, lo, hi)[clamped]])
    try:
        exact = fit_ridge(design, targets, problem.ridge)
    except SelfLearnError:
        return w

    _, before, after = _step(problem, exact)
    current = problem.objective(w, problem.pseudo_step(w)[0])
    gap = abs(before - after) / max(abs(before), _TINY)
    if gap <= FIXED_POINT_TOLERANCE and before <= current + _MONOTONE_SLACK * max(1.0, current):
        return exact
    return w


def enumerate_local_minima(
    variant: Union[Variant, str],
    X_lab: MatrixLike,
    y: VectorLike,
    X_unl: MatrixLike,
    encoding: LabelEncoding = LabelEncoding(),
    cfg: BcdConfig = BcdConfig(),
    n_restarts: int = 50,
    dedup_tolerance: float = 1e-6,
    seed: int = 0,
    *,
    weight_tolerance: float = 1e-4,
    jobs: int = 1,
) -> MinimaReport:
    """Run BCD from random pseudo-labels and collect the distinct fixed points.

    Restart ``i`` draws its initial pseudo-labels from its own stream derived
    from ``(seed, i)``: u_j uniform on the encoding interval (soft) or q_j
    Bernoulli(0.5) (hard). One extra run starts from the supervised fit.
    Solutions are merged when their objectives agree within
    ``dedup_tolerance`` (relative) and their weights within
    ``weight_tolerance`` (Euclidean).
    """
    variant = Variant(variant)
    if int(n_restarts) < 1:
        raise ConfigError(f"n_restarts must be >= 1, got {n_restarts}")
    tight = BcdConfig(
        max_iterations=max(int(cfg.max_iterations), FIXED_POINT_MAX_ITERATIONS),
        objective_tolerance=min(cfg.objective_tolerance, FIXED_POINT_TOLERANCE),
        ridge=cfg.ridge,
    )
    problem = _Problem(variant, X_lab, y, X_unl, encoding, cfg.ridge)

    def run(index: int) -> Tuple[np.ndarray, float, bool, float]:
        try:
            if index == 0:
                initial = None
            else:
                rng = rng_for(seed, "restart", index)
                if variant is Variant.SOFT_LABEL:
                    initial = rng.uniform(encoding.lo(), encoding.hi(), problem.n_unlabeled)
                else:
                    initial = rng.integers(0, 2, problem.n_unlabeled).astype(float)
            result = run_bcd(variant, X_lab, y, X_unl, encoding, tight, initial_pseudo=initial)
            w = result.weights
            if variant is Variant.SOFT_LABEL:
                w = _polish_soft(problem, w)
            _, objective, after = _step(problem, w)
        except SelfLearnError as exc:
            raise type(exc)(f"restart {index}: {exc}") from exc
        gap = abs(objective - after) / max(abs(objective), _TINY)
        return w, objective, result.converged, gap

    n_runs = int(n_restarts) + 1
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(run, range(n_runs)))
    else:
        outcomes = [run(i) for i in range(n_runs)]

    outcomes.sort(key=lambda o: (o[1], tuple(o[0].tolist())))
    minima: List[LocalMinimum] = []
    for w, objective, _, gap in outcomes:
        for minimum in minima:
            scale = max(abs(objective), abs(minimum.objective), _TINY)
            if (
                abs(objective - minimum.objective) <= dedup_tolerance * scale
                and np.linalg.norm(w - minimum.weights) <= weight_tolerance
            ):
                minimum.basin_count += 1
                break
        else:
            minima.append(LocalMinimum(w, objective, 1, gap))

    return MinimaReport(
        variant=variant,
        distinct_minima=minima,
        n_restarts=int(n_restarts),
        n_runs=n_runs,
        dedup_tolerance=dedup_tolerance,
        weight_tolerance=weight_tolerance,
        seed=seed,
        n_unconverged=sum(1 for o in outcomes if not o[2]),
    )
