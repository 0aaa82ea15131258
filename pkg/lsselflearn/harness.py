"""Experiment protocols.

- learning curves over the number of unlabeled objects at a fixed labeled
  count (labeled and test blocks fixed within a repeat, unlabeled sets nested);
- learning curves over the labeled fraction at a fixed training size (one test
  holdout per repeat, labeled sets nested);
- seed sweeps of the small two-Gaussian example;
- local-minima studies of both self-learning variants.

Repeats are independent work units; rows are sorted by key before they are
returned, so results do not depend on how many run concurrently.
"""

import dataclasses
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple, TypeVar, Union

import numpy as np
import pandas as pd

from .config import (
    as_bool,
    as_int,
    config_field,
    float_pair,
    float_tuple,
    int_tuple,
    optional_str_pair,
    str_tuple,
)
from .data import (
    Dataset,
    ExperimentSplit,
    GaussianConfig,
    class_covering_permutation,
    fraction_sizes,
    generate_1d_example,
    generate_two_gaussians,
    make_split,
    parse_floats,
    split_from_indices,
)
from .errors import (
    ConfigError,
    DataError,
    InvariantViolation,
    ResultsFormatError,
    SelfLearnError,
    SplitError,
)
from .model import (
    AVERAGE_LOSS_TEST,
    ERROR,
    MEASURES,
    FeatureMatrix,
    LabelEncoding,
    RidgeConfig,
    add_intercept,
    average_quadratic_loss,
    decision_boundary_1d,
    decision_values,
    error_rate,
    fit_ridge,
    objective_supervised,
    predict,
)
from .selflearning import BcdConfig, MinimaReport, Variant, enumerate_local_minima, run_bcd
from .seeding import derive_seed
from .sources import resolve_dataset

logger = logging.getLogger(__name__)

COLUMNS = ("dataset", "classifier", "repeat", "size_role", "size", "measure", "value")
KEY = COLUMNS[:-1]
N_UNLABELED = "n_unlabeled"
LABELED_FRACTION = "labeled_fraction"
DEFAULT_GROUP_KEYS = ("dataset", "classifier", "size_role", "size", "measure")
FLOAT_FORMAT = "%.17g"

DEFAULT_DATASET = "builtin:gaussians?d=2&separation=2&prior=0.5&n=2000"

R = TypeVar("R")


class ClassifierKind(str, Enum):
    SUPERVISED = "supervised"
    SELF_LEARNING_SOFT = "self_learning_soft"
    SELF_LEARNING_HARD = "self_learning_hard"
    ORACLE = "oracle"


_VARIANTS = {
    ClassifierKind.SELF_LEARNING_SOFT: Variant.SOFT_LABEL,
    ClassifierKind.SELF_LEARNING_HARD: Variant.HARD_LABEL,
}


@dataclass(frozen=True)
class FitOutcome:
    weights: np.ndarray
    objective: float
    iterations: int
    converged: bool


@dataclass(frozen=True)
class ClassifierSpec:
    """One member of the roster.

    The oracle fits supervised least squares on labeled plus unlabeled
    objects using the true labels of the unlabeled ones.
    """

    kind: ClassifierKind
    ridge: RidgeConfig = field(default_factory=RidgeConfig)
    bcd: BcdConfig = field(default_factory=BcdConfig)

    @property
    def name(self) -> str:
        return ClassifierKind(self.kind).value

    def fit_detailed(self, split: ExperimentSplit) -> FitOutcome:
        kind = ClassifierKind(self.kind)
        if kind in _VARIANTS:
            result = run_bcd(
                _VARIANTS[kind],
                split.labeled_X,
                split.labeled_y,
                split.unlabeled_X,
                split.encoding,
                dataclasses.replace(self.bcd, ridge=self.ridge),
            )
            return FitOutcome(result.weights, result.objective, result.iterations, result.converged)

        if kind is ClassifierKind.ORACLE:
            X = FeatureMatrix(
                np.vstack([split.labeled_X.values, split.unlabeled_X.values]), True
            )
            y = np.concatenate([split.labeled_y, split.unlabeled_truth])
        else:
            X, y = split.labeled_X, split.labeled_y
        w = fit_ridge(X, y, self.ridge)
        return FitOutcome(w, objective_supervised(w, X, y, self.ridge), 0, True)

    def fit(self, split: ExperimentSplit) -> np.ndarray:
        return self.fit_detailed(split).weights


def default_roster(
    ridge: RidgeConfig = RidgeConfig(), bcd: BcdConfig = BcdConfig()
) -> List[ClassifierSpec]:
    return [ClassifierSpec(kind, ridge, bcd) for kind in ClassifierKind]


def compute_measure(measure: str, w: np.ndarray, split: ExperimentSplit) -> float:
    if measure == ERROR:
        return error_rate(predict(w, split.test_X, split.encoding), split.test_y)
    if measure == AVERAGE_LOSS_TEST:
        return average_quadratic_loss(w, split.test_X, split.test_y)
    raise ConfigError(f"unknown measure {measure!r}; expected one of {list(MEASURES)}")


@dataclass(frozen=True)
class EvaluationRow:
    classifier: str
    measure: str
    value: float
    error: Optional[str] = None


def evaluate_classifiers(
    split: ExperimentSplit,
    roster: Sequence[ClassifierSpec],
    measures: Sequence[str] = MEASURES,
) -> List[EvaluationRow]:
    """Fit every roster member on the same split and score it on the test block.

    A failed fit yields missing values tagged with the error message instead
    of an exception.
    """
    if not roster:
        raise ConfigError("classifier roster is empty")
    for measure in measures:
        if measure not in MEASURES:
            raise ConfigError(f"unknown measure {measure!r}; expected one of {list(MEASURES)}")

    rows: List[EvaluationRow] = []
    for spec in roster:
        try:
            w = spec.fit(split)
        except SelfLearnError as exc:
            logger.warning("%s failed on split %s: %s", spec.name, split.fingerprint, exc)
            rows.extend(EvaluationRow(spec.name, m, float("nan"), str(exc)) for m in measures)
            continue
        for measure in measures:
            try:
                rows.append(EvaluationRow(spec.name, measure, compute_measure(measure, w, split)))
            except SelfLearnError as exc:
                rows.append(EvaluationRow(spec.name, measure, float("nan"), str(exc)))
    return rows


# ----------------------------------------------------------------------------
# Results tables
# ----------------------------------------------------------------------------


class ResultsTable:
    """Long-format experiment records, one row per key.

    ``fingerprints`` maps ``"<repeat>:<size>"`` to the fingerprint of the split
    all classifiers of that group were evaluated on; ``failures`` lists the
    rows whose fit failed.
    """

    def __init__(
        self,
        frame: pd.DataFrame,
        fingerprints: Optional[Dict[str, str]] = None,
        failures: Optional[List[Dict[str, Any]]] = None,
    ):
        self.frame = _normalize(frame)
        self.fingerprints = dict(fingerprints or {})
        self.failures = list(failures or [])

    @classmethod
    def from_records(cls, records: Iterable[Dict[str, Any]], **kwargs: Any) -> "ResultsTable":
        return cls(pd.DataFrame(list(records), columns=list(COLUMNS)), **kwargs)

    def __len__(self) -> int:
        return len(self.frame)

    def equals(self, other: "ResultsTable") -> bool:
        return self.frame.equals(other.frame)

    def filter_measures(self, measures: Sequence[str]) -> "ResultsTable":
        keep = self.frame["measure"].isin(list(measures))
        failures = [f for f in self.failures if f["measure"] in measures]
        return ResultsTable(self.frame[keep], self.fingerprints, failures)


def _normalize(frame: pd.DataFrame) -> pd.DataFrame:
    missing = [c for c in COLUMNS if c not in frame.columns]
    if missing:
        raise ResultsFormatError(f"results table lacks columns {missing}")
    frame = frame[list(COLUMNS)].copy()
    for column in ("dataset", "classifier", "size_role", "measure"):
        frame[column] = frame[column].astype(str)
    frame["repeat"] = frame["repeat"].astype(np.int64)
    frame["size"] = frame["size"].astype(float)
    frame["value"] = frame["value"].astype(float)
    frame = frame.sort_values(list(KEY), kind="mergesort").reset_index(drop=True)

    if frame.duplicated(list(KEY)).any():
        first = frame[frame.duplicated(list(KEY))].iloc[0]
        raise InvariantViolation(f"duplicate results key {tuple(first[list(KEY)])}")
    error = frame.loc[frame["measure"] == ERROR, "value"].dropna()
    if ((error < 0) | (error > 1)).any():
        raise InvariantViolation("Error values must lie in [0, 1]")
    loss = frame.loc[frame["measure"] == AVERAGE_LOSS_TEST, "value"].dropna()
    if (loss < 0).any():
        raise InvariantViolation("AverageLossTest values must be >= 0")
    return frame


def write_results_csv(table: ResultsTable, path: Union[str, Path]) -> Path:
    """Write the fixed-schema results CSV, rows sorted by key."""
    path = Path(path)
    table.frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.info("Wrote %d result rows to %s", len(table), path)
    return path


def read_results_csv(path: Union[str, Path]) -> ResultsTable:
    path = Path(path)
    try:
        with path.open(encoding="utf-8") as handle:
            header = handle.readline().rstrip("\r\n")
    except OSError as exc:
        raise ResultsFormatError(f"{path}: cannot read results file ({exc})") from exc
    if header != ",".join(COLUMNS):
        raise ResultsFormatError(f"{path}, line 1: expected header {','.join(COLUMNS)!r}")
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skip_blank_lines=False)
    except pd.errors.ParserError as exc:
        raise ResultsFormatError(f"{path}: {exc}") from exc
    frame = frame.fillna("")

    # row i of the frame is physical line i + 2
    blank = (frame == "").all(axis=1).to_numpy()
    if blank.any():
        raise ResultsFormatError(f"{path}, line {int(np.flatnonzero(blank)[0]) + 2}: blank line")

    for column, integral in (("repeat", True), ("size", False), ("value", False)):
        raw = frame[column]
        parsed = parse_floats(raw)
        bad = parsed.isna() & ((raw != "") | (column != "value"))
        if integral:
            bad |= parsed.notna() & (parsed % 1 != 0)
        if bad.any():
            row = int(np.flatnonzero(bad.to_numpy())[0])
            raise ResultsFormatError(
                f"{path}, line {row + 2}: bad {column} value {raw.iloc[row]!r}"
            )
        frame[column] = parsed
    return ResultsTable(frame)


def summarize(
    table: Union[ResultsTable, pd.DataFrame],
    group_keys: Sequence[str] = DEFAULT_GROUP_KEYS,
) -> pd.DataFrame:
    """Mean, sample standard deviation and count of the values of each group.

    Missing values do not count; a group of one reports std 0.
    """
    frame = table.frame if isinstance(table, ResultsTable) else table
    if frame.empty:
        raise DataError("cannot summarize an empty results table")
    unknown = [k for k in group_keys if k not in KEY]
    if unknown:
        raise ConfigError(f"unknown group keys {unknown}; expected a subset of {list(KEY)}")
    grouped = frame.groupby(list(group_keys), sort=True)["value"]
    summary = grouped.agg(mean="mean", std="std", count="count").reset_index()
    summary["std"] = summary["std"].where(summary["count"] > 1, 0.0)
    summary["count"] = summary["count"].astype(np.int64)
    return summary


def write_summary_csv(summary: pd.DataFrame, path: Union[str, Path]) -> Path:
    path = Path(path)
    summary.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.info("Wrote summary of %d groups to %s", len(summary), path)
    return path


# ----------------------------------------------------------------------------
# Learning curves
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class CurveConfig:
    """Settings of both learning-curve protocols.

    ``l_fixed``, ``u_grid`` and ``test_size`` drive the unlabeled-count curve;
    ``fractions`` and ``test_fraction`` drive the labeled-fraction curve.
    """

    dataset: str = config_field(DEFAULT_DATASET, str)
    label_column: str = config_field("class", str)
    classes: Optional[Tuple[str, str]] = config_field(None, optional_str_pair)
    encoding: Tuple[float, float] = config_field((-1.0, 1.0), float_pair)
    l_fixed: int = config_field(10, as_int)
    u_grid: Tuple[int, ...] = config_field((0, 2, 8, 32, 128, 512), int_tuple)
    test_size: int = config_field(1000, as_int)
    fractions: Tuple[float, ...] = config_field(
        (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0), float_tuple
    )
    test_fraction: float = config_field(0.2, float)
    repeats: int = config_field(250, as_int)
    master_seed: int = config_field(1, as_int)
    measures: Tuple[str, ...] = config_field(MEASURES, str_tuple)
    standardize: bool = config_field(True, as_bool)
    ridge_lambda: float = config_field(0.0, float)
    penalize_intercept: bool = config_field(False, as_bool)
    max_iterations: int = config_field(500, as_int)
    objective_tolerance: float = config_field(1e-8, float)

    @property
    def label_encoding(self) -> LabelEncoding:
        return LabelEncoding(*self.encoding)

    @property
    def ridge(self) -> RidgeConfig:
        return RidgeConfig(self.ridge_lambda, self.penalize_intercept)

    @property
    def bcd(self) -> BcdConfig:
        return BcdConfig(self.max_iterations, self.objective_tolerance, self.ridge)

    def validate(self, protocol: str) -> None:
        if self.repeats < 1:
            raise ConfigError(f"repeats must be >= 1, got {self.repeats}")
        for measure in self.measures:
            if measure not in MEASURES:
                raise ConfigError(f"unknown measure {measure!r}; expected one of {list(MEASURES)}")
        LabelEncoding(*self.encoding)
        BcdConfig(self.max_iterations, self.objective_tolerance, self.ridge)
        if protocol == N_UNLABELED:
            _check_grid("u_grid", self.u_grid)
            if self.u_grid[0] < 0:
                raise ConfigError("u_grid values must be >= 0")
            if self.l_fixed < 2:
                raise ConfigError(f"l_fixed must be >= 2, got {self.l_fixed}")
            if self.test_size < 1:
                raise ConfigError(f"test_size must be >= 1, got {self.test_size}")
        elif protocol == LABELED_FRACTION:
            _check_grid("fractions", self.fractions)
            if not (0.0 < self.fractions[0] and self.fractions[-1] <= 1.0):
                raise ConfigError("fractions must lie in (0, 1]")
            if not 0.0 < self.test_fraction < 1.0:
                raise ConfigError(f"test_fraction must lie in (0, 1), got {self.test_fraction}")
        else:
            raise ConfigError(f"unknown protocol {protocol!r}")


def _check_grid(name: str, grid: Sequence[float]) -> None:
    if not grid:
        raise ConfigError(f"{name} must not be empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError(f"{name} must be strictly increasing, got {list(grid)}")


def _map(fn: Callable[[int], R], items: Sequence[int], jobs: int) -> List[R]:
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


def _load(cfg: CurveConfig, dataset: Optional[Dataset], cache_dir: Optional[Path]) -> Dataset:
    if dataset is not None:
        return dataset
    return resolve_dataset(
        cfg.dataset,
        label_column=cfg.label_column,
        classes=cfg.classes,
        seed=derive_seed(cfg.master_seed, "dataset"),
        cache_dir=cache_dir,
    )


def _check_well_posed(cfg: CurveConfig, n_labeled: int, ds: Dataset) -> None:
    if cfg.ridge_lambda == 0 and n_labeled <= ds.d:
        raise ConfigError(
            f"with lambda = 0 the labeled count ({n_labeled}) must exceed the "
            f"dimensionality of {ds.name!r} ({ds.d})"
        )


RepeatOutcome = Tuple[List[Dict[str, Any]], Dict[str, str], List[Dict[str, Any]]]


def _evaluate_into(
    outcome: RepeatOutcome,
    split: ExperimentSplit,
    roster: Sequence[ClassifierSpec],
    repeat: int,
    size_role: str,
    size: float,
) -> None:
    records, fingerprints, failures = outcome
    fingerprints[f"{repeat}:{size:g}"] = split.fingerprint
    for row in evaluate_classifiers(split, roster, MEASURES):
        records.append(
            {
                "dataset": split.dataset,
                "classifier": row.classifier,
                "repeat": repeat,
                "size_role": size_role,
                "size": float(size),
                "measure": row.measure,
                "value": row.value,
            }
        )
        if row.error is not None:
            failures.append(
                {
                    "repeat": repeat,
                    "size": float(size),
                    "classifier": row.classifier,
                    "measure": row.measure,
                    "error": row.error,
                }
            )


def _collect(outcomes: List[RepeatOutcome], measures: Sequence[str]) -> ResultsTable:
    records: List[Dict[str, Any]] = []
    fingerprints: Dict[str, str] = {}
    failures: List[Dict[str, Any]] = []
    for repeat_records, repeat_fingerprints, repeat_failures in outcomes:
        records.extend(repeat_records)
        fingerprints.update(repeat_fingerprints)
        failures.extend(repeat_failures)
    table = ResultsTable.from_records(records, fingerprints=fingerprints, failures=failures)
    return table.filter_measures(measures)


def run_unlabeled_curve(
    cfg: CurveConfig,
    *,
    dataset: Optional[Dataset] = None,
    jobs: int = 1,
    cache_dir: Optional[Path] = None,
) -> ResultsTable:
    """Learning curve over the number of unlabeled objects at fixed L.

    Within a repeat the labeled and test blocks are fixed and the unlabeled
    sets are prefixes of one pool. Standardization statistics of a repeat use
    the labeled block plus the largest unlabeled prefix.
    """
    cfg.validate(N_UNLABELED)
    ds = _load(cfg, dataset, cache_dir)
    _check_well_posed(cfg, cfg.l_fixed, ds)
    l, t, u_max = cfg.l_fixed, cfg.test_size, cfg.u_grid[-1]
    if l + t + u_max > ds.rows:
        raise SplitError(
            f"dataset {ds.name!r} has {ds.rows} rows; the curve needs "
            f"{l} labeled + {t} test + {u_max} unlabeled"
        )
    roster = default_roster(cfg.ridge, cfg.bcd)

    def one_repeat(repeat: int) -> RepeatOutcome:
        seed = derive_seed(cfg.master_seed, "repeat", repeat)
        try:
            perm = class_covering_permutation(ds.labels, (0, l), seed)
        except SplitError as exc:
            raise SplitError(f"repeat {repeat}: {exc}") from exc
        labeled, test, pool = perm[:l], perm[l:l + t], perm[l + t:l + t + u_max]
        statistics_index = np.concatenate([labeled, pool])
        outcome: RepeatOutcome = ([], {}, [])
        for u in cfg.u_grid:
            split = split_from_indices(
                ds, labeled, pool[:u], test, cfg.label_encoding, cfg.standardize, statistics_index
            )
            _evaluate_into(outcome, split, roster, repeat, N_UNLABELED, u)
        return outcome

    return _collect(_map(one_repeat, range(cfg.repeats), jobs), cfg.measures)


def run_fraction_curve(
    cfg: CurveConfig,
    *,
    dataset: Optional[Dataset] = None,
    jobs: int = 1,
    cache_dir: Optional[Path] = None,
) -> ResultsTable:
    """Learning curve over the labeled fraction at a fixed training size.

    Each repeat holds out one test block and labels growing prefixes of the
    remaining rows; the rest of them stay unlabeled.
    """
    cfg.validate(LABELED_FRACTION)
    ds = _load(cfg, dataset, cache_dir)
    sizes = [fraction_sizes(ds.rows, cfg.test_fraction, f) for f in cfg.fractions]
    n_test = sizes[0][0]
    smallest = sizes[0][1]
    if smallest < 2:
        raise SplitError(
            f"labeled fraction {cfg.fractions[0]} of {ds.rows - n_test} rows "
            f"leaves {smallest} labeled objects"
        )
    _check_well_posed(cfg, smallest, ds)
    roster = default_roster(cfg.ridge, cfg.bcd)

    def one_repeat(repeat: int) -> RepeatOutcome:
        seed = derive_seed(cfg.master_seed, "repeat", repeat)
        try:
            perm = class_covering_permutation(ds.labels, (n_test, n_test + smallest), seed)
        except SplitError as exc:
            raise SplitError(f"repeat {repeat}: {exc}") from exc
        test, train = perm[:n_test], perm[n_test:]
        outcome: RepeatOutcome = ([], {}, [])
        for fraction, (_, n_labeled, _) in zip(cfg.fractions, sizes):
            split = split_from_indices(
                ds,
                train[:n_labeled],
                train[n_labeled:],
                test,
                cfg.label_encoding,
                cfg.standardize,
            )
            _evaluate_into(outcome, split, roster, repeat, LABELED_FRACTION, fraction)
        return outcome

    return _collect(_map(one_repeat, range(cfg.repeats), jobs), cfg.measures)


# ----------------------------------------------------------------------------
# Seed sweep
# ----------------------------------------------------------------------------

SWEEP_COLUMNS = ("seed", "classifier", "error", "single_class")


@dataclass(frozen=True)
class SweepConfig:
    """Small two-Gaussian example regenerated for every seed."""

    d: int = config_field(2, as_int)
    mean_separation: float = config_field(2.0, float)
    class_prior: float = config_field(0.5, float)
    n_labeled: int = config_field(4, as_int)
    n_unlabeled: int = config_field(200, as_int)
    n_test: int = config_field(1000, as_int)
    seeds: Tuple[int, ...] = config_field(tuple(range(50)), int_tuple)
    encoding: Tuple[float, float] = config_field((-1.0, 1.0), float_pair)
    standardize: bool = config_field(False, as_bool)
    ridge_lambda: float = config_field(0.0, float)
    penalize_intercept: bool = config_field(False, as_bool)
    max_iterations: int = config_field(500, as_int)
    objective_tolerance: float = config_field(1e-8, float)

    @property
    def gaussian(self) -> GaussianConfig:
        return GaussianConfig(self.d, self.mean_separation, self.class_prior)

    @property
    def ridge(self) -> RidgeConfig:
        return RidgeConfig(self.ridge_lambda, self.penalize_intercept)

    @property
    def bcd(self) -> BcdConfig:
        return BcdConfig(self.max_iterations, self.objective_tolerance, self.ridge)


def run_seed_sweep(
    cfg: SweepConfig, seeds: Optional[Sequence[int]] = None, jobs: int = 1
) -> pd.DataFrame:
    """Per seed: regenerate the example, fit supervised / soft / hard and record
    each test error and whether all test predictions fall in one class."""
    seeds = list(cfg.seeds if seeds is None else seeds)
    if not seeds:
        raise ConfigError("the seed list is empty")
    encoding = LabelEncoding(*cfg.encoding)
    n = cfg.n_labeled + cfg.n_unlabeled + cfg.n_test
    roster = [
        ClassifierSpec(kind, cfg.ridge, cfg.bcd)
        for kind in (
            ClassifierKind.SUPERVISED,
            ClassifierKind.SELF_LEARNING_SOFT,
            ClassifierKind.SELF_LEARNING_HARD,
        )
    ]

    def one_seed(position: int) -> List[Dict[str, Any]]:
        seed = seeds[position]
        try:
            ds = generate_two_gaussians(cfg.gaussian, n=n, seed=seed, name="example")
            split = make_split(
                ds, cfg.n_labeled, cfg.n_unlabeled, cfg.n_test, encoding, cfg.standardize, seed
            )
            rows = []
            for spec in roster:
                predicted = predict(spec.fit(split), split.test_X, encoding)
                rows.append(
                    {
                        "seed": seed,
                        "classifier": spec.name,
                        "error": error_rate(predicted, split.test_y),
                        "single_class": bool(np.unique(predicted).size == 1),
                    }
                )
        except SelfLearnError as exc:
            raise type(exc)(f"seed {seed}: {exc}") from exc
        return rows

    per_seed = _map(one_seed, range(len(seeds)), jobs)
    return pd.DataFrame([row for rows in per_seed for row in rows], columns=list(SWEEP_COLUMNS))


def write_sweep_csv(frame: pd.DataFrame, path: Union[str, Path]) -> Path:
    path = Path(path)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.info("Wrote %d seed-sweep rows to %s", len(frame), path)
    return path


# ----------------------------------------------------------------------------
# Local minima
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class MinimaConfig:
    """One seeded instance on which both variants are restarted repeatedly."""

    dataset: str = config_field("builtin:gaussians?d=2&separation=2&prior=0.5&n=200", str)
    label_column: str = config_field("class", str)
    classes: Optional[Tuple[str, str]] = config_field(None, optional_str_pair)
    encoding: Tuple[float, float] = config_field((-1.0, 1.0), float_pair)
    n_labeled: int = config_field(10, as_int)
    n_unlabeled: int = config_field(50, as_int)
    variants: Tuple[str, ...] = config_field(
        (Variant.SOFT_LABEL.value, Variant.HARD_LABEL.value), str_tuple
    )
    restarts: int = config_field(50, as_int)
    seed: int = config_field(1, as_int)
    dedup_tolerance: float = config_field(1e-6, float)
    weight_tolerance: float = config_field(1e-4, float)
    standardize: bool = config_field(True, as_bool)
    ridge_lambda: float = config_field(0.0, float)
    penalize_intercept: bool = config_field(False, as_bool)
    max_iterations: int = config_field(500, as_int)
    objective_tolerance: float = config_field(1e-8, float)

    @property
    def ridge(self) -> RidgeConfig:
        return RidgeConfig(self.ridge_lambda, self.penalize_intercept)

    @property
    def bcd(self) -> BcdConfig:
        return BcdConfig(self.max_iterations, self.objective_tolerance, self.ridge)


def minima_split(
    cfg: MinimaConfig, dataset: Optional[Dataset] = None, cache_dir: Optional[Path] = None
) -> ExperimentSplit:
    ds = dataset
    if ds is None:
        ds = resolve_dataset(
            cfg.dataset,
            label_column=cfg.label_column,
            classes=cfg.classes,
            seed=derive_seed(cfg.seed, "dataset"),
            cache_dir=cache_dir,
        )
    return make_split(
        ds,
        cfg.n_labeled,
        cfg.n_unlabeled,
        0,
        LabelEncoding(*cfg.encoding),
        cfg.standardize,
        derive_seed(cfg.seed, "split"),
    )


def run_minima(
    cfg: MinimaConfig,
    *,
    dataset: Optional[Dataset] = None,
    jobs: int = 1,
    cache_dir: Optional[Path] = None,
) -> Dict[str, MinimaReport]:
    """Enumerate the local minima of each configured variant on one instance."""
    try:
        variants = [Variant(v) for v in cfg.variants]
    except ValueError as exc:
        raise ConfigError(f"unknown variant in {list(cfg.variants)}") from exc
    split = minima_split(cfg, dataset, cache_dir)
    return {
        variant.value: enumerate_local_minima(
            variant,
            split.labeled_X,
            split.labeled_y,
            split.unlabeled_X,
            split.encoding,
            cfg.bcd,
            cfg.restarts,
            cfg.dedup_tolerance,
            cfg.seed,
            weight_tolerance=cfg.weight_tolerance,
            jobs=jobs,
        )
        for variant in variants
    }


# ----------------------------------------------------------------------------
# One-dimensional example
# ----------------------------------------------------------------------------


@dataclass(eq=False)
class Example1D:
    """Supervised fit and the first soft / hard self-learning step."""

    labeled_positions: np.ndarray
    labeled_targets: np.ndarray
    unlabeled_positions: np.ndarray
    encoding: LabelEncoding
    weights: Dict[str, np.ndarray]
    boundaries: Dict[str, float]
    pseudo_targets: Dict[str, np.ndarray]

    @property
    def has_unlabeled(self) -> bool:
        return self.unlabeled_positions.size > 0

    def boundary_shift(self, classifier: str) -> float:
        return abs(self.boundaries[classifier] - self.boundaries["supervised"])

    def to_dict(self) -> Dict[str, Any]:
        classifiers = {}
        for name, w in self.weights.items():
            entry = {"weights": w.tolist(), "boundary": self.boundaries[name]}
            if name != "supervised":
                entry["boundary_shift"] = self.boundary_shift(name)
                entry["pseudo_targets"] = self.pseudo_targets[name].tolist()
            classifiers[name] = entry
        return {
            "encoding": [self.encoding.m, self.encoding.n],
            "labeled": {
                "positions": self.labeled_positions.tolist(),
                "targets": self.labeled_targets.tolist(),
            },
            "unlabeled": self.unlabeled_positions.tolist(),
            "classifiers": classifiers,
        }

    def plot_frame(self, grid_step: float = 0.1) -> pd.DataFrame:
        """Tidy plot data: position, role, classifier, decision value."""
        positions = np.concatenate([self.labeled_positions, self.unlabeled_positions])
        low, high = np.floor(positions.min()) - 1.0, np.ceil(positions.max()) + 1.0
        grid = np.round(np.arange(low, high + grid_step / 2, grid_step), 10)
        roles = [
            ("labeled", self.labeled_positions),
            ("unlabeled", self.unlabeled_positions),
            ("grid", grid),
        ]
        rows = []
        for name, w in self.weights.items():
            for role, xs in roles:
                values = decision_values(w, add_intercept(xs.reshape(-1, 1)))
                rows.extend(
                    {"position": x, "role": role, "classifier": name, "decision_value": v}
                    for x, v in zip(xs.tolist(), values.tolist())
                )
        return pd.DataFrame(rows, columns=["position", "role", "classifier", "decision_value"])


def run_example_1d(
    unlabeled_positions: Sequence[float] = (-1.0, 4.0),
    labeled_positions: Tuple[float, float] = (-1.0, 1.0),
    encoding: LabelEncoding = LabelEncoding(),
    ridge: RidgeConfig = RidgeConfig(),
) -> Example1D:
    """Supervised boundary and the boundaries after one self-learning step."""
    ds, unlabeled = generate_1d_example(labeled_positions, unlabeled_positions=unlabeled_positions)
    X_lab = add_intercept(ds.features)
    X_unl = add_intercept(unlabeled)
    y = ds.targets(encoding)

    weights = {"supervised": fit_ridge(X_lab, y, ridge)}
    pseudo: Dict[str, np.ndarray] = {}
    if unlabeled.size:
        first_step = BcdConfig(max_iterations=1, ridge=ridge)
        for name, variant in (("soft", Variant.SOFT_LABEL), ("hard", Variant.HARD_LABEL)):
            result = run_bcd(variant, X_lab, y, X_unl, encoding, first_step)
            weights[name] = result.weights
            pseudo[name] = result.pseudo_targets
    return Example1D(
        labeled_positions=ds.features[:, 0].copy(),
        labeled_targets=y,
        unlabeled_positions=unlabeled[:, 0].copy(),
        encoding=encoding,
        weights=weights,
        boundaries={k: decision_boundary_1d(w, encoding) for k, w in weights.items()},
        pseudo_targets=pseudo,
    )
