"""Datasets, synthetic generators, CSV ingestion and seeded splits."""

import hashlib
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Hashable, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .errors import (
    ConfigError,
    DataError,
    DatasetNotFoundError,
    DomainError,
    EncodingError,
    MissingColumnError,
    MissingValueError,
    NonNumericCellError,
    ShapeError,
    SplitError,
    TooManyClassesError,
)
from .model import FeatureMatrix, LabelEncoding, encode_labels
from .seeding import rng_for

logger = logging.getLogger(__name__)

DEFAULT_CLASSES = ("neg", "pos")
MAX_LABELED_RETRIES = 100


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix (no intercept column) with class symbols.

    ``classes[0]`` is encoded as m and ``classes[1]`` as n.
    """

    name: str
    features: np.ndarray
    labels: np.ndarray
    classes: Tuple[Hashable, Hashable] = DEFAULT_CLASSES

    def __post_init__(self):
        features = np.array(self.features, dtype=float)
        labels = np.array(list(self.labels), dtype=object)
        if features.ndim != 2:
            raise ShapeError(f"dataset {self.name!r}: features must be 2-D")
        if not np.all(np.isfinite(features)):
            raise DataError(f"dataset {self.name!r}: feature values must be finite")
        if features.shape[0] != labels.shape[0]:
            raise ShapeError(
                f"dataset {self.name!r}: {features.shape[0]} rows but {labels.shape[0]} labels"
            )
        classes = tuple(self.classes)
        if len(classes) != 2 or classes[0] == classes[1]:
            raise EncodingError(f"dataset {self.name!r}: need two distinct classes, got {classes}")
        present = sorted(set(labels.tolist()), key=str)
        if len(present) > 2:
            raise TooManyClassesError(
                f"dataset {self.name!r}: {len(present)} classes present: {present}"
            )
        unknown = [s for s in present if s not in classes]
        if unknown:
            raise EncodingError(f"dataset {self.name!r}: unmapped class symbol {unknown[0]!r}")
        if len(present) < 2:
            raise DataError(f"dataset {self.name!r}: both classes must be present, found {present}")
        features.setflags(write=False)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "classes", classes)

    @property
    def rows(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def targets(self, encoding: LabelEncoding) -> np.ndarray:
        return encode_labels(self.labels, encoding, self.classes)


@dataclass(frozen=True)
class GaussianConfig:
    """Two unit-covariance Gaussian classes separated along the first axis.

    ``class_prior`` is the probability of the second class.
    """

    d: int = 2
    mean_separation: float = 2.0
    class_prior: float = 0.5
    n_per_draw: int = 200

    def __post_init__(self):
        if self.d < 1:
            raise ConfigError(f"dimension must be >= 1, got {self.d}")
        if not self.mean_separation > 0:
            raise ConfigError(f"mean separation must be > 0, got {self.mean_separation}")
        if not 0.0 < self.class_prior < 1.0:
            raise ConfigError(f"class prior must lie in (0, 1), got {self.class_prior}")


def generate_two_gaussians(
    cfg: GaussianConfig = GaussianConfig(),
    n: Optional[int] = None,
    seed: int = 0,
    classes: Tuple[Hashable, Hashable] = DEFAULT_CLASSES,
    name: str = "gaussians",
) -> Dataset:
    """Draw a two-class dataset; the Bayes-optimal boundary is x_1 = 0."""
    n = cfg.n_per_draw if n is None else int(n)
    if n < 2:
        raise DomainError(f"need at least 2 objects, got {n}")
    rng = np.random.default_rng(seed)
    second = rng.random(n) < cfg.class_prior
    features = rng.standard_normal((n, cfg.d))
    features[:, 0] += np.where(second, cfg.mean_separation / 2.0, -cfg.mean_separation / 2.0)
    labels = np.where(second, classes[1], classes[0]).astype(object)
    return Dataset(name, features, labels, classes)


def generate_1d_example(
    labeled_positions: Tuple[float, float] = (-1.0, 1.0),
    labeled_classes: Tuple[Hashable, Hashable] = DEFAULT_CLASSES,
    unlabeled_positions: Sequence[float] = (-1.0, 4.0),
) -> Tuple[Dataset, np.ndarray]:
    """One-dimensional example: two labeled objects and a few unlabeled ones.

    Returns the labeled dataset and the raw unlabeled feature matrix.
    """
    if len(labeled_positions) != 2 or len(labeled_classes) != 2:
        raise DomainError("the example needs exactly two labeled objects")
    if labeled_classes[0] == labeled_classes[1]:
        raise DomainError(f"labeled objects must have distinct classes, got {labeled_classes}")
    ds = Dataset(
        "example-1d",
        np.asarray(labeled_positions, dtype=float).reshape(-1, 1),
        np.array(list(labeled_classes), dtype=object),
        tuple(labeled_classes),
    )
    return ds, np.asarray(list(unlabeled_positions), dtype=float).reshape(-1, 1)


# ----------------------------------------------------------------------------
# CSV
# ----------------------------------------------------------------------------


def parse_float(cell: str) -> float:
    """Correctly rounded float parse of one CSV cell; NaN when it is not a number."""
    try:
        return float(cell)
    except (TypeError, ValueError):
        return float("nan")


def parse_floats(column: pd.Series) -> pd.Series:
    return column.map(parse_float).astype(float)


def load_csv(
    path: Union[str, Path],
    label_column: str = "class",
    classes: Optional[Tuple[Hashable, Hashable]] = None,
    name: Optional[str] = None,
) -> Dataset:
    """Read a header-row CSV; every column but ``label_column`` is a feature.

    Without ``classes`` the two symbols are mapped in sorted order.
    """
    path = Path(path)
    if not path.is_file():
        raise DatasetNotFoundError(f"{path}: no such dataset file")
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise DataError(f"{path}: {exc}") from exc
    if label_column not in frame.columns:
        raise MissingColumnError(
            f"{path}: no column {label_column!r}; columns are {list(frame.columns)}"
        )
    frame = frame.fillna("")

    cells = frame.apply(lambda col: col.str.strip())
    blank = (cells == "").to_numpy()
    if blank.any():
        row, col = np.argwhere(blank)[0]
        raise MissingValueError(
            f"{path}: row {row + 1} (line {row + 2}), column {frame.columns[col]!r} is empty"
        )

    feature_columns = [c for c in frame.columns if c != label_column]
    numeric = cells[feature_columns].apply(parse_floats)
    bad = numeric.isna().to_numpy()
    if bad.any():
        row, col = np.argwhere(bad)[0]
        column = feature_columns[col]
        raise NonNumericCellError(
            f"{path}: row {row + 1} (line {row + 2}), column {column!r}: "
            f"{cells[column].iloc[row]!r} is not a number"
        )

    labels = cells[label_column].to_numpy(dtype=object)
    distinct = sorted(set(labels.tolist()))
    if not distinct:
        raise DataError(f"{path}: no data rows")
    if len(distinct) > 2:
        raise TooManyClassesError(
            f"{path}: column {label_column!r} has {len(distinct)} classes: {distinct}"
        )
    if classes is None:
        classes = tuple(distinct) if len(distinct) == 2 else (distinct[0], None)
    return Dataset(name or path.stem, numeric.to_numpy(dtype=float), labels, classes)


def write_dataset_csv(ds: Dataset, path: Union[str, Path], label_column: str = "class") -> Path:
    """Inverse of ``load_csv``; features get 17 significant digits."""
    path = Path(path)
    frame = pd.DataFrame(ds.features, columns=[f"x{i + 1}" for i in range(ds.d)])
    frame[label_column] = ds.labels
    frame.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
    return path


# ----------------------------------------------------------------------------
# Splits
# ----------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ExperimentSplit:
    """Labeled, unlabeled and test blocks, each with the intercept column."""

    labeled_X: FeatureMatrix
    labeled_y: np.ndarray
    unlabeled_X: FeatureMatrix
    unlabeled_truth: np.ndarray
    test_X: FeatureMatrix
    test_y: np.ndarray
    labeled_index: np.ndarray
    unlabeled_index: np.ndarray
    test_index: np.ndarray
    encoding: LabelEncoding = LabelEncoding()
    standardization: Optional[Tuple[np.ndarray, np.ndarray]] = None
    dataset: str = ""

    @property
    def n_labeled(self) -> int:
        return self.labeled_X.rows

    @property
    def n_unlabeled(self) -> int:
        return self.unlabeled_X.rows

    @property
    def n_test(self) -> int:
        return self.test_X.rows

    @property
    def fingerprint(self) -> str:
        digest = hashlib.sha1()
        for block in (self.labeled_index, self.unlabeled_index, self.test_index):
            digest.update(np.asarray(block, dtype=np.int64).tobytes())
            digest.update(b"|")
        if self.standardization is not None:
            for stat in self.standardization:
                digest.update(np.asarray(stat, dtype=float).tobytes())
        return digest.hexdigest()[:12]


def standardization_statistics(X: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Per-feature mean and population standard deviation.

    Zero-variance features keep scale 1.
    """
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    constant = scale <= 10 * np.finfo(float).eps * np.maximum(1.0, np.abs(mean))
    for column in np.flatnonzero(constant):
        logger.warning("feature %d has zero variance; passing it through unscaled", column)
    scale = np.where(constant, 1.0, scale)
    return mean, scale


def split_from_indices(
    ds: Dataset,
    labeled_index: Sequence[int],
    unlabeled_index: Sequence[int],
    test_index: Sequence[int],
    encoding: LabelEncoding = LabelEncoding(),
    standardize: bool = True,
    statistics_index: Optional[Sequence[int]] = None,
) -> ExperimentSplit:
    """Build a split from explicit row blocks.

    Standardization statistics come from ``statistics_index`` (default:
    labeled plus unlabeled rows), which must not contain test rows.
    """
    blocks = [np.asarray(b, dtype=np.int64) for b in (labeled_index, unlabeled_index, test_index)]
    for block in blocks:
        if block.size and (block.min() < 0 or block.max() >= ds.rows):
            raise SplitError(f"row index out of range for dataset {ds.name!r} ({ds.rows} rows)")
    labeled, unlabeled, test = blocks
    if sum(b.size for b in blocks) != np.unique(np.concatenate(blocks)).size:
        raise SplitError("labeled, unlabeled and test blocks overlap")

    y = ds.targets(encoding)
    if np.unique(y[labeled]).size < 2:
        raise SplitError(f"labeled block of {labeled.size} objects lacks one of the classes")

    features = ds.features
    statistics = None
    if standardize:
        if statistics_index is None:
            stats_rows = np.concatenate([labeled, unlabeled])
        else:
            stats_rows = np.asarray(statistics_index, dtype=np.int64)
        if np.intersect1d(stats_rows, test).size:
            raise SplitError("standardization statistics must not use test rows")
        statistics = standardization_statistics(features[stats_rows])
        features = (features - statistics[0]) / statistics[1]

    def block_matrix(rows: np.ndarray) -> FeatureMatrix:
        return FeatureMatrix(features[rows].reshape(rows.size, ds.d)).with_intercept()

    return ExperimentSplit(
        labeled_X=block_matrix(labeled),
        labeled_y=y[labeled],
        unlabeled_X=block_matrix(unlabeled),
        unlabeled_truth=y[unlabeled],
        test_X=block_matrix(test),
        test_y=y[test],
        labeled_index=labeled,
        unlabeled_index=unlabeled,
        test_index=test,
        encoding=encoding,
        standardization=statistics,
        dataset=ds.name,
    )


def class_covering_permutation(
    labels: np.ndarray,
    labeled_span: Tuple[int, int],
    seed: int,
    max_retries: int = MAX_LABELED_RETRIES,
) -> np.ndarray:
    """Row permutation whose ``labeled_span`` slice contains both classes.

    Each attempt draws a fresh permutation from its own sub-seed.
    """
    start, stop = labeled_span
    for attempt in range(max_retries + 1):
        perm = rng_for(seed, "permutation", attempt).permutation(len(labels))
        if len(set(labels[perm[start:stop]].tolist())) == 2:
            if attempt:
                logger.debug("labeled block covered both classes after %d redraws", attempt)
            return perm
    raise SplitError(
        f"a labeled block of {stop - start} objects never contained both classes "
        f"in {max_retries + 1} draws (seed {seed})"
    )


def make_split(
    ds: Dataset,
    l: int,
    u: int,
    t: int,
    encoding: LabelEncoding = LabelEncoding(),
    standardize: bool = True,
    seed: int = 0,
    max_retries: int = MAX_LABELED_RETRIES,
) -> ExperimentSplit:
    """Sample l labeled, u unlabeled and t test rows without replacement."""
    if l < 2:
        raise SplitError(f"need at least 2 labeled objects, got {l}")
    if u < 0 or t < 0:
        raise SplitError(f"block sizes must be >= 0, got u={u}, t={t}")
    if l + u + t > ds.rows:
        raise SplitError(
            f"dataset {ds.name!r} has {ds.rows} rows, split needs {l} + {u} + {t}"
        )
    perm = class_covering_permutation(ds.labels, (0, l), seed, max_retries)
    return split_from_indices(
        ds, perm[:l], perm[l:l + u], perm[l + u:l + u + t], encoding, standardize
    )


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def fraction_sizes(n: int, test_fraction: float, labeled_fraction: float) -> Tuple[int, int, int]:
    """Return (test, labeled, unlabeled) sizes; rounding goes to the unlabeled block."""
    if not 0.0 < test_fraction < 1.0:
        raise ConfigError(f"test fraction must lie in (0, 1), got {test_fraction}")
    if not 0.0 < labeled_fraction <= 1.0:
        raise ConfigError(f"labeled fraction must lie in (0, 1], got {labeled_fraction}")
    n_test = _round_half_up(test_fraction * n)
    rest = n - n_test
    n_labeled = _round_half_up(labeled_fraction * rest)
    return n_test, n_labeled, rest - n_labeled


def make_fraction_split(
    ds: Dataset,
    test_fraction: float = 0.2,
    labeled_fraction: float = 0.1,
    encoding: LabelEncoding = LabelEncoding(),
    standardize: bool = True,
    seed: int = 0,
    max_retries: int = MAX_LABELED_RETRIES,
) -> ExperimentSplit:
    """Hold out a test fraction, then label a fraction of the remaining rows."""
    n_test, n_labeled, _ = fraction_sizes(ds.rows, test_fraction, labeled_fraction)
    if n_labeled < 2:
        raise SplitError(
            f"labeled fraction {labeled_fraction} of {ds.rows - n_test} rows "
            f"leaves {n_labeled} labeled objects"
        )
    perm = class_covering_permutation(ds.labels, (n_test, n_test + n_labeled), seed, max_retries)
    return split_from_indices(
        ds,
        perm[n_test:n_test + n_labeled],
        perm[n_test + n_labeled:],
        perm[:n_test],
        encoding,
        standardize,
    )
