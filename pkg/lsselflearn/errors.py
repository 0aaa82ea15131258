"""Exception taxonomy.

Every error raised on purpose by this package derives from ``SelfLearnError``.
The three families carry the exit code the command line reports for them.
"""


class SelfLearnError(Exception):
    """Base class for all lsselflearn errors."""

    exit_code = 1


class ConfigError(SelfLearnError):
    """Invalid configuration value, key or file."""

    exit_code = 2


class DataError(SelfLearnError):
    """A dataset, split or results file cannot be used."""

    exit_code = 3


class NumericalError(SelfLearnError):
    """A numerical operation is ill-posed or broke an invariant."""

    exit_code = 4


class EncodingError(DataError):
    """Class symbols cannot be mapped onto the label encoding."""


class ShapeError(DataError):
    """Array dimensions do not agree."""


class DatasetNotFoundError(DataError):
    """A dataset reference points nowhere."""


class MissingColumnError(DataError):
    """A required CSV column is absent."""


class MissingValueError(DataError):
    """A CSV cell is empty."""


class NonNumericCellError(DataError):
    """A feature cell does not parse as a real number."""


class TooManyClassesError(EncodingError):
    """More than two class symbols appear."""


class SplitError(DataError):
    """A labeled/unlabeled/test split cannot be drawn."""


class ResultsFormatError(DataError):
    """A results CSV is malformed."""


class RankDeficiencyError(NumericalError):
    """The regularized normal matrix is singular."""


class DomainError(NumericalError):
    """An argument lies outside the domain of an operation."""


class InvariantViolation(NumericalError):
    """An internal invariant did not hold."""
