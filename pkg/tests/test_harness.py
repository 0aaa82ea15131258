"""Tests for the experiment harness."""

import dataclasses
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from lsselflearn.data import GaussianConfig, generate_two_gaussians, make_split
from lsselflearn.errors import (
    ConfigError,
    DataError,
    InvariantViolation,
    ResultsFormatError,
    SplitError,
)
from lsselflearn.harness import (
    COLUMNS,
    ClassifierKind,
    CurveConfig,
    MinimaConfig,
    ResultsTable,
    SweepConfig,
    default_roster,
    evaluate_classifiers,
    read_results_csv,
    run_example_1d,
    run_fraction_curve,
    run_minima,
    run_seed_sweep,
    run_unlabeled_curve,
    summarize,
    write_results_csv,
)
from lsselflearn.model import AVERAGE_LOSS_TEST, ERROR

FIXTURES = Path(__file__).parent / "fixtures"

SMALL_CURVE = CurveConfig(
    dataset="builtin:gaussians?d=2&separation=2&prior=0.5&n=300",
    l_fixed=6,
    u_grid=(0, 4, 16),
    test_size=100,
    repeats=3,
    master_seed=11,
)


def values(table, classifier, measure, size=None):
    frame = table.frame
    mask = (frame["classifier"] == classifier) & (frame["measure"] == measure)
    if size is not None:
        mask &= frame["size"] == size
    return frame.loc[mask, "value"].to_numpy()


class TestEvaluate:
    """Tests for the classifier roster and evaluation."""

    def test_roster(self):
        """The default roster holds all four classifiers."""
        assert [spec.kind for spec in default_roster()] == list(ClassifierKind)

    def test_rows_per_classifier_and_measure(self):
        """Each classifier yields one row per measure."""
        ds = generate_two_gaussians(n=120, seed=1)
        rows = evaluate_classifiers(make_split(ds, 10, 20, 50, seed=1), default_roster())
        assert len(rows) == 8
        assert all(0.0 <= r.value <= 1.0 for r in rows if r.measure == ERROR)
        assert all(r.error is None for r in rows)

    def test_failed_fit_gives_missing_values(self):
        """A rank-deficient supervised fit becomes NaN with its message."""
        ds = generate_two_gaussians(GaussianConfig(d=2), n=60, seed=2)
        split = make_split(ds, 2, 10, 20, seed=2)
        rows = evaluate_classifiers(split, default_roster())
        rows = [r for r in rows if r.classifier == "supervised"]
        assert all(np.isnan(r.value) for r in rows)
        assert all("singular" in r.error for r in rows)

    def test_unknown_measure(self):
        """Measures outside the known set are config errors."""
        ds = generate_two_gaussians(n=60, seed=3)
        with pytest.raises(ConfigError):
            evaluate_classifiers(make_split(ds, 10, 5, 5, seed=3), default_roster(), ["AUC"])


class TestResultsTable:
    """Tests for ResultsTable invariants and CSV I/O."""

    def record(self, **kw):
        row = dict(zip(COLUMNS, ("d", "supervised", 0, "n_unlabeled", 0.0, ERROR, 0.5)))
        row.update(kw)
        return row

    def test_duplicate_key(self):
        """Two rows with the same key are rejected."""
        with pytest.raises(InvariantViolation, match="duplicate"):
            ResultsTable.from_records([self.record(), self.record(value=0.1)])

    def test_error_range(self):
        """Error values outside [0, 1] are rejected."""
        with pytest.raises(InvariantViolation):
            ResultsTable.from_records([self.record(value=1.5)])

    def test_negative_loss(self):
        """Losses are non-negative."""
        with pytest.raises(InvariantViolation):
            ResultsTable.from_records([self.record(measure=AVERAGE_LOSS_TEST, value=-0.1)])

    def test_rows_sorted_by_key(self):
        """Rows come out in key order whatever the input order."""
        table = ResultsTable.from_records(
            [self.record(repeat=2), self.record(repeat=0), self.record(repeat=1)]
        )
        assert table.frame["repeat"].tolist() == [0, 1, 2]

    def test_csv_write_and_read(self, tmp_path):
        """A written table reads back equal, missing values included."""
        table = ResultsTable.from_records(
            [self.record(value=0.1 + 0.2), self.record(repeat=1, value=float("nan"))]
        )
        path = write_results_csv(table, tmp_path / "results.csv")
        assert path.read_text().splitlines()[0] == ",".join(COLUMNS)
        assert read_results_csv(path).equals(table)

    def test_bad_header(self, tmp_path):
        """A wrong header names line 1."""
        path = tmp_path / "bad.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(ResultsFormatError, match="line 1"):
            read_results_csv(path)

    def test_bad_value_names_line(self, tmp_path):
        """Non-numeric values name their line."""
        path = tmp_path / "bad.csv"
        body = "d,s,0,n_unlabeled,0,Error,0.1\nd,s,1,n_unlabeled,0,Error,x\n"
        path.write_text(",".join(COLUMNS) + "\n" + body)
        with pytest.raises(ResultsFormatError, match="line 3"):
            read_results_csv(path)

    def test_csv_values_bit_exact(self, tmp_path):
        """Every written float reads back to the same double."""
        losses = np.random.default_rng(4).exponential(size=200)
        table = ResultsTable.from_records(
            self.record(repeat=i, measure=AVERAGE_LOSS_TEST, value=v) for i, v in enumerate(losses)
        )
        back = read_results_csv(write_results_csv(table, tmp_path / "results.csv"))
        np.testing.assert_array_equal(
            back.frame["value"].to_numpy(), table.frame["value"].to_numpy()
        )

    def test_blank_line_is_counted(self, tmp_path):
        """Line numbers count blank lines, which are rejected."""
        path = tmp_path / "blank.csv"
        body = "d,s,0,n_unlabeled,0,Error,0.1\n\nd,s,1,n_unlabeled,0,Error,x\n"
        path.write_text(",".join(COLUMNS) + "\n" + body)
        with pytest.raises(ResultsFormatError, match="line 3: blank line"):
            read_results_csv(path)


class TestSummarize:
    """Tests for summarize."""

    def test_hand_computed(self):
        """Two rows give their mean and sample standard deviation."""
        summary = summarize(read_results_csv(FIXTURES / "results.csv"))
        assert len(summary) == 1
        row = summary.iloc[0]
        assert row["mean"] == pytest.approx(0.3)
        assert row["std"] == pytest.approx(np.sqrt(0.02))
        assert row["count"] == 2

    def test_single_row_has_zero_std(self):
        """A group of one reports std 0."""
        table = ResultsTable.from_records(
            [dict(zip(COLUMNS, ("d", "s", 0, "n_unlabeled", 0.0, ERROR, 0.25)))]
        )
        assert summarize(table).iloc[0]["std"] == 0.0

    def test_missing_values_not_counted(self):
        """NaN values are excluded from count and mean."""
        frame = pd.DataFrame(
            [("d", "s", r, "n_unlabeled", 0.0, ERROR, v) for r, v in enumerate([0.2, None, 0.4])],
            columns=list(COLUMNS),
        )
        row = summarize(ResultsTable(frame)).iloc[0]
        assert row["count"] == 2
        assert row["mean"] == pytest.approx(0.3)

    def test_empty(self):
        """An empty table cannot be summarized."""
        with pytest.raises(DataError):
            summarize(pd.DataFrame(columns=list(COLUMNS)))

    def test_unknown_group_key(self):
        """Group keys must be key columns."""
        with pytest.raises(ConfigError):
            summarize(read_results_csv(FIXTURES / "results.csv"), ["value"])


class TestUnlabeledCurve:
    """Tests for the unlabeled-count learning curve."""

    @pytest.fixture(scope="class")
    def table(self):
        return run_unlabeled_curve(SMALL_CURVE)

    def test_row_count(self, table):
        """repeats x sizes x classifiers x measures rows."""
        assert len(table) == 3 * 3 * 4 * 2
        assert set(table.frame["size_role"]) == {"n_unlabeled"}

    def test_supervised_constant_across_unlabeled_counts(self, table):
        """Labeled and test blocks stay fixed within a repeat."""
        frame = table.frame[(table.frame["classifier"] == "supervised")]
        for _, group in frame.groupby(["repeat", "measure"]):
            assert group["value"].nunique() == 1

    def test_self_learning_equals_supervised_without_unlabeled(self, table):
        """At U = 0 every classifier coincides with supervised."""
        for measure in (ERROR, AVERAGE_LOSS_TEST):
            reference = values(table, "supervised", measure, 0.0)
            for name in ("self_learning_soft", "self_learning_hard", "oracle"):
                np.testing.assert_allclose(values(table, name, measure, 0.0), reference, rtol=1e-12)

    def test_fingerprints(self, table):
        """One split fingerprint per repeat and size."""
        assert len(table.fingerprints) == 9
        assert table.failures == []

    def test_jobs_independent(self, table):
        """Concurrency does not change the table."""
        assert run_unlabeled_curve(SMALL_CURVE, jobs=3).equals(table)

    def test_measure_filter_keeps_keys(self, table):
        """Filtering to one measure keeps the same key columns."""
        errors = run_unlabeled_curve(dataclasses.replace(SMALL_CURVE, measures=(ERROR,)))
        losses = table.filter_measures([AVERAGE_LOSS_TEST])
        keys = ["dataset", "classifier", "repeat", "size"]
        pd.testing.assert_frame_equal(errors.frame[keys], losses.frame[keys])
        assert set(errors.frame["measure"]) == {ERROR}

    def test_labeled_count_must_exceed_dimension(self):
        """Without a penalty L must exceed d."""
        with pytest.raises(ConfigError, match="dimensionality"):
            run_unlabeled_curve(dataclasses.replace(SMALL_CURVE, l_fixed=2))

    def test_grid_must_increase(self):
        """A non-increasing grid is rejected."""
        with pytest.raises(ConfigError, match="strictly increasing"):
            run_unlabeled_curve(dataclasses.replace(SMALL_CURVE, u_grid=(4, 0)))

    def test_dataset_too_small(self):
        """Blocks that do not fit into the dataset are rejected."""
        with pytest.raises(SplitError):
            run_unlabeled_curve(dataclasses.replace(SMALL_CURVE, test_size=1000))


class TestFractionCurve:
    """Tests for the labeled-fraction learning curve."""

    @pytest.fixture(scope="class")
    def table(self):
        cfg = CurveConfig(
            dataset="builtin:gaussians?n=200",
            fractions=(0.1, 0.5, 1.0),
            test_fraction=0.2,
            repeats=2,
            master_seed=4,
        )
        return run_fraction_curve(cfg)

    def test_sizes(self, table):
        """Sizes are the labeled fractions."""
        assert sorted(set(table.frame["size"])) == [0.1, 0.5, 1.0]
        assert set(table.frame["size_role"]) == {"labeled_fraction"}

    def test_full_fraction_is_supervised(self, table):
        """At fraction 1.0 there is nothing unlabeled left."""
        for measure in (ERROR, AVERAGE_LOSS_TEST):
            reference = values(table, "supervised", measure, 1.0)
            for name in ("self_learning_soft", "self_learning_hard", "oracle"):
                np.testing.assert_allclose(values(table, name, measure, 1.0), reference, rtol=1e-12)

    def test_test_block_fixed_within_repeat(self, table):
        """The oracle sees all training rows at every fraction."""
        frame = table.frame[table.frame["classifier"] == "oracle"]
        for _, group in frame.groupby(["repeat", "measure"]):
            assert group["value"].nunique() == 1


class TestSeedSweep:
    """Tests for the seed sweep."""

    CFG = SweepConfig(n_labeled=4, n_unlabeled=20, n_test=100, seeds=(0, 1, 2))

    def test_shape(self):
        """Three classifiers per seed."""
        frame = run_seed_sweep(self.CFG)
        assert list(frame.columns) == ["seed", "classifier", "error", "single_class"]
        assert len(frame) == 9
        assert frame["error"].between(0, 1).all()

    def test_jobs_independent(self):
        """Seeds run concurrently give the same frame."""
        pd.testing.assert_frame_equal(run_seed_sweep(self.CFG), run_seed_sweep(self.CFG, jobs=3))

    def test_empty_seed_list(self):
        """An empty seed list is a config error."""
        with pytest.raises(ConfigError):
            run_seed_sweep(self.CFG, seeds=[])


class TestMinima:
    """Tests for run_minima."""

    def test_both_variants(self):
        """Each variant gets its own report."""
        cfg = MinimaConfig(dataset="builtin:gaussians?n=80", n_unlabeled=20, restarts=5)
        reports = run_minima(cfg)
        assert sorted(reports) == ["hard_label", "soft_label"]
        for report in reports.values():
            assert sum(m.basin_count for m in report.distinct_minima) == 6

    def test_unknown_variant(self):
        """Variant names are validated."""
        with pytest.raises(ConfigError):
            run_minima(MinimaConfig(variants=("medium",)))


class TestExample1D:
    """Tests for the one-dimensional first-step example."""

    def test_far_unlabeled_object_moves_soft_boundary(self):
        """Unlabeled {-1, 4} shifts the soft boundary from 0 to 0.75."""
        ex = run_example_1d((-1.0, 4.0))
        assert ex.boundaries["supervised"] == pytest.approx(0.0, abs=1e-12)
        assert ex.boundaries["soft"] == pytest.approx(0.75)
        assert ex.boundary_shift("soft") > 0

    def test_objects_inside_interval_do_not_update(self):
        """Unlabeled {-1, 0.5} leaves the soft boundary where it was."""
        ex = run_example_1d((-1.0, 0.5))
        assert ex.boundary_shift("soft") <= 1e-9
        assert ex.boundary_shift("hard") > 0

    def test_no_unlabeled(self):
        """Without unlabeled objects only the supervised fit is reported."""
        ex = run_example_1d(())
        assert list(ex.boundaries) == ["supervised"]
        assert ex.to_dict()["unlabeled"] == []

    def test_plot_frame(self):
        """Plot data has one row per classifier, role and position."""
        frame = run_example_1d((-1.0, 4.0)).plot_frame()
        assert list(frame.columns) == ["position", "role", "classifier", "decision_value"]
        assert set(frame["role"]) == {"labeled", "unlabeled", "grid"}
        assert set(frame["classifier"]) == {"supervised", "soft", "hard"}


@pytest.mark.slow
class TestAcceptance:
    """Long statistical checks on the two-Gaussian dataset."""

    def test_soft_loss_not_above_hard(self):
        """Mean soft-label test loss is at most the hard-label one at every U > 0."""
        table = run_unlabeled_curve(CurveConfig(), jobs=4)
        summary = summarize(table, ["classifier", "size", "measure"])
        loss = summary[summary["measure"] == AVERAGE_LOSS_TEST].set_index(["classifier", "size"])
        for size in CurveConfig().u_grid[1:]:
            soft = loss.loc[("self_learning_soft", float(size)), "mean"]
            hard = loss.loc[("self_learning_hard", float(size)), "mean"]
            assert np.isfinite(soft) and np.isfinite(hard)
            assert soft <= hard

    def test_oracle_has_lowest_error(self):
        """The oracle has the lowest mean error at every labeled fraction."""
        table = run_fraction_curve(CurveConfig(), jobs=4)
        summary = summarize(table, ["classifier", "size", "measure"])
        errors = summary[summary["measure"] == ERROR]
        for _, group in errors.groupby("size"):
            oracle = group.loc[group["classifier"] == "oracle", "mean"].iloc[0]
            assert oracle <= group["mean"].min() + 1e-12

    def test_hard_has_at_least_as_many_minima(self):
        """Hard-label BCD reaches at least as many distinct minima as soft-label."""
        reports = run_minima(MinimaConfig(), jobs=4)
        assert reports["hard_label"].n_distinct >= reports["soft_label"].n_distinct
        for report in reports.values():
            assert all(m.fixed_point_gap <= 1e-8 for m in report.distinct_minima)

    def test_hard_label_can_collapse_to_one_class(self):
        """Some seed of the small-L sweep assigns every test object to one class."""
        frame = run_seed_sweep(SweepConfig(), jobs=4)
        hard = frame[frame["classifier"] == "self_learning_hard"]
        assert hard["single_class"].any()
