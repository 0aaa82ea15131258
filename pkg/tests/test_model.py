"""Tests for the least squares classifier core."""

import numpy as np
import pytest

from lsselflearn.errors import (
    ConfigError,
    DomainError,
    EncodingError,
    RankDeficiencyError,
    ShapeError,
    TooManyClassesError,
)
from lsselflearn.model import (
    FeatureMatrix,
    LabelEncoding,
    RidgeConfig,
    RidgeSolver,
    add_intercept,
    average_quadratic_loss,
    check_responsibilities,
    decision_boundary_1d,
    decode_labels,
    encode_labels,
    error_rate,
    fit_ridge,
    objective_label_based,
    objective_responsibility,
    objective_supervised,
    penalty_diagonal,
    predict,
)


def normal_equations(A, t, lam, penalize_intercept=False):
    D = np.eye(A.shape[1])
    if not penalize_intercept:
        D[-1, -1] = 0.0
    return np.linalg.solve(A.T @ A + lam * D, A.T @ t)


class TestLabelEncoding:
    """Tests for LabelEncoding."""

    def test_defaults(self):
        """Default codes are -1 and 1."""
        enc = LabelEncoding()
        assert (enc.m, enc.n) == (-1.0, 1.0)
        assert enc.midpoint() == 0.0

    def test_equal_codes_rejected(self):
        """m equal to n is a config error."""
        with pytest.raises(ConfigError):
            LabelEncoding(1.0, 1.0)

    def test_non_finite_rejected(self):
        """Infinite codes are rejected."""
        with pytest.raises(ConfigError):
            LabelEncoding(0.0, float("inf"))

    def test_swapped_interval(self):
        """lo/hi follow the numeric order, not the class order."""
        enc = LabelEncoding(1.0, 0.0)
        assert (enc.lo(), enc.hi()) == (0.0, 1.0)
        assert enc.swapped() == LabelEncoding(0.0, 1.0)


class TestEncodeLabels:
    """Tests for encode_labels / decode_labels."""

    def test_first_class_maps_to_m(self):
        """classes[0] gets m, classes[1] gets n."""
        codes = encode_labels(["b", "a", "b"], LabelEncoding(0, 1), ("b", "a"))
        np.testing.assert_array_equal(codes, [0.0, 1.0, 0.0])

    def test_decode_inverts_encode(self):
        """Decoding recovers the symbols."""
        enc = LabelEncoding()
        labels = ["neg", "pos", "pos"]
        codes = encode_labels(labels, enc, ("neg", "pos"))
        assert decode_labels(codes, enc, ("neg", "pos")).tolist() == labels

    def test_three_classes(self):
        """A third symbol is rejected."""
        with pytest.raises(TooManyClassesError):
            encode_labels(["a", "b", "c"], LabelEncoding(), ("a", "b"))

    def test_unmapped_symbol(self):
        """Symbols outside the class map are rejected."""
        with pytest.raises(EncodingError, match="unmapped"):
            encode_labels(["a", "z"], LabelEncoding(), ("a", "b"))

    def test_decode_unknown_code(self):
        """Codes other than m and n cannot be decoded."""
        with pytest.raises(EncodingError):
            decode_labels([0.5], LabelEncoding(), ("a", "b"))


class TestFeatureMatrix:
    """Tests for FeatureMatrix and the intercept convention."""

    def test_with_intercept_appends_ones(self):
        """with_intercept adds a trailing constant column once."""
        X = FeatureMatrix(np.array([[1.0, 2.0], [3.0, 4.0]]))
        Xi = X.with_intercept()
        assert Xi.has_intercept_column
        np.testing.assert_array_equal(Xi.values[:, -1], [1.0, 1.0])
        assert Xi.with_intercept() is Xi

    def test_bad_intercept_column(self):
        """A claimed intercept column must be all ones."""
        with pytest.raises(ShapeError):
            FeatureMatrix(np.array([[1.0, 2.0]]), has_intercept_column=True)

    def test_non_finite_values(self):
        """NaN features are a domain error."""
        with pytest.raises(DomainError):
            FeatureMatrix(np.array([[np.nan]]))

    def test_one_dimensional_rejected(self):
        """Vectors are not matrices."""
        with pytest.raises(ShapeError):
            FeatureMatrix(np.array([1.0, 2.0]))

    def test_penalty_diagonal(self):
        """Only the intercept coordinate is exempt by default."""
        np.testing.assert_array_equal(penalty_diagonal(3, RidgeConfig(1.0)), [1, 1, 0])
        np.testing.assert_array_equal(penalty_diagonal(3, RidgeConfig(1.0, True)), [1, 1, 1])
        np.testing.assert_array_equal(penalty_diagonal(3, RidgeConfig(1.0), False), [1, 1, 1])


class TestFitRidge:
    """Tests for the closed-form ridge fit."""

    def test_matches_normal_equations(self):
        """Random instances agree with the explicit normal-equation solve."""
        rng = np.random.default_rng(123)
        checked = 0
        for _ in range(100):
            rows = int(rng.integers(5, 51))
            d = int(rng.integers(1, 11))
            lam = float(rng.choice([0.0, 0.01, 1.0]))
            A = add_intercept(rng.standard_normal((rows, d))).values
            t = rng.standard_normal(rows)
            if lam == 0.0 and rows < d + 1:
                with pytest.raises(RankDeficiencyError):
                    fit_ridge(A, t, RidgeConfig(lam))
                continue
            w = fit_ridge(A, t, RidgeConfig(lam))
            np.testing.assert_allclose(w, normal_equations(A, t, lam), rtol=1e-8, atol=1e-10)
            checked += 1
        assert checked > 50

    def test_penalized_intercept(self):
        """penalize_intercept puts the intercept into D."""
        rng = np.random.default_rng(5)
        A = add_intercept(rng.standard_normal((20, 3))).values
        t = rng.standard_normal(20)
        w = fit_ridge(A, t, RidgeConfig(0.5, penalize_intercept=True))
        np.testing.assert_allclose(w, normal_equations(A, t, 0.5, True), rtol=1e-10)

    def test_unpenalized_intercept_absorbs_constant_targets(self):
        """A huge lambda shrinks features but leaves the intercept free."""
        rng = np.random.default_rng(6)
        X = add_intercept(rng.standard_normal((15, 2)))
        w = fit_ridge(X, np.full(15, 3.0), RidgeConfig(1e6))
        np.testing.assert_allclose(w, [0.0, 0.0, 3.0], atol=1e-8)

    def test_rank_deficient(self):
        """Duplicate columns without a penalty are rank deficient."""
        A = np.array([[1.0, 1.0, 1.0], [2.0, 2.0, 1.0], [3.0, 3.0, 1.0], [4.0, 4.0, 1.0]])
        with pytest.raises(RankDeficiencyError, match="rank 2"):
            fit_ridge(A, np.arange(4.0))

    def test_penalty_restores_rank(self):
        """lambda > 0 makes the same design solvable."""
        A = np.array([[1.0, 1.0, 1.0], [2.0, 2.0, 1.0], [3.0, 3.0, 1.0], [4.0, 4.0, 1.0]])
        w = fit_ridge(A, np.arange(4.0), RidgeConfig(1.0))
        np.testing.assert_allclose(w[0], w[1])

    def test_target_length_mismatch(self):
        """Targets must match the rows."""
        with pytest.raises(ShapeError):
            fit_ridge(np.eye(3), np.ones(2))

    def test_negative_lambda(self):
        """lambda must be non-negative."""
        with pytest.raises(ConfigError):
            RidgeConfig(-1.0)

    def test_solver_reuses_factor(self):
        """One RidgeSolver solves several target vectors exactly like fit_ridge."""
        rng = np.random.default_rng(7)
        X = add_intercept(rng.standard_normal((12, 2)))
        solver = RidgeSolver(X, RidgeConfig(0.1))
        for _ in range(3):
            t = rng.standard_normal(12)
            np.testing.assert_array_equal(solver.solve(t), fit_ridge(X, t, RidgeConfig(0.1)))


class TestPrediction:
    """Tests for decision values, predictions and 1-D boundaries."""

    def test_ties_go_to_m(self):
        """A decision value at the midpoint predicts m."""
        X = add_intercept(np.array([[0.0], [1.0], [-1.0]]))
        pred = predict([1.0, 0.0], X, LabelEncoding())
        np.testing.assert_array_equal(pred, [-1.0, 1.0, -1.0])

    def test_encoding_other_than_symmetric(self):
        """Thresholding happens at (m + n) / 2."""
        X = add_intercept(np.array([[0.4], [0.6]]))
        np.testing.assert_array_equal(predict([1.0, 0.0], X, LabelEncoding(0, 1)), [0.0, 1.0])

    def test_boundary(self):
        """The boundary solves w0 x + w1 = midpoint."""
        assert decision_boundary_1d([2.0, -1.0], LabelEncoding()) == pytest.approx(0.5)
        assert decision_boundary_1d([2.0, 0.0], LabelEncoding(0, 1)) == pytest.approx(0.25)

    def test_flat_boundary_is_nan(self):
        """A zero slope has no boundary."""
        assert np.isnan(decision_boundary_1d([0.0, 1.0], LabelEncoding()))


class TestObjectives:
    """Tests for the three objectives."""

    @pytest.fixture
    def instance(self):
        rng = np.random.default_rng(42)
        X_lab = add_intercept(rng.standard_normal((8, 2)))
        X_unl = add_intercept(rng.standard_normal((5, 2)))
        y = np.where(rng.random(8) < 0.5, -1.0, 1.0)
        w = rng.standard_normal(3)
        return X_lab, y, X_unl, w

    def test_supervised_includes_penalty(self, instance):
        """J_s is the squared residual plus lambda times the penalized norm."""
        X_lab, y, _, w = instance
        r = X_lab.values @ w - y
        expected = r @ r + 0.3 * (w[0] ** 2 + w[1] ** 2)
        assert objective_supervised(w, X_lab, y, RidgeConfig(0.3)) == pytest.approx(expected)

    def test_label_based_adds_unlabeled_residual(self, instance):
        """J_l adds ||X_u w - u||^2."""
        X_lab, y, X_unl, w = instance
        u = np.linspace(-1, 1, 5)
        r = X_unl.values @ w - u
        assert objective_label_based(w, u, X_lab, y, X_unl) == pytest.approx(
            objective_supervised(w, X_lab, y) + r @ r
        )

    def test_responsibility_decomposition(self, instance):
        """J_r = J_s + ||X_u w - t(q)||^2 + sum q(1-q)(m-n)^2."""
        X_lab, y, X_unl, w = instance
        enc = LabelEncoding(-1.0, 2.0)
        q = np.array([0.0, 0.25, 0.5, 0.9, 1.0])
        t = q * enc.m + (1 - q) * enc.n
        r = X_unl.values @ w - t
        expected = (
            objective_supervised(w, X_lab, y)
            + r @ r
            + np.sum(q * (1 - q)) * (enc.m - enc.n) ** 2
        )
        assert objective_responsibility(w, q, X_lab, y, X_unl, enc) == pytest.approx(expected)

    def test_responsibilities_out_of_range(self):
        """q must lie in [0, 1]."""
        with pytest.raises(DomainError):
            check_responsibilities([0.5, 1.5])


class TestMeasures:
    """Tests for the evaluation measures."""

    def test_error_rate(self):
        """Fraction of mismatches."""
        assert error_rate([1, -1, 1, 1], [1, 1, 1, -1]) == 0.5

    def test_error_rate_mismatch(self):
        """Lengths must agree."""
        with pytest.raises(ShapeError):
            error_rate([1, 1], [1])

    def test_error_rate_empty(self):
        """An empty test set has no error rate."""
        with pytest.raises(DomainError):
            error_rate([], [])

    def test_average_loss(self):
        """Mean squared residual without penalty."""
        X = add_intercept(np.array([[0.0], [1.0]]))
        assert average_quadratic_loss([1.0, 0.0], X, [1.0, 1.0]) == pytest.approx(0.5)

    def test_average_loss_empty(self):
        """An empty test set has no average loss."""
        with pytest.raises(DomainError):
            average_quadratic_loss([1.0, 0.0], np.empty((0, 2)), [])


class TestProperties:
    """Randomized checks of the objective and ridge invariants."""

    def instance(self, seed):
        rng = np.random.default_rng(seed)
        n_lab, n_unl = int(rng.integers(5, 12)), int(rng.integers(1, 8))
        d = int(rng.integers(1, 4))
        raw_lab = rng.standard_normal((n_lab, d))
        raw_unl = rng.standard_normal((n_unl, d))
        y = np.where(rng.random(n_lab) < 0.5, -1.0, 1.0)
        return rng, raw_lab, y, raw_unl

    @pytest.mark.parametrize("lam", [0.0, 0.5])
    def test_fit_ridge_is_a_minimizer(self, lam):
        """No random perturbation of the fitted weights lowers J_s."""
        cfg = RidgeConfig(lam)
        for seed in range(20):
            rng, raw_lab, y, _ = self.instance(seed)
            X = add_intercept(raw_lab)
            w = fit_ridge(X, y, cfg)
            best = objective_supervised(w, X, y, cfg)
            for scale in (1e-4, 1e-2, 1.0):
                for _ in range(10):
                    delta = scale * rng.standard_normal(w.size)
                    perturbed = objective_supervised(w + delta, X, y, cfg)
                    assert perturbed >= best - 1e-10 * max(1.0, best)

    def test_label_based_bounds_supervised(self):
        """J_l >= J_s, with equality exactly when the unlabeled residuals vanish."""
        for seed in range(20):
            rng, raw_lab, y, raw_unl = self.instance(seed)
            X_lab, X_unl = add_intercept(raw_lab), add_intercept(raw_unl)
            w = rng.standard_normal(X_lab.cols)
            supervised = objective_supervised(w, X_lab, y)
            u = rng.uniform(-1.0, 1.0, X_unl.rows)
            assert objective_label_based(w, u, X_lab, y, X_unl) >= supervised
            exact = X_unl.values @ w
            assert objective_label_based(w, exact, X_lab, y, X_unl) == pytest.approx(
                supervised, rel=1e-12
            )
            exact[0] += 0.1
            assert objective_label_based(w, exact, X_lab, y, X_unl) > supervised

    def test_objectives_ignore_row_order(self):
        """Permuting rows within a block leaves every objective unchanged."""
        enc = LabelEncoding(-1.0, 2.0)
        for seed in range(10):
            rng, raw_lab, y, raw_unl = self.instance(seed)
            w = rng.standard_normal(raw_lab.shape[1] + 1)
            u = rng.uniform(-1.0, 2.0, raw_unl.shape[0])
            q = rng.random(raw_unl.shape[0])
            p_lab = rng.permutation(raw_lab.shape[0])
            p_unl = rng.permutation(raw_unl.shape[0])
            original = add_intercept(raw_lab), y, add_intercept(raw_unl)
            permuted = add_intercept(raw_lab[p_lab]), y[p_lab], add_intercept(raw_unl[p_unl])
            assert objective_supervised(w, *permuted[:2]) == pytest.approx(
                objective_supervised(w, *original[:2]), rel=1e-12
            )
            assert objective_label_based(w, u[p_unl], *permuted) == pytest.approx(
                objective_label_based(w, u, *original), rel=1e-12
            )
            assert objective_responsibility(w, q[p_unl], *permuted, enc) == pytest.approx(
                objective_responsibility(w, q, *original, enc), rel=1e-12
            )

    def test_predict_symmetric_under_swapped_codes(self):
        """Swapping m and n together with the class map predicts the same symbols."""
        rng = np.random.default_rng(7)
        X = add_intercept(rng.standard_normal((50, 2)))
        w = rng.standard_normal(3)
        enc = LabelEncoding(-1.0, 3.0)
        swapped = enc.swapped()
        symbols = decode_labels(predict(w, X, enc), enc, ("a", "b"))
        swapped_symbols = decode_labels(predict(w, X, swapped), swapped, ("b", "a"))
        assert symbols.tolist() == swapped_symbols.tolist()
