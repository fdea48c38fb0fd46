import mpmath as mp
import numpy as np
import pytest

from qopt import (
    Box,
    InvalidArgumentError,
    Objective,
    OracleCounter,
    PreconditionError,
    check_quasar_convexity,
    check_smoothness,
    evaluate,
    finite_diff_gradient,
    make_catalogue_objective,
)

mp.mp.dps = 40


def sixth_root_reference(x):
    """High-precision value/derivative oracle for the example1 objective."""
    v = mp.mpf(x)
    u = v * v + mp.mpf(1) / 8
    return float(u ** (mp.mpf(1) / 6)), float((v / 3) * u ** (-mp.mpf(5) / 6))


class TestEvaluate:
    def test_quadratic_value_and_gradient(self, quadratic, counter):
        value, grad = evaluate(quadratic, np.array([1.0, 2.0]), counter)
        assert value == 2.5
        np.testing.assert_array_equal(grad, [1.0, 2.0])
        assert counter.calls == 1

    def test_example1_at_zero(self, example1, counter):
        value, grad = evaluate(example1, np.array([0.0]), counter)
        assert value == pytest.approx(2.0 ** -0.5, abs=1e-15)
        assert value == pytest.approx(0.70711, abs=5e-6)
        assert grad[0] == 0.0

    def test_example1_at_one_vs_high_precision(self, example1, counter):
        value, grad = evaluate(example1, np.array([1.0]), counter)
        ref_value, ref_grad = sixth_root_reference(1.0)
        assert value == pytest.approx(ref_value, abs=1e-14)
        assert grad[0] == pytest.approx(ref_grad, abs=1e-14)
        assert value == pytest.approx(1.01982, abs=5e-6)
        assert grad[0] == pytest.approx(0.30217, abs=5e-6)

    def test_counter_increments_once_per_call(self, example1, counter):
        for expected in range(1, 6):
            evaluate(example1, np.array([0.5]), counter)
            assert counter.calls == expected
        counter.reset()
        assert counter.calls == 0

    def test_nonfinite_rejected(self, quadratic, counter):
        with pytest.raises(InvalidArgumentError):
            evaluate(quadratic, np.array([np.nan, 0.0]), counter)
        with pytest.raises(InvalidArgumentError):
            evaluate(quadratic, np.array([np.inf, 0.0]), counter)
        assert counter.calls == 0

    def test_dimension_mismatch(self, quadratic, counter):
        with pytest.raises(InvalidArgumentError):
            evaluate(quadratic, np.array([1.0]), counter)


class TestFiniteDifferences:
    def test_quadratic(self, quadratic):
        fd = finite_diff_gradient(quadratic, np.array([1.0, 2.0]), h=1e-4)
        np.testing.assert_allclose(fd, [1.0, 2.0], atol=1e-7)

    def test_example1(self, example1):
        fd = finite_diff_gradient(example1, np.array([1.0]), h=1e-5)
        _, ref_grad = sixth_root_reference(1.0)
        assert fd[0] == pytest.approx(ref_grad, abs=1e-8)

    def test_affine_is_exact(self):
        obj = make_catalogue_objective(
            "affine_plus_quadratic", {"a": [2.0, -3.0], "q": 0.0}
        )
        fd = finite_diff_gradient(obj, np.array([0.3, -0.4]), h=1e-4)
        np.testing.assert_allclose(fd, [2.0, -3.0], atol=1e-10)

    def test_bad_step_rejected(self, quadratic):
        with pytest.raises(InvalidArgumentError):
            finite_diff_gradient(quadratic, np.array([0.0, 0.0]), h=0.0)
        with pytest.raises(InvalidArgumentError):
            finite_diff_gradient(quadratic, np.array([0.0, 0.0]), h=-1e-5)

    def test_second_order_accuracy(self, example1):
        # Central differences converge like h^2 until rounding takes over.
        x = np.array([0.7])
        exact = example1.evaluator(x)[1][0]
        errs = [abs(finite_diff_gradient(example1, x, h)[0] - exact) for h in (1e-2, 1e-3)]
        assert errs[1] <= errs[0] / 50.0


class TestQuasarConvexityCheck:
    def test_example1_certificate(self, example1):
        rep = check_quasar_convexity(example1, 10_000)
        assert rep["max_violation"] <= 1e-9
        assert rep["samples"] == 10_000

    def test_quadratic_is_star_convex(self, quadratic):
        rep = check_quasar_convexity(quadratic, 2_000)
        assert rep["max_violation"] <= 0.0

    def test_counterexample_violates_for_any_gamma(self, fig1):
        for gamma in (0.1, 0.5, 1.0):
            rep = check_quasar_convexity(fig1, 10_000, gamma=gamma)
            assert rep["max_violation"] > 0.0

    def test_counterexample_violation_at_stationary_point(self, fig1):
        # A stationary point above the minimum violates the inequality for
        # every gamma: the gradient term vanishes there.
        value, grad = fig1.evaluator(np.array([-2.0]))
        assert abs(grad[0]) <= 1e-8
        assert value - fig1.optimal_value > 0.1

    def test_requires_center(self, quadratic):
        anonymous = Objective(
            name="no-center",
            evaluator=quadratic.evaluator,
            smoothness_L=1.0,
            quasar_gamma=1.0,
            feasible_set=quadratic.feasible_set,
        )
        with pytest.raises(PreconditionError):
            check_quasar_convexity(anonymous, 10)


class TestSmoothnessCheck:
    def test_quadratic_ratio_is_one(self, quadratic):
        rep = check_smoothness(quadratic, 500)
        assert rep["max_secant_ratio"] == pytest.approx(1.0, abs=1e-12)
        assert rep["passed"]

    def test_affine_ratio_is_zero(self):
        obj = make_catalogue_objective("affine_plus_quadratic", {"q": 0.0})
        rep = check_smoothness(obj, 500)
        assert rep["max_secant_ratio"] == 0.0

    def test_example1_within_declared_constant(self, example1):
        rep = check_smoothness(example1, 10_000)
        assert rep["passed"]
        # The dense scan of the second derivative peaks at about 1.88562.
        assert rep["max_secant_ratio"] == pytest.approx(1.88562, abs=1e-3)

    def test_sample_count_validated(self, quadratic):
        with pytest.raises(InvalidArgumentError):
            check_smoothness(quadratic, 1)


class TestCatalogue:
    def test_example1_fields(self, example1):
        assert example1.quasar_gamma == 0.5
        assert example1.smoothness_L == pytest.approx(1.8857)
        np.testing.assert_array_equal(example1.center, [0.0])
        assert example1.optimal_value == pytest.approx(2.0 ** -0.5, abs=1e-15)
        set_ = example1.feasible_set
        np.testing.assert_array_equal(set_.lower, [-5.0])
        np.testing.assert_array_equal(set_.upper, [5.0])

    def test_counterexample_construction(self, fig1):
        # Shift computed from the base objective's slope at -2; the regularized
        # objective is stationary there with negative curvature.
        assert fig1.params["x0"] == pytest.approx(-12.23, abs=0.005)
        slope = fig1.evaluator(np.array([-2.0]))[1][0]
        assert abs(slope) <= 1e-8
        f = lambda v: fig1.evaluator(np.array([v]))[0]
        h = 1e-4
        second = (f(-2 + h) - 2 * f(-2.0) + f(-2 - h)) / h**2
        assert second < 0.0

    def test_counterexample_center_is_global_minimum(self, fig1):
        grid = np.linspace(-5, 5, 20_001)
        values = [fig1.evaluator(np.array([v]))[0] for v in grid]
        assert fig1.optimal_value <= min(values) + 1e-9
        assert fig1.feasible_set.contains(fig1.center)

    def test_quadratic_center_is_projection_of_shift(self):
        obj = make_catalogue_objective(
            "quadratic", {"set": {"kind": "simplex", "dimension": 3}}
        )
        np.testing.assert_allclose(obj.center, [1 / 3, 1 / 3, 1 / 3], atol=1e-15)
        assert obj.smoothness_L == 1.0 and obj.quasar_gamma == 1.0

    def test_affine_center_is_lmo_vertex(self):
        obj = make_catalogue_objective("affine_plus_quadratic", {"a": [1.0, -1.0], "q": 0.0})
        np.testing.assert_array_equal(obj.center, [-1.0, 1.0])

    def test_glm_realizable_minimum(self, glm):
        value, grad = glm.evaluator(glm.center)
        assert value == 0.0 and glm.optimal_value == 0.0
        np.testing.assert_allclose(grad, 0.0, atol=1e-15)
        assert glm.feasible_set.contains(glm.center)

    def test_unknown_name_rejected(self):
        with pytest.raises(InvalidArgumentError):
            make_catalogue_objective("rosenbrock")

    def test_unknown_params_rejected(self):
        with pytest.raises(InvalidArgumentError):
            make_catalogue_objective("example1", {"set": {"kind": "box"}})

    def test_every_entry_passes_declared_smoothness(self):
        for name in ("quadratic", "affine_plus_quadratic", "example1",
                     "fig1_counterexample", "glm_sigmoid"):
            obj = make_catalogue_objective(name)
            rep = check_smoothness(obj, 2_000)
            assert rep["passed"], name

    def test_certifiable_entries_pass_quasar_check(self):
        for name in ("quadratic", "affine_plus_quadratic", "example1", "glm_sigmoid"):
            obj = make_catalogue_objective(name)
            rep = check_quasar_convexity(obj, 4_000)
            assert rep["max_violation"] <= 1e-9, name


class TestObjectiveValidation:
    def test_bad_constants(self, quadratic):
        with pytest.raises(InvalidArgumentError):
            Objective("bad", quadratic.evaluator, -1.0, 1.0, quadratic.feasible_set)
        with pytest.raises(InvalidArgumentError):
            Objective("bad", quadratic.evaluator, 1.0, 0.0, quadratic.feasible_set)
        with pytest.raises(InvalidArgumentError):
            Objective("bad", quadratic.evaluator, 1.0, 1.5, quadratic.feasible_set)

    def test_infeasible_center(self, quadratic):
        with pytest.raises(InvalidArgumentError):
            Objective(
                "bad", quadratic.evaluator, 1.0, 1.0,
                Box([-1, -1], [1, 1]), center=np.array([2.0, 0.0]),
            )
