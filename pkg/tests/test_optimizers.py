import math

import numpy as np
import pytest
from django.test import SimpleTestCase

from apps.optimizers.domain import Bracket, CountingObjective, SearchReport
from apps.optimizers.powell import powell_min
from apps.optimizers.scalar import bracket_minimum, brent_min, minimize_scalar


class Counter:
    def __init__(self, func):
        self.func = func
        self.calls = 0

    def __call__(self, x):
        self.calls += 1
        return self.func(x)


def rosenbrock(p):
    x, y = p
    return (1.0 - x) ** 2 + 100.0 * (y - x * x) ** 2


SCALAR_SUITE = [
    (lambda x: (x - 2.0) ** 2, 0.0, (-10.0, 10.0), 2.0),
    (lambda x: (x + 3.5) ** 2 + 1.0, 1.0, (-10.0, 10.0), -3.5),
    (lambda x: (x - 1.5) ** 4, 0.0, (-5.0, 5.0), 1.5),
    (lambda x: abs(x - 0.7), 3.0, (-5.0, 5.0), 0.7),
    (lambda x: -math.cos(x), 0.8, (-2.0, 2.0), 0.0),
    (lambda x: math.exp(x) - 2.0 * x, -1.0, (-5.0, 5.0), math.log(2.0)),
]


@pytest.mark.parametrize("func,x0,bounds,expected", SCALAR_SUITE)
def test_scalar_suite_recovers_minimum(func, x0, bounds, expected):
    x_tol = 1e-5
    report = minimize_scalar(func, x0, 0.5, bounds, x_tol=x_tol, max_iter=200)
    assert report.converged
    assert abs(report.argmin - expected) <= 2 * x_tol


@pytest.mark.parametrize("func,x0,bounds,expected", SCALAR_SUITE)
def test_scalar_evaluation_count_matches_calls(func, x0, bounds, expected):
    counted = Counter(func)
    report = minimize_scalar(counted, x0, 0.5, bounds, x_tol=1e-4)
    assert report.evaluations == counted.calls


@pytest.mark.parametrize(
    "func,expected",
    [(lambda x: math.exp(x) - 2.0 * x, math.log(2.0)), (lambda x: abs(x - 1.0), 1.0), (lambda x: (x - 1.5) ** 4, 1.5)],
)
def test_tighter_tolerance_tightens_the_argmin(func, expected):
    for x_tol in (1e-2, 1e-3, 1e-4, 1e-5, 1e-6):
        report = minimize_scalar(func, 0.0, 0.5, (-5.0, 5.0), x_tol=x_tol, max_iter=200)
        assert report.converged
        assert abs(report.argmin - expected) <= 2 * x_tol


class BracketTests(SimpleTestCase):
    def test_bracket_contains_minimum(self):
        found = bracket_minimum(lambda x: (x - 4.0) ** 2, 0.0, 1.0)
        self.assertIsInstance(found, Bracket)
        self.assertTrue(found.contains(4.0))
        self.assertLessEqual(found.fb, min(found.fa, found.fc))

    def test_monotone_function_reports_boundary(self):
        report = minimize_scalar(lambda x: x, 2.0, 0.5, (0.0, 5.0))
        self.assertTrue(report.boundary)
        self.assertEqual(report.argmin, 0.0)

    def test_supplied_start_value_is_not_recounted(self):
        counted = Counter(lambda x: (x - 1.0) ** 2)
        found = bracket_minimum(counted, 0.0, 0.5, f0=1.0)
        self.assertEqual(found.evaluations, counted.calls)

    def test_invalid_step(self):
        with self.assertRaises(ValueError):
            bracket_minimum(lambda x: x * x, 0.0, 0.0)

    def test_invalid_bracket(self):
        with self.assertRaises(ValueError):
            Bracket(1.0, 0.0, 2.0, 1.0, 0.0, 1.0)
        with self.assertRaises(ValueError):
            Bracket(0.0, 1.0, 2.0, 1.0, 5.0, 1.0)

    def test_brent_stays_inside_bracket(self):
        seen = []

        def func(x):
            seen.append(x)
            return (x - 0.3) ** 2

        bracket = Bracket.from_points(func, -1.0, 0.0, 1.0)
        report = brent_min(func, bracket, x_tol=1e-6)
        self.assertTrue(all(-1.0 <= x <= 1.0 for x in seen))
        self.assertAlmostEqual(report.argmin, 0.3, delta=2e-6)
        self.assertEqual(report.evaluations, len(seen))

    def test_nan_is_treated_as_infinite(self):
        counted = CountingObjective(lambda x: float("nan"))
        self.assertEqual(counted(1.0), math.inf)
        self.assertEqual(counted.count, 1)

    def test_report_counts_are_consistent(self):
        with self.assertRaises(ValueError):
            SearchReport(argmin=0.0, min_value=0.0, evaluations=1, iterations=2, converged=True)


class PowellTests(SimpleTestCase):
    def test_rosenbrock(self):
        report = powell_min(rosenbrock, (-1.2, 1.0), x_tol=1e-8, max_iter=500)
        self.assertLessEqual(report.min_value, 1e-6)
        self.assertAlmostEqual(report.argmin[0], 1.0, delta=1e-2)
        self.assertAlmostEqual(report.argmin[1], 1.0, delta=2e-2)

    def test_separable_quadratic(self):
        report = powell_min(lambda p: (p[0] - 1.0) ** 2 + 10.0 * (p[1] + 2.0) ** 2, (0.0, 0.0), x_tol=1e-6)
        self.assertTrue(report.converged)
        np.testing.assert_allclose(report.argmin, (1.0, -2.0), atol=1e-4)

    def test_coupled_quadratic_reaches_the_exact_minimizer(self):
        def bowl(p):
            u, v = p[0] - 1.0, p[1] + 2.0
            return 4.0 * u * u + 3.0 * u * v + 2.0 * v * v

        report = powell_min(bowl, (0.0, 0.0), x_tol=1e-12, max_iter=50)
        self.assertTrue(report.converged)
        self.assertLessEqual(report.iterations, 5)
        np.testing.assert_allclose(report.argmin, (1.0, -2.0), rtol=0, atol=1e-10)

    def test_box_constraint(self):
        seen = []

        def func(p):
            seen.append(np.array(p))
            return (p[0] - 3.0) ** 2 + (p[1] - 3.0) ** 2

        report = powell_min(func, (0.5, 0.5), bounds=[(0.0, 2.0), (0.0, 2.0)], x_tol=1e-6)
        np.testing.assert_allclose(report.argmin, (2.0, 2.0), atol=1e-4)
        self.assertTrue(all(np.all(p >= 0.0) and np.all(p <= 2.0) for p in seen))

    def test_evaluation_count_matches_calls(self):
        counted = Counter(rosenbrock)
        report = powell_min(counted, (-1.2, 1.0), x_tol=1e-4, max_iter=50)
        self.assertEqual(report.evaluations, counted.calls)

    def test_callback_can_abort(self):
        def stop(iteration, x, fx):
            raise RuntimeError("stop")

        with self.assertRaises(RuntimeError):
            powell_min(rosenbrock, (-1.2, 1.0), callback=stop)
