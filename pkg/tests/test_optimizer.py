import math

import numpy as np
import pytest

from fabrik_sqp.optimizer import (
    NonFiniteObjectiveError,
    OptProblem,
    OptResult,
    OptStatus,
    minimize,
)


def quadratic_1d(center):
    def fg(x):
        return float((x[0] - center) ** 2), np.array([2.0 * (x[0] - center)])

    return fg


def rosenbrock(x):
    a, b = 1.0, 100.0
    f = (a - x[0]) ** 2 + b * (x[1] - x[0] ** 2) ** 2
    g = np.array(
        [
            -2.0 * (a - x[0]) - 4.0 * b * x[0] * (x[1] - x[0] ** 2),
            2.0 * b * (x[1] - x[0] ** 2),
        ]
    )
    return float(f), g


class TestMinimize:
    def test_interior_quadratic(self):
        problem = OptProblem(quadratic_1d(1.0), np.array([[0.0, 2.0]]), np.array([0.0]))
        result = minimize(problem, 1e-12)
        assert result.status is OptStatus.TOLERANCE_REACHED
        assert result.f <= 1e-12
        assert result.x[0] == pytest.approx(1.0, abs=1e-6)

    def test_bound_active_minimum(self):
        # unconstrained minimum at -1 sits outside [0, 2]
        problem = OptProblem(quadratic_1d(-1.0), np.array([[0.0, 2.0]]), np.array([1.0]))
        result = minimize(problem, 1e-12)
        assert result.status is OptStatus.STALLED
        assert result.x[0] == 0.0
        assert result.f == pytest.approx(1.0, abs=1e-12)

    def test_rosenbrock(self):
        problem = OptProblem(
            rosenbrock, np.array([[-2.0, 2.0], [-2.0, 2.0]]), np.array([-1.2, 1.0])
        )
        result = minimize(problem, 1e-14, max_iters=500)
        assert result.status is OptStatus.TOLERANCE_REACHED
        assert np.allclose(result.x, [1.0, 1.0], atol=1e-6)
        # dense grid refinement cross-check: nothing on a local grid beats it
        grid = np.linspace(-0.02, 0.02, 21)
        best_grid = min(
            rosenbrock(result.x + np.array([dx, dy]))[0] for dx in grid for dy in grid
        )
        assert result.f <= best_grid + 1e-14

    def test_already_at_tolerance_returns_zero_iterations(self):
        problem = OptProblem(quadratic_1d(0.5), np.array([[0.0, 2.0]]), np.array([0.5]))
        result = minimize(problem, 1e-9)
        assert result.iterations == 0
        assert result.status is OptStatus.TOLERANCE_REACHED

    def test_iteration_cap(self):
        problem = OptProblem(
            rosenbrock, np.array([[-2.0, 2.0], [-2.0, 2.0]]), np.array([-1.2, 1.0])
        )
        result = minimize(problem, 1e-18, max_iters=3)
        assert result.status is OptStatus.ITERATION_CAP
        assert result.iterations == 3

    def test_x0_outside_bounds_rejected(self):
        with pytest.raises(ValueError):
            OptProblem(quadratic_1d(0.0), np.array([[0.0, 1.0]]), np.array([2.0]))

    def test_non_finite_objective_reports_x(self):
        def bad(x):
            return math.nan, np.zeros(1)

        problem = OptProblem(bad, np.array([[-1.0, 1.0]]), np.array([0.5]))
        with pytest.raises(NonFiniteObjectiveError) as info:
            minimize(problem, 1e-9)
        assert info.value.x.shape == (1,)

    def test_deterministic(self):
        problem = OptProblem(
            rosenbrock, np.array([[-2.0, 2.0], [-2.0, 2.0]]), np.array([-1.2, 1.0])
        )
        a = minimize(problem, 1e-14, max_iters=500)
        b = minimize(problem, 1e-14, max_iters=500)
        assert a.iterations == b.iterations
        assert np.array_equal(a.x, b.x)


class TestMinimizeProperties:
    """Monotone acceptance and box feasibility over random problems."""

    def random_problem(self, rng):
        n = int(rng.integers(1, 5))
        a = rng.normal(size=(n, n))
        h = a @ a.T + n * np.eye(n)  # well-conditioned PSD quadratic
        center = rng.normal(size=n) * 1.5
        lo = center - rng.uniform(0.1, 3.0, n) * rng.choice([0.1, 1.0, 3.0])
        hi = lo + rng.uniform(0.5, 4.0, n)
        x0 = rng.uniform(lo, hi)

        def fg(x):
            d = x - center
            return float(0.5 * d @ h @ d), h @ d

        return OptProblem(fg, np.column_stack([lo, hi]), x0), fg

    def test_monotone_acceptance_and_feasibility(self):
        rng = np.random.default_rng(13)
        for _ in range(100):
            problem, fg = self.random_problem(rng)
            evals = []
            accepted = []

            def wrapped(x, fg=fg, evals=evals):
                evals.append(np.array(x))
                return fg(x)

            tracked = OptProblem(wrapped, problem.bounds, problem.x0)
            result = minimize(tracked, 1e-14, max_iters=300)
            # every evaluated point inside the box, componentwise
            lo, hi = problem.bounds[:, 0], problem.bounds[:, 1]
            for x in evals:
                assert np.all(x >= lo) and np.all(x <= hi)
            # result inside the box
            assert np.all(result.x >= lo) and np.all(result.x <= hi)
            # accepted objective values are non-increasing: replay the
            # accepted iterates by running again and recording f at
            # strictly improving evaluations
            fs = [fg(x)[0] for x in evals]
            best = math.inf
            accepted = []
            for f in fs:
                if f < best:
                    best = f
                    accepted.append(f)
            assert all(b <= a for a, b in zip(accepted, accepted[1:]))
            # PSD quadratic on a box always ends at tolerance or a KKT stall
            assert result.status in (OptStatus.TOLERANCE_REACHED, OptStatus.STALLED)
