"""Box-constrained quasi-Newton minimizer.

Small projected-BFGS engine used as the fallback stage of the combined
solvers: inverse-Hessian updates from gradient differences, Armijo
backtracking on the projected step path (the trial point is clipped to
the box, so steps slide along active bounds and the objective is never
evaluated outside it). Stops as soon as the objective drops to the
requested value.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

ARMIJO_C = 1e-4
SHRINK = 0.5
STALL_TOL = 1e-12
_MAX_BACKTRACKS = 60


class OptStatus(enum.Enum):
    TOLERANCE_REACHED = "tolerance_reached"
    STALLED = "stalled"
    ITERATION_CAP = "iteration_cap"


class NonFiniteObjectiveError(RuntimeError):
    """Objective or gradient produced a non-finite value."""

    def __init__(self, x):
        self.x = np.array(x, dtype=float)
        super().__init__(f"objective returned a non-finite value at x={self.x.tolist()}")


@dataclass(frozen=True)
class OptProblem:
    """Objective with analytic gradient, box bounds, and a start point."""

    objective: object  # callable x -> (f, grad)
    bounds: np.ndarray  # (n, 2)
    x0: np.ndarray

    def __post_init__(self):
        bounds = np.asarray(self.bounds, dtype=float)
        x0 = np.asarray(self.x0, dtype=float)
        if bounds.ndim != 2 or bounds.shape[1] != 2:
            raise ValueError("bounds must be an (n, 2) array")
        if x0.shape != (bounds.shape[0],):
            raise ValueError("x0 length must match the number of bounds")
        if np.any(bounds[:, 0] > bounds[:, 1]):
            raise ValueError("bounds must satisfy lo <= hi")
        if np.any(x0 < bounds[:, 0]) or np.any(x0 > bounds[:, 1]):
            raise ValueError("x0 must lie inside the bounds")
        object.__setattr__(self, "bounds", bounds)
        object.__setattr__(self, "x0", x0)


@dataclass(frozen=True)
class OptResult:
    x: np.ndarray
    f: float
    iterations: int
    status: OptStatus


def _evaluate(problem: OptProblem, x):
    f, g = problem.objective(x)
    g = np.asarray(g, dtype=float)
    if not np.isfinite(f) or not np.all(np.isfinite(g)):
        raise NonFiniteObjectiveError(x)
    if g.shape != x.shape:
        raise ValueError("gradient length must match the problem dimension")
    return float(f), g


def _freeze(d, x, lo, hi):
    """Zero direction components that push out of an active bound."""
    d = d.copy()
    d[(x <= lo) & (d < 0.0)] = 0.0
    d[(x >= hi) & (d > 0.0)] = 0.0
    return d


def minimize(problem: OptProblem, stop_value: float, max_iters: int = 200) -> OptResult:
    """Drive the objective to f <= stop_value inside the box.

    Returns the first iterate reaching stop_value, or Stalled when no
    progress is possible (projected gradient and step below 1e-12), or
    IterationCap after max_iters accepted steps.
    """
    if stop_value <= 0.0:
        raise ValueError("stop_value must be positive")
    lo = problem.bounds[:, 0]
    hi = problem.bounds[:, 1]
    n = lo.shape[0]

    x = np.clip(problem.x0, lo, hi)
    f, g = _evaluate(problem, x)
    if f <= stop_value:
        return OptResult(x, f, 0, OptStatus.TOLERANCE_REACHED)

    H = np.eye(n)
    fresh_h = True
    sd_alpha = 1.0  # step memory for the gradient fallback mode
    prev_active = None
    iterations = 0
    while iterations < max_iters:
        # curvature gathered under one active set misleads the next:
        # restart the model whenever a bound activates or releases
        active = ((x <= lo) & (g > 0.0)) | ((x >= hi) & (g < 0.0))
        if prev_active is not None and not np.array_equal(active, prev_active):
            H = np.eye(n)
            fresh_h = True
        prev_active = active

        d = _freeze(-(H @ g), x, lo, hi)
        descent = float(np.dot(g, d))
        if descent >= 0.0 or not np.all(np.isfinite(d)):
            # curvature model unusable here: projected steepest descent
            H = np.eye(n)
            fresh_h = True
            d = _freeze(-g, x, lo, hi)
            descent = float(np.dot(g, d))
        if float(np.max(np.abs(d), initial=0.0)) <= STALL_TOL:
            return OptResult(x, f, iterations, OptStatus.STALLED)

        # A scaled curvature model wants the unit step; the gradient
        # fallback has no scale, so reuse (and grow) the last working
        # step length. Without this, flat or negative-curvature ridges,
        # where every update pair is rejected, reduce progress to
        # gradient-sized creep.
        alpha = sd_alpha if fresh_h else 1.0

        # Armijo backtracking on the projected path: the trial point is
        # clipped to the box, so the step may bend along newly hit bounds
        accepted = False
        first_try = True
        for _ in range(_MAX_BACKTRACKS):
            x_new = np.clip(x + alpha * d, lo, hi)
            s = x_new - x
            if float(np.max(np.abs(s), initial=0.0)) <= 1e-17:
                break
            gs = float(np.dot(g, s))
            f_new, g_new = _evaluate(problem, x_new)
            if gs < 0.0 and f_new <= f + ARMIJO_C * gs:
                accepted = True
                break
            alpha *= SHRINK
            first_try = False
        if not accepted:
            return OptResult(x, f, iterations, OptStatus.STALLED)
        if fresh_h:
            sd_alpha = min(alpha * 2.0, 1e8) if first_try else max(alpha, 1e-8)
        else:
            sd_alpha = 1.0

        iterations += 1
        y = g_new - g
        x, f, g = x_new, f_new, g_new
        if f <= stop_value:
            return OptResult(x, f, iterations, OptStatus.TOLERANCE_REACHED)

        step = float(np.max(np.abs(s)))
        proj_grad = float(np.max(np.abs(np.clip(x - g, lo, hi) - x)))
        if step <= STALL_TOL and proj_grad <= STALL_TOL:
            return OptResult(x, f, iterations, OptStatus.STALLED)

        # bound-frozen components did not move; their gradient change is
        # cross-coupling, not curvature along the step, and would corrupt
        # the free-subspace model
        y_eff = np.where(s == 0.0, 0.0, y)
        sy = float(np.dot(s, y_eff))
        if sy > 1e-12 * float(np.linalg.norm(s)) * float(np.linalg.norm(y_eff)):
            if fresh_h:
                # scale the unit model to the observed curvature before
                # the first update after a reset
                H = (sy / float(np.dot(y_eff, y_eff))) * np.eye(n)
                fresh_h = False
            rho = 1.0 / sy
            eye = np.eye(n)
            V = eye - rho * np.outer(s, y_eff)
            H = V @ H @ V.T + rho * np.outer(s, s)
        else:
            # curvature update would lose positive definiteness
            H = np.eye(n)
            fresh_h = True

    return OptResult(x, f, iterations, OptStatus.ITERATION_CAP)
