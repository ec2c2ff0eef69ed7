"""Powell's direction-set method with bounded Brent line searches."""

import logging
import math
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .domain import CountingObjective, SearchReport
from .scalar import minimize_scalar

logger = logging.getLogger("clipforge.optimizers")

Bounds = Optional[Sequence[Tuple[float, float]]]


def _line_range(x: np.ndarray, direction: np.ndarray, bounds: Bounds) -> Tuple[float, float]:
    """Range of t keeping x + t*direction inside the box."""
    if bounds is None:
        return -math.inf, math.inf
    t_lo, t_hi = -math.inf, math.inf
    for xi, di, (lo, hi) in zip(x, direction, bounds):
        if di == 0:
            continue
        first, second = (lo - xi) / di, (hi - xi) / di
        t_lo = max(t_lo, min(first, second))
        t_hi = min(t_hi, max(first, second))
    return min(t_lo, 0.0), max(t_hi, 0.0)


def _clip_to_box(x: np.ndarray, bounds: Bounds) -> np.ndarray:
    if bounds is None:
        return x
    lows = np.array([lo for lo, _ in bounds], dtype=np.float64)
    highs = np.array([hi for _, hi in bounds], dtype=np.float64)
    return np.clip(x, lows, highs)


def _line_minimize(f, x, fx, direction, bounds, x_tol, step, line_max_iter):
    t_lo, t_hi = _line_range(x, direction, bounds)
    if t_hi - t_lo <= 0:
        return x, fx
    scale = float(np.max(np.abs(direction)))
    report = minimize_scalar(
        lambda t: f(_clip_to_box(x + t * direction, bounds)),
        0.0,
        step / scale,
        (t_lo, t_hi),
        x_tol=x_tol / scale,
        max_iter=line_max_iter,
        f0=fx,
    )
    if report.min_value < fx:
        return _clip_to_box(x + report.argmin * direction, bounds), report.min_value
    return x, fx


def powell_min(
    f: Callable[[np.ndarray], float],
    x0: Sequence[float],
    x_tol: float = 1e-2,
    max_iter: int = 50,
    bounds: Bounds = None,
    step: float = 0.5,
    f_rtol: float = 1e-14,
    line_max_iter: int = 100,
    callback: Optional[Callable[[int, np.ndarray, float], None]] = None,
) -> SearchReport:
    """Minimize f over R^n (optionally a box) without derivatives.

    Each outer iteration line-minimizes along every direction of the set,
    then swaps the direction of largest decrease for the net displacement
    when that passes the usual extrapolation test. The set is reset to the
    coordinate axes every n+1 iterations. Stops when no coordinate moved by
    more than x_tol in an iteration or the relative decrease is negligible.
    `callback(iteration, x, fx)` runs after every outer iteration; it may
    raise to abort the search.
    """
    counted = CountingObjective(lambda x: f(np.asarray(x, dtype=np.float64)))
    x = _clip_to_box(np.asarray(x0, dtype=np.float64).copy(), bounds)
    n = x.size
    directions = np.eye(n)
    fx = counted(x)
    converged = False
    iteration = 0

    for iteration in range(1, max_iter + 1):
        if iteration > 1 and (iteration - 1) % (n + 1) == 0:
            directions = np.eye(n)

        x_start, f_start = x.copy(), fx
        largest_drop, largest_index = 0.0, 0
        for index in range(n):
            f_before = fx
            x, fx = _line_minimize(
                counted, x, fx, directions[index], bounds, x_tol, step, line_max_iter
            )
            drop = f_before - fx
            if drop > largest_drop:
                largest_drop, largest_index = drop, index

        moved = float(np.max(np.abs(x - x_start)))
        if moved <= x_tol:
            converged = True
            break
        if 2.0 * (f_start - fx) <= f_rtol * (abs(f_start) + abs(fx)) + 1e-300:
            converged = True
            break

        displacement = x - x_start
        extrapolated = _clip_to_box(x + displacement, bounds)
        f_extrapolated = counted(extrapolated)
        if f_extrapolated < f_start:
            test = 2.0 * (f_start - 2.0 * fx + f_extrapolated) * (f_start - fx - largest_drop) ** 2
            test -= largest_drop * (f_start - f_extrapolated) ** 2
            if test < 0.0:
                x, fx = _line_minimize(
                    counted, x, fx, displacement, bounds, x_tol, step, line_max_iter
                )
                directions[largest_index] = directions[-1]
                directions[-1] = displacement

        if callback is not None:
            callback(iteration, x.copy(), fx)

    if not converged:
        logger.debug(f"powell stopped after {iteration} iterations without converging")
    return SearchReport(
        argmin=tuple(float(v) for v in x),
        min_value=float(fx),
        evaluations=counted.count,
        iterations=max(iteration, 1),
        converged=converged,
    )
