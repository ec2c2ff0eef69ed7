"""Bracketing and Brent's method for bounded scalar minimization."""

import math
from typing import Callable, Optional, Tuple, Union

from .domain import Bracket, CountingObjective, SearchReport

GOLDEN_RATIO = 1.618033988749895
GOLDEN_SECTION = 0.381966011250105097
_EPS = 2.220446049250313e-16


def _clip(x: float, bounds: Tuple[float, float]) -> float:
    return min(max(x, bounds[0]), bounds[1])


def bracket_minimum(
    f: Callable[[float], float],
    x0: float,
    step: float,
    bounds: Tuple[float, float] = (-math.inf, math.inf),
    f0: Optional[float] = None,
    max_expansions: int = 60,
) -> Union[Bracket, SearchReport]:
    """Walk downhill from x0 with golden-ratio growing steps until f turns up.

    Returns a Bracket inside `bounds`, or a boundary SearchReport when f keeps
    decreasing up to a bound.
    """
    if not step > 0:
        raise ValueError(f"step must be positive, got {step}")
    lo, hi = bounds
    if not lo < hi:
        raise ValueError(f"empty bounds {bounds}")

    counted = CountingObjective(f)
    a = _clip(x0, bounds)
    # a caller-supplied f0 is not counted again
    fa = counted(a) if f0 is None or a != x0 else float(f0)

    def boundary(x, fx):
        return SearchReport(
            argmin=x,
            min_value=fx,
            evaluations=max(counted.count, 1),
            iterations=1,
            converged=True,
            boundary=True,
        )

    b = _clip(a + step, bounds)
    if b == a:
        b = _clip(a - step, bounds)
    fb = counted(b)
    if fb > fa:
        a, b, fa, fb = b, a, fb, fa

    for _ in range(max_expansions):
        c = _clip(b + GOLDEN_RATIO * (b - a), bounds)
        if c == b:
            return boundary(b, fb)
        fc = counted(c)
        if fc >= fb:
            if a > c:
                a, c, fa, fc = c, a, fc, fa
            return Bracket(a, b, c, fa, fb, fc, evaluations=counted.count)
        if c in bounds:
            return boundary(c, fc)
        a, b, fa, fb = b, c, fb, fc
    return boundary(b, fb)


def brent_min(
    f: Callable[[float], float],
    bracket: Bracket,
    x_tol: float = 1e-2,
    max_iter: int = 50,
) -> SearchReport:
    """Brent's parabolic-interpolation search inside `bracket`.

    Falls back to golden-section steps when the parabola is rejected or any of
    the three retained values is not finite. Never evaluates outside
    [bracket.a, bracket.c].
    """
    if not x_tol > 0:
        raise ValueError(f"x_tol must be positive, got {x_tol}")
    counted = CountingObjective(f)
    a, b = bracket.a, bracket.c
    x, fx = bracket.b, bracket.fb
    x_sec, fx_sec = x, fx
    x_trd, fx_trd = x, fx
    d, e = 0.0, 0.0
    converged = False
    iterations = 0

    for iterations in range(1, max_iter + 1):
        mid = 0.5 * (a + b)
        tol1 = max(0.5 * x_tol, 4.0 * _EPS * abs(x))
        tol2 = 2.0 * tol1

        if abs(x - mid) <= tol2 - 0.5 * (b - a):
            converged = True
            break

        finite = all(math.isfinite(v) for v in (fx, fx_sec, fx_trd))
        if abs(e) > tol1 and finite:
            tmp1 = (x - x_sec) * (fx - fx_trd)
            denominator = (x - x_trd) * (fx - fx_sec)
            numerator = (x - x_trd) * denominator - (x - x_sec) * tmp1
            denominator = 2.0 * (denominator - tmp1)
            if denominator > 0.0:
                numerator = -numerator
            denominator = abs(denominator)
            tmp1 = e
            e = d
            if (
                abs(numerator) >= abs(0.5 * denominator * tmp1)
                or numerator <= denominator * (a - x)
                or numerator >= denominator * (b - x)
            ):
                e = b - x if x < mid else a - x
                d = GOLDEN_SECTION * e
            else:
                d = numerator / denominator
                x_new = x + d
                if (x_new - a < tol2) or (b - x_new < tol2):
                    d = tol1 if x < mid else -tol1
        else:
            e = b - x if x < mid else a - x
            d = GOLDEN_SECTION * e

        if tol1 <= abs(d):
            x_new = x + d
        elif d > 0.0:
            x_new = x + tol1
        else:
            x_new = x - tol1
        x_new = min(max(x_new, a), b)
        fx_new = counted(x_new)

        if fx_new <= fx:
            if x_new >= x:
                a = x
            else:
                b = x
            x_trd, fx_trd = x_sec, fx_sec
            x_sec, fx_sec = x, fx
            x, fx = x_new, fx_new
        else:
            if x_new < x:
                a = x_new
            else:
                b = x_new
            if fx_new <= fx_sec or x_sec == x:
                x_trd, fx_trd = x_sec, fx_sec
                x_sec, fx_sec = x_new, fx_new
            elif fx_new <= fx_trd or x_trd == x or x_trd == x_sec:
                x_trd, fx_trd = x_new, fx_new

    return SearchReport(
        argmin=x,
        min_value=fx,
        evaluations=bracket.evaluations + counted.count,
        iterations=max(iterations, 1),
        converged=converged,
    )


def minimize_scalar(
    f: Callable[[float], float],
    x0: float,
    step: float,
    bounds: Tuple[float, float],
    x_tol: float = 1e-2,
    max_iter: int = 50,
    f0: Optional[float] = None,
) -> SearchReport:
    """Bracket then Brent; boundary minima come back as boundary reports."""
    found = bracket_minimum(f, x0, step, bounds, f0=f0)
    if isinstance(found, SearchReport):
        return found
    return brent_min(f, found, x_tol=x_tol, max_iter=max_iter)
