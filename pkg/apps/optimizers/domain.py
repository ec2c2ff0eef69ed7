import math
from dataclasses import dataclass
from typing import Callable, List, Tuple, Union

import numpy as np

Scalar = float
Point = Union[float, Tuple[float, ...]]


@dataclass(frozen=True)
class Bracket:
    """Three abscissae a < b < c with f(b) no larger than f(a) or f(c)."""

    a: float
    b: float
    c: float
    fa: float
    fb: float
    fc: float
    evaluations: int = 3

    def __post_init__(self):
        if not (self.a < self.b < self.c):
            raise ValueError(f"bracket needs a < b < c, got ({self.a}, {self.b}, {self.c})")
        if self.fb > self.fa or self.fb > self.fc:
            raise ValueError("bracket middle value must not exceed the outer values")

    @classmethod
    def from_points(cls, f: Callable[[float], float], a: float, b: float, c: float) -> "Bracket":
        return cls(a, b, c, f(a), f(b), f(c), evaluations=3)

    def contains(self, x: float) -> bool:
        return self.a <= x <= self.c


@dataclass(frozen=True)
class SearchReport:
    argmin: Point
    min_value: float
    evaluations: int
    iterations: int
    converged: bool
    boundary: bool = False

    def __post_init__(self):
        if self.iterations < 1 or self.evaluations < self.iterations:
            raise ValueError(
                f"inconsistent counts: {self.evaluations} evaluations, {self.iterations} iterations"
            )


class CountingObjective:
    """Wraps an objective, counts calls and maps NaN to +inf."""

    def __init__(self, func: Callable):
        self.func = func
        self.count = 0
        self.history: List[Tuple[object, float]] = []

    def __call__(self, x):
        self.count += 1
        value = float(self.func(x))
        if math.isnan(value):
            value = math.inf
        self.history.append((np.copy(x) if isinstance(x, np.ndarray) else x, value))
        return value
