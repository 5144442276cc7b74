"""Closed-form bounds on restart probabilities and on the steps before the last restart.

``R_m`` and ``P_m`` are the progress radius and progress probability of a
chain, ``P_gamma`` its good-witness probability and ``P_good`` the
probability of its good runs.  Growth functions are callables ``n -> f(n)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

MAX_C = 20


@dataclass(frozen=True)
class BoundInputs:
    R_m: int
    P_m: float
    P_gamma: float
    P_good: float
    c: int

    def __post_init__(self):
        if self.R_m < 1:
            raise ValueError("R_m must be at least 1")
        if not 0 < self.P_m <= 1:
            raise ValueError("P_m must lie in (0, 1]")
        if not 0 < self.P_good <= 1:
            raise ValueError("P_good must lie in (0, 1]")
        if not 0 <= self.P_gamma <= 1:
            raise ValueError("P_gamma must lie in [0, 1]")
        if int(self.c) != self.c or self.c < 1:
            raise ValueError("c must be a positive integer")


class Threshold(NamedTuple):
    value: float
    degenerate: bool  # P_m == 1: the incorrect-restart term is already 0


def incorrect_restart_bound(n: int, f, R_m: int, P_m: float) -> float:
    """Bound on restarting from a segment that could still reach a good BSCC."""
    blocks = f(n) // R_m
    if blocks <= 1:
        return 1.0
    return min(1.0, 3.0 * (1.0 - P_m) ** (blocks - 1))


def restart_bound(n: int, f, R_m: int, P_m: float, P_good: float) -> float:
    """Bound on the probability of one more restart in a segment run with f(n)."""
    alpha = incorrect_restart_bound(n, f, R_m, P_m)
    return min(1.0, 1.0 - P_good * (1.0 - alpha))


def threshold_X(R_m: int, P_m: float, c: int) -> Threshold:
    """Restart count beyond which ``restart_bound <= 1 - P_good/2`` for f(n)=n^c."""
    if not 0 < P_m <= 1:
        raise ValueError("P_m must lie in (0, 1]")
    if P_m == 1.0:
        return Threshold((2.0 * R_m) ** (1.0 / c), True)
    base = R_m * (2.0 + math.log(1.0 / 6.0) / math.log1p(-P_m))
    return Threshold(base ** (1.0 / c), False)


def fragment_bound(n: int, f, R_m: int, P_m: float, P_gamma: float) -> float:
    """Bound on the expected length of the segment run with f(n); inf when P_gamma = 1."""
    if P_gamma >= 1.0:
        return math.inf
    return 2.0 * (R_m + f(n)) + 9.0 * R_m / (P_m * (1.0 - P_gamma))


def total_bound(inputs: BoundInputs) -> float:
    """Bound on the expected number of steps before the last restart for f(n)=n^c."""
    c = inputs.c
    if c > MAX_C:
        raise OverflowError(f"(c+1)! is not representable for c={c} > {MAX_C}")
    if inputs.P_gamma >= 1.0:
        return math.inf
    X = threshold_X(inputs.R_m, inputs.P_m, c).value
    T = 2.0 + 9.0 / (inputs.P_m * (1.0 - inputs.P_gamma))
    pg = inputs.P_good
    fact = float(math.factorial(c + 1))
    return (2.0 * X ** (c + 1)
            + X * inputs.R_m * T
            + (2.0 * inputs.R_m / pg) * T
            + 2.0 * fact * (2.0 * (X + c) ** c / pg + 2.0 ** (c + 1) / pg ** (c + 1)))


def poly_geom_sum_bound(c: int, X: int, p: float) -> float:
    """Closed-form upper bound on sum_{n >= X} n^c p^(n-X)."""
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    if c < 0 or X < 0:
        raise ValueError("c and X must be non-negative")
    q = 1.0 - p
    return math.factorial(c + 1) * ((X + c) ** c / q + 1.0 / q ** (c + 1))


def all_bounds(inputs: BoundInputs, n: int | None = None) -> dict:
    """The five quantities reported by the ``bound`` command.

    Per-segment quantities are evaluated at ``n = ceil(X)`` unless ``n`` is given.
    """
    from .strategy import PolyGrowth

    f = PolyGrowth(inputs.c)
    th = threshold_X(inputs.R_m, inputs.P_m, inputs.c)
    if n is None:
        n = max(1, math.ceil(th.value))
    q = 1.0 - inputs.P_good / 2.0
    geom = poly_geom_sum_bound(inputs.c, n, q) if 0 < q < 1 else None
    return {
        "n": n,
        "threshold_X": th.value,
        "threshold_degenerate": th.degenerate,
        "incorrect_restart_bound": incorrect_restart_bound(n, f, inputs.R_m, inputs.P_m),
        "restart_bound": restart_bound(n, f, inputs.R_m, inputs.P_m, inputs.P_good),
        "fragment_bound": fragment_bound(n, f, inputs.R_m, inputs.P_m, inputs.P_gamma),
        "poly_geom_sum_bound": geom,
        "total_bound": total_bound(inputs),
    }
