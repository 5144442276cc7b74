"""The restart strategy S[f] for Rabin languages, kept in O(k) counters.

After the n-th restart the strategy samples blocks of ``2*f(n)`` steps and
restarts as soon as the second half of the segment sampled so far is not
good.  Instead of storing the segment it remembers, per pair ``i``, the
last position carrying ``e_i`` and the last position carrying ``f_i``;
the second half starting at position ``h`` is ``i``-good iff
``last_e[i] >= h`` and ``last_f[i] < h``.
"""
from __future__ import annotations

import enum


class Action(enum.Enum):
    CONTINUE = "c"
    RESTART = "r"


CONTINUE = Action.CONTINUE
RESTART = Action.RESTART


class PolyGrowth:
    """``n -> max(1, n**c)``; the clamp keeps the first segment non-empty."""

    def __init__(self, c: int):
        if int(c) != c or c < 1:
            raise ValueError(f"exponent must be a positive integer, got {c!r}")
        self.c = int(c)

    def __call__(self, n: int) -> int:
        return max(1, n ** self.c)

    def __repr__(self):
        return f"PolyGrowth({self.c})"


class ConstGrowth:
    """Bounded growth ``n -> b``.  Not a valid testing strategy parameter."""

    def __init__(self, b: int):
        if int(b) != b or b < 1:
            raise ValueError(f"bound must be a positive integer, got {b!r}")
        self.b = int(b)

    def __call__(self, n: int) -> int:
        return self.b

    def __repr__(self):
        return f"ConstGrowth({self.b})"


class ExpGrowth:
    """``n -> 2**n``.  Exponential growth gives infinite expected overhead."""

    def __call__(self, n: int) -> int:
        return 2 ** n

    def __repr__(self):
        return "ExpGrowth()"


def poly_growth(c: int) -> PolyGrowth:
    return PolyGrowth(c)


def const_growth(b: int) -> ConstGrowth:
    return ConstGrowth(b)


class RestartStrategy:
    """One session of S[f] over marker sets with ``k`` Rabin pairs.

    Feed the observation of the initial state first, then one observation
    per step.  After :data:`RESTART` is returned the next observation is
    taken to be position 0 of a fresh segment.
    """

    __slots__ = ("k", "growth", "restarts", "position", "block",
                 "next_check", "last_e", "last_f", "_limit")

    def __init__(self, k: int, growth):
        if k < 1:
            raise ValueError("k must be positive")
        self.k = k
        self.growth = growth
        self._limit = 1 << (2 * k)
        self.restarts = 0
        self._new_segment()

    def _new_segment(self):
        f = self.growth(self.restarts)
        if f < 1:
            raise ValueError(f"growth function returned {f} for n={self.restarts}")
        self.block = 2 * f
        self.next_check = self.block
        self.position = -1
        self.last_e = [-1] * self.k
        self.last_f = [-1] * self.k

    def counter_footprint(self) -> int:
        # restarts, position, block, next_check + two counters per pair
        return 4 + len(self.last_e) + len(self.last_f)

    def second_half_good(self) -> bool:
        half = (self.position + 1) // 2
        last_f = self.last_f
        for i, le in enumerate(self.last_e):
            if le >= half and last_f[i] < half:
                return True
        return False

    def observe(self, obs: int) -> Action:
        if obs >= self._limit or obs < 0:
            raise ValueError(f"marker set {obs:#b} uses an index above k={self.k}")
        self.position += 1
        m = self.position
        if obs:
            bit = 1
            for i in range(self.k):
                if obs & bit:
                    self.last_e[i] = m
                if obs & (bit << 1):
                    self.last_f[i] = m
                bit <<= 2
        if m != self.next_check:
            return CONTINUE
        if self.second_half_good():
            self.next_check += self.block
            return CONTINUE
        self.restarts += 1
        self._new_segment()
        return RESTART


class ContinueForever:
    """Trivial strategy that never restarts."""

    restarts = 0

    def observe(self, obs) -> Action:
        return CONTINUE


def restart_positions(strategy: RestartStrategy, observations) -> list[tuple[int, int]]:
    """Drive ``strategy`` over a flat observation list.

    Returns ``(index, segment_position)`` for every restart; after a restart
    the following observation is treated as a fresh initial observation.
    """
    out = []
    for idx, obs in enumerate(observations):
        pos = strategy.position + 1
        if strategy.observe(obs) is RESTART:
            out.append((idx, pos))
    return out
