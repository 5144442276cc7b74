"""A four-state majority population protocol exposed as a black-box system.

Agents are strong (A, B) or weak (a, b).  Each step the scheduler picks an
ordered pair of distinct agents uniformly at random and applies, in either
orientation, the first matching rule::

    A + B -> a + b      A + b -> A + a      B + a -> B + b      a + b -> a + a

The configuration is held as four counts; the explicit chain is never built.
"""
from __future__ import annotations

from .model import make_rng, marker_set

A, B, WA, WB = range(4)
NAMES = ("A", "B", "a", "b")

# (x, y) -> (x', y') for every unordered rule, both orientations
_RULES = {}
for (x, y), (x2, y2) in {(A, B): (WA, WB), (A, WB): (A, WA),
                         (B, WA): (B, WB), (WA, WB): (WA, WA)}.items():
    _RULES[(x, y)] = (x2, y2)
    _RULES[(y, x)] = (y2, x2)

GOOD = marker_set(e=[1])
BAD = marker_set(f=[1])
MAX_AGENTS = 30


class MajoritySystem:
    """Black-box session; observation is {e1} once every agent holds the
    initial majority opinion and {f1} while some agent holds the minority one."""

    k = 1

    def __init__(self, n_a: int, n_b: int, seed=0):
        if n_a < 1 or n_b < 1:
            raise ValueError("both opinions need at least one agent")
        if n_a == n_b:
            raise ValueError("tie: majority is undefined for equal populations")
        if n_a + n_b > MAX_AGENTS:
            raise ValueError(f"at most {MAX_AGENTS} agents supported")
        self.initial = (n_a, n_b, 0, 0)
        self.n = n_a + n_b
        self.majority = A if n_a > n_b else B
        self.rng = make_rng(seed)
        self.counts = list(self.initial)

    def _observe(self):
        c = self.counts
        if self.majority == A:
            return GOOD if c[B] == 0 and c[WB] == 0 else BAD
        return GOOD if c[A] == 0 and c[WA] == 0 else BAD

    def reset(self):
        self.counts = list(self.initial)
        return self._observe()

    def _kind(self, idx):
        c = self.counts
        bound = c[A]
        if idx < bound:
            return A
        bound += c[B]
        if idx < bound:
            return B
        bound += c[WA]
        if idx < bound:
            return WA
        return WB

    def step(self):
        rand = self.rng.random
        n = self.n
        i = int(rand() * n)
        j = int(rand() * (n - 1))
        if j >= i:
            j += 1
        x, y = self._kind(i), self._kind(j)
        out = _RULES.get((x, y))
        if out is not None:
            c = self.counts
            c[x] -= 1
            c[y] -= 1
            c[out[0]] += 1
            c[out[1]] += 1
        return self._observe()

    def config(self) -> dict:
        return dict(zip(NAMES, self.counts))


def gen_majority(n_a: int, n_b: int, seed=0) -> MajoritySystem:
    return MajoritySystem(n_a, n_b, seed)
