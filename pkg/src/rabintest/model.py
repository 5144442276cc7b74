"""Explicit-state labeled Markov chains and their black-box view.

A chain is labeled either with raw symbols (strings, to be read by a
Rabin automaton) or with marker sets over ``{e_1..e_k, f_1..f_k}``.
Marker sets are plain ints: ``e_i`` is bit ``2(i-1)`` and ``f_i`` is
bit ``2(i-1)+1``.
"""
from __future__ import annotations

import random
import re
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

ROW_TOLERANCE = 1e-9

_MARKER_RE = re.compile(r"^([ef])([1-9][0-9]*)$")


class ModelError(ValueError):
    """Raised for malformed or inconsistent chain descriptions."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


# --------------------------------------------------------------------------
# marker sets


def e_bit(i: int) -> int:
    return 1 << (2 * (i - 1))


def f_bit(i: int) -> int:
    return 1 << (2 * (i - 1) + 1)


def marker_set(e=(), f=()) -> int:
    """Build a marker set from the indices of its e- and f-markers."""
    mask = 0
    for i in e:
        mask |= e_bit(i)
    for i in f:
        mask |= f_bit(i)
    return mask


def marker_limit(mask: int) -> int:
    """Smallest k such that ``mask`` only uses markers with index <= k."""
    return (mask.bit_length() + 1) // 2


def check_markers(mask: int, k: int) -> None:
    if mask < 0 or mask >> (2 * k):
        raise ValueError(f"marker set {format_markers(mask)} uses an index above k={k}")


def parse_markers(token: str) -> int:
    """Parse ``-`` or a comma separated list such as ``e1,f2``."""
    if token == "-":
        return 0
    mask = 0
    for part in token.split(","):
        m = _MARKER_RE.match(part.strip())
        if m is None:
            raise ValueError(f"bad marker {part!r}")
        i = int(m.group(2))
        mask |= e_bit(i) if m.group(1) == "e" else f_bit(i)
    return mask


def format_markers(mask: int) -> str:
    if mask == 0:
        return "-"
    parts = []
    for i in range(1, marker_limit(mask) + 1):
        if mask & e_bit(i):
            parts.append(f"e{i}")
        if mask & f_bit(i):
            parts.append(f"f{i}")
    return ",".join(parts)


def looks_like_markers(token: str) -> bool:
    try:
        parse_markers(token)
    except ValueError:
        return False
    return True


# --------------------------------------------------------------------------
# chains


@dataclass(frozen=True, eq=False)
class LabeledMarkovChain:
    """Immutable explicit-state chain.

    ``rows[s]`` is a tuple of ``(target, probability)`` pairs in file order;
    ``obs[s]`` is a marker-set int when ``k`` is set, otherwise a raw symbol.
    """

    initial: int
    rows: tuple
    obs: tuple
    k: int | None = None
    names: tuple | None = None
    _cumulative: tuple = field(init=False, repr=False)

    def __post_init__(self):
        cum = []
        for row in self.rows:
            acc, c = 0.0, []
            for _, p in row:
                acc += p
                c.append(acc)
            cum.append(tuple(c))
        object.__setattr__(self, "_cumulative", tuple(cum))
        validate(self)

    @property
    def size(self) -> int:
        return len(self.rows)

    @property
    def marker_labeled(self) -> bool:
        return self.k is not None

    def successors(self, s: int) -> list[int]:
        return [t for t, _ in self.rows[s]]

    def __eq__(self, other):
        if not isinstance(other, LabeledMarkovChain):
            return NotImplemented
        return (self.initial, self.rows, self.obs, self.k) == (
            other.initial, other.rows, other.obs, other.k)

    def __hash__(self):
        return hash((self.initial, self.rows, self.obs, self.k))


def build_chain(initial, rows, obs, k=None, names=None) -> LabeledMarkovChain:
    """Construct and validate a chain from plain Python sequences."""
    rows = tuple(tuple((int(t), float(p)) for t, p in row) for row in rows)
    return LabeledMarkovChain(int(initial), rows, tuple(obs), k,
                              tuple(names) if names is not None else None)


def validate(chain: LabeledMarkovChain) -> None:
    n = len(chain.rows)
    if n == 0:
        raise ModelError("chain has no states")
    if len(chain.obs) != n:
        raise ModelError(f"expected {n} observations, got {len(chain.obs)}")
    if not 0 <= chain.initial < n:
        raise ModelError(f"initial state {chain.initial} out of range")
    for s, row in enumerate(chain.rows):
        if not row:
            raise ModelError(f"state {s} has no outgoing transitions")
        seen = set()
        for t, p in row:
            if not 0 <= t < n:
                raise ModelError(f"state {s}: dangling target {t}")
            if t in seen:
                raise ModelError(f"state {s}: duplicate transition to {t}")
            seen.add(t)
            if not 0.0 < p <= 1.0:
                raise ModelError(f"state {s}: probability {p} to {t} outside (0,1]")
        total = sum(p for _, p in row)
        if abs(total - 1.0) > ROW_TOLERANCE:
            raise ModelError(f"state {s}: row sums to {total!r}, not 1")
    if chain.k is not None:
        if chain.k < 1:
            raise ModelError("marker count must be positive")
        for s, o in enumerate(chain.obs):
            if not isinstance(o, int) or isinstance(o, bool):
                raise ModelError(f"state {s}: mixed labeling styles")
            try:
                check_markers(o, chain.k)
            except ValueError as exc:
                raise ModelError(f"state {s}: {exc}") from None
    else:
        for s, o in enumerate(chain.obs):
            if not isinstance(o, str):
                raise ModelError(f"state {s}: mixed labeling styles")


def _parse_prob(token: str, line: int) -> float:
    try:
        if "/" in token:
            return float(Fraction(token))
        return float(token)
    except (ValueError, ZeroDivisionError):
        raise ModelError(f"bad probability {token!r}", line) from None


def _int(token: str, line: int, what: str) -> int:
    try:
        v = int(token)
    except ValueError:
        raise ModelError(f"bad {what} {token!r}", line) from None
    if v < 0:
        raise ModelError(f"negative {what} {v}", line)
    return v


def parse_model(text) -> LabeledMarkovChain:
    """Parse the ``.lmc`` text format.

    ``text`` may be a string or any iterable of lines (e.g. an open file).
    """
    lines = text.splitlines() if isinstance(text, str) else list(text)
    header = False
    n = initial = k = None
    obs_tokens: dict[int, tuple[str, int]] = {}
    trans: list[tuple[int, int, float, int]] = []

    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        kw, args = parts[0], parts[1:]
        if not header:
            if kw != "lmc" or args != ["1"]:
                raise ModelError("expected header 'lmc 1'", lineno)
            header = True
            continue
        if kw == "states" and len(args) == 1:
            n = _int(args[0], lineno, "state count")
            if n == 0:
                raise ModelError("state count must be positive", lineno)
        elif kw == "initial" and len(args) == 1:
            initial = _int(args[0], lineno, "initial state")
        elif kw == "markers" and len(args) == 1:
            k = _int(args[0], lineno, "marker count")
            if k == 0:
                raise ModelError("marker count must be positive", lineno)
        elif kw == "obs" and len(args) == 2:
            s = _int(args[0], lineno, "state")
            if s in obs_tokens:
                raise ModelError(f"duplicate obs for state {s}", lineno)
            obs_tokens[s] = (args[1], lineno)
        elif kw == "trans" and len(args) == 3:
            src = _int(args[0], lineno, "state")
            dst = _int(args[1], lineno, "state")
            p = _parse_prob(args[2], lineno)
            if p == 0.0:
                raise ModelError("explicit zero-probability transition", lineno)
            trans.append((src, dst, p, lineno))
        else:
            raise ModelError(f"unrecognized directive {line!r}", lineno)

    if not header:
        raise ModelError("empty model")
    if n is None:
        raise ModelError("missing 'states' directive")
    if initial is None:
        raise ModelError("missing 'initial' directive")
    if initial >= n:
        raise ModelError(f"initial state {initial} out of range")

    obs: list = []
    for s in range(n):
        if s not in obs_tokens:
            if k is None:
                raise ModelError(f"state {s} has no observation (raw-labeled chain)")
            obs.append(0)
            continue
        token, lineno = obs_tokens[s]
        if k is not None:
            try:
                mask = parse_markers(token)
                check_markers(mask, k)
            except ValueError as exc:
                raise ModelError(f"mixed labeling styles or bad marker set: {exc}", lineno) from None
            obs.append(mask)
        else:
            if token == "-" or "," in token:
                raise ModelError(f"mixed labeling styles: marker token {token!r} "
                                 "in a chain without 'markers'", lineno)
            obs.append(token)
    for s in obs_tokens:
        if s >= n:
            raise ModelError(f"obs for dangling state {s}", obs_tokens[s][1])

    rows: list[list] = [[] for _ in range(n)]
    for src, dst, p, lineno in trans:
        if src >= n or dst >= n:
            raise ModelError(f"dangling state index in transition {src}->{dst}", lineno)
        if any(t == dst for t, _ in rows[src]):
            raise ModelError(f"duplicate transition {src}->{dst}", lineno)
        rows[src].append((dst, p))
    return build_chain(initial, rows, obs, k)


def format_model(chain: LabeledMarkovChain) -> str:
    """Serialize a chain to ``.lmc`` text (round-trips through parse_model)."""
    out = ["lmc 1", f"states {chain.size}", f"initial {chain.initial}"]
    if chain.k is not None:
        out.append(f"markers {chain.k}")
    for s, o in enumerate(chain.obs):
        token = format_markers(o) if chain.k is not None else o
        if chain.k is None or o != 0:
            out.append(f"obs {s} {token}")
    for s, row in enumerate(chain.rows):
        for t, p in row:
            out.append(f"trans {s} {t} {p!r}")
    return "\n".join(out) + "\n"


# --------------------------------------------------------------------------
# sampling and black-box sessions


def sample_step(chain: LabeledMarkovChain, state: int, rng: random.Random) -> int:
    """Draw a successor by inverse CDF over the row, one uniform per call."""
    cum = chain._cumulative[state]
    i = bisect_right(cum, rng.random())
    if i >= len(cum):
        i = len(cum) - 1
    return chain.rows[state][i][0]


def make_rng(seed) -> random.Random:
    return seed if isinstance(seed, random.Random) else random.Random(seed)


class ChainSystem:
    """A reset/step session over an explicit chain.

    Strategies only ever see the observations returned by :meth:`reset` and
    :meth:`step`.  ``state`` is exposed for white-box harness bookkeeping.
    """

    def __init__(self, chain: LabeledMarkovChain, seed=0):
        self.chain = chain
        self.rng = make_rng(seed)
        self._rows = [tuple(t for t, _ in row) for row in chain.rows]
        self._cum = chain._cumulative
        self._obs = chain.obs
        self.state = chain.initial

    def reset(self):
        self.state = self.chain.initial
        return self._obs[self.state]

    def step(self):
        cum = self._cum[self.state]
        if len(cum) == 1:
            # one successor: still consume a draw so traces stay aligned
            self.rng.random()
            i = 0
        else:
            i = bisect_right(cum, self.rng.random())
            if i >= len(cum):
                i = len(cum) - 1
        self.state = self._rows[self.state][i]
        return self._obs[self.state]


def as_black_box(chain: LabeledMarkovChain, seed=0) -> ChainSystem:
    """Black-box session emitting marker sets.

    Raw-labeled chains must go through :func:`rabintest.rabin.product` or be
    driven with a lifted strategy via :func:`raw_black_box`.
    """
    if not chain.marker_labeled:
        raise ModelError("raw-labeled chain needs a Rabin automaton "
                         "(use rabin.product or rabin.lift_strategy)")
    return ChainSystem(chain, seed)


def raw_black_box(chain: LabeledMarkovChain, seed=0) -> ChainSystem:
    """Black-box session emitting raw symbols, for use with a lifted strategy."""
    if chain.marker_labeled:
        raise ModelError("chain is marker-labeled; use as_black_box")
    return ChainSystem(chain, seed)


def observe_path(chain: LabeledMarkovChain, path: Sequence[int]) -> list:
    return [chain.obs[s] for s in path]
