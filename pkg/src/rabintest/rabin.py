"""Deterministic Rabin automata, lassos, the product chain and strategy lifting."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

from .model import LabeledMarkovChain, ModelError, build_chain, e_bit, f_bit
from .strategy import RESTART


class AutomatonError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class RabinAutomaton:
    size: int
    initial: int
    alphabet: tuple
    delta: dict  # (state, symbol) -> state
    pairs: tuple  # ((E_1, F_1), ..., (E_k, F_k)) as frozensets
    markers: tuple = field(init=False, repr=False)

    def __post_init__(self):
        if self.size < 1:
            raise AutomatonError("automaton needs at least one state")
        if not 0 <= self.initial < self.size:
            raise AutomatonError(f"initial state {self.initial} out of range")
        if not self.pairs:
            raise AutomatonError("at least one Rabin pair is required")
        for q in range(self.size):
            for a in self.alphabet:
                t = self.delta.get((q, a))
                if t is None:
                    raise AutomatonError(f"transition function undefined on ({q}, {a})")
                if not 0 <= t < self.size:
                    raise AutomatonError(f"transition ({q}, {a}) -> {t} out of range")
        for j, (E, F) in enumerate(self.pairs, start=1):
            if any(not 0 <= q < self.size for q in E | F):
                raise AutomatonError(f"pair {j} mentions an unknown state")
        marks = []
        for q in range(self.size):
            m = 0
            for j, (E, F) in enumerate(self.pairs, start=1):
                if q in E:
                    m |= e_bit(j)
                if q in F:
                    m |= f_bit(j)
            marks.append(m)
        object.__setattr__(self, "markers", tuple(marks))

    def _key(self):
        return (self.size, self.initial, self.alphabet,
                tuple(sorted(self.delta.items(), key=repr)), self.pairs)

    def __eq__(self, other):
        if not isinstance(other, RabinAutomaton):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    @property
    def k(self) -> int:
        return len(self.pairs)

    def step(self, q: int, symbol) -> int:
        try:
            return self.delta[(q, symbol)]
        except KeyError:
            raise AutomatonError(f"unknown symbol {symbol!r}") from None

    def run(self, word: Sequence) -> list[int]:
        """States q_0 .. q_n of the run on a finite word."""
        qs = [self.initial]
        for a in word:
            qs.append(self.step(qs[-1], a))
        return qs


def make_automaton(size, initial, alphabet, delta, pairs) -> RabinAutomaton:
    return RabinAutomaton(size, initial, tuple(alphabet), dict(delta),
                          tuple((frozenset(E), frozenset(F)) for E, F in pairs))


def parse_dra(text) -> RabinAutomaton:
    """Parse the ``.dra`` text format (see README)."""
    lines = text.splitlines() if isinstance(text, str) else list(text)
    header = False
    size = initial = npairs = None
    alphabet: list[str] | None = None
    trans: list[tuple[int, str, int, int]] = []
    pairs: dict[int, tuple] = {}

    def num(tok, ln):
        try:
            v = int(tok)
        except ValueError:
            raise ModelError(f"bad integer {tok!r}", ln) from None
        if v < 0:
            raise ModelError(f"negative integer {v}", ln)
        return v

    for ln, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        kw, *args = line.split()
        if not header:
            if kw != "dra" or args != ["1"]:
                raise ModelError("expected header 'dra 1'", ln)
            header = True
        elif kw == "states" and len(args) == 1:
            size = num(args[0], ln)
        elif kw == "initial" and len(args) == 1:
            initial = num(args[0], ln)
        elif kw == "alphabet" and args:
            if "*" in args:
                raise ModelError("'*' is reserved as the wildcard symbol", ln)
            alphabet = args
        elif kw == "pairs" and len(args) == 1:
            npairs = num(args[0], ln)
        elif kw == "trans" and len(args) == 3:
            trans.append((num(args[0], ln), args[1], num(args[2], ln), ln))
        elif kw == "pair" and len(args) >= 2:
            j = num(args[0], ln)
            rest = args[1:]
            if rest[0] != "E" or ";" not in rest:
                raise ModelError("expected 'pair J E q... ; F q...'", ln)
            cut = rest.index(";")
            e_part, f_part = rest[1:cut], rest[cut + 1:]
            if not f_part or f_part[0] != "F":
                raise ModelError("expected 'F' after ';'", ln)
            if j in pairs:
                raise ModelError(f"duplicate pair {j}", ln)
            pairs[j] = ({num(t, ln) for t in e_part}, {num(t, ln) for t in f_part[1:]})
        else:
            raise ModelError(f"unrecognized directive {line!r}", ln)

    if not header:
        raise ModelError("empty automaton")
    for name, v in (("states", size), ("initial", initial),
                    ("alphabet", alphabet), ("pairs", npairs)):
        if v is None:
            raise ModelError(f"missing '{name}' directive")
    if sorted(pairs) != list(range(1, npairs + 1)):
        raise ModelError(f"expected pairs numbered 1..{npairs}, got {sorted(pairs)}")

    delta: dict = {}
    defaults: dict = {}
    for q, a, t, ln in trans:
        if q >= size or t >= size:
            raise ModelError(f"transition {q} -{a}-> {t} uses an unknown state", ln)
        if a == "*":
            defaults[q] = t
        elif a not in alphabet:
            raise ModelError(f"symbol {a!r} not in alphabet", ln)
        elif (q, a) in delta:
            raise ModelError(f"duplicate transition on ({q}, {a})", ln)
        else:
            delta[(q, a)] = t
    for q, t in defaults.items():
        for a in alphabet:
            delta.setdefault((q, a), t)
    try:
        return make_automaton(size, initial, alphabet, delta,
                              [pairs[j] for j in range(1, npairs + 1)])
    except AutomatonError as exc:
        raise ModelError(str(exc)) from None


def format_dra(dra: RabinAutomaton) -> str:
    out = ["dra 1", f"states {dra.size}", f"initial {dra.initial}",
           "alphabet " + " ".join(dra.alphabet), f"pairs {dra.k}"]
    for q in range(dra.size):
        for a in dra.alphabet:
            out.append(f"trans {q} {a} {dra.delta[(q, a)]}")
    for j, (E, F) in enumerate(dra.pairs, start=1):
        out.append(f"pair {j} E {' '.join(map(str, sorted(E)))} ; "
                   f"F {' '.join(map(str, sorted(F)))}".rstrip())
    return "\n".join(out) + "\n"


# --------------------------------------------------------------------------
# lassos


def lasso_run(dra: RabinAutomaton, prefix: Sequence, cycle: Sequence):
    """Split the run on ``prefix . cycle^omega`` into a stem and a loop of states."""
    if not cycle:
        raise ValueError("cycle must be non-empty")
    states = dra.run(prefix)
    q = states.pop()
    seen: dict[tuple[int, int], int] = {}
    j = 0
    while (q, j) not in seen:
        seen[(q, j)] = len(states)
        states.append(q)
        q = dra.step(q, cycle[j])
        j = (j + 1) % len(cycle)
    start = seen[(q, j)]
    return states[:start], states[start:]


def dra_lasso_accepts(dra: RabinAutomaton, prefix: Sequence, cycle: Sequence) -> bool:
    _, loop = lasso_run(dra, prefix, cycle)
    inf = set(loop)
    return any(inf & E and not inf & F for E, F in dra.pairs)


def rabin_lasso_member(k: int, prefix: Sequence[int], cycle: Sequence[int]) -> bool:
    """Membership of ``prefix . cycle^omega`` in the Rabin language R_k."""
    if not cycle:
        raise ValueError("cycle must be non-empty")
    seen = 0
    for m in cycle:
        seen |= m
    return any(seen & e_bit(j) and not seen & f_bit(j) for j in range(1, k + 1))


# --------------------------------------------------------------------------
# product chain


def product(chain: LabeledMarkovChain, dra: RabinAutomaton) -> LabeledMarkovChain:
    """Reachable part of the product chain.

    State ``(s, q)`` moves to ``(s', delta(q, Obs(s)))`` with probability
    ``P(s, s')``; it is labeled by the markers of ``q``.  State 0 is
    ``(s_in, q0)`` and ``names[i]`` holds the pair for state ``i``.
    """
    if chain.marker_labeled:
        raise ModelError("product expects a raw-labeled chain")
    alphabet = set(dra.alphabet)
    for s, o in enumerate(chain.obs):
        if o not in alphabet:
            raise ModelError(f"alphabet mismatch: state {s} observes {o!r}")
    start = (chain.initial, dra.initial)
    index = {start: 0}
    order = [start]
    rows = []
    queue = deque([start])
    while queue:
        s, q = queue.popleft()
        q2 = dra.delta[(q, chain.obs[s])]
        row = []
        for t, p in chain.rows[s]:
            node = (t, q2)
            if node not in index:
                index[node] = len(order)
                order.append(node)
                queue.append(node)
            row.append((index[node], p))
        rows.append(row)
    # rows were appended in BFS order, which is also the index order
    obs = [dra.markers[q] for _, q in order]
    return build_chain(0, rows, obs, k=dra.k, names=order)


# --------------------------------------------------------------------------
# lifting a marker strategy to raw observations


class LiftedStrategy:
    """Run a marker-set strategy over raw observations through a DRA.

    The marker set fed at position i is that of the automaton state reached
    after reading the raw observations at positions 0..i-1, so the stream
    seen by ``inner`` equals the observation stream of the product chain.
    The automaton is reset to q0 whenever a restart is issued.
    """

    def __init__(self, dra: RabinAutomaton, inner):
        self.dra = dra
        self.inner = inner
        self.state = dra.initial
        self._pending = None
        self._alphabet = frozenset(dra.alphabet)

    @property
    def restarts(self):
        return self.inner.restarts

    def markers(self) -> int:
        return self.dra.markers[self.state]

    def observe(self, raw):
        if raw not in self._alphabet:
            raise AutomatonError(f"unknown symbol {raw!r}")
        if self._pending is None:
            self.state = self.dra.initial
        else:
            self.state = self.dra.delta[(self.state, self._pending)]
        self._pending = raw
        action = self.inner.observe(self.dra.markers[self.state])
        if action is RESTART:
            self._pending = None
            self.state = self.dra.initial
        return action


def lift_strategy(dra: RabinAutomaton, inner) -> LiftedStrategy:
    k = getattr(inner, "k", None)
    if k is not None and k < dra.k:
        raise ValueError(f"inner strategy handles k={k} pairs, automaton has {dra.k}")
    return LiftedStrategy(dra, inner)
