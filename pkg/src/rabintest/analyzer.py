"""White-box analysis of marker-labeled chains.

Computes bottom SCCs, their good/bad classification, the progress radii
and probabilities, and the probability of the good runs.  The
``brute_force_profile`` oracle recomputes the same quantities by path
enumeration and matrix powers and is meant for small chains in tests.
"""
from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import asdict, dataclass
from itertools import count

import numpy as np

from .model import LabeledMarkovChain, ModelError, check_markers, e_bit, f_bit

UNDEF = "undef"


@dataclass(frozen=True)
class BsccVerdict:
    states: frozenset
    good_indices: frozenset

    @property
    def bad(self) -> bool:
        return not self.good_indices


@dataclass(frozen=True)
class ProgressProfile:
    """Radii are ints and probabilities floats; ``None`` means undefined."""

    r_gamma: int | None
    R_gamma: int | None
    r_beta: int | None
    R_beta: int | None
    p_gamma: float | None
    P_gamma: float | None
    p_beta: float | None
    P_beta: float | None
    R_m: int
    P_m: float | None
    P_good: float

    def as_dict(self) -> dict:
        return {key: (UNDEF if v is None else v) for key, v in asdict(self).items()}

    def to_json(self, **kw) -> str:
        return json.dumps(self.as_dict(), **kw)


def _finish(r_g, R_g, r_b, R_b, p_g, P_g, p_b, P_b, p_good) -> ProgressProfile:
    radii = [r for r in (r_g, R_g, r_b, R_b) if r is not None]
    probs = [p for p in (p_g, P_g, p_b, P_b) if p is not None]
    return ProgressProfile(r_g, R_g, r_b, R_b, p_g, P_g, p_b, P_b,
                           max(radii) if radii else 0,
                           min(probs) if probs else None, p_good)


def _check(chain: LabeledMarkovChain, k):
    if chain.size == 0:
        raise ModelError("chain has no states")
    if not chain.marker_labeled:
        raise ModelError("analysis needs a marker-labeled chain (build the product first)")
    k = chain.k if k is None else k
    for s, o in enumerate(chain.obs):
        try:
            check_markers(o, k)
        except ValueError as exc:
            raise ModelError(f"state {s}: {exc}") from None
    return k


# --------------------------------------------------------------------------
# graph structure


def sccs(chain: LabeledMarkovChain) -> list[list[int]]:
    """Strongly connected components (iterative Tarjan), reverse topological order."""
    succ = [chain.successors(s) for s in range(chain.size)]
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    on_stack = set()
    stack: list[int] = []
    counter = count()
    out = []
    for root in range(chain.size):
        if root in index:
            continue
        index[root] = low[root] = next(counter)
        stack.append(root)
        on_stack.add(root)
        work = [(root, iter(succ[root]))]
        while work:
            v, it = work[-1]
            for w in it:
                if w not in index:
                    index[w] = low[w] = next(counter)
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(succ[w])))
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            else:
                work.pop()
                if work:
                    u = work[-1][0]
                    low[u] = min(low[u], low[v])
                if low[v] == index[v]:
                    comp = []
                    while True:
                        w = stack.pop()
                        on_stack.discard(w)
                        comp.append(w)
                        if w == v:
                            break
                    out.append(sorted(comp))
    return out


def bsccs(chain: LabeledMarkovChain) -> list[frozenset]:
    """Bottom SCCs, ordered by their smallest state."""
    result = []
    for comp in sccs(chain):
        members = set(comp)
        if all(t in members for s in comp for t in chain.successors(s)):
            result.append(frozenset(comp))
    return sorted(result, key=min)


def good_indices(chain: LabeledMarkovChain, states, k: int) -> frozenset:
    union = 0
    for s in states:
        union |= chain.obs[s]
    return frozenset(i for i in range(1, k + 1)
                     if union & e_bit(i) and not union & f_bit(i))


def classify(chain: LabeledMarkovChain, k=None) -> list[BsccVerdict]:
    k = _check(chain, k)
    return [BsccVerdict(b, good_indices(chain, b, k)) for b in bsccs(chain)]


def _predecessors(chain):
    pred = [[] for _ in range(chain.size)]
    for s, row in enumerate(chain.rows):
        for t, _ in row:
            pred[t].append(s)
    return pred


def _distance_to(targets, pred, n) -> list:
    """BFS distance from every state to ``targets`` (None when unreachable)."""
    dist = [None] * n
    queue = deque()
    for t in targets:
        dist[t] = 0
        queue.append(t)
    while queue:
        v = queue.popleft()
        for u in pred[v]:
            if dist[u] is None:
                dist[u] = dist[v] + 1
                queue.append(u)
    return dist


def _hit_within(chain, targets: set, steps: int) -> list:
    """Pr[visit ``targets`` at one of steps 1..``steps``] for every start state."""
    v = [0.0] * chain.size
    for _ in range(steps):
        v = [sum(p * (1.0 if t in targets else v[t]) for t, p in row)
             for row in chain.rows]
    return v


# --------------------------------------------------------------------------
# progress profile


def _reachability_side(chain, pred, bottom: set):
    """Reachability radius and probability towards the union ``bottom``."""
    dist = _distance_to(bottom, pred, chain.size)
    transient = [s for s in range(chain.size) if dist[s] is not None and s not in bottom]
    if not transient:
        return 0, None
    r = max(dist[s] for s in transient)
    probs = _hit_within(chain, bottom, r)
    return r, min(probs[s] for s in transient)


def _good_witness(chain, verdicts):
    """Witness radius and probability inside good BSCCs."""
    per_state = {}
    targets_of = {}
    for v in verdicts:
        if v.bad:
            continue
        mask = 0
        for i in v.good_indices:
            mask |= e_bit(i)
        W = {t for t in v.states if chain.obs[t] & mask}
        pred = {t: [] for t in v.states}
        for s in v.states:
            for t in chain.successors(s):
                pred[t].append(s)
        dist = {t: 0 for t in W}
        queue = deque(W)
        while queue:
            x = queue.popleft()
            for u in pred[x]:
                if u not in dist:
                    dist[u] = dist[x] + 1
                    queue.append(u)
        for s in v.states:
            per_state[s] = 1 + min(dist[t] for t in chain.successors(s) if t in dist)
            targets_of[s] = W
    R = max(per_state.values())
    worst = 1.0
    for v in verdicts:
        if v.bad:
            continue
        W = targets_of[min(v.states)]
        probs = _hit_within(chain, W, R)
        worst = min(worst, min(probs[s] for s in v.states))
    return R, worst


def _bad_witness(chain, verdicts, k):
    """Covering radius and probability inside bad BSCCs.

    A progress path from ``s`` must contain, for every pair ``i`` whose
    ``e_i`` occurs in the BSCC, a state carrying ``f_i`` (the start state
    counts).  BSCCs without any ``e_i`` make every non-empty path progress.
    """
    jobs = []
    R = 0
    for v in verdicts:
        if not v.bad:
            continue
        union = 0
        for s in v.states:
            union |= chain.obs[s]
        req = [i for i in range(1, k + 1) if union & e_bit(i)]
        if not req:
            R = max(R, 1)
            jobs.append((v, None, None))
            continue
        full = (1 << len(req)) - 1
        cover = {s: sum(1 << j for j, i in enumerate(req) if chain.obs[s] & f_bit(i))
                 for s in v.states}
        for s in v.states:
            start = (s, cover[s])
            seen = {start: 0}
            queue = deque([start])
            length = None
            while queue:
                node = queue.popleft()
                if node[1] == full:
                    length = seen[node]
                    break
                t0, m0 = node
                for t in chain.successors(t0):
                    nxt = (t, m0 | cover[t])
                    if nxt not in seen:
                        seen[nxt] = seen[node] + 1
                        queue.append(nxt)
            R = max(R, max(1, length))
        jobs.append((v, cover, full))

    worst = 1.0
    for v, cover, full in jobs:
        if cover is None:
            continue
        # w[(t, m)] = Pr[cover everything within j more steps from t having m]
        nodes = [(t, m) for t in v.states for m in range(full + 1)]
        w = {node: (1.0 if node[1] == full else 0.0) for node in nodes}
        for _ in range(R):
            w = {(t, m): 1.0 if m == full else
                 sum(p * w[(u, m | cover[u])] for u, p in chain.rows[t])
                 for t, m in nodes}
        worst = min(worst, min(w[(s, cover[s])] for s in v.states))
    return R, worst


def reach_probability(chain: LabeledMarkovChain, target: set, can_reach: set) -> np.ndarray:
    """Probability of eventually reaching the closed set ``target``.

    ``can_reach`` is the set of states with a path into ``target``; states
    outside it get 0, ``target`` gets 1 and the rest solve ``(I - P) x = b``.
    """
    n = chain.size
    x = np.zeros(n)
    for s in target:
        x[s] = 1.0
    transient = sorted(can_reach - target)
    if transient:
        pos = {s: i for i, s in enumerate(transient)}
        A = np.eye(len(transient))
        b = np.zeros(len(transient))
        for s in transient:
            for t, p in chain.rows[s]:
                if t in pos:
                    A[pos[s], pos[t]] -= p
                elif t in target:
                    b[pos[s]] += p
        x[transient] = np.linalg.solve(A, b)
    return x


def progress_profile(chain: LabeledMarkovChain, k=None) -> ProgressProfile:
    k = _check(chain, k)
    verdicts = [BsccVerdict(b, good_indices(chain, b, k)) for b in bsccs(chain)]
    pred = _predecessors(chain)
    good = set().union(*(v.states for v in verdicts if not v.bad))
    bad = set().union(*(v.states for v in verdicts if v.bad))

    r_g = R_g = p_g = P_g = None
    p_good = 0.0
    if good:
        r_g, p_g = _reachability_side(chain, pred, good)
        R_g, P_g = _good_witness(chain, verdicts)
        dist = _distance_to(good, pred, chain.size)
        can = {s for s in range(chain.size) if dist[s] is not None}
        p_good = float(reach_probability(chain, good, can)[chain.initial])

    r_b = R_b = p_b = P_b = None
    if bad:
        r_b, p_b = _reachability_side(chain, pred, bad)
        R_b, P_b = _bad_witness(chain, verdicts, k)
    return _finish(r_g, R_g, r_b, R_b, p_g, P_g, p_b, P_b, p_good)


def reach_prob_good(chain: LabeledMarkovChain, k=None) -> float:
    return progress_profile(chain, k).P_good


# --------------------------------------------------------------------------
# brute-force oracle


class HorizonTooSmall(ValueError):
    """No progress path was found within the enumeration horizon."""


def _closure(chain) -> np.ndarray:
    n = chain.size
    reach = np.eye(n, dtype=bool)
    for s, row in enumerate(chain.rows):
        for t, _ in row:
            reach[s, t] = True
    for m in range(n):  # Warshall
        reach |= np.outer(reach[:, m], reach[m, :])
    return reach


def _enumerate(chain, start, length, done):
    """Yield (path probability, satisfied) over all paths of ``length`` steps.

    ``done(path)`` is a monotone predicate: once a prefix satisfies it, the
    whole subtree is reported as one satisfied entry.
    """
    stack = [([start], 1.0)]
    while stack:
        path, prob = stack.pop()
        if done(path):
            yield prob, True
            continue
        if len(path) == length + 1:
            yield prob, False
            continue
        for t, p in chain.rows[path[-1]]:
            stack.append((path + [t], prob * p))


def _shortest(chain, start, done, horizon) -> int:
    for length in range(1, horizon + 1):
        if any(ok for _, ok in _enumerate(chain, start, length, done)):
            return length
    raise HorizonTooSmall(f"no progress path from state {start} within {horizon} steps")


def _window_prob(chain, start, length, done) -> float:
    return math.fsum(p for p, ok in _enumerate(chain, start, length, done) if ok)


def brute_force_profile(chain: LabeledMarkovChain, k=None, horizon: int = 24) -> ProgressProfile:
    """Recompute the progress profile by explicit path enumeration.

    Exponential in the radii; intended for chains of a dozen states or fewer.
    """
    k = _check(chain, k)
    n = chain.size
    reach = _closure(chain)
    bottom = [s for s in range(n) if all(reach[t, s] for t in np.flatnonzero(reach[s]))]
    comp = {s: frozenset(np.flatnonzero(reach[s]).tolist()) for s in bottom}

    def good_idx(states):
        return [i for i in range(1, k + 1)
                if any(chain.obs[t] & e_bit(i) for t in states)
                and not any(chain.obs[t] & f_bit(i) for t in states)]

    good = {s for s in bottom if good_idx(comp[s])}
    bad = set(bottom) - good

    def reach_side(target):
        trans = [s for s in range(n) if s not in target and reach[s, sorted(target)].any()]
        if not trans:
            return 0, None

        def hit(path):
            return len(path) > 1 and path[-1] in target

        r = max(_shortest(chain, s, hit, horizon) for s in trans)
        return r, min(_window_prob(chain, s, r, hit) for s in trans)

    r_g = R_g = p_g = P_g = None
    p_good = 0.0
    if good:
        r_g, p_g = reach_side(good)
        preds = {}
        for s in good:
            idx = good_idx(comp[s])
            preds[s] = (lambda path, idx=idx: len(path) > 1 and
                        any(chain.obs[path[-1]] & e_bit(i) for i in idx))
        R_g = max(_shortest(chain, s, preds[s], horizon) for s in good)
        P_g = min(_window_prob(chain, s, R_g, preds[s]) for s in good)

        P = np.zeros((n, n))
        for s, row in enumerate(chain.rows):
            for t, p in row:
                P[s, t] = p
        cols = sorted(good)
        mass = P[:, cols].sum(axis=1)
        for _ in range(200):
            P = P @ P
            new = P[:, cols].sum(axis=1)
            if np.max(np.abs(new - mass)) < 1e-12:
                mass = new
                break
            mass = new
        p_good = float(min(1.0, mass[chain.initial]))

    r_b = R_b = p_b = P_b = None
    if bad:
        r_b, p_b = reach_side(bad)
        preds = {}
        for s in bad:
            req = [i for i in range(1, k + 1) if any(chain.obs[t] & e_bit(i) for t in comp[s])]
            preds[s] = (lambda path, req=req: len(path) > 1 and
                        all(any(chain.obs[t] & f_bit(i) for t in path) for i in req))
        R_b = max(_shortest(chain, s, preds[s], horizon) for s in bad)
        P_b = min(_window_prob(chain, s, R_b, preds[s]) for s in bad)
    return _finish(r_g, R_g, r_b, R_b, p_g, P_g, p_b, P_b, p_good)
