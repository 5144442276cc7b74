"""Chain families used in the experiments.

All families are marker-labeled with ``k = 1`` and only use ``e_1``.
"""
from __future__ import annotations

from .model import LabeledMarkovChain, build_chain, marker_set

E1 = marker_set(e=[1])


def _open_prob(name, v):
    if not 0 < v < 1:
        raise ValueError(f"{name} must lie strictly between 0 and 1, got {v}")


def gen_fig4(p: float, q: float) -> LabeledMarkovChain:
    """start --p--> s1 <-> goal; the goal/s1 pair is the only BSCC."""
    _open_prob("p", p)
    _open_prob("q", q)
    rows = [
        [(0, 1 - p), (1, p)],
        [(1, 1 - q), (2, q)],
        [(2, q), (1, 1 - q)],
    ]
    return build_chain(0, rows, [0, 0, E1], k=1, names=["start", "s1", "goal"])


def gen_synth_top(M: int, p: float, q: float) -> LabeledMarkovChain:
    """Sink on the left (prob 1-q), a ring of length M on the right.

    The ring runs s1 -> ... -> s_{M-1} and then enters goal with probability
    p or s_M otherwise; both lead back to s1.  For M = 1 the ring collapses
    to {goal, s_M} and the p-branch is taken on every step.
    """
    if M < 1:
        raise ValueError("M must be at least 1")
    _open_prob("p", p)
    _open_prob("q", q)
    names = ["start", "sink"] + [f"s{i}" for i in range(1, M)] + ["goal", f"s{M}"]
    goal, last = M + 1, M + 2
    rows: list[list] = [None] * len(names)
    rows[1] = [(1, 1.0)]
    if M == 1:
        rows[0] = [(1, 1 - q), (goal, q * p), (last, q * (1 - p))]
        rows[goal] = [(goal, p), (last, 1 - p)]
        rows[last] = [(goal, p), (last, 1 - p)]
    else:
        rows[0] = [(1, 1 - q), (2, q)]
        for idx in range(2, M):  # s1 .. s_{M-2}
            rows[idx] = [(idx + 1, 1.0)]
        rows[M] = [(goal, p), (last, 1 - p)]  # s_{M-1}
        rows[goal] = [(2, 1.0)]
        rows[last] = [(2, 1.0)]
    obs = [0] * len(names)
    obs[goal] = E1
    return build_chain(0, rows, obs, k=1, names=names)


def gen_synth_bottom(M: int, p: float) -> LabeledMarkovChain:
    """M forward p-steps from start to an absorbing goal, each failing to a sink.

    s2..s_M and goal carry e_1, start and sink carry nothing.
    """
    if M < 1:
        raise ValueError("M must be at least 1")
    _open_prob("p", p)
    names = ["start"] + [f"s{i}" for i in range(2, M + 1)] + ["goal", "sink"]
    goal, sink = M, M + 1
    rows = [[(i + 1, p), (sink, 1 - p)] for i in range(M)]
    rows.append([(goal, 1.0)])
    rows.append([(sink, 1.0)])
    obs = [0] + [E1] * (M - 1) + [E1, 0]
    return build_chain(0, rows, obs, k=1, names=names)


def gen_path(b: int, states: int | None = None) -> LabeledMarkovChain:
    """Deterministic path whose last state loops on itself and carries e_1.

    With the default ``2b + 2`` states the last state is first reached at
    step ``2b + 1``, strictly after the first check of a strategy with
    ``f <= b``, so such a strategy restarts forever.  (With ``2b + 1``
    states the last state is reached exactly at that check.)
    """
    if b < 1:
        raise ValueError("b must be at least 1")
    n = 2 * b + 2 if states is None else states
    if n < 1:
        raise ValueError("path needs at least one state")
    rows = [[(i + 1, 1.0)] for i in range(n - 1)] + [[(n - 1, 1.0)]]
    obs = [0] * (n - 1) + [E1]
    return build_chain(0, rows, obs, k=1)


FAMILIES = {
    "fig4": gen_fig4,
    "top": gen_synth_top,
    "bottom": gen_synth_bottom,
    "path": gen_path,
}
