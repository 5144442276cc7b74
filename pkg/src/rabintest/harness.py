"""Trial runner and experiment aggregation.

A *target* knows how to open a fresh black-box session, how to build the
strategy session that drives it, and (white-box) how to judge the segment
running when a trial stops.
"""
from __future__ import annotations

import csv
import io
import math
import os
import statistics
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .analyzer import classify
from .model import LabeledMarkovChain, as_black_box, raw_black_box
from .population import MajoritySystem
from .rabin import RabinAutomaton, lift_strategy, product
from .strategy import RESTART, PolyGrowth, RestartStrategy

GOOD_TAIL = "goodTail"
BAD_TAIL = "badTail"
INCONCLUSIVE = "inconclusive"

MAX_SEGMENTS = 64
CSV_COLUMNS = ["family", "params", "c", "seed", "trial", "S", "restarts", "truncated", "verdict"]
Z99 = statistics.NormalDist().inv_cdf(0.995)


def _state_verdicts(chain: LabeledMarkovChain) -> list:
    kinds = [None] * chain.size
    for v in classify(chain):
        tag = BAD_TAIL if v.bad else GOOD_TAIL
        for s in v.states:
            kinds[s] = tag
    return kinds


class ChainTarget:
    """Marker-labeled explicit chain."""

    def __init__(self, chain: LabeledMarkovChain):
        self.chain = chain
        self.k = chain.k
        self._kinds = _state_verdicts(chain)

    def open(self, seed):
        return as_black_box(self.chain, seed)

    def strategy(self, growth):
        return RestartStrategy(self.k, growth)

    def verdict(self, system, strategy, window):
        return self._kinds[system.state] or INCONCLUSIVE


class RawChainTarget:
    """Raw-labeled chain driven through a DRA by a lifted strategy.

    Verdicts look up the current (chain state, automaton state) pair in the
    product chain.
    """

    def __init__(self, chain: LabeledMarkovChain, dra: RabinAutomaton):
        self.chain = chain
        self.dra = dra
        self.k = dra.k
        prod = product(chain, dra)
        self._index = {name: i for i, name in enumerate(prod.names)}
        self._kinds = _state_verdicts(prod)

    def open(self, seed):
        return raw_black_box(self.chain, seed)

    def strategy(self, growth):
        return lift_strategy(self.dra, RestartStrategy(self.k, growth))

    def verdict(self, system, strategy, window):
        return self._kinds[self._index[(system.state, strategy.state)]] or INCONCLUSIVE


class MajorityTarget:
    """Implicit population protocol; verdicts use the heuristic window test."""

    k = 1

    def __init__(self, n_a: int, n_b: int):
        MajoritySystem(n_a, n_b)  # validate eagerly
        self.n_a, self.n_b = n_a, n_b

    def open(self, seed):
        return MajoritySystem(self.n_a, self.n_b, seed)

    def strategy(self, growth):
        return RestartStrategy(self.k, growth)

    def verdict(self, system, strategy, window):
        # heuristic: the final quiet window is i-good for some i
        return GOOD_TAIL if window else INCONCLUSIVE


@dataclass
class TrialRecord:
    seed: int
    S: int
    restarts: int
    truncated: bool
    verdict: str
    segments: list = field(default_factory=list)
    final_steps: int = 0


@dataclass
class ExperimentConfig:
    target: object
    growth: object = field(default_factory=lambda: PolyGrowth(1))
    trials: int = 300
    step_cap: int = 10 ** 6
    quiet: int | None = 10 ** 4
    base_seed: int = 0
    family: str = "custom"
    params: str = ""
    label: str = ""

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.quiet is not None and self.step_cap < 2 * self.quiet:
            raise ValueError("step cap must be at least twice the quiet threshold")
        if not self.label:
            self.label = str(getattr(self.growth, "c", repr(self.growth)))


def trial_seed(base_seed: int, trial: int) -> int:
    """Independent per-trial seed derived from (base seed, trial index)."""
    return int(np.random.SeedSequence(base_seed, spawn_key=(trial,)).generate_state(1)[0])


def run_trial(target, growth, seed: int, step_cap: int = 10 ** 6,
              quiet: int | None = 10 ** 4) -> TrialRecord:
    """Drive one restart-strategy session until it goes quiet or hits the cap.

    ``step_cap`` bounds the total number of steps across all segments;
    ``quiet`` is the number of restart-free steps after which the trial is
    considered converged.
    """
    system = target.open(seed)
    strategy = target.strategy(growth)
    observe, step = strategy.observe, system.step
    implicit = isinstance(target, MajorityTarget)
    k = target.k

    obs = system.reset()
    total = 0
    seg = 0
    S = 0
    restarts = 0
    segments = []
    last_e = [-1] * k
    last_f = [-1] * k
    truncated = False
    while True:
        if observe(obs) is RESTART:
            S += seg
            restarts += 1
            if len(segments) < MAX_SEGMENTS:
                segments.append(seg)
            seg = 0
            if implicit:
                last_e = [-1] * k
                last_f = [-1] * k
            obs = system.reset()
            continue
        if implicit and obs:
            for i in range(k):
                if obs >> (2 * i) & 1:
                    last_e[i] = seg
                if obs >> (2 * i + 1) & 1:
                    last_f[i] = seg
        if quiet is not None and seg >= quiet:
            break
        if total >= step_cap:
            truncated = True
            break
        obs = step()
        total += 1
        seg += 1

    if truncated:
        verdict = INCONCLUSIVE
    else:
        # second half of the quiet window, as the strategy's own checks see it;
        # the segment opens in the initial configuration, so its start never counts
        start = seg - quiet // 2
        window = any(last_e[i] >= start and last_f[i] < start for i in range(k))
        verdict = target.verdict(system, strategy, window)
    return TrialRecord(seed, S, restarts, truncated, verdict, segments, seg)


def _run_indexed(args):
    config, trial = args
    seed = trial_seed(config.base_seed, trial)
    return trial, run_trial(config.target, config.growth, seed, config.step_cap, config.quiet)


@dataclass
class Summary:
    trials: int
    mean: float
    stderr: float
    ci99: tuple
    truncated: int
    verdicts: dict
    restart_histogram: dict

    def row(self) -> list:
        hist = "|".join(f"{r}:{n}" for r, n in sorted(self.restart_histogram.items()))
        return ["SUMMARY", f"mean={self.mean!r}", f"stderr={self.stderr!r}",
                f"ci99_low={self.ci99[0]!r}", f"ci99_high={self.ci99[1]!r}",
                f"truncated={self.truncated}",
                *(f"{v}={self.verdicts.get(v, 0)}" for v in (GOOD_TAIL, BAD_TAIL, INCONCLUSIVE)),
                f"restarts={hist}"]


def summarize(records) -> Summary:
    values = [r.S for r in records]
    n = len(values)
    mean = math.fsum(values) / n
    stderr = statistics.stdev(values) / math.sqrt(n) if n > 1 else 0.0
    return Summary(
        trials=n,
        mean=mean,
        stderr=stderr,
        ci99=(mean - Z99 * stderr, mean + Z99 * stderr),
        truncated=sum(r.truncated for r in records),
        verdicts=dict(Counter(r.verdict for r in records)),
        restart_histogram=dict(Counter(r.restarts for r in records)),
    )


def experiment(config: ExperimentConfig, jobs: int | None = 1):
    """Run ``config.trials`` seeded trials; returns (records by trial, summary)."""
    jobs = jobs or os.cpu_count() or 1
    work = [(config, t) for t in range(config.trials)]
    if jobs > 1 and config.trials > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_indexed, work, chunksize=max(1, len(work) // (4 * jobs))))
    else:
        results = [_run_indexed(w) for w in work]
    results.sort(key=lambda tr: tr[0])
    records = [r for _, r in results]
    return records, summarize(records)


def experiment_csv(config: ExperimentConfig, records, summary) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for t, r in enumerate(records):
        writer.writerow([config.family, config.params, config.label, r.seed, t, r.S,
                         r.restarts, int(r.truncated), r.verdict])
    writer.writerow(summary.row())
    return buf.getvalue()


def loglog_slope(points) -> float:
    """Least-squares slope of ln y against ln x."""
    pts = list(points)
    if len(pts) < 3:
        raise ValueError("need at least 3 points")
    if any(x <= 0 or y <= 0 for x, y in pts):
        raise ValueError("coordinates must be positive")
    lx = np.log([x for x, _ in pts])
    ly = np.log([y for _, y in pts])
    return float(np.polyfit(lx, ly, 1)[0])
