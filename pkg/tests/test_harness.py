import csv
import io
import math

import pytest

from rabintest.analyzer import progress_profile
from rabintest.generators import gen_fig4, gen_path, gen_synth_bottom, gen_synth_top
from rabintest.harness import (BAD_TAIL, CSV_COLUMNS, GOOD_TAIL, INCONCLUSIVE, ChainTarget,
                               ExperimentConfig, MajorityTarget, RawChainTarget, experiment,
                               experiment_csv, loglog_slope, run_trial, summarize, trial_seed)
from rabintest.model import build_chain, marker_set
from rabintest.rabin import parse_dra
from rabintest.strategy import const_growth, poly_growth

from test_rabin import FIG4_RAW, LAST_G

E1 = marker_set(e=[1])


# generators

def test_generator_preconditions():
    with pytest.raises(ValueError):
        gen_fig4(1.0, 1.0)
    with pytest.raises(ValueError):
        gen_synth_top(0, 0.5, 0.5)
    with pytest.raises(ValueError):
        gen_synth_bottom(2, 0.0)
    with pytest.raises(ValueError):
        gen_path(0)


def test_path_shape():
    # the last state is reached one step after the first check of f = b
    for b in (1, 2, 3):
        chain = gen_path(b)
        assert chain.size == 2 * b + 2
        assert chain.obs[-1] == E1 and sum(1 for o in chain.obs if o) == 1
        assert progress_profile(chain).P_good == 1.0
    assert gen_path(2, states=5).size == 5


def test_family_probabilities():
    assert progress_profile(gen_fig4(0.9, 0.1)).P_gamma == pytest.approx(0.1)
    assert progress_profile(gen_synth_top(3, 0.5, 0.99)).P_good == pytest.approx(0.99)
    assert progress_profile(gen_synth_top(1, 0.5, 0.5)).R_m == 1
    assert progress_profile(gen_synth_bottom(1, 0.3)).P_good == pytest.approx(0.3)


# single trials

def test_all_good_chain_never_restarts():
    chain = build_chain(0, [[(1, 1.0)], [(0, 1.0)]], [E1, E1], k=1)
    rec = run_trial(ChainTarget(chain), poly_growth(1), 0, step_cap=10 ** 5, quiet=1000)
    assert (rec.restarts, rec.S, rec.truncated, rec.verdict) == (0, 0, False, GOOD_TAIL)


def test_path_with_constant_growth_truncates():
    rec = run_trial(ChainTarget(gen_path(2)), const_growth(2), 0, step_cap=10 ** 5, quiet=10 ** 4)
    assert rec.truncated and rec.restarts >= 10 ** 4 and rec.verdict == INCONCLUSIVE


def test_fig4_seed_seven():
    rec = run_trial(ChainTarget(gen_fig4(0.5, 0.5)), poly_growth(2), 7)
    assert not rec.truncated and rec.verdict == GOOD_TAIL


def test_empty_chain_truncates_without_quiet():
    chain = build_chain(0, [[(0, 1.0)]], [0], k=1)
    rec = run_trial(ChainTarget(chain), poly_growth(1), 0, step_cap=1000, quiet=None)
    assert rec.truncated and rec.verdict == INCONCLUSIVE


def test_short_quiet_window_can_end_in_bad_bscc():
    # the BSCC {0, 1} is bad, but f1 on state 1 shows up once per 10^4 steps
    chain = build_chain(0, [[(0, 0.9999), (1, 0.0001)], [(0, 1.0)]],
                        [E1, marker_set(f=[1])], k=1)
    rec = run_trial(ChainTarget(chain), poly_growth(1), 0, step_cap=10 ** 4, quiet=100)
    assert rec.verdict == BAD_TAIL


def test_segment_accounting():
    target = ChainTarget(gen_synth_top(4, 0.5, 0.5))
    for t in range(50):
        rec = run_trial(target, poly_growth(1), trial_seed(3, t), quiet=2000, step_cap=10 ** 5)
        assert not rec.truncated
        assert rec.final_steps >= 2000
        if rec.restarts <= 64:
            assert rec.S == sum(rec.segments) and len(rec.segments) == rec.restarts
        assert rec.verdict in (GOOD_TAIL, BAD_TAIL)


def test_top_verdicts_are_good():
    # a restart-free window of 2000 steps cannot sit in the sink (no e1 there)
    target = ChainTarget(gen_synth_top(2, 0.5, 0.5))
    verdicts = {run_trial(target, poly_growth(1), s, quiet=2000).verdict for s in range(30)}
    assert verdicts == {GOOD_TAIL}


def test_raw_target_through_automaton():
    target = RawChainTarget(FIG4_RAW, parse_dra(LAST_G))
    rec = run_trial(target, poly_growth(2), 1, quiet=2000)
    assert rec.verdict == GOOD_TAIL


def test_majority_target_heuristic():
    rec = run_trial(MajorityTarget(2, 1), poly_growth(1), 0, quiet=10 ** 4, step_cap=10 ** 5)
    assert rec.verdict == GOOD_TAIL


# experiments

def _config(**kw):
    args = dict(target=ChainTarget(gen_fig4(0.5, 0.5)), growth=poly_growth(2), trials=20,
                quiet=1000, step_cap=10 ** 5, base_seed=5, family="fig4", params="p=0.5;q=0.5")
    args.update(kw)
    return ExperimentConfig(**args)


def test_config_validation():
    with pytest.raises(ValueError):
        _config(trials=0)
    with pytest.raises(ValueError):
        _config(quiet=1000, step_cap=1999)
    assert _config(quiet=None, step_cap=10).label == "2"


def test_trial_seeds_are_distinct_and_stable():
    seeds = [trial_seed(0, t) for t in range(1000)]
    assert len(set(seeds)) == 1000
    assert trial_seed(0, 5) == trial_seed(0, 5) != trial_seed(1, 5)


def test_csv_is_reproducible():
    config = _config()
    a = experiment_csv(config, *experiment(config))
    b = experiment_csv(config, *experiment(config))
    assert a == b
    rows = list(csv.reader(io.StringIO(a)))
    assert rows[0] == CSV_COLUMNS
    assert len(rows) == 22 and rows[-1][0] == "SUMMARY"
    assert rows[1][:3] == ["fig4", "p=0.5;q=0.5", "2"]


def test_parallel_matches_serial():
    config = _config(trials=12)
    serial = experiment_csv(config, *experiment(config, jobs=1))
    parallel = experiment_csv(config, *experiment(config, jobs=2))
    assert serial == parallel


def test_single_trial_summary():
    records, summary = experiment(_config(trials=1))
    assert summary.mean == records[0].S and summary.stderr == 0.0


def test_summary_is_order_independent():
    records, summary = experiment(_config(trials=40))
    again = summarize(list(reversed(records)))
    assert again.mean == summary.mean
    assert again.stderr == pytest.approx(summary.stderr, rel=1e-12)
    assert again.restart_histogram == summary.restart_histogram
    assert summary.ci99[0] < summary.mean < summary.ci99[1]


# regression

def test_slope_examples():
    assert loglog_slope([(x, x ** 2) for x in (1, 2, 3, 5)]) == pytest.approx(2.0, abs=1e-9)
    assert loglog_slope([(x, 7 * x) for x in (2, 4, 8)]) == pytest.approx(1.0, abs=1e-9)
    assert loglog_slope([(x, math.sqrt(x)) for x in (1, 10, 100)]) == pytest.approx(0.5)


def test_slope_errors():
    with pytest.raises(ValueError):
        loglog_slope([(1, 1), (2, 2)])
    with pytest.raises(ValueError):
        loglog_slope([(1, 1), (2, 0), (3, 3)])
