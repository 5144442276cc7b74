import random
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rabintest.generators import gen_fig4
from rabintest.model import (ChainSystem, ModelError, as_black_box, build_chain, check_markers,
                             e_bit, f_bit, format_markers, format_model, marker_limit,
                             marker_set, observe_path, parse_markers, parse_model,
                             raw_black_box, sample_step)

from _gen import random_marker_chain, random_raw_chain

FIG4 = """lmc 1
# start -p-> s1 <-> goal
states 3
initial 0
markers 1
obs 0 -
obs 2 e1
trans 0 0 1/2
trans 0 1 1/2
trans 1 1 1/2
trans 1 2 1/2
trans 2 2 1/2
trans 2 1 1/2
"""


# marker sets

def test_marker_bits_interleave():
    assert e_bit(1) == 1 and f_bit(1) == 2 and e_bit(2) == 4 and f_bit(2) == 8
    assert marker_set(e=[1, 2], f=[2]) == 1 | 4 | 8


def test_marker_text_round_trip():
    assert parse_markers("-") == 0
    assert parse_markers("e1,f2") == e_bit(1) | f_bit(2)
    assert format_markers(e_bit(1) | f_bit(2)) == "e1,f2"
    with pytest.raises(ValueError):
        parse_markers("x3")


@given(st.integers(min_value=0, max_value=(1 << 8) - 1))
def test_marker_format_parse_inverse(mask):
    assert parse_markers(format_markers(mask)) == mask
    assert marker_limit(mask) <= 4


def test_check_markers_rejects_high_index():
    check_markers(marker_set(e=[2]), 2)
    with pytest.raises(ValueError):
        check_markers(marker_set(f=[3]), 2)


# parsing

def test_parse_single_state():
    chain = parse_model("lmc 1\nstates 1\ninitial 0\nmarkers 1\nobs 0 e1\ntrans 0 0 1\n")
    assert chain.size == 1 and chain.marker_labeled
    assert chain.obs == (e_bit(1),)


def test_parse_fig4_file():
    chain = parse_model(FIG4)
    assert chain == gen_fig4(0.5, 0.5)
    for row in chain.rows:
        assert abs(sum(p for _, p in row) - 1.0) <= 1e-9


def test_row_sum_error_names_state():
    text = "lmc 1\nstates 2\ninitial 0\nmarkers 1\ntrans 0 0 0.5\ntrans 0 1 0.3\ntrans 1 1 1\n"
    with pytest.raises(ModelError, match="state 0"):
        parse_model(text)


@pytest.mark.parametrize("text, needle", [
    ("", "empty"),
    ("lmc 2\n", "header"),
    ("lmc 1\nstates 1\ninitial 0\nmarkers 1\ntrans 0 3 1\n", "dangling"),
    ("lmc 1\nstates 1\ninitial 0\nmarkers 1\ntrans 0 0 1\ntrans 0 0 0\n", "zero"),
    ("lmc 1\nstates 1\ninitial 0\nmarkers 1\nobs 0 red\ntrans 0 0 1\n", "mixed"),
    ("lmc 1\nstates 1\ninitial 0\nobs 0 e1,f1\ntrans 0 0 1\n", "mixed"),
    ("lmc 1\nstates 1\ninitial 0\nobs 0 -\ntrans 0 0 1\n", "mixed"),
    ("lmc 1\nstates 2\ninitial 0\nobs 0 a\ntrans 0 0 1\ntrans 1 1 1\n", "no observation"),
    ("lmc 1\nstates 1\ninitial 0\nmarkers 1\nobs 0 e2\ntrans 0 0 1\n", "index above"),
    ("lmc 1\nstates 1\ninitial 0\nmarkers 1\ntrans 0 0 x\n", "bad probability"),
    ("lmc 1\nstates 1\ninitial 0\nmarkers 1\nfrobnicate\n", "unrecognized"),
    ("lmc 1\nstates 1\ninitial 0\nmarkers 1\n", "no outgoing"),
])
def test_parse_errors(text, needle):
    with pytest.raises(ModelError, match=needle):
        parse_model(text)


def test_syntax_error_carries_line_number():
    with pytest.raises(ModelError) as info:
        parse_model("lmc 1\nstates 1\n\nbogus line\n")
    assert info.value.line == 4


def test_raw_chain_parses_symbols():
    chain = parse_model("lmc 1\nstates 2\ninitial 0\nobs 0 o\nobs 1 g\n"
                        "trans 0 1 1\ntrans 1 0 1\n")
    assert not chain.marker_labeled
    assert chain.obs == ("o", "g")


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.booleans())
def test_format_round_trip(seed, raw):
    rng = np.random.default_rng(seed)
    chain = random_raw_chain(rng) if raw else random_marker_chain(rng)
    assert parse_model(format_model(chain)) == chain


def test_names_do_not_affect_equality():
    a = build_chain(0, [[(0, 1.0)]], [1], k=1, names=["x"])
    b = build_chain(0, [[(0, 1.0)]], [1], k=1)
    assert a == b and hash(a) == hash(b)


# sampling

def test_sample_single_successor():
    chain = build_chain(0, [[(0, 1.0)]], [e_bit(1)], k=1)
    rng = random.Random(3)
    assert all(sample_step(chain, 0, rng) == 0 for _ in range(100))


def test_sample_degenerate_probability():
    # p = 1 is outside the generator's open interval, so build it by hand
    chain = build_chain(0, [[(1, 1.0)], [(1, 0.5), (2, 0.5)], [(2, 0.5), (1, 0.5)]],
                        [0, 0, e_bit(1)], k=1)
    rng = random.Random(0)
    assert all(sample_step(chain, 0, rng) == 1 for _ in range(100))


def test_sample_frequency_fig4():
    chain = gen_fig4(0.5, 0.3)
    rng = random.Random(11)
    hits = sum(sample_step(chain, 1, rng) == 2 for _ in range(10 ** 5))
    assert abs(hits / 10 ** 5 - 0.3) <= 0.01


def test_sampling_total_variation():
    chain = random_marker_chain(np.random.default_rng(5), max_states=6)
    rng = random.Random(1)
    for s, row in enumerate(chain.rows):
        counts = Counter(sample_step(chain, s, rng) for _ in range(10 ** 5))
        tv = 0.5 * sum(abs(counts[t] / 10 ** 5 - p) for t, p in row)
        assert tv <= 0.02


# black-box sessions

def test_black_box_initial_observation():
    chain = gen_fig4(0.5, 0.5)
    assert as_black_box(chain, 0).reset() == 0
    one = build_chain(0, [[(0, 1.0)]], [e_bit(1)], k=1)
    assert as_black_box(one).reset() == e_bit(1)


def test_black_box_emits_goal_marker_only_at_goal():
    chain = gen_fig4(0.5, 0.5)
    box = ChainSystem(chain, 4)
    box.reset()
    path, obs = [box.state], [chain.obs[box.state]]
    for _ in range(500):
        obs.append(box.step())
        path.append(box.state)
    assert obs == observe_path(chain, path)
    assert all((o == e_bit(1)) == (s == 2) for s, o in zip(path, obs))


def test_sessions_are_deterministic():
    chain = random_marker_chain(np.random.default_rng(9))
    a, b = as_black_box(chain, 42), as_black_box(chain, 42)
    assert [a.reset()] + [a.step() for _ in range(300)] == \
           [b.reset()] + [b.step() for _ in range(300)]


def test_wrapper_kind_checks():
    raw = parse_model("lmc 1\nstates 1\ninitial 0\nobs 0 a\ntrans 0 0 1\n")
    with pytest.raises(ModelError):
        as_black_box(raw)
    with pytest.raises(ModelError):
        raw_black_box(gen_fig4(0.5, 0.5))
    assert raw_black_box(raw).reset() == "a"
