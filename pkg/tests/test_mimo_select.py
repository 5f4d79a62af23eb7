import json
import math
from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from relaynet.linalg_core import MimoChannel, mimo_capacity
from relaynet.mimo_select import (
    best_subchannel_bruteforce,
    check_greedy_trace,
    greedy_subchannel,
    lemma1_bounds,
    lemma2_fraction,
    load_channel,
    make_allones_channel,
    make_parallel_channel,
    save_channel,
    select_subchannel,
    thm3_lower_bound,
)
from tests.conftest import complex_normal
from utils.error_handler import CapExceededError, ValidationError

seeds = st.integers(min_value=0, max_value=2**32 - 1)
dims = st.integers(min_value=1, max_value=4)


def random_channel(n_t, n_r, seed):
    return MimoChannel(complex_normal(np.random.default_rng(seed), (n_r, n_t)))


def test_bruteforce_on_parallel_channel():
    selection = best_subchannel_bruteforce(make_parallel_channel(3, 1.0), 2, 1)
    assert selection.capacity_bits == pytest.approx(1.0, abs=1e-9)
    assert len(selection.tx_indices) == 2 and len(selection.rx_indices) == 1


def test_bruteforce_full_selection_is_identity():
    channel = random_channel(3, 2, seed=1)
    selection = best_subchannel_bruteforce(channel, 3, 2)
    assert selection.tx_indices == (0, 1, 2)
    assert selection.rx_indices == (0, 1)
    assert selection.capacity_bits == pytest.approx(mimo_capacity(channel), abs=1e-9)


def test_bruteforce_ties_go_to_smallest_pair():
    selection = best_subchannel_bruteforce(make_allones_channel(3, 3, 1.0), 1, 2)
    assert (selection.tx_indices, selection.rx_indices) == ((0,), (0, 1))


@pytest.mark.parametrize("seed", range(5))
def test_bruteforce_matches_double_loop(seed):
    channel = random_channel(4, 4, seed)
    best = -1.0
    for tx in combinations(range(4), 2):
        for rx in combinations(range(4), 2):
            best = max(best, mimo_capacity(channel.matrix[np.ix_(rx, tx)]))
    selection = best_subchannel_bruteforce(channel, 2, 2)
    assert selection.capacity_bits == pytest.approx(best, abs=1e-10)
    submatrix = channel.submatrix(selection.tx_indices, selection.rx_indices)
    assert mimo_capacity(submatrix) == pytest.approx(selection.capacity_bits, abs=1e-9)


def test_bruteforce_cap_and_dimensions():
    channel = random_channel(4, 4, seed=0)
    with pytest.raises(CapExceededError):
        best_subchannel_bruteforce(channel, 2, 2, max_combinations=10)
    with pytest.raises(ValidationError):
        best_subchannel_bruteforce(channel, 0, 1)
    with pytest.raises(ValidationError):
        greedy_subchannel(channel, 1, 5)


def test_greedy_without_removals():
    channel = random_channel(3, 4, seed=2)
    selection = greedy_subchannel(channel, 3, 4)
    assert selection.removal_trace == ()
    assert selection.capacity_bits == pytest.approx(mimo_capacity(channel), abs=1e-12)
    assert check_greedy_trace(selection) == math.inf


def test_greedy_on_all_ones_channel():
    channel = make_allones_channel(2, 2, 1.0)
    selection = greedy_subchannel(channel, 1, 1)
    assert selection.capacity_bits == pytest.approx(1.0, abs=1e-12)
    assert selection.capacity_bits >= 0.25 * math.log2(5)
    assert [step.side for step in selection.removal_trace] == ['rx', 'tx']
    assert (selection.tx_indices, selection.rx_indices) == ((1,), (1,))


def test_greedy_on_random_5x5():
    channel = random_channel(5, 5, seed=4)
    full = mimo_capacity(channel)
    greedy = greedy_subchannel(channel, 2, 3)
    best = best_subchannel_bruteforce(channel, 2, 3)
    assert greedy.capacity_bits <= best.capacity_bits + 1e-9
    assert greedy.capacity_bits >= 6 / 25 * full - 1e-9
    assert len(greedy.removal_trace) == 2 + 3


@given(dims, dims, seeds, st.data())
def test_greedy_meets_per_step_and_chain_bounds(n_t, n_r, seed, data):
    k_t = data.draw(st.integers(min_value=1, max_value=n_t))
    k_r = data.draw(st.integers(min_value=1, max_value=n_r))
    channel = random_channel(n_t, n_r, seed)
    selection = greedy_subchannel(channel, k_t, k_r)
    assert check_greedy_trace(selection) >= -1e-9
    bound = float(lemma2_fraction(n_t, n_r, k_t, k_r)) * mimo_capacity(channel)
    assert selection.capacity_bits >= bound - 1e-9
    submatrix = channel.submatrix(selection.tx_indices, selection.rx_indices)
    assert mimo_capacity(submatrix) == pytest.approx(selection.capacity_bits, abs=1e-9)


@given(dims, dims, seeds, st.data())
def test_bruteforce_meets_general_bound(n_t, n_r, seed, data):
    k_t = data.draw(st.integers(min_value=1, max_value=n_t))
    k_r = data.draw(st.integers(min_value=1, max_value=n_r))
    channel = random_channel(n_t, n_r, seed)
    bound = thm3_lower_bound(mimo_capacity(channel), n_t, n_r, k_t, k_r)
    assert best_subchannel_bruteforce(channel, k_t, k_r).capacity_bits >= bound - 1e-9


@given(st.integers(min_value=1, max_value=4), st.integers(min_value=0, max_value=3), seeds, st.data())
def test_bruteforce_meets_receive_selection_bounds(n_t, extra, seed, data):
    n_r = n_t + extra
    k_r = data.draw(st.integers(min_value=1, max_value=n_r))
    channel = random_channel(n_t, n_r, seed)
    full = mimo_capacity(channel)
    lower, case, upper = lemma1_bounds(full, n_t, n_r, k_r)
    achieved = best_subchannel_bruteforce(channel, n_t, k_r).capacity_bits
    assert achieved >= lower - 1e-9
    if case == '5b':
        assert achieved <= upper + 1e-9


def test_thm3_lower_bound_examples():
    assert thm3_lower_bound(7.5, 3, 3, 3, 3) == pytest.approx(7.5)
    assert thm3_lower_bound(12.0, 4, 4, 1, 1) == pytest.approx(-1.0)
    assert thm3_lower_bound(3.0, 3, 3, 1, 1) == pytest.approx(1 - math.log2(9))
    assert best_subchannel_bruteforce(make_parallel_channel(3, 1.0), 1, 1).capacity_bits >= 1 - math.log2(9)
    with pytest.raises(ValidationError):
        thm3_lower_bound(1.0, 2, 2, 3, 1)


def test_lemma1_examples():
    assert lemma1_bounds(8.0, 2, 4, 4) == (pytest.approx(8.0), '5b', 8.0)
    lower, case, upper = lemma1_bounds(8.0, 2, 4, 1)
    assert (lower, case, upper) == (pytest.approx(3.0), '5a', None)
    lower, case, _ = lemma1_bounds(8.0, 2, 4, 3)
    assert (lower, case) == (pytest.approx(7.0), '5b')
    # both forms agree at k_r = n_t
    assert lemma1_bounds(8.0, 2, 4, 2).lower == pytest.approx(8.0 - math.log2(6))


def test_lemma1_needs_receive_side_at_least_as_large():
    with pytest.raises(ValidationError, match="reciprocal"):
        lemma1_bounds(5.0, 4, 2, 1)


@pytest.mark.parametrize("args, expected", [
    ((3, 3, 3, 3), Fraction(1)), ((4, 4, 2, 2), Fraction(1, 4)), ((3, 5, 1, 2), Fraction(2, 15)),
])
def test_lemma2_fraction(args, expected):
    assert lemma2_fraction(*args) == expected


@pytest.mark.parametrize("n, bits, capacity", [(3, 1.0, 3.0), (1, 2.0, 2.0), (4, 2.5, 10.0)])
def test_parallel_channel(n, bits, capacity):
    channel = make_parallel_channel(n, bits)
    assert (channel.rows, channel.cols) == (n, n)
    assert mimo_capacity(channel) == pytest.approx(capacity, abs=1e-9)


@pytest.mark.parametrize("n_t, n_r, power, capacity", [
    (2, 2, 1.0, math.log2(5)), (4, 3, 0.0, 0.0), (3, 2, 0.5, 2.0),
])
def test_allones_channel(n_t, n_r, power, capacity):
    channel = make_allones_channel(n_t, n_r, power)
    assert (channel.rows, channel.cols) == (n_r, n_t)
    assert mimo_capacity(channel) == pytest.approx(capacity, abs=1e-9)


def test_channel_builders_reject_bad_input():
    with pytest.raises(ValidationError):
        make_allones_channel(2, 2, -1.0)
    with pytest.raises(ValidationError):
        make_parallel_channel(0, 1.0)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_parallel_channel_ratio_is_exact(n):
    channel = make_parallel_channel(n, 1.0)
    for k_t in range(1, n + 1):
        for k_r in range(1, n + 1):
            ratio = best_subchannel_bruteforce(channel, k_t, k_r).capacity_bits / n
            assert ratio == pytest.approx(min(k_t, k_r) / n, abs=1e-9)


@pytest.mark.parametrize("n_t, n_r", [(2, 2), (3, 4), (5, 3)])
def test_allones_low_power_ratio_matches_gap_free_fraction(n_t, n_r):
    channel = make_allones_channel(n_t, n_r, 1e-4)
    full = mimo_capacity(channel)
    for k_t in range(1, n_t + 1):
        for k_r in range(1, n_r + 1):
            ratio = best_subchannel_bruteforce(channel, k_t, k_r).capacity_bits / full
            fraction = float(lemma2_fraction(n_t, n_r, k_t, k_r))
            assert fraction * 0.99 <= ratio <= fraction * 1.01


def test_channel_json_round_trip():
    channel = random_channel(3, 2, seed=6)
    again = load_channel(save_channel(channel))
    assert np.array_equal(again.matrix, channel.matrix)
    doc = json.loads(save_channel(channel))
    assert (doc['rows'], doc['cols'], len(doc['entries'])) == (2, 3, 6)


@pytest.mark.parametrize("doc", [
    {"rows": 1, "cols": 1},
    {"rows": 1, "cols": 1, "entries": [[1, 0]], "extra": 0},
    {"rows": 0, "cols": 1, "entries": []},
    {"rows": 1, "cols": 2, "entries": [[1, 0]]},
    {"rows": 1, "cols": 1, "entries": [[1]]},
    {"rows": 1, "cols": 1, "entries": [["1", 0]]},
])
def test_channel_json_rejects_bad_documents(doc):
    with pytest.raises(ValidationError):
        load_channel(json.dumps(doc))


@pytest.mark.parametrize("data", [b"\xff", b'{"rows": 1, "cols": 1, "entries": [["\xe9", 0]]}'])
def test_channel_json_rejects_undecodable_bytes(data):
    with pytest.raises(ValidationError, match="malformed channel document"):
        load_channel(data)


def test_select_subchannel_dispatch():
    channel = random_channel(3, 3, seed=3)
    assert select_subchannel(channel, 2, 2).removal_trace == ()
    assert len(select_subchannel(channel, 2, 2, method='greedy').removal_trace) == 2
    with pytest.raises(ValidationError):
        select_subchannel(channel, 1, 1, method='random')


@pytest.mark.slow
def test_bruteforce_matches_double_loop_on_many_channels():
    pairs = [(tx, rx) for tx in combinations(range(4), 2) for rx in combinations(range(4), 2)]
    for seed in range(100):
        channel = random_channel(4, 4, seed)
        best = max(mimo_capacity(channel.matrix[np.ix_(rx, tx)]) for tx, rx in pairs)
        assert best_subchannel_bruteforce(channel, 2, 2).capacity_bits == pytest.approx(best, abs=1e-10)
