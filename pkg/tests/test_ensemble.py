import io
import json
import math

import numpy as np
import pandas as pd
import pytest

from experiments.ensemble import (
    EnsembleSpec,
    allowed_links,
    layer_pairs,
    random_channel,
    random_hermitian,
    random_network,
    run_mimo_verify,
    run_prop1,
    run_prop2,
    run_verify,
    selection_pairs,
    summary_dict,
    to_csv,
    to_json,
    trial_generator,
    trial_record,
)
from relaynet.constructions import construct_general_tight
from relaynet.mimo_select import make_allones_channel, make_parallel_channel
from relaynet.network_model import LayerStructure
from relaynet.routing import best_route
from utils.error_handler import CapExceededError, DisconnectedNetworkError, ValidationError


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------

def test_trial_streams_are_deterministic_and_distinct():
    a = trial_generator(7, 3).standard_normal(4)
    assert np.array_equal(a, trial_generator(7, 3).standard_normal(4))
    assert not np.array_equal(a, trial_generator(7, 4).standard_normal(4))
    assert not np.array_equal(a, trial_generator(8, 3).standard_normal(4))


@pytest.mark.parametrize("seed, trial", [(-1, 0), (2**64, 0), (0, -1)])
def test_trial_generator_rejects_out_of_range_keys(seed, trial):
    with pytest.raises(ValidationError):
        trial_generator(seed, trial)


def test_random_network_independent_of_draw_order():
    spec = EnsembleSpec(num_relays=3, trials=10, seed=11)
    forward = [random_network(spec, t).gains for t in range(10)]
    backward = [random_network(spec, t).gains for t in reversed(range(10))][::-1]
    assert all(np.array_equal(a, b) for a, b in zip(forward, backward))


def test_full_topology_mask():
    mask = allowed_links(EnsembleSpec(num_relays=2, trials=1, seed=0))
    assert mask.tolist() == [
        [False, True, True, True],
        [False, False, True, True],
        [False, True, False, True],
        [False, False, False, False],
    ]


def test_layered_networks_only_link_successive_layers():
    spec = EnsembleSpec.layered(3, 2, trials=5, seed=2)
    assert spec.num_relays == 6 and spec.topology == 'layered'
    mask = allowed_links(spec)
    for t in range(5):
        net = random_network(spec, t)
        assert net.layering == LayerStructure(3, 2)
        assert np.all(net.gains[~mask] == 0)
        assert np.all(net.gains[mask] != 0)


def test_zero_scale_network_has_no_route():
    net = random_network(EnsembleSpec(num_relays=2, trials=1, seed=0, scale=0.0), 0)
    assert np.all(net.gains == 0)
    with pytest.raises(DisconnectedNetworkError):
        best_route(net)


def test_fixed_snr_fading_has_constant_modulus():
    spec = EnsembleSpec(num_relays=3, trials=1, seed=5, fading='fixed_snr', snr_db=10.0)
    net = random_network(spec, 0)
    moduli = np.abs(net.gains[allowed_links(spec)])
    assert moduli == pytest.approx(np.full(moduli.shape, math.sqrt(10.0)), rel=1e-12)


@pytest.mark.parametrize("kwargs", [
    dict(num_relays=0, trials=1, seed=0),
    dict(num_relays=2, trials=0, seed=0),
    dict(num_relays=2, trials=1, seed=-3),
    dict(num_relays=2, trials=1, seed=0, fading='rician'),
    dict(num_relays=2, trials=1, seed=0, scale=-1.0),
    dict(num_relays=2, trials=1, seed=0, snr_db=math.inf),
    dict(num_relays=3, trials=1, seed=0, layering=LayerStructure(2, 2)),
])
def test_invalid_specs(kwargs):
    with pytest.raises(ValidationError):
        EnsembleSpec(**kwargs)


def test_random_channel_and_hermitian_are_deterministic():
    assert np.array_equal(random_channel(3, 2, 4, 1).matrix, random_channel(3, 2, 4, 1).matrix)
    assert random_channel(3, 2, 4, 1).matrix.shape == (2, 3)
    h = random_hermitian(4, 9, 0)
    assert np.allclose(h, h.conj().T)


# ---------------------------------------------------------------------------
# Route verification
# ---------------------------------------------------------------------------

def test_trial_record_on_tight_example():
    record = trial_record(construct_general_tight(5, 1.0).network, trial_index=4)
    assert record.trial_index == 4
    assert record.fraction_achieved == pytest.approx(1 / 3, abs=1e-9)
    assert record.satisfied


def test_run_verify_small_ensemble():
    summary = run_verify(EnsembleSpec(num_relays=4, trials=20, seed=0))
    assert summary.violations == 0
    assert len(summary.records) == 20
    assert [r.trial_index for r in summary.records] == list(range(20))
    assert summary.worst_slack >= 0
    assert 0 < summary.min_fraction <= summary.mean_fraction <= 1 + 1e-9


def test_run_verify_independent_of_workers():
    spec = EnsembleSpec(num_relays=3, trials=12, seed=42)
    assert to_csv(run_verify(spec, workers=1)) == to_csv(run_verify(spec, workers=3))


def test_run_verify_layered():
    summary = run_verify(EnsembleSpec.layered(2, 2, trials=10, seed=1))
    assert summary.violations == 0


def test_run_verify_respects_cap():
    with pytest.raises(CapExceededError):
        run_verify(EnsembleSpec(num_relays=5, trials=1, seed=0), max_relays=4)


# ---------------------------------------------------------------------------
# MIMO selection verification
# ---------------------------------------------------------------------------

def test_selection_pairs():
    assert len(selection_pairs(2, 3, 'thm3')) == 6
    assert selection_pairs(2, 3, 'lemma1') == [(2, 1), (2, 2), (2, 3)]
    assert selection_pairs(3, 2, 'lemma1') == [(1, 2), (2, 2), (3, 2)]


@pytest.mark.parametrize("bound", ['thm3', 'lemma1', 'lemma2'])
@pytest.mark.parametrize("n_t, n_r", [(2, 2), (2, 3), (3, 2)])
def test_run_mimo_verify_holds(bound, n_t, n_r):
    summary = run_mimo_verify(n_t, n_r, trials=10, seed=3, bound=bound)
    assert summary.violations == 0
    assert summary.worst_slack >= -1e-9
    assert all(r.greedy_bits <= r.best_bits + 1e-9 for r in summary.records)


def test_parallel_channel_injection_gives_exact_ratios():
    summary = run_mimo_verify(3, 3, trials=2, seed=0, bound='thm3',
                              channel_source=lambda t: make_parallel_channel(3, 1.0 + t))
    for r in summary.records:
        assert r.ratio == pytest.approx(min(r.k_t, r.k_r) / 3, abs=1e-9)


def test_allones_injection_tracks_gap_free_fraction():
    summary = run_mimo_verify(3, 3, trials=1, seed=0, bound='lemma2',
                              channel_source=lambda t: make_allones_channel(3, 3, 1e-4))
    assert summary.violations == 0
    for r in summary.records:
        assert r.ratio == pytest.approx(r.k_t * r.k_r / 9, rel=0.01)


def test_injected_channel_must_match_shape():
    with pytest.raises(ValidationError):
        run_mimo_verify(2, 2, trials=1, seed=0, channel_source=lambda t: make_parallel_channel(3, 1.0))


@pytest.mark.parametrize("kwargs, error", [
    (dict(n_t=2, n_r=2, trials=1, seed=0, bound='thm9'), ValidationError),
    (dict(n_t=6, n_r=2, trials=1, seed=0), CapExceededError),
    (dict(n_t=2, n_r=2, trials=0, seed=0), ValidationError),
])
def test_run_mimo_verify_rejects_bad_arguments(kwargs, error):
    with pytest.raises(error):
        run_mimo_verify(**kwargs)


# ---------------------------------------------------------------------------
# Layered cut statistics and submatrix identity
# ---------------------------------------------------------------------------

def test_layer_pairs():
    assert layer_pairs(4) == [(1, 1), (1, 2), (1, 3), (1, 4), (2, 1), (2, 2), (3, 1), (4, 1)]


def test_run_prop1():
    summary = run_prop1(layer_pairs(8))
    assert summary.violations == 0
    row = {(r.num_layers, r.relays_per_layer): r for r in summary.records}[(3, 2)]
    assert (row.max_t, row.t_max) == (4, 4.0)


def test_run_prop2():
    summary = run_prop2(4, trials=3, seed=0)
    assert summary.violations == 0
    assert len(summary.records) == 3 * 4
    assert summary.worst_slack > 0
    with pytest.raises(CapExceededError):
        run_prop2(13, trials=1, seed=0)


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

def test_csv_header_and_determinism():
    spec = EnsembleSpec(num_relays=2, trials=5, seed=9)
    text = to_csv(run_verify(spec))
    assert text.splitlines()[0] == "trial,cap_bits,route_bits,fraction,bound_bits,satisfied"
    assert text == to_csv(run_verify(spec))
    frame = pd.read_csv(io.StringIO(text))
    assert frame['trial'].tolist() == [0, 1, 2, 3, 4]
    assert frame['satisfied'].all()


def test_prop1_csv_row():
    text = to_csv(run_prop1([(3, 2)]))
    assert text.splitlines() == ["L,N_L,max_t,t_max,satisfied", "3,2,4,4,True"]


def test_json_output():
    summary = run_mimo_verify(2, 2, trials=2, seed=1)
    doc = json.loads(to_json(summary))
    assert doc['schema_version'] == 1
    assert len(doc['records']) == 2 * 4
    assert set(doc['records'][0]) == {'trial', 'kt', 'kr', 'cap_bits', 'best_bits', 'greedy_bits',
                                      'bound_bits', 'satisfied'}
    assert summary_dict(summary)['records'] == 8


# ---------------------------------------------------------------------------
# Full-size acceptance runs
# ---------------------------------------------------------------------------

@pytest.mark.slow
@pytest.mark.parametrize("scale", [0.1, 1.0, 10.0])
def test_route_guarantee_acceptance(scale):
    for num_relays in range(1, 9):
        summary = run_verify(EnsembleSpec(num_relays=num_relays, trials=1000, seed=0, scale=scale), workers=4)
        assert summary.violations == 0


@pytest.mark.slow
def test_layered_route_guarantee_acceptance():
    for L, n_l in layer_pairs(9):
        assert run_verify(EnsembleSpec.layered(L, n_l, trials=1000, seed=0), workers=4).violations == 0


@pytest.mark.slow
@pytest.mark.parametrize("bound", ['thm3', 'lemma1', 'lemma2'])
def test_mimo_acceptance(bound):
    for n_t in range(1, 6):
        for n_r in range(1, 6):
            assert run_mimo_verify(n_t, n_r, trials=200, seed=0, bound=bound, workers=4).violations == 0


@pytest.mark.slow
def test_submatrix_identity_acceptance():
    for n in range(1, 7):
        assert run_prop2(n, trials=100, seed=0, workers=4).violations == 0
