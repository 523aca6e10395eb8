from __future__ import annotations

import math

import numpy as np
import pytest
from conftest import model, noisy
from hypothesis import given, settings
from hypothesis import strategies as st

from resetqec import decoder, sampler
from resetqec.dem import DemMechanism, DetectorErrorModel
from resetqec.sampler import SampleBlock


def _dem(n, *mechs, obs=1):
    return DetectorErrorModel(n, obs, tuple(DemMechanism(q, d, o) for q, d, o in mechs))


def test_single_edge_weight():
    g = decoder.build_graph(_dem(2, (0.1, (0, 1), ())))
    (edge,) = g.edges
    assert edge.weight == pytest.approx(math.log(9))


def test_parallel_edges_merge():
    # the second component comes from a decomposed hyperedge
    hyper = DemMechanism(0.1, (0, 1, 2, 3), (), (((0, 1), ()), ((2, 3), ())))
    base = _dem(4, (0.1, (0, 1), ()), (0.1, (2, 3), ()))
    g = decoder.build_graph(DetectorErrorModel(4, 1, base.mechanisms + (hyper,)))
    edge = next(e for e in g.edges if (e.u, e.v) == (0, 1))
    assert edge.probability == pytest.approx(0.18)
    assert edge.weight == pytest.approx(math.log(0.82 / 0.18))


def test_empty_model_gives_boundary_only_graph():
    g = decoder.build_graph(_dem(3))
    assert g.edges == ()
    assert decoder.decode(g, [0, 0, 0]).tolist() == [0]
    with pytest.raises(decoder.DecodingError):
        decoder.decode(g, [1, 0, 0])


def test_negative_weights_rejected():
    with pytest.raises(decoder.DecodingError):
        decoder.build_graph(_dem(2, (0.7, (0, 1), ())))


def test_undecomposed_hyperedge_rejected():
    with pytest.raises(decoder.DecodingError):
        decoder.build_graph(_dem(3, (0.1, (0, 1, 2), ())))


def test_forced_boundary_match_predicts_flip():
    g = decoder.build_graph(_dem(2, (0.1, (0,), (0,)), (0.1, (0, 1), ()), (0.1, (1,), ())))
    assert decoder.decode(g, [0, 0]).tolist() == [0]
    assert decoder.decode(g, [1, 0]).tolist() == [1]
    assert decoder.decode(g, [1, 1]).tolist() == [0]


def test_zero_noise_block_has_no_failures():
    g = decoder.build_graph(model("memory", "standard", "NR", 3, 3))
    block = SampleBlock(np.zeros((50, g.num_detectors), bool), np.zeros((50, 1), bool), 50)
    assert decoder.decode_batch(g, block) == (0, 50)


def test_boundary_pair_block():
    """Each shot lights one detector whose only edge crosses the logical."""
    g = decoder.build_graph(_dem(2, (0.1, (0,), (0,)), (0.2, (1,), ())))
    dets = np.array([[1, 0], [1, 0], [0, 1], [1, 1]], bool)
    truth = np.array([[1], [0], [0], [1]], bool)
    failures, shots = decoder.decode_batch(g, SampleBlock(dets, truth, 4))
    assert (failures, shots) == (1, 4)


def _graph(family):
    return decoder.build_graph(model("stability", family, "NR", 4, 5, 1e-2))


@pytest.mark.parametrize("family", ["standard", "spreading", "squeezing"])
def test_matching_weight_equals_brute_force(family):
    g = _graph(family)
    rng = np.random.default_rng(7)
    for _ in range(60):
        k = int(rng.integers(0, 9))
        defects = rng.choice(g.num_detectors, k, replace=False)
        assert decoder.match(g, defects).weight == pytest.approx(
            decoder.brute_force_match(g, defects), abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 77), min_size=0, max_size=8, unique=True))
def test_blossom_path_agrees_with_dp(defects):
    g = _graph("standard")
    defects = [d for d in defects if d < g.num_detectors]
    w_dp, _ = decoder._match_dp(g, sorted(defects)) if defects else (0.0, ())
    w_bl, _ = decoder._match_blossom(g, sorted(defects)) if defects else (0.0, ())
    assert w_dp == pytest.approx(w_bl, abs=1e-9)


def test_batch_prediction_matches_single_shot_decoding():
    nz = noisy("stability", "standard", "NR", 4, 5, 1e-2)
    g = decoder.build_graph(model("stability", "standard", "NR", 4, 5, 1e-2))
    block = sampler.sample(nz, 400, seed=2)
    batch = decoder.predict(g, block.detectors)
    single = np.array([decoder.decode(g, row) for row in block.detectors])
    assert np.array_equal(batch, single)


def test_large_clusters_use_the_sparse_matcher_consistently():
    nz = noisy("stability", "standard", "NR", 4, 11, 2e-2)
    g = decoder.build_graph(model("stability", "standard", "NR", 4, 11, 2e-2))
    block = sampler.sample(nz, 300, seed=4)
    dets = block.detectors[block.detectors.sum(axis=1) > decoder.KERNEL_DP_LIMIT + 8][:40]
    assert len(dets)
    batch = decoder.predict(g, dets)
    exact = np.array([decoder.decode(g, row) for row in dets])
    # both are minimum-weight matchings; predictions can only differ on ties
    agree = (batch == exact).all(axis=1).mean()
    assert agree >= 0.9


def test_graph_construction_is_reproducible():
    a = decoder.build_graph(model("memory", "standard", "NR", 3, 3))
    b = decoder.build_graph(model("memory", "standard", "NR", 3, 3))
    assert [e.weight for e in a.edges] == [e.weight for e in b.edges]
    assert np.array_equal(a.distance, b.distance)


def test_predict_rejects_wrong_shape():
    g = _graph("standard")
    with pytest.raises(decoder.DecodingError):
        decoder.predict(g, np.zeros((2, 3), bool))
