from __future__ import annotations

from itertools import combinations

import numpy as np
import pytest

from resetqec import gf2
from resetqec.layout import (
    LayoutError,
    commutation_violations,
    connectivity,
    degrees,
    memory_patch,
    stability_patch,
)


def _type_matrix(patch, pauli_type):
    cols = {q: i for i, q in enumerate(patch.data_qubits)}
    rows = []
    for s in patch.stabilisers_of(pauli_type):
        r = np.zeros(len(cols), dtype=np.uint8)
        r[[cols[q] for q in s.support]] = 1
        rows.append(r)
    return np.array(rows), cols


def _min_logical_weight(patch, logical_type, limit):
    """Smallest support of an operator of ``logical_type`` that commutes with
    all stabilisers but is not itself a stabiliser."""
    other = "X" if logical_type == "Z" else "Z"
    checks, cols = _type_matrix(patch, other)
    same, _ = _type_matrix(patch, logical_type)
    n = len(cols)
    for w in range(1, limit + 1):
        for support in combinations(range(n), w):
            v = np.zeros(n, dtype=np.uint8)
            v[list(support)] = 1
            if (checks @ v % 2).any():
                continue
            if not gf2.in_rowspace(v, same):
                return w
    return None


@pytest.mark.parametrize("d,stabs", [(3, 4), (5, 12), (7, 24)])
def test_memory_counts(d, stabs):
    patch = memory_patch(d)
    assert len(patch.data_qubits) == d * d
    assert len(patch.stabilisers_of("X")) == stabs
    assert len(patch.stabilisers_of("Z")) == stabs
    assert len(patch.aux_qubits) == 2 * stabs


def test_squeezing_memory_doubles_auxiliaries():
    assert len(memory_patch(3, "squeezing").aux_qubits) == 16


@pytest.mark.parametrize("variant", ["standard", "spreading", "squeezing"])
@pytest.mark.parametrize("make", [lambda v: memory_patch(3, v), lambda v: memory_patch(5, v),
                                  lambda v: stability_patch(4, v), lambda v: stability_patch(6, v)])
def test_stabilisers_commute(make, variant):
    assert commutation_violations(make(variant)) == []


@pytest.mark.parametrize("d", [3, 5])
@pytest.mark.parametrize("basis", ["X", "Z"])
def test_memory_logical_weight_equals_distance(d, basis):
    patch = memory_patch(d, "standard", basis)
    assert _min_logical_weight(patch, "Z", d) == d
    assert _min_logical_weight(patch, "X", d) == d
    assert len(patch.logical_support) == d


def test_stability_patch_structure():
    patch = stability_patch(4)
    assert len(patch.data_qubits) == 16
    assert len(patch.stabilisers) == 17
    xs, zs = patch.symplectic_matrix()
    assert gf2.rank(np.hstack([xs, zs])) == 16
    acc = set()
    for s in patch.stabilisers_of("X"):
        acc ^= set(s.support)
    assert acc == set()


def test_spreading_helpers_scale_with_width():
    counts = [len(stability_patch(w, "spreading").helper_qubits) for w in (4, 6, 8)]
    assert counts[0] > 0
    # linear growth: constant second difference
    assert counts[2] - counts[1] == counts[1] - counts[0]


def test_squeezing_stability_qubit_counts():
    std = stability_patch(4)
    sqz = stability_patch(4, "squeezing")
    assert len(sqz.aux_qubits) == 34
    assert (std.num_qubits, sqz.num_qubits) == (33, 50)


def test_square_grid_degree():
    assert max(degrees(connectivity(memory_patch(3))).values()) == 4
    assert max(degrees(connectivity(stability_patch(4, "spreading"))).values()) <= 4


def test_squeezing_connectivity_has_auxiliary_pairs_and_degree_three_vertices():
    patch = stability_patch(4, "squeezing")
    edges = connectivity(patch)
    for s in patch.stabilisers:
        assert frozenset(s.auxiliaries) in edges
    assert 3 in degrees(edges).values()


def test_every_support_qubit_is_adjacent_to_an_auxiliary():
    for patch in (memory_patch(3), stability_patch(4, "squeezing")):
        edges = connectivity(patch)
        for s in patch.stabilisers:
            for q in s.support:
                assert any(frozenset((a, q)) in edges for a in s.auxiliaries)


@pytest.mark.parametrize("bad", [2, 4, 1])
def test_bad_memory_distance(bad):
    with pytest.raises(LayoutError):
        memory_patch(bad)


@pytest.mark.parametrize("bad", [3, 2, 5])
def test_bad_stability_width(bad):
    with pytest.raises(LayoutError):
        stability_patch(bad)


def test_layout_json_lists_every_qubit():
    import json
    doc = json.loads(stability_patch(4, "spreading").to_json())
    assert len(doc["qubits"]) == stability_patch(4, "spreading").num_qubits
    assert doc["helper_pairs"]
