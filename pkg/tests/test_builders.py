from __future__ import annotations

from collections import Counter
from fractions import Fraction

import pytest
from conftest import FAMILY_SCHEMES, noisy, program

from resetqec import dem
from resetqec.builders import (
    BuildError,
    SchemeSpec,
    _cx_layers,
    _swap_layers,
    build,
    build_with_map,
    clifford_action,
    lower,
)
from resetqec.circuit import NATIVE_KINDS, CircuitProgram, Operation, total_duration, validate
from resetqec.layout import memory_patch, stability_patch


@pytest.mark.parametrize("family,reset", FAMILY_SCHEMES)
@pytest.mark.parametrize("experiment,size", [("memory", 3), ("stability", 4)])
@pytest.mark.parametrize("rounds", [1, 2, 5])
def test_programs_validate(family, reset, experiment, size, rounds):
    assert validate(program(experiment, family, reset, size, rounds)) == []


@pytest.mark.parametrize("family,reset", FAMILY_SCHEMES)
@pytest.mark.parametrize("basis", ["X", "Z"])
def test_memory_x_basis_validates(family, reset, basis):
    assert validate(program("memory", family, reset, 5, 3, basis)) == []


@pytest.mark.parametrize("family,reset,round_ns", [
    ("standard", "NR", 840), ("standard", "UR", 1340), ("standard", "CR", 860),
    ("spreading", "NR", 900), ("squeezing", "NR", 1000)])
def test_round_durations(family, reset, round_ns):
    prog = program("stability", family, reset, 4, 5)
    assert prog.round_duration_ns == round_ns


@pytest.mark.parametrize("t_res", [0, 100, 500])
def test_ur_round_grows_with_reset_time(t_res):
    assert program("stability", "standard", "UR", 4, 5, "Z", t_res).round_duration_ns == 840 + t_res


@pytest.mark.parametrize("family,reset", FAMILY_SCHEMES)
def test_round_duration_matches_total_duration(family, reset):
    a = program("stability", family, reset, 4, 5)
    b = program("stability", family, reset, 4, 7)
    assert total_duration(b) - total_duration(a) == 2 * a.round_duration_ns


def test_native_gates_only():
    for family, reset in FAMILY_SCHEMES:
        prog = program("stability", family, reset, 4, 3)
        assert {op.kind for _, op in prog.operations()} <= NATIVE_KINDS


def test_ur_and_nr_share_detector_count_and_gates():
    ur = program("memory", "standard", "UR", 3, 3)
    nr = program("memory", "standard", "NR", 3, 3)
    assert ur.num_detectors == nr.num_detectors
    kinds = lambda p: Counter(op.kind for _, op in p.operations() if op.kind != "RZ")  # noqa: E731
    assert kinds(ur) == kinds(nr)


def test_nr_bulk_detectors_compare_records_two_rounds_apart():
    # t = j compares n_{j-1} with n_{j+1}; at t = 1 the first term is n_0 = 0
    prog, rmap = build_with_map(memory_patch(3), SchemeSpec("standard", "NR", 5, "memory"))
    record_round = {r: j for (g, j, k), r in rmap.aux.items()}
    bulk = [d for d in prog.detectors if 2 <= d.coord[2] <= 4]
    assert bulk
    for det in bulk:
        rounds = sorted(record_round[r] for r in det.records)
        assert rounds[0] == rounds[-1] - 2


def test_squeezing_detector_layout():
    prog = program("stability", "squeezing", "NR", 4, 5)
    ts = Counter(d.coord[2] for d in prog.detectors)
    for j in range(1, 5):
        assert ts[Fraction(j)] == 17
        assert ts[Fraction(2 * j + 1, 2)] == 17


def test_cr_and_nr_share_signatures():
    sig = lambda nz: set(dem.mechanism_signatures(nz))  # noqa: E731
    assert sig(noisy("stability", "standard", "CR", 4, 5)) == sig(noisy("stability", "standard", "NR", 4, 5))


def test_nr_and_ur_signatures_differ_only_in_classification_edges():
    def sigs(reset):
        nz = noisy("memory", "standard", reset, 3, 3)
        _, rmap = build_with_map(memory_patch(3), SchemeSpec("standard", reset, 3, "memory"))
        # the last round's flips reach the final detector, which closes the time axis
        aux_records = {r for (g, j, k), r in rmap.aux.items() if j < 3}
        out = {}
        for m, s in zip(nz.mechanisms, dem.mechanism_signatures(nz)):
            if m.source == "classification" and m.record not in aux_records:
                continue
            out.setdefault(m.source, set()).add(s)
        return out

    def time_extent(sset, prog):
        return {max(prog.detectors[k].coord[2] for k in d) - min(prog.detectors[k].coord[2] for k in d)
                for d, _ in sset if len(d) == 2}

    ur, nr = sigs("UR"), sigs("NR")
    assert time_extent(ur["classification"], program("memory", "standard", "UR", 3, 3)) == {1}
    assert time_extent(nr["classification"], program("memory", "standard", "NR", 3, 3)) == {2}
    for source in ("gate2", "gate1"):
        assert ur[source] == nr[source]


@pytest.mark.parametrize("family,reset", [("spreading", "UR"), ("squeezing", "CR")])
def test_new_families_need_no_reset(family, reset):
    with pytest.raises(BuildError):
        SchemeSpec(family, reset, 3, "stability")


def test_bad_specs():
    with pytest.raises(BuildError):
        SchemeSpec("standard", "NR", 0, "memory")
    with pytest.raises(BuildError):
        build(memory_patch(3), SchemeSpec("standard", "NR", 3, "stability"))
    with pytest.raises(BuildError):
        build(stability_patch(4, "spreading"), SchemeSpec("standard", "NR", 3, "stability"))


def test_index_map_is_a_bijection_onto_records():
    for family, reset in FAMILY_SCHEMES:
        prog, rmap = build_with_map(stability_patch(4, family), SchemeSpec(family, reset, 3, "stability"))
        recs = rmap.all_records()
        assert recs == list(range(len(recs)))
        assert len(recs) == sum(1 for _, op in prog.operations() if op.kind == "MZ")


def _flatten(layers):
    return [op for layer in layers for op in layer]


def test_swap_lowering_is_a_swap():
    layers = _swap_layers(0, 1)
    lowered = _flatten(layers)
    assert clifford_action(lowered, 2) == clifford_action([Operation("SWAP", (0, 1))], 2)
    assert sum(max(op.duration for op in layer) for layer in layers) == 4 * 20 + 3 * 40


def test_cx_lowering_is_a_cx():
    for c, t in ((0, 1), (1, 0)):
        lowered = _flatten(_cx_layers(c, t))
        assert clifford_action(lowered, 2) == clifford_action([Operation("CX", (c, t))], 2)


def test_lower_keeps_native_programs():
    prog = program("memory", "standard", "NR", 3, 2)
    assert lower(prog) is prog


def test_lower_expands_swap_layers():
    from resetqec.circuit import Layer, Qubit
    prog = CircuitProgram((Qubit(0, (0, 0)), Qubit(1, (1, 0))), (Layer.of([Operation("SWAP", (0, 1))]),))
    out = lower(prog)
    assert len(out.layers) == 7
    assert {op.kind for _, op in out.operations()} <= NATIVE_KINDS
    assert total_duration(out) == 200
