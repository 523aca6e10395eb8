from __future__ import annotations

from fractions import Fraction

import pytest
from conftest import FAMILY_SCHEMES, program
from hypothesis import given, settings
from hypothesis import strategies as st

from resetqec.circuit import (
    CircuitError,
    CircuitProgram,
    Detector,
    Layer,
    Observable,
    Operation,
    Qubit,
    from_text,
    record_count,
    to_text,
    total_duration,
    validate,
    xor_records,
)


def _single(ops, detectors=(), observables=(), n=2):
    qubits = tuple(Qubit(i, (i, 0)) for i in range(n))
    layers = tuple(Layer.of(layer) for layer in ops)
    return CircuitProgram(qubits, layers, tuple(detectors), tuple(observables))


def test_empty_program():
    empty = CircuitProgram()
    assert validate(empty) == []
    assert total_duration(empty) == 0
    assert record_count(empty) == 0


def test_single_measurement_layer_lasts_600():
    prog = _single([[Operation("MZ", (0,), record=0)]], n=1)
    assert total_duration(prog) == 600
    assert record_count(prog) == 1


def test_measuring_plus_state_is_nondeterministic():
    prog = _single([[Operation("RZ", (0,))], [Operation("SQRT_X", (0,))],
                    [Operation("MZ", (0,), record=0)]], [Detector((0,), (0, 0, 0))], n=1)
    assert validate(prog) == ["detector 0 nondeterministic"]


def test_structural_violations_are_reported():
    prog = _single([[Operation("CZ", (0, 1)), Operation("SQRT_X", (1,))],
                    [Operation("X_COND", (0,), condition=3)]])
    problems = validate(prog)
    assert any("used twice" in v for v in problems)
    assert any("X_COND" in v for v in problems)


def test_unknown_kind_rejected():
    with pytest.raises(CircuitError):
        Operation("H", (0,))


def test_xor_records_cancels_pairs():
    assert xor_records((1, 2, 3), (3, 4)) == (1, 2, 4)


@pytest.mark.parametrize("family,reset", FAMILY_SCHEMES)
def test_text_round_trip(family, reset):
    prog = program("stability", family, reset, 4, 3)
    again = from_text(to_text(prog))
    assert again == prog
    assert to_text(again) == to_text(prog)


def test_half_integer_coordinates_survive_round_trip():
    prog = program("stability", "squeezing", "NR", 4, 2)
    ts = {d.coord[2] for d in from_text(to_text(prog)).detectors}
    assert Fraction(1, 2) in ts


def test_parse_errors_name_the_line():
    with pytest.raises(CircuitError, match="line 1"):
        from_text("Q x 0 0\n")
    with pytest.raises(CircuitError):
        from_text("CZ 0 1\n")


@pytest.mark.parametrize("d,rounds,count", [(3, 3, 33)])
def test_memory_record_count(d, rounds, count):
    assert record_count(program("memory", "standard", "NR", d, rounds)) == count


def test_squeezing_stability_record_count():
    assert record_count(program("stability", "squeezing", "NR", 4, 5)) == 2 * 17 * 5 + 16


@settings(max_examples=30, deadline=None)
@given(st.lists(st.sampled_from(["SQRT_X", "S", "CZ", "MZ", "RZ"]), min_size=1, max_size=12))
def test_layer_duration_is_max_and_total_is_additive(kinds):
    layers = []
    rec = 0
    for k in kinds:
        if k == "CZ":
            layers.append([Operation("CZ", (0, 1))])
        elif k == "MZ":
            layers.append([Operation("MZ", (0,), record=rec), Operation("SQRT_X", (1,))])
            rec += 1
        else:
            layers.append([Operation(k, (0,))])
    prog = _single(layers)
    for layer in prog.layers:
        assert layer.duration == max(op.duration for op in layer.ops)
    half = len(prog.layers) // 2
    a = CircuitProgram(prog.qubits, prog.layers[:half])
    b = CircuitProgram(prog.qubits, prog.layers[half:])
    assert total_duration(prog) == total_duration(a) + total_duration(b)
    assert from_text(to_text(prog)) == prog


def test_observable_requires_existing_record():
    prog = _single([[Operation("MZ", (0,), record=0)]], observables=[Observable((5,))])
    assert any("observable 0" in v for v in validate(prog))
