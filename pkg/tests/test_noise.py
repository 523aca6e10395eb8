from __future__ import annotations

import math

import pytest
from conftest import program
from hypothesis import given, settings
from hypothesis import strategies as st

from resetqec.builders import build
from resetqec.circuit import CircuitError, CircuitProgram, Layer, Operation, Qubit
from resetqec.layout import memory_patch
from resetqec.noise import NoiseModel, apply, idle_pauli_probs, scaled_coherence


def _tiny(ops, n=2):
    return CircuitProgram(tuple(Qubit(i, (i, 0)) for i in range(n)), (Layer.of(ops),))


def test_idle_examples():
    assert idle_pauli_probs(0, 1, 1) == (0.0, 0.0, 0.0)
    assert idle_pauli_probs(math.inf, 5, 5) == pytest.approx((0.25, 0.25, 0.25))
    px, py, pz = idle_pauli_probs(30000, 30000, 30000)
    assert px == py == pytest.approx((1 - math.exp(-1)) / 4)
    assert pz == pytest.approx(0.15803, abs=1e-5)


@pytest.mark.parametrize("t,t1,t2", [(-1, 1, 1), (1, 0, 1), (1, 1, 0), (1, 1, 3)])
def test_idle_rejects_bad_inputs(t, t1, t2):
    with pytest.raises(ValueError):
        idle_pauli_probs(t, t1, t2)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 1e6), st.floats(1, 1e6), st.floats(0.01, 2.0))
def test_idle_probabilities_are_valid(t, t1, ratio):
    px, py, pz = idle_pauli_probs(t, t1, ratio * t1)
    assert px == py
    assert min(px, pz) >= 0
    assert px + py + pz <= 0.75 + 1e-12


def test_scaled_coherence_orientation():
    assert scaled_coherence(0.01) == (30000, 30000)
    assert scaled_coherence(0.001) == pytest.approx((300000, 300000))
    with pytest.raises(ValueError):
        scaled_coherence(0)


def test_mechanism_table():
    table = NoiseModel(1e-3).mechanism_table()
    assert table == pytest.approx({"gate1": 1e-4, "gate2": 1e-3, "reset": 2e-3,
                                   "measure": 4e-3, "classification": 1e-3})


def test_single_cz_layer():
    noisy = apply(_tiny([Operation("CZ", (0, 1))], n=3), NoiseModel(1e-3))
    gate2 = [c for c in noisy.channels if c.source == "gate2"]
    assert len(gate2) == 1 and gate2[0].total == pytest.approx(1e-3)
    assert len(gate2[0].probs) == 15
    idle = [c for c in noisy.channels if c.source == "idle"]
    assert [c.targets for c in idle] == [(2,)]
    assert idle[0].probs == NoiseModel(1e-3).idle(40)


def test_single_measurement():
    noisy = apply(_tiny([Operation("MZ", (0,), record=0)], n=1), NoiseModel(1e-3))
    assert [(c.source, c.location[1]) for c in noisy.channels] == [
        ("measure", "before"), ("classification", "after")]


def test_zero_noise_has_no_mechanisms():
    assert apply(program("memory", "standard", "NR", 3, 3), NoiseModel(0)).mechanisms == ()


def test_unlowered_program_rejected():
    with pytest.raises(CircuitError):
        apply(_tiny([Operation("SWAP", (0, 1))]), NoiseModel(1e-3))


def test_application_is_deterministic():
    prog = program("stability", "squeezing", "NR", 4, 3)
    a = apply(prog, NoiseModel(1e-3))
    b = apply(prog, NoiseModel(1e-3))
    assert a.channels == b.channels


def test_idle_time_fills_each_standard_round():
    """Every qubit is busy or idle for exactly 840 ns per no-reset round."""
    from resetqec.layout import memory_patch
    from resetqec.builders import SchemeSpec

    model = NoiseModel(1e-3)
    t1, _ = model.coherence()
    two = build(memory_patch(3), SchemeSpec("standard", "NR", 2, "memory"))
    three = build(memory_patch(3), SchemeSpec("standard", "NR", 3, "memory"))

    def per_qubit(prog):
        noisy = apply(prog, model)
        idle = {}
        for c in noisy.channels:
            if c.source == "idle":
                t = -t1 * math.log1p(-4 * c.probs[0])
                idle[c.targets[0]] = idle.get(c.targets[0], 0.0) + t
        active = {}
        for _, op in prog.operations():
            for q in op.targets:
                active[q] = active.get(q, 0) + op.duration
        return idle, active

    idle2, act2 = per_qubit(two)
    idle3, act3 = per_qubit(three)
    for q in act3:
        extra = idle3.get(q, 0.0) - idle2.get(q, 0.0) + act3[q] - act2.get(q, 0)
        assert extra == pytest.approx(840, abs=1e-6)


def test_classification_flips_do_not_touch_qubits():
    noisy = apply(program("memory", "standard", "NR", 3, 2), NoiseModel(1e-3))
    for m in noisy.mechanisms:
        if m.source == "classification":
            assert m.paulis == () and m.record is not None


def test_invalid_model():
    with pytest.raises(ValueError):
        NoiseModel(-1)
    with pytest.raises(ValueError):
        NoiseModel(0.3)
