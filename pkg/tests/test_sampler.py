from __future__ import annotations

import numpy as np
import pytest
from conftest import FAMILY_SCHEMES, noisy, program

from resetqec import dem, noise, sampler
from resetqec.builders import SchemeSpec, build_with_map
from resetqec.circuit import CircuitProgram, Detector, Layer, Operation, Qubit
from resetqec.layout import stability_patch


def test_noiseless_samples_are_zero():
    nz = noise.apply(program("memory", "standard", "NR", 3, 3), noise.NoiseModel(0))
    block = sampler.sample(nz, 500, seed=3)
    assert not block.detectors.any() and not block.observables.any()


def test_sampling_is_deterministic_and_batch_independent():
    nz = noisy("stability", "standard", "NR", 4, 5, 1e-2)
    a = sampler.sample(nz, 3000, seed=11)
    b = sampler.sample(nz, 3000, seed=11)
    assert np.array_equal(a.detectors, b.detectors)
    # the stream of a batch depends only on (seed, batch index)
    head = sampler.sample(nz, 1000, seed=11, batch_shots=1000)
    tail = sampler.sample(nz, 1000, seed=11, batch_shots=1000, first_batch=1)
    both = sampler.sample(nz, 2000, seed=11, batch_shots=1000)
    assert np.array_equal(both.detectors, np.vstack([head.detectors, tail.detectors]))
    c = sampler.sample(nz, 3000, seed=12)
    assert not np.array_equal(a.detectors, c.detectors)


def _classification(family, rounds, j):
    patch = stability_patch(4, family)
    prog, rmap = build_with_map(patch, SchemeSpec(family, "NR", rounds, "stability"))
    gi = next(i for i, s in enumerate(patch.stabilisers) if s.pauli_type == "X" and s.weight == 4)
    nz = noise.apply(prog, noise.NoiseModel(1e-3))
    rec = rmap.aux[(gi, j, 1)]
    mech = [m for m in nz.mechanisms if m.source == "classification" and m.record == rec]
    (dets, obs), = sampler.forced_signatures(nz, mech)
    centre = patch.stabilisers[gi].centre
    return prog, centre, sorted(prog.detectors[k].coord for k in dets)


def test_forced_classification_flip_is_a_length_two_edge():
    prog, (x, y), coords = _classification("standard", 5, 3)
    assert coords == [(x, y, 2), (x, y, 4)]


def test_spreading_classification_flip_triggers_four_detectors():
    prog, (x, y), coords = _classification("spreading", 5, 3)
    assert len(coords) == 4
    own = [c for c in coords if c[:2] == (x, y)]
    assert [c[2] for c in own] == [2, 3, 4]
    other = [c for c in coords if c[:2] != (x, y)]
    assert [c[2] for c in other] == [3]


@pytest.mark.parametrize("family,reset", FAMILY_SCHEMES)
def test_reference_check_on_builder_output(family, reset):
    assert sampler.reference_check(noisy("stability", family, reset, 4, 3))


def test_reference_check_flags_random_detector():
    q = (Qubit(0, (0, 0)),)
    layers = (Layer.of([Operation("RZ", (0,))]), Layer.of([Operation("SQRT_X", (0,))]),
              Layer.of([Operation("MZ", (0,), record=0)]))
    assert not sampler.reference_check(CircuitProgram(q, layers, (Detector((0,), (0, 0, 0)),)))


def test_mechanism_frequency_within_five_sigma():
    """A lone measurement with p = 0.1 flips its record at the predicted rate."""
    q = (Qubit(0, (0, 0)),)
    layers = (Layer.of([Operation("RZ", (0,))]), Layer.of([Operation("MZ", (0,), record=0)]))
    prog = CircuitProgram(q, layers, (Detector((0,), (0, 0, 0)),))
    nz = noise.apply(prog, noise.NoiseModel(0.1))
    shots = 100_000
    block = sampler.sample(nz, shots, seed=5)
    # reset flip 2p, measurement flip 4p and classification flip p compose by XOR
    rates = [0.2, 0.4, 0.1]
    odd = 0.0
    for r in rates:
        odd = odd * (1 - r) + (1 - odd) * r
    sigma = np.sqrt(odd * (1 - odd) / shots)
    assert abs(block.detectors.mean() - odd) < 5 * sigma


def test_forced_signatures_match_dem_on_a_small_program():
    nz = noisy("memory", "standard", "NR", 3, 2)
    forced = sampler.forced_signatures(nz)
    assert forced == dem.mechanism_signatures(nz)


def test_text_dump():
    nz = noisy("memory", "standard", "NR", 3, 2, 1e-2)
    block = sampler.sample(nz, 4, seed=0)
    lines = block.to_text().splitlines()
    assert len(lines) == 4
    assert all(len(line.split()[0]) == nz.program.num_detectors for line in lines)
