"""Superconducting-inspired circuit-level Pauli noise.

Every operation of a lowered program gets the channel listed below, all
scaled by the single parameter ``p``:

==============================  =========================
1q depolarising after SQRT_X/S  p/10
2q depolarising after CZ        p
bit flip after RZ               2p
bit flip before MZ              4p   (quantum part)
record misclassification        p    (classical part)
idle Pauli channel              from T1/T2 and idle time
==============================  =========================

Idle time follows layer durations: a qubit that is not acted on in a layer
idles for the whole layer, a qubit whose operation is shorter than the layer
idles for the remainder. Qubits inside a running (concurrent) measurement
do not idle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .circuit import NATIVE_KINDS, ONE_QUBIT_KINDS, CircuitError, CircuitProgram

P_REF = 0.01
T1_REF = 30_000.0
T2_REF = 30_000.0

PAULI2_LABELS = tuple(a + b for a in "IXYZ" for b in "IXYZ")[1:]


def idle_pauli_probs(t: float, t1: float, t2: float) -> tuple[float, float, float]:
    """Pauli-twirled amplitude damping plus dephasing for an idle of ``t`` ns."""
    if t < 0 or t1 <= 0 or t2 <= 0:
        raise ValueError("need t >= 0 and positive coherence times")
    if t2 > 2 * t1:
        raise ValueError("unphysical coherence times: T2 > 2*T1")
    if math.isinf(t):
        decay1 = decay2 = 1.0
    else:
        decay1 = -math.expm1(-t / t1)
        decay2 = -math.expm1(-t / t2)
    px = decay1 / 4
    pz = decay2 / 2 - decay1 / 4
    if pz < 0:
        # only reachable through rounding when T2 == 2*T1
        if pz < -1e-15:
            raise ValueError("negative dephasing probability")
        pz = 0.0
    return px, px, pz


def scaled_coherence(p: float, t1_ref: float = T1_REF, t2_ref: float = T2_REF,
                     p_ref: float = P_REF) -> tuple[float, float]:
    """Coherence times for error rate ``p``; idle error per unit time grows with ``p``."""
    if not p > 0:
        raise ValueError("p must be positive")
    return p_ref / p * t1_ref, p_ref / p * t2_ref


@dataclass(frozen=True)
class NoiseModel:
    p: float
    t1_ref: float = T1_REF
    t2_ref: float = T2_REF
    p_ref: float = P_REF
    measurement_total: float = 5.0
    classical_fraction: float = 0.2
    x_cond_depolarization: float = 0.0

    def __post_init__(self):
        if not 0 <= self.p:
            raise ValueError("p must be non-negative")
        for name, value in self.mechanism_table().items():
            if not 0 <= value <= 1:
                raise ValueError(f"{name} probability {value} outside [0, 1]")
        if not 0 <= self.classical_fraction <= 1:
            raise ValueError("classical_fraction must lie in [0, 1]")

    @property
    def quantum_measure_flip(self) -> float:
        return self.measurement_total * (1 - self.classical_fraction) * self.p

    @property
    def classification_flip(self) -> float:
        return self.measurement_total * self.classical_fraction * self.p

    def mechanism_table(self) -> dict[str, float]:
        return {
            "gate1": self.p / 10,
            "gate2": self.p,
            "reset": 2 * self.p,
            "measure": self.quantum_measure_flip,
            "classification": self.classification_flip,
        }

    def coherence(self) -> tuple[float, float]:
        return scaled_coherence(self.p, self.t1_ref, self.t2_ref, self.p_ref)

    def idle(self, t: float) -> tuple[float, float, float]:
        if self.p == 0 or t <= 0:
            return 0.0, 0.0, 0.0
        return idle_pauli_probs(t, *self.coherence())


@dataclass(frozen=True)
class NoiseChannel:
    """One stochastic Pauli channel bound to a circuit location.

    ``kind`` is ``"pauli1"`` (probs = pX, pY, pZ), ``"pauli2"`` (probs over
    :data:`PAULI2_LABELS`) or ``"flip"`` (misreads ``targets[0]``, a record
    index, with probability ``probs[0]``). Terms are mutually exclusive.
    """

    kind: str
    location: tuple[int, str]
    targets: tuple[int, ...]
    probs: tuple[float, ...]
    source: str

    @property
    def total(self) -> float:
        return sum(self.probs)

    def terms(self):
        """Yield ``(probability, paulis)`` for every non-identity term."""
        if self.kind == "flip":
            yield self.probs[0], ()
        elif self.kind == "pauli1":
            for pr, lab in zip(self.probs, "XYZ"):
                if pr > 0:
                    yield pr, ((self.targets[0], lab),)
        else:
            a, b = self.targets
            for pr, lab in zip(self.probs, PAULI2_LABELS):
                if pr > 0:
                    yield pr, tuple((q, l) for q, l in zip((a, b), lab) if l != "I")


@dataclass(frozen=True)
class ErrorMechanism:
    id: int
    probability: float
    location: tuple[int, str]
    paulis: tuple[tuple[int, str], ...]
    record: int | None
    source: str
    channel: int


@dataclass(frozen=True)
class NoisyProgram:
    program: CircuitProgram
    channels: tuple[NoiseChannel, ...]
    model: NoiseModel | None = None
    mechanisms: tuple[ErrorMechanism, ...] = field(init=False, compare=False)

    def __post_init__(self):
        mechs = []
        for ci, ch in enumerate(self.channels):
            for pr, paulis in ch.terms():
                rec = ch.targets[0] if ch.kind == "flip" else None
                mechs.append(ErrorMechanism(len(mechs), pr, ch.location, paulis, rec,
                                            ch.source, ci))
        object.__setattr__(self, "mechanisms", tuple(mechs))


def _depolarize1(q, p, loc, source):
    return NoiseChannel("pauli1", loc, (q,), (p / 3,) * 3, source)


def _bitflip(q, p, loc, source):
    return NoiseChannel("pauli1", loc, (q,), (p, 0.0, 0.0), source)


def apply(program: CircuitProgram, model: NoiseModel) -> NoisyProgram:
    """Attach the noise model to a lowered program."""
    for li, op in program.operations():
        if op.kind not in NATIVE_KINDS:
            raise CircuitError(f"layer {li}: {op.kind} must be lowered before adding noise")
    channels: list[NoiseChannel] = []
    if model.p == 0:
        return NoisyProgram(program, (), model)
    table = model.mechanism_table()
    all_qubits = sorted(q.index for q in program.qubits)
    busy_until: dict[int, int] = {}
    clock = 0
    for li, layer in enumerate(program.layers):
        before, after = (li, "before"), (li, "after")
        acted: dict[int, int] = {}
        for op in layer.ops:
            for q in op.targets:
                acted[q] = 0 if op.concurrent else op.duration
            k = op.kind
            if k in ONE_QUBIT_KINDS:
                channels.append(_depolarize1(op.targets[0], table["gate1"], after, "gate1"))
            elif k == "CZ":
                pr = table["gate2"] / 15
                channels.append(NoiseChannel("pauli2", after, op.targets, (pr,) * 15, "gate2"))
            elif k == "RZ":
                channels.append(_bitflip(op.targets[0], table["reset"], after, "reset"))
            elif k == "MZ":
                channels.append(_bitflip(op.targets[0], table["measure"], before, "measure"))
                if table["classification"] > 0:
                    channels.append(NoiseChannel("flip", after, (op.record,),
                                                 (table["classification"],), "classification"))
            elif k == "X_COND" and model.x_cond_depolarization > 0:
                channels.append(_depolarize1(op.targets[0], model.x_cond_depolarization,
                                             after, "x_cond"))
        for q in all_qubits:
            if busy_until.get(q, 0) >= clock + layer.duration:
                continue
            if q in acted:
                idle_t = layer.duration - acted[q] if acted[q] else 0
            else:
                idle_t = layer.duration - max(0, busy_until.get(q, 0) - clock)
            probs = model.idle(idle_t)
            if sum(probs) > 0:
                channels.append(NoiseChannel("pauli1", after, (q,), probs, "idle"))
        for op in layer.ops:
            if op.concurrent:
                for q in op.targets:
                    busy_until[q] = clock + op.duration
        clock += layer.duration
    return NoisyProgram(program, tuple(channels), model)
