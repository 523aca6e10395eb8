"""Annotated syndrome-extraction programs for the five circuit families.

Native gates only couple through ``CZ``, which always couples the Z operator
of the data qubit in its *current* frame. Data and helper qubits are
therefore tracked with a frame angle: angle 0 means the physical Z is the
code's Z, angle 1 (one ``SQRT_X`` applied) means the physical Z is the
code's Y. X-type stabilisers are measured through Y couplings, i.e. the
simulated code is the CSS code conjugated by ``S`` on every data qubit,
which has identical error-correction properties. A frame change costs one
20 ns single-qubit layer, so the standard round is

    1q | CZ | 1q | CZ | CZ | 1q | CZ | 1q | MZ   (20+40+20+80+20+40+20+600 = 840 ns)

Software-tracked Paulis (the no-reset bit flip and the classical half of
the error-spreading gadget) never appear as gates; they are folded into the
detector and observable record sets.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .circuit import (
    DEFAULT_DURATIONS,
    CircuitError,
    CircuitProgram,
    Detector,
    Layer,
    Observable,
    Operation,
    Qubit,
    xor_records,
)
from .layout import Patch, Stabiliser, squeeze_aux_for

FAMILIES = ("standard", "spreading", "squeezing")
RESETS = ("UR", "CR", "NR")
COUPLING_ANGLE = {"X": 1, "Z": 0}
BASIS_ANGLE = {"X": 1, "Z": 0}
STEP_ORDER = {"X": ("NW", "SW", "NE", "SE"), "Z": ("NW", "NE", "SW", "SE")}
INITIAL_RESET_NS = DEFAULT_DURATIONS["RZ"]
SQUEEZE_GAP_NS = 200


class BuildError(ValueError):
    pass


@dataclass(frozen=True)
class SchemeSpec:
    family: str = "standard"
    reset: str = "NR"
    rounds: int = 3
    experiment: str = "memory"
    t_res: int = 500
    feedback_latency_ns: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise BuildError(f"unknown family {self.family!r}")
        if self.reset not in RESETS:
            raise BuildError(f"unknown reset scheme {self.reset!r}")
        if self.family != "standard" and self.reset != "NR":
            raise BuildError(f"{self.family} circuits only exist without reset")
        if self.experiment not in ("memory", "stability"):
            raise BuildError(f"unknown experiment {self.experiment!r}")
        if self.rounds < 1:
            raise BuildError("need at least one round")
        if self.t_res < 0 or self.feedback_latency_ns < 0:
            raise BuildError("durations must be non-negative")


@dataclass
class MeasurementIndexMap:
    """Record slots by stabiliser, round and auxiliary copy."""

    aux: dict = field(default_factory=dict)  # (stab, round, copy) -> record
    helper: dict = field(default_factory=dict)  # (qubit, round) -> record; round n+1 = final
    data: dict = field(default_factory=dict)  # qubit -> final record

    def all_records(self) -> list[int]:
        return sorted([*self.aux.values(), *self.helper.values(), *self.data.values()])


class _Emitter:
    def __init__(self):
        self.layers: list[Layer] = []
        self.n_rec = 0
        self.angle: dict[int, int] = {}

    def add(self, ops, duration=None) -> int:
        self.layers.append(Layer.of(ops, duration))
        return len(self.layers) - 1

    def mz(self, q: int, concurrent: bool = False) -> tuple[Operation, int]:
        r = self.n_rec
        self.n_rec += 1
        return Operation("MZ", (q,), record=r, concurrent=concurrent), r

    def rotate(self, targets: dict[int, int]) -> list[Operation]:
        ops = []
        for q, want in sorted(targets.items()):
            have = self.angle.get(q, 0)
            if have != want:
                ops.append(Operation("SQRT_X" if want == 1 else "SQRT_X_DAG", (q,)))
                self.angle[q] = want
        return ops


def _merge(*reqs: dict[int, int]) -> dict[int, int]:
    out: dict[int, int] = {}
    for r in reqs:
        for q, a in r.items():
            if out.get(q, a) != a:
                raise BuildError(f"conflicting frame requirements on qubit {q}")
            out[q] = a
    return out


def _check(patch: Patch, spec: SchemeSpec):
    if patch.variant != spec.family:
        raise BuildError(f"patch variant {patch.variant!r} does not match family {spec.family!r}")
    if patch.experiment != spec.experiment:
        raise BuildError(f"patch is for {patch.experiment}, spec asks for {spec.experiment}")


def _qubits(patch: Patch) -> tuple[Qubit, ...]:
    return tuple(Qubit(q, patch.coords[q]) for q in sorted(patch.coords))


def _init(em: _Emitter, patch: Patch):
    em.add([Operation("RZ", (q,)) for q in sorted(patch.coords)], INITIAL_RESET_NS)
    for q in patch.data_qubits:
        em.angle[q] = BASIS_ANGLE[patch.basis]
    for s in patch.stabilisers:
        if s.spread_partner in patch.helper_qubits:
            em.angle[s.spread_partner] = COUPLING_ANGLE[s.pauli_type]


def build(patch: Patch, spec: SchemeSpec) -> CircuitProgram:
    """Emit the full annotated program for ``patch`` under ``spec``."""
    _check(patch, spec)
    if spec.family == "squeezing":
        return _build_squeezing(patch, spec)
    return _build_standard(patch, spec)


def build_with_map(patch: Patch, spec: SchemeSpec) -> tuple[CircuitProgram, MeasurementIndexMap]:
    _check(patch, spec)
    if spec.family == "squeezing":
        return _build_squeezing(patch, spec, with_map=True)
    return _build_standard(patch, spec, with_map=True)


# --- standard and error-spreading circuits ----------------------------------

def _standard_steps(patch: Patch):
    steps = []
    for k in range(4):
        pairs, need = [], {}
        for s in patch.stabilisers:
            q = s.corners.get(STEP_ORDER[s.pauli_type][k])
            if q is not None:
                pairs.append((s.auxiliaries[0], q))
                need[q] = COUPLING_ANGLE[s.pauli_type]
        steps.append((pairs, need))
    return steps


def _spread_angle(s: Stabiliser) -> int:
    # the CZ kick must anticommute with the stabiliser's own coupling Pauli
    return 1 - COUPLING_ANGLE[s.pauli_type]


def _build_standard(patch: Patch, spec: SchemeSpec, with_map: bool = False):
    em = _Emitter()
    _init(em, patch)
    steps = _standard_steps(patch)
    auxes = [s.auxiliaries[0] for s in patch.stabilisers]
    helpers = set(patch.helper_qubits)
    spreading = spec.family == "spreading"
    basis_req = {q: BASIS_ANGLE[patch.basis] for q in patch.data_qubits}
    rmap = MeasurementIndexMap()
    round_bounds = []

    for j in range(1, spec.rounds + 1):
        start = len(em.layers)
        final = j == spec.rounds
        em.add([Operation("SQRT_X", (a,)) for a in auxes] + em.rotate(steps[0][1]), 20)
        em.add([Operation("CZ", p) for p in steps[0][0]])
        em.add(em.rotate(_merge(steps[1][1], steps[2][1])), 20)
        em.add([Operation("CZ", p) for p in steps[1][0]])
        em.add([Operation("CZ", p) for p in steps[2][0]])
        em.add(em.rotate(steps[3][1]), 20)
        em.add([Operation("CZ", p) for p in steps[3][0]])
        tail = basis_req if final and not spreading else {}
        em.add([Operation("SQRT_X_DAG", (a,)) for a in auxes] + em.rotate(tail), 20)

        ops = []
        for gi, s in enumerate(patch.stabilisers):
            op, r = em.mz(s.auxiliaries[0])
            ops.append(op)
            rmap.aux[(gi, j, 1)] = r
        for h in patch.helper_qubits:
            op, r = em.mz(h)
            ops.append(op)
            rmap.helper[(h, j)] = r
        if spreading:
            ops += em.rotate({s.spread_partner: _spread_angle(s) for s in patch.stabilisers
                              if s.spread_partner not in helpers})
        em.add(ops)

        if spec.reset == "UR":
            em.add([Operation("RZ", (a,), duration=spec.t_res) for a in auxes], spec.t_res)
        elif spec.reset == "CR":
            em.add([Operation("X_COND", (s.auxiliaries[0],), condition=rmap.aux[(gi, j, 1)])
                    for gi, s in enumerate(patch.stabilisers)],
                   DEFAULT_DURATIONS["X_COND"] + spec.feedback_latency_ns)
        if spreading:
            if helpers:
                em.add(em.rotate({s.spread_partner: _spread_angle(s) for s in patch.stabilisers
                                  if s.spread_partner in helpers}), 20)
            em.add([Operation("CZ", (s.auxiliaries[0], s.spread_partner))
                    for s in patch.stabilisers])
        round_bounds.append((start, len(em.layers)))

    final_req = dict(basis_req)
    for s in patch.stabilisers:
        if s.spread_partner in helpers:
            final_req[s.spread_partner] = COUPLING_ANGLE[s.pauli_type]
    rot = em.rotate(final_req)
    if rot:
        em.add(rot, 20)
    ops = []
    for q in patch.data_qubits:
        op, r = em.mz(q)
        ops.append(op)
        rmap.data[q] = r
    for h in patch.helper_qubits:
        op, r = em.mz(h)
        ops.append(op)
        rmap.helper[(h, spec.rounds + 1)] = r
    em.add(ops)

    detectors, observables = _standard_annotations(patch, spec, rmap)
    if spreading:
        detectors, observables = _absorb_spread_kicks(patch, spec, rmap, detectors, observables)
    program = _assemble(patch, spec, em, detectors, observables, round_bounds)
    return (program, rmap) if with_map else program


def _standard_value(spec: SchemeSpec, rmap: MeasurementIndexMap, gi: int, j: int) -> tuple:
    """Records whose parity is the stabiliser value in round ``j``."""
    r = rmap.aux[(gi, j, 1)]
    if spec.reset == "NR" and j > 1:
        return (r, rmap.aux[(gi, j - 1, 1)])
    return (r,)


def _matching_type(patch: Patch) -> str:
    return patch.basis


def _standard_annotations(patch: Patch, spec: SchemeSpec, rmap: MeasurementIndexMap):
    n = spec.rounds
    dets = []
    match = _matching_type(patch)
    for gi, s in enumerate(patch.stabilisers):
        x, y = s.centre
        if s.pauli_type == match:
            dets.append(Detector(_standard_value(spec, rmap, gi, 1), (x, y, 0)))
        for j in range(1, n):
            recs = xor_records(_standard_value(spec, rmap, gi, j),
                               _standard_value(spec, rmap, gi, j + 1))
            dets.append(Detector(recs, (x, y, j)))
        if s.pauli_type == match:
            final = []
            for q in s.support:
                final.append(rmap.data[q] if q in rmap.data else rmap.helper[(q, n + 1)])
            dets.append(Detector(xor_records(_standard_value(spec, rmap, gi, n), final),
                                 (x, y, n)))
    for h in patch.helper_qubits:
        hx, hy = patch.coords[h]
        dets.append(Detector((rmap.helper[(h, 1)],), (hx, hy, 0)))
        for j in range(1, n + 1):
            dets.append(Detector((rmap.helper[(h, j)], rmap.helper[(h, j + 1)]), (hx, hy, j)))
    return dets, _observables(patch, rmap, lambda gi: _standard_value(spec, rmap, gi, 1))


def _observables(patch: Patch, rmap: MeasurementIndexMap, first_value):
    if patch.experiment == "memory":
        recs = [rmap.data[q] for q in patch.logical_support]
        return [Observable(tuple(recs), "L0")]
    recs = xor_records(*[first_value(gi) for gi, s in enumerate(patch.stabilisers)
                         if s.pauli_type == "X"])
    return [Observable(recs, "L0")]


def _assemble(patch, spec, em, detectors, observables, round_bounds):
    if len(round_bounds) > 1:
        a, b = round_bounds[1]
    else:
        a, b = round_bounds[0]
    round_ns = sum(layer.duration for layer in em.layers[a:b])
    kind_at = {}
    for s in patch.stabilisers:
        kind_at[tuple(s.centre)] = s.pauli_type
        for q in (*s.auxiliaries, s.spread_partner):
            if q is not None and q not in patch.data_qubits:
                kind_at[tuple(patch.coords[q])] = s.pauli_type
    detector_types = tuple(kind_at[(d.coord[0], d.coord[1])] for d in detectors)
    return CircuitProgram(
        _qubits(patch), tuple(em.layers), tuple(detectors), tuple(observables), round_ns,
        spec.rounds,
        metadata={"experiment": spec.experiment, "family": spec.family, "reset": spec.reset,
                  "size": patch.size, "basis": patch.basis, "t_res": spec.t_res,
                  "detector_types": detector_types},
    )


def _absorb_spread_kicks(patch: Patch, spec: SchemeSpec, rmap: MeasurementIndexMap,
                         detectors, observables):
    """Fold the software half of the spreading gadget into the annotations.

    The spread CZ kicks the partner of stabiliser ``h`` by a Pauli that
    anticommutes with every operator of ``h``'s type whose support holds the
    partner, controlled by ``h``'s raw outcome. Without the matching software
    Pauli, those operators change value by that outcome from the next round
    on. Detectors compare consecutive values, so each one picks up exactly
    the kick records of the round it spans; observables pick up all kicks
    that precede their readout.
    """
    n = spec.rounds
    kicks = {gi: [] for gi in range(len(patch.stabilisers))}  # stab -> kicking stabs
    for hi, h in enumerate(patch.stabilisers):
        for gi, g in enumerate(patch.stabilisers):
            if g.pauli_type == h.pauli_type and h.spread_partner in g.support:
                kicks[gi].append(hi)
    helper_owner = {s.spread_partner: hi for hi, s in enumerate(patch.stabilisers)
                    if s.spread_partner in patch.helper_qubits}

    def kick_records(kickers, j):
        return [rmap.aux[(hi, j, 1)] for hi in kickers]

    out = []
    it = iter(detectors)
    for gi, s in enumerate(patch.stabilisers):
        if s.pauli_type == patch.basis:
            out.append(next(it))
        for j in range(1, n):
            d = next(it)
            out.append(Detector(xor_records(d.records, kick_records(kicks[gi], j)), d.coord))
        if s.pauli_type == patch.basis:
            d = next(it)
            out.append(Detector(xor_records(d.records, kick_records(kicks[gi], n)), d.coord))
    for h in patch.helper_qubits:
        out.append(next(it))
        for j in range(1, n + 1):
            d = next(it)
            out.append(Detector(xor_records(d.records, kick_records([helper_owner[h]], j)),
                                d.coord))
    if next(it, None) is not None:
        raise BuildError("annotation bookkeeping out of sync")

    obs = list(observables)
    if patch.experiment == "memory":
        logical = set(patch.logical_support)
        kickers = [hi for hi, h in enumerate(patch.stabilisers)
                   if h.pauli_type == patch.basis and h.spread_partner in logical]
        extra = [r for j in range(1, n + 1) for r in kick_records(kickers, j)]
        obs = [Observable(xor_records(o.records, extra), o.label) for o in obs]
    return out, obs


# --- round-squeezing circuit --------------------------------------------------

def _squeeze_block(em: _Emitter, patch: Patch, ptype: str, first_extra, last_extra):
    """Entangle-swap-entangle block for all stabilisers of one type (400 ns)."""
    stabs = [s for s in patch.stabilisers if s.pauli_type == ptype]
    angle = COUPLING_ANGLE[ptype]
    touched = {q: angle for s in stabs for q in s.corners.values()}
    if ptype == "Z":
        first, second = ("NW", "SW"), ("NE", "SE")
    else:
        first, second = ("NW", "NE"), ("SW", "SE")

    def cz_layer(corner_pair):
        ops = []
        for s in stabs:
            for c in corner_pair:
                if c in s.corners:
                    ops.append(Operation("CZ", (squeeze_aux_for(s, c), s.corners[c])))
        return ops

    aux = [a for s in stabs for a in s.auxiliaries]
    em.add([Operation("SQRT_X", (a,)) for a in aux] + em.rotate(touched) + first_extra, 20)
    em.add(cz_layer(first))
    em.add(cz_layer(second))
    em.add([Operation("SWAP", s.auxiliaries) for s in stabs])
    em.add(cz_layer(first))
    em.add(cz_layer(second))
    em.add([Operation("SQRT_X_DAG", (a,)) for a in aux] + last_extra(), 20)


def _build_squeezing(patch: Patch, spec: SchemeSpec, with_map: bool = False):
    em = _Emitter()
    _init(em, patch)
    rmap = MeasurementIndexMap()
    round_bounds = []
    z_stabs = [(gi, s) for gi, s in enumerate(patch.stabilisers) if s.pauli_type == "Z"]
    x_stabs = [(gi, s) for gi, s in enumerate(patch.stabilisers) if s.pauli_type == "X"]
    basis_req = {q: BASIS_ANGLE[patch.basis] for q in patch.data_qubits}

    def measure(stabs, j):
        ops = []
        for gi, s in stabs:
            for k, a in enumerate(s.auxiliaries, 1):
                op, r = em.mz(a, concurrent=True)
                ops.append(op)
                rmap.aux[(gi, j, k)] = r
        return ops

    for j in range(1, spec.rounds + 1):
        start = len(em.layers)
        _squeeze_block(em, patch, "Z", [], lambda: [])
        _squeeze_block(em, patch, "X", measure(z_stabs, j), lambda: [])
        gap = measure(x_stabs, j)
        if j == spec.rounds:
            gap += em.rotate(basis_req)
        em.add(gap, SQUEEZE_GAP_NS)
        round_bounds.append((start, len(em.layers)))

    ops = []
    for q in patch.data_qubits:
        op, r = em.mz(q)
        ops.append(op)
        rmap.data[q] = r
    em.add(ops)

    detectors, observables = _squeeze_annotations(patch, spec, rmap)
    program = _assemble(patch, spec, em, detectors, observables, round_bounds)
    program = lower(program)
    return (program, rmap) if with_map else program


def _squeeze_value(rmap: MeasurementIndexMap, gi: int, j: int, k: int) -> tuple:
    """Stabiliser value carried by copy ``k`` in round ``j``, no-reset corrected.

    The collapsed state of copy ``3-k`` from round ``j-1`` is swapped onto
    physical auxiliary ``k`` before it is read out.
    """
    r = rmap.aux[(gi, j, k)]
    if j > 1:
        return (r, rmap.aux[(gi, j - 1, 3 - k)])
    return (r,)


def _squeeze_annotations(patch: Patch, spec: SchemeSpec, rmap: MeasurementIndexMap):
    n = spec.rounds
    half = Fraction(1, 2)
    coords = patch.coords
    match = _matching_type(patch)
    dets = []
    for gi, s in enumerate(patch.stabilisers):
        x1, y1 = coords[s.auxiliaries[0]]
        x2, y2 = coords[s.auxiliaries[1]]
        if s.pauli_type == match:
            dets.append(Detector(_squeeze_value(rmap, gi, 1, 1), (x2, y2, half)))
        for j in range(1, n + 1):
            dets.append(Detector(xor_records(_squeeze_value(rmap, gi, j, 1),
                                             _squeeze_value(rmap, gi, j, 2)), (x1, y1, j)))
            if j < n:
                k = 1 if j % 2 == 0 else 2
                dets.append(Detector(xor_records(_squeeze_value(rmap, gi, j, k),
                                                 _squeeze_value(rmap, gi, j + 1, k)),
                                     (x2, y2, j + half)))
        if s.pauli_type == match:
            k = 1 if n % 2 == 0 else 2
            final = [rmap.data[q] for q in s.support]
            dets.append(Detector(xor_records(_squeeze_value(rmap, gi, n, k), final),
                                 (x2, y2, n + half)))
    return dets, _observables(patch, rmap, lambda gi: _squeeze_value(rmap, gi, 1, 1))


def observable_type(program: CircuitProgram) -> str:
    """Stabiliser type whose detectors see the errors that flip the observable."""
    if program.metadata["experiment"] == "memory":
        return program.metadata["basis"]
    return "X"


def relaxation_detectors(program: CircuitProgram) -> list[int]:
    """Detectors kept by the CSS projection used to lower-bound distances."""
    want = observable_type(program)
    return [k for k, t in enumerate(program.metadata["detector_types"]) if t == want]


# --- lowering -------------------------------------------------------------------

def _swap_layers(a: int, b: int) -> list[list[Operation]]:
    # SWAP = CY(a,b) CY(b,a) CY(a,b), each CY a SQRT_X sandwich around CZ
    return [
        [Operation("SQRT_X", (b,))],
        [Operation("CZ", (a, b))],
        [Operation("SQRT_X_DAG", (b,)), Operation("SQRT_X", (a,))],
        [Operation("CZ", (a, b))],
        [Operation("SQRT_X_DAG", (a,)), Operation("SQRT_X", (b,))],
        [Operation("CZ", (a, b))],
        [Operation("SQRT_X_DAG", (b,))],
    ]


def _cx_layers(c: int, t: int) -> list[list[Operation]]:
    # conjugating the target by S then SQRT_X turns its Z coupling into X
    return [
        [Operation("S", (t,))],
        [Operation("SQRT_X", (t,))],
        [Operation("CZ", (c, t))],
        [Operation("SQRT_X_DAG", (t,))],
        [Operation("S_DAG", (t,))],
    ]


def lower(program: CircuitProgram) -> CircuitProgram:
    """Rewrite CX and SWAP into the native gate set.

    A layer holding CX/SWAP operations becomes a run of layers; every other
    operation of that layer is kept in the first of them.
    """
    out: list[Layer] = []
    changed = False
    for layer in program.layers:
        expansions = []
        rest = []
        for op in layer.ops:
            if op.kind == "SWAP":
                expansions.append(_swap_layers(*op.targets))
            elif op.kind == "CX":
                expansions.append(_cx_layers(*op.targets))
            else:
                rest.append(op)
        if not expansions:
            out.append(layer)
            continue
        changed = True
        depth = max(len(e) for e in expansions)
        for i in range(depth):
            ops = [op for e in expansions if i < len(e) for op in e[i]]
            if i == 0:
                ops = rest + ops
            out.append(Layer.of(ops))
    if not changed:
        return program
    return CircuitProgram(program.qubits, tuple(out), program.detectors, program.observables,
                          _lowered_round(program, out), program.rounds, program.metadata)


def _lowered_round(program: CircuitProgram, layers) -> int:
    # lowering changes layer counts, not timing, for the circuits built here
    return program.round_duration_ns


def clifford_action(ops, num_qubits: int):
    """Images of X_i and Z_i (as (x bits, z bits) tuples) under a Clifford sequence.

    Signs are ignored; used to check lowering rules.
    """
    images = []
    for i in range(num_qubits):
        for lab in "XZ":
            x = [0] * num_qubits
            z = [0] * num_qubits
            (x if lab == "X" else z)[i] = 1
            for op in ops:
                _forward(op, x, z)
            images.append((tuple(x), tuple(z)))
    return images


def _forward(op: Operation, x, z):
    k, t = op.kind, op.targets
    if k in ("SQRT_X", "SQRT_X_DAG"):
        x[t[0]] ^= z[t[0]]
    elif k in ("S", "S_DAG"):
        z[t[0]] ^= x[t[0]]
    elif k == "CZ":
        a, b = t
        z[a] ^= x[b]
        z[b] ^= x[a]
    elif k == "CX":
        c, tt = t
        x[tt] ^= x[c]
        z[c] ^= z[tt]
    elif k == "SWAP":
        a, b = t
        x[a], x[b] = x[b], x[a]
        z[a], z[b] = z[b], z[a]
    else:
        raise CircuitError(f"{k} is not unitary")
