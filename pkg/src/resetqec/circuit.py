"""Timed circuit intermediate representation.

A :class:`CircuitProgram` is an ordered list of :class:`Layer` objects. Each
layer holds operations acting on disjoint qubits and has a duration in
nanoseconds. Measurement records are numbered in the order the ``MZ``
operations appear. Detectors and observables are parities of record sets.

Measurements flagged ``concurrent`` start in their layer but keep running
through the following layers (up to their duration) without extending the
layer they start in. This is how overlapping measurement/unitary windows
of the round-squeezing circuit are expressed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

ONE_QUBIT_KINDS = frozenset({"SQRT_X", "SQRT_X_DAG", "S", "S_DAG"})
TWO_QUBIT_KINDS = frozenset({"CZ", "CX", "SWAP"})
NATIVE_KINDS = frozenset({"SQRT_X", "SQRT_X_DAG", "S", "S_DAG", "CZ", "MZ", "RZ", "X_COND"})
ALL_KINDS = NATIVE_KINDS | TWO_QUBIT_KINDS

DEFAULT_DURATIONS = {
    "SQRT_X": 20,
    "SQRT_X_DAG": 20,
    "S": 20,
    "S_DAG": 20,
    "CZ": 40,
    "CX": 120,
    "SWAP": 200,
    "MZ": 600,
    "RZ": 500,
    "X_COND": 20,
}

Coord = tuple[Fraction, ...]


class CircuitError(ValueError):
    """Raised for malformed programs or unparsable circuit text."""


def as_coord(values: Iterable) -> Coord:
    return tuple(Fraction(v) for v in values)


@dataclass(frozen=True)
class Qubit:
    index: int
    coord: Coord

    def __post_init__(self):
        object.__setattr__(self, "coord", as_coord(self.coord))


@dataclass(frozen=True)
class Operation:
    kind: str
    targets: tuple[int, ...]
    duration: int | None = None
    record: int | None = None
    condition: int | None = None
    concurrent: bool = False

    def __post_init__(self):
        if self.kind not in ALL_KINDS:
            raise CircuitError(f"unknown operation kind {self.kind!r}")
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        if self.duration is None:
            object.__setattr__(self, "duration", DEFAULT_DURATIONS[self.kind])


@dataclass(frozen=True)
class Layer:
    ops: tuple[Operation, ...]
    duration: int

    @classmethod
    def of(cls, ops: Iterable[Operation], duration: int | None = None) -> "Layer":
        ops = tuple(ops)
        if duration is None:
            duration = max((op.duration for op in ops if not op.concurrent), default=0)
        return cls(ops, int(duration))

    def qubits(self) -> list[int]:
        return [q for op in self.ops for q in op.targets]


@dataclass(frozen=True)
class Detector:
    records: tuple[int, ...]
    coord: Coord

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(sorted(set(self.records))))
        object.__setattr__(self, "coord", as_coord(self.coord))


@dataclass(frozen=True)
class Observable:
    records: tuple[int, ...]
    label: str = "L0"

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(sorted(set(self.records))))


@dataclass(frozen=True)
class CircuitProgram:
    qubits: tuple[Qubit, ...] = ()
    layers: tuple[Layer, ...] = ()
    detectors: tuple[Detector, ...] = ()
    observables: tuple[Observable, ...] = ()
    round_duration_ns: int = 0
    rounds: int = 0
    metadata: dict = field(default_factory=dict, compare=False)

    @property
    def num_qubits(self) -> int:
        return max((q.index for q in self.qubits), default=-1) + 1

    @property
    def num_detectors(self) -> int:
        return len(self.detectors)

    @property
    def num_observables(self) -> int:
        return len(self.observables)

    def coords(self) -> dict[int, Coord]:
        return {q.index: q.coord for q in self.qubits}

    def operations(self):
        for i, layer in enumerate(self.layers):
            for op in layer.ops:
                yield i, op


def total_duration(program: CircuitProgram) -> int:
    """Wall-clock duration of the program in ns."""
    return sum(layer.duration for layer in program.layers)


def record_count(program: CircuitProgram) -> int:
    return sum(1 for _, op in program.operations() if op.kind == "MZ")


def xor_records(*groups: Iterable[int]) -> tuple[int, ...]:
    """Symmetric difference of record groups, sorted."""
    acc: set[int] = set()
    for g in groups:
        for r in g:
            acc ^= {r}
    return tuple(sorted(acc))


def structural_violations(program: CircuitProgram) -> list[str]:
    out = []
    indices = [q.index for q in program.qubits]
    if len(set(indices)) != len(indices):
        out.append("duplicate qubit index")
    coords = [q.coord for q in program.qubits]
    if len(set(coords)) != len(coords):
        out.append("duplicate qubit coordinate")
    known = set(indices)
    next_record = 0
    busy_until: dict[int, int] = {}
    clock = 0
    for li, layer in enumerate(program.layers):
        seen: set[int] = set()
        for op in layer.ops:
            for q in op.targets:
                if q not in known:
                    out.append(f"layer {li}: unknown qubit {q}")
                if q in seen:
                    out.append(f"layer {li}: qubit {q} used twice")
                seen.add(q)
                if busy_until.get(q, 0) > clock:
                    out.append(f"layer {li}: qubit {q} is still being measured")
            n = 2 if op.kind in TWO_QUBIT_KINDS else 1
            if len(op.targets) != n or len(set(op.targets)) != n:
                out.append(f"layer {li}: {op.kind} needs {n} distinct operands")
            if op.kind == "MZ":
                if op.record != next_record:
                    out.append(f"layer {li}: MZ record {op.record} out of order")
                next_record += 1
            elif op.record is not None:
                out.append(f"layer {li}: {op.kind} carries a record slot")
            if op.kind == "X_COND":
                if op.condition is None or not 0 <= op.condition < next_record:
                    out.append(f"layer {li}: X_COND on unavailable record {op.condition}")
            if op.concurrent and op.kind != "MZ":
                out.append(f"layer {li}: only MZ may be concurrent")
            if not op.concurrent and op.duration > layer.duration:
                out.append(f"layer {li}: {op.kind} longer than its layer")
        for op in layer.ops:
            if op.concurrent:
                for q in op.targets:
                    busy_until[q] = clock + op.duration
        clock += layer.duration
    for k, det in enumerate(program.detectors):
        if not det.records:
            out.append(f"detector {k} has no records")
        if any(r >= next_record or r < 0 for r in det.records):
            out.append(f"detector {k} references a missing record")
    for k, obs in enumerate(program.observables):
        if any(r >= next_record or r < 0 for r in obs.records):
            out.append(f"observable {k} references a missing record")
    return out


def validate(program: CircuitProgram) -> list[str]:
    """Return the list of invariant violations (empty when valid).

    Besides the structural checks, one noiseless Pauli-frame pass with random
    measurement gauges checks that every detector and observable is
    deterministic.
    """
    out = structural_violations(program)
    if out or not (program.detectors or program.observables):
        return out
    from .sampler import nondeterministic_annotations

    bad_det, bad_obs = nondeterministic_annotations(program)
    out.extend(f"detector {k} nondeterministic" for k in bad_det)
    out.extend(f"observable {k} nondeterministic" for k in bad_obs)
    return out


# --- symbolic backward propagation -----------------------------------------

def backward_sensitivity(program: CircuitProgram, probes: Sequence[tuple[int, str]] = ()):
    """Propagate detector/observable sensitivity backwards through the program.

    Bit ``k`` of a sensitivity mask refers to detector ``k`` for
    ``k < num_detectors`` and to observable ``k - num_detectors`` otherwise.

    Parameters
    ----------
    probes
        ``(layer_index, phase)`` pairs with phase ``"before"`` or ``"after"``.

    Returns
    -------
    probe_masks : dict
        Maps each probe to ``(sx, sz)``: per-qubit masks of the annotations
        flipped by an X (resp. Z) error at that location.
    record_masks : list[int]
        Annotations flipped when a record is misread, including the effect
        of any X_COND that consumes the record.
    """
    nq = program.num_qubits
    nd = program.num_detectors
    direct: dict[int, int] = {}
    for k, det in enumerate(program.detectors):
        for r in det.records:
            direct[r] = direct.get(r, 0) ^ (1 << k)
    for k, obs in enumerate(program.observables):
        for r in obs.records:
            direct[r] = direct.get(r, 0) ^ (1 << (nd + k))

    n_rec = record_count(program)
    extra = [0] * n_rec
    record_masks = [0] * n_rec
    sx = [0] * nq
    sz = [0] * nq
    wanted: dict[int, set[str]] = {}
    for li, phase in probes:
        wanted.setdefault(li, set()).add(phase)
    result = {}

    for li in range(len(program.layers) - 1, -1, -1):
        layer = program.layers[li]
        if "after" in wanted.get(li, ()):
            result[(li, "after")] = (tuple(sx), tuple(sz))
        for op in layer.ops:
            _backward_op(op, sx, sz, direct, extra, record_masks)
        if "before" in wanted.get(li, ()):
            result[(li, "before")] = (tuple(sx), tuple(sz))
    result[("start", "")] = (tuple(sx), tuple(sz))
    return result, record_masks


def _backward_op(op, sx, sz, direct, extra, record_masks):
    k = op.kind
    t = op.targets
    if k in ("SQRT_X", "SQRT_X_DAG"):
        # Z before the gate becomes +-Y after it
        q = t[0]
        sz[q] ^= sx[q]
    elif k in ("S", "S_DAG"):
        q = t[0]
        sx[q] ^= sz[q]
    elif k == "CZ":
        a, b = t
        sx[a], sx[b] = sx[a] ^ sz[b], sx[b] ^ sz[a]
    elif k == "CX":
        c, tt = t
        sx[c] ^= sx[tt]
        sz[tt] ^= sz[c]
    elif k == "SWAP":
        a, b = t
        sx[a], sx[b] = sx[b], sx[a]
        sz[a], sz[b] = sz[b], sz[a]
    elif k == "MZ":
        q = t[0]
        mask = direct.get(op.record, 0) ^ extra[op.record]
        record_masks[op.record] = mask
        sx[q] ^= mask
    elif k == "RZ":
        q = t[0]
        sx[q] = 0
        sz[q] = 0
    elif k == "X_COND":
        extra[op.condition] ^= sx[t[0]]
    else:  # pragma: no cover - guarded by Operation
        raise CircuitError(k)


# --- text format ---------------------------------------------------------------

def _fmt(v: Fraction) -> str:
    return str(Fraction(v))


def to_text(program: CircuitProgram) -> str:
    """Serialise to the line-oriented text format."""
    lines = [f"ROUNDS {program.rounds} {program.round_duration_ns}"]
    for q in program.qubits:
        lines.append("Q {} {}".format(q.index, " ".join(_fmt(c) for c in q.coord)))
    for layer in program.layers:
        lines.append(f"LAYER {layer.duration}")
        for op in layer.ops:
            parts = [op.kind, *map(str, op.targets)]
            if op.kind == "X_COND":
                parts.append(f"r{op.condition}")
            if op.duration != DEFAULT_DURATIONS[op.kind]:
                parts.append(f"@{op.duration}")
            if op.concurrent:
                parts.append("~")
            lines.append(" ".join(parts))
    for det in program.detectors:
        coord = ",".join(_fmt(c) for c in det.coord)
        lines.append(f"DETECTOR ({coord}) " + " ".join(f"r{r}" for r in det.records))
    for obs in program.observables:
        lines.append(f"OBSERVABLE {obs.label} " + " ".join(f"r{r}" for r in obs.records))
    return "\n".join(lines) + "\n"


def _rec(tok: str) -> int:
    if not tok.startswith("r"):
        raise CircuitError(f"expected record token, got {tok!r}")
    return int(tok[1:])


def from_text(text: str) -> CircuitProgram:
    qubits, layers, detectors, observables = [], [], [], []
    rounds = round_ns = 0
    cur: list[Operation] | None = None
    cur_dur = 0
    n_rec = 0

    def flush():
        if cur is not None:
            layers.append(Layer(tuple(cur), cur_dur))

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        head, *rest = line.split()
        try:
            if head == "ROUNDS":
                rounds, round_ns = int(rest[0]), int(rest[1])
            elif head == "Q":
                qubits.append(Qubit(int(rest[0]), as_coord(rest[1:])))
            elif head == "LAYER":
                flush()
                cur, cur_dur = [], int(rest[0])
            elif head == "DETECTOR":
                body = line[len("DETECTOR"):].strip()
                close = body.index(")")
                coord = as_coord(body[1:close].split(","))
                recs = [_rec(t) for t in body[close + 1:].split()]
                detectors.append(Detector(tuple(recs), coord))
            elif head == "OBSERVABLE":
                observables.append(Observable(tuple(_rec(t) for t in rest[1:]), rest[0]))
            elif head in ALL_KINDS:
                if cur is None:
                    raise CircuitError("operation outside a layer")
                targets, duration, cond, conc = [], None, None, False
                for tok in rest:
                    if tok.startswith("@"):
                        duration = int(tok[1:])
                    elif tok == "~":
                        conc = True
                    elif tok.startswith("r"):
                        cond = _rec(tok)
                    else:
                        targets.append(int(tok))
                record = None
                if head == "MZ":
                    record, n_rec = n_rec, n_rec + 1
                cur.append(Operation(head, tuple(targets), duration, record, cond, conc))
            else:
                raise CircuitError(f"unknown instruction {head!r}")
        except (IndexError, ValueError) as exc:
            raise CircuitError(f"line {lineno}: {raw!r}: {exc}") from exc
    flush()
    return CircuitProgram(tuple(qubits), tuple(layers), tuple(detectors), tuple(observables),
                          round_ns, rounds)
