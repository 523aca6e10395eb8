"""Bit-packed Pauli-frame Monte Carlo sampler.

Each shot carries an X and a Z frame bit per qubit; 64 shots share one
``uint64`` word. Frames are pushed forward through the Clifford layers,
measurement records store the X-frame bit (plus misreads) and detector and
observable bits are parities of record flips. The Z frame is re-randomised
after every measurement and reset, so a detector that is not deterministic
in the noiseless program shows up as a random bit.

Randomness is drawn per batch from ``default_rng([seed, batch_index])`` with
a fixed batch width, so results do not depend on how batches are scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import CircuitProgram, record_count
from .noise import ErrorMechanism, NoisyProgram

BATCH_SHOTS = 1 << 14
_ONE = np.uint64(1)


@dataclass
class SampleBlock:
    detectors: np.ndarray  # (shots, num_detectors) bool
    observables: np.ndarray  # (shots, num_observables) bool
    shots: int
    seed: int | None = None

    def __post_init__(self):
        if self.detectors.shape[0] != self.shots or self.observables.shape[0] != self.shots:
            raise ValueError("sample arrays do not match the shot count")

    def to_text(self) -> str:
        """One line per shot: detector bits, a space, observable bits."""
        rows = []
        for d, o in zip(self.detectors.astype(np.uint8), self.observables.astype(np.uint8)):
            rows.append("".join(map(str, d)) + " " + "".join(map(str, o)))
        return "\n".join(rows) + ("\n" if rows else "")


@dataclass
class _Layer:
    sqx: np.ndarray
    s: np.ndarray
    cz_a: np.ndarray
    cz_b: np.ndarray
    cx_c: np.ndarray
    cx_t: np.ndarray
    sw_a: np.ndarray
    sw_b: np.ndarray
    mz_q: np.ndarray
    mz_r: np.ndarray
    rz: np.ndarray
    xc_q: np.ndarray
    xc_r: np.ndarray


def _arr(v):
    return np.asarray(v, dtype=np.intp)


def _compile_layers(program: CircuitProgram) -> list[_Layer]:
    out = []
    for layer in program.layers:
        g: dict[str, list] = {k: [] for k in _Layer.__dataclass_fields__}
        for op in layer.ops:
            k, t = op.kind, op.targets
            if k in ("SQRT_X", "SQRT_X_DAG"):
                g["sqx"].append(t[0])
            elif k in ("S", "S_DAG"):
                g["s"].append(t[0])
            elif k == "CZ":
                g["cz_a"].append(t[0]), g["cz_b"].append(t[1])
            elif k == "CX":
                g["cx_c"].append(t[0]), g["cx_t"].append(t[1])
            elif k == "SWAP":
                g["sw_a"].append(t[0]), g["sw_b"].append(t[1])
            elif k == "MZ":
                g["mz_q"].append(t[0]), g["mz_r"].append(op.record)
            elif k == "RZ":
                g["rz"].append(t[0])
            elif k == "X_COND":
                g["xc_q"].append(t[0]), g["xc_r"].append(op.condition)
        out.append(_Layer(**{k: _arr(v) for k, v in g.items()}))
    return out


@dataclass
class _Group:
    """Channels sharing location, kind and term probabilities."""

    kind: str
    targets: np.ndarray  # (K, arity)
    term_probs: np.ndarray  # normalised over terms
    term_x: np.ndarray  # (terms, arity) bool
    term_z: np.ndarray
    total: float


_P1_X = np.array([[1], [1], [0]], dtype=bool)
_P1_Z = np.array([[0], [1], [1]], dtype=bool)
_P2 = [(a, b) for a in "IXYZ" for b in "IXYZ"][1:]
_P2_X = np.array([[a in "XY", b in "XY"] for a, b in _P2], dtype=bool)
_P2_Z = np.array([[a in "ZY", b in "ZY"] for a, b in _P2], dtype=bool)


def _compile_noise(noisy: NoisyProgram) -> dict[tuple[int, str], list[_Group]]:
    buckets: dict = {}
    for ch in noisy.channels:
        if ch.total <= 0:
            continue
        key = (ch.location, ch.kind, ch.probs)
        buckets.setdefault(key, []).append(ch.targets)
    out: dict[tuple[int, str], list[_Group]] = {}
    for (loc, kind, probs), targets in buckets.items():
        probs_arr = np.asarray(probs, dtype=float)
        total = float(probs_arr.sum())
        if kind == "pauli1":
            tx, tz = _P1_X, _P1_Z
        elif kind == "pauli2":
            tx, tz = _P2_X, _P2_Z
        else:
            tx = tz = np.zeros((1, 1), dtype=bool)
        out.setdefault(loc, []).append(
            _Group(kind, np.asarray(targets, dtype=np.intp), probs_arr / total, tx, tz, total))
    return out


def _bernoulli_positions(rng: np.random.Generator, n: int, p: float) -> np.ndarray:
    """Sorted indices in ``range(n)`` each included independently with probability ``p``."""
    if p <= 0 or n == 0:
        return np.empty(0, dtype=np.int64)
    if p >= 1:
        return np.arange(n, dtype=np.int64)
    if p > 0.2:
        return np.flatnonzero(rng.random(n) < p)
    count = rng.binomial(n, p)
    if count == 0:
        return np.empty(0, dtype=np.int64)
    return np.sort(rng.choice(n, size=count, replace=False))


class _Frames:
    def __init__(self, num_qubits: int, num_records: int, shots: int, rng):
        self.words = (shots + 63) // 64
        self.shots = shots
        self.rng = rng
        self.x = np.zeros((num_qubits, self.words), dtype=np.uint64)
        self.z = np.zeros((num_qubits, self.words), dtype=np.uint64)
        self.rec = np.zeros((num_records, self.words), dtype=np.uint64)

    def random_words(self, rows: int) -> np.ndarray:
        if self.rng is None:
            return np.zeros((rows, self.words), dtype=np.uint64)
        return self.rng.integers(0, np.iinfo(np.uint64).max, size=(rows, self.words),
                                 dtype=np.uint64, endpoint=True)

    def flip(self, target: np.ndarray, rows: np.ndarray, shots: np.ndarray):
        if rows.size:
            np.bitwise_xor.at(target, (rows, shots >> 6),
                              _ONE << (shots & 63).astype(np.uint64))

    def run_layer(self, L: _Layer):
        x, z = self.x, self.z
        if L.sqx.size:
            x[L.sqx] ^= z[L.sqx]
        if L.s.size:
            z[L.s] ^= x[L.s]
        if L.cz_a.size:
            za = z[L.cz_a] ^ x[L.cz_b]
            zb = z[L.cz_b] ^ x[L.cz_a]
            z[L.cz_a] = za
            z[L.cz_b] = zb
        if L.cx_c.size:
            x[L.cx_t] ^= x[L.cx_c]
            z[L.cx_c] ^= z[L.cx_t]
        if L.sw_a.size:
            xa, za = x[L.sw_a].copy(), z[L.sw_a].copy()
            x[L.sw_a], z[L.sw_a] = x[L.sw_b], z[L.sw_b]
            x[L.sw_b], z[L.sw_b] = xa, za
        if L.mz_q.size:
            self.rec[L.mz_r] = x[L.mz_q]
            z[L.mz_q] ^= self.random_words(L.mz_q.size)
        if L.rz.size:
            x[L.rz] = 0
            z[L.rz] = self.random_words(L.rz.size)
        if L.xc_q.size:
            x[L.xc_q] ^= self.rec[L.xc_r]

    def inject_random(self, groups: list[_Group]):
        rng = self.rng
        for g in groups:
            k = g.targets.shape[0]
            hits = _bernoulli_positions(rng, k * self.shots, g.total)
            if hits.size == 0:
                continue
            chan, shot = np.divmod(hits, self.shots)
            if g.kind == "flip":
                self.flip(self.rec, g.targets[chan, 0], shot)
                continue
            term = rng.choice(len(g.term_probs), size=hits.size, p=g.term_probs)
            for col in range(g.targets.shape[1]):
                q = g.targets[chan, col]
                mx = g.term_x[term, col]
                mz = g.term_z[term, col]
                self.flip(self.x, q[mx], shot[mx])
                self.flip(self.z, q[mz], shot[mz])

    def parities(self, groups: list[tuple[int, ...]]) -> np.ndarray:
        out = np.zeros((len(groups), self.words), dtype=np.uint64)
        for i, recs in enumerate(groups):
            if recs:
                out[i] = np.bitwise_xor.reduce(self.rec[list(recs)], axis=0)
        return out

    def unpack(self, packed: np.ndarray) -> np.ndarray:
        bits = np.unpackbits(packed.view(np.uint8), axis=1, bitorder="little")
        return bits[:, : self.shots].T.astype(bool)


def _simulate(program: CircuitProgram, layers, noise, shots, rng, forced=None):
    frames = _Frames(program.num_qubits, record_count(program), shots, rng)
    frames.z[:] = frames.random_words(program.num_qubits)
    forced = forced or {}
    for li, L in enumerate(layers):
        for phase in ("before", "after"):
            if phase == "after":
                frames.run_layer(L)
            loc = (li, phase)
            if noise and loc in noise:
                frames.inject_random(noise[loc])
            if loc in forced:
                _inject_forced(frames, forced[loc])
    det = frames.parities([d.records for d in program.detectors])
    obs = frames.parities([o.records for o in program.observables])
    return frames.unpack(det), frames.unpack(obs)


def _inject_forced(frames: _Frames, items):
    for shot, mech in items:
        s = np.array([shot], dtype=np.int64)
        if mech.record is not None:
            frames.flip(frames.rec, np.array([mech.record]), s)
        for q, lab in mech.paulis:
            if lab in "XY":
                frames.flip(frames.x, np.array([q]), s)
            if lab in "ZY":
                frames.flip(frames.z, np.array([q]), s)


def sample(noisy: NoisyProgram, shots: int, seed: int = 0, batch_shots: int = BATCH_SHOTS,
           first_batch: int = 0) -> SampleBlock:
    """Sample detector and observable flips for ``shots`` shots.

    Shots are produced in batches of ``batch_shots``; batch ``b`` uses the
    random stream ``[seed, first_batch + b]``.
    """
    program = noisy.program
    layers = _compile_layers(program)
    noise = _compile_noise(noisy)
    dets, obss = [], []
    done = 0
    b = first_batch
    while done < shots:
        n = min(batch_shots, shots - done)
        rng = np.random.default_rng([seed, b])
        d, o = _simulate(program, layers, noise, n, rng)
        dets.append(d)
        obss.append(o)
        done += n
        b += 1
    if not dets:
        dets = [np.zeros((0, program.num_detectors), dtype=bool)]
        obss = [np.zeros((0, program.num_observables), dtype=bool)]
    return SampleBlock(np.concatenate(dets), np.concatenate(obss), shots, seed)


def forced_signatures(noisy: NoisyProgram, mechanisms=None):
    """Detector/observable flips when exactly one mechanism fires, one shot each.

    Returns a list of ``(frozenset(detectors), frozenset(observables))``.
    """
    mechs: list[ErrorMechanism] = list(noisy.mechanisms if mechanisms is None else mechanisms)
    program = noisy.program
    if not mechs:
        return []
    forced: dict = {}
    for shot, m in enumerate(mechs):
        forced.setdefault(m.location, []).append((shot, m))
    rng = np.random.default_rng(12345)
    d, o = _simulate(program, _compile_layers(program), None, len(mechs), rng, forced)
    return [(frozenset(np.flatnonzero(d[i]).tolist()), frozenset(np.flatnonzero(o[i]).tolist()))
            for i in range(len(mechs))]


def nondeterministic_annotations(program: CircuitProgram, shots: int = 256, seed: int = 0):
    """Indices of detectors and observables that vary across noiseless shots."""
    rng = np.random.default_rng(seed)
    d, o = _simulate(program, _compile_layers(program), None, shots, rng)
    return np.flatnonzero(d.any(axis=0)).tolist(), np.flatnonzero(o.any(axis=0)).tolist()


def reference_check(noisy: NoisyProgram | CircuitProgram) -> bool:
    """True iff a noiseless pass gives all-zero detectors and observables."""
    program = noisy.program if isinstance(noisy, NoisyProgram) else noisy
    bad_d, bad_o = nondeterministic_annotations(program)
    return not bad_d and not bad_o
