"""Detector error models: extraction, graph-like decomposition and distance.

Extraction is symbolic. One backward sweep over the program yields, for each
circuit location, the detectors and observables flipped by an X or Z error
there (see :func:`resetqec.circuit.backward_sensitivity`). This is a
different route from the forward frame sampler, so comparing the two is a
real cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .circuit import backward_sensitivity
from .noise import NoisyProgram

TIMELIKE_SOURCES = frozenset({"measure", "classification"})


class DecompositionError(ValueError):
    pass


def merge_probability(q1: float, q2: float) -> float:
    """Probability that exactly one of two independent events fires."""
    return q1 * (1 - q2) + q2 * (1 - q1)


@dataclass(frozen=True)
class DemMechanism:
    probability: float
    detectors: tuple[int, ...]
    observables: tuple[int, ...]
    decomposition: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...] | None = None
    sources: frozenset = frozenset()
    location: tuple = ()

    @property
    def signature(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        return self.detectors, self.observables

    @property
    def graphlike(self) -> bool:
        return len(self.detectors) <= 2

    def components(self):
        """Graph-like pieces: the decomposition if present, else the mechanism itself."""
        if self.decomposition is not None:
            return self.decomposition
        return (self.signature,)


@dataclass(frozen=True)
class DetectorErrorModel:
    num_detectors: int
    num_observables: int
    mechanisms: tuple[DemMechanism, ...] = ()
    detector_coords: tuple = field(default=(), compare=False)

    def to_text(self) -> str:
        lines = []
        for m in self.mechanisms:
            parts = [f"error({m.probability:.12g})", _sig_text(m.signature)]
            if m.decomposition is not None:
                parts += ["^ " + _sig_text(c) for c in m.decomposition]
            lines.append(" ".join(p for p in parts if p))
        for k, c in enumerate(self.detector_coords):
            lines.append(f"detector ({','.join(str(v) for v in c)}) D{k}")
        return "\n".join(lines) + ("\n" if lines else "")


def _sig_text(sig) -> str:
    dets, obs = sig
    return " ".join([f"D{d}" for d in dets] + [f"L{o}" for o in obs])


def _bits(mask: int) -> list[int]:
    out = []
    k = 0
    while mask:
        if mask & 1:
            out.append(k)
        mask >>= 1
        k += 1
    return out


def mechanism_signatures(noisy: NoisyProgram) -> list[tuple[frozenset, frozenset]]:
    """Signature of every elementary mechanism, in mechanism order."""
    program = noisy.program
    nd = program.num_detectors
    probes = sorted({m.location for m in noisy.mechanisms})
    sens, record_masks = backward_sensitivity(program, probes)
    out = []
    for m in noisy.mechanisms:
        mask = 0
        if m.record is not None:
            mask ^= record_masks[m.record]
        if m.paulis:
            sx, sz = sens[m.location]
            for q, lab in m.paulis:
                if lab in "XY":
                    mask ^= sx[q]
                if lab in "ZY":
                    mask ^= sz[q]
        bits = _bits(mask)
        out.append((frozenset(b for b in bits if b < nd),
                    frozenset(b - nd for b in bits if b >= nd)))
    return out


def extract(noisy: NoisyProgram) -> DetectorErrorModel:
    """Merge elementary mechanisms by signature; drop ones that flip nothing."""
    program = noisy.program
    merged: dict = {}
    for m, (dets, obs) in zip(noisy.mechanisms, mechanism_signatures(noisy)):
        if not dets and not obs:
            continue
        key = (tuple(sorted(dets)), tuple(sorted(obs)))
        if key in merged:
            q, sources, loc = merged[key]
            merged[key] = (merge_probability(q, m.probability), sources | {m.source}, loc)
        else:
            merged[key] = (m.probability, frozenset({m.source}), m.location)
    mechs = tuple(DemMechanism(q, key[0], key[1], None, src, loc)
                  for key, (q, src, loc) in sorted(merged.items()))
    coords = tuple(d.coord for d in program.detectors)
    return DetectorErrorModel(program.num_detectors, program.num_observables, mechs, coords)


def _xor(a: tuple, b: tuple) -> tuple:
    return tuple(sorted(set(a) ^ set(b)))


def decompose(dem: DetectorErrorModel) -> DetectorErrorModel:
    """Split every mechanism with three or more detectors into graph-like parts.

    Parts are drawn from the signatures of existing graph-like mechanisms and
    must partition the detector set while reproducing the observable flips.
    Among valid splits the one with the largest product of part
    probabilities wins; ties go to the lexicographically smallest split.
    """
    edges: dict[tuple, dict[tuple, float]] = {}
    for m in dem.mechanisms:
        if m.graphlike and m.detectors:
            edges.setdefault(m.detectors, {})[m.observables] = m.probability
    out = []
    for m in dem.mechanisms:
        if m.graphlike:
            out.append(m)
            continue
        best = _best_split(m, edges)
        if best is None:
            raise DecompositionError(
                f"mechanism {_sig_text(m.signature)} (sources {sorted(m.sources)}, "
                f"location {m.location}) has no split into existing graph-like edges")
        out.append(replace(m, decomposition=best))
    return replace(dem, mechanisms=tuple(out))


def _best_split(m: DemMechanism, edges):
    target_obs = m.observables
    best = [None, None]  # (score, parts)

    def consider(parts):
        obs = ()
        score = 0.0
        for dets, o, q in parts:
            obs = _xor(obs, o)
            score += math.log(q)
        if obs != target_obs:
            return
        key = tuple((d, o) for d, o, _ in parts)
        if (best[0] is None or score > best[0] + 1e-12
                or (abs(score - best[0]) <= 1e-12 and key < best[1])):
            best[0], best[1] = score, key

    def rec(remaining: tuple, parts: list):
        if not remaining:
            consider(parts)
            return
        first, rest = remaining[0], remaining[1:]
        for o, q in edges.get((first,), {}).items():
            rec(rest, parts + [((first,), o, q)])
        for other in rest:
            pair = (first, other)
            for o, q in edges.get(pair, {}).items():
                rec(tuple(x for x in rest if x != other), parts + [(pair, o, q)])

    rec(m.detectors, [])
    return best[1]


# --- effective distance --------------------------------------------------------

@dataclass(frozen=True)
class DistanceResult:
    """Exact distance, or a proven lower bound when the search ran out of budget."""

    value: int | None
    lower_bound: int
    exact: bool

    def __str__(self) -> str:
        if self.exact:
            return str(self.value)
        if self.value is None and self.lower_bound == 0:
            return "no undetectable logical error"
        return f"inconclusive >= {self.lower_bound}"


class SearchBudgetExceeded(RuntimeError):
    pass


def _columns(dem: DetectorErrorModel, restriction: str):
    if restriction not in ("all", "timelike_only"):
        raise ValueError(f"unknown restriction {restriction!r}")
    keep = []
    for i, m in enumerate(dem.mechanisms):
        if restriction == "timelike_only" and not (m.sources & TIMELIKE_SOURCES):
            continue
        keep.append(i)
    return keep


def restrict(dem: DetectorErrorModel, restriction: str) -> DetectorErrorModel:
    if restriction == "all":
        return dem
    mechs = tuple(dem.mechanisms[i] for i in _columns(dem, restriction))
    return replace(dem, mechanisms=mechs)


def project(dem: DetectorErrorModel, keep) -> DetectorErrorModel:
    """Forget every detector outside ``keep`` (renumbered in order).

    Every undetectable logical error of ``dem`` stays one here, so distances
    of the projection are lower bounds.
    """
    keep = sorted(set(keep))
    index = {k: i for i, k in enumerate(keep)}
    merged: dict = {}
    for m in dem.mechanisms:
        dets = tuple(index[d] for d in m.detectors if d in index)
        if not dets and not m.observables:
            continue
        key = (dets, m.observables)
        if key in merged:
            old = merged[key]
            merged[key] = replace(old, probability=merge_probability(old.probability,
                                                                     m.probability),
                                  sources=old.sources | m.sources)
        else:
            merged[key] = replace(m, detectors=dets, decomposition=None)
    coords = tuple(dem.detector_coords[k] for k in keep) if dem.detector_coords else ()
    return DetectorErrorModel(len(keep), dem.num_observables,
                              tuple(merged[k] for k in sorted(merged)), coords)


class _Search:
    """Is there an undetectable logical error of at most ``k`` mechanisms?

    Depth-first search over partial error sets. A solution contains an odd
    number of observable-flipping mechanisms, so each run starts from one of
    them (excluding earlier starts, which were already covered). Every later
    step adds a mechanism touching the lowest-index detector still lit:
    whatever the solution is, one of its remaining members must clear it.
    """

    def __init__(self, dem: DetectorErrorModel, observable: int, budget: int):
        self.bits = []
        self.flips = []
        self.by_det: dict[int, list[int]] = {}
        for i, m in enumerate(dem.mechanisms):
            b = 0
            for d in m.detectors:
                b |= 1 << d
                self.by_det.setdefault(d, []).append(i)
            self.bits.append(b)
            self.flips.append(observable in m.observables)
        self.kmax = max((len(m.detectors) for m in dem.mechanisms), default=1) or 1
        self.budget = budget
        self.nodes = 0

    def exists(self, k: int) -> bool:
        banned: set[int] = set()
        for start in (i for i, f in enumerate(self.flips) if f):
            if self.bits[start] == 0:
                return True
            memo: dict = {}
            if self._dfs(self.bits[start], 1, 1, k, memo, banned):
                return True
            banned.add(start)
        return False

    def _dfs(self, lit: int, parity: int, cost: int, k: int, memo, banned) -> bool:
        self.nodes += 1
        if self.nodes > self.budget:
            raise SearchBudgetExceeded
        if lit == 0:
            return parity == 1
        if cost + -(-lit.bit_count() // self.kmax) > k:
            return False
        key = (lit, parity)
        if memo.get(key, k + 1) <= cost:
            return False
        memo[key] = cost
        lowest = (lit & -lit).bit_length() - 1
        for i in self.by_det.get(lowest, ()):
            if i in banned:
                continue
            if self._dfs(lit ^ self.bits[i], parity ^ self.flips[i], cost + 1, k, memo, banned):
                return True
        return False


def _deepen(dem, observable, start_k, stop_k, budget):
    """Smallest k in [start_k, stop_k) with a solution, or None; raises on budget."""
    search = _Search(dem, observable, budget)
    for k in range(start_k, stop_k):
        if search.exists(k):
            return k
    return None


def distance(dem: DetectorErrorModel, observable: int = 0, restriction: str = "all",
             relaxation=None, node_budget: int = 20_000_000,
             max_weight: int = 25) -> DistanceResult:
    """Fewest mechanisms that flip ``observable`` while triggering no detector.

    An upper bound comes from the shortest odd cycle among graph-like
    mechanisms (a genuine error set). When ``relaxation`` lists detector
    indices, the exact distance of the projected model gives a lower bound;
    if the bounds meet the answer is proven without touching the full model.
    Otherwise the full model is searched exactly from the lower bound up.
    Exceeding ``node_budget`` search nodes yields an inconclusive result
    carrying the largest proven lower bound.
    """
    if not 0 <= observable < dem.num_observables:
        raise ValueError("observable index out of range")
    dem = restrict(dem, restriction)
    if not any(observable in m.observables for m in dem.mechanisms):
        return DistanceResult(None, 0, False)
    upper = graphlike_distance(dem, observable)
    stop = upper if upper is not None else max_weight + 1
    lower = 1
    if relaxation is not None:
        try:
            found = _deepen(project(dem, relaxation), observable, 1, stop, node_budget)
        except SearchBudgetExceeded:
            found = -1
        if found is None:
            return DistanceResult(upper, upper, True) if upper is not None else \
                DistanceResult(None, stop, False)
        if found > 0:
            lower = found
    k = lower
    search = _Search(dem, observable, node_budget)
    try:
        while k < stop:
            if search.exists(k):
                return DistanceResult(k, k, True)
            k += 1
    except SearchBudgetExceeded:
        return DistanceResult(None, k, False)
    if upper is not None:
        return DistanceResult(upper, upper, True)
    return DistanceResult(None, stop, False)


def graphlike_distance(dem: DetectorErrorModel, observable: int = 0,
                       restriction: str = "all") -> int | None:
    """Shortest odd-observable cycle in the decoding graph, unit edge weights.

    Uses the graph-like components of every mechanism, so it upper-bounds
    :func:`distance` when decompositions are present and matches it when
    every minimum-weight logical is graph-like.
    """
    from collections import deque

    boundary = dem.num_detectors
    adj: dict[int, set] = {}
    for i in _columns(dem, restriction):
        m = dem.mechanisms[i]
        if not m.graphlike:
            continue
        dets = list(m.detectors)
        if not dets:
            continue
        u = dets[0]
        v = dets[1] if len(dets) == 2 else boundary
        par = int(observable in m.observables)
        adj.setdefault(u, set()).add((v, par))
        adj.setdefault(v, set()).add((u, par))
    best = None
    for start in sorted(adj):
        dist = {(start, 0): 0}
        queue = deque([(start, 0)])
        while queue:
            node, par = queue.popleft()
            dcur = dist[(node, par)]
            if best is not None and dcur >= best:
                break
            for nxt, p in adj[node]:
                state = (nxt, par ^ p)
                if state not in dist:
                    dist[state] = dcur + 1
                    queue.append(state)
        hit = dist.get((start, 1))
        if hit is not None and (best is None or hit < best):
            best = hit
    return best
