"""Minimum-weight perfect matching on graph-like detector error models.

Detection events are matched in the complete graph whose edge costs are
shortest-path lengths in the decoding graph, with a virtual boundary node
that any number of events may use. Matching is exact: events split into
clusters that can never profit from pairing across each other, small
clusters are solved by dynamic programming over subsets and large ones by
the blossom algorithm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import networkx as nx
import numba
import numpy as np
import pymatching
from scipy.sparse import csr_array
from scipy.sparse.csgraph import dijkstra

from .dem import DetectorErrorModel, merge_probability
from .sampler import SampleBlock

DP_LIMIT = 10
KERNEL_DP_LIMIT = 16


class DecodingError(ValueError):
    pass


@dataclass(frozen=True)
class Edge:
    u: int
    v: int  # boundary is ``num_detectors``
    probability: float
    observables: int  # bit mask

    @property
    def weight(self) -> float:
        return math.log((1 - self.probability) / self.probability)


@dataclass(frozen=True)
class MatchingGraph:
    num_detectors: int
    num_observables: int
    edges: tuple[Edge, ...]
    distance: np.ndarray  # (N+1, N+1) shortest-path lengths, boundary last
    path_observables: np.ndarray  # (N+1, N+1) uint64 masks along those paths
    sparse: pymatching.Matching | None = field(default=None, compare=False, repr=False)

    @property
    def boundary(self) -> int:
        return self.num_detectors


def build_graph(dem: DetectorErrorModel) -> MatchingGraph:
    """Collect graph-like components into weighted edges.

    Each decomposed mechanism contributes its probability to every one of
    its components. Parallel edges are merged with the independent-XOR rule
    in mechanism order; if they disagree on the observable mask, the mask of
    the most likely contribution is kept.
    """
    nd = dem.num_detectors
    acc: dict[tuple[int, int], list] = {}
    for m in dem.mechanisms:
        if len(m.detectors) > 2 and m.decomposition is None:
            raise DecodingError(f"mechanism D{list(m.detectors)} needs a decomposition")
        for dets, obs in m.components():
            if not dets:
                continue
            u = dets[0]
            v = dets[1] if len(dets) == 2 else nd
            mask = 0
            for o in obs:
                mask |= 1 << o
            key = (u, v)
            if key not in acc:
                acc[key] = [m.probability, {mask: m.probability}]
            else:
                entry = acc[key]
                entry[0] = merge_probability(entry[0], m.probability)
                entry[1][mask] = entry[1].get(mask, 0.0) + m.probability
    edges = []
    for (u, v), (q, masks) in sorted(acc.items()):
        if not 0 < q < 0.5:
            raise DecodingError(f"edge ({u}, {v}) has probability {q}; weights need 0 < q < 1/2")
        mask = max(sorted(masks), key=lambda k: masks[k])
        edges.append(Edge(u, v, q, mask))
    dist, pobs = _all_pairs(nd + 1, edges)
    return MatchingGraph(nd, dem.num_observables, tuple(edges), dist, pobs, _sparse(nd, edges))


def _sparse(nd: int, edges) -> pymatching.Matching:
    m = pymatching.Matching()
    for e in edges:
        ids = {k for k in range(64) if (e.observables >> k) & 1}
        if e.v == nd:
            m.add_boundary_edge(e.u, fault_ids=ids, weight=e.weight, error_probability=e.probability)
        else:
            m.add_edge(e.u, e.v, fault_ids=ids, weight=e.weight, error_probability=e.probability)
    if m.num_detectors < nd:
        m.set_boundary_nodes(set())
    return m


def _all_pairs(n: int, edges) -> tuple[np.ndarray, np.ndarray]:
    if not edges:
        dist = np.full((n, n), np.inf)
        np.fill_diagonal(dist, 0.0)
        return dist, np.zeros((n, n), dtype=np.uint64)
    rows = [e.u for e in edges] + [e.v for e in edges]
    cols = [e.v for e in edges] + [e.u for e in edges]
    w = [e.weight for e in edges] * 2
    g = csr_array((w, (rows, cols)), shape=(n, n))
    dist, pred = dijkstra(g, directed=False, return_predecessors=True)
    emask = {}
    for e in edges:
        emask[(e.u, e.v)] = e.observables
        emask[(e.v, e.u)] = e.observables
    pobs = np.zeros((n, n), dtype=np.uint64)
    for s in range(n):
        order = np.argsort(dist[s], kind="stable")
        row = pobs[s]
        ps = pred[s]
        for v in order:
            if v == s or not np.isfinite(dist[s, v]):
                continue
            p = ps[v]
            row[v] = row[p] ^ np.uint64(emask[(int(p), int(v))])
    return dist, pobs


# --- exact matching ---------------------------------------------------------------

@dataclass(frozen=True)
class Matching:
    weight: float
    pairs: tuple[tuple[int, int], ...]  # detector pairs; boundary appears as num_detectors
    observables: int


def _clusters(graph: MatchingGraph, defects: list[int]) -> list[list[int]]:
    b = graph.boundary
    d = graph.distance
    k = len(defects)
    parent = list(range(k))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(k):
        for j in range(i + 1, k):
            a, c = defects[i], defects[j]
            if d[a, c] < d[a, b] + d[c, b]:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(k):
        groups.setdefault(find(i), []).append(defects[i])
    return [groups[r] for r in sorted(groups)]


def _match_dp(graph: MatchingGraph, nodes: list[int]):
    d = graph.distance
    b = graph.boundary
    k = len(nodes)

    @lru_cache(maxsize=None)
    def best(mask: int):
        if mask == 0:
            return 0.0, ()
        i = (mask & -mask).bit_length() - 1
        rest = mask & ~(1 << i)
        u = nodes[i]
        w, p = best(rest)
        choice = (w + d[u, b], ((u, b),) + p)
        r = rest
        while r:
            j = (r & -r).bit_length() - 1
            r &= r - 1
            w2, p2 = best(rest & ~(1 << j))
            cand = w2 + d[u, nodes[j]]
            if cand < choice[0]:
                choice = (cand, ((u, nodes[j]),) + p2)
        return choice

    return best((1 << k) - 1)


def _match_blossom(graph: MatchingGraph, nodes: list[int]):
    """Blossom matching on the boundary-reduced complete graph.

    Two events sent to the boundary separately cost ``d(u, B) + d(v, B)``, so
    every pair edge carries ``min(d(u, v), d(u, B) + d(v, B))`` and a single
    virtual boundary vertex absorbs the odd event out. Ties prefer the
    boundary, as in :func:`_match_dp`.
    """
    d = graph.distance
    b = graph.boundary
    k = len(nodes)
    cost = {}
    for i in range(k):
        u = nodes[i]
        for j in range(i + 1, k):
            v = nodes[j]
            pair, via = d[u, v], d[u, b] + d[v, b]
            if np.isfinite(min(pair, via)):
                cost[(i, j)] = (pair, False) if pair < via else (via, True)
        if k % 2 and np.isfinite(d[u, b]):
            cost[(i, k)] = (d[u, b], True)
    finite = [c for c, _ in cost.values()]
    big = 1.0 + 2 * (max(finite) if finite else 0.0)
    g = nx.Graph()
    g.add_nodes_from(range(k + k % 2))
    for (i, j), (c, _) in cost.items():
        g.add_edge(i, j, weight=big - c)
    matched = nx.max_weight_matching(g, maxcardinality=True)
    if 2 * len(matched) != k + k % 2:
        raise DecodingError("flagged detectors cannot be perfectly matched")
    pairs = []
    total = 0.0
    for x, y in matched:
        i, j = min(x, y), max(x, y)
        c, via = cost[(i, j)]
        total += c
        if j == k:
            pairs.append((nodes[i], b))
        elif via:
            pairs.extend([(nodes[i], b), (nodes[j], b)])
        else:
            pairs.append((nodes[i], nodes[j]))
    return total, tuple(sorted(pairs))


def match(graph: MatchingGraph, defects) -> Matching:
    """Exact minimum-weight matching of ``defects`` (boundary usable freely)."""
    defects = sorted(int(x) for x in defects)
    total = 0.0
    pairs: list[tuple[int, int]] = []
    for cluster in _clusters(graph, defects):
        if len(cluster) <= DP_LIMIT:
            w, p = _match_dp(graph, cluster)
        else:
            w, p = _match_blossom(graph, cluster)
        if not np.isfinite(w):
            raise DecodingError(f"flagged detectors {cluster} cannot be matched")
        total += w
        pairs.extend(p)
    obs = 0
    for u, v in pairs:
        obs ^= int(graph.path_observables[u, v])
    return Matching(total, tuple(pairs), obs)


def brute_force_match(graph: MatchingGraph, defects, distance: np.ndarray | None = None) -> float:
    """Optimal total weight by enumerating every pairing; for testing only.

    ``distance`` may be supplied from an independent shortest-path routine.
    """
    d = graph.distance if distance is None else distance
    b = graph.boundary
    items = sorted(int(x) for x in defects)

    def rec(rest: tuple) -> float:
        if not rest:
            return 0.0
        u, tail = rest[0], rest[1:]
        best = d[u, b] + rec(tail)
        for i, v in enumerate(tail):
            best = min(best, d[u, v] + rec(tail[:i] + tail[i + 1:]))
        return best

    return rec(tuple(items))


# --- batch decoding ---------------------------------------------------------------

def _mask_to_bits(mask: int, n: int) -> np.ndarray:
    return np.array([(mask >> k) & 1 for k in range(n)], dtype=np.uint8)


def decode(graph: MatchingGraph, detector_bits) -> np.ndarray:
    """Predicted observable flips for one shot."""
    bits = np.asarray(detector_bits, dtype=bool)
    if bits.shape != (graph.num_detectors,):
        raise DecodingError("detector_bits length does not match the graph")
    return _mask_to_bits(match(graph, np.flatnonzero(bits)).observables, graph.num_observables)


def predict(graph: MatchingGraph, detectors: np.ndarray) -> np.ndarray:
    """Observable predictions (shots, num_observables) for a detector array."""
    dets = np.asarray(detectors, dtype=bool)
    if dets.ndim != 2 or dets.shape[1] != graph.num_detectors:
        raise DecodingError("detector array does not match the graph")
    shots = dets.shape[0]
    out = np.zeros(shots, dtype=np.uint64)
    counts = dets.sum(axis=1)
    b = graph.boundary
    po = graph.path_observables
    dist = graph.distance

    one = np.flatnonzero(counts == 1)
    if one.size:
        u = dets[one].argmax(axis=1)
        if not np.all(np.isfinite(dist[u, b])):
            raise DecodingError("isolated flagged detector cannot reach the boundary")
        out[one] = po[u, b]

    two = np.flatnonzero(counts == 2)
    if two.size:
        idx = np.nonzero(dets[two])[1].reshape(-1, 2)
        u, v = idx[:, 0], idx[:, 1]
        pair = dist[u, v]
        via = dist[u, b] + dist[v, b]
        if not np.all(np.isfinite(np.minimum(pair, via))):
            raise DecodingError("flagged detectors cannot be matched")
        # ties go to the boundary, as in the exact matcher
        out[two] = np.where(pair < via, po[u, v], po[u, b] ^ po[v, b])

    many = np.flatnonzero(counts > 2)
    if many.size:
        cols = np.nonzero(dets[many])[1].astype(np.int64)
        indptr = np.concatenate([[0], np.cumsum(counts[many])]).astype(np.int64)
        res, status = _kernel(indptr, cols, dist, po, b, KERNEL_DP_LIMIT)
        if np.any(status == 2):
            raise DecodingError("flagged detectors cannot be matched")
        big = np.flatnonzero(status == 1)
        if big.size:
            res[big] = _sparse_predict(graph, dets[many[big]])
        out[many] = res
    bits = (out[:, None] >> np.arange(graph.num_observables, dtype=np.uint64)) & np.uint64(1)
    return bits.astype(np.uint8)


def _sparse_predict(graph: MatchingGraph, dets: np.ndarray) -> np.ndarray:
    """Masks for shots whose clusters exceed the exact-DP limit.

    Uses the compiled sparse blossom, which matches on the decoding graph
    itself and is equivalent to matching on shortest-path distances.
    """
    if graph.sparse is None or graph.num_observables == 0:
        return np.array([match(graph, np.flatnonzero(r)).observables for r in dets], dtype=np.uint64)
    width = graph.sparse.num_detectors
    padded = np.zeros((dets.shape[0], width), dtype=np.uint8)
    padded[:, : graph.num_detectors] = dets
    pred = graph.sparse.decode_batch(padded)
    pred = pred[:, : graph.num_observables].astype(np.uint64)
    return (pred << np.arange(graph.num_observables, dtype=np.uint64)).sum(axis=1).astype(np.uint64)


def decode_batch(graph: MatchingGraph, block: SampleBlock) -> tuple[int, int]:
    """Number of shots whose predicted observables differ from the truth."""
    pred = predict(graph, block.detectors)
    wrong = np.any(pred != block.observables.astype(np.uint8), axis=1)
    return int(wrong.sum()), int(block.shots)


@numba.njit(cache=True)
def _kernel(indptr, defects, dist, pobs, boundary, dp_limit):
    """Exact matching for many shots: clusters, then subset DP per cluster.

    Mirrors :func:`_clusters` and :func:`_match_dp`, including tie-breaking.
    Status 1 marks shots holding a cluster larger than ``dp_limit`` and
    status 2 marks shots that cannot be matched at all.
    """
    shots = indptr.shape[0] - 1
    out = np.zeros(shots, dtype=np.uint64)
    status = np.zeros(shots, dtype=np.int64)
    f = np.empty(1 << dp_limit, dtype=np.float64)
    g = np.empty(1 << dp_limit, dtype=np.uint64)
    for s in range(shots):
        lo = indptr[s]
        k = indptr[s + 1] - lo
        parent = np.arange(k)
        for i in range(k):
            a = defects[lo + i]
            for j in range(i + 1, k):
                c = defects[lo + j]
                if dist[a, c] < dist[a, boundary] + dist[c, boundary]:
                    ri = i
                    while parent[ri] != ri:
                        ri = parent[ri]
                    rj = j
                    while parent[rj] != rj:
                        rj = parent[rj]
                    if ri != rj:
                        parent[ri] = rj
        roots = np.empty(k, dtype=np.int64)
        for i in range(k):
            r = i
            while parent[r] != r:
                r = parent[r]
            roots[i] = r
        total = np.uint64(0)
        done = np.zeros(k, dtype=np.bool_)
        members = np.empty(k, dtype=np.int64)
        for i in range(k):
            if done[i]:
                continue
            m = 0
            for j in range(k):
                if roots[j] == roots[i]:
                    members[m] = defects[lo + j]
                    done[j] = True
                    m += 1
            if m > dp_limit:
                status[s] = 1
                break
            f[0] = 0.0
            g[0] = np.uint64(0)
            for mask in range(1, 1 << m):
                low = 0
                while not (mask >> low) & 1:
                    low += 1
                rest = mask & ~(1 << low)
                u = members[low]
                best = f[rest] + dist[u, boundary]
                bo = g[rest] ^ pobs[u, boundary]
                for j in range(low + 1, m):
                    if (rest >> j) & 1:
                        r2 = rest & ~(1 << j)
                        cand = f[r2] + dist[u, members[j]]
                        if cand < best:
                            best = cand
                            bo = g[r2] ^ pobs[u, members[j]]
                f[mask] = best
                g[mask] = bo
            if not np.isfinite(f[(1 << m) - 1]):
                status[s] = 2
                break
            total ^= g[(1 << m) - 1]
        out[s] = total
    return out, status
