"""Small GF(2) helpers on ``uint8`` matrices."""

from __future__ import annotations

import numpy as np


def rref(matrix) -> tuple[np.ndarray, list[int]]:
    a = (np.asarray(matrix, dtype=np.uint8) & 1).copy()
    if a.ndim != 2:
        raise ValueError("expected a 2d matrix")
    rows, cols = a.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        hits = np.flatnonzero(a[r:, c])
        if hits.size == 0:
            continue
        p = r + hits[0]
        if p != r:
            a[[r, p]] = a[[p, r]]
        others = np.flatnonzero(a[:, c])
        others = others[others != r]
        a[others] ^= a[r]
        pivots.append(c)
        r += 1
    return a, pivots


def rank(matrix) -> int:
    m = np.asarray(matrix)
    if m.size == 0:
        return 0
    return len(rref(m)[1])


def in_rowspace(vector, matrix) -> bool:
    m = np.asarray(matrix, dtype=np.uint8)
    if m.size == 0:
        return not np.any(vector)
    return rank(np.vstack([m, vector])) == rank(m)


def symplectic_product(a_x, a_z, b_x, b_z) -> int:
    """0 when the two Paulis commute, 1 otherwise."""
    return int((np.dot(a_x, b_z) + np.dot(a_z, b_x)) % 2)
