"""Rotated planar code patches for memory and stability experiments.

Data qubits sit on integer points ``(x, y)`` with ``y`` growing downwards.
A plaquette ``(a, b)`` is centred on ``(a + 1/2, b + 1/2)`` and has corners
NW ``(a, b)``, NE ``(a+1, b)``, SW ``(a, b+1)``, SE ``(a+1, b+1)``.

Memory patches put weight-2 X plaquettes on the left/right boundaries and
weight-2 Z plaquettes on the top/bottom boundaries, so the logical Z is a
vertical column and the logical X a horizontal row. Stability patches carry
X plaquettes on all four boundaries; the X stabilisers multiply to the
identity.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import gf2

VARIANTS = ("standard", "spreading", "squeezing")
CORNERS = ("NW", "NE", "SW", "SE")
_OFFSETS = {"NW": (0, 0), "NE": (1, 0), "SW": (0, 1), "SE": (1, 1)}
HALF = Fraction(1, 2)
QUARTER = Fraction(1, 4)


class LayoutError(ValueError):
    pass


@dataclass(frozen=True)
class Stabiliser:
    pauli_type: str
    support: tuple[int, ...]
    auxiliaries: tuple[int, ...]
    corners: dict = field(compare=False, hash=False)
    centre: tuple[Fraction, Fraction]
    spread_partner: int | None = None

    @property
    def weight(self) -> int:
        return len(self.support)


@dataclass(frozen=True)
class Patch:
    experiment: str  # "memory" | "stability"
    variant: str
    size: int
    basis: str
    coords: dict = field(compare=False, hash=False)
    data_qubits: tuple[int, ...] = ()
    aux_qubits: tuple[int, ...] = ()
    helper_qubits: tuple[int, ...] = ()
    stabilisers: tuple[Stabiliser, ...] = ()
    logical_support: tuple[int, ...] = ()

    @property
    def num_qubits(self) -> int:
        return len(self.coords)

    def stabilisers_of(self, pauli_type: str) -> list[Stabiliser]:
        return [s for s in self.stabilisers if s.pauli_type == pauli_type]

    def code_qubits(self) -> tuple[int, ...]:
        return self.data_qubits + self.helper_qubits

    def symplectic_matrix(self) -> tuple[np.ndarray, np.ndarray]:
        """Rows are stabilisers; returns the (X part, Z part) over code qubits."""
        cols = {q: i for i, q in enumerate(self.code_qubits())}
        n = len(cols)
        xs = np.zeros((len(self.stabilisers), n), dtype=np.uint8)
        zs = np.zeros_like(xs)
        for r, s in enumerate(self.stabilisers):
            target = xs if s.pauli_type == "X" else zs
            for q in s.support:
                target[r, cols[q]] = 1
        return xs, zs

    def to_json(self) -> str:
        def c(v):
            return [str(x) for x in v]

        return json.dumps({
            "experiment": self.experiment,
            "variant": self.variant,
            "size": self.size,
            "basis": self.basis,
            "qubits": [{"index": q, "coord": c(self.coords[q]), "role": self.role(q)}
                       for q in sorted(self.coords)],
            "stabilisers": [{
                "type": s.pauli_type,
                "centre": c(s.centre),
                "support": list(s.support),
                "auxiliaries": list(s.auxiliaries),
                "spread_partner": s.spread_partner,
            } for s in self.stabilisers],
            "helper_pairs": [[s.auxiliaries[0], s.spread_partner] for s in self.stabilisers
                             if s.spread_partner in set(self.helper_qubits)],
            "logical_support": list(self.logical_support),
        }, indent=1)

    def role(self, q: int) -> str:
        if q in self.data_qubits:
            return "data"
        if q in self.helper_qubits:
            return "helper"
        return "aux"


def _plaquettes(size: int, experiment: str):
    """Yield ``(a, b, pauli_type)`` for the stabilisers of the patch."""
    for b in range(-1, size):
        for a in range(-1, size):
            parity = (a + b) % 2
            if experiment == "memory":
                ptype = "X" if parity == 0 else "Z"
            else:
                ptype = "X" if parity == 1 else "Z"
            on_lr = a in (-1, size - 1)
            on_tb = b in (-1, size - 1)
            if on_lr and on_tb:
                continue
            if on_lr and ptype != "X":
                continue
            if on_tb and ptype != ("Z" if experiment == "memory" else "X"):
                continue
            yield a, b, ptype


def _build(experiment: str, size: int, variant: str, basis: str) -> Patch:
    if variant not in VARIANTS:
        raise LayoutError(f"unknown variant {variant!r}")
    data_coords = [(x, y) for y in range(size) for x in range(size)]
    coords: dict[int, tuple] = {}
    data_index = {}
    for i, (x, y) in enumerate(data_coords):
        data_index[(x, y)] = i
        coords[i] = (Fraction(x), Fraction(y))
    next_index = len(coords)
    plaq = list(_plaquettes(size, experiment))

    aux_of = []
    for a, b, ptype in plaq:
        cx, cy = a + HALF, b + HALF
        if variant == "squeezing":
            if ptype == "X":
                spots = [(cx - QUARTER, cy), (cx + QUARTER, cy)]
            else:
                spots = [(cx, cy - QUARTER), (cx, cy + QUARTER)]
        else:
            spots = [(cx, cy)]
        ids = []
        for spot in spots:
            coords[next_index] = spot
            ids.append(next_index)
            next_index += 1
        aux_of.append(tuple(ids))

    helpers = []
    stabs = []
    for (a, b, ptype), auxes in zip(plaq, aux_of):
        corners = {}
        for name in CORNERS:
            dx, dy = _OFFSETS[name]
            q = data_index.get((a + dx, b + dy))
            if q is not None:
                corners[name] = q
        partner = None
        if variant == "spreading":
            if "NW" in corners:
                partner = corners["NW"]
            else:
                partner = next_index
                coords[partner] = (Fraction(a), Fraction(b))
                helpers.append(partner)
                corners["NW"] = partner
                next_index += 1
        support = tuple(corners[n] for n in CORNERS if n in corners)
        stabs.append(Stabiliser(ptype, support, auxes, corners, (a + HALF, b + HALF), partner))

    if experiment == "memory":
        if basis == "X":
            logical = tuple(data_index[(x, 0)] for x in range(size))
        else:
            logical = tuple(data_index[(0, y)] for y in range(size))
    else:
        logical = ()
    aux = tuple(q for ids in aux_of for q in ids)
    return Patch(experiment, variant, size, basis, coords, tuple(range(len(data_coords))),
                 aux, tuple(helpers), tuple(stabs), logical)


def memory_patch(d: int, variant: str = "standard", basis: str = "Z") -> Patch:
    """Distance-``d`` rotated planar code memory patch."""
    if not isinstance(d, (int, np.integer)) or d < 3 or d % 2 == 0:
        raise LayoutError("memory distance must be an odd integer >= 3")
    if basis not in ("X", "Z"):
        raise LayoutError("basis must be 'X' or 'Z'")
    return _build("memory", int(d), variant, basis)


def stability_patch(w: int, variant: str = "standard") -> Patch:
    """``w x w`` stability patch with over-determined X stabilisers."""
    if not isinstance(w, (int, np.integer)) or w < 4 or w % 2:
        raise LayoutError("stability width must be an even integer >= 4")
    return _build("stability", int(w), variant, "Z")


def connectivity(patch: Patch) -> set[frozenset]:
    """Qubit pairs that need a coupler."""
    edges: set[frozenset] = set()
    for s in patch.stabilisers:
        if len(s.auxiliaries) == 2:
            a1, a2 = s.auxiliaries
            edges.add(frozenset((a1, a2)))
            for name, q in s.corners.items():
                edges.add(frozenset((squeeze_aux_for(s, name), q)))
        else:
            for q in s.support:
                edges.add(frozenset((s.auxiliaries[0], q)))
    return edges


def squeeze_aux_for(stab: Stabiliser, corner: str) -> int:
    """Physical auxiliary that couples to ``corner`` in the two-auxiliary layout."""
    a1, a2 = stab.auxiliaries
    if stab.pauli_type == "Z":
        return a1 if corner in ("NW", "NE") else a2
    return a1 if corner in ("NW", "SW") else a2


def degrees(edges) -> dict[int, int]:
    out: dict[int, int] = {}
    for e in edges:
        for q in e:
            out[q] = out.get(q, 0) + 1
    return out


def commutation_violations(patch: Patch) -> list[tuple[int, int]]:
    xs, zs = patch.symplectic_matrix()
    bad = []
    for i in range(len(patch.stabilisers)):
        for j in range(i + 1, len(patch.stabilisers)):
            if gf2.symplectic_product(xs[i], zs[i], xs[j], zs[j]):
                bad.append((i, j))
    return bad
