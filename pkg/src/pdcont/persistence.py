"""Boundary matrices, left-to-right reduction, and persistence diagrams.

The reduction runs over exact rationals so pivots can never be spuriously
zeroed by rounding; a twist/clearing variant is provided as an independent
second route to the same pairing. Zero-length pairs (equal birth and death
radius) correspond to trivial summands of the structure decomposition and are
never reported as diagram points.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .filtration import FilteredComplex, build
from .geometry import Configuration


@dataclass(frozen=True)
class BoundaryMatrix:
    """Sparse columns over exact rationals, in filtration order."""

    size: int
    columns: tuple      # tuple of dict {row index: Fraction}, one per simplex
    dims: tuple         # simplex dimension per index

    def column(self, j):
        return self.columns[j]


def boundary_matrix(fc: FilteredComplex) -> BoundaryMatrix:
    """Matrix of the boundary map with the (-1)^k incidence signs."""
    index = fc.index_of()
    columns = []
    for j, entry in enumerate(fc.entries):
        col = {}
        if entry.dim > 0:
            for k in range(len(entry.key)):
                face = entry.key[:k] + entry.key[k + 1:]
                i = index[face]
                col[i] = Fraction(-1 if k % 2 else 1)
        columns.append(col)
    return BoundaryMatrix(len(fc.entries), tuple(columns), tuple(e.dim for e in fc.entries))


@dataclass(frozen=True)
class Reduction:
    pairs: tuple        # (i, j) pivot pairs, i < j
    essentials: tuple   # unpaired indices


def _reduce_column(col, pivot_owner, columns):
    """Left-to-right eliminate ``col`` until its pivot is new or it is zero."""
    while col:
        piv = max(col)
        owner = pivot_owner.get(piv)
        if owner is None:
            return piv
        other = columns[owner]
        factor = col[piv] / other[piv]
        for i, v in other.items():
            new = col.get(i, Fraction(0)) - factor * v
            if new:
                col[i] = new
            else:
                col.pop(i, None)
    return None


def reduce_boundary(b: BoundaryMatrix) -> Reduction:
    """Standard left-to-right column reduction (exact rational arithmetic)."""
    columns = [dict(c) for c in b.columns]
    pivot_owner = {}
    pairs = []
    for j in range(b.size):
        piv = _reduce_column(columns[j], pivot_owner, columns)
        if piv is not None:
            pivot_owner[piv] = j
            pairs.append((piv, j))
    used = set(i for p in pairs for i in p)
    essentials = tuple(i for i in range(b.size) if i not in used)
    return Reduction(tuple(pairs), essentials)


def reduce_boundary_twist(b: BoundaryMatrix) -> Reduction:
    """Clearing variant: process dimensions top-down, zeroing paired creators.

    Produces the identical pair set as ``reduce_boundary``; kept as an
    independent implementation for cross-checking.
    """
    columns = [dict(c) for c in b.columns]
    pivot_owner = {}
    pairs = []
    max_dim = max(b.dims) if b.dims else 0
    for dim in range(max_dim, 0, -1):
        for j in range(b.size):
            if b.dims[j] != dim or not columns[j]:
                continue
            piv = _reduce_column(columns[j], pivot_owner, columns)
            if piv is not None:
                pivot_owner[piv] = j
                pairs.append((piv, j))
                columns[piv] = {}  # cleared: a pivot row is a known cycle
    pairs.sort(key=lambda ij: ij[1])
    used = set(i for p in pairs for i in p)
    essentials = tuple(i for i in range(b.size) if i not in used)
    return Reduction(tuple(pairs), essentials)


# --- diagram extraction ---------------------------------------------------------

@dataclass(frozen=True)
class FinitePair:
    birth: float
    death: float
    birth_index: int
    death_index: int
    birth_key: tuple
    death_key: tuple
    birth_attaching: tuple
    death_attaching: tuple

    @property
    def persistence(self) -> float:
        return self.death - self.birth


@dataclass(frozen=True)
class EssentialClass:
    birth: float
    birth_index: int
    birth_key: tuple
    birth_attaching: tuple


@dataclass(frozen=True)
class PersistenceData:
    """Diagram of one homology dimension, truncated at distance eps from the diagonal."""

    kind: str
    dim: int
    epsilon: float
    finite: tuple        # FinitePair, sorted by (birth, death) on construction
    essential: tuple     # EssentialClass

    @property
    def m(self) -> int:
        return 2 * len(self.finite) + len(self.essential)

    def vector(self, include_essential: bool = True) -> np.ndarray:
        v = []
        for p in self.finite:
            v.extend((p.birth, p.death))
        if include_essential:
            v.extend(e.birth for e in self.essential)
        return np.array(v)

    def pairs(self):
        return [(p.birth, p.death) for p in self.finite]

    def to_json(self) -> str:
        return json.dumps(
            {
                "dim": self.dim,
                "epsilon": float(f"{self.epsilon:.9g}"),
                "pairs": [
                    [float(f"{p.birth:.9g}"), float(f"{p.death:.9g}")]
                    for p in self.finite
                ],
                "essential": [float(f"{e.birth:.9g}") for e in self.essential],
            }
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("birth,death\n")
        for p in self.finite:
            buf.write(f"{p.birth:.9g},{p.death:.9g}\n")
        for e in self.essential:
            buf.write(f"{e.birth:.9g},inf\n")
        return buf.getvalue()


def persistence_data(
    reduction: Reduction, fc: FilteredComplex, dim: int, epsilon: float = 0.0
) -> PersistenceData:
    """Select the dimension-``dim`` pairs, dropping those within eps of the diagonal."""
    if dim < 0 or epsilon < 0:
        raise ValueError("dim and epsilon must be nonnegative")
    entries = fc.entries
    finite = []
    for i, j in reduction.pairs:
        if entries[i].dim != dim:
            continue
        b, d = entries[i].radius, entries[j].radius
        if b >= d:
            continue  # zero-length interval: trivial summand
        if (d - b) / 2.0 < epsilon:
            continue
        finite.append(
            FinitePair(
                b, d, i, j,
                entries[i].key, entries[j].key,
                entries[i].attaching, entries[j].attaching,
            )
        )
    finite.sort(key=lambda p: (p.birth, p.death, p.birth_key))
    essential = [
        EssentialClass(entries[i].radius, i, entries[i].key, entries[i].attaching)
        for i in reduction.essentials
        if entries[i].dim == dim
    ]
    essential.sort(key=lambda e: (e.birth, e.birth_key))
    return PersistenceData(fc.kind, dim, epsilon, tuple(finite), tuple(essential))


def diagram(
    config: Configuration,
    kind: str,
    dim: int,
    epsilon: float = 0.0,
    max_dim: int | None = None,
) -> PersistenceData:
    """Build the filtration, reduce, and extract one diagram in one call."""
    if max_dim is None:
        max_dim = dim + 1
    fc = build(config, kind, max_dim=max_dim)
    red = reduce_boundary(boundary_matrix(fc))
    return persistence_data(red, fc, dim, epsilon)


def betti_numbers(config: Configuration, kind: str, up_to_dim: int = 2):
    """Betti numbers of the saturated complex (essential-class counts)."""
    fc = build(config, kind, max_dim=up_to_dim + 1)
    red = reduce_boundary(boundary_matrix(fc))
    out = []
    for dim in range(up_to_dim + 1):
        pd = persistence_data(red, fc, dim, 0.0)
        out.append(len(pd.essential))
    return tuple(out)
