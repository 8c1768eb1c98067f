"""3D Delaunay triangulation with exact empty-circumsphere verification.

The triangulation itself is delegated to Qhull (scipy.spatial.Delaunay); every
tetrahedron is then verified against the empty-circumsphere property with a
floating-point filter backed by exact rational arithmetic, so silent
near-degeneracy cannot slip through. Exact cospherical 5-tuples are an error,
never perturbed away silently.

Point clouds that span fewer than 3 dimensions are handled for M <= 3 (vertex,
edge, triangle); larger coplanar clouds are rejected.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.spatial import Delaunay as _SciPyDelaunay
from scipy.spatial import QhullError

from .errors import DegenerateInput, GeneralPositionViolation
from .geometry import Configuration, simplex_key

# Hadamard-style relative filter: float determinants smaller than this times
# the row-norm product are re-evaluated exactly.
_FILTER_REL = 1e-10


def _faces(key, dim):
    return [tuple(c) for c in itertools.combinations(key, dim + 1)]


@dataclass(frozen=True)
class DelaunayComplex:
    """Simplices of the Delaunay triangulation, closed under faces."""

    points: np.ndarray
    tetrahedra: tuple
    by_dim: dict = field(repr=False)
    cofacets: dict = field(repr=False)   # triangle key -> tetrahedra containing it

    def simplices(self, dim: int):
        return self.by_dim.get(dim, ())

    def all_simplices(self):
        for dim in sorted(self.by_dim):
            yield from self.by_dim[dim]

    def __contains__(self, key):
        key = tuple(key)
        return key in set(self.by_dim.get(len(key) - 1, ()))

    def dump_text(self) -> str:
        """Plain-text listing of the tetrahedra (one per line) for inspection."""
        lines = [f"# delaunay complex: {self.points.shape[0]} points, "
                 f"{len(self.tetrahedra)} tetrahedra"]
        for tet in self.tetrahedra:
            corner = " ".join(
                "(" + " ".join(f"{x:.9g}" for x in self.points[v]) + ")" for v in tet
            )
            lines.append(f"{tet[0]} {tet[1]} {tet[2]} {tet[3]}  {corner}")
        return "\n".join(lines)


def _close_down(top_simplices, n_points):
    by_dim = {0: tuple((i,) for i in range(n_points))}
    seen = {1: set(), 2: set(), 3: set()}
    for key in top_simplices:
        d = len(key) - 1
        for dim in range(1, d + 1):
            seen[dim].update(_faces(key, dim))
    for dim in (1, 2, 3):
        if seen[dim]:
            by_dim[dim] = tuple(sorted(seen[dim]))
    return by_dim


def _solve_small(a, b):
    """Solve a k x k system for k = 1, 2, 3 by Cramer's rule."""
    k = len(b)
    if k == 1:
        return np.array([b[0] / a[0, 0]])
    if k == 2:
        det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
        return np.array(
            [
                (b[0] * a[1, 1] - b[1] * a[0, 1]) / det,
                (a[0, 0] * b[1] - a[1, 0] * b[0]) / det,
            ]
        )
    return np.linalg.solve(a, b)


def circumsphere(pts):
    """Center and radius of the smallest sphere through 2..4 points.

    The center lies in the affine span of the points (solved via the Gram
    system); this is the geometric counterpart of geometry.circumradius.
    """
    pts = np.asarray(pts, dtype=float)
    v0 = pts[0]
    rel = pts[1:] - v0
    if rel.shape[0] == 0:
        return v0.copy(), 0.0
    gram = rel @ rel.T
    rhs = 0.5 * np.einsum("ij,ij->i", rel, rel)
    coeff = _solve_small(gram, rhs)
    center = v0 + rel.T @ coeff
    return center, float(np.linalg.norm(center - pts[0]))


# --- exact predicates -----------------------------------------------------------

def _det_exact(rows):
    """Exact determinant of a small matrix of Fractions (cofactor expansion)."""
    n = len(rows)
    if n == 1:
        return rows[0][0]
    if n == 2:
        return rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0]
    total = Fraction(0)
    sign = 1
    for j in range(n):
        if rows[0][j]:
            minor = [r[:j] + r[j + 1:] for r in rows[1:]]
            total += sign * rows[0][j] * _det_exact(minor)
        sign = -sign
    return total


def orient3d_exact(a, b, c, d):
    """Sign of det[b-a; c-a; d-a], computed in exact rational arithmetic."""
    rows = []
    for p in (b, c, d):
        rows.append([Fraction(p[k]) - Fraction(a[k]) for k in range(3)])
    det = _det_exact(rows)
    return (det > 0) - (det < 0)


def insphere_exact(a, b, c, d, p):
    """Exact in-sphere test of p against the circumsphere of tetra (a,b,c,d).

    Returns +1 when p is strictly inside, -1 when strictly outside, 0 when
    cospherical. With rows (vertex - p, |vertex - p|^2) the determinant of a
    positively oriented tetrahedron is negative for interior p.
    """
    rows = []
    for q in (a, b, c, d):
        rel = [Fraction(q[k]) - Fraction(p[k]) for k in range(3)]
        rows.append(rel + [rel[0] ** 2 + rel[1] ** 2 + rel[2] ** 2])
    det = _det_exact(rows)
    orient = orient3d_exact(a, b, c, d)
    if orient == 0:
        raise DegenerateInput("flat tetrahedron in in-sphere test")
    val = -det * orient
    return (val > 0) - (val < 0)


def _verify_empty(points, tets):
    """Check every tetra circumsphere is empty; exact fallback near ties."""
    pts = np.asarray(points, dtype=float)
    tet_pts = pts[np.asarray(tets)]  # (T, 4, 3)
    orient = np.linalg.det(tet_pts[:, 1:] - tet_pts[:, :1])
    orient_sign = np.sign(orient)
    for t, tet in enumerate(tets):
        s = orient_sign[t]
        if s == 0:
            s = orient3d_exact(*(pts[v] for v in tet))
        if s == 0:
            raise GeneralPositionViolation(
                f"degenerate (coplanar) Delaunay tetrahedron {tet}", tet
            )
        orient_sign[t] = s
    n = pts.shape[0]
    for t, tet in enumerate(tets):
        member = np.zeros(n, dtype=bool)
        member[list(tet)] = True
        others = np.nonzero(~member)[0]
        if others.size == 0:
            continue
        # lifted rows per query point: tetra vertices relative to the query
        rel = tet_pts[t][None, :, :] - pts[others][:, None, :]  # (O, 4, 3)
        lift = np.concatenate(
            [rel, np.einsum("oij,oij->oi", rel, rel)[..., None]], axis=2
        )
        vals = -np.linalg.det(lift) * orient_sign[t]
        bounds = _FILTER_REL * np.prod(np.linalg.norm(lift, axis=2), axis=1)
        suspect = np.abs(vals) <= bounds
        inside = vals > 0
        for o_idx in np.nonzero(suspect | inside)[0]:
            p = int(others[o_idx])
            sign = insphere_exact(*(pts[v] for v in tet), pts[p])
            if sign == 0:
                raise GeneralPositionViolation(
                    f"points {tuple(tet) + (p,)} are exactly cospherical",
                    tuple(tet) + (p,),
                )
            if sign > 0:
                raise GeneralPositionViolation(
                    f"point {p} lies inside the circumsphere of {tet} "
                    "(input is cospherical beyond float resolution)",
                    tuple(tet) + (p,),
                )


def _affine_dim(pts, rel_tol=1e-12):
    rel = pts - pts[0]
    if rel.shape[0] == 1:
        return 0
    sv = np.linalg.svd(rel, compute_uv=False)
    scale = sv[0] if sv.size and sv[0] > 0 else 1.0
    return int(np.sum(sv > rel_tol * scale))


def delaunay3(config: Configuration, verify: bool = True) -> DelaunayComplex:
    """Delaunay triangulation of the cloud, verified empty-circumsphere exact.

    M = 1, 2, 3 clouds yield the trivial complex of the points themselves
    (vertex / edge / triangle). M >= 4 requires non-coplanar points.
    """
    pts = np.asarray(config.points, dtype=float)
    m = pts.shape[0]
    if m <= 3:
        dim = _affine_dim(pts)
        if m == 1:
            top = [(0,)]
        elif m == 2:
            if dim == 0:
                raise DegenerateInput("coincident points")
            top = [(0, 1)]
        else:
            if dim < 2:
                raise DegenerateInput("collinear 3-point cloud")
            top = [(0, 1, 2)]
        by_dim = _close_down(top, m)
        return DelaunayComplex(pts, (), by_dim, {})

    if m == 4:
        # the Delaunay complex of four non-coplanar points is the tetrahedron
        orient = float(np.linalg.det(pts[1:] - pts[0]))
        scale = np.abs(pts - pts.mean(axis=0)).max() or 1.0
        if abs(orient) <= 1e-9 * scale**3:
            if orient3d_exact(*pts) == 0:
                raise DegenerateInput("four coplanar points")
        tets = [(0, 1, 2, 3)]
    else:
        try:
            tri = _SciPyDelaunay(pts)
        except QhullError as exc:
            raise DegenerateInput(
                f"triangulation failed: coplanar or degenerate input ({exc})"
            )
        tets = sorted(set(simplex_key(s) for s in tri.simplices))
        if verify:
            _verify_empty(pts, tets)
    by_dim = _close_down(tets, m)
    cofacets = {}
    for tet in tets:
        for tri_key in _faces(tet, 2):
            cofacets.setdefault(tri_key, []).append(tet)
    cofacets = {k: tuple(v) for k, v in cofacets.items()}
    return DelaunayComplex(pts, tuple(tets), by_dim, cofacets)


def is_attaching(simplex, dc: DelaunayComplex) -> bool:
    """True iff the smallest circumsphere of the simplex contains no cloud point."""
    key = tuple(simplex)
    if len(key) == 1:
        return True
    pts = dc.points
    center, radius = circumsphere(pts[list(key)])
    member = np.zeros(pts.shape[0], dtype=bool)
    member[list(key)] = True
    d = np.linalg.norm(pts[~member] - center, axis=1)
    return bool(np.all(d >= radius))
