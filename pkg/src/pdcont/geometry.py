"""Point clouds in R^3, rigid-motion gauge coordinates, and circumradius formulas.

The circumradius of a simplex (the radius of the smallest sphere through its
vertices) is computed from determinant formulas in the lifted coordinates
(1, x, y, z, x^2+y^2+z^2); gradients come from cofactor differentiation of the
same determinants, so analytic derivatives and values share one code path.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateSimplex, GaugeViolation

SimplexKey = tuple  # sorted tuple of 0-based vertex indices, length 1..4


def simplex_key(vertices) -> SimplexKey:
    """Normalize an iterable of vertex indices into a sorted tuple key."""
    key = tuple(sorted(int(v) for v in vertices))
    if len(set(key)) != len(key):
        raise ValueError(f"repeated vertex in simplex {key}")
    return key


def _free_slots(n_points: int, gauge: bool):
    """(point, axis) pairs of the free coordinates, in packing order."""
    if not gauge:
        return [(i, a) for i in range(n_points) for a in range(3)]
    slots = [(1, 0), (2, 0), (2, 1)]
    slots += [(i, a) for i in range(3, n_points) for a in range(3)]
    return slots


@dataclass(frozen=True)
class Configuration:
    """An ordered point cloud in R^3 with an optional rigid-motion gauge.

    With the gauge active, point 0 is pinned at the origin, point 1 moves only
    along the x-axis and point 2 only in the xy-plane, leaving 3M-6 free
    coordinates. Without it all 3M coordinates are free.
    """

    points: np.ndarray
    gauge: bool = True

    def __post_init__(self):
        pts = np.ascontiguousarray(np.asarray(self.points, dtype=float))
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ValueError("points must be an (M, 3) array")
        if pts.shape[0] < 1:
            raise ValueError("need at least one point")
        if self.gauge and pts.shape[0] < 3:
            raise ValueError("gauge requires M >= 3")
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    @property
    def free_dim(self) -> int:
        return 3 * self.n_points - 6 if self.gauge else 3 * self.n_points

    def free_slots(self):
        return _free_slots(self.n_points, self.gauge)

    def pack(self) -> np.ndarray:
        """Free coordinates as a vector, in point order (x1, x2, y2, x3, ...)."""
        if self.gauge:
            fixed = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)]
            for i, a in fixed:
                if self.points[i, a] != 0.0:
                    raise GaugeViolation(
                        f"point {i} coordinate {'xyz'[a]} = {self.points[i, a]!r} "
                        "is pinned by the gauge and must be zero"
                    )
        return np.array([self.points[i, a] for i, a in self.free_slots()])

    def with_vector(self, vec) -> "Configuration":
        """New configuration with the free coordinates replaced by ``vec``."""
        vec = np.asarray(vec, dtype=float)
        slots = self.free_slots()
        if vec.shape != (len(slots),):
            raise ValueError(f"expected vector of length {len(slots)}, got {vec.shape}")
        pts = np.zeros_like(self.points)
        if not self.gauge:
            return Configuration(vec.reshape(-1, 3), gauge=False)
        for (i, a), x in zip(slots, vec):
            pts[i, a] = x
        return Configuration(pts, gauge=True)

    @classmethod
    def from_vector(cls, vec, gauge: bool = True) -> "Configuration":
        vec = np.asarray(vec, dtype=float)
        if gauge:
            if (vec.size + 6) % 3 != 0 or vec.size < 3:
                raise ValueError(f"gauged vector length {vec.size} is not 3M-6")
            m = (vec.size + 6) // 3
            return cls(np.zeros((m, 3)), gauge=True).with_vector(vec)
        if vec.size % 3 != 0:
            raise ValueError(f"vector length {vec.size} is not 3M")
        return cls(vec.reshape(-1, 3), gauge=False)


def pack(config: Configuration) -> np.ndarray:
    return config.pack()


def unpack(vec, gauge: bool = True) -> Configuration:
    return Configuration.from_vector(vec, gauge=gauge)


def to_gauge_frame(points) -> Configuration:
    """Rigid motion bringing a cloud into the gauge frame.

    Point 0 goes to the origin, point 1 onto the positive x-axis, point 2 into
    the upper xy-half-plane; the frame is right-handed. Clouds already in the
    frame are reproduced exactly.
    """
    pts = np.asarray(points, dtype=float)
    if pts.shape[0] < 3:
        raise ValueError("gauge frame needs at least three points")
    rel = pts - pts[0]
    e1 = rel[1]
    n1 = np.linalg.norm(e1)
    if n1 == 0.0:
        raise GaugeViolation("points 0 and 1 coincide; cannot orient the x-axis")
    e1 = e1 / n1
    e2 = rel[2] - (rel[2] @ e1) * e1
    n2 = np.linalg.norm(e2)
    if n2 == 0.0:
        raise GaugeViolation("points 0, 1, 2 are collinear; cannot orient the xy-plane")
    e2 = e2 / n2
    e3 = np.cross(e1, e2)
    new_pts = rel @ np.stack([e1, e2, e3]).T
    # pinned coordinates are exact zeros by construction
    new_pts[0] = 0.0
    new_pts[1, 1:] = 0.0
    new_pts[2, 2] = 0.0
    return Configuration(new_pts, gauge=True)


# --- circumradius via lifted determinants -----------------------------------
#
# Column codes for the lifted point rows: 0 -> 1, 1..3 -> x,y,z, 4 -> |p|^2.

def _lifted(pts: np.ndarray, codes) -> np.ndarray:
    k = pts.shape[0]
    out = np.empty((k, len(codes)))
    for j, c in enumerate(codes):
        if c == 0:
            out[:, j] = 1.0
        elif c == 4:
            out[:, j] = np.einsum("ij,ij->i", pts, pts)
        else:
            out[:, j] = pts[:, c - 1]
    return out


def _det2(a):
    return a[0][0] * a[1][1] - a[0][1] * a[1][0]


def _det3(a):
    return (
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    )


def _minor(a, i, j):
    return [[a[r][c] for c in range(len(a)) if c != j] for r in range(len(a)) if r != i]


def _cofactors(a):
    k = len(a)
    if k == 2:
        return [[a[1][1], -a[1][0]], [-a[0][1], a[0][0]]]
    if k == 3:
        return [
            [(-1.0) ** (i + j) * _det2(_minor(a, i, j)) for j in range(3)]
            for i in range(3)
        ]
    return [
        [(-1.0) ** (i + j) * _det3(_minor(a, i, j)) for j in range(4)]
        for i in range(4)
    ]


def _det_grad(pts: np.ndarray, codes):
    """Determinant of the lifted matrix and its gradient w.r.t. coordinates.

    Returns (det, grad) with grad of shape (k, 3). Uses the cofactor rule
    d det / d a_ij = C_ij together with d|p|^2/dp = 2p for code-4 columns.
    """
    a = _lifted(pts, codes).tolist()
    k = len(a)
    cof = _cofactors(a)
    det = sum(a[0][j] * cof[0][j] for j in range(k))
    grad = np.zeros((k, 3))
    for j, c in enumerate(codes):
        if c == 0:
            continue
        if c == 4:
            for i in range(k):
                grad[i] += cof[i][j] * 2.0 * pts[i]
        else:
            for i in range(k):
                grad[i, c - 1] += cof[i][j]
    return det, grad


def _sq_edge(pts, i, j):
    """|p_i - p_j|^2 and its gradient rows (only rows i and j are nonzero)."""
    d = pts[i] - pts[j]
    val = float(d @ d)
    grad = np.zeros((pts.shape[0], 3))
    grad[i] = 2.0 * d
    grad[j] = -2.0 * d
    return val, grad


def _simplex_scale(pts: np.ndarray) -> float:
    diff = pts[:, None, :] - pts[None, :, :]
    return float(np.sqrt(np.max(np.einsum("ijk,ijk->ij", diff, diff))))


def _rho_sq_grad(pts: np.ndarray, denom_rel_tol: float):
    """Squared circumradius and its gradient for k = 2, 3, 4 vertices."""
    k = pts.shape[0]
    scale = _simplex_scale(pts)
    if k == 2:
        num, dnum = _sq_edge(pts, 0, 1)
        if num == 0.0:
            raise DegenerateSimplex("coincident points in 1-simplex")
        return num / 4.0, dnum / 4.0
    if k == 3:
        e01, g01 = _sq_edge(pts, 0, 1)
        e12, g12 = _sq_edge(pts, 1, 2)
        e20, g20 = _sq_edge(pts, 2, 0)
        num = e01 * e12 * e20
        dnum = g01 * (e12 * e20) + g12 * (e01 * e20) + g20 * (e01 * e12)
        s = 0.0
        ds = np.zeros((3, 3))
        for codes in ((2, 3, 0), (1, 3, 0), (1, 2, 0)):
            m, dm = _det_grad(pts, codes)
            s += m * m
            ds += 2.0 * m * dm
        # sqrt(s) is twice the triangle area
        if np.sqrt(s) <= denom_rel_tol * scale**2:
            raise DegenerateSimplex("collinear points in 2-simplex")
        den = 4.0 * s
        dden = 4.0 * ds
        val = num / den
        grad = (dnum * den - num * dden) / den**2
        return val, grad
    if k == 4:
        m1230, d1230 = _det_grad(pts, (1, 2, 3, 0))
        if abs(m1230) <= denom_rel_tol * scale**3:
            raise DegenerateSimplex("coplanar points in 3-simplex")
        m1234, d1234 = _det_grad(pts, (1, 2, 3, 4))
        num = 4.0 * m1230 * m1234
        dnum = 4.0 * (d1230 * m1234 + m1230 * d1234)
        for codes in ((2, 3, 4, 0), (1, 3, 4, 0), (1, 2, 4, 0)):
            m, dm = _det_grad(pts, codes)
            num += m * m
            dnum += 2.0 * m * dm
        den = 4.0 * m1230 * m1230
        dden = 8.0 * m1230 * d1230
        val = num / den
        grad = (dnum * den - num * dden) / den**2
        return val, grad
    raise ValueError(f"circumradius defined for 2..4 vertices, got {k}")


def circumradius(pts, denom_rel_tol: float = 1e-12) -> float:
    """Radius of the smallest sphere through 2, 3, or 4 points in R^3."""
    pts = np.asarray(pts, dtype=float)
    val, _ = _rho_sq_grad(pts, denom_rel_tol)
    return float(np.sqrt(val))


def circumradius_gradient(pts, denom_rel_tol: float = 1e-12) -> np.ndarray:
    """Gradient of the circumradius w.r.t. every vertex coordinate, shape (k, 3)."""
    pts = np.asarray(pts, dtype=float)
    val, grad = _rho_sq_grad(pts, denom_rel_tol)
    rho = np.sqrt(val)
    if rho == 0.0:
        raise DegenerateSimplex("zero circumradius")
    return grad / (2.0 * rho)


# --- Vietoris-Rips birth radii ------------------------------------------------

@dataclass(frozen=True)
class RipsBirth:
    """Birth radius of a simplex in the Rips filtration plus argmax attribution."""

    radius: float
    edge: SimplexKey           # argmax edge; the simplex itself for vertices
    ties: tuple = ()           # other edges attaining the same maximum exactly


def rips_birth_radius(simplex, config: Configuration) -> RipsBirth:
    """Half the maximum pairwise distance, with the realizing edge."""
    key = simplex_key(simplex)
    if len(key) == 1:
        return RipsBirth(0.0, key)
    pts = config.points
    best = -1.0
    best_edge = None
    ties = []
    for i, j in itertools.combinations(key, 2):
        d = float(np.linalg.norm(pts[i] - pts[j]))
        if d > best:
            best = d
            best_edge = (i, j)
            ties = []
        elif d == best:
            ties.append((i, j))
    return RipsBirth(best / 2.0, best_edge, tuple(ties))


# --- general position reports --------------------------------------------------

@dataclass(frozen=True)
class GPViolation:
    kind: str                 # "coincident_points", "equal_attaching_radii", ...
    simplices: tuple          # offending simplex keys (or point indices)
    values: tuple = ()


@dataclass
class GeneralPositionReport:
    filtration: str
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def summary(self) -> str:
        if self.ok:
            return f"{self.filtration}: in general position"
        lines = [f"{self.filtration}: {len(self.violations)} violation(s)"]
        for v in self.violations:
            vals = ", ".join(f"{x:.9g}" for x in v.values)
            lines.append(f"  {v.kind}: {v.simplices} ({vals})")
        return "\n".join(lines)


def _radius_ties(radii, tol):
    """Pairs of entries (key, radius) whose radii agree within tol."""
    order = sorted(radii, key=lambda kr: kr[1])
    out = []
    for (k1, r1), (k2, r2) in zip(order, order[1:]):
        if abs(r2 - r1) <= tol:
            out.append(GPViolation("equal_attaching_radii", (k1, k2), (r1, r2)))
    return out


def check_general_position(config: Configuration, kind: str, tol: float = 1e-9):
    """Report (not raise) general-position violations for the given filtration.

    For Rips: coincident points and attaching edges with equal birth radii.
    For alpha: near-degenerate Delaunay simplices, points near a tetrahedron
    circumsphere, and attaching simplices (dim >= 1) with equal birth radii.
    """
    kind = kind.lower()
    if kind not in ("rips", "vr", "alpha"):
        raise ValueError(f"unknown filtration kind {kind!r}")
    pts = config.points
    m = config.n_points
    report = GeneralPositionReport("rips" if kind in ("rips", "vr") else "alpha")

    for i, j in itertools.combinations(range(m), 2):
        if np.linalg.norm(pts[i] - pts[j]) <= tol:
            report.violations.append(GPViolation("coincident_points", (i, j)))

    if report.filtration == "rips":
        radii = [
            ((i, j), float(np.linalg.norm(pts[i] - pts[j])) / 2.0)
            for i, j in itertools.combinations(range(m), 2)
        ]
        report.violations.extend(_radius_ties(radii, tol))
        return report

    from . import delaunay  # local import: delaunay depends on geometry types

    dc = delaunay.delaunay3(config)
    scale = _simplex_scale(pts) if m > 1 else 1.0
    attaching_radii = []
    for key in dc.all_simplices():
        if len(key) < 2:
            continue
        sp = pts[list(key)]
        try:
            rho = circumradius(sp)
        except DegenerateSimplex:
            report.violations.append(GPViolation("degenerate_simplex", (key,)))
            continue
        if delaunay.is_attaching(key, dc):
            attaching_radii.append((key, rho))
    report.violations.extend(_radius_ties(attaching_radii, tol))

    for tet in dc.simplices(3):
        center, radius = delaunay.circumsphere(pts[list(tet)])
        for p in range(m):
            if p in tet:
                continue
            if abs(np.linalg.norm(pts[p] - center) - radius) <= tol:
                report.violations.append(
                    GPViolation("near_cospherical", (tet, p), (radius,))
                )
    return report
