"""Independent oracles and utilities shared by the test modules.

Everything here deliberately avoids the library's own computation paths:
brute-force searches, exhaustive enumeration, finite differences, GF(2) rank
computations on bitsets, and hand-rolled hull volumes.
"""

import itertools
import math

import numpy as np
from scipy.optimize import minimize


def fd_gradient(func, x0, h=1e-6):
    """Central finite-difference gradient of a vector-valued function."""
    x0 = np.asarray(x0, dtype=float)
    f0 = np.asarray(func(x0), dtype=float)
    grad = np.zeros(f0.shape + x0.shape)
    for i in range(x0.size):
        xp = x0.copy()
        xm = x0.copy()
        xp[i] += h
        xm[i] -= h
        grad[..., i] = (np.asarray(func(xp)) - np.asarray(func(xm))) / (2 * h)
    return grad


def brute_min_max_radius(points, restarts=12, seed=0):
    """Smallest max-distance-to-vertices over sphere centers (Nelder-Mead)."""
    points = np.asarray(points, dtype=float)

    def cost(c):
        return np.max(np.linalg.norm(points - c, axis=1))

    rng = np.random.RandomState(seed)
    best = math.inf
    centroid = points.mean(axis=0)
    scale = np.linalg.norm(points - centroid, axis=1).max()
    for k in range(restarts):
        start = centroid if k == 0 else centroid + rng.randn(3) * 0.3 * scale
        res = minimize(
            cost, start, method="Nelder-Mead",
            options=dict(xatol=1e-13, fatol=1e-13, maxiter=20000, maxfev=20000),
        )
        best = min(best, res.fun)
    return best


def circumsphere_lstsq(points):
    """Smallest sphere through the points via the equal-distance linear system.

    Solves |c-p_i|^2 = |c-p_0|^2 for the center, then projects onto the
    solution space the point closest to p_0 (the smallest such sphere).
    """
    points = np.asarray(points, dtype=float)
    a = 2.0 * (points[1:] - points[0])
    b = np.einsum("ij,ij->i", points[1:], points[1:]) - points[0] @ points[0]
    center, *_ = np.linalg.lstsq(a, b, rcond=None)
    if len(points) < 4:
        _, s, vt = np.linalg.svd(a)
        null = vt[len(s[s > 1e-12 * s[0]]):]
        if null.size:
            t = np.linalg.lstsq(null.T, points[0] - center, rcond=None)[0]
            center = center + null.T @ t
    return center, float(np.linalg.norm(points[0] - center))


def random_rotation(rng):
    q, _ = np.linalg.qr(rng.randn(3, 3))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def hull_volume_bruteforce(points):
    """Convex-hull volume by brute-force facet detection and fan decomposition.

    Every point triple whose plane has all points on one side is a hull facet;
    the volume is the sum of signed tetra volumes against the centroid.
    """
    pts = np.asarray(points, dtype=float)
    m = len(pts)
    centroid = pts.mean(axis=0)
    volume = 0.0
    seen = set()
    for tri in itertools.combinations(range(m), 3):
        a, b, c = (pts[i] for i in tri)
        normal = np.cross(b - a, c - a)
        norm = np.linalg.norm(normal)
        if norm == 0:
            continue
        side = (pts - a) @ normal / norm
        tol = 1e-12 * np.abs(pts - a).max()
        if np.all(side <= tol) or np.all(side >= -tol):
            on_plane = tuple(sorted(np.nonzero(np.abs(side) <= tol)[0]))
            if on_plane in seen:
                continue  # coplanar facet already fan-decomposed once
            seen.add(on_plane)
            plane_pts = pts[list(on_plane)]
            origin = plane_pts[0]
            for u, v in itertools.combinations(range(1, len(plane_pts)), 2):
                vol = np.dot(
                    np.cross(plane_pts[u] - origin, plane_pts[v] - origin),
                    centroid - origin,
                )
                volume += abs(vol) / 6.0
    return volume


# --- GF(2) rank oracle for persistence pairings ----------------------------------

def _gf2_rank(rows):
    """Rank of a GF(2) matrix whose rows are Python ints (bitmasks)."""
    rank = 0
    pivots = []
    for row in rows:
        for p in pivots:
            row = min(row, row ^ p)
        if row:
            pivots.append(row)
            pivots.sort(reverse=True)
            rank += 1
    return rank


def _gf2_nullspace(columns, n_rows):
    """Basis of the column nullspace: columns are bitmasks over row indices."""
    # Gaussian elimination on columns, tracking the combination applied.
    cols = list(columns)
    combos = [1 << j for j in range(len(cols))]
    pivot_of = {}
    null_basis = []
    for j in range(len(cols)):
        col = cols[j]
        combo = combos[j]
        while col:
            piv = col.bit_length() - 1
            if piv not in pivot_of:
                pivot_of[piv] = (col, combo)
                break
            pc, pcombo = pivot_of[piv]
            col ^= pc
            combo ^= pcombo
        else:
            null_basis.append(combo)
    return null_basis


def rank_function_pairs(ordered, dim):
    """Birth-death pair multiset for one dimension from the rank function.

    ``ordered``: list of (vertices tuple, radius) in filtration order.
    Ranks of the maps H(X^r -> X^s) over GF(2) determine the multiplicity of
    each (birth value, death value) box by inclusion-exclusion; essentials come
    from the ranks into the saturated complex.
    Returns (finite pair multiset, essential birth multiset) with zero-length
    pairs dropped.
    """
    index_of = {key: i for i, (key, _) in enumerate(ordered)}
    radii = [r for _, r in ordered]
    d_simplices = [i for i, (k, _) in enumerate(ordered) if len(k) == dim + 1]
    d1_simplices = [i for i, (k, _) in enumerate(ordered) if len(k) == dim + 2]

    grid = sorted(set(radii))
    g = len(grid)

    def boundary_col(j):
        key = ordered[j][0]
        if len(key) == 1:
            return 0
        col = 0
        for f in range(len(key)):
            face = key[:f] + key[f + 1:]
            col |= 1 << index_of[face]
        return col

    d_cols = {j: boundary_col(j) for j in d_simplices}
    d1_cols = {j: boundary_col(j) for j in d1_simplices}

    def z_basis_at(i):
        """Cycle basis of the dim-chains of X^grid[i], as simplex bitmasks."""
        r = grid[i]
        live = [j for j in d_simplices if radii[j] <= r]
        null = _gf2_nullspace([d_cols[j] for j in live], len(ordered))
        basis = []
        for combo in null:
            vec = 0
            b = combo
            while b:
                pos = b.bit_length() - 1
                vec |= 1 << live[pos]
                b ^= 1 << pos
            basis.append(vec)
        return basis

    z_cache = [z_basis_at(i) for i in range(g)]
    b_cache = [[d1_cols[j] for j in d1_simplices if radii[j] <= grid[i]] for i in range(g)]
    b_rank = [_gf2_rank(list(cols)) for cols in b_cache]

    cache = {}

    def rk(i, j):
        # rank of H_dim(X^grid[i]) -> H_dim(X^grid[j]):
        # dim(Z_i + B_j) - dim B_j = dim Z_i - dim(Z_i ∩ B_j)
        if (i, j) not in cache:
            z = z_cache[i]
            cache[(i, j)] = _gf2_rank(z + b_cache[j]) - b_rank[j] if z else 0
        return cache[(i, j)]

    pairs = []
    essentials = []
    for i in range(g):
        for j in range(i + 1, g):
            mult = rk(i, j - 1) - rk(i, j) - (rk(i - 1, j - 1) - rk(i - 1, j) if i else 0)
            for _ in range(mult):
                pairs.append((grid[i], grid[j]))
        ess = rk(i, g - 1) - (rk(i - 1, g - 1) if i else 0)
        for _ in range(ess):
            essentials.append(grid[i])
    return sorted(pairs), sorted(essentials)


def exhaustive_matching_bottleneck(d1, d2):
    """Minimum over all bijections (with diagonal) of the max sup-norm move."""
    fin1 = [(b, d) for b, d in d1 if not math.isinf(d)]
    fin2 = [(b, d) for b, d in d2 if not math.isinf(d)]

    def dist(p, q):
        return max(abs(p[0] - q[0]), abs(p[1] - q[1]))

    def gap(p):
        return (p[1] - p[0]) / 2

    best = math.inf
    n2 = len(fin2)
    for k in range(min(len(fin1), n2) + 1):
        for sub1 in itertools.combinations(range(len(fin1)), k):
            rest1 = [i for i in range(len(fin1)) if i not in sub1]
            for sub2 in itertools.permutations(range(n2), k):
                cost = 0.0
                for a, b in zip(sub1, sub2):
                    cost = max(cost, dist(fin1[a], fin2[b]))
                for a in rest1:
                    cost = max(cost, gap(fin1[a]))
                used = set(sub2)
                for b in range(n2):
                    if b not in used:
                        cost = max(cost, gap(fin2[b]))
                best = min(best, cost)
    return best


def random_cloud(rng, m, scale=1.0):
    """Random general-position-ish cloud (rejection on tiny distances)."""
    while True:
        pts = rng.rand(m, 3) * scale
        d = np.linalg.norm(pts[:, None] - pts[None, :], axis=2)
        np.fill_diagonal(d, np.inf)
        if d.min() > 1e-3 * scale:
            return pts


def random_acute_triangle(rng, scale=1.0):
    while True:
        pts = rng.rand(3, 3) * scale
        sq = [
            float((pts[i] - pts[j]) @ (pts[i] - pts[j]))
            for i, j in ((0, 1), (1, 2), (2, 0))
        ]
        s = sorted(sq)
        if s[0] + s[1] > s[2] * 1.001 and s[0] > 1e-4:
            return pts
