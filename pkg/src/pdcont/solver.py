"""Pseudo-inverse Newton iteration and continuation of a point cloud.

The SVD is a one-sided Jacobi (rotations until the working columns are
orthogonal to machine precision), the pseudo-inverse follows from it with a
singular-value cutoff, and the continuation walks the diagram target along a
straight segment, re-seeding each solve with the previous solution. Diagram
coordinates are tracked across steps primarily by generating-simplex identity,
with an optimal assignment fallback when the generators change.
"""

from __future__ import annotations

import bisect
import enum
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import linear_sum_assignment

from .diffmap import PersistenceJacobian, jacobian
from .errors import DimensionMismatch, MatchingAmbiguous, PdcontError
from .filtration import build
from .geometry import Configuration
from .persistence import PersistenceData, boundary_matrix, persistence_data, reduce_boundary

# --- dense SVD by one-sided Jacobi ---------------------------------------------

_JACOBI_EPS = 1e-15
_JACOBI_SWEEPS = 60


def _jacobi_tall(a):
    """Thin SVD of a tall matrix (p >= q) by one-sided Jacobi column rotations."""
    u = np.array(a, dtype=float)
    q = u.shape[1]
    v = np.eye(q)
    for _ in range(_JACOBI_SWEEPS):
        rotated = False
        for i in range(q - 1):
            for j in range(i + 1, q):
                x, y = u[:, i], u[:, j]
                alpha = float(x @ x)
                beta = float(y @ y)
                gamma = float(x @ y)
                if gamma == 0.0 or abs(gamma) <= _JACOBI_EPS * math.sqrt(alpha * beta):
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                t = math.copysign(1.0, zeta) / (abs(zeta) + math.hypot(1.0, zeta))
                c = 1.0 / math.hypot(1.0, t)
                s = c * t
                ui, uj = u[:, i].copy(), u[:, j].copy()
                u[:, i] = c * ui - s * uj
                u[:, j] = s * ui + c * uj
                vi, vj = v[:, i].copy(), v[:, j].copy()
                v[:, i] = c * vi - s * vj
                v[:, j] = s * vi + c * vj
        if not rotated:
            break
    norms = np.linalg.norm(u, axis=0)
    order = np.argsort(-norms)
    norms = norms[order]
    u = u[:, order]
    v = v[:, order]
    nonzero = norms > 0
    u[:, nonzero] = u[:, nonzero] / norms[nonzero]
    return u, norms, v


def svd(a):
    """SVD a = V @ diag(s) @ W.T with s non-increasing.

    Thin form: for an m x n matrix with m <= n, V is (m, m) orthogonal and W is
    (n, m) with orthonormal columns (and symmetrically for m > n).
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ValueError("svd expects a matrix")
    m, n = a.shape
    if m == 0 or n == 0:
        return np.eye(m), np.zeros(min(m, n)), np.eye(n)[:, : min(m, n)]
    if m <= n:
        w, s, v = _jacobi_tall(a.T)
        return v, s, w
    u, s, w = _jacobi_tall(a)
    return u, s, w


@dataclass(frozen=True)
class PinvInfo:
    singular_values: np.ndarray
    cutoff: float
    rank: int
    rank_deficient: bool


_JACOBI_SIZE_LIMIT = 64  # larger factorizations go through LAPACK


def _pinv_parts(a, sigma_cutoff_rel):
    if max(a.shape) > _JACOBI_SIZE_LIMIT:
        u, s, vt = np.linalg.svd(a, full_matrices=False)
        v, w = u, vt.T
    else:
        v, s, w = svd(a)
    cutoff = sigma_cutoff_rel * (s[0] if s.size else 0.0)
    keep = s > cutoff
    info = PinvInfo(s, cutoff, int(keep.sum()), bool(np.any(~keep)))
    return v, s, w, keep, info


def pinv_apply(a, b, sigma_cutoff_rel: float = 1e-12):
    """Minimum-norm least-squares solution of a x = b via the SVD pseudo-inverse.

    Singular values at or below ``sigma_cutoff_rel`` times the largest one are
    treated as zero; the returned info flags rank deficiency.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    v, s, w, keep, info = _pinv_parts(a, sigma_cutoff_rel)
    coeff = v.T @ b
    inv = np.zeros_like(s)
    inv[keep] = 1.0 / s[keep]
    return w @ (inv * coeff), info


def pinv_matrix(a, sigma_cutoff_rel: float = 1e-12) -> np.ndarray:
    """Dense pseudo-inverse (W Sigma^+ V^T); mainly for verification."""
    a = np.asarray(a, dtype=float)
    v, s, w, keep, _ = _pinv_parts(a, sigma_cutoff_rel)
    inv = np.zeros_like(s)
    inv[keep] = 1.0 / s[keep]
    return w @ (inv[:, None] * v.T)


# --- diagram coordinate tracking -------------------------------------------------

@dataclass(frozen=True)
class LayoutSlot:
    birth_key: tuple
    death_key: tuple
    birth: float
    death: float


def layout_from(pd: PersistenceData):
    return tuple(
        LayoutSlot(p.birth_key, p.death_key, p.birth, p.death) for p in pd.finite
    )


def match_to_layout(layout, pd: PersistenceData, ambiguity_tol: float = 1e-12):
    """Reorder the diagram's finite pairs to follow the layout.

    Pairs are matched by generating-simplex identity first; leftovers by the
    minimal-cost assignment under the sup-norm in the plane. Extra retained
    pairs beyond the layout are tolerated (they are matched around); a deficit
    returns None. Raises MatchingAmbiguous when two assignments are
    indistinguishable within ``ambiguity_tol``.
    """
    records = list(pd.finite)
    if len(records) < len(layout):
        return None
    by_key = {(r.birth_key, r.death_key): r for r in records}
    matched = [None] * len(layout)
    used = set()
    free_slots = []
    for idx, slot in enumerate(layout):
        rec = by_key.get((slot.birth_key, slot.death_key))
        if rec is not None and id(rec) not in used:
            matched[idx] = rec
            used.add(id(rec))
        else:
            free_slots.append(idx)
    leftovers = [r for r in records if id(r) not in used]
    if free_slots:
        cost = np.array(
            [
                [
                    max(abs(layout[i].birth - r.birth), abs(layout[i].death - r.death))
                    for r in leftovers
                ]
                for i in free_slots
            ]
        )
        rows, cols = linear_sum_assignment(cost)
        total = cost[rows, cols].sum()
        chosen = dict(zip(rows.tolist(), cols.tolist()))
        for a_row, a_col in chosen.items():
            for b_row, b_col in chosen.items():
                if b_row <= a_row:
                    continue
                swapped = (
                    total
                    - cost[a_row, a_col] - cost[b_row, b_col]
                    + cost[a_row, b_col] + cost[b_row, a_col]
                )
                if swapped <= total + ambiguity_tol:
                    raise MatchingAmbiguous(
                        "two diagram-coordinate assignments have equal cost; "
                        "cannot track pairs across this step"
                    )
            for other_col in range(len(leftovers)):
                if other_col in chosen.values():
                    continue
                if cost[a_row, other_col] <= cost[a_row, a_col] + ambiguity_tol:
                    raise MatchingAmbiguous(
                        "an untracked diagram point is indistinguishably close "
                        "to a tracked coordinate"
                    )
        for r_i, c_i in zip(rows, cols):
            matched[free_slots[r_i]] = leftovers[c_i]
    return tuple(matched)


def _layout_of(matched):
    return tuple(
        LayoutSlot(r.birth_key, r.death_key, r.birth, r.death) for r in matched
    )


def _vector_of(matched):
    v = []
    for r in matched:
        v.extend((r.birth, r.death))
    return np.array(v)


# --- Newton-Raphson by pseudo-inverse --------------------------------------------

class NewtonStatus(enum.Enum):
    CONVERGED = "converged"
    MAX_ITERATIONS = "max_iterations"
    DIVERGED = "diverged"
    SINGULAR_JACOBIAN = "singular_jacobian"
    CARDINALITY_CHANGED = "diagram_cardinality_changed"


@dataclass
class NewtonReport:
    status: NewtonStatus
    iterations: int
    residual: float
    singular_values: np.ndarray = field(default_factory=lambda: np.zeros(0))
    message: str = ""

    @property
    def converged(self) -> bool:
        return self.status is NewtonStatus.CONVERGED


def _evaluate(config, kind, dim, eps, max_dim):
    fc = build(config, kind, max_dim=max_dim)
    red = reduce_boundary(boundary_matrix(fc))
    pd = persistence_data(red, fc, dim, eps)
    return fc, pd


def _constraint_rows(config, constraints):
    if not constraints:
        return np.zeros(0), np.zeros((0, config.free_dim))
    col_index = {slot: c for c, slot in enumerate(config.free_slots())}
    vals = []
    rows = []
    for c in constraints:
        vals.append(c.value(config))
        grad = np.asarray(c.gradient(config), dtype=float)
        row = np.zeros(len(col_index))
        for (pt, axis), col in col_index.items():
            row[col] = grad[pt, axis]
        rows.append(row)
    return np.array(vals), np.vstack(rows)


def _gen_keys(matched):
    out = {}
    for i, rec in enumerate(matched):
        out[(i, "birth")] = rec.birth_key
        out[(i, "death")] = rec.death_key
    return out


_TIE_GRADIENT_CAP = 1e3


def _tie_rows(flip_groups, matched, v_target, fc, kind, config, window, offsets):
    """Extra rows that carry near-tied radii along with their coordinate.

    A diagram coordinate is a max/min over attaching radii; when several radii
    coincide at the solution the plain update oscillates between them with
    slow linear decay. The extra rows ask every tie participant to scale by
    the same factor as the tracked coordinate (preserving its radius ratio
    from the moment it joined the tie set), which solves for the oscillation's
    limit directly without symmetrizing the cloud into exact degeneracy, and
    is exactly consistent with similarity deformations of the cloud.

    Participants are the generators observed to flip between iterates plus,
    when the per-side ``window`` (birth, death) is positive, all attaching
    simplices of the right dimension within it of the coordinate's value.
    Only the step direction is affected; the convergence test uses the true
    diagram residual.
    """
    from .diffmap import _attaching_gradient, _scatter

    entry_by_key = {e.key: e for e in fc.entries}
    generator_keys = set()
    for rec in matched:
        generator_keys.add(rec.birth_key)
        generator_keys.add(rec.death_key)
    attaching = [(e.radius, e.key) for e in fc.entries if e.key == e.attaching and e.dim >= 1]
    attaching.sort()

    col_index = {slot: c for c, slot in enumerate(config.free_slots())}
    n = len(col_index)
    rows, res = [], []
    for i, rec in enumerate(matched):
        for which, current, value in (
            ("birth", rec.birth_key, rec.birth),
            ("death", rec.death_key, rec.death),
        ):
            candidates = set(flip_groups.get((i, which), ()))
            side_window = window[0] if which == "birth" else window[1]
            if side_window > 0.0:
                lo = bisect.bisect_left(attaching, (value - side_window, ()))
                hi = bisect.bisect_right(attaching, (value + side_window, (np.inf,)))
                candidates.update(key for _, key in attaching[lo:hi])
            target = v_target[2 * i + (0 if which == "birth" else 1)]
            for key in sorted(candidates):
                if key == current or key in generator_keys:
                    continue
                entry = entry_by_key.get(key)
                if entry is None or entry.dim != len(current) - 1:
                    continue
                slot_key = (i, which, key)
                if slot_key not in offsets:
                    offsets[slot_key] = entry.radius / value if value else 1.0
                grad = _attaching_gradient(kind, entry.attaching, config)
                if np.linalg.norm(grad) > _TIE_GRADIENT_CAP:
                    continue  # sliver simplex: radius too ill-conditioned to pin
                rows.append(_scatter(grad, entry.attaching, col_index, n))
                res.append(entry.radius - target * offsets[slot_key])
    if not rows:
        return np.zeros((0, n)), np.zeros(0)
    return np.vstack(rows), np.array(res)


def _newton_core(
    config, kind, dim, epsilon, v_target, tol, max_iter,
    sigma_cutoff_rel, sigma_floor, layout, constraints, max_dim,
    tie_window_rel=0.0, tie_window_abs=0.0,
):
    kind_norm = "rips" if kind.lower() in ("rips", "vr") else "alpha"
    v_target = np.asarray(v_target, dtype=float)
    fc, pd = _evaluate(config, kind, dim, epsilon, max_dim)
    if layout is None:
        layout = layout_from(pd)
    if v_target.size != 2 * len(layout):
        raise DimensionMismatch(
            f"target has {v_target.size} coordinates, layout expects {2 * len(layout)}"
        )

    report = None
    increases = 0
    prev_res = math.inf
    jac_snapshot = np.zeros(0)
    prev_keys = {
        (i, which): getattr(slot, f"{which}_key")
        for i, slot in enumerate(layout)
        for which in ("birth", "death")
    }
    flip_groups = {}
    tie_offsets = {}
    for it in range(max_iter + 1):
        matched = match_to_layout(layout, pd)
        if matched is None:
            report = NewtonReport(
                NewtonStatus.CARDINALITY_CHANGED,
                it,
                math.inf,
                jac_snapshot,
                f"retained pair count dropped from {len(layout)} to {len(pd.finite)}",
            )
            break
        layout = _layout_of(matched)
        keys = _gen_keys(matched)
        for slot, key in keys.items():
            if prev_keys[slot] != key:
                group = flip_groups.setdefault(slot, set())
                group.add(prev_keys[slot])
                group.add(key)
        prev_keys = keys
        g_vals, g_rows = _constraint_rows(config, constraints)
        residual_vec = np.concatenate([_vector_of(matched) - v_target, g_vals])
        res = float(np.max(np.abs(residual_vec))) if residual_vec.size else 0.0
        if res <= tol:
            # transient extra pairs are tolerated during iterations, but an
            # accepted solution must preserve the truncated cardinality
            if len(pd.finite) != len(layout):
                report = NewtonReport(
                    NewtonStatus.CARDINALITY_CHANGED,
                    it,
                    res,
                    jac_snapshot,
                    f"retained pair count changed from {len(layout)} to {len(pd.finite)}",
                )
            else:
                report = NewtonReport(NewtonStatus.CONVERGED, it, res, jac_snapshot)
            break
        if it == max_iter:
            report = NewtonReport(NewtonStatus.MAX_ITERATIONS, it, res, jac_snapshot)
            break
        if res >= prev_res:
            increases += 1
            if increases >= 5:
                report = NewtonReport(
                    NewtonStatus.DIVERGED, it, res, jac_snapshot,
                    "residual failed to decrease for 5 consecutive iterations",
                )
                break
        else:
            increases = 0
        prev_res = res

        jac = _matched_jacobian(config, kind, pd, matched, fc)
        _, s, _ = svd(jac.matrix)
        jac_snapshot = s
        if s.size and s[-1] < sigma_floor:
            report = NewtonReport(
                NewtonStatus.SINGULAR_JACOBIAN, it, res, s,
                f"smallest singular value {s[-1]:.3e} below floor {sigma_floor:.0e}",
            )
            break
        win = np.broadcast_to(np.asarray(tie_window_abs, dtype=float), (2,))
        tie_m, tie_r = _tie_rows(
            flip_groups, matched, v_target, fc, kind_norm, config,
            np.maximum(tie_window_rel * res, win), tie_offsets,
        )
        matrix = np.vstack([jac.matrix, tie_m, g_rows])
        step_res = np.concatenate([residual_vec[: v_target.size], tie_r, g_vals])
        step, _ = pinv_apply(matrix, step_res, sigma_cutoff_rel)
        config = config.with_vector(config.pack() - step)
        fc, pd = _evaluate(config, kind, dim, epsilon, max_dim)

    # singular values at the accepted configuration, for diagnostics
    if report.converged:
        matched = match_to_layout(layout, pd)
        if matched is not None:
            jac = _matched_jacobian(config, kind, pd, matched, fc)
            g_vals, g_rows = _constraint_rows(config, constraints)
            matrix = np.vstack([jac.matrix, g_rows]) if g_rows.size else jac.matrix
            _, s, _ = svd(matrix)
            report.singular_values = s
            layout = _layout_of(matched)
    return config, report, layout, fc, pd


def newton_pinv(
    config: Configuration,
    kind: str,
    dim: int,
    epsilon: float,
    v_target,
    tol: float = 1e-10,
    max_iter: int = 50,
    sigma_cutoff_rel: float = 1e-12,
    sigma_floor: float = 1e-12,
    layout=None,
    constraints=(),
    max_dim: int | None = None,
    tie_window_rel: float = 0.0,
    tie_window_abs: float = 0.0,
):
    """Iterate u <- u - Df(u)^+ (f(u) - v) until the sup-norm residual is small.

    The filtration, diagram, coordinate matching, and Jacobian are recomputed
    at every iterate. Returns (configuration, NewtonReport, layout) where the
    layout tracks the generating simplices of the matched coordinates.
    """
    if max_dim is None:
        max_dim = dim + 1
    config, report, layout, _, _ = _newton_core(
        config, kind, dim, epsilon, v_target, tol, max_iter,
        sigma_cutoff_rel, sigma_floor, layout, constraints, max_dim,
        tie_window_rel=tie_window_rel, tie_window_abs=tie_window_abs,
    )
    return config, report, layout


def _matched_jacobian(config, kind, pd, matched, fc) -> PersistenceJacobian:
    """Jacobian with rows permuted to the matched layout order."""
    jac = jacobian(config, kind, pd, include_essential=False, fc=fc)
    index_of = {id(r): i for i, r in enumerate(pd.finite)}
    perm = []
    for rec in matched:
        base = 2 * index_of[id(rec)]
        perm.extend((base, base + 1))
    return PersistenceJacobian(
        jac.matrix[perm], tuple(jac.rows[i] for i in perm), jac.columns
    )


# --- continuation driver -----------------------------------------------------------

@dataclass(frozen=True)
class ContinuationStep:
    k: int
    t: float                    # fraction of the segment covered, in (0, 1]
    v_target: np.ndarray
    u: np.ndarray               # packed free coordinates at the solution
    pairs: tuple                # ((birth, death), ...) matched layout order
    singular_values: np.ndarray
    newton_iters: int
    residual: float
    attaching_radii: dict       # dim -> tuple of attaching birth radii


@dataclass
class ContinuationTrace:
    kind: str
    dim: int
    epsilon: float
    v_start: np.ndarray
    v_target: np.ndarray
    n_planned: int
    steps: list = field(default_factory=list)
    reached_target: bool = False
    failed_step: int | None = None
    reason: str | None = None
    final_config: Configuration | None = None

    @property
    def termination(self) -> str:
        if self.reached_target:
            return "ReachedTarget"
        return f"FailedAtStep {self.failed_step}: {self.reason}"


def _attaching_radii(fc):
    out = {}
    for e in fc.entries:
        if e.key == e.attaching and e.dim >= 1:
            out.setdefault(e.dim, []).append(e.radius)
    return {d: tuple(sorted(v)) for d, v in out.items()}


def continue_cloud(
    config: Configuration,
    kind: str,
    dim: int,
    epsilon: float,
    v_target,
    step: float | None = None,
    n_steps: int | None = None,
    tol: float = 1e-10,
    max_iter: int = 50,
    sigma_cutoff_rel: float = 1e-12,
    sigma_floor: float = 1e-12,
    constraints=(),
    adaptive: bool = False,
    max_halvings: int = 6,
    max_dim: int | None = None,
    tie_window_rel: float = 0.0,
    tie_window_abs: float = 0.0,
) -> ContinuationTrace:
    """Walk the diagram from its current value to ``v_target`` along a segment.

    The segment is split into equal pieces of length at most ``step`` (or into
    ``n_steps`` pieces); each piece is solved by ``newton_pinv`` seeded with
    the previous solution. On failure the partial trace is returned, unless
    ``adaptive`` is set, in which case the piece is halved up to
    ``max_halvings`` times before giving up.
    """
    if max_dim is None:
        max_dim = dim + 1
    fc, pd = _evaluate(config, kind, dim, epsilon, max_dim)
    layout = layout_from(pd)
    v_start = _vector_of(pd.finite)
    v_target = np.asarray(v_target, dtype=float)
    if v_target.shape != v_start.shape:
        raise DimensionMismatch(
            f"target has {v_target.size} coordinates, diagram has {v_start.size}"
        )
    span = float(np.linalg.norm(v_target - v_start))
    if v_start.size > config.free_dim:
        warnings.warn(
            f"diagram has m={v_start.size} coordinates but only n={config.free_dim} "
            "free point coordinates; the target is generically unreachable"
        )
    if n_steps is not None:
        n = max(1, int(n_steps))
    elif step is not None and span > 0:
        n = max(1, math.ceil(span / step - 1e-12))
    else:
        n = 1

    trace = ContinuationTrace(kind, dim, epsilon, v_start, v_target, n)
    t = Fraction(0)
    dt = Fraction(1, n)
    halvings = 0
    k = 0
    while t < 1:
        t_next = min(t + dt, Fraction(1))
        v_k = v_start + float(t_next) * (v_target - v_start)
        k += 1
        try:
            new_config, report, new_layout, fc_acc, _ = _newton_core(
                config, kind, dim, epsilon, v_k, tol, max_iter,
                sigma_cutoff_rel, sigma_floor, layout, constraints, max_dim,
                tie_window_rel=tie_window_rel, tie_window_abs=tie_window_abs,
            )
        except PdcontError as exc:
            trace.failed_step = k
            trace.reason = f"{type(exc).__name__}: {exc}"
            break
        if not report.converged:
            if adaptive and halvings < max_halvings:
                halvings += 1
                dt /= 2.0
                k -= 1
                continue
            trace.failed_step = k
            trace.reason = f"{report.status.value}: {report.message or f'residual {report.residual:.3e}'}"
            break
        config, layout = new_config, new_layout
        t = t_next
        trace.steps.append(
            ContinuationStep(
                k, float(t), v_k, config.pack(),
                tuple((s.birth, s.death) for s in layout),
                report.singular_values, report.iterations, report.residual,
                _attaching_radii(fc_acc),
            )
        )
    trace.reached_target = t >= 1
    trace.final_config = config
    return trace
