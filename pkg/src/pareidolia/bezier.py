"""Bezier segments and composite curves: evaluation, sampling, scaling, fitting.

A composite curve is a chain of same-order segments joined end to end.  The
global parameter tau in [0, 1] is split uniformly across segments, so segment
j of S covers [j/S, (j+1)/S].  Fitting solves a per-axis linear least-squares
problem in Bernstein form with the joint control points shared between
neighbouring segments, then optionally refines the sample parameters with
Gauss-Newton steps (projection of each sample onto the current curve).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import ContractError, DomainError, SingularFitError

# Condition number past which the normal-equations route is abandoned for a
# pseudoinverse solve.
_COND_LIMIT = 1e12


def _as_point_array(points, name="points"):
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim != 2:
        raise ContractError(f"{name} must be a 2-d array, got shape {arr.shape}")
    if arr.shape[1] not in (2, 3):
        raise ContractError(f"{name} must have 2 or 3 columns, got {arr.shape[1]}")
    if not np.all(np.isfinite(arr)):
        raise ContractError(f"{name} contains non-finite values")
    return arr


@dataclass(frozen=True)
class BezierSegment:
    """A single Bezier arc of arbitrary order with 2-d or 3-d control points."""

    controls: np.ndarray

    def __post_init__(self):
        arr = _as_point_array(self.controls, "controls")
        if arr.shape[0] < 2:
            raise ContractError("a segment needs at least two control points")
        object.__setattr__(self, "controls", arr)

    @property
    def order(self):
        return self.controls.shape[0] - 1

    @property
    def dim(self):
        return self.controls.shape[1]


@dataclass(frozen=True)
class Polyline:
    """An ordered run of at least two points with no stalled steps."""

    points: np.ndarray

    def __post_init__(self):
        arr = _as_point_array(self.points, "points")
        if arr.shape[0] < 2:
            raise ContractError("a polyline needs at least two points")
        same = np.all(arr[1:] == arr[:-1], axis=1)
        if np.any(same):
            raise ContractError("polyline has two identical consecutive points")
        object.__setattr__(self, "points", arr)

    def __len__(self):
        return self.points.shape[0]


def bernstein_matrix(order, taus):
    """Rows of Bernstein weights C(n,k) t^k (1-t)^(n-k) for each t in taus."""
    t = np.asarray(taus, dtype=np.float64).reshape(-1, 1)
    k = np.arange(order + 1)
    coef = np.array([comb(order, int(i)) for i in k], dtype=np.float64)
    return coef * t ** k * (1.0 - t) ** (order - k)


def eval_bezier(segment, t):
    """Evaluate one segment at parameter t in [0, 1]."""
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"parameter {t} outside [0, 1]")
    row = bernstein_matrix(segment.order, [t])
    return (row @ segment.controls)[0]


@dataclass(frozen=True)
class CompositeBezier:
    """Same-order Bezier segments sharing endpoint control points exactly."""

    segments: tuple

    def __post_init__(self):
        segs = tuple(self.segments)
        if not segs:
            raise ContractError("composite curve needs at least one segment")
        order = segs[0].order
        dim = segs[0].dim
        for s in segs:
            if not isinstance(s, BezierSegment):
                raise ContractError("segments must be BezierSegment instances")
            if s.order != order:
                raise ContractError("all segments must share one order")
            if s.dim != dim:
                raise ContractError("all segments must share one dimension")
        for a, b in zip(segs, segs[1:]):
            if not np.array_equal(a.controls[-1], b.controls[0]):
                raise ContractError("segments do not share an endpoint exactly")
        object.__setattr__(self, "segments", segs)

    @property
    def num_segments(self):
        return len(self.segments)

    @property
    def segment_order(self):
        return self.segments[0].order

    @property
    def dim(self):
        return self.segments[0].dim

    @property
    def joints(self):
        """Global parameter values where neighbouring segments meet."""
        s = len(self.segments)
        return np.arange(1, s) / s

    def control_points(self):
        """All control points with shared joints counted once, shape (S*n+1, D)."""
        rows = [self.segments[0].controls]
        for s in self.segments[1:]:
            rows.append(s.controls[1:])
        return np.concatenate(rows, axis=0)

    def _split(self, taus):
        taus = np.asarray(taus, dtype=np.float64)
        if np.any(taus < 0.0) or np.any(taus > 1.0):
            raise DomainError("parameter outside [0, 1]")
        s = len(self.segments)
        idx = np.minimum((taus * s).astype(np.int64), s - 1)
        local = taus * s - idx
        return idx, local

    def eval(self, tau):
        return self.eval_many([tau])[0]

    def eval_many(self, taus):
        idx, local = self._split(taus)
        out = np.empty((idx.shape[0], self.dim))
        for j in range(len(self.segments)):
            m = idx == j
            if not np.any(m):
                continue
            out[m] = bernstein_matrix(self.segment_order, local[m]) @ self.segments[j].controls
        return out

    def derivative_many(self, taus):
        """First derivative with respect to the global parameter."""
        idx, local = self._split(taus)
        s = len(self.segments)
        n = self.segment_order
        out = np.empty((idx.shape[0], self.dim))
        for j in range(s):
            m = idx == j
            if not np.any(m):
                continue
            c = self.segments[j].controls
            hodo = n * (c[1:] - c[:-1])
            if n == 1:
                out[m] = hodo[0]
            else:
                out[m] = bernstein_matrix(n - 1, local[m]) @ hodo
        return out * s

    def second_derivative_many(self, taus):
        idx, local = self._split(taus)
        s = len(self.segments)
        n = self.segment_order
        out = np.zeros((idx.shape[0], self.dim))
        if n < 2:
            return out
        for j in range(s):
            m = idx == j
            if not np.any(m):
                continue
            c = self.segments[j].controls
            hodo2 = n * (n - 1) * (c[2:] - 2.0 * c[1:-1] + c[:-2])
            if n == 2:
                out[m] = hodo2[0]
            else:
                out[m] = bernstein_matrix(n - 2, local[m]) @ hodo2
        return out * s * s


def composite_from_controls(points, order, segments):
    """Rebuild a composite curve from stacked control points (S*n+1, D)."""
    arr = _as_point_array(points, "control points")
    if arr.shape[0] != segments * order + 1:
        raise ContractError(
            f"expected {segments * order + 1} control points, got {arr.shape[0]}"
        )
    segs = []
    for j in range(segments):
        segs.append(BezierSegment(arr[j * order : j * order + order + 1].copy()))
    return CompositeBezier(tuple(segs))


def sample_composite(curve, m):
    """Sample m points at uniform global parameter; endpoints and joints land exactly."""
    if m < 2:
        raise DomainError("need at least two samples")
    taus = np.linspace(0.0, 1.0, m)
    return Polyline(curve.eval_many(taus))


def scale_composite(curve, omega, anchor):
    """Scale every control point about an anchor by factor omega > 0."""
    if not omega > 0.0:
        raise DomainError(f"scale factor must be positive, got {omega}")
    anchor = np.asarray(anchor, dtype=np.float64)
    if anchor.shape != (curve.dim,):
        raise ContractError(f"anchor must have shape ({curve.dim},)")
    pts = anchor + omega * (curve.control_points() - anchor)
    return composite_from_controls(pts, curve.segment_order, curve.num_segments)


def chord_parameters(points):
    """Normalized cumulative chord length of a point run, from 0 to 1."""
    steps = np.linalg.norm(np.diff(points, axis=0), axis=1)
    total = steps.sum()
    if total <= 0.0:
        raise ContractError("polyline has zero total length")
    u = np.concatenate([[0.0], np.cumsum(steps)]) / total
    u[-1] = 1.0
    return u


def _design_matrix(taus, order, segments):
    """Sparse-pattern design matrix over shared global control points."""
    s = segments
    idx = np.minimum((taus * s).astype(np.int64), s - 1)
    local = taus * s - idx
    a = np.zeros((taus.shape[0], s * order + 1))
    for j in range(s):
        m = idx == j
        if not np.any(m):
            continue
        a[np.ix_(m, np.arange(j * order, j * order + order + 1))] = bernstein_matrix(
            order, local[m]
        )
    return a


def _solve_controls(a, b):
    """Least-squares solve, falling back to the pseudoinverse when ill conditioned."""
    rank = np.linalg.matrix_rank(a)
    if rank < a.shape[1]:
        cond = np.linalg.cond(a)
        raise SingularFitError(
            f"design matrix is rank deficient ({rank} < {a.shape[1]}, cond={cond:.3e}); "
            "fewer segments or more samples needed",
            cond=cond,
        )
    cond = np.linalg.cond(a)
    if cond > _COND_LIMIT:
        return np.linalg.pinv(a) @ b
    ata = a.T @ a
    return np.linalg.solve(ata, a.T @ b)


def _is_degenerate(points):
    centered = points - points.mean(axis=0)
    sv = np.linalg.svd(centered, compute_uv=False)
    return sv[1] <= 1e-12 * max(sv[0], 1e-300)


def _refine_taus(curve, points, taus, iters=1):
    """Gauss-Newton projection steps per sample, endpoints pinned.

    The Newton denominator |C'|^2 + d.C'' can turn non-positive near
    inflections; the plain Gauss-Newton denominator |C'|^2 takes over there.
    """
    t = taus
    for _ in range(iters):
        d = curve.eval_many(t) - points
        d1 = curve.derivative_many(t)
        d2 = curve.second_derivative_many(t)
        num = np.sum(d * d1, axis=1)
        gn = np.maximum(np.sum(d1 * d1, axis=1), 1e-300)
        den = gn + np.sum(d * d2, axis=1)
        den = np.where(den > 1e-12 * gn, den, gn)
        t = np.clip(t - num / den, 0.0, 1.0)
        t[0] = 0.0
        t[-1] = 1.0
    return t


def _joint_refine(pts, order, segments, t, max_iters, stop_at):
    """Gauss-Newton over control points and sample parameters together.

    Alternating projection and refit converges only linearly because the two
    blocks are strongly coupled; stepping them jointly restores the usual
    quadratic tail.  Controls enter the residual linearly, so the parameter
    block is eliminated through a Schur complement, then a halving line
    search keeps the residual monotone.  Endpoint parameters stay pinned.
    """
    n, d = pts.shape
    controls = _solve_controls(_design_matrix(t, order, segments), pts)
    curve = composite_from_controls(controls, order, segments)
    res = float(np.sum((curve.eval_many(t) - pts) ** 2))

    for _ in range(max_iters):
        if res <= stop_at:
            break
        a = _design_matrix(t, order, segments)
        r = curve.eval_many(t) - pts
        c1 = curve.derivative_many(t)
        g = np.einsum("ij,ij->i", c1, c1)
        # pinned endpoints and zero-speed samples contribute no parameter step
        free = np.ones(n, dtype=bool)
        free[0] = free[-1] = False
        free &= g > 1e-12 * max(float(g.max()), 1e-300)

        k = a.shape[1]
        h_cc = np.kron(a.T @ a, np.eye(d))
        u = (a[free][:, :, None] * c1[free][:, None, :]).reshape(free.sum(), k * d)
        gf = g[free]
        schur = h_cc - (u / gf[:, None]).T @ u
        g_c = -(a.T @ r).reshape(k * d)
        g_t = -np.einsum("ij,ij->i", r, c1)
        rhs = g_c - u.T @ (g_t[free] / gf)
        try:
            dc = np.linalg.solve(schur, rhs)
        except np.linalg.LinAlgError:
            dc = np.linalg.lstsq(schur, rhs, rcond=None)[0]
        dt = np.zeros(n)
        dt[free] = (g_t[free] - u @ dc) / gf
        dc = dc.reshape(k, d)

        improved = False
        step = 1.0
        for _ in range(12):
            t_try = np.clip(t + step * dt, 0.0, 1.0)
            t_try[0], t_try[-1] = 0.0, 1.0
            c_try = controls + step * dc
            curve_try = composite_from_controls(c_try, order, segments)
            res_try = float(np.sum((curve_try.eval_many(t_try) - pts) ** 2))
            if res_try < res:
                t, controls, curve = t_try, c_try, curve_try
                # marginal gains mean a flat valley: stop rather than wander,
                # which would amplify last-bit input differences
                improved = res - res_try > 1e-10 * max(res, 1e-300)
                res = res_try
                break
            step *= 0.5
        if not improved:
            break

    # land on the least-squares optimum for the final parameters
    try:
        polished = _solve_controls(_design_matrix(t, order, segments), pts)
        curve_p = composite_from_controls(polished, order, segments)
        res_p = float(np.sum((curve_p.eval_many(t) - pts) ** 2))
        if res_p <= res:
            return res_p, curve_p
    except SingularFitError:
        pass
    return res, curve


def _reproject_taus(curve, pts, grid=256):
    """Nearest-point parameters against a dense curve sampling, Newton polished.

    Unlike the local steps in _refine_taus this reassigns globally, which can
    pull a descent out of a wrong point-to-parameter pairing.
    """
    gt = np.linspace(0.0, 1.0, grid)
    gs = curve.eval_many(gt)
    d2 = ((pts[:, None, :] - gs[None, :, :]) ** 2).sum(axis=2)
    t = gt[np.argmin(d2, axis=1)]
    t = _refine_taus(curve, pts, t, iters=4)
    return t


def fit_composite(points, order, segments=1, taus=None, refine_iters=60, restarts=0):
    """Fit a composite Bezier to an ordered point run.

    Parameters default to normalized cumulative chord length; pass taus to pin
    them explicitly (this also disables Gauss-Newton refinement).  The solve is
    linear per axis with joint control points shared between segments.

    restarts adds randomized monotone reparameterizations as extra descent
    starts, kept only when they lower the residual.  Worth paying for when the
    samples lie exactly on a curve of the fitted degree and full recovery
    matters more than speed; boundary fits of noisy polylines gain nothing.
    """
    if isinstance(points, Polyline):
        pts = points.points
    else:
        pts = Polyline(points).points
    if order < 1:
        raise DomainError(f"order must be >= 1, got {order}")
    if segments < 1:
        raise DomainError(f"segments must be >= 1, got {segments}")
    unknowns = segments * order + 1
    if pts.shape[0] < unknowns:
        raise ContractError(
            f"{pts.shape[0]} samples cannot determine {unknowns} control points"
        )

    if order > 1 and _is_degenerate(pts):
        warnings.warn(
            "degenerate (collinear) point run, collapsing to order-1 fit",
            stacklevel=2,
        )
        order = 1

    if taus is not None:
        t = np.asarray(taus, dtype=np.float64)
        if t.shape != (pts.shape[0],):
            raise ContractError("taus must match the number of points")
        if np.any(t < 0.0) or np.any(t > 1.0) or np.any(np.diff(t) < 0.0):
            raise ContractError("taus must be sorted within [0, 1]")
        starts = [t]
        refine_iters = 0
    else:
        # chord length suits evenly spaced point runs; the uniform start covers
        # data sampled evenly in parameter, where it is immediately exact
        starts = [chord_parameters(pts), np.linspace(0.0, 1.0, pts.shape[0])]

    span = float(np.ptp(pts)) or 1.0
    # residual floor for "the samples lie on a curve of this degree"
    done = (1e-13 * span) ** 2 * pts.shape[0]
    best = None
    for t in starts:
        if refine_iters:
            res, curve = _joint_refine(pts, order, segments, t, refine_iters, done)
        else:
            controls = _solve_controls(_design_matrix(t, order, segments), pts)
            curve = composite_from_controls(controls, order, segments)
            res = float(np.sum((curve.eval_many(t) - pts) ** 2))
        if best is None or res < best[0]:
            best = (res, curve)
        if best[0] <= done:
            break

    if best[0] > done and restarts and refine_iters:
        rng = np.random.default_rng(0)
        chord = starts[0]
        for k in range(restarts):
            if k < 2:
                # global reassignment against the best curve so far
                t = _reproject_taus(best[1], pts)
            else:
                w = np.sort(rng.uniform(0.0, 1.0, pts.shape[0]))
                w[0], w[-1] = 0.0, 1.0
                blend = rng.uniform(0.3, 0.9)
                t = (1.0 - blend) * chord + blend * w
            try:
                res, curve = _joint_refine(pts, order, segments, t, refine_iters, done)
            except SingularFitError:
                continue
            if res < best[0]:
                best = (res, curve)
            if best[0] <= done:
                break
    return best[1]


def fit_residual(curve, points):
    """Root-mean-square distance from each point to its projection on the curve.

    Projection reuses the Gauss-Newton step from fitting, seeded by chord
    parameters, so the number is comparable across refits of the same data.
    """
    if isinstance(points, Polyline):
        pts = points.points
    else:
        pts = Polyline(points).points
    t = chord_parameters(pts)
    for _ in range(10):
        t = _refine_taus(curve, pts, t)
    d = curve.eval_many(t) - pts
    return float(np.sqrt(np.mean(np.sum(d * d, axis=1))))
