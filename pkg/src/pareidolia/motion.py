"""Dense motion synthesis from boundary motion seeds.

A seed is a boundary branch at rest plus its animated counterpart.  Its
displacement is spread to nearby pixels by locating, for each pixel, the
scaled copy of the rest curve passing through it: scaling about the curve's
control-point centroid by omega in [omega_min, omega_max], parameter tau along
the curve.  The seed's displacement at tau is then carried over, attenuated by
a decay weight in omega.  Overlapping seeds combine by decay-weighted average.

The dense field maps rest pixels forward; warping needs the inverse map, which
is built by forward-splatting negated vectors with bilinear weights and then
patching unreached pixels from their nearest valid neighbour with a
first-order (Jacobian) extrapolation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import maximum_filter
from scipy.spatial import cKDTree

from .bezier import composite_from_controls
from .errors import ContractError, DomainError

_OMEGA_STEPS = 65  # grid resolution of the scale search: (max-min)/64 spacing
_TAU_STEPS = 256


@dataclass(frozen=True)
class DecayConfig:
    kind: str = "linear"
    omega_min: float = 0.25
    omega_max: float = 2.5

    def __post_init__(self):
        if self.kind not in ("linear", "sine"):
            raise DomainError(f"unknown decay kind {self.kind!r}")
        if not 0.0 < self.omega_min < 1.0 < self.omega_max:
            raise DomainError(
                f"decay bounds must satisfy 0 < min < 1 < max, got "
                f"[{self.omega_min}, {self.omega_max}]"
            )


def decay(omega, cfg):
    """Decay weight of a scale factor: 1 at omega=1, fading to 0 at the bounds."""
    o = np.asarray(omega, dtype=np.float64)
    scalar = o.ndim == 0
    o = np.atleast_1d(o)
    delta = np.where(o > 1.0, cfg.omega_max - 1.0, 1.0 - cfg.omega_min)
    x = np.abs(o - 1.0) / delta
    if cfg.kind == "linear":
        lam = np.maximum(0.0, 1.0 - x)
    else:
        lam = 0.5 * (1.0 + np.cos(np.pi * np.minimum(1.0, x)))
    lam[(o < cfg.omega_min) | (o > cfg.omega_max)] = 0.0
    return float(lam[0]) if scalar else lam


@dataclass(frozen=True)
class MotionSeed:
    """A rest boundary curve, its animated counterpart, and sampled displacements."""

    role: str
    rest: object  # 2-d CompositeBezier
    moved: object
    positions: np.ndarray  # (m, 2) samples of the rest curve
    displacements: np.ndarray  # (m, 2) moved minus rest at matching tau

    @property
    def anchor(self):
        return self.rest.control_points().mean(axis=0)


def _project_xy(curve):
    pts = curve.control_points()[:, :2]
    return composite_from_controls(pts, curve.segment_order, curve.num_segments)


def make_seeds(rest_set, animated_set, samples_per_branch=128):
    """Pair each rest branch with its animated branch and sample displacements."""
    if rest_set.roles() != animated_set.roles():
        raise ContractError("rest and animated boundary sets carry different roles")
    if samples_per_branch < 2:
        raise DomainError("samples_per_branch must be >= 2")
    taus = np.linspace(0.0, 1.0, samples_per_branch)
    seeds = []
    for b in rest_set.branches:
        moved = animated_set.branch(b.role)
        rest2 = _project_xy(b.curve)
        moved2 = _project_xy(moved.curve)
        if rest2.control_points().shape != moved2.control_points().shape:
            raise ContractError(f"branch {b.role!r}: control counts differ")
        pos = rest2.eval_many(taus)
        disp = moved2.eval_many(taus) - pos
        seeds.append(MotionSeed(b.role, rest2, moved2, pos, disp))
    return seeds


def _field_arrays(vectors, valid):
    vec = np.asarray(vectors, dtype=np.float64)
    val = np.asarray(valid, dtype=bool)
    if vec.ndim != 3 or vec.shape[2] != 2:
        raise ContractError(f"vectors must be (H, W, 2), got {vec.shape}")
    if val.shape != vec.shape[:2]:
        raise ContractError("validity shape does not match vectors")
    if not np.all(np.isfinite(vec)):
        raise ContractError("field contains non-finite vectors")
    vec = vec.copy()
    vec[~val] = 0.0
    return vec, val


@dataclass
class MotionField:
    """Forward dense motion over a pixel grid; invalid pixels carry zero."""

    vectors: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        self.vectors, self.valid = _field_arrays(self.vectors, self.valid)

    @property
    def height(self):
        return self.vectors.shape[0]

    @property
    def width(self):
        return self.vectors.shape[1]


@dataclass
class InverseMotionField(MotionField):
    """Maps animated-grid pixels back to source pixels."""

    direction = "inverse"


@dataclass
class MotionMask:
    """1 where the inverse field moves content, 0 elsewhere."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values)
        if arr.ndim != 2:
            raise ContractError("mask must be 2-d")
        if not np.all((arr == 0) | (arr == 1)):
            raise ContractError("mask values must be 0 or 1")
        self.values = arr.astype(np.uint8)


class _SeedGeometry:
    """Scaled-curve sample grid and lookup structure for one seed."""

    def __init__(self, seed, cfg):
        self.seed = seed
        self.cfg = cfg
        self.taus = np.linspace(0.0, 1.0, _TAU_STEPS)
        self.omegas = np.linspace(cfg.omega_min, cfg.omega_max, _OMEGA_STEPS)
        self.anchor = seed.anchor
        c = seed.rest.eval_many(self.taus)
        if np.max(np.linalg.norm(c - self.anchor, axis=1)) < 1e-9:
            raise ContractError(f"seed {seed.role!r} curve is degenerate")
        grid = self.anchor + self.omegas[:, None, None] * (c[None, :, :] - self.anchor)
        self.grid = grid
        self.tree = cKDTree(grid.reshape(-1, 2))
        dt = np.linalg.norm(grid[:, 1:] - grid[:, :-1], axis=2).max()
        dw = np.linalg.norm(grid[1:] - grid[:-1], axis=2).max()
        self.cell_bound = 0.5 * (dt + dw)

    def bbox(self, width, height, d_tol):
        pad = d_tol + self.cell_bound + 1.0
        lo = self.grid.reshape(-1, 2).min(axis=0) - pad
        hi = self.grid.reshape(-1, 2).max(axis=0) + pad
        x0 = max(0, int(np.floor(lo[0])))
        y0 = max(0, int(np.floor(lo[1])))
        x1 = min(width - 1, int(np.ceil(hi[0])))
        y1 = min(height - 1, int(np.ceil(hi[1])))
        return x0, y0, x1, y1

    def locate_many(self, points, d_tol):
        """Best (omega, tau) per query point; grid argmin plus one refinement."""
        n = points.shape[0]
        omega = np.full(n, np.nan)
        tau = np.full(n, np.nan)
        ok = np.zeros(n, dtype=bool)
        if n == 0:
            return omega, tau, ok
        dist, idx = self.tree.query(points, distance_upper_bound=d_tol + self.cell_bound)
        cand = np.isfinite(dist)
        if not np.any(cand):
            return omega, tau, ok
        p = points[cand]
        w0 = self.omegas[idx[cand] // _TAU_STEPS]
        t0 = self.taus[idx[cand] % _TAU_STEPS]
        d0 = dist[cand]

        # one Gauss-Newton step on (omega, tau) jointly
        ct = self.seed.rest.eval_many(t0)
        dct = self.seed.rest.derivative_many(t0)
        u = ct - self.anchor
        v = w0[:, None] * dct
        r = self.anchor + w0[:, None] * u - p
        det = u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]
        safe = np.abs(det) > 1e-12
        dw = np.where(safe, (v[:, 0] * r[:, 1] - v[:, 1] * r[:, 0]) / np.where(safe, det, 1.0), 0.0)
        dt_ = np.where(safe, (u[:, 1] * r[:, 0] - u[:, 0] * r[:, 1]) / np.where(safe, det, 1.0), 0.0)
        w1 = np.clip(w0 + dw, self.cfg.omega_min, self.cfg.omega_max)
        t1 = np.clip(t0 + dt_, 0.0, 1.0)
        p1 = self.anchor + w1[:, None] * (self.seed.rest.eval_many(t1) - self.anchor)
        d1 = np.linalg.norm(p1 - p, axis=1)

        better = d1 < d0
        wb = np.where(better, w1, w0)
        tb = np.where(better, t1, t0)
        db = np.where(better, d1, d0)
        hit = db <= d_tol
        sel = np.flatnonzero(cand)[hit]
        omega[sel] = wb[hit]
        tau[sel] = tb[hit]
        ok[sel] = True
        return omega, tau, ok


def locate(p, seed, cfg=None, d_tol=0.75):
    """Scale and parameter of the scaled seed curve nearest to pixel p.

    Returns (omega, tau) when the distance after refinement is within d_tol,
    None otherwise.
    """
    cfg = cfg or DecayConfig()
    geo = _SeedGeometry(seed, cfg)
    pt = np.asarray(p, dtype=np.float64).reshape(1, 2)
    omega, tau, ok = geo.locate_many(pt, d_tol)
    if not ok[0]:
        return None
    return float(omega[0]), float(tau[0])


def spread_and_combine(seeds, width, height, cfg=None, d_tol=0.75):
    """Spread every seed's boundary motion into a dense forward field.

    Each contribution is the seed displacement at the located tau, attenuated
    by the decay weight of the located omega; overlaps average with the decay
    weights.  Pixels no seed reaches stay valid with zero motion.
    """
    if not seeds:
        raise ContractError("need at least one motion seed")
    if width < 1 or height < 1:
        raise DomainError("field dimensions must be positive")
    cfg = cfg or DecayConfig()
    acc_w = np.zeros((height, width))
    acc_v = np.zeros((height, width, 2))
    for seed in seeds:
        geo = _SeedGeometry(seed, cfg)
        x0, y0, x1, y1 = geo.bbox(width, height, d_tol)
        if x1 < x0 or y1 < y0:
            continue
        xs, ys = np.meshgrid(np.arange(x0, x1 + 1), np.arange(y0, y1 + 1))
        pts = np.column_stack([xs.ravel(), ys.ravel()]).astype(np.float64)
        omega, tau, ok = geo.locate_many(pts, d_tol)
        if not np.any(ok):
            continue
        lam = decay(omega[ok], cfg)
        disp = seed.moved.eval_many(tau[ok]) - seed.rest.eval_many(tau[ok])
        py = ys.ravel()[ok]
        px = xs.ravel()[ok]
        acc_w[py, px] += lam
        acc_v[py, px] += (lam * lam)[:, None] * disp
    vec = np.zeros_like(acc_v)
    hit = acc_w > 0.0
    vec[hit] = acc_v[hit] / acc_w[hit][:, None]
    return MotionField(vec, np.ones((height, width), dtype=bool))


def invert_field(field, w_min=1e-3):
    """Invert a forward field by bilinear forward splatting of negated vectors.

    Pixels whose accumulated splat weight stays below w_min are left invalid
    (zero vector) for the fill stage.
    """
    if not 0.0 < w_min:
        raise DomainError("w_min must be positive")
    h, w = field.vectors.shape[:2]
    ys, xs = np.indices((h, w))
    src = field.valid.ravel()
    vx = field.vectors[:, :, 0].ravel()[src]
    vy = field.vectors[:, :, 1].ravel()[src]
    tx = xs.ravel()[src] + vx
    ty = ys.ravel()[src] + vy
    x0 = np.floor(tx).astype(np.int64)
    y0 = np.floor(ty).astype(np.int64)
    fx = tx - x0
    fy = ty - y0
    acc_w = np.zeros(h * w)
    acc_x = np.zeros(h * w)
    acc_y = np.zeros(h * w)
    for dx, dy, wgt in (
        (0, 0, (1.0 - fx) * (1.0 - fy)),
        (1, 0, fx * (1.0 - fy)),
        (0, 1, (1.0 - fx) * fy),
        (1, 1, fx * fy),
    ):
        cx = x0 + dx
        cy = y0 + dy
        inside = (cx >= 0) & (cx < w) & (cy >= 0) & (cy < h)
        flat = cy[inside] * w + cx[inside]
        np.add.at(acc_w, flat, wgt[inside])
        np.add.at(acc_x, flat, (wgt * -vx)[inside])
        np.add.at(acc_y, flat, (wgt * -vy)[inside])
    nz = acc_w >= w_min
    valid = nz.reshape(h, w)
    ox = np.zeros(h * w)
    oy = np.zeros(h * w)
    ox[nz] = acc_x[nz] / acc_w[nz]
    oy[nz] = acc_y[nz] / acc_w[nz]
    out = np.stack([ox.reshape(h, w), oy.reshape(h, w)], axis=2)
    return InverseMotionField(out, valid)


def _jacobian(vec, valid):
    """Forward-else-backward finite differences using valid neighbours only."""
    vr = np.zeros_like(valid)
    vr[:, :-1] = valid[:, 1:]
    vl = np.zeros_like(valid)
    vl[:, 1:] = valid[:, :-1]
    fwd = np.zeros_like(vec)
    fwd[:, :-1] = vec[:, 1:] - vec[:, :-1]
    bwd = np.zeros_like(vec)
    bwd[:, 1:] = vec[:, 1:] - vec[:, :-1]
    jx = np.where(vr[:, :, None], fwd, np.where(vl[:, :, None], bwd, 0.0))
    vd = np.zeros_like(valid)
    vd[:-1, :] = valid[1:, :]
    vu = np.zeros_like(valid)
    vu[1:, :] = valid[:-1, :]
    fwd = np.zeros_like(vec)
    fwd[:-1, :] = vec[1:, :] - vec[:-1, :]
    bwd = np.zeros_like(vec)
    bwd[1:, :] = vec[1:, :] - vec[:-1, :]
    jy = np.where(vd[:, :, None], fwd, np.where(vu[:, :, None], bwd, 0.0))
    return jx, jy


def _ring_offsets(max_step):
    offs = [
        (dy, dx)
        for dy in range(-max_step, max_step + 1)
        for dx in range(-max_step, max_step + 1)
        if (dy, dx) != (0, 0)
    ]
    offs.sort(key=lambda o: (o[0] * o[0] + o[1] * o[1], o[0], o[1]))
    return offs


def first_order_fill(inv, max_step=2):
    """Patch invalid pixels by first-order extrapolation from valid neighbours.

    Rings of invalid pixels within Chebyshev distance max_step of the valid
    region are filled simultaneously per pass, each from its nearest valid
    pixel using that pixel's finite-difference Jacobian.  Pixels no ring ever
    reaches keep zero motion and stay flagged invalid.
    """
    if max_step not in (1, 2):
        raise DomainError(f"max_step must be 1 or 2, got {max_step}")
    vec = inv.vectors.copy()
    valid = inv.valid.copy()
    h, w = valid.shape
    offsets = _ring_offsets(max_step)
    size = 2 * max_step + 1
    while True:
        if valid.all() or not valid.any():
            break
        ring = ~valid & maximum_filter(valid, size=size, mode="constant")
        if not np.any(ring):
            break
        jx, jy = _jacobian(vec, valid)
        src_dy = np.zeros((h, w), dtype=np.int64)
        src_dx = np.zeros((h, w), dtype=np.int64)
        assigned = np.zeros((h, w), dtype=bool)
        for dy, dx in offsets:
            shifted = np.zeros((h, w), dtype=bool)
            ys0 = max(0, -dy)
            ys1 = min(h, h - dy)
            xs0 = max(0, -dx)
            xs1 = min(w, w - dx)
            shifted[ys0:ys1, xs0:xs1] = valid[ys0 + dy : ys1 + dy, xs0 + dx : xs1 + dx]
            take = ring & ~assigned & shifted
            if np.any(take):
                src_dy[take] = dy
                src_dx[take] = dx
                assigned[take] = True
        qy, qx = np.nonzero(assigned)
        py = qy + src_dy[qy, qx]
        px = qx + src_dx[qy, qx]
        step_x = (qx - px).astype(np.float64)
        step_y = (qy - py).astype(np.float64)
        vec[qy, qx] = (
            vec[py, px]
            + jx[py, px] * step_x[:, None]
            + jy[py, px] * step_y[:, None]
        )
        valid[qy, qx] = True
    return InverseMotionField(vec, valid)


def motion_mask(inv, m_eps=1e-4):
    """Binary mask of pixels whose inverse displacement exceeds m_eps."""
    if m_eps < 0.0:
        raise DomainError("m_eps must be >= 0")
    mag = np.linalg.norm(inv.vectors, axis=2)
    return MotionMask((mag > m_eps).astype(np.uint8))
