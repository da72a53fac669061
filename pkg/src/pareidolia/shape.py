"""Landmark frames, similarity alignment, boundary fitting, motion controllers.

Motion controllers are per-control-point coordinate ratios between an aligned
human boundary and the neutral reference boundary.  Both sides are expressed
in a frame anchored at the part centroid, nudged so that no reference
coordinate sits within eps_den of zero along any axis; the ratios are then
well defined and applying them to the reference reproduces the human shape.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bezier import (
    CompositeBezier,
    Polyline,
    chord_parameters,
    composite_from_controls,
    fit_composite,
)
from .errors import (
    AlignmentError,
    ContractError,
    DivisionGuardError,
    MappingError,
)
from .schema import DEFAULT_SCHEMA, NUM_LANDMARKS


@dataclass
class LandmarkFrame:
    """One frame of 68 3-d facial landmarks."""

    points: np.ndarray
    frame_index: int = 0

    def __post_init__(self):
        arr = np.asarray(self.points, dtype=np.float64)
        if arr.shape != (NUM_LANDMARKS, 3):
            raise ContractError(f"expected (68, 3) landmarks, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ContractError("landmarks contain non-finite values")
        if self.frame_index < 0:
            raise ContractError("frame_index must be >= 0")
        self.points = arr


@dataclass
class ReferenceFace:
    """Neutral mouth-closed reference landmark set."""

    landmarks: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.landmarks, dtype=np.float64)
        if arr.shape != (NUM_LANDMARKS, 3):
            raise ContractError(f"expected (68, 3) landmarks, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ContractError("landmarks contain non-finite values")
        width = np.linalg.norm(arr[64] - arr[60])
        if width <= 0.0:
            raise ContractError("reference mouth has zero width")
        gap = np.max(np.abs(arr[[61, 62, 63], 1] - arr[[67, 66, 65], 1]))
        if gap >= 0.05 * width:
            raise ContractError(
                f"reference mouth is not closed: gap {gap:.4f} vs width {width:.4f}"
            )
        self.landmarks = arr


def align_to_reference(frame, reference, schema=DEFAULT_SCHEMA):
    """Similarity-align a landmark frame onto the reference.

    Rotation, uniform scale and translation are solved in closed form over the
    schema's rigid landmark subset (nose bridge and eye corners).
    """
    pts = frame.points if isinstance(frame, LandmarkFrame) else LandmarkFrame(frame).points
    idx = list(schema.rigid_indices)
    x = pts[idx]
    y = reference.landmarks[idx]
    mu_x = x.mean(axis=0)
    mu_y = y.mean(axis=0)
    xc = x - mu_x
    yc = y - mu_y
    sv = np.linalg.svd(xc, compute_uv=False)
    if sv[2] <= 1e-12 * max(sv[0], 1e-300):
        raise AlignmentError("rigid landmark subset is degenerate (rank < 3)")
    cov = yc.T @ xc / x.shape[0]
    u, d, vt = np.linalg.svd(cov)
    sgn = np.ones(3)
    if np.linalg.det(u) * np.linalg.det(vt) < 0.0:
        sgn[2] = -1.0
    rot = u @ np.diag(sgn) @ vt
    var_x = np.mean(np.sum(xc * xc, axis=1))
    scale = float(np.sum(d * sgn)) / var_x
    t = mu_y - scale * rot @ mu_x
    out = scale * pts @ rot.T + t
    index = frame.frame_index if isinstance(frame, LandmarkFrame) else 0
    return LandmarkFrame(out, index)


@dataclass(frozen=True)
class Branch:
    role: str
    part: str
    curve: CompositeBezier


@dataclass(frozen=True)
class BoundarySet:
    """Fitted boundary branches of one face."""

    face_kind: str
    branches: tuple

    def __post_init__(self):
        if self.face_kind not in ("human", "reference", "pareidolia"):
            raise ContractError(f"unknown face kind {self.face_kind!r}")

    def roles(self):
        return [b.role for b in self.branches]

    def branch(self, role):
        for b in self.branches:
            if b.role == role:
                return b
        raise MappingError(f"boundary set has no branch {role!r}")


def densify_polyline(points, count):
    """Resample an ordered point run to `count` points at uniform chord fractions."""
    pts = np.asarray(points, dtype=np.float64)
    u = chord_parameters(pts)
    s = np.linspace(0.0, 1.0, count)
    out = np.column_stack([np.interp(s, u, pts[:, a]) for a in range(pts.shape[1])])
    return out


def build_boundaries(landmarks, schema=DEFAULT_SCHEMA, order=5, segments=1, face_kind="human"):
    """Fit every schema branch of a landmark frame as a composite Bezier.

    The landmark run of each branch is densified along its chords before
    fitting so the sample count always covers the unknowns.
    """
    if isinstance(landmarks, LandmarkFrame):
        pts = landmarks.points
    elif isinstance(landmarks, ReferenceFace):
        pts = landmarks.landmarks
    else:
        pts = LandmarkFrame(landmarks).points
    count = max(100, 10 * (segments * order + 1))
    branches = []
    for spec in schema.branches:
        raw = Polyline(pts[list(spec.landmark_indices)])
        dense = densify_polyline(raw.points, count)
        # plain chord-parameter solve: refinement buys nothing on densified
        # polylines and its line search is not stable under last-bit input
        # changes, which must not leak through the ratio computation
        curve = fit_composite(dense, order, segments, refine_iters=0)
        branches.append(Branch(spec.role, spec.part, curve))
    return BoundarySet(face_kind, tuple(branches))


@dataclass(frozen=True)
class ControllerBranch:
    role: str
    ratios: np.ndarray  # (K, 3) per-control-point coordinate ratios


@dataclass(frozen=True)
class MotionControllerSet:
    branches: tuple

    def roles(self):
        return [b.role for b in self.branches]

    def branch(self, role):
        for b in self.branches:
            if b.role == role:
                return b
        raise MappingError(f"no controllers for branch {role!r}")


def _axis_shift(offsets, eps):
    # deterministic search for a nudge that keeps every offset at least eps
    # away from zero along this axis
    for k in range(65):
        for s in ((0.0,) if k == 0 else (2.0 * k * eps, -2.0 * k * eps)):
            if np.min(np.abs(offsets - s)) >= eps:
                return s
    raise DivisionGuardError(
        "could not place a division-safe origin for this part"
    )


def part_origin(points, eps_den):
    """Part centroid nudged so no coordinate offset is within eps_den of zero."""
    pts = np.asarray(points, dtype=np.float64)
    c = pts.mean(axis=0)
    shifts = np.array([_axis_shift(pts[:, a] - c[a], eps_den) for a in range(pts.shape[1])])
    return c + shifts


def _grouped_by_part(boundary_set):
    groups = {}
    for b in boundary_set.branches:
        groups.setdefault(b.part, []).append(b)
    return groups


def compute_controllers(human, reference, eps_den=1e-6):
    """Coordinate ratios of human vs reference control points, per branch.

    Both boundary sets must carry the same roles with identical control
    counts.  Applying the result back onto the reference reproduces the human
    control points.
    """
    h_roles = human.roles()
    if h_roles != reference.roles():
        raise ContractError("human and reference branch roles differ")
    origins = {}
    for part, branches in _grouped_by_part(reference).items():
        stacked = np.concatenate([b.curve.control_points() for b in branches])
        origins[part] = part_origin(stacked, eps_den)
    out = []
    for role in h_roles:
        hb = human.branch(role)
        rb = reference.branch(role)
        h = hb.curve.control_points()
        f = rb.curve.control_points()
        if h.shape != f.shape:
            raise ContractError(f"branch {role!r}: control counts differ")
        o = origins[rb.part]
        f_off = f - o
        if np.min(np.abs(f_off)) < eps_den:
            raise DivisionGuardError(
                f"branch {role!r}: reference coordinate within {eps_den} of origin"
            )
        out.append(ControllerBranch(role, (h - o) / f_off))
    return MotionControllerSet(tuple(out))


def adapt_controllers(controllers, target):
    """Resample controller lists to the target's per-branch control counts.

    Shrinking picks uniformly spaced indices, growing interpolates linearly on
    the index grid; the first and last controller always survive.  Running the
    adaptation twice against the same target changes nothing.
    """
    out = []
    for b in target.branches:
        src = controllers.branch(b.role).ratios
        k_src = src.shape[0]
        k_tgt = b.curve.control_points().shape[0]
        if k_tgt == k_src:
            out.append(ControllerBranch(b.role, src.copy()))
            continue
        pos = np.linspace(0.0, k_src - 1.0, k_tgt)
        if k_tgt < k_src:
            idx = np.floor(pos + 0.5).astype(np.int64)
            out.append(ControllerBranch(b.role, src[idx]))
        else:
            grid = np.arange(k_src, dtype=np.float64)
            res = np.column_stack(
                [np.interp(pos, grid, src[:, a]) for a in range(src.shape[1])]
            )
            out.append(ControllerBranch(b.role, res))
    return MotionControllerSet(tuple(out))


def apply_controllers(controllers, target, eps_den=1e-6):
    """Multiply target control-point offsets by the controller ratios.

    Offsets are taken about the target's own part origin (same nudge rule as
    on the compute side).  Ratios exactly equal to one leave the coordinate
    bit-for-bit untouched.
    """
    origins = {}
    for part, branches in _grouped_by_part(target).items():
        stacked = np.concatenate([b.curve.control_points() for b in branches])
        origins[part] = part_origin(stacked, eps_den)
    out = []
    for b in target.branches:
        r = controllers.branch(b.role).ratios
        pts = b.curve.control_points()
        if r.shape != pts.shape:
            raise ContractError(
                f"branch {b.role!r}: controller count {r.shape[0]} does not match "
                f"target control count {pts.shape[0]}"
            )
        o = origins[b.part]
        moved = o + r * (pts - o)
        moved = np.where(r == 1.0, pts, moved)
        curve = composite_from_controls(
            moved, b.curve.segment_order, b.curve.num_segments
        )
        out.append(Branch(b.role, b.part, curve))
    return BoundarySet(target.face_kind, tuple(out))
