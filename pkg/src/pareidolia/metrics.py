"""Shape and motion agreement metrics between driving and driven sequences.

Shapes are compared through an eccentricity histogram: distances of boundary
samples from their centroid, normalized by the largest, binned over [0, 1].
Openness is the largest vertical gap between matched parameter samples of an
upper and a lower branch, normalized by the sequence-wide maximum so driving
and driven faces compare despite different units.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError

DEFAULT_BINS = 16
AREA_SAMPLES = 64


@dataclass(frozen=True)
class ShapeDescriptor:
    histogram: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.histogram, dtype=np.float64)
        if arr.ndim != 1 or arr.size < 1:
            raise ContractError("histogram must be a non-empty vector")
        object.__setattr__(self, "histogram", arr)


@dataclass
class PartTrace:
    """Per-frame openness and area of one animated part."""

    part: str
    open_ratios: np.ndarray
    areas: np.ndarray


def shape_descriptor(points, bins=DEFAULT_BINS):
    """L1-normalized eccentricity histogram of a closed boundary sample set."""
    if bins < 1:
        raise ContractError("bins must be >= 1")
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] < 3:
        raise ContractError("need at least three boundary points")
    xy = pts[:, :2]
    c = xy.mean(axis=0)
    d = np.linalg.norm(xy - c, axis=1)
    dmax = d.max()
    if dmax <= 0.0:
        raise ContractError("boundary is degenerate (all points coincide)")
    ecc = d / dmax
    idx = np.minimum((ecc * bins).astype(np.int64), bins - 1)
    hist = np.bincount(idx, minlength=bins).astype(np.float64)
    return ShapeDescriptor(hist / hist.sum())


def s_sim(a, b):
    """Cosine similarity of two shape descriptors."""
    x = a.histogram
    y = b.histogram
    if x.shape != y.shape:
        raise ContractError("descriptor sizes differ")
    nx = np.linalg.norm(x)
    ny = np.linalg.norm(y)
    if nx == 0.0 or ny == 0.0:
        raise ContractError("descriptor has zero norm")
    return float(np.dot(x, y) / (nx * ny))


def _branch_samples(curve, samples):
    taus = np.linspace(0.0, 1.0, samples)
    return curve.eval_many(taus)[:, :2]


def open_gap(upper, lower, samples=AREA_SAMPLES):
    """Largest vertical distance between matched parameter samples."""
    u = _branch_samples(upper, samples)
    l = _branch_samples(lower, samples)
    return float(np.max(np.abs(l[:, 1] - u[:, 1])))


def open_ratio(upper, lower, max_height, samples=AREA_SAMPLES):
    """Current gap over the sequence-wide maximum, clamped to [0, 1]."""
    if max_height <= 0.0:
        raise ContractError("max_height must be positive")
    return float(np.clip(open_gap(upper, lower, samples) / max_height, 0.0, 1.0))


def part_area(upper, lower, samples=AREA_SAMPLES):
    """Shoelace area of the closed ring through both branches."""
    u = _branch_samples(upper, samples)
    l = _branch_samples(lower, samples)
    ring = np.concatenate([u, l[::-1]])
    x = ring[:, 0]
    y = ring[:, 1]
    return float(0.5 * np.abs(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)))


def ring_samples(upper, lower, samples_per_branch=128):
    """Closed boundary sample ring for shape descriptors."""
    u = _branch_samples(upper, samples_per_branch)
    l = _branch_samples(lower, samples_per_branch)
    return np.concatenate([u, l[::-1]])


def co_acc(driving_ratios, driven_ratios):
    """Controller accuracy: one minus the mean absolute openness difference."""
    a = np.asarray(driving_ratios, dtype=np.float64)
    b = np.asarray(driven_ratios, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or a.size < 1:
        raise ContractError("ratio traces must be equal-length non-empty vectors")
    return float(1.0 - np.mean(np.abs(a - b)))


def m_acc(driving_areas, driven_areas):
    """Motion accuracy: agreement of frame-to-frame area-increase flags.

    A tie in area counts as not larger.
    """
    a = np.asarray(driving_areas, dtype=np.float64)
    b = np.asarray(driven_areas, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ContractError("area traces must be equal-length vectors")
    if a.size < 2:
        raise ContractError("need at least two frames")
    fa = np.diff(a) > 0.0
    fb = np.diff(b) > 0.0
    return float(np.mean(fa == fb))
