"""Regenerate the packaged reference face and the sample_data inputs.

Everything here is synthetic and deterministic, so the checked-in files can
be rebuilt byte for byte.  Run from the repo root after an editable install:

    python scripts/generate_sample_data.py
"""
from __future__ import annotations

import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from pareidolia.formats import (  # noqa: E402
    LandmarkSequenceDoc,
    annotation_from_dict,
    serialize_annotation,
    serialize_landmarks,
    serialize_reference,
)
from pareidolia.pipeline import image_to_bytes  # noqa: E402
from pareidolia.schema import DEFAULT_SCHEMA  # noqa: E402
from pareidolia.shape import ReferenceFace  # noqa: E402

ROOT = os.path.join(os.path.dirname(__file__), "..")


def reference_landmarks():
    """Neutral 68-point face, y down, closed mouth, nose proud of the plane."""
    pts = np.zeros((68, 3))
    ang = -np.pi / 2 + np.arange(17) * np.pi / 16
    pts[0:17, 0] = 0.72 * np.sin(ang)
    pts[0:17, 1] = -0.05 + 0.83 * np.cos(ang)

    k = np.arange(5)
    pts[17:22] = np.column_stack(
        [-0.52 + 0.1 * k, -0.42 - 0.04 * np.sin(np.pi * k / 4), np.full(5, 0.08)]
    )
    pts[22:27] = np.column_stack(
        [0.12 + 0.1 * k, -0.42 - 0.04 * np.sin(np.pi * (4 - k) / 4), np.full(5, 0.08)]
    )

    pts[27:31] = [(0, -0.32, 0.12), (0, -0.20, 0.18), (0, -0.08, 0.24), (0, 0.02, 0.30)]
    pts[31:36] = [
        (-0.12, 0.12, 0.16),
        (-0.06, 0.14, 0.20),
        (0.0, 0.15, 0.22),
        (0.06, 0.14, 0.20),
        (0.12, 0.12, 0.16),
    ]

    pts[36:42] = [
        (-0.42, -0.150, 0.04),
        (-0.36, -0.185, 0.06),
        (-0.28, -0.185, 0.06),
        (-0.22, -0.150, 0.05),
        (-0.28, -0.115, 0.06),
        (-0.36, -0.115, 0.06),
    ]
    pts[42:48] = [
        (0.22, -0.150, 0.05),
        (0.28, -0.185, 0.06),
        (0.36, -0.185, 0.06),
        (0.42, -0.150, 0.04),
        (0.36, -0.115, 0.06),
        (0.28, -0.115, 0.06),
    ]

    pts[48:60] = [
        (-0.25, 0.420, 0.080),
        (-0.16, 0.385, 0.085),
        (-0.08, 0.370, 0.090),
        (0.00, 0.375, 0.090),
        (0.08, 0.370, 0.090),
        (0.16, 0.385, 0.085),
        (0.25, 0.420, 0.080),
        (0.16, 0.465, 0.085),
        (0.08, 0.485, 0.090),
        (0.00, 0.490, 0.090),
        (-0.08, 0.485, 0.090),
        (-0.16, 0.465, 0.085),
    ]
    pts[60:68] = [
        (-0.18, 0.426, 0.070),
        (-0.09, 0.421, 0.072),
        (0.00, 0.419, 0.073),
        (0.09, 0.421, 0.072),
        (0.18, 0.426, 0.070),
        (0.09, 0.431, 0.068),
        (0.00, 0.433, 0.067),
        (-0.09, 0.431, 0.068),
    ]
    return pts


def drive_sequence(base, frames=12):
    """Mouth opens linearly from closed to wide; everything else holds still."""
    inner_upper = {61: 0.8, 62: 1.0, 63: 0.8}
    inner_lower = {67: 0.8, 66: 1.0, 65: 0.8}
    outer_upper = {49: 0.4, 50: 0.8, 51: 1.0, 52: 0.8, 53: 0.4}
    outer_lower = {59: 0.4, 58: 0.8, 57: 1.0, 56: 0.8, 55: 0.4}
    jaw = {6: 0.3, 7: 0.7, 8: 1.0, 9: 0.7, 10: 0.3}

    seq = []
    for t in range(frames):
        opening = 0.14 * t / (frames - 1)
        f = base.copy()
        for i, w in inner_upper.items():
            f[i, 1] -= 0.5 * opening * w
        for i, w in inner_lower.items():
            f[i, 1] += 0.5 * opening * w
        for i, w in outer_upper.items():
            f[i, 1] -= 0.3 * opening * w
        for i, w in outer_lower.items():
            f[i, 1] += 0.3 * opening * w
        for i, w in jaw.items():
            f[i, 1] += 0.25 * opening * w
        seq.append(f)
    return np.stack(seq)


def _ellipse(xx, yy, cx, cy, rx, ry):
    return ((xx - cx) / rx) ** 2 + ((yy - cy) / ry) ** 2


def _soft(dist, edge=0.15):
    return np.clip((1.0 - dist) / edge, 0.0, 1.0)


def pareidolia_image(size=256):
    """A knot-in-wood face: two dark eye knots and a mouth-like split."""
    rng = np.random.default_rng(7)
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)

    base = 0.62 + 0.10 * (yy / size) - 0.05 * (xx / size)
    grain = 0.045 * np.sin(yy * 0.35 + 3.0 * np.sin(xx * 0.02))
    grain += 0.02 * np.sin(yy * 1.7 + 0.5)
    noise = 0.015 * rng.standard_normal((size, size))
    img = base + grain + noise

    blob = _soft(_ellipse(xx, yy, 128, 140, 110, 125), 0.4)
    img += 0.05 * blob

    for cx in (88, 168):
        d = _ellipse(xx, yy, cx, 108, 17, 11)
        img -= 0.45 * _soft(d)
        img -= 0.10 * _soft(d / 2.2, 0.5)
    dm = _ellipse(xx, yy, 128, 170, 42, 5)
    img -= 0.40 * _soft(dm)
    img -= 0.08 * _soft(dm / 3.0, 0.6)

    img = np.clip(img, 0.0, 1.0)
    rgb = np.stack([img * 0.96, img * 0.82, img * 0.66], axis=2)
    return np.clip(rgb, 0.0, 1.0)


def _arc(cx, cy, rx, ry, sign, n=7):
    u = np.linspace(-1.0, 1.0, n)
    x = cx + rx * u
    y = cy + sign * ry * np.sqrt(np.maximum(0.0, 1.0 - u * u))
    return np.column_stack([x, y])


def annotation_doc():
    branches = [
        {"role": "mouth_upper_inner", "points": _arc(128, 170, 42, 5, -1).tolist(), "n_controls": 6},
        {"role": "mouth_lower_inner", "points": _arc(128, 170, 42, 5, +1).tolist(), "n_controls": 6},
        {"role": "eye_right_upper", "points": _arc(88, 108, 17, 11, -1, 5).tolist(), "n_controls": 4},
        {"role": "eye_right_lower", "points": _arc(88, 108, 17, 11, +1, 5).tolist(), "n_controls": 4},
        {"role": "eye_left_upper", "points": _arc(168, 108, 17, 11, -1, 5).tolist(), "n_controls": 4},
        {"role": "eye_left_lower", "points": _arc(168, 108, 17, 11, +1, 5).tolist(), "n_controls": 4},
    ]
    doc = {
        "image": "pareidolia.png",
        "coordinate_origin": [0.0, 0.0],
        "branches": branches,
    }
    return annotation_from_dict(doc, DEFAULT_SCHEMA)


def main():
    base = reference_landmarks()
    ref = ReferenceFace(base)  # validates the closed-mouth contract

    rigid = base[list(DEFAULT_SCHEMA.rigid_indices)]
    centered = rigid - rigid.mean(axis=0)
    sv = np.linalg.svd(centered, compute_uv=False)
    assert sv[2] > 1e-6 * sv[0], "rigid subset must span all three axes"

    data_dir = os.path.join(ROOT, "src", "pareidolia", "data")
    os.makedirs(data_dir, exist_ok=True)
    with open(os.path.join(data_dir, "reference_landmarks.json"), "w", encoding="utf-8") as fh:
        fh.write(serialize_reference(ref))

    sample = os.path.join(ROOT, "sample_data")
    os.makedirs(sample, exist_ok=True)
    with open(os.path.join(sample, "pareidolia.png"), "wb") as fh:
        fh.write(image_to_bytes(pareidolia_image()))
    with open(os.path.join(sample, "annotation.json"), "w", encoding="utf-8") as fh:
        fh.write(serialize_annotation(annotation_doc()))
    with open(os.path.join(sample, "mouth_open.landmarks.json"), "w", encoding="utf-8") as fh:
        fh.write(serialize_landmarks(LandmarkSequenceDoc(25.0, drive_sequence(base))))
    print("sample data written")


if __name__ == "__main__":
    main()
