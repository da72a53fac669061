"""Structured text documents: annotations, landmark sequences, metric reports.

Everything is strict JSON: unknown fields are rejected, numbers must be
numbers, and serialization is canonical so parse/serialize round trips are
byte identical.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ParseError, ValidationError
from .schema import DEFAULT_SCHEMA, NUM_LANDMARKS
from .shape import ReferenceFace


def _load_json(text, what):
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"{what}: {e.msg}", line=e.lineno, col=e.colno) from e


def _require_keys(obj, keys, what):
    if not isinstance(obj, dict):
        raise ValidationError(f"{what} must be an object")
    missing = [k for k in keys if k not in obj]
    if missing:
        raise ValidationError(f"{what} missing fields: {missing}")
    unknown = sorted(set(obj) - set(keys))
    if unknown:
        raise ValidationError(f"{what} has unknown fields: {unknown}")


def _number(x, what):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ValidationError(f"{what} must be a number")
    v = float(x)
    if not np.isfinite(v):
        raise ValidationError(f"{what} must be finite")
    return v


def _point_list(obj, dim, what):
    if not isinstance(obj, list) or not obj:
        raise ValidationError(f"{what} must be a non-empty list")
    out = []
    for i, p in enumerate(obj):
        if not isinstance(p, list) or len(p) != dim:
            raise ValidationError(f"{what}[{i}] must be a list of {dim} numbers")
        out.append([_number(v, f"{what}[{i}]") for v in p])
    return np.array(out, dtype=np.float64)


@dataclass(frozen=True)
class AnnotationBranch:
    role: str
    points: np.ndarray  # (m, 2) labeled pixel positions
    n_controls: int


@dataclass(frozen=True)
class AnnotationDoc:
    """Labeled boundary branches of one pareidolia image."""

    image_ref: str
    coordinate_origin: np.ndarray  # (2,) offset added to branch points
    branches: tuple


def annotation_from_dict(obj, schema=DEFAULT_SCHEMA):
    _require_keys(obj, ["image", "coordinate_origin", "branches"], "annotation")
    if not isinstance(obj["image"], str) or not obj["image"]:
        raise ValidationError("annotation image must be a non-empty string")
    origin = _point_list([obj["coordinate_origin"]], 2, "coordinate_origin")[0]
    if not isinstance(obj["branches"], list) or not obj["branches"]:
        raise ValidationError("annotation needs at least one branch")
    branches = []
    seen = set()
    for i, b in enumerate(obj["branches"]):
        what = f"branches[{i}]"
        _require_keys(b, ["role", "points", "n_controls"], what)
        role = b["role"]
        if not isinstance(role, str):
            raise ValidationError(f"{what} role must be a string")
        schema.branch(role)  # raises SchemaError for unknown roles
        if role in seen:
            raise ValidationError(f"duplicate branch role {role!r}")
        seen.add(role)
        n = b["n_controls"]
        if isinstance(n, bool) or not isinstance(n, int) or not 2 <= n <= 32:
            raise ValidationError(f"{what} n_controls must be an integer in 2..32")
        pts = _point_list(b["points"], 2, f"{what} points")
        if pts.shape[0] < 2:
            raise ValidationError(f"{what} needs at least two points")
        branches.append(AnnotationBranch(role, pts, n))
    return AnnotationDoc(obj["image"], origin, tuple(branches))


def parse_annotation(text, schema=DEFAULT_SCHEMA):
    return annotation_from_dict(_load_json(text, "annotation"), schema)


def serialize_annotation(doc):
    obj = {
        "image": doc.image_ref,
        "coordinate_origin": [float(v) for v in doc.coordinate_origin],
        "branches": [
            {
                "role": b.role,
                "points": [[float(x), float(y)] for x, y in b.points],
                "n_controls": int(b.n_controls),
            }
            for b in doc.branches
        ],
    }
    return json.dumps(obj, indent=2) + "\n"


@dataclass(frozen=True)
class LandmarkSequenceDoc:
    """A driving sequence of 68-point landmark frames."""

    fps: float
    frames: np.ndarray  # (F, 68, 3)


def landmarks_from_dict(obj):
    _require_keys(obj, ["fps", "frames"], "landmark sequence")
    fps = _number(obj["fps"], "fps")
    if fps <= 0.0:
        raise ValidationError("fps must be positive")
    if not isinstance(obj["frames"], list) or not obj["frames"]:
        raise ValidationError("landmark sequence needs at least one frame")
    frames = []
    for i, f in enumerate(obj["frames"]):
        pts = _point_list(f, 3, f"frames[{i}]")
        if pts.shape[0] != NUM_LANDMARKS:
            raise ValidationError(
                f"frames[{i}] has {pts.shape[0]} landmarks, expected {NUM_LANDMARKS}"
            )
        frames.append(pts)
    return LandmarkSequenceDoc(fps, np.stack(frames))


def parse_landmarks(text):
    return landmarks_from_dict(_load_json(text, "landmark sequence"))


def serialize_landmarks(doc):
    obj = {
        "fps": float(doc.fps),
        "frames": [
            [[float(x), float(y), float(z)] for x, y, z in frame]
            for frame in doc.frames
        ],
    }
    return json.dumps(obj, indent=2) + "\n"


def parse_reference(text):
    obj = _load_json(text, "reference landmarks")
    _require_keys(obj, ["landmarks"], "reference landmarks")
    pts = _point_list(obj["landmarks"], 3, "landmarks")
    if pts.shape[0] != NUM_LANDMARKS:
        raise ValidationError(f"expected {NUM_LANDMARKS} landmarks, got {pts.shape[0]}")
    return ReferenceFace(pts)


def serialize_reference(face):
    obj = {"landmarks": [[float(x), float(y), float(z)] for x, y, z in face.landmarks]}
    return json.dumps(obj, indent=2) + "\n"


def serialize_report(report):
    """Metrics report: one record per part, plus run diagnostics."""
    return json.dumps(report, indent=2) + "\n"


def parse_report(text):
    return _load_json(text, "metrics report")
