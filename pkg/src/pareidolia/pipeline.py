"""End-to-end animation: landmarks in, synthesized frames and metrics out.

Per frame: align the driving landmarks onto the neutral reference, fit both
boundary sets, turn their ratio into motion controllers, retarget those onto
the labeled pareidolia boundaries, spread the boundary motion densely, invert
and patch the field, then warp the texture through the masked pyramid.
Frames are independent, so a thread pool may process them in any order; the
results are bit-identical regardless of worker count.
"""
from __future__ import annotations

import io
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .bezier import composite_from_controls, fit_composite
from .config import PipelineConfig
from .errors import PareidoliaError, StageError, ValidationError
from .metrics import co_acc, m_acc, open_gap, part_area, ring_samples, s_sim, shape_descriptor
from .motion import (
    DecayConfig,
    first_order_fill,
    invert_field,
    make_seeds,
    motion_mask,
    spread_and_combine,
)
from .schema import DEFAULT_SCHEMA
from .shape import (
    BoundarySet,
    Branch,
    LandmarkFrame,
    adapt_controllers,
    apply_controllers,
    build_boundaries,
    compute_controllers,
    densify_polyline,
    part_origin,
)
from .warp import synthesize


def load_image(path):
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float64)
    return arr / 255.0


def image_to_bytes(arr):
    """Canonical PNG encoding used by both the CLI and the service."""
    u8 = np.clip(np.round(np.asarray(arr) * 255.0), 0, 255).astype(np.uint8)
    if u8.ndim == 2:
        im = Image.fromarray(u8, mode="L")
    else:
        im = Image.fromarray(u8, mode="RGB")
    buf = io.BytesIO()
    im.save(buf, format="PNG")
    return buf.getvalue()


def _run(stage, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except PareidoliaError as e:
        raise StageError(stage, str(e)) from e


def fit_annotation_branch(branch, segments):
    """Fit one labeled branch in pixel coordinates; z is pinned to one."""
    if (branch.n_controls - 1) % segments:
        raise ValidationError(
            f"branch {branch.role!r}: n_controls={branch.n_controls} does not split "
            f"into {segments} segments"
        )
    order = (branch.n_controls - 1) // segments
    count = max(100, 10 * branch.n_controls)
    dense = densify_polyline(branch.points, count)
    # chord-parameter solve to match build_boundaries; see the note there
    curve2 = fit_composite(dense, order, segments, refine_iters=0)
    c2 = curve2.control_points()
    c3 = np.column_stack([c2, np.ones(c2.shape[0])])
    return composite_from_controls(c3, order, segments)


@dataclass
class PipelinePrep:
    cfg: PipelineConfig
    schema: object
    reference: object
    ref_boundaries: BoundarySet
    rest_boundaries: BoundarySet
    image: np.ndarray
    decay_cfg: DecayConfig


def prepare_pipeline(cfg, annotation, image, reference, schema=DEFAULT_SCHEMA):
    branches = []
    for b in annotation.branches:
        pts = b.points + annotation.coordinate_origin
        ann = type(b)(b.role, pts, b.n_controls)
        curve = fit_annotation_branch(ann, cfg.fit_segments)
        branches.append(Branch(b.role, schema.part_of(b.role), curve))
    rest = BoundarySet("pareidolia", tuple(branches))
    ref_bs = build_boundaries(
        reference, schema, cfg.fit_order, cfg.fit_segments, face_kind="reference"
    )
    decay_cfg = DecayConfig(cfg.decay_kind, cfg.omega_min, cfg.omega_max)
    return PipelinePrep(cfg, schema, reference, ref_bs, rest, np.asarray(image), decay_cfg)


@dataclass
class FrameResult:
    index: int
    image: np.ndarray
    field: object
    inverse: object
    mask: object
    human_boundaries: BoundarySet
    animated_boundaries: BoundarySet


def shape_frame(prep, frame_points, index=0):
    """Alignment through retargeting; everything before texture work."""
    cfg = prep.cfg
    frame = LandmarkFrame(np.asarray(frame_points, dtype=np.float64), index)
    aligned = _run("align", align_or_fail, frame, prep)
    human = _run(
        "boundaries",
        build_boundaries,
        aligned,
        prep.schema,
        cfg.fit_order,
        cfg.fit_segments,
        face_kind="human",
    )

    def retarget():
        ctrl = compute_controllers(human, prep.ref_boundaries, cfg.eps_den)
        ctrl = adapt_controllers(ctrl, prep.rest_boundaries)
        return apply_controllers(ctrl, prep.rest_boundaries, cfg.eps_den)

    animated = _run("controllers", retarget)
    return human, animated


def align_or_fail(frame, prep):
    from .shape import align_to_reference

    return align_to_reference(frame, prep.reference, prep.schema)


def animate_frame(prep, frame_points, index=0):
    cfg = prep.cfg
    human, animated = shape_frame(prep, frame_points, index)
    seeds = _run("seeds", make_seeds, prep.rest_boundaries, animated, cfg.samples_per_branch)
    h, w = prep.image.shape[:2]
    field = _run("spread", spread_and_combine, seeds, w, h, prep.decay_cfg, cfg.d_tol)
    inv = _run("invert", invert_field, field, cfg.w_min)
    filled = _run("fill", first_order_fill, inv, cfg.max_step)
    mask = _run("mask", motion_mask, filled, cfg.m_eps)
    out = _run("synthesize", synthesize, prep.image, filled, mask, cfg.pyramid_depth)
    return FrameResult(index, out, field, filled, mask, human, animated)


@dataclass
class FrameFailure:
    index: int
    stage: str
    message: str


@dataclass
class PipelineResult:
    frames: list
    report: dict
    failures: list


def _paired_parts(boundary_set):
    """Parts having both an upper and a lower branch, as (part, upper, lower)."""
    groups = {}
    for b in boundary_set.branches:
        groups.setdefault(b.part, {})[b.role] = b
    out = []
    for part, roles in sorted(groups.items()):
        upper = next((b for r, b in roles.items() if "upper" in r), None)
        lower = next((b for r, b in roles.items() if "lower" in r), None)
        if upper is not None and lower is not None:
            out.append((part, upper, lower))
    return out


def _norm_ratios(gaps):
    gaps = np.asarray(gaps, dtype=np.float64)
    top = gaps.max() if gaps.size else 0.0
    if top <= 0.0:
        return np.zeros_like(gaps)
    return np.clip(gaps / top, 0.0, 1.0)


def build_report(prep, human_sets, animated_sets, failures, frame_count):
    """Per-part agreement metrics between driving and driven sequences."""
    cfg = prep.cfg
    parts = [p for p, _, _ in _paired_parts(prep.rest_boundaries)]
    records = []
    for part in parts:
        h_gaps, h_areas, p_gaps, p_areas, sims = [], [], [], [], []
        for hset, aset in zip(human_sets, animated_sets):
            hpair = next((t for t in _paired_parts(hset) if t[0] == part), None)
            apair = next((t for t in _paired_parts(aset) if t[0] == part), None)
            if hpair is None or apair is None:
                continue
            _, hu, hl = hpair
            _, au, al = apair
            h_gaps.append(open_gap(hu.curve, hl.curve))
            h_areas.append(part_area(hu.curve, hl.curve))
            p_gaps.append(open_gap(au.curve, al.curve))
            p_areas.append(part_area(au.curve, al.curve))
            sims.append(
                s_sim(
                    shape_descriptor(ring_samples(hu.curve, hl.curve), cfg.metric_bins),
                    shape_descriptor(ring_samples(au.curve, al.curve), cfg.metric_bins),
                )
            )
        if not h_gaps:
            continue
        rec = {
            "part": part,
            "co_acc": co_acc(_norm_ratios(h_gaps), _norm_ratios(p_gaps)),
            "m_acc": m_acc(h_areas, p_areas) if len(h_areas) >= 2 else None,
            "s_sim": sims,
        }
        records.append(rec)
    origins = {}
    for part, branches in _group_parts(prep.ref_boundaries).items():
        stacked = np.concatenate([b.curve.control_points() for b in branches])
        origins[part] = [float(v) for v in part_origin(stacked, cfg.eps_den)]
    return {
        "frames": frame_count,
        "animated_branches": prep.rest_boundaries.roles(),
        "controller_origins": origins,
        "failures": [
            {"frame": f.index, "stage": f.stage, "message": f.message} for f in failures
        ],
        "parts": records,
    }


def _group_parts(boundary_set):
    groups = {}
    for b in boundary_set.branches:
        groups.setdefault(b.part, []).append(b)
    return groups


def run_pipeline(
    cfg,
    annotation,
    landmarks,
    reference,
    image,
    out_dir=None,
    dump_flow_dir=None,
    keep_going=False,
    jobs=1,
    schema=DEFAULT_SCHEMA,
):
    """Animate a full landmark sequence over one pareidolia image.

    Writes numbered PNG frames (and optionally the enhanced inverse flow per
    frame) when directories are given.  With keep_going, a failing frame is
    recorded and skipped instead of aborting the run.
    """
    prep = prepare_pipeline(cfg, annotation, image, reference, schema)
    frames = landmarks.frames
    results = [None] * len(frames)
    failures = []

    def work(i):
        try:
            return animate_frame(prep, frames[i], i)
        except StageError as e:
            return FrameFailure(i, e.stage, str(e))

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            outcomes = list(ex.map(work, range(len(frames))))
    else:
        outcomes = [work(i) for i in range(len(frames))]

    for i, r in enumerate(outcomes):
        if isinstance(r, FrameFailure):
            failures.append(r)
            if not keep_going:
                raise StageError(r.stage, f"frame {i}: {r.message}")
        else:
            results[i] = r

    good = [r for r in results if r is not None]
    report = build_report(
        prep,
        [r.human_boundaries for r in good],
        [r.animated_boundaries for r in good],
        failures,
        len(frames),
    )

    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        for r in good:
            path = os.path.join(out_dir, f"frame_{r.index:04d}.png")
            with open(path, "wb") as fh:
                fh.write(image_to_bytes(r.image))
    if dump_flow_dir is not None:
        from .flowio import write_flow

        os.makedirs(dump_flow_dir, exist_ok=True)
        for r in good:
            path = os.path.join(dump_flow_dir, f"flow_{r.index:04d}.pflw")
            with open(path, "wb") as fh:
                fh.write(write_flow(r.inverse))

    return PipelineResult([r.image if r else None for r in results], report, failures)


def run_metrics(cfg, annotation, landmarks, reference, schema=DEFAULT_SCHEMA):
    """Shape-only pass over the sequence; no texture synthesis."""
    prep = prepare_pipeline(
        cfg, annotation, np.zeros((8, 8, 3)), reference, schema
    )
    humans, animateds, failures = [], [], []
    for i, pts in enumerate(landmarks.frames):
        try:
            h, a = shape_frame(prep, pts, i)
        except StageError as e:
            failures.append(FrameFailure(i, e.stage, str(e)))
            continue
        humans.append(h)
        animateds.append(a)
    return build_report(prep, humans, animateds, failures, len(landmarks.frames))
