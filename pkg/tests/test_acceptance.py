"""End-to-end guarantees of the shipped engine, one test per promise.

Each test here pins a quantitative bound the package commits to: curve
recovery accuracy, retarget round trips, no-op identity drives, decay and
inversion behaviour, fill exactness, pyramid depth trends, metric sanity on a
perfectly retargeted synthetic face, and bitwise format round trips.  The
constructions are synthetic and seeded; every tolerance is stated inline.
"""
import time

import numpy as np

from test_formats import random_annotation, random_landmarks

from pareidolia.bezier import composite_from_controls, fit_composite
from pareidolia.config import (
    PipelineConfig,
    config_from_dict,
    parse_config,
    serialize_config,
)
from pareidolia.formats import (
    AnnotationBranch,
    AnnotationDoc,
    LandmarkSequenceDoc,
    annotation_from_dict,
    landmarks_from_dict,
    parse_annotation,
    parse_landmarks,
    serialize_annotation,
    serialize_landmarks,
)
from pareidolia.flowio import read_flow, write_flow
from pareidolia.metrics import m_acc, part_area
from pareidolia.motion import (
    DecayConfig,
    InverseMotionField,
    MotionField,
    decay,
    first_order_fill,
    invert_field,
    motion_mask,
)
from pareidolia.pipeline import (
    load_image,
    prepare_pipeline,
    run_metrics,
    run_pipeline,
    shape_frame,
)
from pareidolia.reference import load_default_reference
from pareidolia.schema import DEFAULT_SCHEMA
from pareidolia.shape import (
    BoundarySet,
    Branch,
    ReferenceFace,
    apply_controllers,
    compute_controllers,
)
from pareidolia.warp import synthesize

from test_pipeline import SAMPLE


def test_a01_cubic_fit_recovers_control_points_under_a_second():
    rng = np.random.default_rng(42)
    cases = []
    for _ in range(50):
        ctrl = rng.uniform(-1.0, 1.0, (4, 2))
        curve = composite_from_controls(ctrl, 3, 1)
        # 100 samples equally spaced in cumulative chord length, taken on the
        # curve itself via an arc-length lookup over a dense polyline
        taus = np.linspace(0.0, 1.0, 2000)
        dense = curve.eval_many(taus)
        seg = np.linalg.norm(np.diff(dense, axis=0), axis=1)
        arc = np.concatenate([[0.0], np.cumsum(seg)])
        targets = np.linspace(0.0, arc[-1], 100)
        pts = curve.eval_many(np.interp(targets, arc, taus))
        cases.append((ctrl, pts))

    start = time.perf_counter()
    fits = [fit_composite(pts, 3, 1, restarts=16) for _, pts in cases]
    elapsed = time.perf_counter() - start

    worst = max(
        float(np.max(np.abs(fit.control_points() - ctrl)))
        for fit, (ctrl, _) in zip(fits, cases)
    )
    assert worst < 1e-6, f"worst control-point error {worst:.3e}"
    assert elapsed < 1.0, f"50 fits took {elapsed:.2f}s"


def _random_boundary_set(rng, kind):
    branches = []
    for spec in DEFAULT_SCHEMA.branches:
        ctrl = rng.uniform(-1.0, 1.0, (6, 3))
        branches.append(Branch(spec.role, spec.part, composite_from_controls(ctrl, 5, 1)))
    return BoundarySet(kind, tuple(branches))


def test_a02_controller_round_trip_reproduces_human_controls():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        human = _random_boundary_set(rng, "human")
        reference = _random_boundary_set(rng, "reference")
        ctrl = compute_controllers(human, reference, 1e-6)
        back = apply_controllers(ctrl, reference, 1e-6)
        for role in reference.roles():
            err = np.max(
                np.abs(
                    back.branch(role).curve.control_points()
                    - human.branch(role).curve.control_points()
                )
            )
            worst = max(worst, float(err))
    assert worst <= 1e-9, f"worst round-trip error {worst:.3e}"


def test_a03_static_drive_returns_input_bitwise_within_two_seconds():
    ref = load_default_reference()
    ann = parse_annotation((SAMPLE / "annotation.json").read_text())
    img = load_image(SAMPLE / "pareidolia.png")
    assert img.shape == (256, 256, 3)
    seq = LandmarkSequenceDoc(25.0, np.stack([ref.landmarks] * 10))

    start = time.perf_counter()
    result = run_pipeline(PipelineConfig(), ann, seq, ref, img)
    elapsed = time.perf_counter() - start

    assert not result.failures
    assert all(np.array_equal(frame, img) for frame in result.frames)
    assert elapsed < 2.0, f"10 static frames took {elapsed:.2f}s"


def test_a04_decay_pins_and_monotone_fade():
    for kind in ("linear", "sine"):
        cfg = DecayConfig(kind, 0.25, 2.5)
        assert decay(1.0, cfg) == 1.0
        outside = np.array([0.0, 0.2499, 0.249999, 2.500001, 3.0, 17.0])
        assert np.all(decay(outside, cfg) == 0.0)
        # non-increasing in |omega - 1|: walk each side of 1 on a 1e4 grid
        left = decay(np.linspace(1.0, cfg.omega_min, 10_000), cfg)
        right = decay(np.linspace(1.0, cfg.omega_max, 10_000), cfg)
        assert np.all(np.diff(left) <= 0.0)
        assert np.all(np.diff(right) <= 0.0)


def _bilinear(field, px, py):
    h, w = field.shape[:2]
    x = np.clip(px, 0.0, w - 1.0)
    y = np.clip(py, 0.0, h - 1.0)
    x0 = np.floor(x).astype(np.int64)
    y0 = np.floor(y).astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (x - x0)[..., None]
    fy = (y - y0)[..., None]
    top = field[y0, x0] * (1.0 - fx) + field[y0, x1] * fx
    bot = field[y1, x0] * (1.0 - fx) + field[y1, x1] * fx
    return top * (1.0 - fy) + bot * fy


def test_a05_inverted_affine_fields_compose_to_identity():
    rng = np.random.default_rng(5)
    n = 256
    ys, xs = np.indices((n, n), dtype=np.float64)
    for _ in range(20):
        while True:
            a = np.eye(2) + 0.1 * rng.standard_normal((2, 2))
            if abs(np.linalg.det(a)) > 0.2:
                break
        b = rng.uniform(-6.0, 6.0, 2)
        # displacement of the forward map p -> A p + b, stored dx then dy
        dx = (a[0, 0] - 1.0) * xs + a[0, 1] * ys + b[0]
        dy = a[1, 0] * xs + (a[1, 1] - 1.0) * ys + b[1]
        field = MotionField(np.stack([dx, dy], axis=2), np.ones((n, n), dtype=bool))
        inv = invert_field(field, 1e-3)

        qy, qx = np.nonzero(inv.valid)
        v = inv.vectors[qy, qx]
        forward = _bilinear(field.vectors, qx + v[:, 0], qy + v[:, 1])
        err = np.linalg.norm(v + forward, axis=1)
        ok = float(np.mean(err <= 0.5))
        assert ok >= 0.99, f"composition within half a pixel for only {ok:.4f}"


def test_a06_fill_is_exact_on_punched_affine_inverses():
    rng = np.random.default_rng(6)
    n = 192
    ys, xs = np.indices((n, n), dtype=np.float64)
    for _ in range(10):
        while True:
            a = np.eye(2) + 0.1 * rng.standard_normal((2, 2))
            if abs(np.linalg.det(a)) > 0.2:
                break
        b = rng.uniform(-4.0, 4.0, 2)
        ainv = np.linalg.inv(a)
        # displacement of the exact inverse map q -> A^-1 (q - b)
        wx = (ainv[0, 0] - 1.0) * xs + ainv[0, 1] * ys - ainv[0, 0] * b[0] - ainv[0, 1] * b[1]
        wy = ainv[1, 0] * xs + (ainv[1, 1] - 1.0) * ys - ainv[1, 0] * b[0] - ainv[1, 1] * b[1]
        truth = np.stack([wx, wy], axis=2)

        # separated holes: merged punches can leave one-pixel strips whose
        # finite differences see no valid neighbour along an axis, and a
        # zero Jacobian there is no longer first-order information
        valid = np.ones((n, n), dtype=bool)
        holes = []
        while len(holes) < 12:
            cx = rng.uniform(20, n - 20)
            cy = rng.uniform(20, n - 20)
            r = rng.uniform(3.0, 8.0)
            if all(np.hypot(cx - ox, cy - oy) >= r + orr + 5.0 for ox, oy, orr in holes):
                holes.append((cx, cy, r))
                valid &= (xs - cx) ** 2 + (ys - cy) ** 2 > r ** 2
        inv = InverseMotionField(truth.copy(), valid)
        filled = first_order_fill(inv, 2)

        assert filled.valid.all()
        err = float(np.max(np.abs(filled.vectors - truth)))
        assert err <= 1e-3, f"fill error {err:.3e}"


def _translated_disk():
    """Textured disk on a gradient background, pushed 8 px right.

    The inverse flow is what a real inversion yields: exact on the
    destination disk, zero over the untouched surround, unknown on the
    crescent the disk revealed.
    """
    n = 128
    cx, cy, rho, tx = 56, 64, 20.0, 8
    ys, xs = np.indices((n, n), dtype=np.float64)
    background = np.stack(
        [0.25 + 0.4 * xs / n, 0.35 + 0.3 * ys / n, 0.55 - 0.25 * xs / n], axis=2
    )
    disk0 = (xs - cx) ** 2 + (ys - cy) ** 2 <= rho ** 2
    disk1 = (xs - cx - tx) ** 2 + (ys - cy) ** 2 <= rho ** 2
    tex = 0.5 + 0.5 * np.sin(0.55 * xs) * np.cos(0.45 * ys)
    src = background.copy()
    src[disk0] = np.stack([tex, 1.0 - tex, 0.5 * tex], axis=2)[disk0]
    truth = background.copy()
    shifted = np.roll(src, tx, axis=1)
    truth[disk1] = shifted[disk1]

    vec = np.zeros((n, n, 2))
    vec[disk1, 0] = -float(tx)
    valid = np.ones((n, n), dtype=bool)
    valid[disk0 & ~disk1] = False
    return src, truth, InverseMotionField(vec, valid)


def test_a07_zero_mask_is_a_bitwise_no_op_and_fill_helps():
    rng = np.random.default_rng(3)
    img = rng.uniform(0.0, 1.0, (96, 96, 3))
    identity = InverseMotionField(
        np.zeros((96, 96, 2)), np.ones((96, 96), dtype=bool)
    )
    mask = motion_mask(identity, 1e-4)
    assert not np.any(mask.values)
    out = synthesize(img, identity, mask, 3)
    assert np.array_equal(out, img)

    src, truth, inv = _translated_disk()
    filled = first_order_fill(inv, 2)
    mask = motion_mask(filled, 1e-4)
    with_fill = synthesize(src, filled, mask, 1)
    bare_mask = motion_mask(inv, 1e-4)
    without = synthesize(src, inv, bare_mask, 1)
    mae_fill = float(np.mean(np.abs(with_fill - truth)))
    mae_bare = float(np.mean(np.abs(without - truth)))
    assert mae_fill <= mae_bare, f"{mae_fill:.6f} > {mae_bare:.6f}"


def test_a08_deeper_pyramids_do_not_hurt_the_translated_disk():
    """KNOWN RED.  Depth hurts, slightly, and we report that rather than
    tune the synthetic until it flatters the sweep.

    Measured on this construction: MAE 0.002866 / 0.003181 / 0.003439 for
    depths 1 / 2 / 3.  The cause is structural.  Coarser levels average the
    flow across the disk edge, so the moved region's vectors are diluted by
    static neighbours, and each added level blends a correction warped by
    that diluted flow back into the disk.  When the fine flow is already
    exact there is nothing for a coarse level to fix, so the boundary cost
    is pure loss.  Variants with noisy flows (where coarse averaging does
    cancel noise) claw back the depth-2 step but stay ~5e-5 short at depth
    3, flipping sign under small parameter changes; no construction we
    found is robustly non-increasing without removing the moving/static
    boundary, which would no longer be a translated disk.
    """
    src, truth, inv = _translated_disk()
    filled = first_order_fill(inv, 2)
    mask = motion_mask(filled, 1e-4)
    maes = []
    for depth in (1, 2, 3):
        out = synthesize(src, filled, mask, depth)
        maes.append(float(np.mean(np.abs(out - truth))))
    assert maes[0] >= maes[1] >= maes[2], f"depth sweep {maes}"


def _synthetic_face():
    """A planar face whose boundary branches all sit at z = 0.

    Only the nose bridge leaves the plane, which is what gives the rigid
    alignment subset full rank.  Flat branches make the annotation below an
    exact similarity image of the face, so retargeting it is lossless.
    """
    pts = np.zeros((68, 3))
    for i in range(68):
        pts[i] = [-0.9 + 0.027 * i, -0.8 + 0.011 * i, 0.0]
    pts[27] = [0.013, -0.21, 0.31]
    pts[28] = [0.011, -0.12, 0.24]
    pts[29] = [0.009, -0.03, 0.13]
    pts[30] = [0.007, 0.06, 0.05]
    pts[36] = [-0.431, -0.057, 0.0]
    pts[37] = [-0.345, -0.104, 0.0]
    pts[38] = [-0.249, -0.109, 0.0]
    pts[39] = [-0.163, -0.051, 0.0]
    pts[40] = [-0.251, -0.007, 0.0]
    pts[41] = [-0.343, -0.003, 0.0]
    pts[42] = [0.171, -0.049, 0.0]
    pts[43] = [0.257, -0.102, 0.0]
    pts[44] = [0.353, -0.107, 0.0]
    pts[45] = [0.439, -0.053, 0.0]
    pts[46] = [0.351, -0.005, 0.0]
    pts[47] = [0.255, -0.001, 0.0]
    pts[60] = [-0.241, 0.302, 0.0]
    pts[61] = [-0.118, 0.281, 0.0]
    pts[62] = [0.009, 0.272, 0.0]
    pts[63] = [0.131, 0.283, 0.0]
    pts[64] = [0.263, 0.304, 0.0]
    pts[67] = pts[61].copy()
    pts[66] = pts[62].copy()
    pts[65] = pts[63].copy()
    return ReferenceFace(pts)


def _similarity_annotation(ref, scale, shift):
    branches = []
    for spec in DEFAULT_SCHEMA.branches:
        xy = ref.landmarks[list(spec.landmark_indices)][:, :2]
        branches.append(AnnotationBranch(spec.role, scale * xy + shift, 6))
    return AnnotationDoc("synthetic.png", np.zeros(2), tuple(branches))


def _driven_frame(ref, t, total):
    pts = ref.landmarks.copy()
    a = 0.06 * (0.55 + 0.45 * np.sin(2.0 * np.pi * 2.0 * t / total + 0.7))
    e = 0.05 * (0.55 + 0.45 * np.sin(2.0 * np.pi * 3.0 * t / total + 1.9))
    pts[[61, 62, 63], 1] -= a * np.array([0.55, 1.0, 0.6])
    pts[[67, 66, 65], 1] += a * np.array([0.55, 1.0, 0.6])
    pts[[37, 38], 1] -= e * np.array([0.8, 1.0])
    pts[[41, 40], 1] += e * np.array([0.9, 0.7])
    pts[[43, 44], 1] -= e * np.array([0.85, 0.95])
    pts[[47, 46], 1] += e * np.array([0.75, 0.8])
    return pts


def test_a09_lossless_retarget_scores_one_and_scrambling_breaks_it():
    ref = _synthetic_face()
    ann = _similarity_annotation(ref, 256.0, np.array([512.0, 384.0]))
    total = 16
    frames = np.stack([_driven_frame(ref, t, total) for t in range(total)])
    cfg = PipelineConfig()

    report = run_metrics(cfg, ann, LandmarkSequenceDoc(25.0, frames), ref)
    assert not report["failures"]
    assert len(report["parts"]) == 3
    for rec in report["parts"]:
        assert abs(rec["co_acc"] - 1.0) <= 1e-6, rec
        assert abs(rec["m_acc"] - 1.0) <= 1e-6, rec

    # drive with the frames out of order and score against the in-order
    # human trace: tendency agreement collapses to chance level
    prep = prepare_pipeline(cfg, ann, np.zeros((8, 8, 3)), ref)
    h_areas, p_areas = [], []
    for t in range(total):
        human, animated = shape_frame(prep, frames[t], t)
        h_areas.append(
            part_area(
                human.branch("mouth_upper_inner").curve,
                human.branch("mouth_lower_inner").curve,
            )
        )
        p_areas.append(
            part_area(
                animated.branch("mouth_upper_inner").curve,
                animated.branch("mouth_lower_inner").curve,
            )
        )
    perm = np.random.default_rng(1).permutation(total)
    scrambled = m_acc(h_areas, [p_areas[j] for j in perm])
    assert scrambled <= 0.6, f"scrambled tendency agreement {scrambled:.4f}"


def test_a10_formats_round_trip_bitwise_a_thousand_times():
    rng = np.random.default_rng(21)
    for _ in range(1000):
        doc = annotation_from_dict(random_annotation(rng))
        text = serialize_annotation(doc)
        assert serialize_annotation(parse_annotation(text)) == text

    rng = np.random.default_rng(22)
    for _ in range(1000):
        doc = landmarks_from_dict(random_landmarks(rng))
        text = serialize_landmarks(doc)
        assert serialize_landmarks(parse_landmarks(text)) == text

    rng = np.random.default_rng(23)
    for _ in range(1000):
        obj = {
            "decay_kind": ["linear", "sine"][int(rng.integers(2))],
            "omega_min": float(rng.uniform(0.05, 0.95)),
            "omega_max": float(rng.uniform(1.05, 4.0)),
            "fit_order": int(rng.integers(1, 32)),
            "pyramid_depth": int(rng.integers(1, 9)),
            "metric_bins": int(rng.integers(1, 64)),
        }
        text = serialize_config(config_from_dict(obj))
        assert serialize_config(parse_config(text)) == text

    rng = np.random.default_rng(24)
    for _ in range(1000):
        h = int(rng.integers(1, 13))
        w = int(rng.integers(1, 13))
        valid = rng.random((h, w)) < 0.8
        vec = rng.uniform(-40, 40, (h, w, 2)).astype(np.float32).astype(np.float64)
        inverse = bool(rng.integers(2))
        cls = InverseMotionField if inverse else MotionField
        f = cls(vec, valid)
        blob = write_flow(f)
        g = read_flow(blob, inverse=inverse)
        assert write_flow(g) == blob
        assert np.array_equal(g.vectors, f.vectors)
        assert np.array_equal(g.valid, f.valid)
