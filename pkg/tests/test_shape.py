import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from pareidolia.errors import AlignmentError, ContractError, DivisionGuardError
from pareidolia.reference import load_default_reference
from pareidolia.schema import DEFAULT_SCHEMA
from pareidolia.shape import (
    LandmarkFrame,
    ReferenceFace,
    adapt_controllers,
    align_to_reference,
    apply_controllers,
    build_boundaries,
    compute_controllers,
    densify_polyline,
    part_origin,
)

REF = load_default_reference()


def similarity(points, scale, angles, shift):
    r = Rotation.from_euler("xyz", angles).as_matrix()
    return scale * points @ r.T + shift


def open_mouth(points, amount):
    out = points.copy()
    for i, w in ((61, 0.8), (62, 1.0), (63, 0.8)):
        out[i, 1] -= amount * w
    for i, w in ((67, 0.8), (66, 1.0), (65, 0.8)):
        out[i, 1] += amount * w
    return out


def test_reference_requires_closed_mouth():
    ReferenceFace(REF.landmarks.copy())
    with pytest.raises(ContractError):
        ReferenceFace(open_mouth(REF.landmarks, 0.1))


def test_alignment_recovers_similarity_exactly():
    rng = np.random.default_rng(31)
    for _ in range(15):
        moved = similarity(
            REF.landmarks,
            scale=rng.uniform(0.3, 3.0),
            angles=rng.uniform(-0.6, 0.6, size=3),
            shift=rng.uniform(-10, 10, size=3),
        )
        aligned = align_to_reference(LandmarkFrame(moved, 0), REF, DEFAULT_SCHEMA)
        assert np.abs(aligned.points - REF.landmarks).max() < 1e-9


def test_alignment_optimizes_rigid_subset_under_noise():
    rng = np.random.default_rng(32)
    noisy = similarity(REF.landmarks, 1.7, (0.1, -0.2, 0.3), np.array([4.0, 5.0, 6.0]))
    noisy = noisy + rng.normal(0, 0.01, size=noisy.shape)
    aligned = align_to_reference(LandmarkFrame(noisy, 0), REF, DEFAULT_SCHEMA)
    rigid = list(DEFAULT_SCHEMA.rigid_indices)
    rms = np.sqrt(np.mean((aligned.points[rigid] - REF.landmarks[rigid]) ** 2))
    assert rms < 0.05


def test_alignment_rejects_flat_rigid_subset():
    bad = REF.landmarks.copy()
    rigid = list(DEFAULT_SCHEMA.rigid_indices)
    bad[rigid] = bad[rigid][0]
    with pytest.raises(AlignmentError):
        align_to_reference(LandmarkFrame(bad, 0), REF, DEFAULT_SCHEMA)


def test_densify_keeps_shape_and_endpoints():
    pts = np.array([[0.0, 0.0], [1.0, 1.0], [3.0, 0.0]])
    dense = densify_polyline(pts, 101)
    assert dense.shape == (101, 2)
    assert np.allclose(dense[0], pts[0])
    assert np.allclose(dense[-1], pts[-1])
    # all densified points stay on the original polyline
    mid = dense[(dense[:, 0] >= 1.0)]
    t = (mid[:, 0] - 1.0) / 2.0
    assert np.allclose(mid[:, 1], 1.0 - t, atol=1e-12)


def test_build_boundaries_covers_schema():
    bs = build_boundaries(REF, DEFAULT_SCHEMA, order=5, segments=1, face_kind="reference")
    assert bs.roles() == [b.role for b in DEFAULT_SCHEMA.branches]
    mouth = bs.branch("mouth_upper_inner")
    assert mouth.part == "mouth"
    k = mouth.curve.control_points()
    assert k.shape == (6, 3)
    # branch ends stay near the annotated corner landmarks
    assert np.linalg.norm(k[0] - REF.landmarks[60]) < 0.02
    assert np.linalg.norm(k[-1] - REF.landmarks[64]) < 0.02


def test_controllers_identity_is_bitwise():
    ref_bs = build_boundaries(REF, DEFAULT_SCHEMA, 5, 1, face_kind="reference")
    ctrl = compute_controllers(ref_bs, ref_bs)
    back = apply_controllers(ctrl, ref_bs)
    for role in ref_bs.roles():
        a = back.branch(role).curve.control_points()
        b = ref_bs.branch(role).curve.control_points()
        assert np.array_equal(a, b)


def test_controller_round_trip_is_exact():
    rng = np.random.default_rng(33)
    ref_bs = build_boundaries(REF, DEFAULT_SCHEMA, 5, 1, face_kind="reference")
    for amount in (0.02, 0.05, 0.1):
        moved = open_mouth(REF.landmarks, amount)
        moved[36:48] += rng.normal(0, 0.004, size=(12, 3))
        human_bs = build_boundaries(
            LandmarkFrame(moved, 0), DEFAULT_SCHEMA, 5, 1, face_kind="human"
        )
        ctrl = compute_controllers(human_bs, ref_bs)
        back = apply_controllers(ctrl, ref_bs)
        for role in ref_bs.roles():
            a = back.branch(role).curve.control_points()
            b = human_bs.branch(role).curve.control_points()
            assert np.abs(a - b).max() < 1e-9


def test_controller_roles_must_match():
    ref_bs = build_boundaries(REF, DEFAULT_SCHEMA, 5, 1, face_kind="reference")
    pruned = type(ref_bs)(ref_bs.face_kind, ref_bs.branches[:-1])
    with pytest.raises(ContractError):
        compute_controllers(pruned, ref_bs)


def test_adapt_shrink_grow_and_idempotence():
    ref_bs = build_boundaries(REF, DEFAULT_SCHEMA, 5, 1, face_kind="reference")
    small = build_boundaries(REF, DEFAULT_SCHEMA, 3, 1, face_kind="pareidolia")
    ctrl = compute_controllers(ref_bs, ref_bs)

    shrunk = adapt_controllers(ctrl, small)
    for role in ref_bs.roles():
        src = ctrl.branch(role).ratios
        dst = shrunk.branch(role).ratios
        assert dst.shape[0] == 4
        assert np.array_equal(dst[0], src[0])
        assert np.array_equal(dst[-1], src[-1])
    twice = adapt_controllers(shrunk, small)
    for role in ref_bs.roles():
        assert np.array_equal(twice.branch(role).ratios, shrunk.branch(role).ratios)

    grown = adapt_controllers(shrunk, ref_bs)
    for role in ref_bs.roles():
        assert grown.branch(role).ratios.shape[0] == 6


def test_adapt_same_count_is_copy():
    ref_bs = build_boundaries(REF, DEFAULT_SCHEMA, 5, 1, face_kind="reference")
    ctrl = compute_controllers(ref_bs, ref_bs)
    same = adapt_controllers(ctrl, ref_bs)
    for role in ref_bs.roles():
        assert np.array_equal(same.branch(role).ratios, ctrl.branch(role).ratios)


def test_part_origin_avoids_tiny_denominators():
    rng = np.random.default_rng(34)
    eps = 1e-6
    pts = rng.uniform(-1, 1, size=(12, 3))
    # plant a coordinate exactly at the centroid on each axis
    pts[0] = pts.mean(axis=0)
    o = part_origin(pts, eps)
    assert np.all(np.abs(pts - o) >= eps)


def test_part_origin_gives_up_when_crowded():
    # y offsets sit exactly on every candidate nudge, so none can succeed
    eps = 1e-6
    y = np.arange(-65, 66) * 2 * eps
    pts = np.column_stack([np.linspace(0, 1, y.size), y, np.ones(y.size)])
    with pytest.raises(DivisionGuardError):
        part_origin(pts, eps)
