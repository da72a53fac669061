import json
from pathlib import Path

import numpy as np
import pytest
from fastapi.testclient import TestClient

from pareidolia.config import PipelineConfig
from pareidolia.pipeline import animate_frame, image_to_bytes, load_image, prepare_pipeline
from pareidolia.formats import parse_annotation
from pareidolia.reference import load_default_reference
from pareidolia.schema import DEFAULT_SCHEMA
from pareidolia.service import create_app

SAMPLE = Path(__file__).resolve().parent.parent / "sample_data"


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


def test_health(client):
    r = client.get("/health")
    assert r.status_code == 200
    assert r.json() == {"status": "ok"}


def test_config_reports_defaults_and_roles(client):
    r = client.get("/config")
    assert r.status_code == 200
    want = dict(PipelineConfig().to_dict())
    want["roles"] = [b.role for b in DEFAULT_SCHEMA.branches]
    assert r.json() == want


def test_fit_line_returns_endpoints(client):
    r = client.post(
        "/fit",
        json={"points": [[0.0, 0.0], [5.0, 5.0], [10.0, 10.0]], "n_controls": 2},
    )
    assert r.status_code == 200
    body = r.json()
    assert len(body["sampled_curve"]) == 128
    assert body["residual"] < 1e-9
    controls = np.asarray(body["controls"])
    assert np.allclose(controls[0], [0.0, 0.0], atol=1e-9)
    assert np.allclose(controls[-1], [10.0, 10.0], atol=1e-9)
    first, last = body["sampled_curve"][0], body["sampled_curve"][-1]
    assert np.allclose(first, [0.0, 0.0], atol=1e-9)
    assert np.allclose(last, [10.0, 10.0], atol=1e-9)


def test_fit_rejections(client):
    r = client.post("/fit", json={"points": [[0, 0, 0], [1, 1, 1]], "n_controls": 2})
    assert r.status_code == 400
    assert "detail" in r.json()
    assert client.post("/fit", json={"points": [[0, 0]], "n_controls": 2}).status_code == 400
    assert (
        client.post("/fit", json={"points": [[0, 0], [1, 1]], "n_controls": 1}).status_code
        == 400
    )
    assert (
        client.post(
            "/fit", json={"points": [[0, 0], [1, 1]], "n_controls": 2, "x": 1}
        ).status_code
        == 400
    )
    # 6 controls cannot be split across the default single segment? They can:
    # any n_controls satisfies (n-1) % 1 == 0, so force a failure via shape
    assert client.post("/fit", json={"points": "abc", "n_controls": 2}).status_code == 400


def test_preview_matches_in_process_pipeline(client):
    ref = load_default_reference()
    ann_raw = json.loads((SAMPLE / "annotation.json").read_text())
    frame = ref.landmarks.copy()
    frame[60:68, 1] += np.array([0, -0.02, -0.03, -0.02, 0, 0.02, 0.03, 0.02])
    r = client.post(
        "/preview",
        json={
            "annotation": ann_raw,
            "landmark_frame": frame.tolist(),
            "image": str(SAMPLE / "pareidolia.png"),
        },
    )
    assert r.status_code == 200
    assert r.headers["content-type"] == "image/png"

    doc = parse_annotation((SAMPLE / "annotation.json").read_text())
    img = load_image(SAMPLE / "pareidolia.png")
    prep = prepare_pipeline(PipelineConfig(), doc, img, ref)
    want = image_to_bytes(animate_frame(prep, frame).image)
    assert r.content == want


def test_preview_stage_failure_maps_to_422(client):
    from pareidolia.schema import DEFAULT_SCHEMA

    ref = load_default_reference()
    ann_raw = json.loads((SAMPLE / "annotation.json").read_text())
    frame = ref.landmarks.copy()
    for k, i in enumerate(DEFAULT_SCHEMA.rigid_indices):
        frame[i] = [0.01 * k, 0.0, 0.0]
    r = client.post(
        "/preview",
        json={
            "annotation": ann_raw,
            "landmark_frame": frame.tolist(),
            "image": str(SAMPLE / "pareidolia.png"),
        },
    )
    assert r.status_code == 422
    assert "align" in r.json()["detail"]


def test_preview_input_errors_map_to_400(client):
    ann_raw = json.loads((SAMPLE / "annotation.json").read_text())
    ref = load_default_reference()
    r = client.post(
        "/preview",
        json={
            "annotation": {"bogus": 1},
            "landmark_frame": ref.landmarks.tolist(),
            "image": str(SAMPLE / "pareidolia.png"),
        },
    )
    assert r.status_code == 400
    r = client.post(
        "/preview",
        json={
            "annotation": ann_raw,
            "landmark_frame": [[0.0, 0.0, 0.0]],
            "image": str(SAMPLE / "pareidolia.png"),
        },
    )
    assert r.status_code == 400
