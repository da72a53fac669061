"""HTTP facade over the core engine.

Stateless by design: every request carries what it needs, the app object
holds only immutable configuration plus the neutral reference face.  The
browser annotator talks to /fit while labeling; /preview renders one frame
through exactly the same code path the batch CLI uses, so the two outputs
are byte-identical.
"""
from __future__ import annotations

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel, ConfigDict, Field

from .bezier import fit_composite, fit_residual, sample_composite
from .config import PipelineConfig
from .errors import PareidoliaError, StageError, ValidationError
from .formats import annotation_from_dict
from .pipeline import animate_frame, image_to_bytes, prepare_pipeline
from .reference import load_default_reference
from .schema import DEFAULT_SCHEMA
from .shape import densify_polyline

MAX_FIT_POINTS = 4096


class FitRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    points: list[list[float]] = Field(min_length=2, max_length=MAX_FIT_POINTS)
    n_controls: int = Field(ge=2, le=32)


class FitResponse(BaseModel):
    controls: list[list[float]]
    sampled_curve: list[list[float]]
    residual: float


class PreviewRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    annotation: dict
    landmark_frame: list[list[float]]
    image: str


def create_app(cfg=None, reference=None, schema=DEFAULT_SCHEMA, image_loader=None):
    cfg = cfg or PipelineConfig()
    reference = reference or load_default_reference()
    if image_loader is None:
        from .pipeline import load_image as image_loader

    app = FastAPI(title="pareidolia")

    @app.exception_handler(RequestValidationError)
    async def bad_request(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(StageError)
    async def stage_failed(request: Request, exc: StageError):
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.exception_handler(PareidoliaError)
    async def rejected(request: Request, exc: PareidoliaError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.get("/health")
    async def health():
        return {"status": "ok"}

    @app.get("/config")
    async def config():
        # the annotator learns the labelable branch roles from here, so it
        # never hardcodes the schema
        return {**cfg.to_dict(), "roles": [b.role for b in schema.branches]}

    @app.post("/fit", response_model=FitResponse)
    async def fit(req: FitRequest):
        pts = np.asarray(req.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValidationError("points must be a list of [x, y] pairs")
        if (req.n_controls - 1) % cfg.fit_segments:
            raise ValidationError(
                f"n_controls={req.n_controls} does not split into "
                f"{cfg.fit_segments} segments"
            )
        order = (req.n_controls - 1) // cfg.fit_segments
        dense = densify_polyline(pts, max(100, 10 * req.n_controls))
        # same solve the batch path uses, so previews and batch output agree
        curve = fit_composite(dense, order, cfg.fit_segments, refine_iters=0)
        return FitResponse(
            controls=curve.control_points().tolist(),
            sampled_curve=sample_composite(curve, 128).points.tolist(),
            residual=fit_residual(curve, dense),
        )

    @app.post("/preview")
    async def preview(req: PreviewRequest):
        doc = annotation_from_dict(req.annotation, schema)
        frame = np.asarray(req.landmark_frame, dtype=np.float64)
        if frame.shape != (68, 3):
            raise ValidationError(f"landmark_frame must be 68x3, got {frame.shape}")
        image = image_loader(req.image)
        prep = prepare_pipeline(cfg, doc, image, reference, schema)
        result = animate_frame(prep, frame)
        return Response(content=image_to_bytes(result.image), media_type="image/png")

    return app
