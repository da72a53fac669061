"""Command line front end.

Batch work (fit, animate, metrics) runs in process; serve starts the HTTP
app.  Exit codes: 0 on success, 1 for bad inputs, 2 when a pipeline stage
fails on otherwise valid inputs.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from .bezier import fit_residual
from .config import PipelineConfig, config_from_dict, parse_config
from .errors import (
    ContractError,
    FlowFormatError,
    ParseError,
    PareidoliaError,
    SchemaError,
    StageError,
    ValidationError,
)
from .formats import parse_annotation, parse_landmarks, parse_reference, serialize_report
from .pipeline import fit_annotation_branch, load_image, run_metrics, run_pipeline
from .reference import load_default_reference
from .schema import DEFAULT_SCHEMA

_INPUT_ERRORS = (
    ParseError,
    ValidationError,
    SchemaError,
    ContractError,
    FlowFormatError,
    OSError,
)


def _add_config_args(p):
    p.add_argument("--config", help="JSON config file; flags below override it")
    for f in dataclasses.fields(PipelineConfig):
        flag = "--" + f.name.replace("_", "-")
        kind = {int: int, float: float, str: str}[f.type if isinstance(f.type, type) else type(f.default)]
        p.add_argument(flag, type=kind, default=None, help=f"default {f.default}")


def _build_config(args):
    base = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            base = dataclasses.asdict(parse_config(fh.read()))
    for f in dataclasses.fields(PipelineConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            base[f.name] = v
    return config_from_dict(base) if base else PipelineConfig()


def _read(path):
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _load_reference(args):
    if getattr(args, "reference", None):
        return parse_reference(_read(args.reference))
    return load_default_reference()


def _resolve_image(args, annotation):
    if getattr(args, "image", None):
        return args.image
    return os.path.join(os.path.dirname(os.path.abspath(args.annotation)), annotation.image_ref)


def _write_out(text, path):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_fit(args):
    cfg = _build_config(args)
    doc = parse_annotation(_read(args.annotation), DEFAULT_SCHEMA)
    branches = []
    for b in doc.branches:
        shifted = type(b)(b.role, b.points + doc.coordinate_origin, b.n_controls)
        curve = fit_annotation_branch(shifted, cfg.fit_segments)
        from .shape import densify_polyline

        dense = densify_polyline(shifted.points, max(100, 10 * b.n_controls))
        proj = curve.control_points()[:, :2]
        from .bezier import composite_from_controls

        flat = composite_from_controls(proj, curve.segments[0].order, len(curve.segments))
        branches.append(
            {
                "role": b.role,
                "controls": proj.tolist(),
                "residual": fit_residual(flat, dense),
            }
        )
    _write_out(json.dumps({"branches": branches}, indent=2) + "\n", args.out)
    return 0


def _cmd_animate(args):
    cfg = _build_config(args)
    doc = parse_annotation(_read(args.annotation), DEFAULT_SCHEMA)
    seq = parse_landmarks(_read(args.landmarks))
    reference = _load_reference(args)
    image = load_image(_resolve_image(args, doc))
    result = run_pipeline(
        cfg,
        doc,
        seq,
        reference,
        image,
        out_dir=args.out_dir,
        dump_flow_dir=args.dump_flow,
        keep_going=args.keep_going,
        jobs=args.jobs,
    )
    report_path = os.path.join(args.out_dir, "report.json")
    _write_out(serialize_report(result.report), report_path)
    if result.failures:
        for f in result.failures:
            print(f"frame {f.index} failed at {f.stage}: {f.message}", file=sys.stderr)
        return 2
    return 0


def _cmd_metrics(args):
    cfg = _build_config(args)
    doc = parse_annotation(_read(args.annotation), DEFAULT_SCHEMA)
    seq = parse_landmarks(_read(args.landmarks))
    reference = _load_reference(args)
    report = run_metrics(cfg, doc, seq, reference)
    _write_out(serialize_report(report), args.out)
    return 0


def _cmd_serve(args):
    import uvicorn

    from .service import create_app

    cfg = _build_config(args)
    app = create_app(cfg, _load_reference(args))
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="pareidolia", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="fit annotated boundary branches")
    fit.add_argument("--annotation", required=True)
    fit.add_argument("--out", help="output path; stdout when omitted")
    _add_config_args(fit)
    fit.set_defaults(fn=_cmd_fit)

    anim = sub.add_parser("animate", help="animate an image from a landmark sequence")
    anim.add_argument("--annotation", required=True)
    anim.add_argument("--landmarks", required=True)
    anim.add_argument("--image", help="override the image path from the annotation")
    anim.add_argument("--reference", help="reference landmarks JSON; packaged default otherwise")
    anim.add_argument("--out-dir", required=True)
    anim.add_argument("--dump-flow", help="also write per-frame inverse flow here")
    anim.add_argument("--keep-going", action="store_true")
    anim.add_argument("--jobs", type=int, default=1)
    _add_config_args(anim)
    anim.set_defaults(fn=_cmd_animate)

    met = sub.add_parser("metrics", help="shape metrics without rendering")
    met.add_argument("--annotation", required=True)
    met.add_argument("--landmarks", required=True)
    met.add_argument("--reference")
    met.add_argument("--out", help="output path; stdout when omitted")
    _add_config_args(met)
    met.set_defaults(fn=_cmd_metrics)

    srv = sub.add_parser("serve", help="start the HTTP service")
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int, default=8000)
    srv.add_argument("--reference")
    _add_config_args(srv)
    srv.set_defaults(fn=_cmd_serve)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except StageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except _INPUT_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except PareidoliaError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
