"""Pareidolia face animation: drive illusory faces from human landmark motion."""

from .bezier import (
    BezierSegment,
    CompositeBezier,
    Polyline,
    composite_from_controls,
    eval_bezier,
    fit_composite,
    fit_residual,
    sample_composite,
    scale_composite,
)
from .config import PipelineConfig, config_from_dict, parse_config, serialize_config
from .errors import (
    AlignmentError,
    ContractError,
    DivisionGuardError,
    DomainError,
    FlowFormatError,
    MappingError,
    PareidoliaError,
    ParseError,
    SchemaError,
    SingularFitError,
    StageError,
    ValidationError,
)
from .flowio import read_flow, write_flow
from .formats import (
    annotation_from_dict,
    parse_annotation,
    parse_landmarks,
    parse_reference,
    serialize_annotation,
    serialize_landmarks,
    serialize_reference,
    serialize_report,
)
from .metrics import co_acc, m_acc, open_gap, open_ratio, part_area, s_sim, shape_descriptor
from .motion import (
    DecayConfig,
    InverseMotionField,
    MotionField,
    MotionMask,
    decay,
    first_order_fill,
    invert_field,
    locate,
    make_seeds,
    motion_mask,
    spread_and_combine,
)
from .pipeline import (
    PipelineResult,
    animate_frame,
    load_image,
    prepare_pipeline,
    run_metrics,
    run_pipeline,
)
from .reference import load_default_reference
from .schema import DEFAULT_SCHEMA, BoundarySchema, BranchSpec
from .shape import (
    BoundarySet,
    Branch,
    LandmarkFrame,
    ReferenceFace,
    adapt_controllers,
    align_to_reference,
    apply_controllers,
    build_boundaries,
    compute_controllers,
)
from .warp import backward_warp, gaussian_pyramid, synthesize

__version__ = "0.1.0"
