"""Motion programs: hierarchical, executable descriptions of 2D keypoint motion.

Pipeline: pose files -> concrete programs (primitive sequences over shared
segment boundaries) -> abstract programs (start/middle/end primitives and
for-loops over Gaussian primitives), plus pose-level interpolation,
prediction by loop unrolling, and repetition-detection metrics.
"""

from .abstractor import (
    AbstractProgram,
    DetPrim,
    ForLoop,
    LoopCandidate,
    LoopConfig,
    ProbPrim,
    abstract_from_obj,
    abstract_to_obj,
    concretize,
    default_tau,
    detect_loops,
    execute_abstract,
    fit_prob_prim,
    group_window,
    load_abstract,
    roll_loops,
    sample_det_prim,
    save_abstract,
    serialize_abstract,
    to_abstract,
)
from .apps import (
    KD_DEFAULT_JOINTS,
    Interval,
    SegmentReport,
    evaluate_segments,
    extrapolate_poses,
    format_report_table,
    interpolate_poses,
    iom,
    keypoint_difference,
    loop_intervals,
    max_adjacent_diff,
    param_count,
    parse_intervals_csv,
    report_to_obj,
    serialize_intervals_csv,
)
from .errors import (
    DegenerateGeometryError,
    MotionProgError,
    NoLoopError,
    NumericError,
    ParseError,
    StructuralError,
    UnrecoverableTrackError,
)
from .pose import (
    COCO_JOINTS,
    CSV,
    POSE_JSON,
    Keypoint,
    PoseSequence,
    SyntheticSpec,
    fill_gaps,
    generate_synthetic,
    load_pose,
    normalize,
    parse_keypoints,
    save_pose,
    serialize_pose,
    synthetic_spec_from_obj,
    synthetic_spec_to_obj,
)
from .primitives import (
    CirclePrimitive,
    ConcretePrimitive,
    FitResult,
    LinePrimitive,
    StationaryPrimitive,
    execute_primitive,
    execute_primitive_dense,
    fit_best,
    fit_circle,
    fit_circle_geometry,
    fit_line,
    fit_stationary,
    primitive_from_obj,
    primitive_to_obj,
    trajectory_at,
)
from .segmenter import (
    ConcreteProgram,
    SegmentationConfig,
    adaptive_lambda,
    execute_program,
    load_program,
    program_error,
    program_from_obj,
    program_to_obj,
    save_program,
    segment,
    segmentation_objective,
    serialize_program,
)

__version__ = "0.1.0"
