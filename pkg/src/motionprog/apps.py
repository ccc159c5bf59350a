"""Program-driven applications and evaluation metrics.

Pose interpolation executes a fitted program on a finer time grid; loop
unrolling predicts future poses by running the final for-loop for extra
iterations.  The metrics cover keypoint difference (mean pixel distance),
adjacent-frame smoothness, parameter counting, and interval overlap scoring
of detected repetitive segments against annotations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .abstractor import (
    AbstractProgram,
    DetPrim,
    ForLoop,
    concrete_from_det_seq,
    sample_loop_iterations,
)
from .errors import NoLoopError, ParseError, StructuralError
from .pose import PoseSequence
from .primitives import CirclePrimitive, LinePrimitive, StationaryPrimitive, trajectory_at
from .segmenter import ConcreteProgram, execute_program

# Table-style keypoint-difference reporting uses the major motion joints
# when they are present.
KD_DEFAULT_JOINTS = ("left_elbow", "left_wrist", "right_elbow", "right_wrist")


@dataclass(frozen=True)
class Interval:
    """Half-open frame interval [start_frame, end_frame)."""

    start_frame: int
    end_frame: int

    def __post_init__(self):
        if self.start_frame >= self.end_frame:
            raise StructuralError("interval must be nonempty (start < end)")

    def __len__(self) -> int:
        return self.end_frame - self.start_frame


@dataclass(frozen=True)
class SegmentReport:
    detected: tuple[Interval, ...]
    truth: tuple[Interval, ...]
    precision: float
    recall: float
    matches: tuple[tuple[Interval, Interval, float], ...]  # (detected, truth, iom)
    no_detections: bool = False


# ---------------------------------------------------------------------------
# Execution-based applications
# ---------------------------------------------------------------------------


def interpolate_poses(program: ConcreteProgram, factor: int) -> PoseSequence:
    """Execute the program at 1/factor frame steps.

    Output frame k*factor equals frame k of the plain execution bitwise; the
    sub-frame samples between two segments extend the earlier segment's
    closed form across the transition.  Output length is
    (frames - 1) * factor + 1 and fps is multiplied by factor.
    """
    if factor < 1:
        raise ValueError("factor must be >= 1")
    n_segments = program.n_segments
    per_joint = []
    for joint in program.joints:
        chunks = []
        for k, prim in enumerate(program.tracks[joint]):
            if k < n_segments - 1:
                t = np.arange(prim.time * factor, dtype=np.float64) / factor
            else:
                t = np.arange((prim.time - 1) * factor + 1, dtype=np.float64) / factor
            chunks.append(trajectory_at(prim, t))
        per_joint.append(np.concatenate(chunks))
    xy = np.stack(per_joint, axis=1)
    conf = np.ones(xy.shape[:2], dtype=np.float64)
    return PoseSequence(program.joints, xy, conf, program.fps * factor,
                        program.width, program.height)


def extrapolate_poses(program: AbstractProgram, extra_iters: int,
                      rng: np.random.Generator, *, fps: float = 30.0,
                      width: int = 512, height: int = 512) -> PoseSequence:
    """Predict future poses by unrolling the final for-loop.

    Only the added iterations are executed and returned; each body primitive
    is sampled afresh per iteration.
    """
    if extra_iters < 1:
        raise ValueError("extra_iters must be >= 1")
    last_loop = None
    for stmt in program.statements:
        if isinstance(stmt, ForLoop):
            last_loop = stmt
    if last_loop is None:
        raise NoLoopError("program contains no for-loop to extend")
    added = sample_loop_iterations(last_loop, extra_iters, rng)
    concrete = concrete_from_det_seq(program.joints, added,
                                     fps=fps, width=width, height=height)
    return execute_program(concrete)


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------


def keypoint_difference(a: PoseSequence, b: PoseSequence,
                        joints: tuple[str, ...] | None = None) -> float:
    """Mean Euclidean pixel distance over frames and (selected) joints."""
    if a.n_frames != b.n_frames:
        raise StructuralError("sequences have different frame counts")
    if joints is None:
        if a.joints != b.joints:
            raise StructuralError("sequences have different joint sets")
        xa, xb = a.xy, b.xy
    else:
        ia = [a.joint_index(j) for j in joints]
        ib = [b.joint_index(j) for j in joints]
        xa, xb = a.xy[:, ia], b.xy[:, ib]
    diff = xa - xb
    return float(np.hypot(diff[..., 0], diff[..., 1]).mean())


def max_adjacent_diff(seq: PoseSequence) -> float:
    """Largest single-frame displacement of any joint."""
    if seq.n_frames < 2:
        raise ValueError("need at least 2 frames")
    step = np.diff(seq.xy, axis=0)
    return float(np.hypot(step[..., 0], step[..., 1]).max())


_PRIM_PARAMS = {CirclePrimitive: 6, LinePrimitive: 5, StationaryPrimitive: 3}


def param_count(obj: ConcreteProgram | PoseSequence) -> int:
    """Scalar parameters of a program, or 2 * joints * frames for raw poses."""
    if isinstance(obj, PoseSequence):
        return 2 * obj.n_joints * obj.n_frames
    if isinstance(obj, ConcreteProgram):
        return sum(_PRIM_PARAMS[type(p)] for prims in obj.tracks.values() for p in prims)
    raise TypeError(f"unsupported: {type(obj).__name__}")


def iom(a: Interval, b: Interval) -> float:
    """Intersection over minimum of two frame intervals."""
    inter = max(0, min(a.end_frame, b.end_frame) - max(a.start_frame, b.start_frame))
    return inter / min(len(a), len(b))


def evaluate_segments(detected: list[Interval], truth: list[Interval]) -> SegmentReport:
    """Greedy one-to-one matching in decreasing IoM order; IoM > 0.5 matches.

    Precision with no detections is reported as 1.0 with ``no_detections``
    set; recall with empty truth is 1.0.
    """
    pairs = []
    for di, d in enumerate(detected):
        for ti, t in enumerate(truth):
            v = iom(d, t)
            if v > 0.5:
                pairs.append((v, di, ti))
    pairs.sort(key=lambda p: (-p[0], p[1], p[2]))
    used_d: set[int] = set()
    used_t: set[int] = set()
    matches = []
    for v, di, ti in pairs:
        if di in used_d or ti in used_t:
            continue
        used_d.add(di)
        used_t.add(ti)
        matches.append((detected[di], truth[ti], v))
    matched = len(matches)
    precision = matched / len(detected) if detected else 1.0
    recall = matched / len(truth) if truth else 1.0
    return SegmentReport(tuple(detected), tuple(truth), precision, recall,
                         tuple(matches), no_detections=not detected)


def loop_intervals(program: AbstractProgram,
                   concrete: ConcreteProgram) -> list[Interval]:
    """Frame intervals covered by the program's for-loops.

    Statement durations come from the concrete program the abstract one was
    derived from, walked in statement order.
    """
    intervals = []
    frame = 0
    seg = 0
    b = concrete.boundaries
    for stmt in program.statements:
        if isinstance(stmt, DetPrim):
            frame += stmt.time
            seg += 1
        else:
            span = stmt.iterations * len(stmt.body)
            end_frame = b[seg + span] - b[seg] + frame
            intervals.append(Interval(frame, end_frame))
            frame = end_frame
            seg += span
    return intervals


# ---------------------------------------------------------------------------
# Annotation files and reports
# ---------------------------------------------------------------------------


def parse_intervals_csv(text: str) -> list[Interval]:
    """Read ground-truth repetitive segments: ``start_frame,end_frame,label``."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("start_frame,end_frame"):
        raise ParseError("expected header 'start_frame,end_frame,label'", index=1)
    out = []
    for i, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) < 2:
            raise ParseError("expected at least start_frame,end_frame", index=i)
        try:
            out.append(Interval(int(parts[0]), int(parts[1])))
        except ValueError as e:
            raise ParseError(f"bad interval: {e}", index=i) from e
    return out


def serialize_intervals_csv(intervals: list[Interval],
                            labels: list[str] | None = None) -> str:
    lines = ["start_frame,end_frame,label"]
    for i, iv in enumerate(intervals):
        label = labels[i] if labels else f"segment{i}"
        lines.append(f"{iv.start_frame},{iv.end_frame},{label}")
    return "\n".join(lines) + "\n"


def report_to_obj(report: SegmentReport) -> dict:
    return {
        "precision": report.precision,
        "recall": report.recall,
        "no_detections": report.no_detections,
        "detected": [[iv.start_frame, iv.end_frame] for iv in report.detected],
        "truth": [[iv.start_frame, iv.end_frame] for iv in report.truth],
        "matches": [
            {"detected": [d.start_frame, d.end_frame],
             "truth": [t.start_frame, t.end_frame],
             "iom": v}
            for d, t, v in report.matches
        ],
    }


def format_report_table(report: SegmentReport) -> str:
    lines = [
        f"{'detected':>12} {'truth':>12} {'iom':>6}",
    ]
    for d, t, v in report.matches:
        lines.append(f"{f'[{d.start_frame},{d.end_frame})':>12} "
                     f"{f'[{t.start_frame},{t.end_frame})':>12} {v:6.3f}")
    lines.append(f"detected={len(report.detected)} truth={len(report.truth)} "
                 f"matched={len(report.matches)}")
    lines.append(f"precision={report.precision:.4f} recall={report.recall:.4f}")
    if report.no_detections:
        lines.append("note: no detections; precision reported as 1.0 by convention")
    return "\n".join(lines) + "\n"
