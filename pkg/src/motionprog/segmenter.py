"""Joint segmentation of keypoint tracks into primitive sequences.

All joints share one boundary set: the dynamic program minimizes, over
segmentations, the sum of per-segment costs, where each segment costs the
sum over joints of the best single-primitive fit error plus an adaptive
regularizer lambda evaluated at the segment's end frame.  lambda -> 0
fragments the sequence into the shortest allowed segments; lambda -> inf
collapses it to a single primitive.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ParseError, StructuralError
from .pose import PoseSequence, dumps_canonical
from .primitives import (
    ConcretePrimitive,
    execute_primitive,
    fit_best,
    primitive_from_obj,
    primitive_to_obj,
)


@dataclass(frozen=True)
class SegmentationConfig:
    lambda_coeff: float = 0.1
    lambda_window: int = 31  # frames, odd
    min_segment: int = 2  # frames; 1-frame segments leave velocities unidentifiable
    max_segment: int | None = None

    def __post_init__(self):
        # lambda_coeff 0 is allowed: it is the documented fragmentation limit.
        if self.lambda_coeff < 0:
            raise ValueError("lambda_coeff must be >= 0")
        if self.lambda_window < 1 or self.lambda_window % 2 == 0:
            raise ValueError("lambda_window must be odd and positive")
        if self.min_segment < 2:
            raise ValueError("min_segment must be >= 2")
        if self.max_segment is not None and self.max_segment < self.min_segment:
            raise ValueError("max_segment must be >= min_segment")


@dataclass(frozen=True, eq=False)
class ConcreteProgram:
    """Per-joint primitive sequences sharing one boundary set.

    ``boundaries`` are strictly increasing frame indices from 0 to the frame
    count; primitive k of every track spans frames boundaries[k]..boundaries[k+1]-1.
    """

    boundaries: tuple[int, ...]
    tracks: dict[str, tuple[ConcretePrimitive, ...]]
    fps: float
    width: int
    height: int

    def __post_init__(self):
        object.__setattr__(self, "boundaries", tuple(int(b) for b in self.boundaries))
        object.__setattr__(self, "tracks",
                           {j: tuple(prims) for j, prims in self.tracks.items()})
        b = self.boundaries
        if len(b) < 2 or b[0] != 0 or any(b[i] >= b[i + 1] for i in range(len(b) - 1)):
            raise StructuralError("boundaries must strictly increase from 0")
        if not self.tracks:
            raise StructuralError("program has no tracks")
        n_segments = len(b) - 1
        for joint, prims in self.tracks.items():
            if len(prims) != n_segments:
                raise StructuralError(f"track {joint!r} has {len(prims)} primitives, "
                                      f"expected {n_segments}")
            for k, p in enumerate(prims):
                if p.time != b[k + 1] - b[k]:
                    raise StructuralError(
                        f"track {joint!r} primitive {k}: time {p.time} != "
                        f"boundary span {b[k + 1] - b[k]}")

    @property
    def joints(self) -> tuple[str, ...]:
        return tuple(self.tracks)

    @property
    def n_frames(self) -> int:
        return self.boundaries[-1]

    @property
    def n_segments(self) -> int:
        return len(self.boundaries) - 1


def adaptive_lambda(seq: PoseSequence, frame: int, cfg: SegmentationConfig) -> float:
    """Regularizer at one frame: lambda_coeff * mean joint covariance trace.

    The 2x2 covariance (population normalization) is taken over a window of
    cfg.lambda_window frames centered on `frame`, truncated at the ends.
    """
    if not 0 <= frame < seq.n_frames:
        raise ValueError("frame out of range")
    half = cfg.lambda_window // 2
    lo = max(0, frame - half)
    hi = min(seq.n_frames, frame + half + 1)
    win = seq.xy[lo:hi]  # (w, J, 2)
    var = win.var(axis=0)  # (J, 2) population variance per coordinate
    return cfg.lambda_coeff * float(var.sum(axis=1).mean())


def _lambda_profile(seq: PoseSequence, cfg: SegmentationConfig) -> np.ndarray:
    return np.array([adaptive_lambda(seq, f, cfg) for f in range(seq.n_frames)])


def _joint_tracks(seq: PoseSequence) -> list[np.ndarray]:
    return [np.ascontiguousarray(seq.xy[:, j]) for j in range(seq.n_joints)]


def _segment_cost(tracks: list[np.ndarray], k: int, n: int, lam: np.ndarray) -> float:
    # Sum of per-joint best-fit errors for frames [k, n), plus the
    # regularizer at the segment's end frame.  Joint order fixed so the
    # accumulated float is deterministic.
    total = 0.0
    for track in tracks:
        total += fit_best(track[k:n]).error
    return total + float(lam[n - 1])


def segment(seq: PoseSequence, cfg: SegmentationConfig | None = None) -> ConcreteProgram:
    """Optimal shared segmentation by dynamic programming.

    best[n] = min over k of best[k] + cost(k, n), where cost is the joint
    fit error of frames [k, n) plus lambda(n-1).  Ties pick the smallest k.
    """
    cfg = cfg or SegmentationConfig()
    t_total = seq.n_frames
    if t_total < cfg.min_segment:
        raise StructuralError(
            f"sequence of {t_total} frames is shorter than min_segment={cfg.min_segment}")
    lam = _lambda_profile(seq, cfg)
    max_seg = cfg.max_segment if cfg.max_segment is not None else t_total
    joint_tracks = _joint_tracks(seq)

    best = np.full(t_total + 1, math.inf)
    best[0] = 0.0
    back = np.zeros(t_total + 1, dtype=np.int64)
    for n in range(cfg.min_segment, t_total + 1):
        for k in range(max(0, n - max_seg), n - cfg.min_segment + 1):
            if not math.isfinite(best[k]):
                continue
            cand = best[k] + _segment_cost(joint_tracks, k, n, lam)
            if cand < best[n]:
                best[n] = cand
                back[n] = k
    if not math.isfinite(best[t_total]):
        raise StructuralError("no segmentation satisfies the length constraints")

    bounds = [t_total]
    while bounds[-1] > 0:
        bounds.append(int(back[bounds[-1]]))
    bounds.reverse()

    tracks = {
        joint: tuple(fit_best(joint_tracks[j][bounds[i]:bounds[i + 1]]).primitive
                     for i in range(len(bounds) - 1))
        for j, joint in enumerate(seq.joints)
    }
    return ConcreteProgram(tuple(bounds), tracks, seq.fps, seq.width, seq.height)


def segmentation_objective(program: ConcreteProgram, seq: PoseSequence,
                           cfg: SegmentationConfig | None = None) -> float:
    """Re-evaluate the DP objective of a program's boundary set.

    Accumulates per-segment costs left to right exactly as the DP does, so
    the value is bitwise comparable with an exhaustive search over boundary
    sets that uses the same cost terms.
    """
    cfg = cfg or SegmentationConfig()
    if program.n_frames != seq.n_frames:
        raise StructuralError("program and sequence disagree on frame count")
    lam = _lambda_profile(seq, cfg)
    tracks = _joint_tracks(seq)
    total = 0.0
    b = program.boundaries
    for i in range(len(b) - 1):
        total = total + _segment_cost(tracks, b[i], b[i + 1], lam)
    return total


def execute_program(program: ConcreteProgram) -> PoseSequence:
    """Trace every track's primitives in order; confidences are 1.0."""
    per_joint = [np.concatenate([execute_primitive(p) for p in program.tracks[j]])
                 for j in program.joints]
    xy = np.stack(per_joint, axis=1)
    conf = np.ones(xy.shape[:2], dtype=np.float64)
    return PoseSequence(program.joints, xy, conf, program.fps,
                        program.width, program.height)


def program_error(program: ConcreteProgram, seq: PoseSequence) -> float:
    """Summed squared pixel distance between the executed program and a sequence."""
    if program.joints != seq.joints:
        raise StructuralError("program and sequence joints differ")
    if program.n_frames != seq.n_frames:
        raise StructuralError("program and sequence disagree on frame count")
    executed = execute_program(program)
    resid = executed.xy - seq.xy
    return float(np.sum(resid * resid))


# ---------------------------------------------------------------------------
# Program files
# ---------------------------------------------------------------------------


def program_to_obj(program: ConcreteProgram) -> dict:
    return {
        "version": 1,
        "fps": float(program.fps),
        "width": int(program.width),
        "height": int(program.height),
        "boundaries": list(program.boundaries),
        "tracks": {j: [primitive_to_obj(p) for p in prims]
                   for j, prims in program.tracks.items()},
    }


def program_from_obj(obj: dict) -> ConcreteProgram:
    try:
        tracks = {j: tuple(primitive_from_obj(p) for p in prims)
                  for j, prims in obj["tracks"].items()}
        return ConcreteProgram(
            boundaries=tuple(int(b) for b in obj["boundaries"]),
            tracks=tracks,
            fps=float(obj["fps"]),
            width=int(obj["width"]),
            height=int(obj["height"]),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise StructuralError(f"bad program file: {e}") from e


def serialize_program(program: ConcreteProgram) -> str:
    return dumps_canonical(program_to_obj(program))


def load_program(path: str) -> ConcreteProgram:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as e:
            raise ParseError(f"invalid JSON: {e.msg}", index=e.lineno) from e
    return program_from_obj(obj)


def save_program(program: ConcreteProgram, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(serialize_program(program))
