"""Keypoint sequence I/O: parsing, normalization, gap repair, synthetic tracks.

Two on-disk formats are supported and both round-trip bit-exactly:

- pose-json: one object per file with ``fps``, ``width``, ``height``,
  ``joints`` and ``frames`` (array of per-frame arrays of [x, y, confidence]
  triples; bare [x, y] pairs are accepted and default to confidence 1.0).
- csv: header ``frame,joint,x,y,confidence``, rows sorted by
  (frame, joint order).  A leading ``# fps=... width=... height=...``
  comment line carries the frame metadata the column schema cannot.

Floats are emitted as their shortest repr, which parses back to the
identical binary value.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ParseError, StructuralError, UnrecoverableTrackError
from .primitives import (
    ConcretePrimitive,
    execute_primitive,
    primitive_from_obj,
    primitive_to_obj,
)

POSE_JSON = "pose-json"
CSV = "csv"
FORMATS = (POSE_JSON, CSV)

CSV_HEADER = "frame,joint,x,y,confidence"

# Canonical joint names (17-joint COCO ordering).  Files may declare any
# subset or other names; declared order is preserved.
COCO_JOINTS = (
    "nose", "left_eye", "right_eye", "left_ear", "right_ear",
    "left_shoulder", "right_shoulder", "left_elbow", "right_elbow",
    "left_wrist", "right_wrist", "left_hip", "right_hip",
    "left_knee", "right_knee", "left_ankle", "right_ankle",
)


@dataclass(frozen=True)
class Keypoint:
    """One 2D detection in pixel coordinates."""

    x: float
    y: float
    confidence: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("keypoint coordinates must be finite")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError("confidence must be in [0, 1]")


@dataclass(frozen=True, eq=False)
class PoseSequence:
    """Time-aligned 2D keypoint tracks, one per joint.

    ``xy`` has shape (frames, joints, 2) and ``confidence`` (frames, joints);
    both are float64 and treated as immutable.
    """

    joints: tuple[str, ...]
    xy: np.ndarray
    confidence: np.ndarray
    fps: float
    width: int
    height: int

    def __post_init__(self):
        xy = np.asarray(self.xy, dtype=np.float64)
        conf = np.asarray(self.confidence, dtype=np.float64)
        object.__setattr__(self, "joints", tuple(self.joints))
        object.__setattr__(self, "xy", xy)
        object.__setattr__(self, "confidence", conf)
        if len(self.joints) == 0:
            raise StructuralError("pose sequence declares no joints")
        if len(set(self.joints)) != len(self.joints):
            raise StructuralError("duplicate joint names")
        if xy.ndim != 3 or xy.shape[2] != 2 or xy.shape[1] != len(self.joints):
            raise StructuralError(f"xy shape {xy.shape} does not match joints")
        if conf.shape != xy.shape[:2]:
            raise StructuralError("confidence shape does not match xy")
        if xy.shape[0] < 1:
            raise StructuralError("pose sequence must have at least one frame")
        if not np.all(np.isfinite(xy)):
            raise StructuralError("keypoint coordinates must be finite")
        if np.any(conf < 0.0) or np.any(conf > 1.0):
            raise StructuralError("confidence values must be in [0, 1]")
        if not (self.fps > 0):
            raise StructuralError("fps must be positive")
        if self.width <= 0 or self.height <= 0:
            raise StructuralError("frame size must be positive")

    @property
    def n_frames(self) -> int:
        return self.xy.shape[0]

    @property
    def n_joints(self) -> int:
        return len(self.joints)

    def joint_index(self, name: str) -> int:
        try:
            return self.joints.index(name)
        except ValueError:
            raise KeyError(f"unknown joint: {name!r}") from None

    def track(self, joint: str) -> np.ndarray:
        """(frames, 2) coordinate track for one joint."""
        return self.xy[:, self.joint_index(joint), :]

    def keypoint(self, frame: int, joint: str) -> Keypoint:
        j = self.joint_index(joint)
        return Keypoint(float(self.xy[frame, j, 0]), float(self.xy[frame, j, 1]),
                        float(self.confidence[frame, j]))


def dumps_canonical(obj) -> str:
    """Deterministic compact JSON; floats use shortest round-trip repr."""
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False, allow_nan=False)


# ---------------------------------------------------------------------------
# Parsing / serialization
# ---------------------------------------------------------------------------


def _as_text(source) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8")
    if isinstance(source, str):
        return source
    data = source.read()
    if isinstance(data, bytes):
        return data.decode("utf-8")
    return data


def parse_keypoints(source, fmt: str) -> PoseSequence:
    """Parse a pose file (bytes, text, or a readable stream) in the given format."""
    text = _as_text(source)
    if fmt == POSE_JSON:
        return _parse_pose_json(text)
    if fmt == CSV:
        return _parse_csv(text)
    raise ValueError(f"unknown format: {fmt!r}")


def serialize_pose(seq: PoseSequence, fmt: str) -> str:
    if fmt == POSE_JSON:
        frames = []
        for f in range(seq.n_frames):
            frames.append([
                [float(seq.xy[f, j, 0]), float(seq.xy[f, j, 1]), float(seq.confidence[f, j])]
                for j in range(seq.n_joints)
            ])
        doc = {
            "fps": float(seq.fps),
            "width": int(seq.width),
            "height": int(seq.height),
            "joints": list(seq.joints),
            "frames": frames,
        }
        return dumps_canonical(doc)
    if fmt == CSV:
        lines = [f"# fps={float(seq.fps)!r} width={int(seq.width)} height={int(seq.height)}",
                 CSV_HEADER]
        for f in range(seq.n_frames):
            for j, name in enumerate(seq.joints):
                lines.append(
                    f"{f},{name},{float(seq.xy[f, j, 0])!r},"
                    f"{float(seq.xy[f, j, 1])!r},{float(seq.confidence[f, j])!r}"
                )
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown format: {fmt!r}")


def _parse_pose_json(text: str) -> PoseSequence:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e.msg}", index=e.lineno) from e
    if not isinstance(doc, dict):
        raise ParseError("top-level value must be an object")
    for key in ("fps", "width", "height", "joints", "frames"):
        if key not in doc:
            raise ParseError(f"missing field {key!r}")
    joints = doc["joints"]
    if not isinstance(joints, list) or not all(isinstance(j, str) for j in joints):
        raise ParseError("joints must be an array of strings")
    frames = doc["frames"]
    if not isinstance(frames, list) or len(frames) == 0:
        raise ParseError("frames must be a nonempty array")
    n_joints = len(joints)
    xy = np.empty((len(frames), n_joints, 2), dtype=np.float64)
    conf = np.empty((len(frames), n_joints), dtype=np.float64)
    for f, frame in enumerate(frames):
        if not isinstance(frame, list):
            raise ParseError("frame must be an array of keypoints", index=f)
        if len(frame) != n_joints:
            raise StructuralError(
                f"frame {f} has {len(frame)} keypoints, expected {n_joints}")
        for j, kp in enumerate(frame):
            if not isinstance(kp, list) or len(kp) not in (2, 3):
                raise ParseError("keypoint must be [x, y] or [x, y, confidence]", index=f)
            xy[f, j, 0] = float(kp[0])
            xy[f, j, 1] = float(kp[1])
            conf[f, j] = float(kp[2]) if len(kp) == 3 else 1.0
    return PoseSequence(tuple(joints), xy, conf,
                        float(doc["fps"]), int(doc["width"]), int(doc["height"]))


def _parse_csv(text: str) -> PoseSequence:
    lines = text.splitlines()
    fps, width, height = 30.0, 512, 512
    i = 0
    if i < len(lines) and lines[i].startswith("#"):
        try:
            meta = dict(part.split("=", 1) for part in lines[i][1:].split())
            fps = float(meta.get("fps", fps))
            width = int(meta.get("width", width))
            height = int(meta.get("height", height))
        except (ValueError, KeyError) as e:
            raise ParseError(f"bad metadata line: {e}", index=1) from e
        i += 1
    if i >= len(lines) or lines[i].strip() != CSV_HEADER:
        raise ParseError(f"expected header {CSV_HEADER!r}", index=i + 1)
    i += 1

    rows = []
    for lineno in range(i, len(lines)):
        line = lines[lineno].strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 5:
            raise ParseError("expected 5 comma-separated fields", index=lineno + 1)
        try:
            rows.append((int(parts[0]), parts[1], float(parts[2]), float(parts[3]),
                         float(parts[4])))
        except ValueError as e:
            raise ParseError(f"bad value: {e}", index=lineno + 1) from e
    if not rows:
        raise ParseError("no data rows")

    joints: list[str] = []
    first_frame = rows[0][0]
    for frame, joint, *_ in rows:
        if frame != first_frame:
            break
        joints.append(joint)
    n_joints = len(joints)
    if n_joints == 0 or len(rows) % n_joints != 0:
        raise StructuralError("row count is not a multiple of the joint count")
    n_frames = len(rows) // n_joints
    xy = np.empty((n_frames, n_joints, 2), dtype=np.float64)
    conf = np.empty((n_frames, n_joints), dtype=np.float64)
    for idx, (frame, joint, x, y, c) in enumerate(rows):
        f, j = divmod(idx, n_joints)
        if frame != f or joint != joints[j]:
            raise StructuralError(
                f"row {idx}: expected frame {f} joint {joints[j]!r}, "
                f"got frame {frame} joint {joint!r}")
        xy[f, j] = (x, y)
        conf[f, j] = c
    return PoseSequence(tuple(joints), xy, conf, fps, width, height)


def load_pose(path: str, fmt: str | None = None) -> PoseSequence:
    if fmt is None:
        fmt = CSV if str(path).endswith(".csv") else POSE_JSON
    with open(path, "rb") as fh:
        return parse_keypoints(fh, fmt)


def save_pose(seq: PoseSequence, path: str, fmt: str | None = None) -> None:
    if fmt is None:
        fmt = CSV if str(path).endswith(".csv") else POSE_JSON
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(serialize_pose(seq, fmt))


# ---------------------------------------------------------------------------
# Transforms
# ---------------------------------------------------------------------------


def normalize(seq: PoseSequence, target_w: int, target_h: int) -> PoseSequence:
    """Scale coordinates by (target_w/width, target_h/height)."""
    if target_w <= 0 or target_h <= 0:
        raise ValueError("target size must be positive")
    scale = np.array([target_w / seq.width, target_h / seq.height])
    return replace(seq, xy=seq.xy * scale, width=int(target_w), height=int(target_h))


def fill_gaps(seq: PoseSequence, conf_threshold: float) -> PoseSequence:
    """Repair low-confidence keypoints by linear interpolation in time.

    Keypoints with confidence strictly below the threshold are replaced by
    the linear interpolation between the nearest confident frames of the same
    joint; leading/trailing gaps copy the nearest confident value.  Repaired
    confidences are set to the threshold.
    """
    if not 0.0 <= conf_threshold <= 1.0:
        raise ValueError("conf_threshold must be in [0, 1]")
    xy = seq.xy.copy()
    conf = seq.confidence.copy()
    t = np.arange(seq.n_frames, dtype=np.float64)
    for j, name in enumerate(seq.joints):
        good = conf[:, j] >= conf_threshold
        if not np.any(good):
            raise UnrecoverableTrackError(f"joint {name!r} has no confident frames")
        if np.all(good):
            continue
        bad = ~good
        for c in range(2):
            xy[bad, j, c] = np.interp(t[bad], t[good], xy[good, j, c])
        conf[bad, j] = conf_threshold
    return replace(seq, xy=xy, confidence=conf)


# ---------------------------------------------------------------------------
# Synthetic ground truth
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SyntheticSpec:
    """Ground-truth primitive tracks plus a Gaussian pixel-noise model.

    Used as a test oracle: the noiseless execution is known exactly, and the
    generator is deterministic for a fixed seed.
    """

    tracks: dict[str, tuple[ConcretePrimitive, ...]]
    noise_sigma: float = 0.0
    seed: int = 0
    fps: float = 30.0
    width: int = 512
    height: int = 512

    def __post_init__(self):
        if not self.tracks:
            raise StructuralError("synthetic spec declares no joints")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        totals = set()
        for joint, prims in self.tracks.items():
            if not prims:
                raise StructuralError(f"joint {joint!r} has no primitives")
            for p in prims:
                if p.time < 2:
                    raise StructuralError("synthetic primitive durations must be >= 2 frames")
            totals.add(sum(p.time for p in prims))
        if len(totals) != 1:
            raise StructuralError("joints disagree on total frame count")


def generate_synthetic(spec: SyntheticSpec) -> PoseSequence:
    """Execute the ground-truth primitives and add i.i.d. Gaussian noise."""
    joints = tuple(spec.tracks)
    per_joint = [np.concatenate([execute_primitive(p) for p in spec.tracks[j]])
                 for j in joints]
    xy = np.stack(per_joint, axis=1)  # (frames, joints, 2)
    if spec.noise_sigma > 0:
        rng = np.random.default_rng(spec.seed)
        xy = xy + rng.normal(0.0, spec.noise_sigma, size=xy.shape)
    conf = np.ones(xy.shape[:2], dtype=np.float64)
    return PoseSequence(joints, xy, conf, spec.fps, spec.width, spec.height)


def synthetic_spec_to_obj(spec: SyntheticSpec) -> dict:
    return {
        "fps": float(spec.fps),
        "width": int(spec.width),
        "height": int(spec.height),
        "noise_sigma": float(spec.noise_sigma),
        "seed": int(spec.seed),
        "tracks": {j: [primitive_to_obj(p) for p in prims]
                   for j, prims in spec.tracks.items()},
    }


def synthetic_spec_from_obj(obj: dict) -> SyntheticSpec:
    try:
        tracks = {j: tuple(primitive_from_obj(p) for p in prims)
                  for j, prims in obj["tracks"].items()}
        return SyntheticSpec(
            tracks=tracks,
            noise_sigma=float(obj.get("noise_sigma", 0.0)),
            seed=int(obj.get("seed", 0)),
            fps=float(obj.get("fps", 30.0)),
            width=int(obj.get("width", 512)),
            height=int(obj.get("height", 512)),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(f"bad synthetic spec: {e}") from e
