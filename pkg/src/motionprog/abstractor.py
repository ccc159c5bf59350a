"""Abstract motion programs: start/middle/end primitives and for-loops.

Concrete programs are first flattened to deterministic primitives (three
trajectory points plus a duration, per joint).  Repetition is then detected
by grouping a window of primitives modulo a candidate body size, fitting a
Gaussian to each group, and thresholding the average covariance norm.
Detected windows are rolled into for-loops whose bodies are probabilistic
primitives; execution samples each body primitive afresh per iteration and
re-fits a concrete primitive to the sample.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import NumericError, ParseError, StructuralError
from .pose import dumps_canonical
from .primitives import (
    CirclePrimitive,
    ConcretePrimitive,
    LinePrimitive,
    StationaryPrimitive,
    execute_primitive,
)
from .segmenter import ConcreteProgram

TWO_PI = 2.0 * math.pi

# Classification tolerances for concretizing a sampled primitive: sub-pixel
# scatter must not promote a stationary point into a huge circle.
STATIONARY_EPS = 1.0  # px, max deviation from the centroid
COLLINEAR_EPS = 0.5  # px^2, triangle area

PSD_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class DetPrim:
    """Deterministic abstract primitive: per-joint start/middle/end points.

    ``start``, ``middle`` and ``end`` have shape (joints, 2).
    """

    start: np.ndarray
    middle: np.ndarray
    end: np.ndarray
    time: int

    def __post_init__(self):
        for name in ("start", "middle", "end"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.ndim != 2 or arr.shape[1] != 2:
                raise StructuralError(f"{name} must have shape (joints, 2)")
            object.__setattr__(self, name, arr)
        if not (self.start.shape == self.middle.shape == self.end.shape):
            raise StructuralError("start/middle/end joint counts differ")
        if self.time < 1:
            raise ValueError("time must be >= 1")

    @property
    def n_joints(self) -> int:
        return self.start.shape[0]

    def vector(self) -> np.ndarray:
        """Flatten to (6*joints,): [sx, sy, mx, my, ex, ey] per joint."""
        return np.stack([self.start, self.middle, self.end], axis=1).reshape(-1)

    @staticmethod
    def from_vector(vec: np.ndarray, time: int) -> "DetPrim":
        pts = np.asarray(vec, dtype=np.float64).reshape(-1, 3, 2)
        return DetPrim(pts[:, 0], pts[:, 1], pts[:, 2], time)


@dataclass(frozen=True, eq=False)
class ProbPrim:
    """Gaussian over concatenated start/middle/end points plus a duration multiset."""

    mean: np.ndarray  # (6J,)
    covariance: np.ndarray  # (6J, 6J)
    durations: Counter  # frame count -> occurrences

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        cov = np.asarray(self.covariance, dtype=np.float64)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "durations", Counter(self.durations))
        if mean.ndim != 1 or mean.size % 6 != 0:
            raise StructuralError("mean must be a flat vector of 6 values per joint")
        if cov.shape != (mean.size, mean.size):
            raise StructuralError("covariance shape does not match mean")
        if not np.allclose(cov, cov.T, atol=1e-9):
            raise StructuralError("covariance must be symmetric")
        if not self.durations:
            raise StructuralError("durations must be nonempty")

    @property
    def n_joints(self) -> int:
        return self.mean.size // 6


@dataclass(frozen=True)
class ForLoop:
    iterations: int
    body: tuple[ProbPrim, ...]

    def __post_init__(self):
        object.__setattr__(self, "body", tuple(self.body))
        if self.iterations < 2:
            raise StructuralError("loop must have at least 2 iterations")
        if len(self.body) < 1:
            raise StructuralError("loop body must be nonempty")


Statement = DetPrim | ForLoop


@dataclass(frozen=True, eq=False)
class AbstractProgram:
    joints: tuple[str, ...]
    statements: tuple[Statement, ...]

    def __post_init__(self):
        object.__setattr__(self, "joints", tuple(self.joints))
        object.__setattr__(self, "statements", tuple(self.statements))
        n = len(self.joints)
        for s in self.statements:
            got = s.n_joints if isinstance(s, DetPrim) else s.body[0].n_joints
            if got != n:
                raise StructuralError("statement joint count does not match program")


@dataclass(frozen=True)
class LoopConfig:
    max_body: int = 4
    init_window: int | None = None  # primitives; defaults to 2 * max_body
    quality_threshold: float = 150.0  # px^2, on covariance Frobenius norms
    min_iterations: int = 2

    def __post_init__(self):
        if self.max_body < 1:
            raise ValueError("max_body must be >= 1")
        if self.quality_threshold <= 0:
            raise ValueError("quality_threshold must be > 0")
        if self.min_iterations < 2:
            raise ValueError("min_iterations must be >= 2")
        if self.init_window is None:
            object.__setattr__(self, "init_window", 2 * self.max_body)
        if self.init_window < 2 * self.max_body:
            raise ValueError("init_window must be >= 2 * max_body")


def default_tau(width: int, height: int) -> float:
    """Resolution-scaled default quality threshold (150 px^2 at 512x512)."""
    return 150.0 * (math.hypot(width, height) / math.hypot(512, 512)) ** 2


@dataclass(frozen=True)
class LoopCandidate:
    """A detected repetitive interval over the DetPrim sequence.

    ``end_stmt`` is exclusive; the covered span is a whole number of
    iterations of ``body_size`` primitives.
    """

    start_stmt: int
    end_stmt: int
    body_size: int
    quality: float
    body: tuple[ProbPrim, ...]

    def __post_init__(self):
        object.__setattr__(self, "body", tuple(self.body))
        if (self.end_stmt - self.start_stmt) % self.body_size != 0:
            raise StructuralError("candidate span is not a multiple of body_size")

    @property
    def iterations(self) -> int:
        return (self.end_stmt - self.start_stmt) // self.body_size


# ---------------------------------------------------------------------------
# Concrete -> abstract translation
# ---------------------------------------------------------------------------


def to_abstract(program: ConcreteProgram) -> list[DetPrim]:
    """Summarize each segment by its executed start, middle and end points."""
    out = []
    joints = program.joints
    for k in range(program.n_segments):
        time = program.boundaries[k + 1] - program.boundaries[k]
        mid = (time - 1) // 2
        start = np.empty((len(joints), 2))
        middle = np.empty((len(joints), 2))
        end = np.empty((len(joints), 2))
        for j, joint in enumerate(joints):
            traced = execute_primitive(program.tracks[joint][k])
            start[j] = traced[0]
            middle[j] = traced[mid]
            end[j] = traced[time - 1]
        out.append(DetPrim(start, middle, end, time))
    return out


def group_window(window: list[DetPrim], l: int) -> list[list[DetPrim]]:
    """Partition a window by position modulo the body size: S_i = {w_j : j % l == i}."""
    if l < 1:
        raise ValueError("body size must be >= 1")
    if len(window) < l:
        raise ValueError("window shorter than body size")
    return [[w for j, w in enumerate(window) if j % l == i] for i in range(l)]


def fit_prob_prim(group: list[DetPrim]) -> ProbPrim:
    """Gaussian over the group's feature vectors; population covariance."""
    if not group:
        raise ValueError("group must be nonempty")
    vecs = np.stack([d.vector() for d in group])
    mean = vecs.mean(axis=0)
    centered = vecs - mean
    cov = centered.T @ centered / len(group)
    return ProbPrim(mean, cov, Counter(d.time for d in group))


def _window_quality(window: list[DetPrim], l: int) -> float:
    groups = group_window(window, l)
    total = 0.0
    for g in groups:
        vecs = np.stack([d.vector() for d in g])
        centered = vecs - vecs.mean(axis=0)
        cov = centered.T @ centered / len(g)
        total += float(np.linalg.norm(cov))  # Frobenius
    return total / l


def detect_loops(prims: list[DetPrim], cfg: LoopConfig | None = None) -> list[LoopCandidate]:
    """Find maximal non-overlapping repetitive intervals.

    Scanning left to right, each anchor tries body sizes l = 1..max_body
    (smallest first) on an initial window of up to ``init_window`` primitives
    floored to a multiple of l.  If the average covariance norm is within the
    threshold, the window grows by l primitives at a time while the recomputed
    quality stays within it; the scan resumes after the accepted interval.
    """
    cfg = cfg or LoopConfig()
    if not prims:
        raise ValueError("prims must be nonempty")
    n = len(prims)
    out: list[LoopCandidate] = []
    a = 0
    while a < n:
        found = None
        for l in range(1, cfg.max_body + 1):
            w = (min(cfg.init_window, n - a) // l) * l
            if w // l < cfg.min_iterations:
                continue
            quality = _window_quality(prims[a:a + w], l)
            if quality > cfg.quality_threshold:
                continue
            while a + w + l <= n:
                grown = _window_quality(prims[a:a + w + l], l)
                if grown > cfg.quality_threshold:
                    break
                w += l
                quality = grown
            body = tuple(fit_prob_prim(g) for g in group_window(prims[a:a + w], l))
            found = LoopCandidate(a, a + w, l, quality, body)
            break
        if found is not None:
            out.append(found)
            a = found.end_stmt
        else:
            a += 1
    return out


def roll_loops(prims: list[DetPrim], candidates: list[LoopCandidate],
               joints: tuple[str, ...] | None = None) -> AbstractProgram:
    """Splice detected loops into the primitive sequence.

    Uncovered DetPrims are kept in place; each candidate becomes a ForLoop
    with iterations = span / body_size.  DetPrims carry no joint names, so
    callers that have them pass ``joints``; otherwise j0..jN are assumed.
    """
    if joints is None:
        n_joints = prims[0].n_joints if prims else 0
        joints = tuple(f"j{i}" for i in range(n_joints))
    cands = sorted(candidates, key=lambda c: c.start_stmt)
    for prev, cur in zip(cands, cands[1:]):
        if cur.start_stmt < prev.end_stmt:
            raise StructuralError("overlapping loop candidates")
    statements: list[Statement] = []
    pos = 0
    for c in cands:
        if not 0 <= c.start_stmt < c.end_stmt <= len(prims):
            raise StructuralError("candidate indices out of range")
        statements.extend(prims[pos:c.start_stmt])
        statements.append(ForLoop(c.iterations, c.body))
        pos = c.end_stmt
    statements.extend(prims[pos:])
    return AbstractProgram(joints, tuple(statements))


# ---------------------------------------------------------------------------
# Sampling and execution
# ---------------------------------------------------------------------------


def sample_det_prim(p: ProbPrim, rng: np.random.Generator) -> DetPrim:
    """Draw one deterministic primitive from the Gaussian.

    The point vector is mean + C^(1/2) z with the symmetric square root of
    the covariance; the duration is uniform over the empirical multiset.
    """
    eigvals, eigvecs = np.linalg.eigh(p.covariance)
    scale = max(1.0, float(eigvals[-1]))
    if eigvals[0] < -PSD_TOLERANCE * scale:
        raise NumericError(f"covariance not PSD (min eigenvalue {eigvals[0]:.3g})")
    root = eigvecs @ np.diag(np.sqrt(np.clip(eigvals, 0.0, None))) @ eigvecs.T
    z = rng.standard_normal(p.mean.size)
    vec = p.mean + root @ z
    choices = sorted(p.durations.elements())
    time = choices[int(rng.integers(len(choices)))]
    return DetPrim.from_vector(vec, int(time))


def _circumcircle(s, m, e) -> tuple[tuple[float, float], float]:
    d = 2.0 * (s[0] * (m[1] - e[1]) + m[0] * (e[1] - s[1]) + e[0] * (s[1] - m[1]))
    s2, m2, e2 = s[0] ** 2 + s[1] ** 2, m[0] ** 2 + m[1] ** 2, e[0] ** 2 + e[1] ** 2
    ux = (s2 * (m[1] - e[1]) + m2 * (e[1] - s[1]) + e2 * (s[1] - m[1])) / d
    uy = (s2 * (e[0] - m[0]) + m2 * (s[0] - e[0]) + e2 * (m[0] - s[0])) / d
    center = (float(ux), float(uy))
    radius = math.hypot(s[0] - ux, s[1] - uy)
    return center, radius


def _concretize_joint(s, m, e, time: int) -> ConcretePrimitive:
    pts = np.array([s, m, e], dtype=np.float64)
    centroid = pts.mean(axis=0)
    if time == 1 or np.hypot(*(pts - centroid).T).max() < STATIONARY_EPS:
        return StationaryPrimitive((float(centroid[0]), float(centroid[1])), time)
    area = 0.5 * abs((m[0] - s[0]) * (e[1] - s[1]) - (m[1] - s[1]) * (e[0] - s[0]))
    if area < COLLINEAR_EPS:
        vel = (e - s) / (time - 1)
        return LinePrimitive((float(s[0]), float(s[1])),
                             (float(vel[0]), float(vel[1])), time)
    center, radius = _circumcircle(s, m, e)
    ang_s = math.atan2(s[1] - center[1], s[0] - center[0])
    ang_m = math.atan2(m[1] - center[1], m[0] - center[0])
    ang_e = math.atan2(e[1] - center[1], e[0] - center[0])
    # Orientation: travel from start must reach middle before end.
    ccw_sm = (ang_m - ang_s) % TWO_PI
    ccw_se = (ang_e - ang_s) % TWO_PI
    if ccw_sm <= ccw_se:
        velocity = ccw_se / (time - 1)
    else:
        velocity = -((ang_s - ang_e) % TWO_PI) / (time - 1)
    return CirclePrimitive(center, radius, velocity, ang_s, time)


def concretize(d: DetPrim) -> tuple[ConcretePrimitive, ...]:
    """Per joint, the simplest concrete primitive through start/middle/end.

    Near-coincident points become stationary, near-collinear ones a line
    through start and end; otherwise the unique circle through the three
    points, oriented so the arc passes middle on the way to end.
    """
    return tuple(
        _concretize_joint(d.start[j], d.middle[j], d.end[j], d.time)
        for j in range(d.n_joints)
    )


def sample_loop_iterations(loop: ForLoop, count: int,
                           rng: np.random.Generator) -> list[DetPrim]:
    """Sample `count` fresh iterations of a loop body."""
    out = []
    for _ in range(count):
        for p in loop.body:
            out.append(sample_det_prim(p, rng))
    return out


def concrete_from_det_seq(joints: tuple[str, ...], det_seq: list[DetPrim],
                          *, fps: float = 30.0, width: int = 512,
                          height: int = 512) -> ConcreteProgram:
    """Concretize a DetPrim sequence into a concrete program."""
    if not det_seq:
        raise StructuralError("no primitives to concretize")
    boundaries = [0]
    per_joint: list[list[ConcretePrimitive]] = [[] for _ in joints]
    for d in det_seq:
        prims = concretize(d)
        for j in range(len(joints)):
            per_joint[j].append(prims[j])
        boundaries.append(boundaries[-1] + d.time)
    tracks = {joint: tuple(per_joint[j]) for j, joint in enumerate(joints)}
    return ConcreteProgram(tuple(boundaries), tracks, fps, width, height)


def execute_abstract(program: AbstractProgram, rng: np.random.Generator,
                     *, fps: float = 30.0, width: int = 512,
                     height: int = 512) -> ConcreteProgram:
    """Expand an abstract program into a concrete one.

    DetPrims concretize directly; every loop iteration samples each body
    primitive afresh.  Frame metadata is not part of the abstract level, so
    it is supplied by the caller.
    """
    det_seq: list[DetPrim] = []
    for stmt in program.statements:
        if isinstance(stmt, DetPrim):
            det_seq.append(stmt)
        else:
            det_seq.extend(sample_loop_iterations(stmt, stmt.iterations, rng))
    return concrete_from_det_seq(program.joints, det_seq,
                                 fps=fps, width=width, height=height)


# ---------------------------------------------------------------------------
# Abstract program files
# ---------------------------------------------------------------------------


def _det_to_obj(d: DetPrim) -> dict:
    return {
        "kind": "det",
        "start": d.start.tolist(),
        "middle": d.middle.tolist(),
        "end": d.end.tolist(),
        "time": int(d.time),
    }


def _prob_to_obj(p: ProbPrim) -> dict:
    return {
        "mean": [float(v) for v in p.mean],
        "cov": p.covariance.tolist(),
        "durations": {str(t): int(c) for t, c in sorted(p.durations.items())},
    }


def abstract_to_obj(program: AbstractProgram) -> dict:
    statements = []
    for stmt in program.statements:
        if isinstance(stmt, DetPrim):
            statements.append(_det_to_obj(stmt))
        else:
            statements.append({
                "kind": "loop",
                "iter": int(stmt.iterations),
                "body": [_prob_to_obj(p) for p in stmt.body],
            })
    return {"version": 1, "joints": list(program.joints), "statements": statements}


def abstract_from_obj(obj: dict) -> AbstractProgram:
    try:
        joints = tuple(obj["joints"])
        statements: list[Statement] = []
        for s in obj["statements"]:
            if s["kind"] == "det":
                statements.append(DetPrim(
                    np.asarray(s["start"], dtype=np.float64),
                    np.asarray(s["middle"], dtype=np.float64),
                    np.asarray(s["end"], dtype=np.float64),
                    int(s["time"]),
                ))
            elif s["kind"] == "loop":
                body = tuple(
                    ProbPrim(
                        np.asarray(p["mean"], dtype=np.float64),
                        np.asarray(p["cov"], dtype=np.float64),
                        Counter({int(t): int(c) for t, c in p["durations"].items()}),
                    )
                    for p in s["body"]
                )
                statements.append(ForLoop(int(s["iter"]), body))
            else:
                raise ValueError(f"unknown statement kind: {s['kind']!r}")
        return AbstractProgram(joints, tuple(statements))
    except (KeyError, TypeError, ValueError) as e:
        raise StructuralError(f"bad abstract program file: {e}") from e


def serialize_abstract(program: AbstractProgram) -> str:
    return dumps_canonical(abstract_to_obj(program))


def load_abstract(path: str) -> AbstractProgram:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as e:
            raise ParseError(f"invalid JSON: {e.msg}", index=e.lineno) from e
    return abstract_from_obj(obj)


def save_abstract(program: AbstractProgram, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(serialize_abstract(program))
