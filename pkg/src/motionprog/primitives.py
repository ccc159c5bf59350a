"""Concrete motion primitives: circular, linear and stationary movement.

Each primitive describes the trajectory of one keypoint over an integer
number of frames.  Fitting returns the primitive together with the summed
squared pixel distance between the observed points and the primitive's own
execution, so errors of different primitive kinds are directly comparable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometryError

# Near-collinear arcs fit circles that are numerically indistinguishable
# from lines; reject them so the line fit wins instead.
MAX_RADIUS = 1e6
MAX_CONDITION = 1e12

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class CirclePrimitive:
    """Circular motion: center + radius * (cos, sin)(angle_start + angle_velocity * t)."""

    center: tuple[float, float]
    radius: float
    angle_velocity: float  # radians/frame
    angle_start: float  # radians
    time: int

    def __post_init__(self):
        if self.time < 1:
            raise ValueError("time must be >= 1")
        if self.radius < 0:
            raise ValueError("radius must be >= 0")
        vals = (*self.center, self.radius, self.angle_velocity, self.angle_start)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("circle parameters must be finite")


@dataclass(frozen=True)
class LinePrimitive:
    """Linear motion: start + velocity * t.

    The point/vector form covers vertical motion, which the velocity/slope
    parameterization cannot express; serialization emits the slope form
    additionally whenever it is defined.
    """

    start: tuple[float, float]
    velocity: tuple[float, float]  # px/frame
    time: int

    def __post_init__(self):
        if self.time < 1:
            raise ValueError("time must be >= 1")
        if not all(math.isfinite(v) for v in (*self.start, *self.velocity)):
            raise ValueError("line parameters must be finite")


@dataclass(frozen=True)
class StationaryPrimitive:
    """No motion: the keypoint holds one point for `time` frames."""

    point: tuple[float, float]
    time: int

    def __post_init__(self):
        if self.time < 1:
            raise ValueError("time must be >= 1")
        if not all(math.isfinite(v) for v in self.point):
            raise ValueError("point must be finite")


ConcretePrimitive = CirclePrimitive | LinePrimitive | StationaryPrimitive


@dataclass(frozen=True)
class FitResult:
    primitive: ConcretePrimitive
    error: float  # summed squared px distance to the executed trajectory


# ---------------------------------------------------------------------------
# Execution
# ---------------------------------------------------------------------------


def trajectory_at(prim: ConcretePrimitive, t: np.ndarray) -> np.ndarray:
    """Evaluate the primitive's closed-form trajectory at (possibly fractional) times."""
    t = np.asarray(t, dtype=np.float64)
    if isinstance(prim, CirclePrimitive):
        ang = prim.angle_start + prim.angle_velocity * t
        return np.stack(
            [prim.center[0] + prim.radius * np.cos(ang),
             prim.center[1] + prim.radius * np.sin(ang)],
            axis=1,
        )
    if isinstance(prim, LinePrimitive):
        return np.stack(
            [prim.start[0] + prim.velocity[0] * t,
             prim.start[1] + prim.velocity[1] * t],
            axis=1,
        )
    if isinstance(prim, StationaryPrimitive):
        out = np.empty((len(t), 2), dtype=np.float64)
        out[:, 0] = prim.point[0]
        out[:, 1] = prim.point[1]
        return out
    raise TypeError(f"not a primitive: {type(prim).__name__}")


def execute_primitive(prim: ConcretePrimitive) -> np.ndarray:
    """Trace the primitive at integer frames t = 0..time-1; returns (time, 2)."""
    return trajectory_at(prim, np.arange(prim.time, dtype=np.float64))


def execute_primitive_dense(prim: ConcretePrimitive, factor: int) -> np.ndarray:
    """Trace at t = 0, 1/factor, ..., time-1.  factor=1 equals execute_primitive.

    Samples on the integer grid are bitwise identical to execute_primitive
    because k*factor/factor == k exactly in IEEE arithmetic.
    """
    if factor < 1:
        raise ValueError("factor must be >= 1")
    n = (prim.time - 1) * factor + 1
    t = np.arange(n, dtype=np.float64) / factor
    return trajectory_at(prim, t)


# ---------------------------------------------------------------------------
# Fitting
# ---------------------------------------------------------------------------


def _as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must have shape (n, 2)")
    return pts


# Segmentation refits the same window lengths thousands of times; cache the
# time grids (read-only by convention).
_GRID_CACHE: dict[int, tuple[np.ndarray, np.ndarray, float, float]] = {}


def _time_grid(n: int) -> tuple[np.ndarray, np.ndarray, float, float]:
    cached = _GRID_CACHE.get(n)
    if cached is None:
        t = np.arange(n, dtype=np.float64)
        t_mean = (n - 1) / 2.0
        tc = t - t_mean
        cached = (t, tc, t_mean, float((tc * tc).sum()))
        _GRID_CACHE[n] = cached
    return cached


def fit_stationary(points) -> FitResult:
    """Centroid fit; error is the summed squared distance to the centroid."""
    pts = _as_points(points)
    n = len(pts)
    if n < 1:
        raise ValueError("need at least 1 point")
    px, py = pts[:, 0], pts[:, 1]
    cx = float(px.sum() / n)
    cy = float(py.sum() / n)
    dx = px - cx
    dy = py - cy
    err = float((dx * dx).sum() + (dy * dy).sum())
    return FitResult(StationaryPrimitive((cx, cy), n), err)


def fit_line(points) -> FitResult:
    """Least-squares line p(t) = start + velocity * t, fitted per coordinate."""
    pts = _as_points(points)
    n = len(pts)
    if n < 2:
        raise ValueError("need at least 2 points")
    t, tc, t_mean, denom = _time_grid(n)
    px, py = pts[:, 0], pts[:, 1]
    mx = float(px.sum() / n)
    my = float(py.sum() / n)
    vx = float((tc * (px - mx)).sum() / denom)
    vy = float((tc * (py - my)).sum() / denom)
    sx = mx - vx * t_mean
    sy = my - vy * t_mean
    rx = px - (sx + vx * t)
    ry = py - (sy + vy * t)
    err = float((rx * rx).sum() + (ry * ry).sum())
    return FitResult(LinePrimitive((sx, sy), (vx, vy), n), err)


def fit_circle_geometry(points) -> tuple[tuple[float, float], float, float]:
    """Algebraic least-squares circle (modified Kasa normal equations).

    Returns (center, radius, residual) where residual is the summed squared
    radial deviation sum((|p - center| - radius)^2).  Raises
    DegenerateGeometryError for collinear/coincident inputs (singular or
    ill-conditioned normal matrix) and for fits past MAX_RADIUS.
    """
    pts = _as_points(points)
    n = len(pts)
    if n < 3:
        raise ValueError("need at least 3 points")
    px, py = pts[:, 0], pts[:, 1]
    mx = float(px.sum() / n)
    my = float(py.sum() / n)
    u = px - mx
    v = py - my
    uu = u * u
    vv = v * v
    suu = float(uu.sum())
    svv = float(vv.sum())
    suv = float((u * v).sum())
    # Eigenvalues of the symmetric 2x2 normal matrix, closed form.
    half_tr = 0.5 * (suu + svv)
    d = math.hypot(0.5 * (suu - svv), suv)
    eig_min, eig_max = half_tr - d, half_tr + d
    if not (eig_min > 0.0 and eig_max / eig_min <= MAX_CONDITION):
        raise DegenerateGeometryError("circle fit: points are (near) collinear or coincident")
    rhs_u = 0.5 * (float((uu * u).sum()) + float((vv * u).sum()))
    rhs_v = 0.5 * (float((vv * v).sum()) + float((uu * v).sum()))
    det = suu * svv - suv * suv
    uc = (rhs_u * svv - suv * rhs_v) / det
    vc = (suu * rhs_v - suv * rhs_u) / det
    radius = math.sqrt(uc * uc + vc * vc + (suu + svv) / n)
    if not math.isfinite(radius) or radius > MAX_RADIUS:
        raise DegenerateGeometryError(f"circle fit: radius {radius:.3g} exceeds {MAX_RADIUS:.0e}")
    center = (mx + uc, my + vc)
    dist = np.hypot(px - center[0], py - center[1])
    diff = dist - radius
    residual = float((diff * diff).sum())
    return center, radius, residual


def _unwrap_angles(ang: np.ndarray) -> np.ndarray:
    # Adjacent jumps re-chosen within (-pi, pi].
    d = np.diff(ang)
    adj = math.pi - np.mod(math.pi - d, TWO_PI)
    out = np.empty_like(ang)
    out[0] = ang[0]
    out[1:] = ang[0] + np.cumsum(adj)
    return out


def fit_circle(points) -> FitResult:
    """Two-step circle fit: geometry first, then angular motion over time.

    Points are projected onto the fitted circle, their angles unwrapped to a
    continuous sequence, and angle(t) = angle_start + angle_velocity * t is
    fitted by least squares.  The reported error is measured in point space
    against the executed trajectory.
    """
    pts = _as_points(points)
    n = len(pts)
    center, radius, _ = fit_circle_geometry(pts)
    relx = pts[:, 0] - center[0]
    rely = pts[:, 1] - center[1]
    ang = np.arctan2(rely, relx)
    if np.any((relx == 0.0) & (rely == 0.0)):
        # A point exactly at the center has no projection; carry the previous
        # angle forward (angle 0 when it is the first point).
        for i in np.flatnonzero((relx == 0.0) & (rely == 0.0)):
            ang[i] = ang[i - 1] if i > 0 else 0.0
    unwrapped = _unwrap_angles(ang)
    t, tc, t_mean, denom = _time_grid(n)
    a_mean = float(unwrapped.sum() / n)
    velocity = float((tc * (unwrapped - a_mean)).sum() / denom)
    start = a_mean - velocity * t_mean
    traced = start + velocity * t
    rx = pts[:, 0] - (center[0] + radius * np.cos(traced))
    ry = pts[:, 1] - (center[1] + radius * np.sin(traced))
    err = float((rx * rx).sum() + (ry * ry).sum())
    return FitResult(CirclePrimitive(center, float(radius), velocity, start, n), err)


_SIMPLICITY = {StationaryPrimitive: 0, LinePrimitive: 1, CirclePrimitive: 2}


def fit_best(points) -> FitResult:
    """Fit every applicable primitive and keep the lowest-error one.

    Errors within a scale-aware tolerance of the minimum count as ties and
    the simplest primitive wins (stationary, then line, then circle);
    floating-point rounding would otherwise make the winner on noiseless
    data arbitrary.
    """
    pts = _as_points(points)
    n = len(pts)
    if n < 2:
        raise ValueError("need at least 2 points")
    stationary = fit_stationary(pts)
    results = [stationary, fit_line(pts)]
    if n >= 3:
        try:
            results.append(fit_circle(pts))
        except DegenerateGeometryError:
            pass
    # The stationary error is exactly the centered sum of squares, i.e. the
    # natural scale of every fit's error.
    tol = 1e-12 * (stationary.error + n)
    best_err = min(r.error for r in results)
    tied = [r for r in results if r.error <= best_err + tol]
    return min(tied, key=lambda r: _SIMPLICITY[type(r.primitive)])


# ---------------------------------------------------------------------------
# Serialization (tagged records used inside program files)
# ---------------------------------------------------------------------------


def primitive_to_obj(prim: ConcretePrimitive) -> dict:
    if isinstance(prim, CirclePrimitive):
        return {
            "type": "circle",
            "center": [prim.center[0], prim.center[1]],
            "radius": prim.radius,
            "angle_velocity": prim.angle_velocity,
            "angle_start": prim.angle_start,
            "time": prim.time,
        }
    if isinstance(prim, LinePrimitive):
        obj = {
            "type": "line",
            "start": [prim.start[0], prim.start[1]],
            "velocity": [prim.velocity[0], prim.velocity[1]],
            "time": prim.time,
        }
        vx, vy = prim.velocity
        if vx != 0.0:
            # Velocity/slope form, defined only for non-vertical motion.
            slope = vy / vx
            obj["x_vel"] = vx
            obj["x_start"] = prim.start[0]
            obj["slope"] = slope
            obj["intercept"] = prim.start[1] - slope * prim.start[0]
        else:
            obj["vertical"] = True
        return obj
    if isinstance(prim, StationaryPrimitive):
        return {
            "type": "stationary",
            "point": [prim.point[0], prim.point[1]],
            "time": prim.time,
        }
    raise TypeError(f"not a primitive: {type(prim).__name__}")


def primitive_from_obj(obj: dict) -> ConcretePrimitive:
    kind = obj.get("type")
    if kind == "circle":
        return CirclePrimitive(
            (float(obj["center"][0]), float(obj["center"][1])),
            float(obj["radius"]),
            float(obj["angle_velocity"]),
            float(obj["angle_start"]),
            int(obj["time"]),
        )
    if kind == "line":
        return LinePrimitive(
            (float(obj["start"][0]), float(obj["start"][1])),
            (float(obj["velocity"][0]), float(obj["velocity"][1])),
            int(obj["time"]),
        )
    if kind == "stationary":
        return StationaryPrimitive(
            (float(obj["point"][0]), float(obj["point"][1])),
            int(obj["time"]),
        )
    raise ValueError(f"unknown primitive type: {kind!r}")
