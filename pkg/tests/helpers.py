"""Shared fixture builders and oracles for the test suite."""

from __future__ import annotations

import itertools

import numpy as np

from motionprog import (
    CirclePrimitive,
    LinePrimitive,
    PoseSequence,
    StationaryPrimitive,
    SyntheticSpec,
    adaptive_lambda,
    fit_best,
    generate_synthetic,
)


def arc_points(center, radius, angle_start, angle_velocity, n):
    t = np.arange(n, dtype=np.float64)
    ang = angle_start + angle_velocity * t
    return np.stack([center[0] + radius * np.cos(ang),
                     center[1] + radius * np.sin(ang)], axis=1)


def line_points(start, velocity, n):
    t = np.arange(n, dtype=np.float64)
    return np.stack([start[0] + velocity[0] * t,
                     start[1] + velocity[1] * t], axis=1)


def make_sequence(tracks: dict[str, np.ndarray], fps=30.0, width=512, height=512,
                  confidence=None):
    joints = tuple(tracks)
    xy = np.stack([np.asarray(tracks[j], dtype=np.float64) for j in joints], axis=1)
    conf = np.ones(xy.shape[:2]) if confidence is None else np.asarray(confidence)
    return PoseSequence(joints, xy, conf, fps, width, height)


def random_primitive(rng: np.random.Generator, kind: str, n: int):
    """A random primitive of the given kind with sensible pixel-scale parameters."""
    if kind == "stationary":
        return StationaryPrimitive((rng.uniform(50, 450), rng.uniform(50, 450)), n)
    if kind == "line":
        vel = rng.uniform(-8, 8, size=2)
        while float(np.hypot(*vel)) < 0.5:
            vel = rng.uniform(-8, 8, size=2)
        return LinePrimitive((rng.uniform(50, 450), rng.uniform(50, 450)),
                             (float(vel[0]), float(vel[1])), n)
    if kind == "circle":
        radius = rng.uniform(10, 150)
        span = rng.uniform(np.deg2rad(25), np.deg2rad(500))
        velocity = span / (n - 1) * (1 if rng.random() < 0.5 else -1)
        # keep the per-frame step safely inside the unwrap range
        velocity = float(np.clip(velocity, -0.85 * np.pi, 0.85 * np.pi))
        if abs(velocity) * (n - 1) < np.deg2rad(22):
            velocity = float(np.sign(velocity) or 1.0) * np.deg2rad(22) / (n - 1)
        return CirclePrimitive((rng.uniform(100, 400), rng.uniform(100, 400)),
                               float(radius), velocity, float(rng.uniform(0, 2 * np.pi)), n)
    raise ValueError(kind)


def three_part_spec(seed: int, sigma: float, lengths=(25, 20, 25)) -> SyntheticSpec:
    """One joint: line / arc / line, continuous, large motion vs. noise.

    Motion of several px/frame keeps the adaptive regularizer well above
    noise-level fit savings even where the covariance window is truncated.
    """
    n1, n2, n3 = lengths
    line1 = LinePrimitive((60.0, 300.0), (6.0, 2.0), n1)
    end1 = (60.0 + 6.0 * (n1 - 1), 300.0 + 2.0 * (n1 - 1))
    radius = 100.0
    center = (end1[0], end1[1] - radius)
    arc = CirclePrimitive(center, radius, np.deg2rad(10.0), np.pi / 2, n2)
    a_end = np.pi / 2 + np.deg2rad(10.0) * (n2 - 1)
    end2 = (center[0] + radius * np.cos(a_end), center[1] + radius * np.sin(a_end))
    line2 = LinePrimitive((float(end2[0]), float(end2[1])), (-5.0, 4.0), n3)
    return SyntheticSpec(tracks={"j0": (line1, arc, line2)},
                         noise_sigma=sigma, seed=seed)


def jumping_jack_spec(seed: int, sigma: float, reps: int = 10,
                      frames_per_prim: int = 10) -> SyntheticSpec:
    """Repetitions of an up-line then a down-line, one joint, continuous.

    Motion is large relative to detector noise so the adaptive regularizer
    dominates noise-level fit savings.
    """
    speed = 12.0
    drop = speed * (frames_per_prim - 1)
    up = LinePrimitive((200.0, 400.0), (0.0, -speed), frames_per_prim)
    down = LinePrimitive((200.0, 400.0 - drop), (0.0, speed), frames_per_prim)
    prims = (up, down) * reps
    return SyntheticSpec(tracks={"j0": prims}, noise_sigma=sigma, seed=seed)


def noisy_fixture(seed: int, sigma: float):
    return generate_synthetic(three_part_spec(seed, sigma))


def enumerate_best_objective(seq, cfg):
    """Exhaustive minimum over all boundary subsets honoring min/max segment.

    Costs are built from the public fit/lambda operations, summed left to
    right per segmentation, exactly like the dynamic program accumulates.
    """
    t_total = seq.n_frames
    lam = [adaptive_lambda(seq, f, cfg) for f in range(t_total)]
    max_seg = cfg.max_segment if cfg.max_segment is not None else t_total

    def seg_cost(k, n):
        total = 0.0
        for j in range(seq.n_joints):
            total += fit_best(seq.xy[k:n, j]).error
        return total + lam[n - 1]

    cost = {}
    for k in range(t_total):
        for n in range(k + cfg.min_segment, min(k + max_seg, t_total) + 1):
            cost[(k, n)] = seg_cost(k, n)

    best = np.inf
    best_bounds = None
    interior = range(1, t_total)
    for r in range(0, t_total):
        for combo in itertools.combinations(interior, r):
            bounds = (0, *combo, t_total)
            spans = [(bounds[i], bounds[i + 1]) for i in range(len(bounds) - 1)]
            if any((n - k) < cfg.min_segment or (n - k) > max_seg for k, n in spans):
                continue
            total = 0.0
            for k, n in spans:
                total = total + cost[(k, n)]
            if total < best:
                best = total
                best_bounds = bounds
    return best, best_bounds
