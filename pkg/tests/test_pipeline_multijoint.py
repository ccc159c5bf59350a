"""End-to-end pipeline over a full 17-joint skeleton."""

import numpy as np

from motionprog import (
    COCO_JOINTS,
    CirclePrimitive,
    LinePrimitive,
    LoopConfig,
    SegmentationConfig,
    StationaryPrimitive,
    SyntheticSpec,
    detect_loops,
    execute_program,
    fill_gaps,
    generate_synthetic,
    interpolate_poses,
    keypoint_difference,
    param_count,
    program_error,
    roll_loops,
    segment,
    to_abstract,
)


def skeleton_spec(sigma: float, seed: int = 0) -> SyntheticSpec:
    """Three segments x 17 joints: stationary head/torso, swinging limbs."""
    rng = np.random.default_rng(99)
    lengths = (20, 18, 20)
    tracks = {}
    for j, joint in enumerate(COCO_JOINTS):
        base = np.array([150.0 + 14.0 * j, 120.0 + 9.0 * j])
        if "wrist" in joint or "elbow" in joint or "ankle" in joint:
            # swinging joints: line out, arc, line back
            v = rng.uniform(3.0, 6.0, 2)
            line1 = LinePrimitive(tuple(base), (float(v[0]), float(v[1])), lengths[0])
            end1 = base + v * (lengths[0] - 1)
            radius = float(rng.uniform(60.0, 100.0))
            center = (float(end1[0]), float(end1[1] - radius))
            arc = CirclePrimitive(center, radius, float(np.deg2rad(9.0)),
                                  np.pi / 2, lengths[1])
            a_end = np.pi / 2 + np.deg2rad(9.0) * (lengths[1] - 1)
            end2 = (center[0] + radius * np.cos(a_end),
                    center[1] + radius * np.sin(a_end))
            line2 = LinePrimitive((float(end2[0]), float(end2[1])),
                                  (-float(v[0]), float(v[1])), lengths[2])
            tracks[joint] = (line1, arc, line2)
        else:
            # torso/head joints barely move
            tracks[joint] = (
                StationaryPrimitive(tuple(base), lengths[0]),
                LinePrimitive(tuple(base), (0.2, 0.1), lengths[1]),
                StationaryPrimitive((float(base[0] + 0.2 * (lengths[1] - 1)),
                                     float(base[1] + 0.1 * (lengths[1] - 1))),
                                    lengths[2]),
            )
    return SyntheticSpec(tracks=tracks, noise_sigma=sigma, seed=seed)


# The regularizer is the MEAN covariance trace over joints while the fit
# objective SUMS over joints, so noisy many-joint rigs want lambda_coeff
# scaled up roughly with the joint count.
SKELETON_CFG = SegmentationConfig(lambda_coeff=2.0)


def test_full_skeleton_segmentation_and_metrics():
    seq = generate_synthetic(skeleton_spec(sigma=1.5))
    assert seq.n_joints == 17
    program = segment(seq, SKELETON_CFG)
    assert program.boundaries == (0, 20, 38, 58)
    assert program.joints == COCO_JOINTS

    # reconstruction approximates a noisy input with per-point error ~ sigma
    err = program_error(program, seq)
    per_point = np.sqrt(err / (seq.n_frames * seq.n_joints))
    assert per_point < 3.0

    kd = keypoint_difference(execute_program(program), seq)
    assert kd < 3.0
    assert param_count(program) < 0.25 * param_count(seq)

    dense = interpolate_poses(program, 4)
    assert dense.n_frames == (seq.n_frames - 1) * 4 + 1
    assert np.array_equal(dense.xy[::4], execute_program(program).xy)


def test_full_skeleton_joint_boundaries_survive_gap_fill():
    seq = generate_synthetic(skeleton_spec(sigma=1.0, seed=3))
    conf = seq.confidence.copy()
    rng = np.random.default_rng(5)
    drop = rng.random(conf.shape) < 0.05  # occasional occlusions
    drop[0] = False  # keep the first frame confident everywhere
    conf[drop] = 0.1
    from motionprog import PoseSequence

    noisy = PoseSequence(seq.joints, seq.xy, conf, seq.fps, seq.width, seq.height)
    repaired = fill_gaps(noisy, 0.5)
    program = segment(repaired, SKELETON_CFG)
    assert len(program.boundaries) == 4
    assert abs(program.boundaries[1] - 20) <= 2
    assert abs(program.boundaries[2] - 38) <= 2


def test_full_skeleton_no_spurious_loops():
    seq = generate_synthetic(skeleton_spec(sigma=1.0, seed=1))
    program = segment(seq, SKELETON_CFG)
    prims = to_abstract(program)
    cands = detect_loops(prims, LoopConfig())
    abstract = roll_loops(prims, cands, joints=program.joints)
    # three distinct movement phases: nothing repeats
    assert cands == []
    assert len(abstract.statements) == program.n_segments
