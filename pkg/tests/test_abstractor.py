import numpy as np
import pytest

from motionprog import (
    AbstractProgram,
    CirclePrimitive,
    ConcreteProgram,
    DetPrim,
    ForLoop,
    LinePrimitive,
    LoopConfig,
    NoLoopError,
    NumericError,
    SegmentationConfig,
    StationaryPrimitive,
    StructuralError,
    abstract_from_obj,
    abstract_to_obj,
    concretize,
    default_tau,
    detect_loops,
    execute_abstract,
    execute_primitive,
    execute_program,
    fit_prob_prim,
    generate_synthetic,
    group_window,
    load_abstract,
    roll_loops,
    sample_det_prim,
    save_abstract,
    segment,
    serialize_abstract,
    to_abstract,
)
from helpers import jumping_jack_spec


def det(sx, sy, mx, my, ex, ey, time=5):
    return DetPrim(np.array([[sx, sy]]), np.array([[mx, my]]),
                   np.array([[ex, ey]]), time)


def single_prim_program(prim):
    return ConcreteProgram((0, prim.time), {"a": (prim,)}, 30.0, 512, 512)


# --- to_abstract --------------------------------------------------------------

def test_to_abstract_stationary():
    d = to_abstract(single_prim_program(StationaryPrimitive((1.0, 1.0), 5)))[0]
    assert np.array_equal(d.start, [[1.0, 1.0]])
    assert np.array_equal(d.middle, [[1.0, 1.0]])
    assert np.array_equal(d.end, [[1.0, 1.0]])
    assert d.time == 5


def test_to_abstract_line_midpoint():
    d = to_abstract(single_prim_program(LinePrimitive((0.0, 0.0), (1.0, 0.0), 5)))[0]
    assert np.array_equal(d.start, [[0.0, 0.0]])
    assert np.array_equal(d.middle, [[2.0, 0.0]])
    assert np.array_equal(d.end, [[4.0, 0.0]])


def test_to_abstract_arc_midpoint():
    prim = CirclePrimitive((0.0, 0.0), 1.0, (np.pi / 2) / 4, 0.0, 5)
    d = to_abstract(single_prim_program(prim))[0]
    assert np.allclose(d.middle, [[np.cos(np.pi / 4), np.sin(np.pi / 4)]], atol=1e-12)


# --- grouping / gaussians ------------------------------------------------------

def test_group_window_alternating():
    w = [det(i, 0, i, 0, i, 0) for i in range(6)]
    s0, s1 = group_window(w, 2)
    assert [d.start[0, 0] for d in s0] == [0, 2, 4]
    assert [d.start[0, 0] for d in s1] == [1, 3, 5]


def test_group_window_body_one():
    w = [det(i, 0, i, 0, i, 0) for i in range(4)]
    groups = group_window(w, 1)
    assert len(groups) == 1 and len(groups[0]) == 4


def test_group_window_uneven():
    w = [det(i, 0, i, 0, i, 0) for i in range(5)]
    s0, s1 = group_window(w, 2)
    assert len(s0) == 3 and len(s1) == 2


def test_group_window_partition_property():
    rng = np.random.default_rng(0)
    for _ in range(10):
        n = int(rng.integers(1, 12))
        l = int(rng.integers(1, n + 1))
        w = [det(i, 0, i, 0, i, 0) for i in range(n)]
        groups = group_window(w, l)
        flat = [d for g in groups for d in g]
        assert len(flat) == n
        assert {id(d) for d in flat} == {id(d) for d in w}


def test_fit_prob_prim_singleton():
    d = det(1.0, 2.0, 3.0, 4.0, 5.0, 6.0, time=7)
    p = fit_prob_prim([d])
    assert np.array_equal(p.mean, d.vector())
    assert np.array_equal(p.covariance, np.zeros((6, 6)))
    assert p.durations == {7: 1}


def test_fit_prob_prim_identical_pair():
    d = det(1.0, 2.0, 3.0, 4.0, 5.0, 6.0, time=4)
    p = fit_prob_prim([d, det(1.0, 2.0, 3.0, 4.0, 5.0, 6.0, time=4)])
    assert np.array_equal(p.covariance, np.zeros((6, 6)))
    assert p.durations == {4: 2}


def test_fit_prob_prim_unit_variance():
    a = det(0.0, 0.0, 1.0, 1.0, 2.0, 2.0)
    b = det(2.0, 0.0, 1.0, 1.0, 2.0, 2.0)
    p = fit_prob_prim([a, b])
    assert p.covariance[0, 0] == pytest.approx(1.0)  # start-x variance of {0, 2}
    assert p.mean[0] == pytest.approx(1.0)


# --- loop detection ------------------------------------------------------------

def test_detect_identical_prims():
    prims = [det(1.0, 1.0, 2.0, 2.0, 3.0, 3.0) for _ in range(6)]
    cands = detect_loops(prims, LoopConfig())
    assert len(cands) == 1
    c = cands[0]
    assert c.body_size == 1 and c.iterations == 6 and c.quality == 0.0


def test_detect_alternating_pair():
    a = det(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    b = det(100.0, 100.0, 100.0, 100.0, 100.0, 100.0)
    prims = [a, b, a, b, a, b]
    cands = detect_loops(prims, LoopConfig(quality_threshold=50.0))
    assert len(cands) == 1
    c = cands[0]
    assert c.body_size == 2 and c.iterations == 3
    assert c.start_stmt == 0 and c.end_stmt == 6


def test_detect_no_repetition():
    prims = [det(100.0 * i, 0.0, 100.0 * i, 0.0, 100.0 * i, 0.0) for i in range(6)]
    assert detect_loops(prims, LoopConfig(quality_threshold=10.0)) == []


def test_detect_candidates_respect_config():
    rng = np.random.default_rng(14)
    cfg = LoopConfig(quality_threshold=200.0, max_body=3, min_iterations=2)
    for _ in range(20):
        n = int(rng.integers(1, 20))
        prims = [det(*rng.uniform(0, 300, 6)) for _ in range(n)]
        for c in detect_loops(prims, cfg):
            assert c.iterations >= cfg.min_iterations
            assert c.quality <= cfg.quality_threshold
            assert 1 <= c.body_size <= cfg.max_body


def test_quality_translation_invariant():
    rng = np.random.default_rng(15)
    prims = [det(*rng.uniform(0, 50, 6)) for _ in range(8)]
    shifted = [DetPrim(d.start + 1000.0, d.middle + 1000.0, d.end + 1000.0, d.time)
               for d in prims]
    cfg = LoopConfig(quality_threshold=1e9)
    for a, b in zip(detect_loops(prims, cfg), detect_loops(shifted, cfg)):
        assert a.quality == pytest.approx(b.quality, rel=1e-9)
        assert (a.start_stmt, a.end_stmt, a.body_size) == (b.start_stmt, b.end_stmt, b.body_size)


def test_detect_noisy_jumping_jacks_pipeline():
    seq = generate_synthetic(jumping_jack_spec(seed=4, sigma=2.0))
    program = segment(seq, SegmentationConfig(max_segment=30))
    prims = to_abstract(program)
    cands = detect_loops(prims, LoopConfig(quality_threshold=600.0))
    assert len(cands) == 1
    c = cands[0]
    assert c.body_size == 2
    assert abs(c.iterations - 10) <= 1


def test_default_tau_scaling():
    assert default_tau(512, 512) == pytest.approx(150.0)
    assert default_tau(1024, 1024) == pytest.approx(600.0)


# --- roll_loops ----------------------------------------------------------------

def test_roll_no_candidates_identity():
    prims = [det(float(i), 0, float(i), 0, float(i), 0) for i in range(4)]
    program = roll_loops(prims, [], joints=("a",))
    assert program.statements == tuple(prims)


def test_roll_single_loop():
    a = det(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    b = det(100.0, 0.0, 100.0, 0.0, 100.0, 0.0)
    prims = [a, b, a, b, a, b]
    cands = detect_loops(prims, LoopConfig(quality_threshold=50.0))
    program = roll_loops(prims, cands, joints=("a",))
    assert len(program.statements) == 1
    loop = program.statements[0]
    assert isinstance(loop, ForLoop)
    assert loop.iterations == 3 and len(loop.body) == 2


def test_roll_splices_around_loop():
    prims = [det(float(i), 0, float(i), 0, float(i), 0, time=3) for i in range(10)]
    body = (fit_prob_prim([prims[2], prims[4]]), fit_prob_prim([prims[3], prims[5]]))
    from motionprog import LoopCandidate

    cand = LoopCandidate(2, 8, 2, 0.0, body)
    program = roll_loops(prims, [cand], joints=("a",))
    kinds = [type(s).__name__ for s in program.statements]
    assert kinds == ["DetPrim", "DetPrim", "ForLoop", "DetPrim", "DetPrim"]
    assert program.statements[2].iterations == 3


def test_roll_conserves_primitive_count():
    rng = np.random.default_rng(16)
    for _ in range(10):
        n = int(rng.integers(4, 25))
        base = det(*rng.uniform(0, 20, 6))
        prims = [DetPrim(base.start + rng.normal(0, 0.5, (1, 2)),
                         base.middle + rng.normal(0, 0.5, (1, 2)),
                         base.end + rng.normal(0, 0.5, (1, 2)), 5)
                 for _ in range(n)]
        cands = detect_loops(prims, LoopConfig(quality_threshold=100.0))
        program = roll_loops(prims, cands, joints=("a",))
        total = 0
        for s in program.statements:
            total += 1 if isinstance(s, DetPrim) else s.iterations * len(s.body)
        assert total == n


def test_roll_rejects_overlap():
    from motionprog import LoopCandidate

    prims = [det(0.0, 0.0, 0.0, 0.0, 0.0, 0.0) for _ in range(8)]
    zero = fit_prob_prim([prims[0], prims[1]])
    c1 = LoopCandidate(0, 4, 1, 0.0, (zero,))
    c2 = LoopCandidate(3, 7, 1, 0.0, (zero,))
    with pytest.raises(StructuralError):
        roll_loops(prims, [c1, c2], joints=("a",))


# --- sampling ------------------------------------------------------------------

def test_sample_zero_covariance_returns_mean():
    p = fit_prob_prim([det(1.0, 2.0, 3.0, 4.0, 5.0, 6.0, time=9)])
    d = sample_det_prim(p, np.random.default_rng(0))
    assert np.array_equal(d.vector(), p.mean)
    assert d.time == 9


def test_sample_deterministic():
    rng = np.random.default_rng(20)
    prims = [det(*rng.uniform(0, 10, 6), time=int(rng.integers(3, 8))) for _ in range(6)]
    p = fit_prob_prim(prims)
    a = sample_det_prim(p, np.random.default_rng(77))
    b = sample_det_prim(p, np.random.default_rng(77))
    assert np.array_equal(a.vector(), b.vector())
    assert a.time == b.time


def test_sample_law_of_large_numbers():
    a = det(0.0, 0.0, 1.0, 1.0, 2.0, 2.0)
    b = det(4.0, 0.0, 1.0, 1.0, 2.0, 2.0)
    p = fit_prob_prim([a, b])  # start-x: mean 2, variance 4
    rng = np.random.default_rng(123)
    draws = np.array([sample_det_prim(p, rng).vector()[0] for _ in range(10_000)])
    assert draws.mean() == pytest.approx(2.0, abs=0.1)
    assert draws.var() == pytest.approx(4.0, rel=0.05)


def test_sample_rejects_non_psd():
    from collections import Counter

    from motionprog import ProbPrim

    cov = -np.eye(6)
    p = ProbPrim(np.zeros(6), cov, Counter({3: 1}))
    with pytest.raises(NumericError):
        sample_det_prim(p, np.random.default_rng(0))


# --- concretize ----------------------------------------------------------------

def test_concretize_stationary():
    d = det(4.0, 4.0, 4.0, 4.0, 4.0, 4.0)
    (prim,) = concretize(d)
    assert isinstance(prim, StationaryPrimitive)
    assert prim.point == (4.0, 4.0)


def test_concretize_collinear_line():
    d = det(0.0, 0.0, 1.0, 0.0, 2.0, 0.0, time=3)
    (prim,) = concretize(d)
    assert isinstance(prim, LinePrimitive)
    assert prim.velocity == pytest.approx((1.0, 0.0))


def test_concretize_three_point_circle():
    d = det(1.0, 0.0, 0.0, 1.0, -1.0, 0.0, time=3)
    (prim,) = concretize(d)
    assert isinstance(prim, CirclePrimitive)
    assert np.allclose(prim.center, (0.0, 0.0), atol=1e-12)
    assert prim.radius == pytest.approx(1.0)
    assert prim.angle_velocity == pytest.approx(np.pi / 2)


def test_concretize_clockwise_circle():
    d = det(1.0, 0.0, 0.0, -1.0, -1.0, 0.0, time=3)
    (prim,) = concretize(d)
    assert prim.angle_velocity == pytest.approx(-np.pi / 2)


def test_concretize_time_one_is_stationary():
    d = det(0.0, 0.0, 3.0, 0.0, 6.0, 0.0, time=1)
    (prim,) = concretize(d)
    assert isinstance(prim, StationaryPrimitive)


def test_concretize_round_trip_matches_trajectory():
    from helpers import random_primitive

    rng = np.random.default_rng(29)
    for kind in ("stationary", "line", "circle"):
        for _ in range(8):
            prim = random_primitive(rng, kind, int(rng.integers(5, 30)))
            if isinstance(prim, CirclePrimitive):
                # start/middle/end cannot pin down more than a full turn
                span = abs(prim.angle_velocity) * (prim.time - 1)
                if span >= 1.9 * np.pi:
                    continue
            program = single_prim_program(prim)
            (rebuilt,) = concretize(to_abstract(program)[0])
            a = execute_primitive(prim)
            b = execute_primitive(rebuilt)
            assert np.abs(a - b).max() < 1e-6


# --- execute_abstract ------------------------------------------------------------

def test_execute_abstract_single_det():
    d = det(0.0, 0.0, 2.0, 0.0, 4.0, 0.0, time=5)
    program = AbstractProgram(("a",), (d,))
    concrete = execute_abstract(program, np.random.default_rng(0))
    assert concrete.boundaries == (0, 5)
    assert np.array_equal(execute_program(concrete).xy[:, 0],
                          execute_primitive(concretize(d)[0]))


def test_execute_abstract_zero_covariance_loop_repeats():
    d = det(0.0, 0.0, 4.0, 0.0, 8.0, 0.0, time=5)
    body = (fit_prob_prim([d]),)
    program = AbstractProgram(("a",), (ForLoop(3, body),))
    concrete = execute_abstract(program, np.random.default_rng(1))
    xy = execute_program(concrete).xy[:, 0]
    assert concrete.boundaries == (0, 5, 10, 15)
    assert np.array_equal(xy[:5], xy[5:10])
    assert np.array_equal(xy[5:10], xy[10:15])


def test_round_trip_pipeline_noiseless():
    seq = generate_synthetic(jumping_jack_spec(seed=0, sigma=0.0, reps=4))
    program = segment(seq, SegmentationConfig(max_segment=30))
    prims = to_abstract(program)
    cands = detect_loops(prims, LoopConfig(quality_threshold=1.0))
    abstract = roll_loops(prims, cands, joints=program.joints)
    concrete = execute_abstract(abstract, np.random.default_rng(0),
                                fps=seq.fps, width=seq.width, height=seq.height)
    out = execute_program(concrete)
    assert out.n_frames == seq.n_frames
    assert np.abs(out.xy - seq.xy).max() < 1e-6


# --- serialization ----------------------------------------------------------------

def test_abstract_file_round_trip(tmp_path):
    a = det(0.0, 0.0, 1.0, 1.0, 2.0, 2.0, time=4)
    b = det(9.0, 0.0, 1.0, 1.0, 2.0, 2.0, time=6)
    program = AbstractProgram(("a",), (a, ForLoop(2, (fit_prob_prim([a, b]),))))
    text = serialize_abstract(program)
    again = abstract_from_obj(abstract_to_obj(program))
    assert serialize_abstract(again) == text

    path = tmp_path / "abstract.json"
    save_abstract(program, str(path))
    loaded = load_abstract(str(path))
    assert serialize_abstract(loaded) == text


def test_extrapolate_requires_loop():
    from motionprog import extrapolate_poses

    d = det(0.0, 0.0, 1.0, 0.0, 2.0, 0.0, time=3)
    program = AbstractProgram(("a",), (d,))
    with pytest.raises(NoLoopError):
        extrapolate_poses(program, 2, np.random.default_rng(0))
