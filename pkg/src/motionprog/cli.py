"""Command-line front end: fit, loops, interp, predict, eval, synth, serve."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import apps
from .abstractor import (
    LoopConfig,
    default_tau,
    detect_loops,
    load_abstract,
    roll_loops,
    save_abstract,
    to_abstract,
)
from .errors import MotionProgError
from .pose import (
    CSV,
    FORMATS,
    POSE_JSON,
    generate_synthetic,
    load_pose,
    save_pose,
    synthetic_spec_from_obj,
)
from .segmenter import (
    SegmentationConfig,
    load_program,
    program_error,
    save_program,
    segment,
)


def _segmentation_config(args) -> SegmentationConfig:
    return SegmentationConfig(
        lambda_coeff=args.lambda_coeff,
        lambda_window=args.lambda_window,
        min_segment=args.min_segment,
        max_segment=args.max_segment,
    )


def _loop_config(args, width: int, height: int) -> LoopConfig:
    tau = args.tau if args.tau is not None else default_tau(width, height)
    return LoopConfig(
        max_body=args.max_body,
        init_window=args.init_window,
        quality_threshold=tau,
        min_iterations=args.min_iters,
    )


def cmd_fit(args) -> int:
    seq = load_pose(args.input, args.format)
    program = segment(seq, _segmentation_config(args))
    save_program(program, args.out)
    print(f"segments: {program.n_segments}")
    print(f"program_error: {program_error(program, seq):.6f}")
    print(f"param_count: {apps.param_count(program)} (raw {apps.param_count(seq)})")
    return 0


def cmd_loops(args) -> int:
    program = load_program(args.program)
    prims = to_abstract(program)
    cfg = _loop_config(args, program.width, program.height)
    candidates = detect_loops(prims, cfg)
    abstract = roll_loops(prims, candidates, joints=program.joints)
    save_abstract(abstract, args.out)
    print(f"loops: {len(candidates)}")
    for c in candidates:
        print(f"  body {c.body_size} x{c.iterations} "
              f"(statements [{c.start_stmt},{c.end_stmt}), quality {c.quality:.3f})")
    if args.truth:
        with open(args.truth, "r", encoding="utf-8") as fh:
            truth = apps.parse_intervals_csv(fh.read())
        detected = apps.loop_intervals(abstract, program)
        report = apps.evaluate_segments(detected, truth)
        print(apps.format_report_table(report), end="")
        if args.report:
            with open(args.report, "w", encoding="utf-8") as fh:
                json.dump(apps.report_to_obj(report), fh, indent=2)
                fh.write("\n")
    return 0


def cmd_interp(args) -> int:
    program = load_program(args.program)
    dense = apps.interpolate_poses(program, args.factor)
    save_pose(dense, args.out, args.format)
    print(f"frames: {dense.n_frames} (factor {args.factor})")
    return 0


def cmd_predict(args) -> int:
    abstract = load_abstract(args.program)
    rng = np.random.default_rng(args.seed)
    predicted = apps.extrapolate_poses(abstract, args.iters, rng,
                                       fps=args.fps, width=args.width,
                                       height=args.height)
    save_pose(predicted, args.out, args.format)
    print(f"predicted frames: {predicted.n_frames} (seed {args.seed})")
    return 0


def cmd_eval(args) -> int:
    a = load_pose(args.a, args.format)
    b = load_pose(args.b, args.format)
    if args.joints:
        joints = tuple(args.joints.split(","))
    elif all(j in a.joints and j in b.joints for j in apps.KD_DEFAULT_JOINTS):
        joints = apps.KD_DEFAULT_JOINTS
    else:
        joints = None
    kd = apps.keypoint_difference(a, b, joints)
    result = {
        "kd": kd,
        "kd_joints": list(joints) if joints else "all",
        "max_adjacent_diff_a": apps.max_adjacent_diff(a) if a.n_frames > 1 else None,
        "max_adjacent_diff_b": apps.max_adjacent_diff(b) if b.n_frames > 1 else None,
        "param_count_a": apps.param_count(a),
        "param_count_b": apps.param_count(b),
    }
    print(f"kd: {kd:.6f}")
    if result["max_adjacent_diff_a"] is not None:
        print(f"max_adjacent_diff: {result['max_adjacent_diff_a']:.6f} vs "
              f"{result['max_adjacent_diff_b']:.6f}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(result, fh, indent=2)
            fh.write("\n")
    return 0


def cmd_synth(args) -> int:
    with open(args.spec, "r", encoding="utf-8") as fh:
        spec = synthetic_spec_from_obj(json.load(fh))
    if args.seed is not None:
        from dataclasses import replace

        spec = replace(spec, seed=args.seed)
    seq = generate_synthetic(spec)
    save_pose(seq, args.out, args.format)
    print(f"frames: {seq.n_frames} joints: {seq.n_joints} seed: {spec.seed}")
    return 0


def cmd_serve(args) -> int:
    from .service import run_server

    run_server(host=args.host, port=args.port, persist=args.persist)
    return 0


def _add_segmentation_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lambda-coeff", type=float, default=0.1)
    p.add_argument("--lambda-window", type=int, default=31)
    p.add_argument("--min-segment", type=int, default=2)
    p.add_argument("--max-segment", type=int, default=None)


def _add_loop_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tau", type=float, default=None,
                   help="loop quality threshold (px^2); default scales with frame size")
    p.add_argument("--max-body", type=int, default=4)
    p.add_argument("--min-iters", type=int, default=2)
    p.add_argument("--init-window", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="motionprog",
                                     description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="segment a pose file into a concrete program")
    p.add_argument("input")
    p.add_argument("--format", choices=FORMATS, default=None)
    _add_segmentation_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("loops", help="detect for-loops and write an abstract program")
    p.add_argument("program")
    _add_loop_flags(p)
    p.add_argument("--truth", default=None, help="ground-truth intervals CSV")
    p.add_argument("--report", default=None, help="write precision/recall JSON here")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_loops)

    p = sub.add_parser("interp", help="execute a program at finer time granularity")
    p.add_argument("program")
    p.add_argument("--factor", type=int, required=True)
    p.add_argument("--format", choices=FORMATS, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_interp)

    p = sub.add_parser("predict", help="unroll the final loop for extra iterations")
    p.add_argument("program")
    p.add_argument("--iters", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fps", type=float, default=30.0)
    p.add_argument("--width", type=int, default=512)
    p.add_argument("--height", type=int, default=512)
    p.add_argument("--format", choices=FORMATS, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="keypoint-difference metrics between two pose files")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--format", choices=FORMATS, default=None)
    p.add_argument("--joints", default=None, help="comma-separated joint subset")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="generate a synthetic pose file from a spec")
    p.add_argument("spec")
    p.add_argument("--seed", type=int, default=None,
                   help="override the seed stored in the generator file")
    p.add_argument("--format", choices=FORMATS, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("serve", help="run the local HTTP editing service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8707)
    p.add_argument("--persist", default=None, help="directory for session snapshots")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (MotionProgError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
