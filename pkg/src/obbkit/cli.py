"""Command-line front end.

Exit status: 0 on success, 1 when an oracle or invariant check fails,
2 on usage or input errors.
"""
from __future__ import annotations

import argparse
import contextlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import dataio, oracles
from .assign import AssignmentResult, Label, cdla_assign, sample
from .codec import DeltaOffsets, canonicalize, decode, encode
from .evaluation import APMode, evaluate, mean_ap
from .geometry import OBB, iou_matrix, rotated_iou
from .head import conformer_features, conformer_forward, init_head_params, load_head_params, mhsa, save_head_params
from .loss import loss_sweep

SUBCOMMANDS = ("iou", "encode", "decode", "loss-sweep", "assign", "sample", "eval", "head-demo", "oracle-check")


class UsageError(Exception):
    pass


def _floats(text: str, n: int, what: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"{what}: expected {n} comma-separated numbers, got {text!r}") from None
    if len(vals) != n:
        raise UsageError(f"{what}: expected {n} numbers, got {len(vals)}")
    return vals


def _angle(value: float, degrees: bool) -> float:
    return math.radians(value) if degrees else value


def _box(text: str, degrees: bool, what: str) -> OBB:
    cx, cy, w, h, th = _floats(text, 5, what)
    try:
        return OBB.from_any(cx, cy, w, h, _angle(th, degrees))
    except ValueError as e:
        raise UsageError(f"{what}: {e}") from None


@contextlib.contextmanager
def _output(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w") as f:
            yield f


def _emit_json(doc, path) -> None:
    with _output(path) as f:
        f.write(json.dumps(doc, indent=1) + "\n")


def cmd_iou(args) -> int:
    a = _box(args.a, args.degrees, "--a")
    b = _box(args.b, args.degrees, "--b")
    print(f"{rotated_iou(a, b):.6f}")
    return 0


def cmd_encode(args) -> int:
    d = encode(_box(args.gt, args.degrees, "--gt"), _box(args.anchor, args.degrees, "--anchor"))
    _emit_json(d._asdict(), args.out)
    return 0


def cmd_decode(args) -> int:
    d = DeltaOffsets(*_floats(args.delta, 6, "--delta"))
    b6 = decode(d, _box(args.anchor, args.degrees, "--anchor"))
    try:
        obb = list(canonicalize(b6))
    except ValueError as e:
        raise UsageError(str(e)) from None
    _emit_json({"obb6": b6._asdict(), "obb": obb}, args.out)
    return 0


def cmd_loss_sweep(args) -> int:
    if args.grid < 16:
        raise UsageError("--grid must be >= 16")
    if args.ar < 1:
        raise UsageError("--ar must be >= 1")
    rows = loss_sweep(_angle(args.theta_g, args.degrees), args.ar, args.grid)
    if args.out is None:
        print(",".join(dataio.SWEEP_HEADER))
        for row in rows:
            print(",".join(repr(float(v)) for v in row))
    else:
        dataio.write_curve_csv(rows, args.out)
    return 0


def _check_budget(n: int) -> None:
    if n < 8 or n % 8:
        raise UsageError("--budget must be a positive multiple of 8")


def cmd_assign(args) -> int:
    _check_budget(args.budget)
    scene = dataio.read_scene(args.scene)
    if scene.gts:
        ious = iou_matrix(scene.proposals, scene.gts)
    else:
        ious = np.zeros((len(scene.proposals), 0))
    a = cdla_assign(ious, scene.scores, scene.gt_classes if scene.scores is not None else None)
    s = sample(a, args.budget, args.seed)
    _emit_json(dataio.assignment_to_json(a, s), args.out)
    return 0


def cmd_sample(args) -> int:
    _check_budget(args.budget)
    doc = json.loads(Path(args.assignment).read_text())
    tags = {lab.tag: lab for lab in Label}
    try:
        labels = np.array([tags[t] for t in doc["labels"]], dtype=np.int8)
    except KeyError as e:
        raise UsageError(f"unknown label {e}") from None
    n = len(labels)
    a = AssignmentResult(
        labels,
        np.asarray(doc.get("matched_iou", np.zeros(n)), dtype=float),
        np.asarray(doc.get("matched_gt", np.full(n, -1)), dtype=int),
    )
    s = sample(a, args.budget, args.seed)
    _emit_json(dataio.assignment_to_json(a, s)["sample"], args.out)
    return 0


def cmd_eval(args) -> int:
    names = tuple(args.classes.split(",")) if args.classes else dataio.DOTA_V1_CLASSES
    gts = dataio.load_dota_dir(args.gts, names)
    dets = dataio.read_detections(args.dets)
    present = sorted({g.class_id for g in gts})
    if not present:
        raise UsageError(f"no ground truth found under {args.gts}")
    aps = evaluate(dets, gts, args.iou, APMode(args.mode), present)
    lines = [f"{names[c]}: {ap:.6f}" for c, ap in aps.items()]
    lines.append(f"mAP: {mean_ap(aps):.6f}")
    with _output(args.out) as f:
        f.write("\n".join(lines) + "\n")
    return 0


def cmd_head_demo(args) -> int:
    if args.c % 4 or (args.c // 2) % args.heads:
        raise UsageError("--c must be divisible by 4 and C/2 by --heads")
    params = load_head_params(args.params) if args.params else init_head_params(
        args.c, args.heads, args.anchors, args.seed
    )
    if args.save_params:
        save_head_params(params, args.save_params)
    rng = np.random.default_rng(args.seed + 1)
    x = rng.normal(size=(1, params.channels, args.h, args.w))
    fused = conformer_features(x, params)
    cls, reg = conformer_forward(x, params)
    _, attn = mhsa(x, params.mhsa, return_attention=True)
    q = params.channels // 4
    checks = {
        "channel_budget": q + q + 2 * q == params.channels == fused.shape[1],
        "attention_rows_sum_to_one": bool(np.abs(attn.sum(-1) - 1).max() <= 1e-9),
        "deterministic": all(np.array_equal(u, v) for u, v in zip((cls, reg), conformer_forward(x, params))),
        "reg_is_six_per_anchor": reg.shape[1] == 6 * cls.shape[1],
    }
    lines = [
        f"input: {tuple(x.shape)}",
        f"fused: {tuple(fused.shape)}",
        f"cls: {tuple(cls.shape)}",
        f"reg: {tuple(reg.shape)}",
    ]
    lines += [f"{k}: {'ok' if v else 'FAIL'}" for k, v in checks.items()]
    with _output(args.out) as f:
        f.write("\n".join(lines) + "\n")
    return 0 if all(checks.values()) else 1


def cmd_oracle_check(args, iou_fn=None) -> int:
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    results = oracles.run_all(args.trials, args.seed, iou_fn=iou_fn)
    failed = sum(r.failed for r in results)
    lines = [f"oracle-check trials={args.trials} seed={args.seed}"]
    lines += [r.line() for r in results]
    lines.append(f"total failures: {failed}")
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if args.out:
        Path(args.out).write_text(text)
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument("--out", default=None, help="output path (default stdout)")
    common.add_argument("--degrees", action="store_true", help="read angles in degrees instead of radians")

    parser = argparse.ArgumentParser(prog="obbkit", description="Oriented bounding box toolkit.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="{" + ",".join(SUBCOMMANDS) + "}")

    p = sub.add_parser("iou", parents=[common], help="rotated IoU of two boxes")
    p.add_argument("--a", required=True, help="cx,cy,w,h,theta")
    p.add_argument("--b", required=True, help="cx,cy,w,h,theta")
    p.set_defaults(fn=cmd_iou)

    p = sub.add_parser("encode", parents=[common], help="regression offsets of a box against an anchor")
    p.add_argument("--gt", required=True)
    p.add_argument("--anchor", required=True)
    p.set_defaults(fn=cmd_encode)

    p = sub.add_parser("decode", parents=[common], help="decode offsets against an anchor")
    p.add_argument("--delta", required=True, help="t_x,t_y,t_w,t_h,t_sin,t_cos")
    p.add_argument("--anchor", required=True)
    p.set_defaults(fn=cmd_decode)

    p = sub.add_parser("loss-sweep", parents=[common], help="angle loss and 1-IoU over predicted angle")
    p.add_argument("--theta-g", type=float, required=True)
    p.add_argument("--ar", type=float, required=True)
    p.add_argument("--grid", type=int, default=1000)
    p.set_defaults(fn=cmd_loss_sweep)

    p = sub.add_parser("assign", parents=[common], help="label and sample proposals of a scene")
    p.add_argument("--scene", required=True)
    p.add_argument("--budget", type=int, default=512)
    p.set_defaults(fn=cmd_assign)

    p = sub.add_parser("sample", parents=[common], help="resample an assignment JSON")
    p.add_argument("--assignment", required=True)
    p.add_argument("--budget", type=int, default=512)
    p.set_defaults(fn=cmd_sample)

    p = sub.add_parser("eval", parents=[common], help="per-class AP and mAP")
    p.add_argument("--dets", required=True, help="detections, JSON lines")
    p.add_argument("--gts", required=True, help="directory of DOTA annotation files")
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument("--mode", choices=[m.value for m in APMode], default="voc12")
    p.add_argument("--classes", default=None, help="comma-separated class names (default DOTA-v1.0)")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("head-demo", parents=[common], help="forward pass of a seeded conformer head")
    p.add_argument("--c", type=int, default=64)
    p.add_argument("--h", type=int, default=16)
    p.add_argument("--w", type=int, default=16)
    p.add_argument("--heads", type=int, default=4)
    p.add_argument("--anchors", type=int, default=1)
    p.add_argument("--params", default=None, help="load parameters from a JSON bundle")
    p.add_argument("--save-params", default=None, help="write the parameters to a JSON bundle")
    p.set_defaults(fn=cmd_head_demo)

    p = sub.add_parser("oracle-check", parents=[common], help="run randomized oracle suites")
    p.add_argument("--trials", type=int, default=200)
    p.set_defaults(fn=cmd_oracle_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.fn(args)
    except (UsageError, ValueError, OSError) as e:
        print(f"obbkit {args.command}: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
