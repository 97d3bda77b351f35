"""Command-line entry point.

Exit codes: 0 success, 1 verification failure, 2 usage/config error,
3 I/O or format error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .backbone import BackboneSpec, forward_dense, init_backbone, process_stream
from .errors import ConfigError, StreamConsistencyError, TTRError
from .io import (
    RunConfig,
    load_config,
    load_weights,
    read_frame_sequence,
    read_label_sequence,
    synth_sequence,
    write_label_map,
    write_stats,
)
from .io.config import parse_geometry, parse_stages, parse_taus
from .io.netpbm import label_name
from .io.synth import KINDS
from .metrics import ConfusionMatrix, dense_macs, miou, pixel_accuracy, sweep_tradeoff

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


class UsageError(ConfigError):
    pass


def _add_common(p: argparse.ArgumentParser, *names: str) -> None:
    p.add_argument("--config", help="key = value run configuration file")
    spec = {
        "frames": dict(help="directory of NNNNNN.ppm frames"),
        "weights": dict(help="TTRW weight file"),
        "seed": dict(type=int, help="seed for uniform(-0.1, 0.1) weights or fixtures"),
        "tau": dict(type=float, help="cosine-similarity threshold (default 0.99)"),
        "taus": dict(type=parse_taus, help="comma-separated thresholds for a sweep"),
        "block-size": dict(type=int, help="block side in pixels (default 32)"),
        "classes": dict(type=int, help="number of output classes (default 8)"),
        "stem-width": dict(type=int, help="stem output channels (default 16)"),
        "stages": dict(type=parse_stages, help="stage widths, e.g. 32x2,64x2"),
        "out": dict(help="output directory"),
        "stats": dict(help="CSV statistics path"),
        "agreement-floor": dict(type=float, help="minimum label agreement in percent"),
        "kind": dict(choices=KINDS, help="synthetic sequence kind"),
        "nframes": dict(type=int, help="number of synthetic frames"),
        "geometry": dict(type=parse_geometry, help="frame size WxH"),
    }
    for name in names:
        p.add_argument(f"--{name}", default=None, **spec[name])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ttrseg", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    run_flags = ("frames", "weights", "seed", "tau", "block-size", "classes", "stem-width", "stages")

    p = sub.add_parser("segment", help="segment a frame sequence with temporal reuse")
    _add_common(p, *run_flags, "out", "stats")
    p.set_defaults(handler=cmd_segment)

    p = sub.add_parser("compare-dense", help="check the sparse pass against the dense pass")
    _add_common(p, *run_flags, "stats", "agreement-floor")
    p.set_defaults(handler=cmd_compare_dense)

    p = sub.add_parser("sweep", help="accuracy/reuse trade-off over several thresholds")
    _add_common(
        p, "frames", "weights", "seed", "taus", "block-size", "classes", "stem-width", "stages", "stats"
    )
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("synth", help="write a synthetic fixture sequence")
    _add_common(p, "kind", "nframes", "geometry", "seed", "block-size", "out")
    p.set_defaults(handler=cmd_synth)

    p = sub.add_parser("eval", help="score predicted label maps against ground truth")
    p.add_argument("pred_dir")
    p.add_argument("gt_dir")
    p.add_argument("--classes", type=int, default=None)
    p.set_defaults(handler=cmd_eval, config=None)
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    values = load_config(args.config) if args.config else {}
    for key, value in vars(args).items():
        if key in RunConfig.__dataclass_fields__ and value is not None:
            values[key] = value
    return RunConfig(**values)


def resolve_backbone(cfg: RunConfig) -> BackboneSpec:
    arch = cfg.architecture
    if cfg.weights:
        return load_weights(cfg.weights, init_backbone(arch, 0))
    if cfg.seed is None:
        raise UsageError("either --weights or --seed is required")
    return init_backbone(arch, cfg.seed)


def _require_frames(cfg: RunConfig) -> list:
    if not cfg.frames:
        raise UsageError("--frames is required")
    return list(read_frame_sequence(cfg.frames))


def _reused_after_first(stats) -> float:
    later = [s.reused_pct for s in stats if s.frame_index > 0]
    return float(np.mean(later)) if later else 0.0


def cmd_segment(cfg: RunConfig) -> int:
    spec = resolve_backbone(cfg)
    frames = _require_frames(cfg)
    out_dir = Path(cfg.out) if cfg.out else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)
    records = []
    for i, (out, stats) in enumerate(process_stream(frames, spec, cfg.tau, cfg.block_size)):
        if out_dir:
            write_label_map(out.labels, out_dir / label_name(i))
        records.append(stats)
    if cfg.stats:
        write_stats(records, cfg.stats, mode="segment")
    h, w = frames[0].geometry
    total = sum(s.stage_macs for s in records)
    dense = dense_macs(spec, h, w) * len(records)
    print(
        f"frames={len(records)} reused_pct={_reused_after_first(records):.2f} "
        f"stage_macs={total} dense_stage_macs={dense} "
        f"mac_reduction_pct={100.0 * (1 - total / dense):.2f}"
    )
    return EXIT_OK


def cmd_compare_dense(cfg: RunConfig) -> int:
    spec = resolve_backbone(cfg)
    frames = _require_frames(cfg)
    cm = ConfusionMatrix.empty(spec.num_classes)
    max_diff = 0.0
    records = []
    for frame, (out, stats) in zip(frames, process_stream(frames, spec, cfg.tau, cfg.block_size)):
        ref, _ = forward_dense(frame, spec, cfg.block_size)
        max_diff = max(max_diff, float(np.max(np.abs(out.logits - ref.logits))))
        cm.update(out.labels, ref.labels)
        records.append(stats)
    if cfg.stats:
        write_stats(records, cfg.stats, mode="segment")
    agreement = 100.0 * pixel_accuracy(cm)
    h, w = frames[0].geometry
    total = sum(s.stage_macs for s in records)
    dense = dense_macs(spec, h, w) * len(records)
    exact_ok = cfg.tau != 1.0 or max_diff == 0.0
    passed = exact_ok and agreement >= cfg.agreement_floor
    print(f"tau={cfg.tau} frames={len(records)}")
    print(f"max_abs_logit_diff={max_diff:.9g}")
    print(f"label_agreement_pct={agreement:.4f}")
    print(f"agreement_miou={miou(cm):.6f}")
    print(f"mac_reduction_pct={100.0 * (1 - total / dense):.2f}")
    print(f"result={'PASS' if passed else 'FAIL'}")
    return EXIT_OK if passed else EXIT_FAIL


def cmd_sweep(cfg: RunConfig) -> int:
    if len(cfg.taus) < 2:
        raise UsageError("a sweep needs at least two thresholds")
    spec = resolve_backbone(cfg)
    frames = _require_frames(cfg)
    rows = sweep_tradeoff(frames, spec, cfg.taus, cfg.block_size)
    write_stats(rows, cfg.stats or sys.stdout, mode="sweep")
    ordered = sorted(rows, key=lambda r: r.tau)
    monotone = all(a.reused_pct >= b.reused_pct for a, b in zip(ordered, ordered[1:]))
    if not monotone:
        print("reuse is not non-increasing in tau", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_synth(cfg: RunConfig) -> int:
    if not cfg.out:
        raise UsageError("--out is required")
    seed = cfg.seed if cfg.seed is not None else 0
    path = synth_sequence(cfg.kind, cfg.nframes, cfg.geometry, seed, cfg.out, cfg.block_size)
    print(f"wrote {cfg.nframes} {cfg.kind} frames ({cfg.geometry[0]}x{cfg.geometry[1]}) to {path}")
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    preds = read_label_sequence(args.pred_dir)
    truths = read_label_sequence(args.gt_dir)
    if len(preds) != len(truths):
        raise StreamConsistencyError(f"{len(preds)} predictions but {len(truths)} ground-truth maps")
    for i, (p, t) in enumerate(zip(preds, truths)):
        if p.shape != t.shape:
            raise StreamConsistencyError(f"map {i}: prediction {p.shape} vs truth {t.shape}")
    k = args.classes or 1 + max(int(max(p.max(), t.max())) for p, t in zip(preds, truths))
    cm = ConfusionMatrix.empty(k)
    for p, t in zip(preds, truths):
        cm.update(p, t)
    print(f"maps={len(preds)} miou={miou(cm):.6f} pixel_accuracy={pixel_accuracy(cm):.6f}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "eval":
            return args.handler(args)
        return args.handler(resolve_config(args))
    except TTRError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_IO
