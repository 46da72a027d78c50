"""Command-line entry point.

    wavedepth gen-data    --config cfg.json --out data/
    wavedepth spectrum    --data data/ --split train --out spectrum.csv
    wavedepth train       --config cfg.json --data data/ --out run/
    wavedepth eval        --ckpt run/checkpoint.spdk --data data/ --split val --out metrics.csv
    wavedepth sweep       --config cfg.json --data data/ --grid lgrad=0,0.1,0.2 lsmooth=0,0.1,0.2 --out sweep.csv
    wavedepth reconstruct --depth d.pfm --rgb i.ppm --intrinsics k.json --dmin 0.1 --dmax 12 --out cloud.ply
    wavedepth gradcheck
    wavedepth selftest

Exit status: 0 on success, 1 on a domain/data error or a failed check, 2 on
a usage error.
"""

from __future__ import annotations

import argparse
import difflib
import logging
import os
import sys

import numpy as np

from . import checks, io
from .config import PROFILES, load_config, profile
from .errors import WavedepthError
from .losses import valid_mask
from .metrics import METRIC_FIELDS, metrics_csv
from .model import (
    HISTORY_HEADER,
    evaluate,
    parse_grid,
    sweep,
    train_model,
)
from .reconstruct import CameraIntrinsics, backproject, export_ply
from .spectral import DEFAULT_BAND, corpus_report
from .synthdata import load_manifest, load_split, make_dataset

log = logging.getLogger("wavedepth")

COMMANDS = ("gen-data", "spectrum", "train", "eval", "sweep", "reconstruct", "gradcheck", "selftest")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _band(text):
    try:
        lo, hi = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO,HI, got {text!r}") from None
    if not 0.0 < lo < hi <= 1.0:
        raise argparse.ArgumentTypeError(f"band must satisfy 0 < LO < HI <= 1, got {text!r}")
    return lo, hi


def _load_cfg(args):
    if getattr(args, "profile", None):
        if args.config:
            raise UsageError("--config and --profile are mutually exclusive")
        return profile(args.profile)
    return load_config(args.config)


# --- subcommands -------------------------------------------------------------


def cmd_gen_data(args):
    cfg = _load_cfg(args)
    seed = cfg.scene.seed if args.seed is None else args.seed
    manifest = make_dataset(cfg.scene, args.n_train, args.n_val, seed, args.out)
    print(f"wrote {len(manifest['samples'])} samples to {args.out}")
    return 0


def cmd_spectrum(args):
    if bool(args.data) == bool(args.images):
        raise UsageError("give either --data DIR or image paths, not both")
    if args.data:
        manifest = load_manifest(args.data)
        rows = [s for s in manifest["samples"] if s["split"] == args.split]
        items = [(s["id"], io.read_gray(os.path.join(args.data, s["rgb"]))) for s in rows]
    else:
        items = [(p, io.read_gray(p)) for p in args.images]
    report = corpus_report(items, args.band)
    header = ("id", "alpha", "r2", "n_bins", "error")
    io.write_csv(args.out, header, [[r[k] for k in header] for r in report])
    ok = [r for r in report if not r["error"]]
    if ok:
        print(f"{len(ok)}/{len(report)} images: mean alpha {np.mean([r['alpha'] for r in ok]):.4f}, mean r2 {np.mean([r['r2'] for r in ok]):.4f}")
    for r in report:
        if r["error"]:
            print(f"wavedepth spectrum: {r['id']}: {r['error']}", file=sys.stderr)
    return 0 if len(ok) == len(report) else 1


def cmd_train(args):
    cfg = _load_cfg(args)
    data = load_split(args.data, "train")
    os.makedirs(args.out, exist_ok=True)
    res = train_model(data, cfg.encoder, cfg.adapter, cfg.train, args.out)
    io.write_json(os.path.join(args.out, "config.json"), cfg.to_dict())
    last = res.history[-1]
    print(f"trained {len(res.history)} steps; final loss {last[HISTORY_HEADER.index('loss')]:.6f}; checkpoint {res.checkpoint_path}")
    return 0


def cmd_eval(args):
    agg, rows = evaluate(args.ckpt, args.data, args.split, gt_as_pred=args.gt_as_pred)
    io.atomic_write(args.out, metrics_csv(rows, agg).encode("utf-8"))
    print(" ".join(f"{k}={getattr(agg, k):.4f}" for k in METRIC_FIELDS))
    return 0


def cmd_sweep(args):
    cfg = _load_cfg(args)
    grid = parse_grid(args.grid)
    if args.steps is not None:
        cfg.train.max_steps = args.steps
    train_data = load_split(args.data, "train")
    val_data = load_split(args.data, "val")
    (ka, kb), rows = sweep(train_data, val_data, grid, cfg.encoder, cfg.adapter, cfg.train)
    header = (ka, kb) + METRIC_FIELDS
    io.write_csv(args.out, header, [[a, b] + [getattr(r, k) for k in METRIC_FIELDS] for a, b, r in rows])
    print_grid(ka, kb, grid, rows)
    return 0


def print_grid(ka, kb, grid, rows, metric="abs_rel"):
    """Plain-text table of ``metric`` with ``ka`` down and ``kb`` across."""
    table = {(a, b): getattr(r, metric) for a, b, r in rows}
    print(f"{metric}: rows {ka}, columns {kb}")
    print(" " * 8 + "".join(f"{b:>10g}" for b in grid[kb]))
    for a in grid[ka]:
        print(f"{a:>8g}" + "".join(f"{table[(a, b)]:>10.4f}" for b in grid[kb]))


def cmd_reconstruct(args):
    depth = io.read_pfm(args.depth)
    k = CameraIntrinsics.from_dict(io.read_json(args.intrinsics))
    rgb = io.read_ppm(args.rgb) if args.rgb else None
    mask = valid_mask(depth, args.dmin, args.dmax)
    pc = backproject(depth, mask, k, rgb=rgb)
    export_ply(pc, args.out)
    print(f"wrote {len(pc)} points to {args.out}")
    return 0


def cmd_gradcheck(args):
    results = checks.gradient_suite(instances=args.instances, seed=args.seed, tol=args.tol)
    if args.model:
        results.update(checks.model_suite(tol=args.tol))
    failed = 0
    for name, reps in results.items():
        worst = max(r.max_rel_error for r in reps)
        ok = all(r.passed for r in reps)
        failed += not ok
        print(f"{'PASS' if ok else 'FAIL'}  {name:<32} n={len(reps):<3d} worst={worst:.2e}")
    print(f"{len(results) - failed}/{len(results)} cases passed at tol {args.tol:g}")
    return 1 if failed else 0


def cmd_selftest(args):
    results = checks.selftest(args.seed)
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return 0 if all(ok for _, ok, _ in results) else 1


# --- parser ------------------------------------------------------------------


def build_parser():
    p = _Parser(prog="wavedepth", description="Wavelet-gated depth estimation toolkit (synthetic data, training, analysis).")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    def cfg_flags(sp):
        sp.add_argument("--config", help="run configuration JSON (defaults apply to missing keys)")
        sp.add_argument("--profile", choices=sorted(PROFILES), help="named configuration instead of --config")

    sp = sub.add_parser("gen-data", help="render a synthetic train/val dataset")
    cfg_flags(sp)
    sp.add_argument("--out", required=True, help="output directory (must not contain a dataset)")
    sp.add_argument("--n-train", type=int, default=64, help="training samples (default 64)")
    sp.add_argument("--n-val", type=int, default=16, help="validation samples (default 16)")
    sp.add_argument("--seed", type=int, help="base seed (default: scene.seed from the config)")
    sp.set_defaults(func=cmd_gen_data)

    sp = sub.add_parser("spectrum", help="power-law slope and R^2 of image spectra")
    sp.add_argument("images", nargs="*", help="PPM/PGM images (alternative to --data)")
    sp.add_argument("--data", help="dataset directory written by gen-data")
    sp.add_argument("--split", default="train", help="dataset split (default train)")
    sp.add_argument("--band", type=_band, default=DEFAULT_BAND, help="fit band as fractions of Nyquist, LO,HI (default 0.05,0.45)")
    sp.add_argument("--out", required=True, help="output CSV")
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("train", help="train a model on the train split")
    cfg_flags(sp)
    sp.add_argument("--data", required=True, help="dataset directory")
    sp.add_argument("--out", required=True, help="run directory for checkpoint.spdk, history.csv, config.json")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("eval", help="evaluate a checkpoint on a dataset split")
    sp.add_argument("--ckpt", required=True, help="checkpoint file")
    sp.add_argument("--data", required=True, help="dataset directory")
    sp.add_argument("--split", default="val", help="dataset split (default val)")
    sp.add_argument("--out", required=True, help="output CSV, one row per frame plus an aggregate row")
    sp.add_argument("--gt-as-pred", action="store_true", help="score ground truth against itself (pipeline check)")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("sweep", help="loss-weight sensitivity grid")
    cfg_flags(sp)
    sp.add_argument("--data", required=True, help="dataset directory")
    sp.add_argument("--grid", nargs=2, required=True, metavar="AXIS=V1,V2,...", help="two axes among lgrad, lsmooth, ls")
    sp.add_argument("--steps", type=int, help="training steps per cell (overrides train.max_steps)")
    sp.add_argument("--out", required=True, help="output CSV, one row per cell")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("reconstruct", help="back-project a depth map to a PLY point cloud")
    sp.add_argument("--depth", required=True, help="depth PFM")
    sp.add_argument("--rgb", help="colour PPM (optional)")
    sp.add_argument("--intrinsics", required=True, help="JSON with fx, fy, cx, cy, width, height")
    sp.add_argument("--dmin", type=float, required=True, help="minimum valid depth")
    sp.add_argument("--dmax", type=float, required=True, help="maximum valid depth")
    sp.add_argument("--out", required=True, help="output PLY")
    sp.set_defaults(func=cmd_reconstruct)

    sp = sub.add_parser("gradcheck", help="finite-difference check of every operator")
    sp.add_argument("--instances", type=int, default=20, help="random instances per operator (default 20)")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--tol", type=float, default=1e-4, help="relative tolerance (default 1e-4)")
    sp.add_argument("--model", action="store_true", help="also check the full network end to end")
    sp.set_defaults(func=cmd_gradcheck)

    sp = sub.add_parser("selftest", help="quick invariant suite")
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_selftest)
    return p


def _unknown_command(argv):
    """Name of an unrecognised subcommand in ``argv``, if any."""
    for a in argv:
        if a.startswith("-"):
            continue
        return None if a in COMMANDS else a
    return None


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    bad = _unknown_command(argv)
    if bad is not None:
        hint = difflib.get_close_matches(bad, COMMANDS, n=1)
        msg = f"wavedepth: unknown command {bad!r}"
        msg += f"; did you mean {hint[0]!r}?" if hint else f"; choose from {', '.join(COMMANDS)}"
        print(msg, file=sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 2
    if args.command is None:
        parser.print_help(sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"wavedepth {args.command}: {exc}", file=sys.stderr)
        return 2
    except (WavedepthError, OSError) as exc:
        print(f"wavedepth {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
