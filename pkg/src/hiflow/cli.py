"""Command line interface: ``hiflow {generate,cascade,compare,inspect}``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import dumps
from .cascade import (
    run_ablation,
    run_base_stage,
    run_cascade,
    write_metrics_csv,
    write_outputs,
)
from .config import ConfigError, load_config
from .imageio import FormatError, write_ppm
from .reference import ref_velocity_delta

RESIDUAL_TOL = 1e-9

log = logging.getLogger("hiflow")


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("HIFLOW_THREADS", "1")))
    except ValueError:
        return 1


def _load(args):
    overrides = list(args.set or [])
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    return load_config(args.config, overrides)


def _say(args, *parts):
    if not args.quiet:
        print(*parts)


def cmd_generate(args) -> int:
    cfg = _load(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    res = run_base_stage(cfg, record=args.dump_trajectories)
    write_ppm(out / "sample.ppm", res.terminal)
    if args.dump_trajectories:
        dumps.save_trajectory(out / "sample.hft", res.trajectory, args.dump_precision)
    _say(args, f"wrote {out / 'sample.ppm'} ({res.dims[1]}x{res.dims[2]}, seed {cfg.seed})")
    return 0


def cmd_cascade(args) -> int:
    from .plotting import plot_acceleration, plot_radial_spectra

    cfg = _load(args)
    results = run_cascade(cfg)
    out = Path(args.out)
    written = write_outputs(cfg, results, out, args.dump_trajectories, args.dump_precision)
    figs = out / "figures"
    figs.mkdir(exist_ok=True)
    if len(results) > 1:
        plot_radial_spectra(results, figs / "radial_spectra.png")
    plot_acceleration({f"stage {r.index}": r.trajectory for r in results}, figs / "acceleration.png")
    for res in results[1:]:
        m = res.metrics
        _say(args, f"stage {res.index} {res.dims[1]}x{res.dims[2]}: lowband_mse={m['lowband_mse']:.3e} "
                   f"psnr={m['psnr_vs_reference']:.2f} detail_distance={m['detail_distance']:.3f}")
    _say(args, f"wrote {len(written)} files to {out}")
    return 0


def cmd_compare(args) -> int:
    from .plotting import plot_ablation

    cfg = _load(args)
    if not cfg.stages:
        raise ConfigError("compare needs at least one guided stage")
    seeds = [cfg.seed + i for i in range(args.num_seeds)]
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        rows = [row for chunk in pool.map(lambda s: run_ablation(cfg, s), seeds) for row in chunk]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_metrics_csv(out / "compare.csv", rows)
    (out / "figures").mkdir(exist_ok=True)
    plot_ablation(rows, out / "figures" / "ablation.png")
    bad = [r for r in rows if r["matches_vanilla"] == "0"]
    _say(args, f"wrote {len(rows)} rows to {out / 'compare.csv'}")
    if bad:
        print(f"error: all-off configuration differs from vanilla sampling for seeds "
              f"{sorted({r['seed'] for r in bad})}", file=sys.stderr)
        return 1
    return 0


def _inspect_trajectory(path, args) -> bool:
    traj = dumps.load_trajectory(path)
    print(f"{'step':>4} {'t':>12} {'residual':>11} {'accel_rms':>11}")
    ok = True
    prev = None
    for i, rec in enumerate(traj.records):
        res = rec.residual()
        ok &= res < RESIDUAL_TOL
        accel = ""
        if prev is not None:
            a = (rec.v - prev.v) / (rec.t - prev.t)
            accel = f"{np.sqrt(np.mean(a**2)):.4e}"
        print(f"{i:>4} {rec.t:>12.8f} {res:>11.3e} {accel:>11}")
        prev = rec
    ts = traj.times
    monotone = all(b < a for a, b in zip(ts, ts[1:]))
    print(f"steps={len(traj)} monotone_t={'yes' if monotone else 'no'} "
          f"max_residual={max((r.residual() for r in traj.records), default=0.0):.3e} "
          f"guided={'yes' if traj.records and traj.records[0].v_raw is not None else 'no'}")
    if args.plot:
        from .plotting import plot_acceleration

        plot_acceleration({Path(path).stem: traj}, args.plot)
    return ok and monotone


def _inspect_reference(path, args) -> bool:
    ref = dumps.load_reference(path)
    print(f"{'entry':>5} {'t':>12} {'delta_rms':>11}")
    for k, t in enumerate(ref.times):
        delta = ""
        if k >= 1 and t > 0:
            delta = f"{np.sqrt(np.mean(ref_velocity_delta(ref, k) ** 2)):.4e}"
        print(f"{k:>5} {t:>12.8f} {delta:>11}")
    monotone = all(b < a for a, b in zip(ref.times, ref.times[1:]))
    print(f"entries={len(ref)} monotone_t={'yes' if monotone else 'no'} method={ref.method}")
    return monotone


def cmd_inspect(args) -> int:
    magic = dumps.sniff(args.path)
    if magic == b"HFR1":
        ok = _inspect_reference(args.path, args)
    else:
        ok = _inspect_trajectory(args.path, args)
    return 0 if ok or not args.check else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hiflow", description="Flow-aligned high resolution sampling at desk scale.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, dumps_flag=True):
        p.add_argument("--config", required=True, help="config file (key = value, [stage.N] sections)")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the top-level seed")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="config override, repeatable")
        p.add_argument("--quiet", action="store_true")
        p.add_argument("-v", "--verbose", action="store_true")
        if dumps_flag:
            p.add_argument("--dump-trajectories", action="store_true", help="write HFT1/HFR1 dumps")
            p.add_argument("--dump-precision", choices=("f64", "f32"), default="f64")

    common(sub.add_parser("generate", help="single-stage unguided sampling"))
    common(sub.add_parser("cascade", help="run the multi-stage cascade"))
    p = sub.add_parser("compare", help="initialization/direction/acceleration ablation grid")
    common(p, dumps_flag=False)
    p.add_argument("--num-seeds", type=int, default=8)
    p = sub.add_parser("inspect", help="summarise a trajectory or reference dump")
    p.add_argument("path")
    p.add_argument("--plot", metavar="PNG", help="also write an acceleration figure")
    p.add_argument("--check", action="store_true", help="exit 1 on residual or ordering violations")
    p.add_argument("--quiet", action="store_true")
    return parser


COMMANDS = {"generate": cmd_generate, "cascade": cmd_cascade, "compare": cmd_compare, "inspect": cmd_inspect}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, FormatError, FileNotFoundError) as exc:
        print(f"hiflow: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
