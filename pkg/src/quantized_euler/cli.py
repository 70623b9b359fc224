"""Command line entry point: ``quantized-euler <subcommand> [options]``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .analysis import analyze_run, regime_label
from .basis import build_basis, save_basis
from .integrators import NonConvergence, predicted_regime
from .io import fmt, write_csv
from .point_vortex import Collision, DegenerateConfiguration, pv_integrate, read_pv_file, write_trajectory
from .simulation import ConfigError, SimConfig, load_config, run

log = logging.getLogger("quantized_euler")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3

SWEEP_HEADER = ["seed", "gamma", "gamma_spread", "predicted", "blob_count", "regime", "status"]


def _config_flags(parser):
    group = parser.add_argument_group("config overrides")
    for f in dataclasses.fields(SimConfig):
        if f.name in ("seed", "out_dir"):
            continue
        kind = {"int": int, "float": float}.get(f.type, str)
        group.add_argument("--" + f.name.replace("_", "-"), dest="cfg_" + f.name, type=kind, default=None)


def _global_flags(parser, suppress: bool):
    # sub-commands repeat the global flags; SUPPRESS keeps them from
    # overwriting values given before the sub-command name
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--config", default=d(None), help="key = value config file")
    parser.add_argument("--out-dir", default=d(None), help="output directory")
    parser.add_argument("--jobs", type=int, default=d(None), help="parallel runs (default: CPU count)")
    parser.add_argument("--seed", type=int, default=d(None))
    parser.add_argument("--resume", default=d(None), help="continue from a checkpoint file")
    parser.add_argument("-v", "--verbose", action="store_true", default=d(False))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)

    p = argparse.ArgumentParser(prog="quantized-euler", description=__doc__)
    _global_flags(p, suppress=False)
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", parents=[common], help="integrate one run")
    _config_flags(sim)

    sw = sub.add_parser("sweep", parents=[common], help="seeded ensemble of random runs")
    sw.add_argument("--count", type=int, default=16)
    sw.add_argument("--start-time", type=float, default=0.0, help="ignore frames before this time when tracking")
    _config_flags(sw)

    pv = sub.add_parser("pv", parents=[common], help="point-vortex integration")
    pv.add_argument("--data", required=True, help="CSV with phi,theta[,gamma]")
    pv.add_argument("--h", type=float, default=0.05)
    pv.add_argument("--steps", type=int, default=10000)
    pv.add_argument("--every", type=int, default=10, help="output cadence in steps")
    pv.add_argument("--out", help="output directory (default: --out-dir or 'pv')")

    an = sub.add_parser("analyze", parents=[common], help="rasters, tracks and classification")
    an.add_argument("run_dir")
    an.add_argument("--classify", action="store_true", help="treat run_dir as a sweep directory")
    an.add_argument("--threshold", type=float, default=0.3)
    an.add_argument("--link-radius", type=float, default=0.5)
    an.add_argument("--window-frac", type=float, default=0.1)
    an.add_argument("--start-time", type=float, default=0.0)
    an.add_argument("--pgm", action="store_true", help="also write PGM images")

    bc = sub.add_parser("basis-cache", parents=[common], help="write the basis cache file")
    bc.add_argument("--n", type=int, required=True)
    bc.add_argument("--out", help="output file (default: basis_N.zsb)")
    return p


def _config_from_args(args) -> SimConfig:
    cfg = load_config(args.config) if args.config else SimConfig()
    overrides = {k[4:]: v for k, v in vars(args).items() if k.startswith("cfg_") and v is not None}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out_dir:
        overrides["out_dir"] = args.out_dir
    return cfg.updated(**overrides)


def cmd_simulate(args) -> int:
    cfg = _config_from_args(args)
    res = run(cfg, resume=args.resume)
    print(f"{res.state.step} steps, {fmt(res.state.seconds_per_step)} s/step, output in {res.out_dir}")
    return EXIT_OK


def _regime_row(seed: int, summary: dict) -> list:
    count = summary.get("blob_count")
    return [
        seed,
        summary["gamma"],
        summary["gamma_spread"],
        predicted_regime(summary["gamma"]),
        "" if count is None else count,
        "" if count is None else regime_label(count),
        "ok",
    ]


def _print_rows(rows) -> None:
    for r in rows:
        print(",".join(fmt(x) if isinstance(x, float) else str(x) for x in r))


def _sweep_one(cfg: SimConfig, start_time: float) -> list:
    try:
        run(cfg)
        s = analyze_run(cfg.out_dir, start_time=start_time)
    except (NonConvergence, ArithmeticError, ValueError, OSError) as e:
        return [cfg.seed, "", "", "", "", "", f"failed: {e}"]
    return _regime_row(cfg.seed, s)


def cmd_sweep(args) -> int:
    if args.count < 1:
        raise ConfigError("count must be >= 1")
    base = _config_from_args(args)
    if base.ic not in ("random_l2", "random_l2_zero_momentum"):
        base = base.updated(ic="random_l2")
    root = Path(base.out_dir)
    root.mkdir(parents=True, exist_ok=True)
    cfgs = [base.updated(seed=base.seed + k, out_dir=str(root / f"run_{base.seed + k:06d}")) for k in range(args.count)]
    jobs = args.jobs or os.cpu_count() or 1
    with ProcessPoolExecutor(max_workers=min(jobs, len(cfgs))) as pool:
        rows = list(pool.map(_sweep_one, cfgs, [args.start_time] * len(cfgs)))
    write_csv(root / "sweep.csv", SWEEP_HEADER, rows)
    _print_rows(rows)
    return EXIT_OK


def cmd_pv(args) -> int:
    state = read_pv_file(args.data)
    final, times, traj = pv_integrate(state, args.h, args.steps, every=args.every)
    out = Path(args.out or args.out_dir or "pv")
    tpath, ipath = write_trajectory(out, times, traj, state.gamma)
    print(f"wrote {tpath} and {ipath}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    run_dir = Path(args.run_dir)
    if not run_dir.is_dir():
        raise FileNotFoundError(f"{run_dir}: no such run directory")
    opts = dict(
        threshold=args.threshold,
        link_radius=args.link_radius,
        window_frac=args.window_frac,
        start_time=args.start_time,
        pgm=args.pgm,
    )
    if not args.classify:
        print(json.dumps(analyze_run(run_dir, **opts), indent=2))
        return EXIT_OK
    rows = []
    for d in sorted(p.parent for p in run_dir.glob("*/manifest.json")):
        s = analyze_run(d, **opts)
        seed = json.loads((d / "manifest.json").read_text())["seed"]
        rows.append(_regime_row(seed, s))
    if not rows:
        raise FileNotFoundError(f"{run_dir}: no runs found")
    write_csv(run_dir / "regimes.csv", SWEEP_HEADER, rows)
    _print_rows(rows)
    return EXIT_OK


def cmd_basis_cache(args) -> int:
    out = Path(args.out or args.out_dir or ".")
    if out.is_dir():
        out = out / f"basis_{args.n}.zsb"
    save_basis(build_basis(args.n), out)
    print(f"wrote {out}")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "pv": cmd_pv,
    "analyze": cmd_analyze,
    "basis-cache": cmd_basis_cache,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, FileNotFoundError, DegenerateConfiguration) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (NonConvergence, Collision) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
