"""Command-line entry points.

Subcommands:
  check-params    evaluate the feasibility constraint report
  trajectory      integrate one trajectory, write series + photocurrent file
  sweep           run the full collapse sweep, write CSV + JSON summary
  oracle-compare  joint-SME vs rate-equation comparison report
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import __version__
from .experiment import (load_config, SweepConfig, point_params,
                         default_burn_in, run_collapse_sweep, with_points,
                         ConfigError)
from .oracle import LinearizedCouplings, adiabatic_consistency
from .params import check_constraints, steady_nbar_b
from .photocurrent import synthesize, write_record
from .trajectory import run_trajectory, suggest_dt, _MAX_STORED_NOISE


def _load(args, apply_points: bool = True) -> SweepConfig:
    if args.config:
        cfg = load_config(args.config)
    else:
        cfg = SweepConfig()
    if getattr(args, "seed", None) is not None:
        cfg = cfg.__class__(**{**_as_dict(cfg), "seed": args.seed})
    if getattr(args, "out", None):
        cfg = cfg.__class__(**{**_as_dict(cfg), "out": args.out})
    if apply_points and getattr(args, "points", None):
        cfg = with_points(cfg, args.points)
    return cfg


def _as_dict(cfg: SweepConfig) -> dict:
    from dataclasses import asdict
    return asdict(cfg)


def _cmd_check_params(args) -> int:
    cfg = _load(args)
    params = point_params(cfg, max(cfg.gamma1_ratios))
    report = check_constraints(params, None,
                               Gamma1_max=max(cfg.gamma1_ratios),
                               threshold=args.threshold)
    nbar_b = steady_nbar_b(params)
    lines = [
        f"qndtraj {__version__} constraint report",
        f"  steady occupation nbar_b = {nbar_b:.6g}",
        f"  Fock decay rate (Gamma0 units) = {report.fock_decay_rate:.6g}",
        f"  Gamma1_max / decay = {report.ratio_Gamma1max:.6g}"
        f"  [{report.statuses['Gamma1max']}]",
        f"  kappa1+ / decay    = {report.ratio_kappa1plus:.6g}"
        f"  [{report.statuses['kappa1plus']}]",
        f"  g1^2 / (k1+ k1-)   = {report.ratio_g1sq:.6g}"
        f"  [{report.statuses['g1sq']}]",
        f"  threshold = {report.threshold:g} "
        f"(warn above {report.warn_threshold:g})",
    ]
    text = "\n".join(lines)
    if not args.quiet:
        print(text)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    return 0


def _cmd_trajectory(args) -> int:
    cfg = _load(args, apply_points=False)
    idx = 0
    if args.points:
        try:
            idx = int(args.points)
        except ValueError:
            raise ConfigError("--points for `trajectory` is a point index")
    ratios = sorted(cfg.gamma1_ratios)
    idx = max(0, min(idx, len(ratios) - 1))
    params = point_params(cfg, ratios[idx])
    burn = (cfg.burn_in_ratio if cfg.burn_in_ratio > 0
            else default_burn_in(params))
    dt = suggest_dt(params, cfg.N_max) * cfg.dt_ratio
    window = cfg.window_ratio
    max_window = _MAX_STORED_NOISE * dt - burn
    if burn + window > _MAX_STORED_NOISE * dt:
        window = max_window
        if not args.quiet:
            print(f"note: window shortened to {window:.4g}/Gamma0 so the "
                  "noise record stays in memory", file=sys.stderr)
    if window <= 0:
        print("error: burn-in alone exceeds the storable record; "
              "raise dt_ratio or lower burn_in_ratio", file=sys.stderr)
        return 2
    seed = cfg.seed if args.seed is None else args.seed
    rec = run_trajectory(params, n_max=cfg.N_max, dt=dt,
                         duration=burn + window, seed=seed, burn_in=burn,
                         store_noise=True)
    out = args.out or "trajectory"
    base = out[:-4] if out.endswith(".csv") else out
    series_path = base + "_series.csv"
    with open(series_path, "w") as fh:
        fh.write("time,mean_n,mean_n2,var,clamp_mass\n")
        for row in zip(rec.times, rec.mean_n, rec.mean_n2, rec.var,
                       rec.clamp_mass):
            fh.write(",".join(f"{v:.12g}" for v in row) + "\n")
    pc = synthesize(rec, params)
    pc_path = base + "_photocurrent.txt"
    write_record(pc, pc_path)
    if not args.quiet:
        print(f"Gamma1/Gamma0 = {ratios[idx]:g}, dt = {dt:g}, "
              f"burn-in = {burn:g}, window = {window:g}")
        print(f"time-averaged <n> = {rec.avg_mean_n:.6g}, "
              f"variance = {rec.avg_var:.6g}")
        print(f"wrote {series_path} and {pc_path}")
    return 0


def _cmd_sweep(args) -> int:
    cfg = _load(args)
    log = None if args.quiet else print
    result = run_collapse_sweep(cfg, emit=True, log=log)
    if not args.quiet:
        print(f"wrote {cfg.out}")
    return 0 if not any(p.failed for p in result.points) else 1


def _cmd_oracle_compare(args) -> int:
    kappa = args.kappa
    couplings = LinearizedCouplings(
        chi1=math.sqrt(args.gamma1 * kappa),
        chi2=math.sqrt(args.gamma2 * kappa),
        A=1.0,
        kappa1=kappa, kappa2=kappa,
        kappa1_t=kappa, kappa2_t=kappa,
    )
    nbar_th = 5.0e3
    gamma_th = 1.0 / (4.0 * nbar_th)
    from .params import SystemParams
    params = SystemParams(gamma_th=gamma_th, nbar_th=nbar_th,
                          gamma_cool=gamma_th * nbar_th,
                          Gamma1=args.gamma1, Gamma2=args.gamma2, eta=1.0,
                          A=1.0)
    progress = None
    if not args.quiet:
        def progress(i, total):
            if i % max(1, total // 10) == 0:
                print(f"  joint trajectories: {i}/{total}", file=sys.stderr)
    report = adiabatic_consistency(
        params, couplings, truncations=(args.nm, args.nj, args.nj),
        m_traj=args.m_traj, duration=args.duration,
        burn_in=args.burn_in, seed=args.seed,
        n_workers=min(os.cpu_count() or 1, 2), progress=progress)
    text = report.text()
    if not args.quiet:
        print(text)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="qndtraj",
        description="conditional phonon-number trajectory simulator")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    def common(p):
        p.add_argument("--config", help="flat key=value sweep config file")
        p.add_argument("--seed", type=int, help="override the base seed")
        p.add_argument("--out", help="output path")
        p.add_argument("--points",
                       help="point override: count, comma list of "
                            "Gamma1/Gamma0, or (trajectory) a point index")
        p.add_argument("--quiet", action="store_true")

    p = sub.add_parser("check-params", help="emit the constraint report")
    common(p)
    p.add_argument("--threshold", type=float, default=100.0,
                   help="ratio operationalizing 'much greater' (default 100)")
    p.set_defaults(fn=_cmd_check_params)

    p = sub.add_parser("trajectory",
                       help="single trajectory + photocurrent files")
    common(p)
    p.set_defaults(fn=_cmd_trajectory)

    p = sub.add_parser("sweep", help="full collapse sweep -> CSV + summary")
    common(p)
    p.set_defaults(fn=_cmd_sweep)

    p = sub.add_parser("oracle-compare",
                       help="joint-SME vs rate-equation comparison")
    common(p)
    p.add_argument("--m-traj", type=int, default=20)
    p.add_argument("--kappa", type=float, default=1e3,
                   help="optical damping (Gamma0 units)")
    p.add_argument("--gamma1", type=float, default=1.0)
    p.add_argument("--gamma2", type=float, default=0.04)
    p.add_argument("--nm", type=int, default=8)
    p.add_argument("--nj", type=int, default=4)
    p.add_argument("--duration", type=float, default=1.5)
    p.add_argument("--burn-in", type=float, default=0.4)
    p.set_defaults(fn=_cmd_oracle_compare)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
