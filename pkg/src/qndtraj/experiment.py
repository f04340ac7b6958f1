"""Collapse-sweep protocol: burn-in, long averages, incremental Gamma1 scan.

For each measurement strength the trajectory ensemble is burned in to the
conditional steady state, time-averaged moments are accumulated (internal
and photocurrent-derived), and per-point statistics are aggregated across
trajectories.  Points are independent work units: each trajectory's noise
stream is keyed by (base seed, Gamma1 value bits, trajectory index), so a
sweep may be split, reordered, or parallelized without changing a single
row.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict, replace

import numpy as np

from . import __version__
from .params import SystemParams
from .photocurrent import moment_estimates_from_means, EstimatorError
from .trajectory import run_trajectory, suggest_dt, TrajectoryFailure

__all__ = [
    "ConfigError",
    "SweepConfig",
    "PointResult",
    "SweepResult",
    "BurnIn",
    "parse_config",
    "load_config",
    "point_params",
    "default_burn_in",
    "detect_steady_state",
    "run_point",
    "run_collapse_sweep",
    "write_csv",
    "write_summary",
    "CSV_COLUMNS",
]

CSV_COLUMNS = (
    "gamma1_over_gamma0",
    "var_internal",
    "var_internal_stderr",
    "var_photocurrent",
    "var_photocurrent_stderr",
    "mean_n",
    "mean_n_stderr",
    "clamp_mass_max",
    "tail_mass_max",
    "n_traj_failed",
)

#: A point fails outright only if more than this fraction of its
#: trajectories fail.
MAX_FAILED_FRACTION = 0.10


class ConfigError(ValueError):
    """Bad sweep configuration (unknown key, unparsable value, ...)."""


def _default_grid() -> tuple[float, ...]:
    return tuple(np.logspace(-2, 2, 9))


@dataclass(frozen=True)
class SweepConfig:
    """Sweep inputs; all times and rates in units of Gamma0 = 4 g_th nbar_th.

    ``gamma_cool_ratio`` is gamma_cool / (gamma_th * nbar_th);
    ``dt_ratio`` multiplies the automatic step-size heuristic;
    ``burn_in_ratio <= 0`` selects the automatic relaxation-based burn-in.
    """

    gamma1_ratios: tuple = field(default_factory=_default_grid)
    Gamma2_ratio: float = 1e-7
    eta: float = 1.0
    nbar_th: float = 5.0e3
    gamma_cool_ratio: float = 1.0
    A: float = 1.0
    N_max: int = 64
    dt_ratio: float = 1.0
    burn_in_ratio: float = 0.0
    window_ratio: float = 1.0e4
    n_traj: int = 16
    seed: int = 12345
    out: str = "sweep.csv"

    def __post_init__(self):
        if len(self.gamma1_ratios) == 0:
            raise ConfigError("gamma1_ratios must be nonempty")
        if any(g <= 0 for g in self.gamma1_ratios):
            raise ConfigError("gamma1_ratios must be > 0")
        for name in ("Gamma2_ratio", "nbar_th", "gamma_cool_ratio",
                     "window_ratio", "dt_ratio"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0")
        if self.n_traj < 1 or self.N_max < 2:
            raise ConfigError("need n_traj >= 1 and N_max >= 2")


_FIELD_PARSERS = {
    "gamma1_ratios": lambda s: tuple(float(x) for x in s.split(",") if x.strip()),
    "Gamma2_ratio": float,
    "eta": float,
    "nbar_th": float,
    "gamma_cool_ratio": float,
    "A": float,
    "N_max": int,
    "dt_ratio": float,
    "burn_in_ratio": float,
    "window_ratio": float,
    "n_traj": int,
    "seed": int,
    "out": str,
}


def parse_config(text: str) -> SweepConfig:
    """Parse the flat key=value config format; unknown keys are errors."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        if key not in _FIELD_PARSERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[key] = _FIELD_PARSERS[key](val.strip())
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}")
    return SweepConfig(**values)


def load_config(path) -> SweepConfig:
    with open(path) as fh:
        return parse_config(fh.read())


def point_params(config: SweepConfig, gamma1_ratio: float) -> SystemParams:
    """Dimensionless rates for one sweep point (Gamma0 units)."""
    gamma_th = 1.0 / (4.0 * config.nbar_th)
    return SystemParams(
        gamma_th=gamma_th,
        nbar_th=config.nbar_th,
        gamma_cool=config.gamma_cool_ratio * gamma_th * config.nbar_th,
        Gamma1=gamma1_ratio,
        Gamma2=config.Gamma2_ratio,
        eta=config.eta,
        A=config.A,
    )


def default_burn_in(params: SystemParams) -> float:
    """Relaxation-based burn-in: 20 / (gamma_th + gamma_cool)."""
    rate = params.gamma_th + params.gamma_cool
    if rate <= 0:
        raise ValueError("no relaxation scale: gamma_th + gamma_cool = 0")
    return 20.0 / rate


@dataclass(frozen=True)
class BurnIn:
    time: float
    validated: bool | None
    message: str = ""


def detect_steady_state(params: SystemParams, record=None,
                        override: float | None = None,
                        cap: float | None = None) -> BurnIn:
    """Burn-in time, optionally validated against a trajectory record.

    Validation compares the running mean of <n>_c over the two halves of
    the burn-in span; disagreement beyond 5% only warns, and the burn-in is
    never silently extended beyond ``cap``.
    """
    t = override if override is not None and override > 0 else default_burn_in(params)
    if cap is not None:
        t = min(t, cap)
    if record is None:
        return BurnIn(time=t, validated=None)
    sel = record.times < t
    n_sel = int(sel.sum())
    if n_sel < 8:
        return BurnIn(time=t, validated=None,
                      message="record too short to validate burn-in")
    half = n_sel // 2
    m1 = float(record.mean_n[:half].mean())
    m2 = float(record.mean_n[half:n_sel].mean())
    ref = max(abs(m2), 1e-12)
    ok = abs(m1 - m2) / ref <= 0.05
    msg = "" if ok else (
        f"burn-in halves of <n> differ by {abs(m1 - m2) / ref:.1%} (> 5%); "
        "consider a longer burn-in")
    return BurnIn(time=t, validated=ok, message=msg)


@dataclass(frozen=True)
class PointResult:
    gamma1_ratio: float
    var_internal: float
    var_internal_stderr: float
    var_photocurrent: float
    var_photocurrent_stderr: float
    mean_n: float
    mean_n_stderr: float
    clamp_mass_max: float
    tail_mass_max: float
    n_traj_failed: int
    n_traj: int
    burn_in: float
    window: float
    dt: float
    failed: bool
    frac_var_below_half: float = math.nan
    max_prerenorm_drift: float = math.nan

    def csv_row(self) -> tuple:
        return (self.gamma1_ratio, self.var_internal,
                self.var_internal_stderr, self.var_photocurrent,
                self.var_photocurrent_stderr, self.mean_n,
                self.mean_n_stderr, self.clamp_mass_max, self.tail_mass_max,
                self.n_traj_failed)


@dataclass(frozen=True)
class SweepResult:
    points: tuple
    config: SweepConfig
    version: str = __version__


def _traj_seed(base_seed: int, gamma1_ratio: float, traj: int
               ) -> np.random.SeedSequence:
    # key the stream by the point's *value*, not its index, so disjoint
    # half-sweeps reproduce the full sweep row for row
    bits = np.frombuffer(np.float64(gamma1_ratio).tobytes(), dtype=np.uint32)
    return np.random.SeedSequence(entropy=base_seed,
                                  spawn_key=(int(bits[0]), int(bits[1]), traj))


def _mean_stderr(values) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        return math.nan, math.nan
    if arr.size == 1:
        return float(arr[0]), math.nan
    return float(arr.mean()), float(arr.std(ddof=1) / math.sqrt(arr.size))


def run_point(config: SweepConfig, gamma1_ratio: float,
              n_workers: int | None = None) -> PointResult:
    """Run one sweep point: n_traj trajectories, aggregate statistics."""
    params = point_params(config, gamma1_ratio)
    burn = (config.burn_in_ratio if config.burn_in_ratio > 0
            else default_burn_in(params))
    window = config.window_ratio
    duration = burn + window
    dt = suggest_dt(params, config.N_max) * config.dt_ratio

    def one(traj_idx: int):
        seed = _traj_seed(config.seed, gamma1_ratio, traj_idx)
        try:
            rec = run_trajectory(params, n_max=config.N_max, dt=dt,
                                 duration=duration, seed=seed, burn_in=burn,
                                 init="fock", record_stride=1 << 30)
        except TrajectoryFailure as exc:
            return ("failed", str(exc))
        try:
            _, _, _, var_pc = moment_estimates_from_means(
                rec.avg_I1, rec.avg_I1_sq, rec.avg_I2, params.eta,
                params.Gamma1, params.Gamma2, params.A, rec.dt)
        except EstimatorError:
            var_pc = math.nan
        return ("ok", rec.avg_var, var_pc, rec.avg_mean_n, rec.clamp_total,
                rec.tail_mass_avg, rec.frac_var_below_half,
                rec.max_prerenorm_drift)

    if n_workers is None:
        n_workers = min(config.n_traj, os.cpu_count() or 1)
    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as ex:
            outcomes = list(ex.map(one, range(config.n_traj)))
    else:
        outcomes = [one(i) for i in range(config.n_traj)]

    ok = [o for o in outcomes if o[0] == "ok"]
    n_failed = config.n_traj - len(ok)
    failed_point = n_failed > MAX_FAILED_FRACTION * config.n_traj
    if failed_point or not ok:
        return PointResult(
            gamma1_ratio=gamma1_ratio, var_internal=math.nan,
            var_internal_stderr=math.nan, var_photocurrent=math.nan,
            var_photocurrent_stderr=math.nan, mean_n=math.nan,
            mean_n_stderr=math.nan, clamp_mass_max=math.nan,
            tail_mass_max=math.nan, n_traj_failed=n_failed,
            n_traj=config.n_traj, burn_in=burn, window=window, dt=dt,
            failed=True)

    var_int, var_int_se = _mean_stderr([o[1] for o in ok])
    var_pc, var_pc_se = _mean_stderr([o[2] for o in ok])
    mean_n, mean_n_se = _mean_stderr([o[3] for o in ok])
    return PointResult(
        gamma1_ratio=gamma1_ratio,
        var_internal=var_int, var_internal_stderr=var_int_se,
        var_photocurrent=var_pc, var_photocurrent_stderr=var_pc_se,
        mean_n=mean_n, mean_n_stderr=mean_n_se,
        clamp_mass_max=max(o[4] for o in ok),
        tail_mass_max=max(o[5] for o in ok),
        n_traj_failed=n_failed, n_traj=config.n_traj,
        burn_in=burn, window=window, dt=dt, failed=False,
        frac_var_below_half=float(np.mean([o[6] for o in ok])),
        max_prerenorm_drift=max(o[7] for o in ok))


def run_collapse_sweep(config: SweepConfig, emit: bool = True,
                       log=None) -> SweepResult:
    """Map run_point over the Gamma1 grid; emit CSV and JSON summary."""
    points = []
    for g1 in config.gamma1_ratios:
        pt = run_point(config, g1)
        points.append(pt)
        if log is not None:
            log(f"Gamma1/Gamma0 = {g1:<10.4g} var = {pt.var_internal:.4g} "
                f"+- {pt.var_internal_stderr:.2g}  "
                f"(photocurrent {pt.var_photocurrent:.4g} "
                f"+- {pt.var_photocurrent_stderr:.2g}, "
                f"failed {pt.n_traj_failed}/{pt.n_traj})")
    points.sort(key=lambda p: p.gamma1_ratio)
    result = SweepResult(points=tuple(points), config=config)
    if emit:
        write_csv(result, config.out)
        write_summary(result, _summary_path(config.out))
    return result


def _summary_path(csv_path: str) -> str:
    root, ext = os.path.splitext(csv_path)
    return root + "_summary.json"


def write_csv(result: SweepResult, path) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for pt in result.points:
            cells = []
            for value in pt.csv_row():
                if isinstance(value, int):
                    cells.append(str(value))
                else:
                    cells.append(f"{value:.12g}")
            fh.write(",".join(cells) + "\n")


def write_summary(result: SweepResult, path) -> None:
    payload = {
        "version": result.version,
        "config": asdict(result.config),
        "points": [asdict(pt) for pt in result.points],
    }
    payload["config"]["gamma1_ratios"] = list(result.config.gamma1_ratios)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")


def with_points(config: SweepConfig, points_arg: str) -> SweepConfig:
    """CLI --points: either a count for a log grid or explicit ratios."""
    points_arg = points_arg.strip()
    if "," in points_arg or "." in points_arg or "e" in points_arg.lower():
        ratios = tuple(float(x) for x in points_arg.split(",") if x.strip())
    else:
        n = int(points_arg)
        if n < 1:
            raise ConfigError("--points count must be >= 1")
        ratios = tuple(np.logspace(-2, 2, n)) if n > 1 else (1.0,)
    return replace(config, gamma1_ratios=ratios)
