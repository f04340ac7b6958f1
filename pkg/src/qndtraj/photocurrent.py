"""Homodyne photocurrent synthesis and moment estimation.

The stored currents are normalized so the local-oscillator noise floor has
variance 1/dt per sample:

    I1 = 2*sqrt(eta*Gamma1) * <n>_c        + dW1/dt
    I2 = 2*sqrt(eta*Gamma2) * <n^2+A*n>_c  + dW2/dt

built from the identical Wiener increments that drove the trajectory's
innovations.  Conversion to device currents (gains 2*eta*chi_j, noise
sqrt(eta*kappa_t)) is a matter of the gain metadata and is never needed by
the estimators.

The estimator pipeline inverts the gains and subtracts the shot-noise power
1/dt from mean(I1^2); under the Ito convention the state-noise cross term
has zero mean, so the subtraction estimator is unbiased.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .trajectory import TrajectoryRecord
from .params import SystemParams

__all__ = [
    "MissingNoiseError",
    "EstimatorError",
    "SchemaError",
    "PhotocurrentRecord",
    "MomentEstimate",
    "synthesize",
    "moment_estimates_from_means",
    "estimate_moments",
    "write_record",
    "read_record",
]

_HEADER_KEYS = ("eta", "Gamma1", "Gamma2", "A", "dt", "seed")


class MissingNoiseError(ValueError):
    """The trajectory record does not carry its Wiener increments."""


class EstimatorError(ValueError):
    """The requested estimate is undefined (e.g. zero measurement gain)."""


class SchemaError(ValueError):
    """A photocurrent file does not match the fixed columnar schema."""


@dataclass(frozen=True)
class PhotocurrentRecord:
    """Two-channel normalized current series with immutable gain metadata."""

    times: np.ndarray
    I1: np.ndarray
    I2: np.ndarray
    eta: float
    Gamma1: float
    Gamma2: float
    A: float
    dt: float
    seed: object = None

    def __post_init__(self):
        if not (len(self.times) == len(self.I1) == len(self.I2)):
            raise ValueError("times, I1, I2 must have equal length")


@dataclass(frozen=True)
class MomentEstimate:
    """Time-averaged moments recovered from photocurrents alone.

    ``mean_n_sq`` estimates the time average of <n>^2 (not the square of
    ``mean_n``); ``variance = mean_n2 - mean_n_sq`` by construction.  A
    statistically legitimate negative variance near zero is returned as-is
    with ``negative_variance`` set.
    """

    mean_n: float
    mean_n_sq: float
    mean_n2: float
    variance: float
    stderr_mean_n: float
    stderr_mean_n_sq: float
    stderr_mean_n2: float
    stderr_variance: float
    window: float
    block_length: int
    negative_variance: bool


def synthesize(traj: TrajectoryRecord, params: SystemParams
               ) -> PhotocurrentRecord:
    """Build the two-channel current record from a noise-carrying trajectory."""
    if not traj.has_noise or traj.stride != 1:
        raise MissingNoiseError(
            "trajectory record lacks full-rate Wiener increments; rerun "
            "with store_noise=True")
    s1 = 2.0 * math.sqrt(params.eta * params.Gamma1)
    s2 = 2.0 * math.sqrt(params.eta * params.Gamma2)
    ob2 = traj.mean_n2 + params.A * traj.mean_n
    inv_dt = 1.0 / traj.dt
    return PhotocurrentRecord(
        times=traj.times.copy(),
        I1=s1 * traj.mean_n + traj.dW1 * inv_dt,
        I2=s2 * ob2 + traj.dW2 * inv_dt,
        eta=params.eta,
        Gamma1=params.Gamma1,
        Gamma2=params.Gamma2,
        A=params.A,
        dt=traj.dt,
        seed=traj.seed,
    )


def moment_estimates_from_means(mean_I1: float, mean_I1_sq: float,
                                mean_I2: float, eta: float, Gamma1: float,
                                Gamma2: float, A: float, dt: float
                                ) -> tuple[float, float, float, float]:
    """Invert the gain formulas on pre-averaged currents.

    Returns (avg<n>, avg<n>^2, avg<n^2>, variance).  This is the single
    place the estimator algebra lives; the record-based and streaming paths
    both call it.
    """
    if Gamma1 <= 0 or Gamma2 <= 0 or eta <= 0:
        raise EstimatorError("estimates undefined for zero measurement gain")
    s1 = 2.0 * math.sqrt(eta * Gamma1)
    s2 = 2.0 * math.sqrt(eta * Gamma2)
    mean_n = mean_I1 / s1
    mean_n_sq = (mean_I1_sq - 1.0 / dt) / (4.0 * eta * Gamma1)
    mean_n2 = mean_I2 / s2 - A * mean_n
    return mean_n, mean_n_sq, mean_n2, mean_n2 - mean_n_sq


def integrated_autocorr_time(x: np.ndarray, c: float = 5.0) -> float:
    """Integrated autocorrelation time in samples (Sokal windowing)."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 4:
        return 1.0
    x = x - x.mean()
    var = np.dot(x, x) / n
    if var <= 0:
        return 1.0
    nfft = 1 << int(n * 2 - 1).bit_length()
    f = np.fft.rfft(x, nfft)
    acf = np.fft.irfft(f * np.conjugate(f), nfft)[:n].real
    acf /= acf[0]
    tau = 1.0
    for m in range(1, n):
        tau += 2.0 * acf[m]
        if m >= c * tau:
            break
    return max(tau, 1.0)


def estimate_moments(rec: PhotocurrentRecord, burn_in: float,
                     window: float, n_boot: int = 200,
                     boot_seed: int = 0) -> MomentEstimate:
    """Recover time-averaged moments from a current record.

    Uses samples with ``burn_in <= t < burn_in + window``.  Standard errors
    come from a block bootstrap with block length 50x the integrated
    autocorrelation time of I1, which is conservative against correlated
    samples.
    """
    t0 = rec.times[0]
    duration = rec.times[-1] - t0 + rec.dt
    if duration + 1e-9 < burn_in + window:
        raise ValueError(
            f"record spans {duration:g}, shorter than burn_in + window "
            f"= {burn_in + window:g}")
    sel = (rec.times - t0 >= burn_in) & (rec.times - t0 < burn_in + window)
    i1 = rec.I1[sel]
    i2 = rec.I2[sel]
    k = i1.size
    if k < 8:
        raise ValueError("averaging window contains fewer than 8 samples")

    est = moment_estimates_from_means(
        i1.mean(), float(np.mean(i1 * i1)), i2.mean(),
        rec.eta, rec.Gamma1, rec.Gamma2, rec.A, rec.dt)

    tau = integrated_autocorr_time(i1)
    block = int(min(max(math.ceil(50.0 * tau), 1), max(k // 8, 1)))
    n_blocks = k // block
    kb = n_blocks * block
    b_i1 = i1[:kb].reshape(n_blocks, block).mean(axis=1)
    b_i1sq = (i1[:kb] ** 2).reshape(n_blocks, block).mean(axis=1)
    b_i2 = i2[:kb].reshape(n_blocks, block).mean(axis=1)

    rng = np.random.Generator(np.random.Philox(
        np.random.SeedSequence(boot_seed)))
    draws = np.empty((n_boot, 4))
    for b in range(n_boot):
        idx = rng.integers(0, n_blocks, size=n_blocks)
        draws[b] = moment_estimates_from_means(
            b_i1[idx].mean(), b_i1sq[idx].mean(), b_i2[idx].mean(),
            rec.eta, rec.Gamma1, rec.Gamma2, rec.A, rec.dt)
    stderr = draws.std(axis=0, ddof=1)

    return MomentEstimate(
        mean_n=est[0], mean_n_sq=est[1], mean_n2=est[2], variance=est[3],
        stderr_mean_n=float(stderr[0]), stderr_mean_n_sq=float(stderr[1]),
        stderr_mean_n2=float(stderr[2]), stderr_variance=float(stderr[3]),
        window=k * rec.dt, block_length=block,
        negative_variance=bool(est[3] < 0),
    )


def write_record(rec: PhotocurrentRecord, path) -> None:
    """Columnar text format: '# key=value' header, then 'time I1 I2' rows."""
    with open(path, "w") as fh:
        meta = {"eta": rec.eta, "Gamma1": rec.Gamma1, "Gamma2": rec.Gamma2,
                "A": rec.A, "dt": rec.dt,
                "seed": rec.seed if rec.seed is not None else "none"}
        for key in _HEADER_KEYS:
            fh.write(f"# {key}={meta[key]}\n")
        for t, a, b in zip(rec.times, rec.I1, rec.I2):
            fh.write(f"{t:.17g} {a:.17g} {b:.17g}\n")


def read_record(path) -> PhotocurrentRecord:
    """Parse a columnar photocurrent file; raises SchemaError on mismatch."""
    meta = {}
    times, i1, i2 = [], [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" not in body:
                    raise SchemaError(f"line {lineno}: malformed header {line!r}")
                key, _, value = body.partition("=")
                meta[key.strip()] = value.strip()
                continue
            parts = line.split()
            if len(parts) != 3:
                raise SchemaError(
                    f"line {lineno}: expected 'time I1 I2', got {line!r}")
            times.append(float(parts[0]))
            i1.append(float(parts[1]))
            i2.append(float(parts[2]))
    missing = [k for k in _HEADER_KEYS if k not in meta]
    if missing:
        raise SchemaError(f"missing header keys: {missing}")
    unknown = [k for k in meta if k not in _HEADER_KEYS]
    if unknown:
        raise SchemaError(f"unknown header keys: {unknown}")
    if not times:
        raise SchemaError("no samples")
    seed = meta["seed"]
    return PhotocurrentRecord(
        times=np.array(times), I1=np.array(i1), I2=np.array(i2),
        eta=float(meta["eta"]), Gamma1=float(meta["Gamma1"]),
        Gamma2=float(meta["Gamma2"]), A=float(meta["A"]),
        dt=float(meta["dt"]),
        seed=None if seed == "none" else seed,
    )
