"""Seeded trajectories of the conditional phonon-number distribution.

A trajectory integrates the diagonal conditional state {p_n} under two
homodyne measurement channels (rates Gamma1 on n and Gamma2 on n^2 + A*n)
plus thermal and cooling dissipation.  The integrator is Euler-Maruyama
with clamp-and-renormalize; its bias is controlled by the self-convergence
and ensemble-consistency tests rather than by a higher-order scheme.

Noise is drawn from a counter-based Philox stream keyed by the seed, so
(seed, trajectory, step, channel) -> increment is a pure function and
results are independent of thread scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .params import SystemParams, steady_nbar_b

__all__ = [
    "FockDistribution",
    "StepNoise",
    "TrajectoryRecord",
    "TrajectoryFailure",
    "TruncationError",
    "thermal_distribution",
    "sample_fock_init",
    "drift_thermal",
    "innovation",
    "moments",
    "step",
    "suggest_dt",
    "run_trajectory",
]

#: A single step may clamp at most this much probability before the
#: trajectory is declared failed (dt too large or N_max too small).
CLAMP_FAIL = 1e-6

#: Time-averaged occupation of the top truncation level must stay below this.
TRUNCATION_TOL = 1e-8

_CHUNK = 1 << 18
_MAX_RECORD = 1 << 16
_MAX_STORED_NOISE = 1 << 22


class TrajectoryFailure(RuntimeError):
    """Integration failed; carries the failing step and diagnostics."""

    def __init__(self, msg, step=-1, diagnostics=None):
        super().__init__(msg)
        self.step = step
        self.diagnostics = diagnostics or {}


class TruncationError(TrajectoryFailure):
    """Time-averaged mass at the truncation boundary exceeded tolerance."""


@dataclass
class FockDistribution:
    """Truncated diagonal state: p[n] for n = 0..n_max."""

    p: np.ndarray

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float)

    @property
    def n_max(self) -> int:
        return self.p.size - 1

    def validate(self, tol: float = 1e-12) -> None:
        if np.any(self.p < 0):
            raise ValueError("negative occupation probability")
        if abs(self.p.sum() - 1.0) > tol:
            raise ValueError(f"probabilities sum to {self.p.sum()!r}, not 1")


@dataclass(frozen=True)
class StepNoise:
    """Wiener increments for one step; each has variance dt."""

    dW1: float
    dW2: float


@dataclass
class TrajectoryRecord:
    """One seeded trajectory: decimated series plus exact running averages.

    Series are sampled every `stride` steps at the pre-step state; the
    scalar time averages cover every post-burn-in step regardless of the
    stride.  `avg_I*` are running averages of the normalized photocurrents
    I1 = 2*sqrt(eta*Gamma1)*<n> + dW1/dt (and the n^2 + A*n analog for I2),
    built from the identical increments that drove the innovations.
    """

    times: np.ndarray
    mean_n: np.ndarray
    mean_n2: np.ndarray
    var: np.ndarray
    clamp_mass: np.ndarray
    p_final: np.ndarray
    dt: float
    duration: float
    burn_in: float
    seed: object
    stride: int
    params: SystemParams
    init: str
    dW1: np.ndarray | None = None
    dW2: np.ndarray | None = None
    avg_mean_n: float = math.nan
    avg_mean_n_sq: float = math.nan
    avg_mean_n2: float = math.nan
    avg_var: float = math.nan
    avg_I1: float = math.nan
    avg_I1_sq: float = math.nan
    avg_I2: float = math.nan
    avg_I2_sq: float = math.nan
    frac_var_below_half: float = math.nan
    n_avg_steps: int = 0
    clamp_total: float = 0.0
    max_step_clamp: float = 0.0
    max_prerenorm_drift: float = 0.0
    tail_mass_avg: float = 0.0
    checkpoints: list = field(default_factory=list)

    @property
    def has_noise(self) -> bool:
        return self.dW1 is not None


def thermal_distribution(params: SystemParams, n_max: int) -> np.ndarray:
    """Stationary birth-death distribution p_n ~ r^n on 0..n_max."""
    g_up = params.gamma_up
    g_down = params.gamma_down
    if g_down <= 0:
        p = np.zeros(n_max + 1)
        p[0] = 1.0
        return p
    r = g_up / g_down
    p = r ** np.arange(n_max + 1)
    return p / p.sum()


def sample_fock_init(params: SystemParams, n_max: int,
                     rng: np.random.Generator) -> np.ndarray:
    """Single Fock state drawn from the stationary distribution.

    A draw from the stationary ensemble rather than the broad thermal
    vector itself: under strong measurement the conditional steady states
    are near-Fock, and starting broad would force the first Euler steps
    through clamp territory at any practical dt.  Over many seeds the
    ensemble of draws averages back to the thermal vector.
    """
    weights = thermal_distribution(params, n_max)
    n0 = int(np.searchsorted(np.cumsum(weights), rng.random()))
    n0 = min(n0, n_max)
    p = np.zeros(n_max + 1)
    p[n0] = 1.0
    return p


def moments(p: np.ndarray) -> tuple[float, float, float]:
    """(<n>, <n^2>, variance) of an occupation vector."""
    n = np.arange(p.size)
    m1 = float(np.dot(n, p))
    m2 = float(np.dot(n * n, p))
    return m1, m2, m2 - m1 * m1


def drift_thermal(p: np.ndarray, gamma_th: float, nbar_th: float,
                  gamma_cool: float) -> np.ndarray:
    """Deterministic birth-death drift, truncation-conserving.

    The upward rate out of the top level is zeroed so the drift telescopes
    exactly on the truncated ladder.
    """
    g_up = gamma_th * nbar_th
    g_down = gamma_th * (nbar_th + 1.0) + gamma_cool
    n = np.arange(p.size, dtype=float)
    dp = np.zeros_like(p, dtype=float)
    dp[1:] += g_up * n[1:] * p[:-1]
    dp[:-1] -= g_up * (n[:-1] + 1.0) * p[:-1]
    dp[:-1] += g_down * (n[:-1] + 1.0) * p[1:]
    dp -= g_down * n * p
    return dp


def innovation(p: np.ndarray, Gamma1: float, Gamma2: float, eta: float,
               A: float, noise: StepNoise) -> np.ndarray:
    """Measurement back-action increment for one step.

    dp_n = -2*sqrt(eta*Gamma1)*(n - <n>)*p_n*dW1
           -2*sqrt(eta*Gamma2)*((n^2 + A*n) - <n^2 + A*n>)*p_n*dW2
    """
    n = np.arange(p.size, dtype=float)
    m1 = float(np.dot(n, p))
    ob2 = n * n + A * n
    mo2 = float(np.dot(ob2, p))
    s1 = 2.0 * math.sqrt(eta * Gamma1)
    s2 = 2.0 * math.sqrt(eta * Gamma2)
    return (-s1 * (n - m1) * p * noise.dW1
            - s2 * (ob2 - mo2) * p * noise.dW2)


def step(p: FockDistribution, dt: float, noise: StepNoise,
         params: SystemParams, diagnostics: dict | None = None
         ) -> FockDistribution:
    """One Euler-Maruyama step with clamp-and-renormalize.

    Clamped (negative) mass is accumulated into ``diagnostics`` under
    ``"clamped_mass"``; a single step clamping more than CLAMP_FAIL raises
    TrajectoryFailure.
    """
    dp = drift_thermal(p.p, params.gamma_th, params.nbar_th,
                       params.gamma_cool) * dt
    dp += innovation(p.p, params.Gamma1, params.Gamma2, params.eta,
                     params.A, noise)
    new = p.p + dp
    neg = new < 0
    clamped = float(-new[neg].sum())
    new[neg] = 0.0
    if diagnostics is not None:
        diagnostics["clamped_mass"] = diagnostics.get("clamped_mass", 0.0) + clamped
        diagnostics["prerenorm_drift"] = abs(float(p.p.sum() + dp.sum()) - 1.0)
    if clamped > CLAMP_FAIL:
        raise TrajectoryFailure(
            f"step clamped {clamped:.3e} probability (> {CLAMP_FAIL:g}); "
            "reduce dt or raise N_max", diagnostics=diagnostics)
    total = new.sum()
    if not total > 0 or not np.isfinite(total):
        raise TrajectoryFailure("occupation vector degenerated",
                                diagnostics=diagnostics)
    return FockDistribution(new / total)


def suggest_dt(params: SystemParams, n_max: int) -> float:
    """Step size keeping clamp events below the failure threshold.

    Drift: the relative deterministic change of any level must stay small.
    Innovation: levels within the *equilibrium* conditional width carry the
    mass, so |2*sqrt(eta*Gamma)*(n - <n>)*sqrt(dt)*z| must stay below 1
    across that width for |z| up to ~10.  The width interpolates between
    the thermal value and the measurement-localized value sqrt(D/k), where
    D is the number-diffusion scale and k the information rate; the floor
    of 4 levels covers the fat-tailed excursions of the jump regime.  For
    the quadratic channel the deviation scale is the observable's global
    range up to the highest plausibly visited level (jump transits make
    the state bimodal, so the local slope underestimates it).
    """
    g_up = params.gamma_up
    g_down = params.gamma_down
    if g_down <= 0 and params.Gamma1 <= 0 and params.Gamma2 <= 0:
        raise ValueError("no dynamical rates; dt undefined")
    nb = g_up / (g_down - g_up) if g_down > g_up else max(params.nbar_th, 1.0)
    var_th = nb * (nb + 1.0)
    d_rate = g_up * (nb + 1.0) + g_down * nb
    slope2 = 2.0 * nb + params.A
    k_info = 4.0 * params.eta * (params.Gamma1 + params.Gamma2 * slope2**2)
    if k_info > 0 and d_rate > 0:
        var_eq = min(var_th, math.sqrt(d_rate / k_info))
    else:
        var_eq = var_th
    core = max(4.0, 6.0 * math.sqrt(max(var_eq, 0.0)))

    z2 = 100.0
    candidates = []
    if g_down > 0 or g_up > 0:
        candidates.append(0.05 / ((g_down + g_up) * (n_max + 1)))
    if params.Gamma1 > 0:
        candidates.append(1.0 / (4.0 * z2 * params.eta * params.Gamma1 * core**2))
    if params.Gamma2 > 0:
        n_hi = min(nb + 3.0 * math.sqrt(var_th) + core, float(n_max))
        dev2 = n_hi * n_hi + abs(params.A) * n_hi
        candidates.append(1.0 / (4.0 * z2 * params.eta * params.Gamma2 * dev2**2))
    return min(candidates)


def _resolve_rng(seed) -> tuple[np.random.Generator, object]:
    if isinstance(seed, np.random.SeedSequence):
        ss = seed
        label = (ss.entropy, tuple(ss.spawn_key))
    else:
        ss = np.random.SeedSequence(seed)
        label = seed
    return np.random.Generator(np.random.Philox(ss)), label


def run_trajectory(params: SystemParams, n_max: int = 64,
                   dt: float | None = None, duration: float = 100.0,
                   seed=0, burn_in: float = 0.0, init: str = "fock",
                   p0: np.ndarray | None = None,
                   record_stride: int | None = None,
                   store_noise: bool = False,
                   checkpoint_times=None,
                   truncation_tol: float | None = TRUNCATION_TOL
                   ) -> TrajectoryRecord:
    """Integrate one seeded trajectory.

    Parameters
    ----------
    params : SystemParams
        Dimensionless rates.
    n_max : int
        Fock truncation; integration fails if the time-averaged top-level
        occupation reaches 1e-8.
    dt : float, optional
        Step size; default from `suggest_dt`.
    duration, burn_in : float
        Total integrated time and the span excluded from running averages.
    seed : int or numpy.random.SeedSequence
        Philox stream key; identical seeds give bit-identical records.
    init : {"fock", "thermal"}
        Initial state: a Fock state sampled from the stationary ensemble
        (default) or the full thermal vector.  ``p0`` overrides both.
    record_stride : int, optional
        Series decimation; default keeps at most 65536 samples.
    store_noise : bool
        Keep the full-rate Wiener increments (needed to synthesize
        photocurrent records); only allowed for runs of at most 2^22 steps
        and forces stride 1.
    checkpoint_times : sequence of float, optional
        Times at which to snapshot the running averages (each snapshot
        covers all post-burn-in steps strictly before it).
    truncation_tol : float or None
        Failure threshold on the time-averaged top-level occupation;
        ``None`` disables the check (matched-truncation oracle comparisons
        run deliberately tiny ladders).
    """
    if dt is None:
        dt = suggest_dt(params, n_max)
    if dt <= 0:
        raise ValueError("dt must be > 0")
    n_steps = max(1, int(round(duration / dt)))
    rng, seed_label = _resolve_rng(seed)

    if p0 is not None:
        p = np.array(p0, dtype=float)
        if p.size != n_max + 1:
            raise ValueError("p0 length must be n_max + 1")
        FockDistribution(p).validate(tol=1e-9)
        p = p / p.sum()
        init_label = "custom"
    elif init == "thermal":
        p = thermal_distribution(params, n_max)
        init_label = "thermal"
    elif init == "fock":
        p = sample_fock_init(params, n_max, rng)
        init_label = "fock"
    else:
        raise ValueError(f"unknown init {init!r}")

    if store_noise:
        if n_steps > _MAX_STORED_NOISE:
            raise ValueError(
                f"store_noise=True limited to {_MAX_STORED_NOISE} steps "
                f"(requested {n_steps}); lower duration or raise dt")
        record_stride = 1
        dw1 = np.empty(n_steps)
        dw2 = np.empty(n_steps)
    else:
        dw1 = np.empty(0)
        dw2 = np.empty(0)

    if record_stride is None:
        record_stride = max(1, -(-n_steps // _MAX_RECORD))
    n_rec = 1 + (n_steps - 1) // record_stride
    rec_mean = np.empty(n_rec)
    rec_mean2 = np.empty(n_rec)
    rec_clamp = np.empty(n_rec)

    burn_step = int(round(burn_in / dt))
    acc = np.zeros(_kernels.ACC_LEN)

    chk_steps = []
    if checkpoint_times is not None:
        chk_steps = sorted({min(n_steps, max(0, int(round(t / dt))))
                            for t in checkpoint_times})
    boundaries = sorted(set(chk_steps) | {n_steps})

    checkpoints = []
    s1 = 2.0 * math.sqrt(params.eta * params.Gamma1)
    s2 = 2.0 * math.sqrt(params.eta * params.Gamma2)

    done = 0
    status = _kernels.STATUS_OK
    fail_step = -1
    for bound in boundaries:
        while done < bound:
            k = min(_CHUNK, bound - done)
            z = rng.standard_normal((k, 2))
            if store_noise:
                dv1, dv2 = dw1[done:done + k], dw2[done:done + k]
            else:
                dv1, dv2 = dw1, dw2
            status, fail_step = _kernels.run_chunk(
                p, z, dt, params.gamma_up, params.gamma_down, s1, s2,
                params.A, done, burn_step, CLAMP_FAIL, acc,
                record_stride, rec_mean, rec_mean2, rec_clamp,
                store_noise, dv1, dv2)
            if status != _kernels.STATUS_OK:
                break
            done += k
        if status != _kernels.STATUS_OK:
            break
        if bound < n_steps or bound in chk_steps:
            checkpoints.append((bound * dt, _summarize(acc, dt)))

    diag = _summarize(acc, dt)
    if status == _kernels.STATUS_CLAMP:
        raise TrajectoryFailure(
            f"step {fail_step} clamped more than {CLAMP_FAIL:g} probability; "
            "reduce dt or raise N_max", step=fail_step, diagnostics=diag)
    if status == _kernels.STATUS_DEGENERATE:
        raise TrajectoryFailure("occupation vector degenerated",
                                step=fail_step, diagnostics=diag)

    rec = TrajectoryRecord(
        times=np.arange(n_rec) * (record_stride * dt),
        mean_n=rec_mean,
        mean_n2=rec_mean2,
        var=rec_mean2 - rec_mean**2,
        clamp_mass=rec_clamp,
        p_final=p,
        dt=dt,
        duration=n_steps * dt,
        burn_in=burn_step * dt,
        seed=seed_label,
        stride=record_stride,
        params=params,
        init=init_label,
        dW1=dw1 if store_noise else None,
        dW2=dw2 if store_noise else None,
        checkpoints=checkpoints,
        **diag,
    )
    if (truncation_tol is not None and rec.n_avg_steps > 0
            and rec.tail_mass_avg >= truncation_tol):
        raise TruncationError(
            f"time-averaged top-level occupation {rec.tail_mass_avg:.2e} "
            f">= {truncation_tol:g}; raise N_max", diagnostics=diag)
    return rec


def _summarize(acc: np.ndarray, dt: float) -> dict:
    n = acc[0]
    inv = 1.0 / n if n > 0 else math.nan
    return {
        "avg_mean_n": acc[1] * inv,
        "avg_mean_n_sq": acc[2] * inv,
        "avg_mean_n2": acc[3] * inv,
        "avg_var": acc[4] * inv,
        "avg_I1": acc[5] * inv,
        "avg_I1_sq": acc[6] * inv,
        "avg_I2": acc[7] * inv,
        "avg_I2_sq": acc[8] * inv,
        "frac_var_below_half": acc[13] * inv,
        "n_avg_steps": int(n),
        "clamp_total": acc[9],
        "max_step_clamp": acc[10],
        "max_prerenorm_drift": acc[11],
        "tail_mass_avg": acc[12] * inv if n > 0 else 0.0,
    }
