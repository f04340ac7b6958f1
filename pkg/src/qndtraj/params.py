"""Model coefficients, rates, and feasibility checks.

Everything downstream of this module works in a dimensionless unit system
where the Fock-state decay scale

    Gamma0 = 4 * gamma_th * nbar_th

equals 1.  This is the natural scale against which the phonon-number
measurement rate competes, and it is the x-axis unit of the collapse sweep.
Raw optical parameters (couplings, splittings, cavity linewidths, in any
consistent angular-frequency unit) are converted once, here, and never
reappear in the dynamics.

The perturbative coefficients couple the optical mode frequencies to the
phonon number: channel 1 shifts linearly in n, channel 2 shifts with
n^2 + A*n where A = B/A2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

__all__ = [
    "PoleError",
    "RawOpticalParams",
    "SystemParams",
    "ConstraintReport",
    "coeff_A1",
    "coeff_A2_B_C",
    "raman_rates",
    "chi_from_coupling",
    "gamma_from_chi",
    "measurement_rates",
    "steady_nbar_b",
    "check_constraints",
    "params_from_raw",
]

#: Relative width of the guard band around resonant denominators.
POLE_EPS = 1e-9


class PoleError(ValueError):
    """A perturbative denominator sits too close to a resonance."""


def _check_pole(value: float, scale: float, label: str) -> None:
    if abs(value) <= POLE_EPS * max(abs(scale), 1.0e-300):
        raise PoleError(
            f"{label} = {value:g} is within the resonant guard band; "
            "the perturbative coefficient diverges here"
        )


@dataclass(frozen=True)
class RawOpticalParams:
    """Raw device rates, all in one consistent angular-frequency unit.

    ``nbar1_plus``/``nbar2_plus`` are the mean background photon numbers of
    the driven modes and must equal ``alpha1**2``/``alpha2**2``.
    """

    g1: float
    g2: float
    J1: float
    J2: float
    Omega: float
    kappa1_plus: float
    kappa1_minus: float
    kappa2_plus: float
    kappa2_minus: float
    kappa1_plus_t: float
    kappa2_plus_t: float
    alpha1: float
    alpha2: float
    nbar1_plus: float = -1.0
    nbar2_plus: float = -1.0

    def __post_init__(self):
        if self.nbar1_plus < 0:
            object.__setattr__(self, "nbar1_plus", self.alpha1**2)
        if self.nbar2_plus < 0:
            object.__setattr__(self, "nbar2_plus", self.alpha2**2)
        for name in ("g1", "g2", "J1", "J2", "Omega", "kappa1_plus",
                     "kappa1_minus", "kappa2_plus", "kappa2_minus"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if self.kappa1_plus_t > self.kappa1_plus or self.kappa1_plus_t < 0:
            raise ValueError("need 0 <= kappa1_plus_t <= kappa1_plus")
        if self.kappa2_plus_t > self.kappa2_plus or self.kappa2_plus_t < 0:
            raise ValueError("need 0 <= kappa2_plus_t <= kappa2_plus")
        for j, (nbar, alpha) in enumerate(
                [(self.nbar1_plus, self.alpha1),
                 (self.nbar2_plus, self.alpha2)], start=1):
            ref = max(alpha**2, 1.0)
            if abs(nbar - alpha**2) > 1e-12 * ref:
                raise ValueError(
                    f"nbar{j}_plus must equal alpha{j}**2 "
                    f"(got {nbar:g} vs {alpha ** 2:g})"
                )
        _check_pole(2 * self.J1 - self.Omega, max(2 * self.J1, self.Omega),
                    "2*J1 - Omega")
        _check_pole(self.J2 - self.Omega, max(self.J2, self.Omega),
                    "J2 - Omega")


@dataclass(frozen=True)
class SystemParams:
    """Dimensionless rates driving the conditional dynamics.

    All rates are in units of Gamma0 = 4*gamma_th*nbar_th unless the caller
    deliberately works in raw units throughout.  ``gamma_cool`` is the total
    cooling rate (both Raman channels plus sideband cooling) treated as one
    constant; ``nbar_opt`` is the occupation of that effective cooling bath.
    """

    gamma_th: float
    nbar_th: float
    gamma_cool: float
    Gamma1: float
    Gamma2: float
    eta: float = 1.0
    A: float = 1.0
    nbar_opt: float = 0.0
    chi1: float | None = None
    chi2: float | None = None

    def __post_init__(self):
        for name in ("gamma_th", "nbar_th", "gamma_cool", "Gamma1", "Gamma2",
                     "nbar_opt"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if not 0.0 < self.eta <= 1.0:
            raise ValueError("eta must lie in (0, 1]")

    @property
    def gamma_up(self) -> float:
        """Upward (heating) birth rate of the phonon ladder."""
        return self.gamma_th * self.nbar_th

    @property
    def gamma_down(self) -> float:
        """Downward (decay) rate per phonon, thermal plus cooling."""
        return self.gamma_th * (self.nbar_th + 1.0) + self.gamma_cool

    @property
    def gamma0(self) -> float:
        """Fock-state decay scale 4*gamma_th*nbar_th in the same units."""
        return 4.0 * self.gamma_th * self.nbar_th


@dataclass(frozen=True)
class ConstraintReport:
    """Feasibility margins for the collapse-and-monitor protocol.

    ``fock_decay_rate`` is the total Fock-state decay rate that both the
    cavity linewidth and the maximum measurement rate must dominate.  Each
    ratio is margin = candidate / requirement; ``float('nan')`` marks ratios
    that could not be evaluated from the provided inputs.
    """

    fock_decay_rate: float
    ratio_Gamma1max: float
    ratio_kappa1plus: float
    ratio_g1sq: float
    threshold: float
    warn_threshold: float = 10.0
    passes: dict = field(default_factory=dict)
    statuses: dict = field(default_factory=dict)

    @property
    def all_pass(self) -> bool:
        return all(self.passes.values()) if self.passes else False


def coeff_A1(J1: float, Omega: float) -> float:
    """Linear-channel coefficient 2*(1/(2*J1 - Omega) + 1/(2*J1 + Omega)).

    Raises
    ------
    PoleError
        If ``2*J1`` is within the relative guard band of ``+-Omega``, where
        the resonantly enhanced coefficient diverges.
    """
    scale = max(abs(2 * J1), abs(Omega))
    _check_pole(2 * J1 - Omega, scale, "2*J1 - Omega")
    _check_pole(2 * J1 + Omega, scale, "2*J1 + Omega")
    return 2.0 * (1.0 / (2 * J1 - Omega) + 1.0 / (2 * J1 + Omega))


def coeff_A2_B_C(J2: float, Omega: float) -> tuple[float, float, float]:
    """Quartic-channel coefficients (A2, B, C).

    The downstream dynamics consume only ``A = B / A2``; C is an overall
    energy shift computed for completeness.  At ``Omega = 0`` the identity
    ``B == A2`` holds, so A = 1.
    """
    scale = max(abs(J2), abs(Omega))
    _check_pole(J2, scale, "J2")
    _check_pole(J2 - Omega, scale, "J2 - Omega")
    _check_pole(J2 + Omega, scale, "J2 + Omega")
    d = J2 * J2 - Omega * Omega
    A2 = 4.0 / J2 + 2.0 * J2 / d
    B = 4.0 / J2 + (2.0 * J2 + 4.0 * Omega) / d
    C = Omega * (3.0 + Omega / J2) / d + 1.0 / J2 + 2.0 * J2 / d
    return A2, B, C


def raman_rates(raw: RawOpticalParams,
                nbar_b: float) -> tuple[float, float, float, float]:
    """Secondary-scattering decay rates for both channels.

    Returns ``(gamma1_Ram, gamma2_Ram, kappa1_plus_Ram, kappa2_plus_Ram)``:
    the mechanical decay per phonon induced by photons scattering into the
    undriven partner modes, and the matching optical decay per photon.
    Channel 1 scatters across the splitting ``2*J1 - Omega``; channel 2
    across ``2*J2 - 2*Omega``.
    """
    if nbar_b < 0:
        raise ValueError("nbar_b must be >= 0")
    d1 = 2.0 * raw.J1 - raw.Omega
    d2 = 2.0 * raw.J2 - 2.0 * raw.Omega
    _check_pole(d1, max(2 * raw.J1, raw.Omega), "2*J1 - Omega")
    _check_pole(d2, max(2 * raw.J2, 2 * raw.Omega), "2*(J2 - Omega)")
    c1 = raw.g1**2 * raw.kappa1_minus / d1**2
    c2 = raw.g2**2 * raw.kappa2_minus / d2**2
    gamma1 = c1 * raw.nbar1_plus
    gamma2 = c2 * raw.nbar2_plus
    kappa1 = c1 * nbar_b
    kappa2 = c2 * nbar_b
    return gamma1, gamma2, kappa1, kappa2


def chi_from_coupling(g: float, A_coeff: float, alpha: float) -> float:
    """Signal gain chi = 2 * g^2 * A_coeff * alpha."""
    return 2.0 * g**2 * A_coeff * alpha


def gamma_from_chi(chi: float, kappa_plus_t: float, kappa_plus: float,
                   kappa_plus_Ram: float = 0.0) -> float:
    """Measurement rate Gamma = chi^2 * kappa_t / (kappa + kappa_Ram)^2."""
    denom = kappa_plus + kappa_plus_Ram
    if denom <= 0:
        raise ValueError("kappa_plus + kappa_plus_Ram must be > 0")
    return chi**2 * kappa_plus_t / denom**2


def measurement_rates(raw: RawOpticalParams, A1: float, A2: float,
                      kappa1_plus_Ram: float = 0.0,
                      kappa2_plus_Ram: float = 0.0,
                      ) -> tuple[float, float, float, float]:
    """Signal gains and measurement rates ``(chi1, chi2, Gamma1, Gamma2)``."""
    chi1 = chi_from_coupling(raw.g1, A1, raw.alpha1)
    chi2 = chi_from_coupling(raw.g2, A2, raw.alpha2)
    Gamma1 = gamma_from_chi(chi1, raw.kappa1_plus_t, raw.kappa1_plus,
                            kappa1_plus_Ram)
    Gamma2 = gamma_from_chi(chi2, raw.kappa2_plus_t, raw.kappa2_plus,
                            kappa2_plus_Ram)
    return chi1, chi2, Gamma1, Gamma2


def steady_nbar_b(params: SystemParams) -> float:
    """Steady mechanical occupation from detailed balance.

    nbar_b = (gamma_cool*nbar_opt + gamma_th*nbar_th) / (gamma_cool + gamma_th)
    """
    denom = params.gamma_cool + params.gamma_th
    if denom <= 0:
        raise ZeroDivisionError("gamma_cool + gamma_th must be > 0")
    return (params.gamma_cool * params.nbar_opt
            + params.gamma_th * params.nbar_th) / denom


def fock_decay_rate(params: SystemParams, nbar_b: float | None = None) -> float:
    """Total Fock-state decay rate that measurement must dominate.

    gamma_th*[(nbar_th+1)*nbar_b + nbar_th*(nbar_b+1)] + gamma_cool*nbar_b,
    where the cooling total stands in for the sum of both Raman channels and
    the sideband-cooling rate.
    """
    if nbar_b is None:
        nbar_b = steady_nbar_b(params)
    return (params.gamma_th * ((params.nbar_th + 1.0) * nbar_b
                               + params.nbar_th * (nbar_b + 1.0))
            + params.gamma_cool * nbar_b)


def _status(ratio: float, threshold: float, warn: float) -> str:
    if math.isnan(ratio):
        return "not-evaluated"
    if ratio >= threshold:
        return "pass"
    if ratio >= warn:
        return "warn"
    return "fail"


def check_constraints(params: SystemParams,
                      raw: RawOpticalParams | None,
                      Gamma1_max: float,
                      threshold: float = 100.0,
                      warn_threshold: float = 10.0) -> ConstraintReport:
    """Evaluate the protocol feasibility margins.

    ``threshold`` operationalizes "much greater than" as a minimum ratio
    (default 100); ratios between ``warn_threshold`` and ``threshold`` are
    flagged as marginal.  The purely optical margins require ``raw``; with
    ``raw=None`` they are reported as NaN / "not-evaluated".
    """
    nbar_b = steady_nbar_b(params)
    rhs = fock_decay_rate(params, nbar_b)
    if rhs <= 0:
        ratio_g1max = math.inf if Gamma1_max > 0 else 0.0
        ratio_k1 = math.nan
    else:
        ratio_g1max = Gamma1_max / rhs
        ratio_k1 = math.nan
    ratio_g1sq = math.nan
    if raw is not None:
        if rhs > 0:
            ratio_k1 = raw.kappa1_plus / rhs
        ratio_g1sq = raw.g1**2 / (raw.kappa1_plus * raw.kappa1_minus)
    statuses = {
        "Gamma1max": _status(ratio_g1max, threshold, warn_threshold),
        "kappa1plus": _status(ratio_k1, threshold, warn_threshold),
        "g1sq": _status(ratio_g1sq, threshold, warn_threshold),
    }
    passes = {k: v == "pass" for k, v in statuses.items() if v != "not-evaluated"}
    return ConstraintReport(
        fock_decay_rate=rhs,
        ratio_Gamma1max=ratio_g1max,
        ratio_kappa1plus=ratio_k1,
        ratio_g1sq=ratio_g1sq,
        threshold=threshold,
        warn_threshold=warn_threshold,
        passes=passes,
        statuses=statuses,
    )


def params_from_raw(raw: RawOpticalParams, gamma_th: float, nbar_th: float,
                    gamma_opt: float, nbar_opt: float = 0.0,
                    eta: float = 1.0) -> SystemParams:
    """Build dimensionless ``SystemParams`` from raw angular-frequency rates.

    Computes the perturbative coefficients, the Raman rates at the
    detailed-balance occupation (solved self-consistently, since nbar_b
    feeds back into gamma_cool through the Raman channels), and finally the
    measurement rates; everything is returned in Gamma0 units.
    """
    if gamma_th <= 0 or nbar_th <= 0:
        raise ValueError("gamma_th and nbar_th must be > 0 to fix Gamma0")
    A1 = coeff_A1(raw.J1, raw.Omega)
    A2, B, _C = coeff_A2_B_C(raw.J2, raw.Omega)
    A = B / A2

    # nbar_b depends on gamma_cool which depends (weakly) on nbar_b through
    # kappa_Ram; a few fixed-point sweeps converge to round-off.
    nbar_b = nbar_th
    g1_Ram = g2_Ram = k1_Ram = k2_Ram = 0.0
    for _ in range(64):
        g1_Ram, g2_Ram, k1_Ram, k2_Ram = raman_rates(raw, nbar_b)
        gamma_cool = g1_Ram + g2_Ram + gamma_opt
        new = (gamma_cool * nbar_opt + gamma_th * nbar_th) / (gamma_cool + gamma_th)
        if abs(new - nbar_b) <= 1e-15 * max(abs(new), 1.0):
            nbar_b = new
            break
        nbar_b = new
    gamma_cool = g1_Ram + g2_Ram + gamma_opt

    chi1, chi2, Gamma1, Gamma2 = measurement_rates(raw, A1, A2, k1_Ram, k2_Ram)
    gamma0 = 4.0 * gamma_th * nbar_th
    return SystemParams(
        gamma_th=gamma_th / gamma0,
        nbar_th=nbar_th,
        gamma_cool=gamma_cool / gamma0,
        Gamma1=Gamma1 / gamma0,
        Gamma2=Gamma2 / gamma0,
        eta=eta,
        A=A,
        nbar_opt=nbar_opt,
        chi1=chi1 / gamma0,
        chi2=chi2 / gamma0,
    )


def reference_params(Gamma1_ratio: float, Gamma2_ratio: float = 1e-7,
                 nbar_th: float = 5.0e3, gamma_cool_ratio: float = 1.0,
                 eta: float = 1.0, A: float = 1.0) -> SystemParams:
    """Reference simulation parameters in Gamma0 units.

    ``gamma_cool_ratio`` is gamma_cool / (gamma_th * nbar_th); the default 1
    puts the steady occupation at nbar_th/(nbar_th + 1), essentially one
    phonon.  Measurement rates are given as multiples of Gamma0.
    """
    gamma_th = 1.0 / (4.0 * nbar_th)
    return SystemParams(
        gamma_th=gamma_th,
        nbar_th=nbar_th,
        gamma_cool=gamma_cool_ratio * gamma_th * nbar_th,
        Gamma1=Gamma1_ratio,
        Gamma2=Gamma2_ratio,
        eta=eta,
        A=A,
    )
