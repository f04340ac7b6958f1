"""Joint-space validation of the adiabatic elimination (small edition).

Evolves the full conditional density matrix on mechanics (x) two optical
modes with the optical damping 1000x faster than every mechanical rate,
then compares the time-averaged conditional energy variance against the
reduced rate equation run at the measurement rates the elimination
predicts (Gamma_j = chi_j^2 kappa_t / kappa^2).  The ensembles are small
here so the error bars are honest but loose; the acceptance suite runs the
10^4-separation, 200-trajectory version.

Run:  python demos/oracle_comparison.py   (~2 minutes)
"""

import math

from qndtraj import LinearizedCouplings, adiabatic_consistency
from qndtraj.params import SystemParams

kappa = 1.0e3
couplings = LinearizedCouplings(
    chi1=math.sqrt(1.0 * kappa),   # implies Gamma1 = 1
    chi2=math.sqrt(0.04 * kappa),  # implies Gamma2 = 0.04
    A=1.0,
    kappa1=kappa, kappa2=kappa, kappa1_t=kappa, kappa2_t=kappa,
)
nbar_th = 5.0e3
gamma_th = 1.0 / (4.0 * nbar_th)
params = SystemParams(gamma_th=gamma_th, nbar_th=nbar_th,
                      gamma_cool=gamma_th * nbar_th,
                      Gamma1=1.0, Gamma2=0.04, eta=1.0, A=1.0)

report = adiabatic_consistency(params, couplings, truncations=(8, 3, 3),
                               m_traj=24, duration=1.5, burn_in=0.4,
                               seed=5, n_workers=2)
print(report.text())
