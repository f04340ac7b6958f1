"""One conditional trajectory at two measurement strengths.

Integrates the conditional phonon-number distribution at a weak and at a
strong measurement rate and prints what the conditioning does: at weak
measurement the conditional mean hovers near the bath occupation with a
broad distribution (variance ~ thermal); at strong measurement the state
pins itself to an integer and quantum-jumps between levels, so the
conditional variance collapses except during the brief transits.

Run:  python demos/single_trajectory.py  (writes single_trajectory.png if
matplotlib is available)
"""

import numpy as np

from qndtraj import reference_params, run_trajectory

for label, gamma1 in (("weak  (Gamma1 = 0.01 Gamma0)", 0.01),
                      ("strong (Gamma1 = 100 Gamma0)", 100.0)):
    params = reference_params(gamma1)
    rec = run_trajectory(params, n_max=64, duration=160.0, seed=7,
                         burn_in=80.0)
    print(f"{label}:")
    print(f"  time-averaged <n>        = {rec.avg_mean_n:.4f}")
    print(f"  time-averaged variance   = {rec.avg_var:.4f}")
    print(f"  fraction of time var<0.5 = {rec.frac_var_below_half:.3f}")
    print(f"  dt = {rec.dt:.3g}, steps = {round(rec.duration / rec.dt)}")

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    raise SystemExit(0)

fig, axes = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
for ax, gamma1, title in zip(axes, (0.01, 100.0),
                             ("Gamma1 = 0.01 Gamma0 (broad, thermal-like)",
                              "Gamma1 = 100 Gamma0 (pinned, quantum jumps)")):
    rec = run_trajectory(reference_params(gamma1), n_max=64, duration=120.0,
                         seed=7, burn_in=80.0)
    sel = rec.times >= 80.0
    ax.plot(rec.times[sel], rec.mean_n[sel], lw=0.7, label="<n>_c")
    ax.plot(rec.times[sel], rec.var[sel], lw=0.7, label="var_c")
    ax.set_title(title)
    ax.set_ylabel("phonons")
    ax.legend(loc="upper right")
axes[1].set_xlabel("time  [1/Gamma0]")
fig.tight_layout()
fig.savefig("single_trajectory.png", dpi=150)
print("wrote single_trajectory.png")
