"""Numba inner loops for the conditional rate-equation integrator.

The kernel advances the truncated occupation vector p[0..N] with an
Euler-Maruyama step of the conditional dynamics:

    dp_n = g_up*[n*p_{n-1} - (n+1)*p_n]*dt
         + g_down*[(n+1)*p_{n+1} - n*p_n]*dt
         - s1*(n - <n>)*p_n*dW1
         - s2*((n^2 + A*n) - <n^2 + A*n>)*p_n*dW2

with s_j = 2*sqrt(eta*Gamma_j), the upward rate out of the top level zeroed
(truncation), negatives clamped to zero, and the vector renormalized every
step.  Running sums needed by the estimators are accumulated in `acc` so a
multi-hour record never has to be materialized.

acc layout:
    0  steps counted into averages
    1  sum <n>            2  sum <n>^2        3  sum <n^2>
    4  sum var            5  sum I1           6  sum I1^2
    7  sum I2             8  sum I2^2         9  cumulative clamped mass
    10 max single-step clamped mass
    11 max pre-renormalization |sum(p) - 1|
    12 sum p[N] (truncation tail)
    13 steps with var < 0.5
"""

import numpy as np
from numba import njit

ACC_LEN = 14

STATUS_OK = 0
STATUS_CLAMP = 1
STATUS_DEGENERATE = 2


@njit(cache=True, nogil=True, fastmath=True)
def run_chunk(p, z, dt, g_up, g_down, s1, s2, A,
              step0, burn_step, clamp_fail, acc,
              rec_stride, rec_mean, rec_mean2, rec_clamp,
              store_noise, dw1_out, dw2_out):
    """Advance `p` through len(z) steps; returns (status, failing step)."""
    n_levels = p.shape[0]
    top = n_levels - 1
    sqdt = np.sqrt(dt)
    inv_dt = 1.0 / dt
    for k in range(z.shape[0]):
        step = step0 + k

        m1 = 0.0
        m2 = 0.0
        for n in range(n_levels):
            pn = p[n]
            m1 += n * pn
            m2 += n * n * pn
        mo2 = m2 + A * m1
        var = m2 - m1 * m1

        if rec_stride > 0 and step % rec_stride == 0:
            i = step // rec_stride
            rec_mean[i] = m1
            rec_mean2[i] = m2
            rec_clamp[i] = acc[9]

        z1 = z[k, 0]
        z2 = z[k, 1]
        dW1 = sqdt * z1
        dW2 = sqdt * z2
        if store_noise:
            dw1_out[k] = dW1
            dw2_out[k] = dW2

        if step >= burn_step:
            acc[0] += 1.0
            acc[1] += m1
            acc[2] += m1 * m1
            acc[3] += m2
            acc[4] += var
            i1 = s1 * m1 + dW1 * inv_dt
            i2 = s2 * mo2 + dW2 * inv_dt
            acc[5] += i1
            acc[6] += i1 * i1
            acc[7] += i2
            acc[8] += i2 * i2
            acc[12] += p[top]
            if var < 0.5:
                acc[13] += 1.0

        c1 = s1 * dW1
        c2 = s2 * dW2
        pm1 = 0.0
        tot = 0.0
        for n in range(n_levels):
            pn = p[n]
            up_out = 0.0
            dn_in = 0.0
            if n < top:
                up_out = g_up * (n + 1) * pn
                dn_in = g_down * (n + 1) * p[n + 1]
            drift = g_up * n * pm1 - up_out + dn_in - g_down * n * pn
            innov = -c1 * (n - m1) * pn - c2 * ((n * n + A * n) - mo2) * pn
            pm1 = pn
            pnew = pn + drift * dt + innov
            p[n] = pnew
            tot += pnew

        drift_err = abs(tot - 1.0)
        if drift_err > acc[11]:
            acc[11] = drift_err

        clamp = 0.0
        pos = 0.0
        for n in range(n_levels):
            pn = p[n]
            if pn < 0.0:
                clamp -= pn
                p[n] = 0.0
            else:
                pos += pn
        acc[9] += clamp
        if clamp > acc[10]:
            acc[10] = clamp
        if clamp > clamp_fail:
            return STATUS_CLAMP, step
        if not (pos > 0.0) or not np.isfinite(pos):
            return STATUS_DEGENERATE, step

        inv = 1.0 / pos
        for n in range(n_levels):
            p[n] *= inv

    return STATUS_OK, -1
