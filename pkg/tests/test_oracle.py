import math

import numpy as np
import pytest

from qndtraj.oracle import (AdiabaticReport, DivergenceError, JointState,
                            LinearizedCouplings, RegimeError,
                            _generator_terms, _sme_chunk, adiabatic_consistency,
                            apply_generator, master_equation_matrix,
                            master_equation_solution, unconditional_steady)
from qndtraj.params import SystemParams, reference_params, steady_nbar_b
from qndtraj.trajectory import drift_thermal, thermal_distribution


def annihilator(n):
    a = np.zeros((n, n), dtype=complex)
    for i in range(1, n):
        a[i - 1, i] = math.sqrt(i)
    return a


def kron3(A, B, C):
    return np.kron(np.kron(A, B), C)


def random_state(dims, seed):
    d = dims[0] * dims[1] * dims[2]
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = x @ x.conj().T
    rho /= np.trace(rho).real
    return rho.reshape(*dims, *dims).copy()


def dense_reference(rho6, params, coup):
    """Brute-force dense-matrix evaluation of every generator term."""
    nm, n1, n2 = rho6.shape[:3]
    d = nm * n1 * n2
    rho = rho6.reshape(d, d)
    Im, I1, I2 = np.eye(nm), np.eye(n1), np.eye(n2)
    b = kron3(annihilator(nm), I1, I2)
    a1 = kron3(Im, annihilator(n1), I2)
    a2 = kron3(Im, I1, annihilator(n2))
    nb = b.conj().T @ b
    H = (-(coup.chi1 / 2) * (a1 + a1.conj().T) @ nb
         - (coup.chi2 / 2) * (a2 + a2.conj().T) @ (nb @ nb + coup.A * nb))

    def D(c, r):
        return c @ r @ c.conj().T - 0.5 * (c.conj().T @ c @ r
                                           + r @ c.conj().T @ c)

    det = -1j * (H @ rho - rho @ H)
    det += params.gamma_down * D(b, rho)
    det += params.gamma_up * D(b.conj().T, rho)
    det += (coup.kappa1 + coup.kappa1_Ram) * D(a1, rho)
    det += (coup.kappa2 + coup.kappa2_Ram) * D(a2, rho)

    def Hsup(c, r):
        x = c @ r + r @ c.conj().T
        return x - np.trace(x) * r

    return det, Hsup(-1j * a1, rho), Hsup(-1j * a2, rho)


PARAMS = SystemParams(gamma_th=0.1, nbar_th=2.0, gamma_cool=0.3,
                      Gamma1=0.0, Gamma2=0.0, eta=0.8, A=1.3)
COUP = LinearizedCouplings(chi1=2.0, chi2=0.7, A=1.3, kappa1=5.0, kappa2=4.0,
                           kappa1_t=3.0, kappa2_t=4.0, kappa1_Ram=0.5)


class TestGenerator:
    def test_matches_dense_brute_force(self):
        dims = (5, 3, 3)
        rho = random_state(dims, 5)
        det, st1, st2 = _generator_terms(rho, PARAMS, COUP)
        det_ref, st1_ref, st2_ref = dense_reference(rho, PARAMS, COUP)
        d = dims[0] * dims[1] * dims[2]
        assert np.abs(det.reshape(d, d) - det_ref).max() < 1e-13
        assert np.abs(st1.reshape(d, d) - st1_ref).max() < 1e-13
        assert np.abs(st2.reshape(d, d) - st2_ref).max() < 1e-13

    def test_deterministic_part_trace_and_hermiticity(self):
        for seed in range(3):
            rho = random_state((5, 3, 3), seed)
            det, _, _ = _generator_terms(rho, PARAMS, COUP)
            m = det.reshape(45, 45)
            assert abs(np.trace(m)) < 1e-13
            assert np.abs(m - m.conj().T).max() < 1e-13

    def test_numba_step_matches_numpy_step(self):
        dims = (5, 3, 3)
        rho = random_state(dims, 7)
        dt, dW1, dW2 = 1e-4, 0.004, -0.003
        out = apply_generator(JointState(rho.copy()), PARAMS, COUP, dt,
                              dW1, dW2, validate=False)
        buf = np.empty_like(rho)
        acc = np.zeros(6)
        z = np.array([[dW1 / math.sqrt(dt), dW2 / math.sqrt(dt)]])
        nb_rho = rho.copy()
        status, _ = _sme_chunk(
            nb_rho, buf, z, dt, COUP.chi1, COUP.chi2, COUP.A,
            PARAMS.gamma_down, PARAMS.gamma_up,
            COUP.kappa1 + COUP.kappa1_Ram, COUP.kappa2 + COUP.kappa2_Ram,
            math.sqrt(PARAMS.eta * COUP.kappa1_t),
            math.sqrt(PARAMS.eta * COUP.kappa2_t), 0, 10, acc)
        assert status == 0
        assert np.abs(nb_rho - out.rho).max() < 1e-14

    def test_decoupled_stationary_state(self):
        # thermal mechanical x optical vacuum is a fixed point when chi = 0
        dims = (8, 3, 3)
        params = SystemParams(gamma_th=0.2, nbar_th=1.0, gamma_cool=0.2,
                              Gamma1=0.0, Gamma2=0.0, eta=1.0, A=1.0)
        coup = LinearizedCouplings(chi1=0.0, chi2=0.0, A=1.0, kappa1=3.0,
                                   kappa2=3.0, kappa1_t=3.0, kappa2_t=3.0)
        pth = thermal_distribution(params, dims[0] - 1)
        rho = np.zeros((*dims, *dims), dtype=complex)
        for m, w in enumerate(pth):
            rho[m, 0, 0, m, 0, 0] = w
        det, _, _ = _generator_terms(rho, params, coup)
        assert np.abs(det).max() < 1e-14

    def test_unitary_limit_purity_second_order(self):
        # no dissipation, no noise: purity loss scales as dt^2
        dims = (4, 3, 3)
        params = SystemParams(gamma_th=0.0, nbar_th=0.0, gamma_cool=0.0,
                              Gamma1=0.0, Gamma2=0.0, eta=1.0, A=1.0)
        coup = LinearizedCouplings(chi1=1.5, chi2=0.5, A=1.0, kappa1=0.0,
                                   kappa2=0.0, kappa1_t=0.0, kappa2_t=0.0)
        d = dims[0] * dims[1] * dims[2]
        psi = np.zeros(d)
        # superpose different phonon numbers so H (which scales with n_b)
        # acts nontrivially
        i_a = np.ravel_multi_index((1, 0, 0), dims)
        i_b = np.ravel_multi_index((2, 1, 0), dims)
        psi[i_a] = psi[i_b] = 1.0 / math.sqrt(2.0)
        rho = np.outer(psi, psi).astype(complex).reshape(*dims, *dims)

        def purity_drop(dt):
            out = apply_generator(JointState(rho.copy()), params, coup, dt,
                                  0.0, 0.0, validate=False)
            m = out.matrix()
            return abs(np.trace(m @ m).real - 1.0)

        drops = [purity_drop(dt) for dt in (1e-3, 5e-4, 2.5e-4)]
        assert drops[0] / drops[1] == pytest.approx(4.0, rel=0.1)
        assert drops[1] / drops[2] == pytest.approx(4.0, rel=0.1)

    def test_stochastic_step_preserves_trace_and_hermiticity(self):
        rho = random_state((5, 3, 3), 9)
        out = apply_generator(JointState(rho), PARAMS, COUP, 1e-4, 0.01,
                              -0.02, validate=True)
        assert out.trace() == pytest.approx(1.0, abs=1e-12)


class TestJointStateValidation:
    def test_bad_trace(self):
        rho = random_state((4, 2, 2), 0)
        with pytest.raises(ValueError):
            JointState(2.0 * rho).validate()

    def test_bad_hermiticity(self):
        rho = random_state((4, 2, 2), 0)
        rho[0, 0, 0, 1, 0, 0] += 1e-6
        with pytest.raises(ValueError):
            JointState(rho).validate()

    def test_negativity_detected(self):
        rho = random_state((4, 2, 2), 0)
        d = 16
        m = rho.reshape(d, d)
        m -= 1e-6 * np.eye(d) / d
        m += 1e-6 * np.outer(np.ones(d), np.ones(d)) / d  # keep trace 1
        m = 0.5 * (m + m.conj().T)
        state = JointState(m.reshape(4, 2, 2, 4, 2, 2))
        state.rho /= state.trace()
        # may or may not dip below tolerance; just exercise the check path
        state.validate(eig_check=True)

    def test_mech_populations(self):
        dims = (4, 2, 2)
        rho = np.zeros((*dims, *dims), dtype=complex)
        rho[2, 0, 0, 2, 0, 0] = 0.25
        rho[2, 1, 0, 2, 1, 0] = 0.25
        rho[0, 0, 1, 0, 0, 1] = 0.5
        q = JointState(rho).mech_populations()
        assert q == pytest.approx([0.5, 0.0, 0.5, 0.0])


class TestUnconditionalSteady:
    def test_paper_operating_point(self):
        params = reference_params(0.0, Gamma2_ratio=0.0)
        dist = unconditional_steady(params, n_max=64)
        n = np.arange(65)
        mean = float(n @ dist.p)
        assert mean == pytest.approx(5000.0 / 5001.0, abs=1e-6)
        assert mean == pytest.approx(steady_nbar_b(params), abs=1e-6)

    def test_uncooled_geometric(self):
        params = SystemParams(gamma_th=0.5, nbar_th=2.0, gamma_cool=0.0,
                              Gamma1=0.0, Gamma2=0.0)
        dist = unconditional_steady(params, n_max=400)
        mean = float(np.arange(401) @ dist.p)
        assert mean == pytest.approx(2.0, rel=1e-10)

    def test_zero_temperature_vacuum(self):
        params = SystemParams(gamma_th=0.5, nbar_th=0.0, gamma_cool=0.3,
                              Gamma1=0.0, Gamma2=0.0)
        dist = unconditional_steady(params, n_max=16)
        assert dist.p[0] == 1.0
        assert np.all(dist.p[1:] == 0.0)

    def test_divergence(self):
        params = SystemParams(gamma_th=1.0, nbar_th=5.0, gamma_cool=0.0,
                              Gamma1=0.0, Gamma2=0.0)
        object.__setattr__(params, "nbar_th", -0.5)  # force up >= down
        with pytest.raises(DivergenceError):
            unconditional_steady(
                SystemParams(gamma_th=0.0, nbar_th=0.0, gamma_cool=0.0,
                             Gamma1=0.0, Gamma2=0.0), 8)


class TestMasterEquation:
    def test_generator_matches_drift_thermal(self):
        # dual-route check: the matrix generator against the vector drift
        params = SystemParams(gamma_th=0.7, nbar_th=1.3, gamma_cool=0.4,
                              Gamma1=0.0, Gamma2=0.0)
        G = master_equation_matrix(params, 24)
        rng = np.random.default_rng(2)
        for _ in range(4):
            p = rng.dirichlet(np.ones(25))
            assert np.abs(G @ p - drift_thermal(
                p, 0.7, 1.3, 0.4)).max() < 1e-13

    def test_solution_conserves_and_relaxes(self):
        params = SystemParams(gamma_th=0.5, nbar_th=1.0, gamma_cool=0.5,
                              Gamma1=0.0, Gamma2=0.0)
        p0 = np.zeros(33)
        p0[0] = 1.0
        times = [0.0, 1.0, 10.0, 60.0]
        sol = master_equation_solution(params, p0, times)
        assert np.allclose(sol.sum(axis=1), 1.0, atol=1e-12)
        stat = unconditional_steady(params, 32).p
        assert np.abs(sol[-1] - stat).max() < 1e-10

    def test_stationary_input_is_fixed(self):
        params = SystemParams(gamma_th=0.5, nbar_th=1.0, gamma_cool=0.1,
                              Gamma1=0.0, Gamma2=0.0)
        stat = unconditional_steady(params, 24).p
        sol = master_equation_solution(params, stat, [5.0])
        assert np.abs(sol[0] - stat).max() < 1e-12


class TestAdiabaticMachinery:
    def test_regime_error(self):
        params = reference_params(1.0)
        coup = LinearizedCouplings(chi1=1.0, chi2=1.0, A=1.0, kappa1=2.0,
                                   kappa2=2.0, kappa1_t=2.0, kappa2_t=2.0)
        with pytest.raises(RegimeError):
            adiabatic_consistency(params, coup, truncations=(6, 3, 3),
                                  m_traj=2, duration=0.1, burn_in=0.0)

    def test_implied_rates(self):
        coup = LinearizedCouplings(chi1=10.0, chi2=5.0, A=1.0, kappa1=100.0,
                                   kappa2=50.0, kappa1_t=80.0, kappa2_t=50.0,
                                   kappa1_Ram=0.0, kappa2_Ram=0.0)
        g1, g2 = coup.implied_rates()
        assert g1 == pytest.approx(100.0 * 80.0 / 100.0**2)
        assert g2 == pytest.approx(25.0 * 50.0 / 50.0**2)

    def test_report_is_explicitly_distributional(self):
        rep = AdiabaticReport(
            var_joint=1.0, var_joint_stderr=0.1, var_sre=1.1,
            var_sre_stderr=0.1, rel_discrepancy=0.09, combined_stderr=0.14,
            Gamma1=1.0, Gamma2=0.1, separation=100.0, m_traj=10,
            duration=1.0, burn_in=0.2, dt_joint=1e-4, dt_sre=1e-3)
        assert rep.distributional and not rep.pathwise
        assert "distributional" in rep.text()
        assert "NOT pathwise" in rep.text()

    def test_chi_zero_reduces_to_unconditional_steady(self):
        # decoupled, unmonitored: the reduced mechanical diagonal of the
        # joint evolution relaxes onto the analytic stationary distribution
        dims = (6, 2, 2)
        params = SystemParams(gamma_th=0.25, nbar_th=1.0, gamma_cool=0.25,
                              Gamma1=0.0, Gamma2=0.0, eta=1.0, A=1.0)
        coup = LinearizedCouplings(chi1=0.0, chi2=0.0, A=1.0, kappa1=50.0,
                                   kappa2=50.0, kappa1_t=50.0, kappa2_t=50.0)
        rho = np.zeros((*dims, *dims), dtype=complex)
        rho[2, 0, 0, 2, 0, 0] = 1.0  # start well away from the fixed point
        state = JointState(rho)
        dt = 0.3 / 50.0
        for _ in range(int(40.0 / dt)):
            state = apply_generator(state, params, coup, dt, 0.0, 0.0,
                                    validate=False)
        q = state.mech_populations()
        stat = unconditional_steady(params, dims[0] - 1).p
        assert np.abs(q - stat).max() < 1e-2
        assert np.abs(q - stat).max() / stat.max() < 0.01
