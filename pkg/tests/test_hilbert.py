import math

import numpy as np
import pytest

from omsqueeze import analytic as an
from omsqueeze import hilbert as hb
from omsqueeze.core import NumericalInvariantError, PhysicalParams

TAU = 2.0 * math.pi
P201 = PhysicalParams(alpha=2.0, k=0.1)


class TestClosedEvolution:
    def test_zero_coupling_leaves_coherent_state(self):
        p = PhysicalParams(alpha=2.0, k=0.0)
        st = hb.evolve_closed(p, 3.3 * TAU, Np=28, Nm=4)
        fm = hb.field_moments(st)
        assert fm.a_mean == pytest.approx(2.0, abs=1e-10)
        for theta in (0.0, 1.1):
            assert fm.variance(theta) == pytest.approx(1.0, abs=1e-9)

    def test_oracle_matches_closed_form(self):
        t = np.array([0.4, 1.7, 3.0]) * TAU
        for fm, tt in zip(hb.closed_field_moments(P201, t), t):
            for theta in (0.0, 0.8):
                ref = an.quantum_variance(theta, tt, P201)
                assert fm.variance(theta) == pytest.approx(ref, rel=1e-8)

    def test_field_purity_restored_at_period(self):
        st = hb.evolve_closed(P201, 2.0 * TAU)
        rho = st.reduced_field().matrix
        purity = float(np.real(np.trace(rho @ rho)))
        assert purity == pytest.approx(1.0, abs=1e-8)
        mid = hb.evolve_closed(P201, 2.5 * TAU)
        rho_mid = mid.reduced_field().matrix
        assert float(np.real(np.trace(rho_mid @ rho_mid))) < 0.99

    def test_photon_number_conserved(self):
        for t in (0.3 * TAU, 10.0 * TAU):
            fm = hb.field_moments(hb.evolve_closed(P201, t))
            assert abs(fm.n_mean - 4.0) < 1e-10

    def test_block_vs_step_integrator(self):
        p = PhysicalParams(alpha=1.0, k=0.1)
        a = hb.evolve_closed(p, 0.8 * TAU, Np=14, Nm=24)
        b = hb.evolve_closed(p, 0.8 * TAU, Np=14, Nm=24, method="ode", dt=2e-4 * TAU)
        assert np.max(np.abs(a.amplitudes - b.amplitudes)) < 1e-8

    def test_thermal_initial_state_collapses_at_periods(self):
        # at integer periods the field forgets the oscillator occupation
        v0 = hb.field_moments(hb.evolve_closed(P201, TAU)).variance(0.0)
        rho1 = hb.evolve_closed(P201.with_(nbar_q=1.0), TAU, mech_init=("thermal", 1.0))
        v1 = hb.field_moments(rho1).variance(0.0)
        assert v1 == pytest.approx(v0, rel=1e-9)

    def test_thermal_between_periods_matches_closed_form(self):
        p = P201.with_(nbar_q=1.0)
        rho = hb.evolve_closed(p, 1.3 * TAU, mech_init=("thermal", 1.0))
        ref = an.quantum_variance(0.2, 1.3 * TAU, p)
        assert hb.field_variance_from_state(rho, 0.2) == pytest.approx(ref, rel=1e-7)

    def test_tail_mass_invariant_enforced(self):
        with pytest.raises(NumericalInvariantError, match="tail"):
            hb.evolve_closed(P201, 0.5 * TAU, Np=6, Nm=40)

    def test_norm_check(self):
        st = hb.initial_joint_state(P201, 30, 10)
        st.amplitudes = st.amplitudes * 1.001
        with pytest.raises(NumericalInvariantError, match="norm"):
            st.check()


class TestFieldVariance:
    def test_vacuum(self):
        rho = np.zeros((6, 6), dtype=complex)
        rho[0, 0] = 1.0
        for theta in np.linspace(0.0, math.pi, 5):
            assert hb.field_variance_from_state(rho, theta) == pytest.approx(1.0)

    @pytest.mark.parametrize("n", [1, 3])
    def test_fock_state(self, n):
        rho = np.zeros((8, 8), dtype=complex)
        rho[n, n] = 1.0
        assert hb.field_variance_from_state(rho, 0.4) == pytest.approx(2.0 * n + 1.0)

    def test_poisson_mixture(self):
        from scipy.stats import poisson
        dim = 40
        rho = np.diag(poisson.pmf(np.arange(dim), 4.0)).astype(complex)
        rho /= np.trace(rho).real
        assert hb.field_variance_from_state(rho, 1.2) == pytest.approx(9.0, rel=1e-8)

    def test_joint_density_operator_input(self):
        st = hb.evolve_closed(P201, 0.6 * TAU, Np=24, Nm=45)
        psi = st.amplitudes.ravel()
        joint = hb.DensityOperator(matrix=np.outer(psi, psi.conj()), dims=(25, 46))
        a = hb.field_variance_from_state(joint, 0.3)
        b = hb.field_moments(st).variance(0.3)
        assert a == pytest.approx(b, rel=1e-10)


class TestDensityOperator:
    def test_checks_pass_for_valid_state(self):
        rho = hb.evolve_closed(P201, 0.9 * TAU, mech_init=("thermal", 0.5))
        rho.check()

    def test_rejects_nonhermitian(self):
        m = np.eye(4, dtype=complex)
        m[0, 1] = 0.1
        with pytest.raises(NumericalInvariantError, match="hermiticity"):
            hb.DensityOperator(matrix=m, dims=(4,)).check()

    def test_rejects_wrong_trace(self):
        with pytest.raises(NumericalInvariantError, match="trace"):
            hb.DensityOperator(matrix=0.5 * np.eye(4, dtype=complex), dims=(4,)).check()

    def test_rejects_negative_eigenvalue(self):
        m = np.diag([1.2, -0.2, 0.0, 0.0]).astype(complex)
        with pytest.raises(NumericalInvariantError, match="positivity"):
            hb.DensityOperator(matrix=m, dims=(4,)).check()

    def test_checkpoint_roundtrip(self, tmp_path):
        rho = hb.evolve_closed(P201, 0.7 * TAU, mech_init=("thermal", 1.0))
        path = tmp_path / "state.omsq"
        rho.save(path)
        back = hb.DensityOperator.load(path)
        assert back.dims == rho.dims
        np.testing.assert_array_equal(back.matrix, rho.matrix)

    def test_checkpoint_rejects_garbage(self, tmp_path):
        path = tmp_path / "junk.omsq"
        path.write_bytes(b"not a checkpoint")
        with pytest.raises(ValueError):
            hb.DensityOperator.load(path)


def _pure_joint_rho(params, Np, Nm):
    psi = hb.initial_joint_state(params, Np, Nm).amplitudes.ravel()
    return hb.DensityOperator(matrix=np.outer(psi, psi.conj()), dims=(Np + 1, Nm + 1))


class TestDenseLindblad:
    def test_zero_damping_matches_closed(self):
        p = PhysicalParams(alpha=1.0, k=0.1, gamma_m=0.0)
        rho0 = _pure_joint_rho(p, 12, 18)
        out = hb.evolve_lindblad_mech(rho0, 0.4 * TAU, p, dt=1e-3 * TAU)
        ref = hb.field_moments(hb.evolve_closed(p, 0.4 * TAU, Np=12, Nm=18))
        got = hb.field_moments(out)
        assert got.variance(0.1) == pytest.approx(ref.variance(0.1), abs=1e-7)

    def test_damped_oscillator_energy_decay(self):
        # g0 = 0, nbar = 0: mechanical energy decays as exp(-gamma t)
        p = PhysicalParams(alpha=0.0, k=0.0, gamma_m=0.05)
        Np, Nm = 0, 24
        beta0 = 1.4
        fact = np.array([math.factorial(m) for m in range(Nm + 1)], dtype=float)
        chi = np.exp(-0.5 * beta0**2) * beta0 ** np.arange(Nm + 1) / np.sqrt(fact)
        psi = chi[None, :].astype(complex)
        rho0 = hb.DensityOperator(
            matrix=np.outer(psi.ravel(), psi.ravel().conj()), dims=(1, Nm + 1))
        t = 1.5 * TAU
        out = hb.evolve_lindblad_mech(rho0, t, p, dt=1e-3 * TAU)
        nb = np.kron(np.eye(1), np.diag(np.arange(Nm + 1.0)))
        energy = float(np.real(np.trace(out.matrix @ nb)))
        assert energy == pytest.approx(beta0**2 * math.exp(-p.gamma_m * t), rel=0.01)

    def test_cavity_full_decay_returns_vacuum(self):
        p = PhysicalParams(alpha=1.0, k=0.1, kappa=2.0)
        rho0 = _pure_joint_rho(p, 10, 16)
        out = hb.evolve_lindblad_cavity(rho0, 4.0 / p.kappa, p, dt=1e-3 * TAU)
        v = hb.field_variance_from_state(out, 0.0)
        assert abs(v - 1.0) < 1e-3

    def test_requires_joint_density(self):
        rho = hb.DensityOperator(matrix=np.eye(4, dtype=complex) / 4.0, dims=(4,))
        with pytest.raises(ValueError):
            hb.evolve_lindblad_mech(rho, 1.0, P201, dt=0.1)


class TestBlockLindblad:
    def test_closed_limit_matches_formula(self):
        eng = hb.BlockLindblad(P201, 24, 45, include_mech=False)
        eng.advance(2.3 * TAU, dt=0.5 * TAU)
        ref = an.quantum_variance(0.4, 2.3 * TAU, P201)
        assert eng.moments().variance(0.4) == pytest.approx(ref, rel=1e-8)

    def test_matches_dense_integrator_mech(self):
        p = PhysicalParams(alpha=1.0, k=0.1, gamma_m=0.05, nbar_bath=0.3)
        rho0 = _pure_joint_rho(p, 12, 18)
        dense = hb.evolve_lindblad_mech(rho0, 0.9 * TAU, p, dt=1e-3 * TAU)
        eng = hb.BlockLindblad(p, 12, 18, include_mech=True)
        eng.advance(0.9 * TAU, dt=5e-3 * TAU)
        ref = hb.field_moments(dense)
        got = eng.moments()
        assert got.variance(0.0) == pytest.approx(ref.variance(0.0), abs=1e-6)
        assert got.n_mean == pytest.approx(ref.n_mean, abs=1e-8)

    def test_matches_dense_integrator_cavity(self):
        p = PhysicalParams(alpha=1.0, k=0.1, kappa=0.25)
        rho0 = _pure_joint_rho(p, 12, 18)
        dense = hb.evolve_lindblad_cavity(rho0, 0.9 * TAU, p, dt=1e-3 * TAU)
        eng = hb.BlockLindblad(p, 12, 18, include_mech=False, include_cavity=True)
        eng.advance(0.9 * TAU, dt=5e-3 * TAU)
        assert eng.moments().variance(0.2) == pytest.approx(
            hb.field_moments(dense).variance(0.2), abs=1e-6)

    def test_step_halving_convergence(self):
        p = P201.with_(gamma_m=0.01, nbar_bath=0.5)
        times = np.array([1.0, 2.0]) * TAU
        a = hb.lindblad_variance_series(p, times, Np=24, Nm=45, dt=0.02 * TAU)
        b = hb.lindblad_variance_series(p, times, Np=24, Nm=45, dt=0.01 * TAU)
        assert np.max(np.abs(a.var_fixed_theta - b.var_fixed_theta)) < 1e-6

    def test_trace_preserved(self):
        p = P201.with_(gamma_m=0.01, nbar_bath=0.5, kappa=0.1)
        eng = hb.BlockLindblad(p, 18, 40, include_mech=True, include_cavity=True)
        eng.advance(3.0 * TAU, dt=0.02 * TAU)
        assert eng.trace() == pytest.approx(1.0, abs=1e-8)
        eng.check_tails()

    def test_damping_reduces_revival_peak(self):
        times = np.array([24.0, 25.0, 26.0]) * TAU
        closed = np.abs(an.quantum_variance(0.0, times, P201) - 9.0)
        p = P201.with_(gamma_m=0.01)
        damped = hb.lindblad_variance_series(p, times, Np=24, Nm=45, dt=0.02 * TAU)
        assert np.max(np.abs(damped.var_fixed_theta - 9.0)) < np.max(closed)


class TestTruncations:
    def test_defaults_scale_with_amplitude(self):
        p_small = PhysicalParams(alpha=1.0, k=0.05)
        p_large = PhysicalParams(alpha=4.0, k=0.05)
        assert hb.default_truncations(p_small)[0] < hb.default_truncations(p_large)[0]
        assert hb.default_truncations(PhysicalParams(alpha=1.0, k=0.0))[1] == 20

    def test_coherent_amplitudes_normalized(self):
        c = hb.coherent_amplitudes(2.0, 40)
        assert np.sum(c**2) == pytest.approx(1.0, abs=1e-12)
        assert np.argmax(c) == 3  # mode of Poisson(4) amplitudes near alpha^2

    def test_thermal_weights_mass(self):
        w = hb.thermal_weights(1.0)
        assert w.sum() == pytest.approx(1.0, abs=1e-9)
        assert w[0] == pytest.approx(0.5, rel=1e-12)
