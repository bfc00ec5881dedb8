import math

import numpy as np
import pytest
from scipy.stats import chisquare, poisson

from omsqueeze import measurement as ms
from omsqueeze.core import PhysicalParams, RandomSource

TAU = 2.0 * math.pi
HYBRID = PhysicalParams(alpha=2.0, k=0.1, Gamma=0.01)
MEAS_ONLY = PhysicalParams(alpha=2.0, k=0.0, Gamma=0.01)


def _coherent_rho(alpha, dim):
    from omsqueeze.hilbert import coherent_amplitudes
    c = coherent_amplitudes(alpha, dim - 1)
    return np.outer(c, c).astype(complex)


class TestSdeStep:
    def test_free_limit_is_identity_up_to_rotation(self):
        p = PhysicalParams(alpha=2.0, k=0.0, Gamma=0.0)
        st = ms.initial_hybrid_state(p, RandomSource(1, 0), Np=16)
        st.x, st.p = 0.4, -0.1
        rho0 = st.rho.copy()
        x0, p0 = st.x, st.p
        dt = 1e-3 * TAU
        ms.sde_step(st, dt, p)
        np.testing.assert_allclose(st.rho, rho0, atol=1e-14)
        assert st.x == pytest.approx(x0 + p.omega * p0 * dt)
        assert st.p == pytest.approx(p0 - p.omega * x0 * dt)

    def test_zero_gamma_with_coupling_rejected(self):
        p = PhysicalParams(alpha=2.0, k=0.1, Gamma=0.0)
        st = ms.initial_hybrid_state(p.with_(Gamma=0.01), RandomSource(1, 0), Np=16)
        with pytest.raises(ValueError, match="Gamma"):
            ms.sde_step(st, 1e-3 * TAU, p)

    def test_oversized_step_rejected(self):
        st = ms.initial_hybrid_state(HYBRID, RandomSource(1, 0), Np=16)
        with pytest.raises(ValueError, match="dt"):
            ms.sde_step(st, 0.5 * TAU, HYBRID)

    def test_diagonal_state_stays_diagonal(self):
        st = ms.initial_hybrid_state(HYBRID, RandomSource(1, 0), Np=16)
        st.rho = np.diag(np.diag(_coherent_rho(2.0, 17))).astype(complex)
        st.rho /= np.trace(st.rho).real
        st.x = 0.3
        ms.sde_step(st, 1e-3 * TAU, HYBRID, dW=0.02)
        off = st.rho - np.diag(np.diag(st.rho))
        assert np.max(np.abs(off)) == 0.0

    def test_single_step_against_term_by_term_arithmetic(self):
        # independent evaluation of each generator term on the matrix,
        # with the oscillator-phase factor exponentiated elementwise
        p, dt, dw = HYBRID, 1e-3 * TAU, 0.01
        dim = 17
        rho = _coherent_rho(2.0, dim)
        x0, p0 = 0.3, -0.2
        n = np.arange(float(dim))
        expn = float(np.real(np.diag(rho)) @ n)
        deph = -p.Gamma * dt * (n[:, None] - n[None, :]) ** 2 * rho
        innov = math.sqrt(2.0 * p.Gamma) * dw * (
            (n[:, None] + n[None, :]) * rho - 2.0 * expn * rho)
        u = np.exp(1j * p.g0 * dt * x0 * n)
        expected = (u[:, None] * u.conj()[None, :]) * (rho + deph + innov)
        expected /= np.trace(expected).real
        x_exp = x0 + p.omega * p0 * dt
        p_exp = p0 - p.omega * x0 * dt + p.g0 * expn * dt + \
            p.g0 / (2.0 * math.sqrt(2.0 * p.Gamma)) * dw

        st = ms.initial_hybrid_state(p, RandomSource(1, 0), Np=dim - 1)
        st.x, st.p = x0, p0
        ms.sde_step(st, dt, p, dW=dw)
        np.testing.assert_allclose(st.rho, expected, atol=1e-13)
        assert st.x == pytest.approx(x_exp, abs=1e-14)
        assert st.p == pytest.approx(p_exp, abs=1e-14)
        # positive increment pushes the number expectation up
        assert np.real(np.diag(st.rho)) @ n > expn

    def test_state_invariants_after_steps(self):
        st = ms.initial_hybrid_state(HYBRID, RandomSource(3, 0), Np=24)
        for _ in range(50):
            ms.sde_step(st, 1e-3 * TAU, HYBRID)
        st.check()


class TestTrajectory:
    def test_pure_measurement_theta_star_zero_everywhere(self):
        rec = ms.run_trajectory(MEAS_ONLY, 5.0 * TAU, 1e-3 * TAU,
                                rng=RandomSource(11, 0))
        assert np.all(rec.theta_star == 0.0)
        assert rec.var_min[0] == pytest.approx(1.0, abs=1e-12)

    def test_collapse_to_fock_state(self):
        # strong measurement needs a step small enough that the innovation
        # multiplier sqrt(2 Gamma) dW (i+j-2<n>) stays well below one
        p = PhysicalParams(alpha=2.0, k=0.0, Gamma=0.1)
        rec = ms.run_trajectory(p, 100.0, 2.5e-4 * TAU, rng=RandomSource(12, 0))
        assert rec.n_var[-1] < 0.05
        assert rec.purity[-1] > 0.95
        summary = ms.collapse_diagnostics(rec)
        assert summary.dominant_population > 0.9
        assert summary.time_to_90_purity is not None

    def test_single_realization_squeezes(self):
        rec = ms.run_trajectory(HYBRID, 10.0 * TAU, 1e-3 * TAU,
                                rng=RandomSource(13, 0))
        assert rec.var_min.min() < 1.0
        summary = ms.collapse_diagnostics(rec)
        assert summary.squeeze_window is not None
        assert summary.squeeze_window[0] > 0.0

    def test_fresh_state_not_squeezed(self):
        rec = ms.run_trajectory(HYBRID, 0.5 * TAU, 1e-3 * TAU,
                                rng=RandomSource(14, 0))
        assert rec.var_min[0] == pytest.approx(1.0, abs=1e-12)
        assert rec.var_theta_grid[0].min() == pytest.approx(1.0, abs=1e-12)

    def test_final_fock_distribution_poissonian(self):
        # the number martingale makes the collapse outcomes Poisson(alpha^2)
        p = PhysicalParams(alpha=2.0, k=0.0, Gamma=0.1)
        r = ms.ensemble_average(p, 1000, 40.0, 2.5e-4 * TAU,
                                rng=RandomSource(15, 0))
        outcomes = np.argmax(r.final_populations, axis=1)
        edges = list(range(9)) + [100]
        counts, _ = np.histogram(outcomes, bins=edges)
        probs = poisson.pmf(np.arange(8), 4.0)
        expect = np.append(probs, 1.0 - probs.sum()) * outcomes.size
        stat, pval = chisquare(counts, expect)
        assert pval > 0.01


class TestEnsemble:
    def test_initial_variance_exact(self):
        r = ms.ensemble_average(HYBRID, 50, 0.5 * TAU, 1e-3 * TAU,
                                rng=RandomSource(20, 0))
        assert r.series_conditional().var_min[0] == pytest.approx(1.0, abs=1e-12)
        assert r.series_mixture().var_min[0] == pytest.approx(1.0, abs=1e-12)

    def test_photon_number_martingale(self):
        r = ms.ensemble_average(HYBRID, 200, 5.0 * TAU, 1e-3 * TAU,
                                rng=RandomSource(21, 0))
        mean, se = r.mean_photon_number()
        assert np.all(np.abs(mean - 4.0) <= 3.0 * np.maximum(se, 1e-12))

    def test_dephasing_of_averaged_state(self):
        # with g0 = 0 the ensemble mean obeys pure number dephasing, so the
        # first two moments decay as exp(-Gamma t) and exp(-4 Gamma t)
        r = ms.ensemble_average(MEAS_ONLY, 400, 5.0 * TAU, 1e-3 * TAU,
                                rng=RandomSource(22, 0))
        t = r.times * TAU
        m1 = r.a_mean.mean(axis=1)
        m2 = r.a2_mean.mean(axis=1)
        se1 = r.a_mean.real.std(axis=1, ddof=1) / math.sqrt(r.n_traj)
        se2 = r.a2_mean.real.std(axis=1, ddof=1) / math.sqrt(r.n_traj)
        ref1 = 2.0 * np.exp(-MEAS_ONLY.Gamma * t)
        ref2 = 4.0 * np.exp(-4.0 * MEAS_ONLY.Gamma * t)
        assert np.all(np.abs(m1.real - ref1) <= 4.0 * np.maximum(se1, 1e-12))
        assert np.all(np.abs(m2.real - ref2) <= 4.0 * np.maximum(se2, 1e-12))

    def test_squeezing_bound_vs_pure_measurement(self):
        # oscillator dynamics only rotates realizations apart, so at a common
        # readout angle the k = 0 ensemble squeezes at least as deeply
        seed = RandomSource(23, 0)
        r0 = ms.ensemble_average(MEAS_ONLY, 150, 6.0 * TAU, 1e-3 * TAU, rng=seed)
        r1 = ms.ensemble_average(HYBRID, 150, 6.0 * TAU, 1e-3 * TAU, rng=seed)
        s0, s1 = r0.series_conditional(), r1.series_conditional()
        se = np.sqrt(s0.stderr**2 + s1.stderr**2)
        assert np.all(s1.var_min >= s0.var_min - 3.0 * np.maximum(se, 1e-12))

    def test_theta_star_grows_with_coupling(self):
        seed = RandomSource(24, 0)
        r1 = ms.ensemble_average(HYBRID, 100, 8.0 * TAU, 1e-3 * TAU, rng=seed)
        s1 = r1.series_conditional()
        assert s1.theta_star.max() > 0.2
        r0 = ms.ensemble_average(MEAS_ONLY, 100, 8.0 * TAU, 1e-3 * TAU, rng=seed)
        assert np.all(r0.series_conditional().theta_star == 0.0)

    def test_step_halving_within_statistics(self):
        seed = RandomSource(25, 0)
        a = ms.ensemble_average(HYBRID, 60, 2.0 * TAU, 1e-3 * TAU, rng=seed)
        b = ms.ensemble_average(HYBRID, 60, 2.0 * TAU, 5e-4 * TAU, rng=seed)
        sa, sb = a.series_conditional(), b.series_conditional()
        se = np.sqrt(sa.stderr**2 + sb.stderr**2)
        assert np.all(np.abs(sa.var_min - sb.var_min) <= 3.0 * np.maximum(se, 1e-4))

    def test_backend_equivalence(self):
        if not ms._HAVE_NUMBA:
            pytest.skip("numba unavailable")
        seed = RandomSource(26, 0)
        a = ms.ensemble_average(HYBRID, 10, 1.0 * TAU, 1e-3 * TAU, rng=seed,
                                init_mode="thermal-matched", backend="numpy")
        b = ms.ensemble_average(HYBRID, 10, 1.0 * TAU, 1e-3 * TAU, rng=seed,
                                init_mode="thermal-matched", backend="numba")
        np.testing.assert_allclose(a.n_mean, b.n_mean, atol=1e-12)
        np.testing.assert_allclose(a.a_mean, b.a_mean, atol=1e-12)

    def test_determinism_across_calls(self):
        seed = RandomSource(27, 0)
        a = ms.ensemble_average(HYBRID, 20, 1.0 * TAU, 1e-3 * TAU, rng=seed)
        b = ms.ensemble_average(HYBRID, 20, 1.0 * TAU, 1e-3 * TAU, rng=seed)
        np.testing.assert_array_equal(a.n_mean, b.n_mean)
        np.testing.assert_array_equal(a.x, b.x)

    def test_rejects_unknown_init_mode(self):
        with pytest.raises(ValueError, match="init_mode"):
            ms.ensemble_average(HYBRID, 10, TAU, 1e-3 * TAU,
                                rng=RandomSource(1, 0), init_mode="hot")
