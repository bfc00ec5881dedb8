import math

import numpy as np
import pytest
from scipy import constants

from omsqueeze.core import (PhysicalParams, QuadratureSeries, RandomSource,
                            envelope_functions, thermal_occupation_classical,
                            thermal_occupation_quantum)

OMEGA_30MHZ = 2.0 * math.pi * 30.0e6


class TestThermalOccupations:
    def test_zero_temperature(self):
        assert thermal_occupation_quantum(0.0, OMEGA_30MHZ) == 0.0
        assert thermal_occupation_classical(0.0, OMEGA_30MHZ) == 0.0

    def test_quantum_reference_temperatures(self):
        # 2.1 mK and 15.1 mK at 30 MHz sit at occupations 1 and 10.
        assert thermal_occupation_quantum(2.1e-3, OMEGA_30MHZ) == pytest.approx(1.0, abs=0.02)
        assert thermal_occupation_quantum(15.1e-3, OMEGA_30MHZ) == pytest.approx(10.0, abs=0.05)

    def test_classical_reference_temperature(self):
        n_cl = thermal_occupation_classical(144.8e-3, OMEGA_30MHZ)
        assert n_cl == pytest.approx(100.5, abs=0.1)
        # classical limit: n_cl ~ n_quantum + 1/2 to below a percent here
        n_q = thermal_occupation_quantum(144.8e-3, OMEGA_30MHZ)
        assert abs(n_cl - (n_q + 0.5)) / (n_q + 0.5) < 0.01

    def test_unit_ratio_point(self):
        T = constants.hbar * OMEGA_30MHZ / constants.k  # hbar w / kB T = 1
        assert thermal_occupation_classical(T, OMEGA_30MHZ) == pytest.approx(1.0, rel=1e-12)
        assert thermal_occupation_quantum(T, OMEGA_30MHZ) == pytest.approx(
            1.0 / (math.e - 1.0), rel=1e-12)

    def test_classical_minus_quantum_limit(self):
        # hbar w / kB T = 1e-3: difference approaches 1/2 to 4 decimals
        T = constants.hbar * OMEGA_30MHZ / constants.k * 1.0e3
        diff = thermal_occupation_classical(T, OMEGA_30MHZ) - \
            thermal_occupation_quantum(T, OMEGA_30MHZ)
        assert diff == pytest.approx(0.5, abs=1e-4)

    @pytest.mark.parametrize("T,w", [(math.nan, 1.0), (1.0, math.inf), (-1.0, 1.0), (1.0, 0.0)])
    def test_rejects_bad_inputs(self, T, w):
        with pytest.raises(ValueError):
            thermal_occupation_quantum(T, w)
        with pytest.raises(ValueError):
            thermal_occupation_classical(T, w)


class TestEnvelopes:
    def test_zero_time(self):
        p = PhysicalParams(alpha=2.0, k=0.1, nbar_q=3.0, sigma2_cl=2.0)
        env = envelope_functions(0.0, p)
        assert env.A == env.B == env.C == 0.0

    @pytest.mark.parametrize("m", [1, 2, 5])
    def test_integer_periods(self, m):
        p = PhysicalParams(alpha=2.0, k=0.1, nbar_q=1.0, sigma2_cl=0.7)
        env = envelope_functions(m * p.tau, p)
        assert env.A == pytest.approx(4.0 * math.pi * m * p.k**2, rel=1e-12)
        assert abs(env.B) < 1e-12 and abs(env.C) < 1e-12

    def test_vacuum_matched_classical_equals_quantum_envelope(self):
        # 4 * (1/2) = 2 * (2*0 + 1): C(t) == B(t) identically
        p = PhysicalParams(alpha=2.0, k=0.1, nbar_q=0.0, sigma2_cl=0.5)
        t = np.linspace(0.0, 7.3, 500) * p.tau
        env = envelope_functions(t, p)
        np.testing.assert_allclose(env.C, env.B, atol=1e-15)

    def test_monotone_and_periodic(self):
        p = PhysicalParams(alpha=1.0, k=0.05, nbar_q=0.4, sigma2_cl=1.2)
        t = np.linspace(0.0, 12.0, 4000) * p.tau
        env = envelope_functions(t, p)
        assert np.all(np.diff(env.A) >= -1e-14)
        shifted = envelope_functions(t + p.tau, p)
        np.testing.assert_allclose(shifted.B, env.B, atol=1e-10)
        np.testing.assert_allclose(shifted.C, env.C, atol=1e-10)

    def test_negative_time_rejected(self):
        with pytest.raises(ValueError):
            envelope_functions(-0.1, PhysicalParams())


class TestPhysicalParams:
    def test_derived_coupling(self):
        p = PhysicalParams(alpha=2.0, k=0.1, omega=2.0)
        assert p.g0 == pytest.approx(math.sqrt(2.0) * 0.1 * 2.0, rel=1e-15)
        assert p.tau == pytest.approx(math.pi, rel=1e-15)

    @pytest.mark.parametrize("kwargs", [
        {"alpha": -1.0}, {"k": -0.1}, {"omega": 0.0}, {"nbar_q": -2.0},
        {"Gamma": -1.0}, {"alpha": math.nan},
    ])
    def test_invalid_rejected(self, kwargs):
        with pytest.raises(ValueError):
            PhysicalParams(**kwargs)

    def test_with_copies(self):
        p = PhysicalParams(alpha=2.0)
        q = p.with_(kappa=0.3)
        assert q.kappa == 0.3 and p.kappa == 0.0 and q.alpha == 2.0


class TestQuadratureSeries:
    def _ok(self, **kw):
        base = dict(times=[0.0, 1.0], var_min=[1.0, 2.0], theta_star=[0.0, 1.0],
                    var_fixed_theta=[1.0, 2.0])
        base.update(kw)
        return QuadratureSeries(**base)

    def test_valid(self):
        s = self._ok(stderr=[0.1, 0.2])
        assert s.times.size == 2

    def test_rejects_nonpositive_variance(self):
        with pytest.raises(ValueError):
            self._ok(var_min=[1.0, 0.0])

    def test_rejects_unsorted_times(self):
        with pytest.raises(ValueError):
            self._ok(times=[1.0, 1.0])

    def test_rejects_length_mismatch(self):
        with pytest.raises(ValueError):
            self._ok(theta_star=[0.0])

    def test_rejects_theta_outside_domain(self):
        with pytest.raises(ValueError):
            self._ok(theta_star=[0.0, math.pi])


class TestRandomSource:
    def test_reproducible_streams(self):
        a = RandomSource(123456789, 7).generator().normal(size=32)
        b = RandomSource(123456789, 7).generator().normal(size=32)
        assert np.array_equal(a, b)

    def test_distinct_streams_differ(self):
        a = RandomSource(123456789, 0).generator().normal(size=32)
        b = RandomSource(123456789, 1).generator().normal(size=32)
        assert not np.array_equal(a, b)

    def test_stream_independence_statistics(self):
        # crude independence check: correlation across 200 streams is tiny
        draws = np.array([RandomSource(5, i).generator().normal(size=2)
                          for i in range(200)])
        r = np.corrcoef(draws[:, 0], draws[:, 1])[0, 1]
        assert abs(r) < 0.2

    def test_bounds(self):
        with pytest.raises(ValueError):
            RandomSource(-1, 0)
        with pytest.raises(ValueError):
            RandomSource(2**64, 0)
        with pytest.raises(ValueError):
            RandomSource(1, -2)

    def test_downstream_monte_carlo_reproducible(self):
        from omsqueeze.classical import ensemble_variance
        p = PhysicalParams(alpha=2.0, k=0.1)
        t = np.array([0.5, 1.5]) * p.tau
        a = ensemble_variance(p, 2000, t, 32, RandomSource(99, 0))
        b = ensemble_variance(p, 2000, t, 32, RandomSource(99, 0))
        assert np.array_equal(a.var_min, b.var_min)
        assert np.array_equal(a.stderr, b.stderr)
