"""Fully classical description: stochastic initial conditions, exact
trajectory evolution and Monte Carlo variance estimation.

A trajectory is one draw of the field amplitude ``alpha_L(0) = alpha + delta``
and of the oscillator phase-space point ``(x0, p0)``.  The vacuum noise delta
is a circular Gaussian whose quadrature components ``(sqrt(2) Re delta,
sqrt(2) Im delta)`` have the ground-state covariance diag(1/2, 1/2); the
oscillator components are Gaussian with variance ``sigma2_cl`` each.  Under
that sampling the ensemble variance of ``X_theta = alpha_L e^{-i theta} +
c.c.`` starts at exactly 1 and reproduces the closed form in
:func:`omsqueeze.analytic.classical_variance`, vacuum floor included.

Evolution is exact: the intensity ``|alpha_L|^2`` is conserved, the
oscillator rotates around a displaced center, and the field only picks up an
intensity- and position-dependent phase.  A fixed-step fourth-order
integrator of the averaged equations of motion is included purely as a
cross-check oracle for that closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .analytic import min_variance_from_moments, variance_from_moments
from .core import PhysicalParams, QuadratureSeries, RandomSource, envelope_functions

__all__ = [
    "ClassicalState",
    "sample_initial_conditions",
    "evolve_classical",
    "hamilton_ode_oracle",
    "ensemble_variance",
    "covariance_quadrature_minimum",
]


@dataclass(frozen=True)
class ClassicalState:
    """Field amplitude plus oscillator phase-space point at time t."""

    alpha_L: complex
    x: float
    p: float
    t: float = 0.0


def sample_initial_conditions(params: PhysicalParams, rng: np.random.Generator,
                              size: int | None = None):
    """Draw initial conditions; vectorized when ``size`` is given.

    Returns a single :class:`ClassicalState` for ``size=None``, otherwise a
    tuple of arrays ``(alpha_L, x, p)`` of length ``size``.  Draw order per
    sample is (Re-noise, Im-noise, x, p), which pins the stream layout.
    """
    n = 1 if size is None else int(size)
    # Var(Re delta) = Var(Im delta) = 1/4 so the quadratures (sqrt(2) Re,
    # sqrt(2) Im) carry the ground-state variance 1/2 each.
    noise = rng.normal(0.0, 0.5, size=(2, n))
    osc = rng.normal(0.0, math.sqrt(params.sigma2_cl) if params.sigma2_cl > 0 else 0.0,
                     size=(2, n))
    alpha_L = params.alpha + noise[0] + 1j * noise[1]
    x, p = osc[0], osc[1]
    if size is None:
        return ClassicalState(alpha_L=complex(alpha_L[0]), x=float(x[0]), p=float(p[0]))
    return alpha_L, x, p


def _evolved_amplitude(alpha0, x0, p0, t, params: PhysicalParams):
    A = envelope_functions(t, params).A
    wt = params.omega * np.asarray(t, dtype=float)
    sqrt2k = math.sqrt(2.0) * params.k  # g0 / omega
    phase = A * np.abs(alpha0) ** 2 + sqrt2k * (x0 * np.sin(wt) + p0 * (1.0 - np.cos(wt)))
    return alpha0 * np.exp(1j * phase)


def evolve_classical(state0: ClassicalState, t: float, params: PhysicalParams) -> ClassicalState:
    """Exact closed-form state at time t (oscillator units)."""
    if t < 0:
        raise ValueError("t must be >= 0")
    wt = params.omega * t
    cos_wt, sin_wt = math.cos(wt), math.sin(wt)
    drive = (params.g0 / params.omega) * abs(state0.alpha_L) ** 2
    x = state0.x * cos_wt + state0.p * sin_wt + drive * (1.0 - cos_wt)
    p = -state0.x * sin_wt + state0.p * cos_wt + drive * sin_wt
    alpha_L = _evolved_amplitude(state0.alpha_L, state0.x, state0.p, t, params)
    return ClassicalState(alpha_L=complex(alpha_L), x=x, p=p, t=state0.t + t)


def hamilton_ode_oracle(state0: ClassicalState, t: float, params: PhysicalParams,
                        dt: float = 1.0e-4) -> ClassicalState:
    """Fixed-step RK4 integration of the averaged equations of motion.

    dx/dt = w p,  dp/dt = -w x + g0 |alpha_L|^2,  d(alpha_L)/dt = i g0 x alpha_L.
    Only a cross-check for :func:`evolve_classical`; reports non-convergence
    when halving the step still moves the answer by more than 1e-8.
    """
    if t < 0:
        raise ValueError("t must be >= 0")

    def integrate(step: float) -> np.ndarray:
        n = max(1, int(round(t / step)))
        h = t / n
        w, g0 = params.omega, params.g0
        y = np.array([state0.x, state0.p,
                      state0.alpha_L.real, state0.alpha_L.imag], dtype=float)

        def rhs(y):
            x, p, ar, ai = y
            inten = ar * ar + ai * ai
            dx = w * p
            dp = -w * x + g0 * inten
            da = 1j * g0 * x * (ar + 1j * ai)
            return np.array([dx, dp, da.real, da.imag])

        for _ in range(n):
            k1 = rhs(y)
            k2 = rhs(y + 0.5 * h * k1)
            k3 = rhs(y + 0.5 * h * k2)
            k4 = rhs(y + h * k3)
            y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        return y

    if t == 0:
        return replace(state0)
    with np.errstate(over="ignore", invalid="ignore"):
        coarse = integrate(dt)
        fine = integrate(dt / 2.0)
    diff = float(np.max(np.abs(coarse - fine)))
    if not math.isfinite(diff) or diff > 1.0e-8:
        raise RuntimeError(
            "hamilton_ode_oracle did not converge at the requested step; "
            f"halving dt={dt} moved the state by {diff:.3e}"
        )
    x, p, ar, ai = fine
    return ClassicalState(alpha_L=complex(ar, ai), x=x, p=p, t=state0.t + t)


def _moments(z: np.ndarray):
    # 1/N moments; consistent with the population-variance estimator per theta.
    return z.mean(), (z * z).mean(), np.mean(z.real**2 + z.imag**2)


def covariance_quadrature_minimum(z: np.ndarray) -> float:
    """Smallest quadrature variance via diagonalizing cov(Re z, Im z).

    Consistency check for the theta-grid estimator: min_theta Var(X_theta)
    equals four times the smallest eigenvalue of the 2x2 covariance matrix.
    """
    u = np.stack([np.real(z), np.imag(z)])
    cov = np.cov(u, bias=True)
    return 4.0 * float(np.linalg.eigvalsh(cov)[0])


def ensemble_variance(params: PhysicalParams, n_samples: int, times,
                      theta_grid_n: int, rng: RandomSource,
                      n_blocks: int = 100) -> QuadratureSeries:
    """Monte Carlo estimate of the theta-minimized variance with jackknife errors.

    Times are in oscillator units.  Each sample evolves in closed form; the
    per-theta variance estimator is assembled from the ensemble moments of
    the evolved amplitude (algebraically identical to estimating Var(X_theta)
    per grid angle) and then minimized on a ``theta_grid_n`` grid with local
    refinement.  Standard errors come from a leave-one-block-out jackknife
    over ``n_blocks`` equal blocks.

    Block b draws its samples from ``rng.stream(rng.stream_index + b)`` and
    block partial sums are combined with compensated summation, so a
    block-parallel run reproduces the sequential result exactly (up to
    floating-point reassociation inside a block, which is fixed too).
    """
    if n_samples < 1000:
        raise ValueError("n_samples must be >= 1e3 for a stable jackknife")
    times = np.asarray(times, dtype=float)
    n_blocks = min(n_blocks, n_samples)
    edges = np.linspace(0, n_samples, n_blocks + 1).astype(int)
    sizes = np.diff(edges)

    alpha0 = np.empty(n_samples, dtype=complex)
    x0 = np.empty(n_samples)
    p0 = np.empty(n_samples)
    for b, (lo, hi) in enumerate(zip(edges[:-1], edges[1:])):
        gen = rng.stream(rng.stream_index + b).generator()
        alpha0[lo:hi], x0[lo:hi], p0[lo:hi] = \
            sample_initial_conditions(params, gen, size=hi - lo)

    var_min = np.empty(times.size)
    theta_star = np.empty(times.size)
    var_theta0 = np.empty(times.size)
    stderr = np.empty(times.size)
    thetas = np.arange(theta_grid_n) * (math.pi / theta_grid_n)

    def fsum_complex(values: np.ndarray) -> complex:
        return complex(math.fsum(values.real), math.fsum(values.imag))

    for i, t in enumerate(times):
        z = _evolved_amplitude(alpha0, x0, p0, t, params)
        b1 = np.array([z[lo:hi].sum() for lo, hi in zip(edges[:-1], edges[1:])])
        b2 = np.array([(z[lo:hi] ** 2).sum() for lo, hi in zip(edges[:-1], edges[1:])])
        babs = np.array([np.sum(np.abs(z[lo:hi]) ** 2)
                         for lo, hi in zip(edges[:-1], edges[1:])])
        m1 = fsum_complex(b1) / n_samples
        m2 = fsum_complex(b2) / n_samples
        mabs = math.fsum(babs) / n_samples

        grid = variance_from_moments(thetas, m1, m2, 2.0 * mabs)
        j = int(np.argmin(grid))
        exact_min, exact_theta = min_variance_from_moments(m1, m2, 2.0 * mabs)
        if exact_min < grid[j]:
            var_min[i], theta_star[i] = exact_min, exact_theta
        else:
            var_min[i], theta_star[i] = grid[j], thetas[j]
        var_theta0[i] = grid[0]

        # Jackknife on the minimized variance.
        loo = n_samples - sizes
        m1_i = (fsum_complex(b1) - b1) / loo
        m2_i = (fsum_complex(b2) - b2) / loo
        mabs_i = (math.fsum(babs) - babs) / loo
        v_i, _ = min_variance_from_moments(m1_i, m2_i, 2.0 * mabs_i)
        stderr[i] = math.sqrt((n_blocks - 1) / n_blocks * np.sum((v_i - v_i.mean()) ** 2))

    return QuadratureSeries(
        times=times / params.tau,
        var_min=var_min,
        theta_star=theta_star,
        var_fixed_theta=var_theta0,
        stderr=stderr,
        label="classical-ensemble",
        params=params,
        extras={"n_samples": n_samples, "n_blocks": n_blocks},
    )
