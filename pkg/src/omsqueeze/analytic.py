"""Closed-form quadrature variances and the theta minimizer.

Five descriptions of the same cavity are evaluated here as explicit functions
of time and quadrature angle: the full quantum solution, the classical
phase-space ensemble, and the three mean-field hybrids (constant, Poisson and
Gaussian intensity seen by the oscillator).  The two revival approximations
valid near ``wt = N pi / 2k^2`` complete the set.

All evaluators broadcast over ``t`` and ``theta`` and stay finite for alpha
up to 50: every product of an exponential envelope with a bounded
trigonometric factor is computed as ``exp(sum of log-magnitudes) * cos(...)``
so that extreme envelopes underflow gracefully to zero instead of overflowing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import Envelopes, PhysicalParams, envelope_functions

__all__ = [
    "ClassicalEnvelope",
    "quantum_variance",
    "classical_variance",
    "meanfield_variance",
    "revival_approximation",
    "minimize_over_theta",
    "minimize_variance_curve",
    "variance_from_moments",
    "min_variance_from_moments",
    "sweep_variance_at_tau",
    "squeezed_contour_values",
    "blockade_check",
]

_REFINE_TOL = 1.0e-7  # golden-section bracket width; reported |dtheta| < 1e-6
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class ClassicalEnvelope:
    """The nine helper functions of (k, omega, t) entering the classical form.

    All are rational functions of the accumulated phase A(t); the d's damp,
    the (c, s) pairs rotate, and the phi's shift the quadrature phase.
    """

    d1: np.ndarray | float
    d2: np.ndarray | float
    d3: np.ndarray | float
    c1: np.ndarray | float
    c2: np.ndarray | float
    s1: np.ndarray | float
    s2: np.ndarray | float
    phi1: np.ndarray | float
    phi2: np.ndarray | float

    @classmethod
    def evaluate(cls, t, params: PhysicalParams) -> "ClassicalEnvelope":
        A = np.asarray(envelope_functions(t, params).A)
        A2 = A * A
        one = 1.0 + A2
        four = 4.0 + A2
        return cls(
            d1=2.0 * A2 / one,
            d2=2.0 * A2 / four,
            d3=16.0 / four**2,
            c1=(1.0 - 3.0 * A2) / one**3,
            c2=(256.0 - 384.0 * A2 + 16.0 * A2 * A2) / four**4,
            s1=(3.0 * A - A * A2) / one**3,
            s2=(512.0 * A - 128.0 * A * A2) / four**4,
            phi1=2.0 * A / one,
            phi2=4.0 * A / four,
        )


def _as_arrays(theta, t):
    theta = np.asarray(theta, dtype=float)
    t = np.asarray(t, dtype=float)
    return theta, t


def quantum_variance(theta, t, params: PhysicalParams):
    """Quadrature variance of the field under closed joint quantum evolution.

    Initial state: coherent field (amplitude alpha) times a mechanical thermal
    state with occupation ``params.nbar_q``.  Broadcasts over theta and t.
    """
    theta, t = _as_arrays(theta, t)
    env = envelope_functions(t, params)
    A, B = np.asarray(env.A), np.asarray(env.B)
    a2 = params.alpha**2
    with np.errstate(under="ignore"):
        e1 = np.exp(-a2 * (1.0 - np.cos(2.0 * A)) - 2.0 * B)
        e2 = np.exp(-2.0 * a2 * (1.0 - np.cos(A)) - B)
    var = (
        2.0 * a2 * e1 * np.cos(2.0 * A + a2 * np.sin(2.0 * A) - 2.0 * theta)
        - 2.0 * a2 * e2 * np.cos(A + 2.0 * a2 * np.sin(A) - 2.0 * theta)
        + 2.0 * a2 * (1.0 - e2)
        + 1.0
    )
    return var if var.ndim else float(var)


def classical_variance(theta, t, params: PhysicalParams):
    """Variance of the fully classical ensemble (closed form).

    The vacuum noise of the field enters through the sampling of the initial
    amplitude and is responsible for the +1 floor; the oscillator enters
    through C(t) built from ``params.sigma2_cl``.
    """
    theta, t = _as_arrays(theta, t)
    C = np.asarray(envelope_functions(t, params).C)
    f = ClassicalEnvelope.evaluate(t, params)
    a2 = params.alpha**2
    psi1 = a2 * f.phi1 - 2.0 * theta
    psi2 = 2.0 * a2 * f.phi2 - 2.0 * theta
    with np.errstate(under="ignore"):
        e1 = np.exp(-a2 * f.d1 - 2.0 * C)
        e2 = np.exp(-2.0 * a2 * f.d2 - C)
    var = (
        2.0 * a2 * e1 * (f.c1 * np.cos(psi1) - f.s1 * np.sin(psi1))
        - 2.0 * a2 * e2 * (f.c2 * np.cos(psi2) - f.s2 * np.sin(psi2))
        + 2.0 * a2 * (1.0 - f.d3 * e2)
        + 1.0
    )
    return var if var.ndim else float(var)


def meanfield_variance(theta, t, params: PhysicalParams, mode: str):
    """Variance when the oscillator sees only a c-number intensity I.

    mode selects the statistics of I: "constant" (the mean intensity),
    "poisson" (integer energy quanta, mean and variance alpha^2) or
    "gaussian" (continuous fluctuations, same mean and variance).  None of
    the three can squeeze: the field only undergoes a convex mixture of
    phase-space rotations.
    """
    theta, t = _as_arrays(theta, t)
    env = envelope_functions(t, params)
    A, C = np.asarray(env.A), np.asarray(env.C)
    a2 = params.alpha**2
    with np.errstate(under="ignore"):
        if mode == "constant":
            eC = np.exp(-C)
            var = 1.0 + 2.0 * a2 * (1.0 - eC) * (
                1.0 - np.cos(2.0 * a2 * A - 2.0 * theta) * eC
            )
        elif mode == "poisson":
            e1 = np.exp(-a2 * (1.0 - np.cos(2.0 * A)) - 2.0 * C)
            e2 = np.exp(-2.0 * a2 * (1.0 - np.cos(A)) - C)
            var = (
                2.0 * a2 * e1 * np.cos(a2 * np.sin(2.0 * A) - 2.0 * theta)
                - 2.0 * a2 * e2 * np.cos(2.0 * a2 * np.sin(A) - 2.0 * theta)
                + 2.0 * a2 * (1.0 - e2)
                + 1.0
            )
        elif mode == "gaussian":
            eG = np.exp(-a2 * A * A - C)
            var = 1.0 + 2.0 * a2 * (1.0 - eG) * (
                1.0 - np.cos(2.0 * a2 * A - 2.0 * theta) * eG
            )
        else:
            raise ValueError(f"unknown mean-field mode {mode!r}")
    var = np.asarray(var)
    return var if var.ndim else float(var)


def _revival_centers(params: PhysicalParams, which: str):
    # Center times in oscillator units: wt = N pi / (2 k^2), N odd (first)
    # or wt = N pi / k^2, N >= 1 (second).
    if params.k <= 0:
        raise ValueError("revival approximation needs k > 0")
    k2 = params.k**2
    if which == "first":
        spacing = math.pi / (2.0 * k2)

        def nearest(wt):
            n = np.round((wt / spacing - 1.0) / 2.0) * 2.0 + 1.0
            return np.maximum(n, 1.0) * spacing

    elif which == "second":
        spacing = math.pi / k2

        def nearest(wt):
            return np.maximum(np.round(wt / spacing), 1.0) * spacing

    else:
        raise ValueError(f"which must be 'first' or 'second', got {which!r}")
    return nearest


def revival_approximation(theta, t, params: PhysicalParams, which: str = "first",
                          window_periods: float = 10.0):
    """Two-term approximations of the quantum variance near the revivals.

    Valid only inside a window of +- ``window_periods`` mechanical periods
    around a revival center; out-of-window times raise with the nearest
    valid center (in units of tau) in the message.
    """
    theta, t = _as_arrays(theta, t)
    nearest = _revival_centers(params, which)
    wt = params.omega * np.asarray(t, dtype=float)
    centers = nearest(wt)
    off = np.abs(wt - centers)
    limit = 2.0 * math.pi * window_periods
    if np.any(off > limit):
        worst = np.argmax(np.atleast_1d(off))
        c_tau = np.atleast_1d(centers).ravel()[worst] / (2.0 * math.pi)
        raise ValueError(
            f"t outside the {which}-revival window (half-width {window_periods} periods); "
            f"nearest valid center is t = {c_tau:.6g} tau"
        )
    A = np.asarray(envelope_functions(t, params).A)
    a2 = params.alpha**2
    first_term = 2.0 * a2 * np.cos(2.0 * A + a2 * np.sin(2.0 * A) - 2.0 * theta)
    if which == "first":
        var = first_term + 2.0 * a2 + 1.0
    else:
        var = (
            first_term
            - 2.0 * a2 * np.cos(A + 2.0 * a2 * np.sin(A) - 2.0 * theta)
            + 1.0
        )
    var = np.asarray(var)
    return var if var.ndim else float(var)


def _check_finite(value, theta) -> None:
    if not np.all(np.isfinite(value)):
        raise FloatingPointError(
            f"variance function returned a non-finite value near theta={theta}"
        )


def minimize_over_theta(f: Callable[[float], float], grid_n: int = 256) -> tuple[float, float]:
    """Minimize a pi-periodic variance function over theta in [0, pi).

    Coarse grid (ties broken toward smaller theta) followed by golden-section
    refinement of the bracketing interval to |dtheta| < 1e-6.  The refined
    point only replaces the grid point if it is strictly smaller, so flat
    functions deterministically return the first grid angle.
    """
    if grid_n < 16:
        raise ValueError("grid_n must be >= 16")
    step = math.pi / grid_n
    thetas = np.arange(grid_n) * step
    vals = np.array([float(f(th)) for th in thetas])
    _check_finite(vals, "grid")
    j = int(np.argmin(vals))
    best_grid = (vals[j], thetas[j])

    a = thetas[j] - step
    b = thetas[j] + step
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = float(f(c % math.pi)), float(f(d % math.pi))
    _check_finite([fc, fd], (c, d))
    while b - a > _REFINE_TOL:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = float(f(c % math.pi))
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = float(f(d % math.pi))
        _check_finite([fc, fd], (c, d))
    x, fx = (c, fc) if fc < fd else (d, fd)
    if fx < best_grid[0]:
        x = x % math.pi
        if x >= math.pi - 1.0e-6:  # wrap-around wobble: canonical representative is 0
            x = 0.0
        return fx, x
    return float(best_grid[0]), float(best_grid[1])


def minimize_variance_curve(var_fn, times, grid_n: int = 256):
    """Row-wise theta minimization for a whole time series at once.

    ``var_fn(theta, t)`` must broadcast elementwise over equal-shaped arrays.
    Returns (var_min, theta_star) arrays aligned with ``times``.
    """
    times = np.asarray(times, dtype=float)
    step = math.pi / grid_n
    thetas = np.arange(grid_n) * step
    grid = var_fn(thetas[None, :], times[:, None])
    _check_finite(grid, "grid")
    j = np.argmin(grid, axis=1)
    grid_best = grid[np.arange(times.size), j]
    a = thetas[j] - step
    b = thetas[j] + step
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc = var_fn(c % math.pi, times)
    fd = var_fn(d % math.pi, times)
    for _ in range(32):  # 0.618^32 * 2*step << 1e-7
        take = fc < fd
        b = np.where(take, d, b)
        a = np.where(take, a, c)
        c_new = b - _GOLDEN * (b - a)
        d_new = a + _GOLDEN * (b - a)
        fc_new = var_fn(c_new % math.pi, times)
        fd_new = var_fn(d_new % math.pi, times)
        c, d, fc, fd = c_new, d_new, fc_new, fd_new
    _check_finite(fc, "refine")
    _check_finite(fd, "refine")
    take = fc < fd
    x = np.where(take, c, d) % math.pi
    fx = np.where(take, fc, fd)
    x[x >= math.pi - 1.0e-6] = 0.0
    use_grid = grid_best <= fx
    var_min = np.where(use_grid, grid_best, fx)
    theta_star = np.where(use_grid, thetas[j], x)
    return var_min, theta_star


def variance_from_moments(theta, m1, m2, x2_const):
    """Var of X_theta from the first two field moments.

    ``m1 = <a>``, ``m2 = <a^2>`` and ``x2_const`` is the angle-independent
    part of <X^2> (``2<n>+1`` for a quantum state, ``2 E|z|^2`` for a
    classical amplitude ensemble).
    """
    theta = np.asarray(theta, dtype=float)
    m = np.asarray(m2) - np.asarray(m1) ** 2
    rot = np.exp(-2.0j * theta)
    return np.real(x2_const) - 2.0 * np.abs(np.asarray(m1)) ** 2 + 2.0 * np.real(rot * m)


def min_variance_from_moments(m1, m2, x2_const):
    """Exact theta-minimum of the sinusoidal variance and its angle.

    Returns (var_min, theta_star) with theta_star in [0, pi).  When the
    oscillating part is zero at working precision the variance is flat and
    theta_star falls back to the canonical 0.
    """
    m1 = np.asarray(m1, dtype=complex)
    m = np.asarray(m2, dtype=complex) - m1**2
    base = np.real(np.asarray(x2_const)) - 2.0 * np.abs(m1) ** 2
    var_min = base - 2.0 * np.abs(m)
    theta = (np.angle(m) - math.pi) / 2.0
    theta = np.mod(theta, math.pi)
    flat = np.abs(m) <= 1.0e-12 * np.maximum(np.abs(base), 1.0)
    theta = np.where(flat, 0.0, theta)
    theta = np.where(theta >= math.pi - 1e-12, 0.0, theta)
    if np.ndim(var_min) == 0:
        return float(var_min), float(theta)
    return var_min, theta


def sweep_variance_at_tau(alpha_grid, k_grid, theta: float = 0.0,
                          nbar_q: float = 0.0, omega: float = 1.0) -> np.ndarray:
    """log10 of the quantum variance at t = tau on an (alpha, k) grid.

    Row i corresponds to ``alpha_grid[i]``, column j to ``k_grid[j]``.
    """
    alpha_grid = np.asarray(alpha_grid, dtype=float)
    k_grid = np.asarray(k_grid, dtype=float)
    if not (np.all(np.isfinite(alpha_grid)) and np.all(np.isfinite(k_grid))):
        raise ValueError("grids must be finite")
    out = np.empty((alpha_grid.size, k_grid.size))
    for i, alpha in enumerate(alpha_grid):
        for j, k in enumerate(k_grid):
            p = PhysicalParams(alpha=alpha, k=k, omega=omega, nbar_q=nbar_q)
            out[i, j] = math.log10(quantum_variance(theta, p.tau, p))
    return out


def squeezed_contour_values(alpha_grid, k_grid, matrix: np.ndarray, decimals: int = 6):
    """alpha*k products whose grid entries all fall below log10(Var) = 0.

    Helper for reading the sweep: entries sharing the same (rounded)
    alpha*k value form a contour; a contour counts as squeezed when every
    entry on it is below 1 in variance.
    """
    alpha_grid = np.asarray(alpha_grid, dtype=float)
    k_grid = np.asarray(k_grid, dtype=float)
    prod = np.round(np.outer(alpha_grid, k_grid), decimals)
    values = []
    for c in np.unique(prod):
        mask = prod == c
        if np.count_nonzero(mask) >= 2 and np.all(matrix[mask] < 0.0):
            values.append(float(c))
    return sorted(values)


@dataclass(frozen=True)
class BlockadeCheck:
    blockade_ratio: float
    cooperativity: float

    @property
    def blockade_ok(self) -> bool:
        return self.blockade_ratio > 1.0

    @property
    def cooperativity_ok(self) -> bool:
        return self.cooperativity > 1.0


def blockade_check(g0: float, omega: float, kappa: float, gamma_m: float) -> BlockadeCheck:
    """Single-photon blockade ratio g0^2/(w kappa) and cooperativity 2 g0^2/(kappa gamma)."""
    for name, rate in (("omega", omega), ("kappa", kappa), ("gamma_m", gamma_m)):
        if rate <= 0 or not math.isfinite(rate):
            raise ValueError(f"{name} must be a positive finite rate")
    if g0 < 0 or not math.isfinite(g0):
        raise ValueError("g0 must be >= 0 and finite")
    return BlockadeCheck(
        blockade_ratio=g0**2 / (omega * kappa),
        cooperativity=2.0 * g0**2 / (kappa * gamma_m),
    )
