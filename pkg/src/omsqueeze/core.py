"""Shared parameterization, unit conventions and data model.

Everything downstream works in dimensionless oscillator units: the mechanical
angular frequency ``omega`` sets the time unit (default 1), all output times
are reported in units of the mechanical period ``tau = 2*pi/omega``, and the
quadrature convention is ``X_theta = a e^{-i theta} + a^dag e^{i theta}`` so
that a coherent state has variance 1 and the phase-space quadratures of the
vacuum have variance 1/2 each.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import constants

__all__ = [
    "PhysicalParams",
    "QuadratureSeries",
    "RandomSource",
    "Envelopes",
    "NumericalInvariantError",
    "envelope_functions",
    "thermal_occupation_quantum",
    "thermal_occupation_classical",
]


class NumericalInvariantError(RuntimeError):
    """A numerical invariant (trace, norm, tail mass, convergence) failed."""

    def __init__(self, invariant: str, detail: str = ""):
        self.invariant = invariant
        super().__init__(f"numerical invariant violated: {invariant}" + (f" ({detail})" if detail else ""))


def _require_finite(**values: float) -> None:
    for name, value in values.items():
        if not math.isfinite(value):
            raise ValueError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class PhysicalParams:
    """Dimensionless model parameters.

    Parameters
    ----------
    alpha : float
        Coherent amplitude of the intracavity field, real and >= 0.
    k : float
        Rescaled coupling ``g0 / (sqrt(2) * omega)``, >= 0.
    omega : float
        Mechanical angular frequency; defines the time unit (default 1).
    nbar_q : float
        Thermal occupation of the initial mechanical state in the quantum
        description (Bose-Einstein).
    sigma2_cl : float
        Initial classical oscillator variance per quadrature.  1/2 mimics the
        quantum ground state ("vacuum-matched"); the classical equipartition
        value ``k_B T / (hbar omega)`` recovers the thermal classical model.
    Gamma : float
        Information-gain rate of the continuous intensity measurement in the
        hybrid model, in units of omega.
    kappa : float
        Cavity field decay rate.
    gamma_m : float
        Mechanical decay rate.
    nbar_bath : float
        Occupation of the mechanical bath.
    """

    alpha: float = 0.0
    k: float = 0.0
    omega: float = 1.0
    nbar_q: float = 0.0
    sigma2_cl: float = 0.5
    Gamma: float = 0.0
    kappa: float = 0.0
    gamma_m: float = 0.0
    nbar_bath: float = 0.0

    def __post_init__(self) -> None:
        _require_finite(
            alpha=self.alpha, k=self.k, omega=self.omega, nbar_q=self.nbar_q,
            sigma2_cl=self.sigma2_cl, Gamma=self.Gamma, kappa=self.kappa,
            gamma_m=self.gamma_m, nbar_bath=self.nbar_bath,
        )
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0 (real amplitude convention)")
        if self.k < 0:
            raise ValueError("k must be >= 0")
        if self.omega <= 0:
            raise ValueError("omega must be > 0")
        for name in ("nbar_q", "sigma2_cl", "Gamma", "kappa", "gamma_m", "nbar_bath"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @property
    def g0(self) -> float:
        """Single-photon coupling rate, ``sqrt(2) * k * omega``."""
        return math.sqrt(2.0) * self.k * self.omega

    @property
    def tau(self) -> float:
        """Mechanical period ``2*pi/omega`` (natural unit of output times)."""
        return 2.0 * math.pi / self.omega

    def with_(self, **changes) -> "PhysicalParams":
        """Return a copy with the given fields replaced."""
        return replace(self, **changes)


@dataclass
class QuadratureSeries:
    """Time-resolved quadrature-variance data for one description.

    ``times`` are in units of ``tau``; ``var_min`` is the theta-minimized
    variance, ``theta_star`` the minimizing angle in [0, pi), and
    ``var_fixed_theta`` the variance at the fixed reference angle (theta = 0
    unless noted in the metadata).  ``stderr`` is present for Monte Carlo
    estimates and None for closed forms.
    """

    times: np.ndarray
    var_min: np.ndarray
    theta_star: np.ndarray
    var_fixed_theta: np.ndarray
    stderr: np.ndarray | None = None
    label: str = ""
    params: PhysicalParams | None = None
    extras: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=float)
        self.var_min = np.asarray(self.var_min, dtype=float)
        self.theta_star = np.asarray(self.theta_star, dtype=float)
        self.var_fixed_theta = np.asarray(self.var_fixed_theta, dtype=float)
        n = self.times.size
        for name in ("var_min", "theta_star", "var_fixed_theta"):
            if getattr(self, name).size != n:
                raise ValueError(f"{name} length {getattr(self, name).size} != times length {n}")
        if self.stderr is not None:
            self.stderr = np.asarray(self.stderr, dtype=float)
            if self.stderr.size != n:
                raise ValueError("stderr length mismatch")
            if np.any(self.stderr < 0):
                raise ValueError("stderr entries must be >= 0")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        if np.any(self.var_min <= 0) or np.any(self.var_fixed_theta <= 0):
            raise ValueError("variance entries must be > 0")
        if np.any((self.theta_star < 0) | (self.theta_star >= np.pi)):
            raise ValueError("theta_star must lie in [0, pi)")


@dataclass(frozen=True)
class RandomSource:
    """Counter-based random stream, reproducible across runs and platforms.

    The generator algorithm is pinned to numpy's Philox (Philox-4x64-10)
    keyed by ``(master_seed, stream_index)``.  Distinct stream indices give
    statistically independent streams, so ensembles can hand stream i to
    trajectory i regardless of how work is batched across workers.  Do not
    change the algorithm silently: every stored seed in every manifest relies
    on it.
    """

    master_seed: int
    stream_index: int = 0

    def __post_init__(self) -> None:
        if not (0 <= self.master_seed < 2**64):
            raise ValueError("master_seed must fit in 64 bits")
        if self.stream_index < 0 or self.stream_index >= 2**64:
            raise ValueError("stream_index must be a non-negative 64-bit integer")

    def generator(self) -> np.random.Generator:
        key = np.array([self.master_seed, self.stream_index], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def stream(self, index: int) -> "RandomSource":
        """Derive the stream with the given index under the same master seed."""
        return RandomSource(self.master_seed, index)


def thermal_occupation_quantum(T: float, omega_SI: float) -> float:
    """Bose-Einstein occupation ``1/(exp(hbar w / kB T) - 1)``.

    Parameters are in SI units (kelvin, rad/s).  Returns 0 at T = 0.
    """
    _require_finite(T=T, omega_SI=omega_SI)
    if T < 0:
        raise ValueError("temperature must be >= 0")
    if omega_SI <= 0:
        raise ValueError("omega_SI must be > 0")
    if T == 0.0:
        return 0.0
    x = constants.hbar * omega_SI / (constants.k * T)
    return 1.0 / math.expm1(x)


def thermal_occupation_classical(T: float, omega_SI: float) -> float:
    """Equipartition occupation ``kB T / (hbar w)`` (kelvin, rad/s)."""
    _require_finite(T=T, omega_SI=omega_SI)
    if T < 0:
        raise ValueError("temperature must be >= 0")
    if omega_SI <= 0:
        raise ValueError("omega_SI must be > 0")
    return constants.k * T / (constants.hbar * omega_SI)


@dataclass(frozen=True)
class Envelopes:
    """The three time envelopes steering every closed-form variance.

    A is the accumulated intensity-dependent (Kerr-like) phase per photon
    number squared; B the quantum thermal decoherence envelope; C its
    classical counterpart built from the initial oscillator variance.
    B and C vanish at integer multiples of the mechanical period, where field
    and oscillator decouple; A grows without bound.
    """

    A: np.ndarray | float
    B: np.ndarray | float
    C: np.ndarray | float


def envelope_functions(t, params: PhysicalParams) -> Envelopes:
    """Evaluate A(t), B(t), C(t) for scalar or array times (oscillator units).

    A = 2 k^2 (wt - sin wt);  B = 2 k^2 (2 nbar_q + 1)(1 - cos wt);
    C = 4 sigma2_cl k^2 (1 - cos wt).
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be >= 0")
    wt = params.omega * t
    k2 = params.k**2
    A = 2.0 * k2 * (wt - np.sin(wt))
    one_minus_cos = 1.0 - np.cos(wt)
    B = 2.0 * k2 * (2.0 * params.nbar_q + 1.0) * one_minus_cos
    C = 4.0 * params.sigma2_cl * k2 * one_minus_cos
    if t.ndim == 0:
        return Envelopes(float(A), float(B), float(C))
    return Envelopes(A, B, C)
