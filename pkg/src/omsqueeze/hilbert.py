"""Truncated-Fock quantum machinery for the joint field-oscillator system.

The closed Hamiltonian commutes with the photon number, so the joint space
splits into photon-number blocks inside which the oscillator is a displaced
harmonic oscillator.  Closed evolution therefore needs no time stepping: each
block Hamiltonian (a real symmetric tridiagonal matrix) is diagonalized once
and propagated by exact eigenphases.  This is the brute-force oracle against
which every closed-form variance is validated, and it is deliberately
independent of those formulas.

Open dynamics come in two flavours:

* a dense fixed-step RK4 integrator of the full master equation on the joint
  space (mechanical bath and/or cavity decay) -- simple and general, meant
  for moderate dimensions;
* a block integrator that evolves only the photon coherence blocks needed
  for field moments, in the interaction picture of the exact block
  eigenphases.  The mechanical dissipator never mixes photon blocks and
  cavity decay only feeds block (n, n') from (n+1, n'+1), so the needed
  blocks form small closed chains.  This is what makes the damped revival
  studies affordable.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import gammaln

from .analytic import min_variance_from_moments, variance_from_moments
from .core import NumericalInvariantError, PhysicalParams, QuadratureSeries

__all__ = [
    "TruncatedJointState",
    "DensityOperator",
    "FieldMoments",
    "default_truncations",
    "coherent_amplitudes",
    "initial_joint_state",
    "evolve_closed",
    "closed_field_moments",
    "closed_variance_series",
    "field_moments",
    "field_variance_from_state",
    "evolve_lindblad_mech",
    "evolve_lindblad_cavity",
    "lindblad_variance_series",
    "BlockLindblad",
]

TAIL_FRACTION = 0.1
TAIL_THRESHOLD = 1.0e-8


# ---------------------------------------------------------------------------
# states and operators
# ---------------------------------------------------------------------------

def coherent_amplitudes(alpha: float, Np: int, renormalize: bool = True) -> np.ndarray:
    """Fock amplitudes of |alpha> (alpha real >= 0) on 0..Np.

    By default the truncated vector is renormalized so states built from it
    have unit norm; the discarded tail is the business of the tail-mass
    check, not of the norm invariant.
    """
    if alpha < 0:
        raise ValueError("alpha must be real and >= 0")
    n = np.arange(Np + 1)
    if alpha == 0.0:
        c = np.zeros(Np + 1)
        c[0] = 1.0
        return c
    logc = -0.5 * alpha**2 + n * math.log(alpha) - 0.5 * gammaln(n + 1.0)
    c = np.exp(logc)
    if renormalize:
        c /= math.sqrt(float(np.sum(c * c)))
    return c


def default_truncations(params: PhysicalParams) -> tuple[int, int]:
    """Default (Np, Nm) sized to the coherent amplitude and the per-photon
    mechanical displacement; always validated afterwards by the tail-mass
    invariant rather than trusted."""
    a = params.alpha
    Np = math.ceil(a * a + 8.0 * a + 10.0)
    width = 2.0 * params.k * Np
    Nm = max(20, math.ceil(width * width + 8.0 * width + 10.0))
    return Np, Nm


@dataclass
class TruncatedJointState:
    """Pure joint state psi[n_photon, m_phonon] on truncated Fock spaces."""

    amplitudes: np.ndarray
    t: float = 0.0
    tail_photon: float = 0.0
    tail_mech: float = 0.0

    @property
    def Np(self) -> int:
        return self.amplitudes.shape[0] - 1

    @property
    def Nm(self) -> int:
        return self.amplitudes.shape[1] - 1

    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    def tail_mass(self, fraction: float = TAIL_FRACTION) -> tuple[float, float]:
        """Probability in the top ``fraction`` of the photon / phonon index."""
        prob = np.abs(self.amplitudes) ** 2
        np_cut = self.amplitudes.shape[0] - max(1, int(self.amplitudes.shape[0] * fraction))
        nm_cut = self.amplitudes.shape[1] - max(1, int(self.amplitudes.shape[1] * fraction))
        return float(prob[np_cut:, :].sum()), float(prob[:, nm_cut:].sum())

    def reduced_field(self) -> "DensityOperator":
        rho = self.amplitudes @ self.amplitudes.conj().T
        return DensityOperator(matrix=rho, dims=(self.Np + 1,))

    def check(self, norm_tol: float = 1.0e-10) -> None:
        if abs(self.norm() - 1.0) > norm_tol:
            raise NumericalInvariantError("state norm", f"|norm-1| = {abs(self.norm()-1):.3e}")
        tp, tm = self.tail_mass()
        if tp > TAIL_THRESHOLD or tm > TAIL_THRESHOLD:
            raise NumericalInvariantError(
                "tail mass", f"photon {tp:.3e}, phonon {tm:.3e} exceed {TAIL_THRESHOLD}")


_CHECKPOINT_MAGIC = b"OMSQRHO1"


@dataclass
class DensityOperator:
    """Density matrix on the joint or field-only truncated space.

    ``dims`` records the tensor factors, e.g. ``(Np+1,)`` for a field state
    or ``(Np+1, Nm+1)`` for the joint system (photon index slowest).
    """

    matrix: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self) -> None:
        d = int(np.prod(self.dims))
        if self.matrix.shape != (d, d):
            raise ValueError(f"matrix shape {self.matrix.shape} inconsistent with dims {self.dims}")

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def check(self, herm_tol: float = 1.0e-10, trace_tol: float = 1.0e-8,
              eig_tol: float = 1.0e-8) -> None:
        err_h = float(np.max(np.abs(self.matrix - self.matrix.conj().T)))
        if err_h > herm_tol:
            raise NumericalInvariantError("hermiticity", f"max asymmetry {err_h:.3e}")
        err_t = abs(self.trace() - 1.0)
        if err_t > trace_tol:
            raise NumericalInvariantError("unit trace", f"|tr-1| = {err_t:.3e}")
        lo = float(np.linalg.eigvalsh(self.matrix)[0])
        if lo < -eig_tol:
            raise NumericalInvariantError("positivity", f"lowest eigenvalue {lo:.3e}")

    def partial_trace_mech(self) -> "DensityOperator":
        if len(self.dims) != 2:
            raise ValueError("partial_trace_mech needs a joint density operator")
        dp, dm = self.dims
        rho = self.matrix.reshape(dp, dm, dp, dm)
        return DensityOperator(matrix=np.einsum("imjm->ij", rho), dims=(dp,))

    def field_rho(self) -> np.ndarray:
        if len(self.dims) == 1:
            return self.matrix
        return self.partial_trace_mech().matrix

    # binary checkpoint: magic, version, ndims, dims (uint32 LE), then the
    # row-major complex128 matrix, little-endian.
    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(_CHECKPOINT_MAGIC)
            fh.write(struct.pack("<II", 1, len(self.dims)))
            fh.write(struct.pack(f"<{len(self.dims)}I", *self.dims))
            fh.write(np.ascontiguousarray(self.matrix, dtype="<c16").tobytes())

    @classmethod
    def load(cls, path) -> "DensityOperator":
        with open(path, "rb") as fh:
            magic = fh.read(8)
            if magic != _CHECKPOINT_MAGIC:
                raise ValueError("not a density-operator checkpoint")
            version, ndims = struct.unpack("<II", fh.read(8))
            if version != 1:
                raise ValueError(f"unsupported checkpoint version {version}")
            dims = struct.unpack(f"<{ndims}I", fh.read(4 * ndims))
            d = int(np.prod(dims))
            data = np.frombuffer(fh.read(16 * d * d), dtype="<c16").reshape(d, d)
        return cls(matrix=data.astype(np.complex128), dims=tuple(dims))


def initial_joint_state(params: PhysicalParams, Np: int, Nm: int,
                        mech_fock: int = 0) -> TruncatedJointState:
    """Coherent field (real alpha) times a mechanical Fock state."""
    psi = np.zeros((Np + 1, Nm + 1), dtype=complex)
    psi[:, mech_fock] = coherent_amplitudes(params.alpha, Np)
    return TruncatedJointState(amplitudes=psi)


# ---------------------------------------------------------------------------
# closed evolution: exact per-photon-block propagation
# ---------------------------------------------------------------------------

class _BlockDiagonalization:
    """Eigen-decompositions of the per-photon-number mechanical Hamiltonians.

    H_n = w b^dag b - k w n (b + b^dag) is real symmetric tridiagonal; V[n]
    holds its eigenvectors as columns (real), E[n] the eigenvalues.
    """

    def __init__(self, params: PhysicalParams, Np: int, Nm: int):
        self.params = params
        self.Np, self.Nm = Np, Nm
        M = Nm + 1
        diag = params.omega * np.arange(M, dtype=float)
        off = np.sqrt(np.arange(1, M, dtype=float))
        self.E = np.empty((Np + 1, M))
        self.V = np.empty((Np + 1, M, M))
        for n in range(Np + 1):
            w, v = eigh_tridiagonal(diag, -params.k * params.omega * n * off)
            self.E[n] = w
            self.V[n] = v

    def propagate(self, chi0: np.ndarray, t: float) -> np.ndarray:
        """psi[n] = exp(-i H_n t) chi0 for every block; shape (Np+1, Nm+1)."""
        proj = np.einsum("nam,a->nm", self.V, chi0)      # V^T chi0 per block
        proj = proj * np.exp(-1j * self.E * t)
        return np.einsum("nma,na->nm", self.V, proj)


def _mech_fock_vector(Nm: int, m: int) -> np.ndarray:
    chi = np.zeros(Nm + 1)
    if m > Nm:
        raise ValueError(f"mechanical Fock index {m} exceeds truncation {Nm}")
    chi[m] = 1.0
    return chi


def _ode_propagate(params: PhysicalParams, psi0: np.ndarray, t: float, dt: float) -> np.ndarray:
    """Step-integrator second oracle for the closed Schroedinger equation."""
    Np = psi0.shape[0] - 1
    Nm = psi0.shape[1] - 1
    M = Nm + 1
    diag = params.omega * np.arange(M, dtype=float)
    off = np.sqrt(np.arange(1, M, dtype=float))
    n_arr = np.arange(Np + 1, dtype=float)[:, None]

    def h_apply(psi):
        out = diag[None, :] * psi
        coup = np.zeros_like(psi)
        coup[:, :-1] += off[None, :] * psi[:, 1:]
        coup[:, 1:] += off[None, :] * psi[:, :-1]
        return out - params.k * params.omega * n_arr * coup

    steps = max(1, int(math.ceil(t / dt)))
    h = t / steps
    psi = psi0.astype(complex)
    for _ in range(steps):
        k1 = -1j * h_apply(psi)
        k2 = -1j * h_apply(psi + 0.5 * h * k1)
        k3 = -1j * h_apply(psi + 0.5 * h * k2)
        k4 = -1j * h_apply(psi + h * k3)
        psi = psi + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return psi


def thermal_weights(nbar: float, cutoff_mass: float = 1.0e-10) -> np.ndarray:
    """Geometric Fock weights of a thermal state, cut once the remaining
    mass drops below ``cutoff_mass``."""
    if nbar < 0:
        raise ValueError("nbar must be >= 0")
    if nbar == 0.0:
        return np.array([1.0])
    ratio = nbar / (nbar + 1.0)
    m_max = int(math.ceil(math.log(cutoff_mass) / math.log(ratio))) + 1
    m = np.arange(m_max + 1)
    return np.exp(m * math.log(ratio) - math.log(nbar + 1.0))


def _thermal_nm(params: PhysicalParams, Np: int, Nm: int | None, m_cut: int) -> int:
    """Mechanical truncation able to hold a displaced |m_cut> branch."""
    reach = math.sqrt(m_cut) + 2.0 * params.k * Np
    needed = math.ceil(reach * reach + 8.0 * reach + 10.0)
    if Nm is None:
        return max(default_truncations(params)[1], needed)
    if m_cut > Nm:
        raise ValueError(
            f"thermal mixture needs mechanical Fock states up to {m_cut} but "
            f"Nm={Nm}; enlarge Nm (roughly {needed}) or lower nbar")
    return Nm


@dataclass(frozen=True)
class FieldMoments:
    """First and second moments of the reduced field state."""

    a_mean: complex
    a2_mean: complex
    n_mean: float
    n2_mean: float

    def variance(self, theta) -> np.ndarray | float:
        return variance_from_moments(theta, self.a_mean, self.a2_mean,
                                     2.0 * self.n_mean + 1.0)

    def min_variance(self) -> tuple[float, float]:
        return min_variance_from_moments(self.a_mean, self.a2_mean,
                                         2.0 * self.n_mean + 1.0)


def _joint_moments(psi: np.ndarray) -> FieldMoments:
    n = np.arange(psi.shape[0], dtype=float)
    row_norm = np.sum(np.abs(psi) ** 2, axis=1)
    overlap1 = np.sum(psi[:-1].conj() * psi[1:], axis=1)
    overlap2 = np.sum(psi[:-2].conj() * psi[2:], axis=1)
    a_mean = np.sum(np.sqrt(n[1:]) * overlap1)
    a2_mean = np.sum(np.sqrt(n[2:] * (n[2:] - 1.0)) * overlap2)
    return FieldMoments(
        a_mean=complex(a_mean),
        a2_mean=complex(a2_mean),
        n_mean=float(np.sum(n * row_norm)),
        n2_mean=float(np.sum(n * n * row_norm)),
    )


def _rho_field_moments(rho: np.ndarray) -> FieldMoments:
    n = np.arange(rho.shape[0], dtype=float)
    diag = np.real(np.diag(rho))
    sub1 = np.diagonal(rho, offset=-1)   # rho[n+1, n]
    sub2 = np.diagonal(rho, offset=-2)
    a_mean = np.sum(np.sqrt(n[1:]) * sub1)
    a2_mean = np.sum(np.sqrt(n[2:] * (n[2:] - 1.0)) * sub2)
    return FieldMoments(
        a_mean=complex(a_mean),
        a2_mean=complex(a2_mean),
        n_mean=float(np.sum(n * diag)),
        n2_mean=float(np.sum(n * n * diag)),
    )


def field_moments(state) -> FieldMoments:
    """Field moments of a TruncatedJointState, DensityOperator or raw matrix."""
    if isinstance(state, TruncatedJointState):
        return _joint_moments(state.amplitudes)
    if isinstance(state, DensityOperator):
        return _rho_field_moments(state.field_rho())
    rho = np.asarray(state)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise TypeError("expected a state, density operator or square matrix")
    return _rho_field_moments(rho)


def field_variance_from_state(state, theta) -> np.ndarray | float:
    """Var(X_theta) of the reduced field state."""
    return field_moments(state).variance(theta)


def evolve_closed(params: PhysicalParams, t: float, Np: int | None = None,
                  Nm: int | None = None, mech_init="vacuum",
                  method: str = "block", dt: float = 1.0e-3,
                  check: bool = True):
    """Exact closed evolution of coherent field x mechanical initial state.

    ``mech_init`` is "vacuum", ``("fock", m)`` or ``("thermal", nbar)``.  The
    pure cases return a :class:`TruncatedJointState`; the thermal case
    averages the pure branches and returns the reduced-field
    :class:`DensityOperator`.  ``method="ode"`` switches the pure path to a
    step integrator (independent second oracle, small dimensions only).
    """
    if Np is None:
        Np = default_truncations(params)[0]
    if mech_init == "vacuum":
        mech_init = ("fock", 0)
    kind, arg = mech_init
    if kind == "thermal":
        Nm = _thermal_nm(params, Np, Nm, len(thermal_weights(float(arg))) - 1)
    elif Nm is None:
        Nm = default_truncations(params)[1]

    if kind == "fock":
        psi0 = initial_joint_state(params, Np, Nm, mech_fock=int(arg))
        if method == "block":
            blocks = _BlockDiagonalization(params, Np, Nm)
            psi = blocks.propagate(_mech_fock_vector(Nm, int(arg)), t)
            psi = psi * coherent_amplitudes(params.alpha, Np)[:, None]
        elif method == "ode":
            psi = _ode_propagate(params, psi0.amplitudes, t, dt)
            finer = _ode_propagate(params, psi0.amplitudes, t, dt / 2.0)
            drift = float(np.max(np.abs(psi - finer)))
            if not math.isfinite(drift) or drift > 1.0e-8:
                raise NumericalInvariantError(
                    "integrator convergence",
                    f"halving dt={dt:g} moved amplitudes by {drift:.3e}")
            psi = finer
        else:
            raise ValueError(f"unknown method {method!r}")
        state = TruncatedJointState(amplitudes=psi, t=t)
        state.tail_photon, state.tail_mech = state.tail_mass()
        if check:
            state.check()
        return state

    if kind == "thermal":
        weights = thermal_weights(float(arg))
        blocks = _BlockDiagonalization(params, Np, Nm)
        c = coherent_amplitudes(params.alpha, Np)
        rho = np.zeros((Np + 1, Np + 1), dtype=complex)
        tail = 0.0
        for m, w in enumerate(weights):
            psi = blocks.propagate(_mech_fock_vector(Nm, m), t) * c[:, None]
            rho += w * (psi @ psi.conj().T)
            st = TruncatedJointState(amplitudes=psi)
            tp, tm = st.tail_mass()
            tail += w * max(tp, tm)
        if check and tail > TAIL_THRESHOLD:
            raise NumericalInvariantError(
                "tail mass", f"thermal mixture weighted tail {tail:.3e}")
        return DensityOperator(matrix=rho, dims=(Np + 1,))

    raise ValueError(f"unknown mech_init {mech_init!r}")


def closed_field_moments(params: PhysicalParams, times, Np: int | None = None,
                         Nm: int | None = None, mech_init="vacuum",
                         check: bool = True) -> list[FieldMoments]:
    """Field moments at several times, reusing one block diagonalization."""
    if Np is None:
        Np = default_truncations(params)[0]
    if mech_init == "vacuum":
        mech_init = ("fock", 0)
    kind, arg = mech_init
    if kind == "thermal":
        Nm = _thermal_nm(params, Np, Nm, len(thermal_weights(float(arg))) - 1)
    elif Nm is None:
        Nm = default_truncations(params)[1]
    blocks = _BlockDiagonalization(params, Np, Nm)
    c = coherent_amplitudes(params.alpha, Np)

    if kind == "fock":
        branches = [(1.0, _mech_fock_vector(Nm, int(arg)))]
    elif kind == "thermal":
        branches = [(w, _mech_fock_vector(Nm, m))
                    for m, w in enumerate(thermal_weights(float(arg)))]
    else:
        raise ValueError(f"unknown mech_init {mech_init!r}")

    out = []
    for t in np.asarray(times, dtype=float):
        acc = np.zeros(4, dtype=complex)
        tail = 0.0
        for w, chi in branches:
            psi = blocks.propagate(chi, t) * c[:, None]
            fm = _joint_moments(psi)
            acc += w * np.array([fm.a_mean, fm.a2_mean, fm.n_mean, fm.n2_mean])
            tp, tm = TruncatedJointState(amplitudes=psi).tail_mass()
            tail += w * max(tp, tm)
        if check and tail > TAIL_THRESHOLD:
            raise NumericalInvariantError("tail mass", f"weighted tail {tail:.3e} at t={t}")
        out.append(FieldMoments(complex(acc[0]), complex(acc[1]),
                                float(acc[2].real), float(acc[3].real)))
    return out


def closed_variance_series(params: PhysicalParams, times, theta0: float = 0.0,
                           **kwargs) -> QuadratureSeries:
    """QuadratureSeries (min-theta and fixed-theta) from the closed oracle."""
    times = np.asarray(times, dtype=float)
    moments = closed_field_moments(params, times, **kwargs)
    var_min = np.empty(times.size)
    theta_star = np.empty(times.size)
    var0 = np.empty(times.size)
    for i, fm in enumerate(moments):
        var_min[i], theta_star[i] = fm.min_variance()
        var0[i] = fm.variance(theta0)
    return QuadratureSeries(times=times / params.tau, var_min=var_min,
                            theta_star=theta_star, var_fixed_theta=var0,
                            label="quantum-fock", params=params)


# ---------------------------------------------------------------------------
# dense master-equation integrator (joint space, moderate dimensions)
# ---------------------------------------------------------------------------

def _dense_joint_ops(params: PhysicalParams, Np: int, Nm: int) -> dict:
    dp, dm = Np + 1, Nm + 1
    a_small = np.diag(np.sqrt(np.arange(1, dp, dtype=float)), 1)
    b_small = np.diag(np.sqrt(np.arange(1, dm, dtype=float)), 1)
    eye_p, eye_m = np.eye(dp), np.eye(dm)
    a = np.kron(a_small, eye_m)
    b = np.kron(eye_p, b_small)
    num_a = a.conj().T @ a
    h = params.omega * (b.conj().T @ b) - (params.g0 / math.sqrt(2.0)) * num_a @ (b + b.conj().T)
    return {"a": a, "b": b, "h": h, "num_a": num_a}


def _lindblad_rhs_factory(params: PhysicalParams, ops: dict, mech: bool, cavity: bool):
    h = ops["h"]
    terms = []
    if mech and params.gamma_m > 0:
        b = ops["b"]
        bd = b.conj().T
        terms.append((params.gamma_m * (params.nbar_bath + 1.0), b, bd, bd @ b))
        if params.nbar_bath > 0:
            terms.append((params.gamma_m * params.nbar_bath, bd, b, b @ bd))
    if cavity and params.kappa > 0:
        a = ops["a"]
        ad = a.conj().T
        terms.append((params.kappa, a, ad, ad @ a))

    def rhs(rho):
        out = -1j * (h @ rho - rho @ h)
        for rate, L, Ld, LdL in terms:
            out += rate * (L @ rho @ Ld - 0.5 * (LdL @ rho + rho @ LdL))
        return out

    return rhs


def _rk4_density(rho: np.ndarray, t: float, dt: float, rhs) -> np.ndarray:
    steps = max(1, int(math.ceil(t / dt)))
    h = t / steps
    for _ in range(steps):
        k1 = rhs(rho)
        k2 = rhs(rho + 0.5 * h * k1)
        k3 = rhs(rho + 0.5 * h * k2)
        k4 = rhs(rho + h * k3)
        rho = rho + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return rho


def _evolve_lindblad(rho0: DensityOperator, t: float, params: PhysicalParams,
                     dt: float, mech: bool, cavity: bool) -> DensityOperator:
    if len(rho0.dims) != 2:
        raise ValueError("Lindblad evolution expects a joint density operator")
    Np, Nm = rho0.dims[0] - 1, rho0.dims[1] - 1
    ops = _dense_joint_ops(params, Np, Nm)
    rhs = _lindblad_rhs_factory(params, ops, mech=mech, cavity=cavity)
    rho = _rk4_density(rho0.matrix.astype(complex), t, dt, rhs)
    out = DensityOperator(matrix=rho, dims=rho0.dims)
    drift = abs(out.trace() - rho0.trace())
    if drift > 1.0e-6:
        raise NumericalInvariantError("trace preservation", f"drift {drift:.3e}")
    return out


def evolve_lindblad_mech(rho0: DensityOperator, t: float, params: PhysicalParams,
                         dt: float = 1.0e-3) -> DensityOperator:
    """Joint evolution with the mechanical-bath dissipators (rates gamma_m,
    occupancy nbar_bath).  Fixed-step RK4; trace drift beyond 1e-6 aborts."""
    return _evolve_lindblad(rho0, t, params, dt, mech=True, cavity=False)


def evolve_lindblad_cavity(rho0: DensityOperator, t: float, params: PhysicalParams,
                           dt: float = 1.0e-3, include_mech: bool = False) -> DensityOperator:
    """Joint evolution with cavity photon loss at rate kappa, optionally on
    top of the mechanical bath."""
    return _evolve_lindblad(rho0, t, params, dt, mech=include_mech, cavity=True)


# ---------------------------------------------------------------------------
# block integrator for field moments under dissipation
# ---------------------------------------------------------------------------

class BlockLindblad:
    """Photon-block master-equation integrator in the eigenphase picture.

    Tracks the coherence chains n - n' = 0, 1, 2 (all a field variance
    needs).  Within each block the exact closed dynamics is absorbed into
    phase masks built from the block eigenvalues, so the integrator only has
    to follow the slow dissipative flow; RK4 with dt of order 1e-2 periods
    is then accurate to well below 1e-6.

    State layout: each chain is a float array of shape (2, nb, M, M) holding
    the real and imaginary parts of the interaction-picture blocks.  In that
    picture all operator sandwiches (mechanical dissipators and the photon
    shift of cavity decay) are real matrices, so the heavy products run as
    paired real GEMMs; the oscillating eigenphases enter only through two
    elementwise phase rotations per block per stage.
    """

    def __init__(self, params: PhysicalParams, Np: int, Nm: int,
                 mech_fock: int = 0, include_mech: bool = True,
                 include_cavity: bool = False):
        self.params = params
        self.Np, self.Nm = Np, Nm
        self.include_mech = include_mech and params.gamma_m > 0
        self.include_cavity = include_cavity and params.kappa > 0
        M = Nm + 1
        blocks = _BlockDiagonalization(params, Np, Nm)
        self.E, V = blocks.E, blocks.V
        b = np.zeros((M, M))
        b[np.arange(M - 1), np.arange(1, M)] = np.sqrt(np.arange(1, M, dtype=float))
        beta = np.einsum("nam,ab,nbk->nmk", V, b, V)        # V^T b V, real
        nu = np.einsum("nmk,nml->nkl", beta, beta)          # beta^T beta
        mu = np.einsum("nkm,nlm->nkl", beta, beta)          # beta beta^T
        if Np >= 1:
            self.G = np.einsum("nam,nab->nmb", V[:-1], V[1:])   # V[n]^T V[n+1]
        else:
            self.G = np.zeros((0, M, M))
        self.V = V
        chi0 = _mech_fock_vector(Nm, mech_fock)
        self.u = np.einsum("nam,a->nm", V, chi0)
        c = coherent_amplitudes(params.alpha, Np)
        self.c = c

        self.deltas = (0, 1, 2)
        self.chains: dict[int, np.ndarray] = {}
        self._idx: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        self._ops: dict[int, dict[str, np.ndarray]] = {}
        for delta in self.deltas:
            npr = np.arange(Np + 1 - delta)
            nl = npr + delta
            self._idx[delta] = (nl, npr)
            Y0 = (c[nl] * c[npr])[:, None, None] * \
                np.einsum("im,ik->imk", self.u[nl], self.u[npr])
            state = np.zeros((2,) + Y0.shape)
            state[0] = Y0
            self.chains[delta] = state
            ops = {
                "bl": np.ascontiguousarray(beta[nl]),
                "brT": np.ascontiguousarray(beta[npr].transpose(0, 2, 1)),
                "nul": np.ascontiguousarray(nu[nl]),
                "nur": np.ascontiguousarray(nu[npr]),
            }
            if params.nbar_bath > 0:
                ops["blT"] = np.ascontiguousarray(beta[nl].transpose(0, 2, 1))
                ops["br"] = np.ascontiguousarray(beta[npr])
                ops["mul"] = np.ascontiguousarray(mu[nl])
                ops["mur"] = np.ascontiguousarray(mu[npr])
            if self.include_cavity and nl.size > 1:
                ops["gl"] = np.ascontiguousarray(self.G[nl[:-1]])
                ops["grT"] = np.ascontiguousarray(self.G[npr[:-1]].transpose(0, 2, 1))
                ops["fac"] = np.sqrt((nl[:-1] + 1.0) * (npr[:-1] + 1.0))[:, None, None]
            ops["decay"] = 0.5 * params.kappa * (nl + npr).astype(float)[:, None, None]
            self._ops[delta] = ops
        self.t = 0.0

    def _trig(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        phase = self.E * t
        return np.cos(phase), np.sin(phase)

    def _rhs(self, t: float, chains: dict[int, np.ndarray]) -> dict[int, np.ndarray]:
        p = self.params
        cosE, sinE = self._trig(t)
        g_down = p.gamma_m * (p.nbar_bath + 1.0)
        g_up = p.gamma_m * p.nbar_bath
        out = {}
        for delta, Y in chains.items():
            nl, npr = self._idx[delta]
            ops = self._ops[delta]
            # phase mask conj(P_l)_a P_r_b = exp(i (E_r[b] - E_l[a]) t)
            phr = cosE[nl][:, :, None] * cosE[npr][:, None, :] \
                + sinE[nl][:, :, None] * sinE[npr][:, None, :]
            phi = cosE[nl][:, :, None] * sinE[npr][:, None, :] \
                - sinE[nl][:, :, None] * cosE[npr][:, None, :]
            Z = np.empty_like(Y)
            Z[0] = Y[0] * phr - Y[1] * phi
            Z[1] = Y[0] * phi + Y[1] * phr
            X = np.zeros_like(Y)
            if self.include_mech:
                X += g_down * (ops["bl"] @ Z @ ops["brT"]
                               - 0.5 * (ops["nul"] @ Z + Z @ ops["nur"]))
                if g_up > 0:
                    X += g_up * (ops["blT"] @ Z @ ops["br"]
                                 - 0.5 * (ops["mul"] @ Z + Z @ ops["mur"]))
            if self.include_cavity:
                X -= ops["decay"] * Z
                if "gl" in ops:
                    X[:, :-1] += p.kappa * ops["fac"] * (ops["gl"] @ Z[:, 1:] @ ops["grT"])
            dY = np.empty_like(Y)
            dY[0] = X[0] * phr + X[1] * phi
            dY[1] = X[1] * phr - X[0] * phi
            out[delta] = dY
        return out

    def _step(self, t: float, h: float) -> None:
        y0 = self.chains
        k1 = self._rhs(t, y0)
        k2 = self._rhs(t + 0.5 * h, {d: y0[d] + 0.5 * h * k1[d] for d in y0})
        k3 = self._rhs(t + 0.5 * h, {d: y0[d] + 0.5 * h * k2[d] for d in y0})
        k4 = self._rhs(t + h, {d: y0[d] + h * k3[d] for d in y0})
        self.chains = {d: y0[d] + (h / 6.0) * (k1[d] + 2 * k2[d] + 2 * k3[d] + k4[d])
                       for d in y0}

    def advance(self, t_target: float, dt: float) -> None:
        seg = t_target - self.t
        if seg < 0:
            raise ValueError("cannot integrate backwards")
        if seg == 0:
            return
        steps = max(1, int(math.ceil(seg / dt - 1.0e-12)))
        h = seg / steps
        for _ in range(steps):
            self._step(self.t, h)
            self.t += h
        self.t = t_target

    def _complex_chain(self, delta: int) -> np.ndarray:
        Y = self.chains[delta]
        return Y[0] + 1j * Y[1]

    def moments(self) -> FieldMoments:
        P = np.exp(1j * self.E * self.t)
        Y0 = self._complex_chain(0)
        trace_n = np.einsum("iaa->i", Y0).real
        n = np.arange(self.Np + 1, dtype=float)
        n_mean = float(np.sum(n * trace_n))
        n2_mean = float(np.sum(n * n * trace_n))

        def chain_traces(delta):
            Y = self._complex_chain(delta)
            nl, npr = self._idx[delta]
            if delta == 1:
                Gd = self.G[npr]
            else:
                Gd = self.G[npr] @ self.G[npr + 1]
            K = (P[npr, :, None] * P.conj()[nl, None, :]) * Gd
            return np.einsum("iab,iba->i", Y, K)

        tr1 = chain_traces(1)
        tr2 = chain_traces(2)
        n_idx = np.arange(1, self.Np + 1, dtype=float)
        a_mean = np.sum(np.sqrt(n_idx) * tr1)
        n_idx2 = np.arange(2, self.Np + 1, dtype=float)
        a2_mean = np.sum(np.sqrt(n_idx2 * (n_idx2 - 1.0)) * tr2)
        return FieldMoments(complex(a_mean), complex(a2_mean), n_mean, n2_mean)

    def trace(self) -> float:
        return float(np.einsum("iaa->i", self.chains[0][0]).sum())

    def populations(self) -> tuple[np.ndarray, np.ndarray]:
        """(photon, phonon) marginal populations at the current time."""
        cosE, sinE = self._trig(self.t)
        Y0 = self._complex_chain(0)
        photon = np.einsum("iaa->i", Y0).real
        phonon = np.zeros(self.Nm + 1)
        for i in range(Y0.shape[0]):
            ph = np.exp(-1j * (self.E[i][:, None] - self.E[i][None, :]) * self.t)
            X = ph * Y0[i]
            phonon += np.einsum("ma,ab,mb->m", self.V[i], X, self.V[i]).real
        return photon, phonon

    def check_tails(self) -> None:
        photon, phonon = self.populations()
        cut_p = len(photon) - max(1, int(len(photon) * TAIL_FRACTION))
        cut_m = len(phonon) - max(1, int(len(phonon) * TAIL_FRACTION))
        tp = float(photon[cut_p:].sum())
        tm = float(phonon[cut_m:].sum())
        if tp > TAIL_THRESHOLD or tm > TAIL_THRESHOLD:
            raise NumericalInvariantError(
                "tail mass", f"photon {tp:.3e}, phonon {tm:.3e} at t={self.t:.4g}")
        drift = abs(self.trace() - 1.0)
        if drift > 1.0e-6 and not self.include_cavity:
            raise NumericalInvariantError("trace preservation", f"drift {drift:.3e}")


def lindblad_variance_series(params: PhysicalParams, times, Np: int | None = None,
                             Nm: int | None = None, dt: float | None = None,
                             include_mech: bool = True, include_cavity: bool = False,
                             theta0: float = 0.0, check_every: int = 10) -> QuadratureSeries:
    """Field variance vs time under dissipation via the block integrator.

    Times in oscillator units, strictly increasing.  ``dt`` defaults to
    5e-3 periods; halve it and compare to confirm convergence on new
    parameter regimes.
    """
    times = np.asarray(times, dtype=float)
    if Np is None or Nm is None:
        dNp, dNm = default_truncations(params)
        Np = Np if Np is not None else dNp
        Nm = Nm if Nm is not None else dNm
    if dt is None:
        dt = 5.0e-3 * params.tau
    eng = BlockLindblad(params, Np, Nm, include_mech=include_mech,
                        include_cavity=include_cavity)
    var_min = np.empty(times.size)
    theta_star = np.empty(times.size)
    var0 = np.empty(times.size)
    extras = {"n_mean": np.empty(times.size), "a_mean": np.empty(times.size, complex),
              "a2_mean": np.empty(times.size, complex)}
    for i, t in enumerate(times):
        eng.advance(t, dt)
        fm = eng.moments()
        var_min[i], theta_star[i] = fm.min_variance()
        var0[i] = fm.variance(theta0)
        extras["n_mean"][i] = fm.n_mean
        extras["a_mean"][i] = fm.a_mean
        extras["a2_mean"][i] = fm.a2_mean
        if check_every and i % check_every == 0:
            eng.check_tails()
    label = "quantum"
    if include_mech and params.gamma_m > 0:
        label += f"-damped-g{params.gamma_m:g}-n{params.nbar_bath:g}"
    if include_cavity and params.kappa > 0:
        label += f"-kappa{params.kappa:g}"
    return QuadratureSeries(times=times / params.tau, var_min=var_min,
                            theta_star=theta_star, var_fixed_theta=var0,
                            label=label, params=params, extras=extras)
