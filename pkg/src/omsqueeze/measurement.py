"""Hybrid quantum-classical continuous-measurement model.

A classical oscillator continuously measures the intracavity intensity at
rate ``Gamma``.  One Ito step updates the conditional field state rho with

* a phase-rotation commutator term driven by the oscillator position,
* number dephasing ``-Gamma dt [n, [n, rho]]``,
* the measurement innovation ``sqrt(2 Gamma)({n, rho} - 2<n> rho) dW``,
* optionally standard cavity photon loss at rate kappa,

and the oscillator with ``dx = w p dt``, ``dp = -w x dt + g0 <n> dt +
g0/(2 sqrt(2 Gamma)) dW``.  The SAME Wiener increment dW appears in the field
innovation and in the momentum kick; that correlation is the measurement
back-action and must never be split.

Everything is diagonal in the number basis apart from the trivial shift of
photon loss, so a step is elementwise on the density matrix.  Trajectories
evolve in batch; with numba available the stepping loop runs as one fused
kernel over (trajectory, matrix element), otherwise a vectorized numpy path
computes the same update (identical math, slightly different rounding).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .analytic import min_variance_from_moments, variance_from_moments
from .core import NumericalInvariantError, PhysicalParams, QuadratureSeries, RandomSource
from .hilbert import TAIL_FRACTION, TAIL_THRESHOLD, coherent_amplitudes, default_truncations

try:
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without the extra
    _HAVE_NUMBA = False

__all__ = [
    "HybridTrajectoryState",
    "TrajectoryRecord",
    "EnsembleResult",
    "CollapseSummary",
    "sde_step",
    "run_trajectory",
    "ensemble_average",
    "collapse_diagnostics",
]


def _validate_step(params: PhysicalParams, dt: float) -> None:
    if dt <= 0:
        raise ValueError("dt must be > 0")
    if params.Gamma * dt > 1.0e-2 or params.omega * dt > 1.0e-2:
        raise ValueError(
            "dt too large: require Gamma*dt <= 1e-2 and omega*dt <= 1e-2, got "
            f"Gamma*dt={params.Gamma*dt:.3g}, omega*dt={params.omega*dt:.3g}")


def _backaction_coef(params: PhysicalParams) -> float:
    if params.g0 == 0.0:
        return 0.0
    if params.Gamma <= 0.0:
        raise ValueError(
            "Gamma = 0 with g0 > 0 makes the back-action noise term diverge")
    return params.g0 / (2.0 * math.sqrt(2.0 * params.Gamma))


@dataclass
class HybridTrajectoryState:
    """Conditional field state plus oscillator phase-space point."""

    rho: np.ndarray
    x: float
    p: float
    t: float
    stream: RandomSource
    gen: np.random.Generator = None

    def __post_init__(self) -> None:
        if self.gen is None:
            self.gen = self.stream.generator()

    @property
    def dim(self) -> int:
        return self.rho.shape[0]

    def check(self) -> None:
        tr = float(np.real(np.trace(self.rho)))
        if abs(tr - 1.0) > 1.0e-8:
            raise NumericalInvariantError("unit trace", f"|tr-1| = {abs(tr-1):.3e}")
        herm = float(np.max(np.abs(self.rho - self.rho.conj().T)))
        if herm > 1.0e-10:
            raise NumericalInvariantError("hermiticity", f"asymmetry {herm:.3e}")
        if not (math.isfinite(self.x) and math.isfinite(self.p)):
            raise NumericalInvariantError("finite oscillator state")


def initial_hybrid_state(params: PhysicalParams, stream: RandomSource,
                         Np: int | None = None, init_mode: str = "zero") -> HybridTrajectoryState:
    """Truncated coherent field with the chosen oscillator initial condition.

    Stream layout: thermal-matched mode draws (x0, p0) first, then the step
    noise; zero mode draws step noise only.
    """
    if Np is None:
        Np = default_truncations(params)[0]
    c = coherent_amplitudes(params.alpha, Np)
    rho = np.outer(c, c).astype(complex)
    state = HybridTrajectoryState(rho=rho, x=0.0, p=0.0, t=0.0, stream=stream)
    if init_mode == "thermal-matched":
        sd = math.sqrt(params.sigma2_cl)
        state.x = float(state.gen.normal(0.0, sd))
        state.p = float(state.gen.normal(0.0, sd))
    elif init_mode != "zero":
        raise ValueError(f"unknown init_mode {init_mode!r}")
    return state


# ---------------------------------------------------------------------------
# batched stepping
# ---------------------------------------------------------------------------

def _em_chunk_numpy(rho, x, p, dW, dt, params: PhysicalParams, kappa: float,
                    aborted) -> None:
    """Advance the whole batch by dW.shape[1] Euler-Maruyama steps in place.

    The measurement terms use the plain Ito increments; the oscillator-driven
    phase rotation exp(i g0 x dt [n, .]) is applied exactly.  Its Euler
    linearization has modulus above one and compounds over long horizons on
    the far coherences, where dephasing no longer wins against it.
    """
    T, N = rho.shape[0], rho.shape[1]
    idx = np.arange(N, dtype=float)
    D2 = (idx[:, None] - idx[None, :]) ** 2
    P2 = idx[:, None] + idx[None, :]
    shift = np.sqrt(np.outer(idx[1:], idx[1:]))
    g0, w, Gamma = params.g0, params.omega, params.Gamma
    s2g = math.sqrt(2.0 * Gamma)
    back = _backaction_coef(params)
    live = ~aborted
    for s in range(dW.shape[1]):
        dw = dW[:, s]
        diag = np.einsum("tii->ti", rho).real
        expn = diag @ idx
        fr = (1.0
              - (Gamma * dt) * D2[None, :, :]
              - (0.5 * kappa * dt) * P2[None, :, :]
              + (s2g * dw)[:, None, None] * (P2[None, :, :] - 2.0 * expn[:, None, None]))
        new = rho * fr
        if kappa > 0.0:
            new[:, :-1, :-1] += (kappa * dt) * shift[None, :, :] * rho[:, 1:, 1:]
        if g0 != 0.0:
            u = np.exp(1j * np.outer(g0 * dt * x, idx))
            new *= u[:, :, None] * u.conj()[:, None, :]
        x_old = x.copy()
        x += w * p * dt
        p += -w * x_old * dt + g0 * expn * dt + back * dw
        new = 0.5 * (new + new.conj().transpose(0, 2, 1))
        tr = np.einsum("tii->t", new).real
        bad = tr < 0.5
        if np.any(bad & live):
            aborted |= bad
            live = ~aborted
            tr = np.where(bad, 1.0, tr)
        new /= tr[:, None, None]
        rho[live] = new[live]


if _HAVE_NUMBA:

    @numba.njit(parallel=True, cache=True)
    def _em_chunk_numba(rho, x, p, dW, dt, g0, w, Gamma, kappa, back, aborted):  # pragma: no cover - compiled
        T, N = rho.shape[0], rho.shape[1]
        n_steps = dW.shape[1]
        s2g = math.sqrt(2.0 * Gamma)
        for traj in numba.prange(T):
            if aborted[traj]:
                continue
            ur = np.empty(N)
            ui = np.empty(N)
            for s in range(n_steps):
                dw = dW[traj, s]
                expn = 0.0
                for i in range(N):
                    expn += rho[traj, i, i].real * i
                xt = x[traj]
                pt = p[traj]
                x[traj] = xt + w * pt * dt
                p[traj] = pt - w * xt * dt + g0 * expn * dt + back * dw
                # exact phase rotation u_i = exp(i g0 x dt i); measurement
                # terms Euler on the upper triangle, mirrored exactly
                phi = g0 * dt * xt
                cph = math.cos(phi)
                sph = math.sin(phi)
                ur[0] = 1.0
                ui[0] = 0.0
                for i in range(1, N):
                    ur[i] = ur[i - 1] * cph - ui[i - 1] * sph
                    ui[i] = ur[i - 1] * sph + ui[i - 1] * cph
                for i in range(N):
                    for j in range(i, N):
                        fr = (1.0 - Gamma * dt * (i - j) ** 2
                              - 0.5 * kappa * dt * (i + j)
                              + s2g * dw * ((i + j) - 2.0 * expn))
                        v = rho[traj, i, j]
                        nr = v.real * fr
                        ni = v.imag * fr
                        if kappa > 0.0 and i < N - 1 and j < N - 1:
                            nxt = rho[traj, i + 1, j + 1]
                            fac = kappa * dt * math.sqrt((i + 1.0) * (j + 1.0))
                            nr += fac * nxt.real
                            ni += fac * nxt.imag
                        # multiply by u_i * conj(u_j)
                        wr = ur[i] * ur[j] + ui[i] * ui[j]
                        wi = ui[i] * ur[j] - ur[i] * ui[j]
                        nr2 = nr * wr - ni * wi
                        ni2 = nr * wi + ni * wr
                        rho[traj, i, j] = complex(nr2, ni2)
                        if i != j:
                            rho[traj, j, i] = complex(nr2, -ni2)
                tr = 0.0
                for i in range(N):
                    tr += rho[traj, i, i].real
                if tr < 0.5:
                    aborted[traj] = True
                    break
                inv = 1.0 / tr
                for i in range(N):
                    for j in range(N):
                        rho[traj, i, j] = rho[traj, i, j] * inv


def _advance_chunk(rho, x, p, dW, dt, params, kappa, aborted, backend: str) -> None:
    if backend == "numba":
        _em_chunk_numba(rho, x, p, dW, dt, params.g0, params.omega,
                        params.Gamma, kappa, _backaction_coef(params), aborted)
    else:
        _em_chunk_numpy(rho, x, p, dW, dt, params, kappa, aborted)


def default_backend() -> str:
    return "numba" if _HAVE_NUMBA else "numpy"


def sde_step(state: HybridTrajectoryState, dt: float, params: PhysicalParams,
             include_cavity_decay: bool = False,
             dW: float | None = None) -> HybridTrajectoryState:
    """One Euler-Maruyama step of the coupled field/oscillator equations.

    Draws dW ~ Normal(0, dt) from the state's stream unless an explicit
    increment is supplied (useful for term-by-term checks).  Returns the same
    state object, updated in place, with t advanced by dt.
    """
    _validate_step(params, dt)
    kappa = params.kappa if include_cavity_decay else 0.0
    if dW is None:
        dW = float(state.gen.normal(0.0, math.sqrt(dt)))
    rho = state.rho[None, :, :]
    x = np.array([state.x])
    p = np.array([state.p])
    aborted = np.zeros(1, dtype=bool)
    _em_chunk_numpy(rho, x, p, np.array([[dW]]), dt, params, kappa, aborted)
    if aborted[0]:
        raise NumericalInvariantError(
            "trace collapse", f"trace fell below 0.5 at t={state.t:.4g}")
    state.rho = rho[0]
    state.x, state.p = float(x[0]), float(p[0])
    state.t += dt
    return state


# ---------------------------------------------------------------------------
# trajectory records and ensembles
# ---------------------------------------------------------------------------

@dataclass
class TrajectoryRecord:
    """Per-sample-time observables of one measurement trajectory."""

    times: np.ndarray                 # units of tau
    var_theta_grid: np.ndarray        # (n_times, theta_grid_n)
    var_min: np.ndarray
    theta_star: np.ndarray
    n_mean: np.ndarray
    n_var: np.ndarray
    purity: np.ndarray
    x: np.ndarray
    p: np.ndarray
    final_populations: np.ndarray
    params: PhysicalParams | None = None


@dataclass
class EnsembleResult:
    """Batched trajectory moments plus the two variance readouts.

    ``conditional`` averages each trajectory's own minimized variance (the
    per-realization squeezing the model predicts); ``mixture`` is the
    variance of the trajectory-averaged state.  Both are provided because
    either convention may be wanted downstream; the conditional one is the
    primary readout.
    """

    times: np.ndarray                 # units of tau
    n_mean: np.ndarray                # (n_times, n_traj)
    a_mean: np.ndarray
    a2_mean: np.ndarray
    n2_mean: np.ndarray
    purity: np.ndarray
    x: np.ndarray
    p: np.ndarray
    aborted: np.ndarray
    final_populations: np.ndarray     # (n_traj, dim)
    params: PhysicalParams = None
    extras: dict = field(default_factory=dict)

    @property
    def n_traj(self) -> int:
        return self.n_mean.shape[1]

    def _per_traj_min(self):
        x2c = 2.0 * self.n_mean + 1.0
        return min_variance_from_moments(self.a_mean, self.a2_mean, x2c)

    def squeeze_flags(self, threshold: float = 1.0 - 1.0e-9) -> np.ndarray:
        """Per-trajectory flag: did this realization squeeze at any sample?

        The threshold sits a hair below 1 so the exact initial value never
        counts as squeezing through rounding.
        """
        vmin, _ = self._per_traj_min()
        return np.any(vmin < threshold, axis=0)

    def series_conditional(self, label: str = "hybrid") -> QuadratureSeries:
        """Trajectory-averaged conditional variance at a common angle.

        At each sample time the per-trajectory Var(theta) curves are averaged
        and the mean curve is minimized; all realizations are read out along
        that one quadrature, as a homodyne detector with a fixed local-
        oscillator phase would.  var_min is the minimum of the mean curve,
        stderr the trajectory scatter of Var(theta*) over sqrt(n); per-
        realization squeezing lives in :meth:`squeeze_flags`.
        """
        osc_traj = self.a2_mean - self.a_mean**2
        const_traj = 2.0 * self.n_mean + 1.0 - 2.0 * np.abs(self.a_mean) ** 2
        osc = osc_traj.mean(axis=1)
        const = const_traj.mean(axis=1)
        var_min, theta_star = min_variance_from_moments(
            np.zeros_like(osc), osc, const)
        rot = np.exp(-2.0j * theta_star)[:, None]
        var_traj_at_star = const_traj + 2.0 * np.real(rot * osc_traj)
        n_traj = osc_traj.shape[1]
        stderr = var_traj_at_star.std(axis=1, ddof=1) / math.sqrt(n_traj)
        var0 = const + 2.0 * np.real(osc)
        return QuadratureSeries(times=self.times, var_min=var_min,
                                theta_star=theta_star, var_fixed_theta=var0,
                                stderr=stderr, label=label, params=self.params,
                                extras={"interpretation": "conditional-common-theta"})

    def series_mixture(self, label: str = "hybrid-mixture") -> QuadratureSeries:
        """Variance of the ensemble-averaged density operator."""
        m1 = self.a_mean.mean(axis=1)
        m2 = self.a2_mean.mean(axis=1)
        nbar = self.n_mean.mean(axis=1)
        var_min, theta_star = min_variance_from_moments(m1, m2, 2.0 * nbar + 1.0)
        var0 = variance_from_moments(0.0, m1, m2, 2.0 * nbar + 1.0)
        return QuadratureSeries(times=self.times, var_min=var_min,
                                theta_star=theta_star, var_fixed_theta=var0,
                                stderr=None, label=label, params=self.params,
                                extras={"interpretation": "mixture"})

    def mean_photon_number(self) -> tuple[np.ndarray, np.ndarray]:
        """Ensemble mean of <n> and its standard error per sample time."""
        mean = self.n_mean.mean(axis=1)
        se = self.n_mean.std(axis=1, ddof=1) / math.sqrt(self.n_traj)
        return mean, se


def _record_moments(rho: np.ndarray):
    N = rho.shape[1]
    idx = np.arange(N, dtype=float)
    diag = np.einsum("tii->ti", rho).real
    n_mean = diag @ idx
    n2_mean = diag @ (idx * idx)
    sub1 = np.einsum("tii->ti", rho[:, 1:, :-1])
    a_mean = sub1 @ np.sqrt(idx[1:])
    sub2 = np.einsum("tii->ti", rho[:, 2:, :-2])
    a2_mean = sub2 @ np.sqrt(idx[2:] * (idx[2:] - 1.0))
    purity = np.einsum("tij,tij->t", rho, rho.conj()).real
    return n_mean, n2_mean, a_mean, a2_mean, purity


def _check_tail(rho: np.ndarray, t: float) -> None:
    N = rho.shape[1]
    cut = N - max(1, int(N * TAIL_FRACTION))
    diag = np.einsum("tii->ti", rho).real
    tail = float(diag[:, cut:].sum(axis=1).max())
    if tail > TAIL_THRESHOLD:
        raise NumericalInvariantError("tail mass", f"photon tail {tail:.3e} at t={t:.4g}")


def ensemble_average(params: PhysicalParams, n_traj: int, t_final: float,
                     dt: float, init_mode: str = "zero",
                     rng: RandomSource | None = None,
                     record_stride: float | None = None,
                     Np: int | None = None,
                     include_cavity_decay: bool = False,
                     backend: str | None = None,
                     max_abort_fraction: float = 0.01) -> EnsembleResult:
    """Evolve ``n_traj`` independent trajectories and collect their moments.

    Trajectory i uses stream ``rng.stream(i)``, so results are deterministic
    for a given (master_seed, n_traj, dt) regardless of batching.  Aborted
    trajectories (trace collapse) are excluded and counted; more than
    ``max_abort_fraction`` of them fails the run.
    """
    if n_traj < 1:
        raise ValueError("n_traj must be >= 1")
    if rng is None:
        rng = RandomSource(0)
    _validate_step(params, dt)
    if record_stride is None:
        record_stride = 0.1 * params.tau
    stride = max(1, int(round(record_stride / dt)))
    n_steps = int(round(t_final / dt))
    n_records = n_steps // stride
    backend = backend or default_backend()
    if backend == "numba" and not _HAVE_NUMBA:
        raise ValueError("numba backend requested but numba is unavailable")
    kappa = params.kappa if include_cavity_decay else 0.0
    if Np is None:
        Np = default_truncations(params)[0]

    gens = []
    x = np.zeros(n_traj)
    p = np.zeros(n_traj)
    c = coherent_amplitudes(params.alpha, Np)
    rho1 = np.outer(c, c).astype(complex)
    rho = np.tile(rho1, (n_traj, 1, 1))
    sd = math.sqrt(params.sigma2_cl)
    for i in range(n_traj):
        g = rng.stream(i).generator()
        if init_mode == "thermal-matched":
            x[i] = g.normal(0.0, sd)
            p[i] = g.normal(0.0, sd)
        elif init_mode != "zero":
            raise ValueError(f"unknown init_mode {init_mode!r}")
        gens.append(g)

    aborted = np.zeros(n_traj, dtype=bool)
    times = np.empty(n_records + 1)
    shape = (n_records + 1, n_traj)
    rec = {name: np.empty(shape) for name in ("n_mean", "n2_mean", "purity", "x", "p")}
    rec_a = np.empty(shape, dtype=complex)
    rec_a2 = np.empty(shape, dtype=complex)

    def record(slot: int, t_now: float) -> None:
        n_mean, n2_mean, a_mean, a2_mean, purity = _record_moments(rho)
        times[slot] = t_now / params.tau
        rec["n_mean"][slot] = n_mean
        rec["n2_mean"][slot] = n2_mean
        rec["purity"][slot] = purity
        rec["x"][slot] = x
        rec["p"][slot] = p
        rec_a[slot] = a_mean
        rec_a2[slot] = a2_mean

    record(0, 0.0)
    sqrt_dt = math.sqrt(dt)
    t_now = 0.0
    for r in range(n_records):
        this = stride if r < n_records - 1 else n_steps - stride * (n_records - 1)
        dW = np.empty((n_traj, this))
        for i, g in enumerate(gens):
            dW[i] = g.normal(0.0, sqrt_dt, size=this)
        _advance_chunk(rho, x, p, dW, dt, params, kappa, aborted, backend)
        t_now += this * dt
        record(r + 1, t_now)
        if r % 10 == 0:
            _check_tail(rho[~aborted] if aborted.any() else rho, t_now)

    n_aborted = int(aborted.sum())
    if n_aborted > max_abort_fraction * n_traj:
        raise NumericalInvariantError(
            "trajectory abort rate", f"{n_aborted}/{n_traj} trajectories collapsed")
    keep = ~aborted
    final_pops = np.einsum("tii->ti", rho).real

    return EnsembleResult(
        times=times,
        n_mean=rec["n_mean"][:, keep],
        a_mean=rec_a[:, keep],
        a2_mean=rec_a2[:, keep],
        n2_mean=rec["n2_mean"][:, keep],
        purity=rec["purity"][:, keep],
        x=rec["x"][:, keep],
        p=rec["p"][:, keep],
        aborted=aborted,
        final_populations=final_pops[keep],
        params=params,
        extras={"backend": backend, "init_mode": init_mode, "dt": dt,
                "n_traj": n_traj, "master_seed": rng.master_seed,
                "include_cavity_decay": include_cavity_decay},
    )


def run_trajectory(params: PhysicalParams, t_final: float, dt: float,
                   x0: float = 0.0, p0: float = 0.0,
                   rng: RandomSource | None = None,
                   record_stride: float | None = None,
                   theta_grid_n: int = 64,
                   Np: int | None = None,
                   include_cavity_decay: bool = False,
                   backend: str | None = None) -> TrajectoryRecord:
    """Single trajectory with an explicit oscillator initial condition."""
    if rng is None:
        rng = RandomSource(0)
    _validate_step(params, dt)
    if record_stride is None:
        record_stride = 0.1 * params.tau
    stride = max(1, int(round(record_stride / dt)))
    n_steps = int(round(t_final / dt))
    n_records = n_steps // stride
    backend = backend or default_backend()
    kappa = params.kappa if include_cavity_decay else 0.0
    if Np is None:
        Np = default_truncations(params)[0]
    c = coherent_amplitudes(params.alpha, Np)
    rho = np.outer(c, c).astype(complex)[None, :, :].copy()
    x = np.array([float(x0)])
    p = np.array([float(p0)])
    gen = rng.generator()
    aborted = np.zeros(1, dtype=bool)

    thetas = np.arange(theta_grid_n) * (math.pi / theta_grid_n)
    times = np.empty(n_records + 1)
    var_grid = np.empty((n_records + 1, theta_grid_n))
    var_min = np.empty(n_records + 1)
    theta_star = np.empty(n_records + 1)
    n_mean = np.empty(n_records + 1)
    n_var = np.empty(n_records + 1)
    purity = np.empty(n_records + 1)
    xs = np.empty(n_records + 1)
    ps = np.empty(n_records + 1)

    def record(slot: int, t_now: float) -> None:
        nm, n2m, am, a2m, pur = _record_moments(rho)
        times[slot] = t_now / params.tau
        x2c = 2.0 * nm[0] + 1.0
        var_grid[slot] = variance_from_moments(thetas, am[0], a2m[0], x2c)
        var_min[slot], theta_star[slot] = min_variance_from_moments(am[0], a2m[0], x2c)
        n_mean[slot] = nm[0]
        n_var[slot] = n2m[0] - nm[0] ** 2
        purity[slot] = pur[0]
        xs[slot], ps[slot] = x[0], p[0]

    record(0, 0.0)
    sqrt_dt = math.sqrt(dt)
    t_now = 0.0
    for r in range(n_records):
        this = stride if r < n_records - 1 else n_steps - stride * (n_records - 1)
        dW = gen.normal(0.0, sqrt_dt, size=(1, this))
        _advance_chunk(rho, x, p, dW, dt, params, kappa, aborted, backend)
        if aborted[0]:
            raise NumericalInvariantError("trace collapse",
                                          f"trajectory aborted near t={t_now:.4g}")
        t_now += this * dt
        record(r + 1, t_now)

    return TrajectoryRecord(
        times=times, var_theta_grid=var_grid, var_min=var_min,
        theta_star=theta_star, n_mean=n_mean, n_var=n_var, purity=purity,
        x=xs, p=ps, final_populations=np.einsum("tii->ti", rho).real[0],
        params=params,
    )


@dataclass(frozen=True)
class CollapseSummary:
    dominant_fock: int
    dominant_population: float
    time_to_90_purity: float | None
    squeeze_window: tuple[float, float] | None


def collapse_diagnostics(record: TrajectoryRecord) -> CollapseSummary:
    """Summarize how far a trajectory has collapsed toward a Fock state."""
    dom = int(np.argmax(record.final_populations))
    dom_pop = float(record.final_populations[dom])
    above = record.times[record.purity >= 0.9]
    t90 = float(above[0]) if above.size else None
    squeezed = record.times[record.var_min < 1.0 - 1.0e-9]
    window = (float(squeezed[0]), float(squeezed[-1])) if squeezed.size else None
    return CollapseSummary(dominant_fock=dom, dominant_population=dom_pop,
                           time_to_90_purity=t90, squeeze_window=window)
