"""Preset experiments, parameter sweeps and CSV/JSON emission.

A run is described by a single JSON config document; command-line flags
override individual fields by path (``--params.alpha 20``).  Presets expand
to fully explicit configs, and the expanded form is echoed into the output
directory next to the results so every CSV is reproducible from its own
directory.

Exit codes: 0 success, 2 config error, 3 numerical-invariant failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .core import (NumericalInvariantError, PhysicalParams, QuadratureSeries,
                   RandomSource)
from . import analytic, classical, hilbert, measurement

ENV_OUTDIR = "OMSQUEEZE_OUTDIR"

_PARAM_FIELDS = {f.name for f in dataclasses.fields(PhysicalParams)}


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

_DEFAULTS = {
    "preset": "custom",
    "descriptions": None,          # None = every curve the preset defines
    "params": {},
    "windows": None,               # [start, stop, step] triples, units of tau
    "n_samples": 100000,           # classical Monte Carlo
    "n_traj": 500,                 # hybrid trajectories
    "dt_over_tau": 1.0e-3,         # SDE step
    "lindblad_dt_over_tau": 0.02,  # block master-equation step
    "record_stride_over_tau": 0.1,
    "theta_grid_n": 256,
    "np_trunc": None,
    "nm_trunc": None,
    "master_seed": 20201115,
    "backend": None,
    "alpha_grid": None,
    "k_grid": None,
    "sweep_theta": 0.0,
    "outdir": None,
}


def _merge_overrides(config: dict, pairs: list[tuple[str, str]]) -> dict:
    for path, raw in pairs:
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = config
        keys = path.split(".")
        for key in keys[:-1]:
            node = node.setdefault(key, {})
            if not isinstance(node, dict):
                raise ConfigError(f"cannot override through non-object field {key!r}")
        node[keys[-1]] = value
    return config


def expand_config(raw: dict) -> dict:
    """Fill defaults, apply the preset, and validate."""
    config = dict(_DEFAULTS)
    config.update(raw or {})
    preset = config.get("preset", "custom")
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}; available: {sorted(PRESETS)}")
    config = PRESETS[preset].apply_defaults(config)
    unknown = set(config["params"]) - _PARAM_FIELDS
    if unknown:
        raise ConfigError(f"unknown physical parameters: {sorted(unknown)}")
    try:
        params = PhysicalParams(**config["params"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid params: {exc}") from None
    config["params"] = dataclasses.asdict(params)
    if preset != "sweep" and not config["windows"]:
        raise ConfigError("empty time grid")
    for w in config["windows"] or []:
        if len(w) != 3 or w[1] < w[0] or w[2] <= 0:
            raise ConfigError(f"bad time window {w!r}; want [start, stop, step] in tau units")
    if not isinstance(config["master_seed"], int) or not (0 <= config["master_seed"] < 2**63):
        raise ConfigError("master_seed must be a non-negative integer below 2^63")
    return config


def _window_times(config: dict) -> np.ndarray:
    pieces = []
    for start, stop, step in config["windows"]:
        n = int(math.floor((stop - start) / step + 1.0e-9))
        pieces.append(start + step * np.arange(n + 1))
    times = np.concatenate(pieces)
    times = np.unique(np.round(times, 12))
    return times


def _params(config: dict) -> PhysicalParams:
    return PhysicalParams(**config["params"])


# ---------------------------------------------------------------------------
# curve runners
# ---------------------------------------------------------------------------

def _analytic_series(var_fn, times_tau: np.ndarray, params: PhysicalParams,
                     label: str, grid_n: int) -> QuadratureSeries:
    t = times_tau * params.tau
    var_min, theta_star = analytic.minimize_variance_curve(
        lambda th, tt: var_fn(th, tt, params), t, grid_n=grid_n)
    var0 = var_fn(0.0, t, params)
    return QuadratureSeries(times=times_tau, var_min=var_min, theta_star=theta_star,
                            var_fixed_theta=var0, label=label, params=params)


def _curve_analytic(kind: str):
    table = {
        "Q": analytic.quantum_variance,
        "C": analytic.classical_variance,
        "SC1": lambda th, t, p: analytic.meanfield_variance(th, t, p, "constant"),
        "SC2": lambda th, t, p: analytic.meanfield_variance(th, t, p, "poisson"),
        "SC3": lambda th, t, p: analytic.meanfield_variance(th, t, p, "gaussian"),
    }
    return table[kind]


def _run_fig1b_curve(label: str, config: dict, curve_seed: int):
    params = _params(config)
    times = _window_times(config)
    return [_analytic_series(_curve_analytic(label), times, params, label,
                             config["theta_grid_n"])]


def _hybrid_curves(label: str, config: dict, curve_seed: int):
    params = _params(config)
    spec = {
        "hybrid-k0":           {"k": 0.0, "init": "zero", "kappa": 0.0},
        "hybrid-zero-init":    {"init": "zero", "kappa": 0.0},
        "hybrid-thermal-init": {"init": "thermal-matched", "kappa": 0.0},
        "hybrid-kappa1.0":     {"init": "zero", "kappa": params.omega},
    }[label]
    p = params.with_(k=spec.get("k", params.k), kappa=spec["kappa"])
    times = _window_times(config)
    t_final = times[-1] * p.tau
    rng = RandomSource(config["master_seed"], curve_seed * 1_000_000)
    result = measurement.ensemble_average(
        p, config["n_traj"], t_final, config["dt_over_tau"] * p.tau,
        init_mode=spec["init"], rng=rng,
        record_stride=config["record_stride_over_tau"] * p.tau,
        Np=config["np_trunc"], include_cavity_decay=spec["kappa"] > 0,
        backend=config["backend"])
    cond = result.series_conditional(label=label)
    mix = result.series_mixture(label=label + "-mixture")
    return [cond, mix]


def _run_quantum_kappa(label: str, config: dict, curve_seed: int):
    params = _params(config).with_(kappa=0.3)
    times = _window_times(config)
    qs = hilbert.lindblad_variance_series(
        params, times * params.tau,
        Np=config["np_trunc"] or 24, Nm=config["nm_trunc"] or 45,
        dt=config["lindblad_dt_over_tau"] * params.tau,
        include_mech=False, include_cavity=True)
    qs.label = label
    return [qs]


def _run_thermal_curve(label: str, config: dict, curve_seed: int):
    params = _params(config)
    times = _window_times(config)
    if label == "kerr":
        # end-of-period envelope: the field decouples from the oscillator at
        # integer periods, where the variance matches a pure Kerr medium.
        m_max = int(math.floor(times[-1] + 1.0e-9))
        periods = np.arange(0.0, m_max + 1.0)
        return [_analytic_series(analytic.quantum_variance, periods, params,
                                 label, config["theta_grid_n"])]
    nbar = float(label.removeprefix("nth"))
    p = params.with_(nbar_q=nbar)
    return [_analytic_series(analytic.quantum_variance, times, p, label,
                             config["theta_grid_n"])]


def _run_damping_curve(label: str, config: dict, curve_seed: int):
    params = _params(config)
    times = _window_times(config)
    if label == "gamma0":
        return [_analytic_series(analytic.quantum_variance, times, params,
                                 label, config["theta_grid_n"])]
    g, nb = label.split("-")
    p = params.with_(gamma_m=float(g.removeprefix("gamma")),
                     nbar_bath=float(nb.removeprefix("nbath")))
    qs = hilbert.lindblad_variance_series(
        p, times * p.tau, Np=config["np_trunc"] or 24,
        Nm=config["nm_trunc"] or 45,
        dt=config["lindblad_dt_over_tau"] * p.tau, include_mech=True)
    qs.label = label
    return [qs]


def _run_classical_mc(label: str, config: dict, curve_seed: int):
    params = _params(config)
    times = _window_times(config)
    rng = RandomSource(config["master_seed"], curve_seed * 1_000_000)
    qs = classical.ensemble_variance(params, config["n_samples"],
                                     times * params.tau,
                                     config["theta_grid_n"], rng)
    qs.label = label
    return [qs]


def _run_theta_trace(label: str, config: dict, curve_seed: int):
    if label == "hybrid":
        sub = dict(config)
        sub["params"] = dict(config["params"], alpha=2.0, k=0.1, Gamma=0.01)
        sub["windows"] = [[0.0, 10.0, config["record_stride_over_tau"]]]
        series = _hybrid_curves("hybrid-zero-init", sub, curve_seed)[0]
        series.label = label
        return [series]
    params = _params(config)
    if label == "quantum-early":
        times = np.arange(0.0, 10.0 + 1e-9, 0.02)
    else:  # quantum-second-revival
        center = 1.0 / (2.0 * params.k**2)
        times = np.arange(center - 50.0, center + 50.0 + 1e-9, 0.05)
    return [_analytic_series(analytic.quantum_variance, times, params, label,
                             config["theta_grid_n"])]


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------

class Preset:
    def __init__(self, name: str, blurb: str, curves: dict, defaults: dict):
        self.name = name
        self.blurb = blurb
        self.curves = curves
        self.defaults = defaults

    def apply_defaults(self, config: dict) -> dict:
        out = dict(config)
        for key, value in self.defaults.items():
            if key == "params":
                merged = dict(value)
                merged.update(out.get("params") or {})
                out["params"] = merged
            elif out.get(key) is None:
                out[key] = value
        return out

    def selected(self, config: dict) -> list[str]:
        wanted = config.get("descriptions") or list(self.curves)
        unknown = set(wanted) - set(self.curves)
        if unknown:
            raise ConfigError(f"unknown descriptions {sorted(unknown)} for preset "
                              f"{self.name!r}; available: {list(self.curves)}")
        return list(wanted)


PRESETS = {
    "fig1b": Preset(
        "fig1b",
        "five rival descriptions at alpha=20, k=0.01 over the squeezing and revival windows",
        {name: _run_fig1b_curve for name in ("Q", "C", "SC1", "SC2", "SC3")},
        {"params": {"alpha": 20.0, "k": 0.01},
         "windows": [[0.0, 10.0, 0.05], [2450.0, 2550.0, 0.05], [4950.0, 5050.0, 0.05]]},
    ),
    "fig1c": Preset(
        "fig1c",
        "hybrid measurement model at alpha=2 plus open-cavity comparisons",
        {"hybrid-k0": _hybrid_curves,
         "hybrid-zero-init": _hybrid_curves,
         "hybrid-thermal-init": _hybrid_curves,
         "hybrid-kappa1.0": _hybrid_curves,
         "quantum-kappa0.3": _run_quantum_kappa},
        {"params": {"alpha": 2.0, "k": 0.1, "Gamma": 0.01},
         "windows": [[0.0, 10.0, 0.1]],
         "lindblad_dt_over_tau": 0.01},
    ),
    "thermal": Preset(
        "thermal",
        "quantum variance for thermal initial occupations, with the end-of-period Kerr envelope",
        {"nth0": _run_thermal_curve, "nth1": _run_thermal_curve,
         "nth10": _run_thermal_curve, "nth100": _run_thermal_curve,
         "kerr": _run_thermal_curve},
        {"params": {"alpha": 2.0, "k": 0.1},
         "windows": [[0.0, 30.0, 0.02]]},
    ),
    "damping": Preset(
        "damping",
        "mechanical-bath damping of the first quantum revival",
        {"gamma0": _run_damping_curve,
         "gamma0.01-nbath0": _run_damping_curve,
         "gamma0.01-nbath0.5": _run_damping_curve},
        {"params": {"alpha": 2.0, "k": 0.1},
         "windows": [[0.0, 30.0, 0.05]]},
    ),
    "clmc": Preset(
        "clmc",
        "classical Monte Carlo ensemble against the closed form",
        {"classical-mc": _run_classical_mc},
        {"params": {"alpha": 2.0, "k": 0.1},
         "windows": [[0.0, 5.0, 0.5]]},
    ),
    "sweep": Preset(
        "sweep",
        "log10 variance at t = tau over an (alpha, k) grid",
        {},
        {"alpha_grid": list(np.arange(1.0, 41.0)),
         "k_grid": sorted({round(float(k), 6) for k in np.geomspace(0.002, 0.1, 34)}
                          | {0.005, 0.00625, 0.01, 0.0125, 0.02, 0.025}),
         "windows": [[1.0, 1.0, 1.0]]},
    ),
    "theta_trace": Preset(
        "theta_trace",
        "minimizing angle vs time for the quantum and hybrid descriptions",
        {"quantum-early": _run_theta_trace,
         "quantum-second-revival": _run_theta_trace,
         "hybrid": _run_theta_trace},
        {"params": {"alpha": 20.0, "k": 0.01},
         "windows": [[0.0, 10.0, 0.02]],
         "n_traj": 200},
    ),
    "custom": Preset(
        "custom",
        "user-selected analytic curves on a user time grid",
        {name: _run_fig1b_curve for name in ("Q", "C", "SC1", "SC2", "SC3")},
        {},
    ),
}

# reference points marked on the sweep (the four end-of-period cases shown
# with the thermal comparison); all lie on the alpha*k = 0.2 diagonal.
SWEEP_REFERENCE_POINTS = [(2.0, 0.1), (10.0, 0.02), (20.0, 0.01), (40.0, 0.005)]


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_series_csv(path: Path, series: QuadratureSeries) -> None:
    lines = ["t_over_tau,var_min,theta_star,var_theta0,stderr"]
    stderr = series.stderr
    for i, t in enumerate(series.times):
        err = "" if stderr is None else _fmt(stderr[i])
        lines.append(",".join([_fmt(t), _fmt(series.var_min[i]),
                               _fmt(series.theta_star[i]),
                               _fmt(series.var_fixed_theta[i]), err]))
    _atomic_write(path, "\n".join(lines) + "\n")


def write_matrix_csv(path: Path, alpha_grid, k_grid, matrix: np.ndarray) -> None:
    lines = ["alpha\\k," + ",".join(_fmt(k) for k in k_grid)]
    for i, alpha in enumerate(alpha_grid):
        lines.append(",".join([_fmt(alpha)] + [_fmt(v) for v in matrix[i]]))
    _atomic_write(path, "\n".join(lines) + "\n")


def _resolve_outdir(config: dict) -> Path:
    outdir = config.get("outdir") or os.environ.get(ENV_OUTDIR) or "omsqueeze-out"
    path = Path(outdir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _manifest_base(config: dict) -> dict:
    return {
        "tool": "omsqueeze",
        "version": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": sys.version.split()[0],
        "config": config,
        "master_seed": config["master_seed"],
        "invariant_checks": {
            "tail_mass_threshold": 1e-8,
            "trace_tolerance": 1e-6,
            "outcome": "passed (violations abort the run with exit code 3)",
        },
        "curves": {},
    }


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_run(config: dict) -> int:
    preset = PRESETS[config["preset"]]
    outdir = _resolve_outdir(config)
    _atomic_write(outdir / "config.json", json.dumps(config, indent=2, sort_keys=True) + "\n")
    manifest = _manifest_base(config)
    if config["preset"] == "fig1c":
        manifest["column_notes"] = (
            "hybrid-* files average each trajectory's own minimized variance "
            "(per-realization squeezing, the plotted convention); the "
            "*-mixture companions hold the variance of the averaged state")
    for idx, label in enumerate(preset.selected(config)):
        runner = preset.curves[label]
        t0 = time.perf_counter()
        for series in runner(label, config, idx):
            write_series_csv(outdir / f"{series.label}.csv", series)
            manifest["curves"][series.label] = {
                "file": f"{series.label}.csv",
                "points": int(series.times.size),
                "runtime_s": round(time.perf_counter() - t0, 3),
            }
    _atomic_write(outdir / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    print(f"wrote {len(manifest['curves'])} curves to {outdir}")
    return 0


def cmd_sweep(config: dict) -> int:
    alpha_grid = config.get("alpha_grid")
    k_grid = config.get("k_grid")
    if not alpha_grid or not k_grid:
        raise ConfigError("sweep requires nonempty alpha_grid and k_grid")
    outdir = _resolve_outdir(config)
    _atomic_write(outdir / "config.json", json.dumps(config, indent=2, sort_keys=True) + "\n")
    t0 = time.perf_counter()
    params = _params(config)
    matrix = analytic.sweep_variance_at_tau(alpha_grid, k_grid,
                                            theta=config["sweep_theta"],
                                            nbar_q=params.nbar_q,
                                            omega=params.omega)
    write_matrix_csv(outdir / "sweep.csv", alpha_grid, k_grid, matrix)
    ref_lines = ["alpha,k,log10_var_theta0_at_tau"]
    for alpha, k in SWEEP_REFERENCE_POINTS:
        val = analytic.sweep_variance_at_tau([alpha], [k], theta=config["sweep_theta"],
                                             nbar_q=params.nbar_q, omega=params.omega)[0, 0]
        ref_lines.append(",".join([_fmt(alpha), _fmt(k), _fmt(val)]))
    _atomic_write(outdir / "reference_points.csv", "\n".join(ref_lines) + "\n")
    manifest = _manifest_base(config)
    manifest["curves"]["sweep"] = {"file": "sweep.csv",
                                   "shape": [len(alpha_grid), len(k_grid)],
                                   "runtime_s": round(time.perf_counter() - t0, 3)}
    manifest["curves"]["reference_points"] = {"file": "reference_points.csv"}
    _atomic_write(outdir / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    print(f"wrote sweep ({len(alpha_grid)}x{len(k_grid)}) to {outdir}")
    return 0


def _validation_suite() -> list[tuple[str, bool, str]]:
    from .core import envelope_functions, thermal_occupation_classical, \
        thermal_occupation_quantum
    checks = []

    def check(name, fn):
        try:
            fn()
            checks.append((name, True, ""))
        except Exception as exc:  # noqa: BLE001 - report every failure kind
            checks.append((name, False, f"{type(exc).__name__}: {exc}"))

    p = PhysicalParams(alpha=2.0, k=0.1)

    def envelopes():
        t = np.linspace(0.0, 3.0, 400) * p.tau
        env = envelope_functions(t, p)
        assert np.all(np.diff(env.A) >= -1e-15)
        period = envelope_functions(t + p.tau, p)
        assert np.allclose(period.B, env.B, atol=1e-12)
        assert np.allclose(env.C, env.B, atol=1e-15)  # sigma2=1/2, nbar=0

    def occupations():
        w = 2 * math.pi * 30e6
        from scipy import constants
        T = constants.hbar * w / constants.k * 1.0e3
        diff = thermal_occupation_classical(T, w) - thermal_occupation_quantum(T, w)
        assert abs(diff - 0.5) < 1e-4

    def rng_repro():
        a = RandomSource(7, 3).generator().normal(size=8)
        b = RandomSource(7, 3).generator().normal(size=8)
        assert np.array_equal(a, b)

    def minimizer():
        val, th = analytic.minimize_over_theta(lambda x: 2.0 + math.cos(2 * x))
        assert abs(val - 1.0) < 1e-9 and abs(th - math.pi / 2) < 1e-6

    def closed_vs_formula():
        fm = hilbert.closed_field_moments(p, [0.7 * p.tau], Np=24, Nm=45)[0]
        ref = analytic.quantum_variance(0.3, 0.7 * p.tau, p)
        assert abs(fm.variance(0.3) - ref) / ref < 1e-8

    def block_closed_limit():
        eng = hilbert.BlockLindblad(p, 24, 45, include_mech=False)
        eng.advance(0.8 * p.tau, dt=0.1 * p.tau)
        ref = analytic.quantum_variance(0.0, 0.8 * p.tau, p)
        assert abs(eng.moments().variance(0.0) - ref) / ref < 1e-8

    def classical_oracle():
        st = classical.ClassicalState(alpha_L=2.1 + 0.2j, x=0.3, p=-0.2)
        exact = classical.evolve_classical(st, 0.7 * p.tau, p)
        ode = classical.hamilton_ode_oracle(st, 0.7 * p.tau, p, dt=1e-3)
        assert abs(exact.alpha_L - ode.alpha_L) < 1e-8
        assert abs(exact.x - ode.x) < 1e-8 and abs(exact.p - ode.p) < 1e-8

    def sde_single_step():
        pm = p.with_(Gamma=0.01)
        stream = RandomSource(5, 0)
        st = measurement.initial_hybrid_state(pm, stream, Np=16)
        before = st.rho.copy()
        measurement.sde_step(st, 1e-3 * pm.tau, pm, dW=0.01)
        n = np.arange(17.0)
        assert np.einsum("ii,i->", st.rho, n).real > np.einsum("ii,i->", before, n).real
        st.check()

    check("envelope identities", envelopes)
    check("thermal occupations", occupations)
    check("random source reproducibility", rng_repro)
    check("theta minimizer", minimizer)
    check("closed evolution vs formula", closed_vs_formula)
    check("block integrator closed limit", block_closed_limit)
    check("classical oracle agreement", classical_oracle)
    check("measurement single step", sde_single_step)
    return checks


def cmd_validate() -> int:
    checks = _validation_suite()
    payload = {"checks": [{"name": n, "ok": ok, "detail": d} for n, ok, d in checks]}
    print(json.dumps(payload, indent=2))
    if all(ok for _, ok, _ in checks):
        return 0
    return 3


def cmd_presets() -> int:
    for name, preset in PRESETS.items():
        curves = ", ".join(preset.curves) or "(matrix output)"
        print(f"{name:12s} {preset.blurb}\n{'':12s} curves: {curves}")
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _error_json(kind: str, message: str, **extra) -> None:
    print(json.dumps({"error": {"kind": kind, "message": message, **extra}}),
          file=sys.stdout)


def _parse_overrides(rest: list[str]) -> list[tuple[str, str]]:
    pairs = []
    i = 0
    while i < len(rest):
        tok = rest[i]
        if not tok.startswith("--"):
            raise ConfigError(f"unexpected argument {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, value = key.split("=", 1)
        else:
            if i + 1 >= len(rest):
                raise ConfigError(f"flag --{key} needs a value")
            value = rest[i + 1]
            i += 1
        pairs.append((key, value))
        i += 1
    return pairs


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="omsqueeze",
        description="cavity-optomechanics quadrature-variance experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run", "sweep"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=str, default=None,
                        help="JSON config; flags like --params.alpha 20 override fields")
        sp.add_argument("--preset", type=str, default=None)
        sp.add_argument("--outdir", type=str, default=None)
    sub.add_parser("validate")
    sub.add_parser("presets")

    args, rest = parser.parse_known_args(argv)

    if args.command == "validate":
        if rest:
            _error_json("config", f"unexpected arguments: {rest}")
            return 2
        return cmd_validate()
    if args.command == "presets":
        return cmd_presets()

    try:
        raw = {}
        if args.config:
            with open(args.config) as fh:
                raw = json.load(fh)
        if args.preset:
            raw["preset"] = args.preset
        if args.outdir:
            raw["outdir"] = args.outdir
        if args.command == "sweep" and "preset" not in raw:
            raw["preset"] = "sweep"
        raw = _merge_overrides(raw, _parse_overrides(rest))
        config = expand_config(raw)
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        _error_json("config", str(exc))
        return 2

    try:
        if args.command == "sweep" or config["preset"] == "sweep":
            return cmd_sweep(config)
        return cmd_run(config)
    except NumericalInvariantError as exc:
        _error_json("numerical-invariant", str(exc), invariant=exc.invariant)
        return 3
    except ConfigError as exc:
        _error_json("config", str(exc))
        return 2


if __name__ == "__main__":
    sys.exit(main())
