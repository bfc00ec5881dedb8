"""Render omsqueeze CSV outputs into the preset figures.

Pure consumer: no physics is recomputed here.  Rendering is deterministic --
matplotlib's SVG hash salt is pinned and date metadata stripped, so a fixed
toolchain produces byte-stable files.
"""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "plotgen"

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .figspec import FIGURES, SERIES_HEADER, FigureSpec

SERIES_COLUMNS = SERIES_HEADER.split(",")


class InputError(ValueError):
    """Missing or malformed input file/column."""


def read_series_csv(path: Path) -> dict[str, np.ndarray]:
    if not path.exists():
        raise InputError(f"missing input file {path}")
    with open(path) as fh:
        header = fh.readline().strip()
    got = header.split(",")
    for needed in SERIES_COLUMNS:
        if needed not in got:
            raise InputError(f"{path} is missing column {needed!r}")
    data = np.genfromtxt(path, delimiter=",", names=True)
    if data.ndim == 0:
        data = data.reshape(1)
    return {name: np.atleast_1d(data[name]) for name in data.dtype.names}


def read_matrix_csv(path: Path):
    if not path.exists():
        raise InputError(f"missing input file {path}")
    rows = [line.strip().split(",") for line in path.read_text().strip().split("\n")]
    if not rows or not rows[0] or not rows[0][0].startswith("alpha"):
        raise InputError(f"{path} is missing column 'alpha\\k' (not a sweep matrix)")
    k = np.array([float(v) for v in rows[0][1:]])
    alpha = np.array([float(r[0]) for r in rows[1:]])
    matrix = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
    return alpha, k, matrix


def _annotation(indir: Path) -> str:
    manifest = indir / "manifest.json"
    if not manifest.exists():
        return ""
    try:
        params = json.loads(manifest.read_text())["config"]["params"]
        return f"alpha = {params['alpha']:g}, k = {params['k']:g}"
    except (KeyError, json.JSONDecodeError):
        return ""


def _split_windows(t: np.ndarray, n_panels: int) -> list[np.ndarray]:
    """Index groups for disjoint time windows (gaps >> median step)."""
    if t.size < 2 or n_panels == 1:
        return [np.arange(t.size)]
    step = np.median(np.diff(t))
    breaks = np.where(np.diff(t) > 10.0 * step)[0]
    groups = np.split(np.arange(t.size), breaks + 1)
    return groups[:n_panels] if len(groups) >= n_panels else groups


def _render_series(spec: FigureSpec, indir: Path):
    data = {stem: read_series_csv(indir / f"{stem}.csv") for stem in spec.curves}
    if spec.panels > 1:
        # panel windows come from the curve with the widest time span
        widest = max(data.values(), key=lambda d: np.ptp(d["t_over_tau"]))
        groups = _split_windows(widest["t_over_tau"], spec.panels)
        bounds = [(widest["t_over_tau"][g[0]], widest["t_over_tau"][g[-1]])
                  for g in groups]
    else:
        bounds = [None]

    fig, axes = plt.subplots(1, max(len(bounds), 1), figsize=(4.0 * len(bounds), 3.2),
                             sharey=True, squeeze=False)
    axes = axes[0]
    for ax_idx, ax in enumerate(axes):
        window = bounds[ax_idx]
        for stem, style in spec.curves.items():
            d = data[stem]
            t = d["t_over_tau"]
            y = d[style.column]
            if window is not None:
                mask = (t >= window[0] - 1e-9) & (t <= window[1] + 1e-9)
                if not mask.any():
                    continue
                t, y = t[mask], y[mask]
                err = d["stderr"][mask]
            else:
                err = d["stderr"]
            label = style.label if ax_idx == 0 else None
            ax.plot(t, y, color=style.color, linestyle=style.linestyle,
                    label=label, linewidth=1.2)
            if np.any(np.isfinite(err)):
                band = np.nan_to_num(err)
                ax.fill_between(t, y - band, y + band, color=style.color, alpha=0.25,
                                linewidth=0)
        ax.set_xlabel("t / tau")
        ax.set_yscale(spec.yscale)
    axes[0].set_ylabel(spec.ylabel)
    if spec.curves:
        axes[0].legend(fontsize=7, loc="best")
    note = _annotation(indir)
    title = spec.preset if not note else f"{spec.preset}  ({note})"
    fig.suptitle(title, fontsize=10)
    fig.tight_layout()
    return fig


def _render_heatmap(spec: FigureSpec, indir: Path):
    alpha, k, matrix = read_matrix_csv(indir / f"{spec.heatmap}.csv")
    fig, ax = plt.subplots(figsize=(4.6, 3.6))
    mesh = ax.pcolormesh(alpha, k, matrix.T, shading="nearest", cmap="viridis")
    bar = fig.colorbar(mesh, ax=ax)
    bar.set_label("log10 Var at t = tau (theta = 0)")
    ax.set_xlabel("alpha")
    ax.set_ylabel("k")
    ax.set_title(spec.preset, fontsize=10)
    if spec.reference_points:
        ref = indir / f"{spec.reference_points}.csv"
        if ref.exists():
            rows = ref.read_text().strip().split("\n")[1:]
            pts = np.array([[float(v) for v in r.split(",")[:2]] for r in rows])
            ax.scatter(pts[:, 0], pts[:, 1], marker="v", color="red", s=30,
                       label="reference cases")
            ax.legend(fontsize=7, loc="upper right")
    fig.tight_layout()
    return fig


def render(preset: str, indir: Path, outdir: Path, fmt: str = "svg") -> Path:
    """Render one preset figure; returns the written path."""
    if preset not in FIGURES:
        raise InputError(f"unknown figure preset {preset!r}; "
                         f"available: {sorted(FIGURES)}")
    spec = FIGURES[preset]
    indir, outdir = Path(indir), Path(outdir)
    fig = _render_heatmap(spec, indir) if spec.heatmap else _render_series(spec, indir)
    outdir.mkdir(parents=True, exist_ok=True)
    out = outdir / f"{preset}.{fmt}"
    fig.savefig(out, format=fmt, metadata={"Date": None} if fmt == "svg" else None)
    plt.close(fig)
    return out


def build_figure(preset: str, indir: Path):
    """Like render, but returns the open matplotlib figure (for inspection)."""
    spec = FIGURES[preset]
    indir = Path(indir)
    return _render_heatmap(spec, indir) if spec.heatmap else _render_series(spec, indir)
