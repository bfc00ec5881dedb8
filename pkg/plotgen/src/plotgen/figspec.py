"""Figure specifications: which CSVs each preset consumes and how to draw them."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

SERIES_HEADER = "t_over_tau,var_min,theta_star,var_theta0,stderr"


@dataclass(frozen=True)
class CurveStyle:
    label: str
    color: str
    linestyle: str = "-"
    column: str = "var_min"      # which CSV column carries the y values


@dataclass
class FigureSpec:
    """Inputs and layout of one rendered figure."""

    preset: str
    curves: dict[str, CurveStyle]          # csv stem -> style
    ylabel: str = "Var"
    yscale: str = "linear"
    panels: int = 1                        # time windows split into columns
    heatmap: str | None = None             # matrix csv stem for sweep
    reference_points: str | None = None

    def csv_paths(self, indir: Path) -> dict[str, Path]:
        stems = list(self.curves)
        if self.heatmap:
            stems.append(self.heatmap)
        return {stem: indir / f"{stem}.csv" for stem in stems}


FIGURES: dict[str, FigureSpec] = {
    "fig1b": FigureSpec(
        preset="fig1b",
        panels=3,
        curves={
            "Q": CurveStyle("Q", "tab:blue"),
            "C": CurveStyle("C", "tab:red", "--"),
            "SC1": CurveStyle("SC1", "tab:gray", "-."),
            "SC2": CurveStyle("SC2", "tab:orange", ":"),
            "SC3": CurveStyle("SC3", "tab:green", "--"),
        },
    ),
    "fig1c": FigureSpec(
        preset="fig1c",
        curves={
            "hybrid-k0": CurveStyle("k = 0", "tab:blue"),
            "hybrid-zero-init": CurveStyle("k = 0.1, zero init", "tab:red"),
            "hybrid-thermal-init": CurveStyle("k = 0.1, thermal init", "tab:pink"),
            "hybrid-kappa1.0": CurveStyle("hybrid, kappa = omega", "tab:green", "--"),
            "quantum-kappa0.3": CurveStyle("quantum, kappa = 0.3 omega", "tab:brown", ":"),
        },
    ),
    "thermal": FigureSpec(
        preset="thermal",
        yscale="log",
        curves={
            "nth0": CurveStyle("n_th = 0", "black", column="var_theta0"),
            "nth1": CurveStyle("n_th = 1", "tab:orange", "--", column="var_theta0"),
            "nth10": CurveStyle("n_th = 10", "tab:purple", "-.", column="var_theta0"),
            "nth100": CurveStyle("n_th = 100", "tab:blue", ":", column="var_theta0"),
            "kerr": CurveStyle("Kerr envelope", "tab:green", ":", column="var_theta0"),
        },
    ),
    "damping": FigureSpec(
        preset="damping",
        curves={
            "gamma0": CurveStyle("gamma = 0", "tab:green", "-.", column="var_theta0"),
            "gamma0.01-nbath0": CurveStyle("gamma = 0.01, n = 0", "tab:orange", "--",
                                           column="var_theta0"),
            "gamma0.01-nbath0.5": CurveStyle("gamma = 0.01, n = 0.5", "tab:blue",
                                             column="var_theta0"),
        },
    ),
    "sweep": FigureSpec(
        preset="sweep",
        curves={},
        heatmap="sweep",
        reference_points="reference_points",
        ylabel="k",
    ),
    "theta_trace": FigureSpec(
        preset="theta_trace",
        panels=3,
        ylabel="theta* (rad)",
        curves={
            "quantum-early": CurveStyle("quantum, early", "tab:blue",
                                        column="theta_star"),
            "quantum-second-revival": CurveStyle("quantum, second revival",
                                                 "tab:purple", column="theta_star"),
            "hybrid": CurveStyle("hybrid", "tab:red", column="theta_star"),
        },
    ),
}
