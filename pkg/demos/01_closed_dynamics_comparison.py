"""Five descriptions of the same cavity, side by side.

Evaluates the closed-form variances (quantum, classical, and the three
mean-field hybrids) at alpha = 20, k = 0.01 over the early squeezing window
and both quantum revivals, and plots the theta-minimized variance.  The
quantum and classical curves are indistinguishable early on; only the
quantum (and, partially, the Poisson mean-field) curve revives.
"""

import matplotlib.pyplot as plt
import numpy as np

from omsqueeze import PhysicalParams, minimize_variance_curve
from omsqueeze import classical_variance, meanfield_variance, quantum_variance

params = PhysicalParams(alpha=20.0, k=0.01)
windows = {
    "early": np.arange(0.02, 10.0, 0.02),
    "first revival": np.arange(2450.0, 2550.0, 0.1),
    "second revival": np.arange(4950.0, 5050.0, 0.1),
}

curves = {
    "Q": lambda th, t: quantum_variance(th, t, params),
    "C": lambda th, t: classical_variance(th, t, params),
    "SC1": lambda th, t: meanfield_variance(th, t, params, "constant"),
    "SC2": lambda th, t: meanfield_variance(th, t, params, "poisson"),
    "SC3": lambda th, t: meanfield_variance(th, t, params, "gaussian"),
}

fig, axes = plt.subplots(1, 3, figsize=(12, 3.6), sharey=True)
for ax, (name, t_tau) in zip(axes, windows.items()):
    t = t_tau * params.tau
    for label, fn in curves.items():
        var_min, _ = minimize_variance_curve(fn, t)
        ax.plot(t_tau, var_min, label=label, linewidth=1.0)
    ax.axhline(1.0, color="gray", linewidth=0.6)
    ax.set_title(name)
    ax.set_xlabel("t / tau")
    ax.set_yscale("log")
axes[0].set_ylabel("min-theta Var")
axes[0].legend()
fig.suptitle("alpha = 20, k = 0.01: squeezing, saturation at 2 alpha^2 + 1, revivals")
fig.tight_layout()
fig.savefig("demo01_descriptions.png", dpi=150)
print("wrote demo01_descriptions.png")
print("stable value 2 alpha^2 + 1 =", 2 * params.alpha**2 + 1)
