"""Where does squeezing live in the (alpha, k) plane?

The variance at the end of the first mechanical period depends on the
product alpha * k (for k^2 << 1), so squeezing organizes along contours.
"""

import matplotlib.pyplot as plt
import numpy as np

from omsqueeze import sweep_variance_at_tau
from omsqueeze.analytic import squeezed_contour_values

alpha_grid = np.arange(1.0, 41.0)
k_grid = np.array(sorted({round(float(k), 6) for k in np.geomspace(0.002, 0.1, 30)}
                         | {0.005, 0.00625, 0.01, 0.0125, 0.02, 0.025}))
matrix = sweep_variance_at_tau(alpha_grid, k_grid)

fig, ax = plt.subplots(figsize=(5.5, 4))
mesh = ax.pcolormesh(alpha_grid, k_grid, matrix.T, shading="nearest", cmap="viridis")
fig.colorbar(mesh, label="log10 Var(t = tau, theta = 0)")
ax.set_yscale("log")
ax.set_xlabel("alpha")
ax.set_ylabel("k")
for alpha, k in ((2, 0.1), (10, 0.02), (20, 0.01), (40, 0.005)):
    ax.plot(alpha, k, "rv", markersize=6)
fig.tight_layout()
fig.savefig("demo06_sweep.png", dpi=150)
print("wrote demo06_sweep.png")
print("squeezed alpha*k contours on this grid:",
      squeezed_contour_values(alpha_grid, k_grid, matrix))
