"""Spectral density and bath autocorrelation function.

Tabulates J(omega) and L(t) for the cold Ohmic bath used throughout
(gamma = 0.05, omega_c = 10, beta = 5) and shows how temperature shapes
the real part while leaving the imaginary part untouched.

Run:  python demos/01_bath_correlation.py
Writes demos/output/bath_correlation.png
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from slnsim import BathSpec, spectral_density, tabulate_correlation

out_dir = Path(__file__).parent / "output"
out_dir.mkdir(exist_ok=True)

t = np.linspace(0.0, 2.0 * np.pi, 1025)
w = np.linspace(0.0, 60.0, 2000)

fig, axes = plt.subplots(1, 3, figsize=(12, 3.4))

spec = BathSpec(gamma=0.05, omega_c=10.0, beta=5.0)
axes[0].plot(w, spectral_density(w, spec), color="#20639b")
axes[0].axvline(10.0 / np.sqrt(3.0), color="gray", linestyle=":", label="peak at $\\omega_c/\\sqrt{3}$")
axes[0].set_xlabel(r"$\omega$")
axes[0].set_ylabel(r"$J(\omega)$")
axes[0].set_title("Ohmic density, algebraic cut-off")
axes[0].legend()

for beta, color in ((1.0, "#d7263d"), (5.0, "#20639b"), (20.0, "#3caea3")):
    table = tabulate_correlation(BathSpec(gamma=0.05, omega_c=10.0, beta=beta), t)
    axes[1].plot(t, table.re_L, color=color, label=f"$\\beta={beta:g}$")
    if beta == 5.0:
        axes[2].plot(t, table.im_L, color=color)

axes[1].set_xlabel("t")
axes[1].set_ylabel("Re L(t)")
axes[1].set_xlim(0, 2)
axes[1].set_title("thermal part stiffens as the bath cools")
axes[1].legend()

axes[2].set_xlabel("t")
axes[2].set_ylabel("Im L(t)")
axes[2].set_xlim(0, 2)
axes[2].set_title("friction part (temperature independent)")

fig.tight_layout()
fig.savefig(out_dir / "bath_correlation.png", dpi=130)
print(f"wrote {out_dir / 'bath_correlation.png'}")
print(f"Re L(0) = {tabulate_correlation(spec, t).re_L[0]:.6f}")
