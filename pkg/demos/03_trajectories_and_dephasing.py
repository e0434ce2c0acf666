"""Single stochastic trajectories versus the physical ensemble average.

Per realization the propagated matrix is neither Hermitian nor
trace-one; only the ensemble mean is a physical state.  The pure
dephasing configuration (system frequency 0) has an exact solution: the
averaged coherence decays with the double time integral of Re L, which
this demo overlays on the Monte Carlo estimate.

Run:  python demos/03_trajectories_and_dephasing.py
Writes demos/output/trajectories_dephasing.png
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from slnsim import BathSpec, DriveSpec, EnsembleConfig, build_table, run_ensemble
from slnsim.noisegen import NoiseGenerator
from slnsim.propagator import pauli_eigenstate, propagate

out_dir = Path(__file__).parent / "output"
out_dir.mkdir(exist_ok=True)

cfg = EnsembleConfig(
    bath=BathSpec(gamma=0.05, omega_c=10.0, beta=5.0),
    drive=DriveSpec(enabled=False, omega=0.0),  # pure dephasing
    rho0=pauli_eigenstate("x", +1),
    n_realizations=4000,
    master_seed=11,
    n_steps=1024,
)
table = build_table(cfg)

fig, axes = plt.subplots(1, 2, figsize=(10, 3.6))

gen = NoiseGenerator(table, cfg.n_nodes)
for i in range(5):
    traj = propagate(cfg.rho0, gen.generate(cfg.master_seed, i), cfg.drive)
    axes[0].plot(traj.t_grid, traj.rho_series[:, 0, 1].real, lw=0.7, alpha=0.7)
axes[0].set_xlabel("t")
axes[0].set_ylabel(r"Re $\rho_{01}$ per realization")
axes[0].set_title("single noisy trajectories")

res = run_ensemble(cfg, table=table)
coh = np.abs(res.rho_mean[:, 0, 1])
se = res.rho_se[:, 0, 1]
t = res.t_grid
dt = cfg.dt
phi = np.array(
    [np.trapezoid((t[k] - t[: k + 1]) * table.re_L[: k + 1], dx=dt) for k in range(len(t))]
)
axes[1].fill_between(t, coh - 3 * se, coh + 3 * se, alpha=0.3, color="#20639b",
                     label="ensemble (3 SE band)")
axes[1].plot(t, 0.5 * np.exp(-4.0 * phi), "k--", lw=1.2, label="exact dephasing")
axes[1].set_xlabel("t")
axes[1].set_ylabel(r"$|\bar\rho_{01}(t)|$")
axes[1].set_title(f"average over {cfg.n_realizations} realizations")
axes[1].legend()

fig.tight_layout()
fig.savefig(out_dir / "trajectories_dephasing.png", dpi=130)
print(f"wrote {out_dir / 'trajectories_dephasing.png'}")
