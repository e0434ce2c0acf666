"""Correlated noise synthesis and its statistical self-test.

Draws an ensemble of (xi, nu) pairs and compares the estimated second
moments against their targets: <xi xi> must trace Re L, <xi nu> the
causal cross kernel 2i Im L (only when xi is the later of the two), and
<nu nu> must vanish.

Run:  python demos/02_noise_selftest.py
Writes demos/output/noise_selftest.png
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from slnsim import BathSpec, DriveSpec, EnsembleConfig, build_table
from slnsim.noisegen import NoiseGenerator, NoiseStatAccumulator

out_dir = Path(__file__).parent / "output"
out_dir.mkdir(exist_ok=True)

cfg = EnsembleConfig(
    bath=BathSpec(gamma=0.05, omega_c=10.0, beta=5.0),
    drive=DriveSpec(enabled=False),
    pair="z",
    n_realizations=4000,
    master_seed=2024,
    n_steps=512,
)
table = build_table(cfg)
gen = NoiseGenerator(table, cfg.n_nodes)
acc = NoiseStatAccumulator(table, cfg.n_nodes, n_lags=24)
for lo in range(0, cfg.n_realizations, 500):
    xi, nu = gen.generate_block(cfg.master_seed, range(lo, lo + 500))
    acc.update(xi, nu)
report = acc.report()
print("self-test passed:", report.passed)

fig, axes = plt.subplots(1, 3, figsize=(12, 3.4), sharex=True)
lag_t = report.lag_times

fam = report.families["xi_xi"]
axes[0].errorbar(lag_t, fam["estimate"].real, yerr=3 * fam["se_re"], fmt="o", ms=3,
                 color="#20639b", label="estimate (3 SE)")
axes[0].plot(lag_t, fam["target"].real, "k-", lw=1, label="Re L target")
axes[0].set_title(r"$\langle \xi \xi \rangle$")
axes[0].legend()

fam = report.families["xi_later_nu"]
axes[1].errorbar(lag_t, fam["estimate"].imag, yerr=3 * fam["se_im"], fmt="o", ms=3,
                 color="#d7263d", label="estimate (3 SE)")
axes[1].plot(lag_t, fam["target"].imag, "k-", lw=1, label="2 Im L target")
axes[1].set_title(r"$\langle \xi(t+\tau)\, \nu(t) \rangle$ (causal)")
axes[1].legend()

fam = report.families["nu_nu"]
axes[2].errorbar(lag_t, fam["estimate"].real, yerr=3 * fam["se_re"], fmt="o", ms=3,
                 color="#3caea3", label="Re estimate (3 SE)")
axes[2].axhline(0.0, color="k", lw=1)
axes[2].set_title(r"$\langle \nu \nu \rangle$ (must vanish)")
axes[2].legend()

for ax in axes:
    ax.set_xlabel("lag")
fig.tight_layout()
fig.savefig(out_dir / "noise_selftest.png", dpi=130)
print(f"wrote {out_dir / 'noise_selftest.png'}")
