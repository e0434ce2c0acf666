"""Acceptance suite: every primary criterion at its stated tolerance.

Each test finishes by recording a PASS/FAIL line that pytest prints in
the "acceptance criteria" section of the terminal summary.  The heavier
figure-grade (1e5-realization) variants run only when the environment
variable SLNSIM_ACCEPT_FULL is set; the always-on versions cover the
mandated smoke levels.
"""

import os
import time

import numpy as np
import pytest

from conftest import record_criterion
from slnsim import (
    BathSpec,
    DriveSpec,
    EnsembleConfig,
    build_info_flow_report,
    build_table,
    heat_flux,
    run_ensemble,
    run_pair,
)
from slnsim.cli import main
from slnsim.noisegen import NoiseGenerator, NoiseStatAccumulator
from slnsim.observables import backflow_heat_overlap, trace_distance_series
from slnsim.propagator import bloch_vector, pauli_eigenstate

T_END = 2.0 * np.pi
SEED = 20210607
FULL = bool(os.environ.get("SLNSIM_ACCEPT_FULL"))

OPERATING = BathSpec(gamma=0.05, omega_c=10.0, beta=5.0)
UNDRIVEN = DriveSpec(enabled=False)
DRIVEN = DriveSpec(enabled=True, lambda_0=1.0)


def pair_config(axis, drive, n, n_steps=4096, seed=SEED):
    return EnsembleConfig(
        bath=OPERATING, drive=drive, pair=axis,
        n_realizations=n, master_seed=seed, n_steps=n_steps,
    )


@pytest.fixture(scope="module")
def sigma_z_run():
    cfg = pair_config("z", UNDRIVEN, 10000)
    return run_pair(cfg, table=build_table(cfg))


@pytest.fixture(scope="module")
def excited_run():
    cfg = EnsembleConfig(
        bath=OPERATING, drive=UNDRIVEN, rho0=pauli_eigenstate("x", -1),
        n_realizations=10000, master_seed=SEED, n_steps=1024,
    )
    return run_ensemble(cfg, table=build_table(cfg))


@pytest.fixture(scope="module")
def sigma_z_report(sigma_z_run):
    return build_info_flow_report(sigma_z_run)


class TestNoiseContract:
    def test_correlations_within_three_se_at_twenty_lags(self):
        n_steps = 1024
        cfg = pair_config("z", UNDRIVEN, 10000, n_steps=n_steps)
        t0 = time.perf_counter()
        table = build_table(cfg)
        gen = NoiseGenerator(table, cfg.n_nodes)
        acc = NoiseStatAccumulator(table, cfg.n_nodes, n_lags=20)
        for lo in range(0, 10000, 500):
            xi, nu = gen.generate_block(SEED + 1, range(lo, lo + 500))
            acc.update(xi, nu)
        report = acc.report()
        elapsed = time.perf_counter() - t0
        ok = report.passed and len(report.lag_indices) >= 20 and elapsed < 120.0
        record_criterion(
            "noise contract (N=1e4, 20 lags, 3 SE)", ok, f"{elapsed:.0f}s"
        )
        assert report.passed
        assert len(report.lag_indices) >= 20
        assert elapsed < 120.0


class TestUnitaryLimit:
    @pytest.mark.parametrize("drive", [UNDRIVEN, DRIVEN], ids=["undriven", "driven"])
    def test_trace_distance_frozen_and_norm_conserved(self, drive):
        bath0 = BathSpec(gamma=0.0, omega_c=10.0, beta=5.0)
        cfg = EnsembleConfig(
            bath=bath0, drive=drive, pair="y", n_realizations=2,
            master_seed=SEED, n_steps=4096, batch_size=2,
        )
        run = run_pair(cfg)
        D = trace_distance_series(run.diff_mean)
        d_ok = float(np.max(np.abs(D - 1.0)))
        norms = np.linalg.norm(
            np.stack(
                [bloch_vector(r) for r in 0.5 * (run.plus.rho_mean + np.conj(np.swapaxes(run.plus.rho_mean, 1, 2)))]
            ),
            axis=1,
        )
        n_ok = float(np.max(np.abs(norms - 1.0)))
        passed = d_ok < 1e-6 and n_ok < 1e-6
        record_criterion(
            f"unitary limit ({'driven' if drive.enabled else 'undriven'})",
            passed,
            f"max|D-1|={d_ok:.1e}, max|r-1|={n_ok:.1e}",
        )
        assert d_ok < 1e-6
        assert n_ok < 1e-6


class TestDephasingOracle:
    def test_coherence_decay_matches_double_quadrature(self):
        t0 = time.perf_counter()
        cfg = EnsembleConfig(
            bath=OPERATING,
            drive=DriveSpec(enabled=False, omega=0.0),
            rho0=pauli_eigenstate("x", +1),
            n_realizations=10000,
            master_seed=SEED,
            n_steps=4096,
        )
        table = build_table(cfg)
        res = run_ensemble(cfg, table=table)
        t = res.t_grid
        dt = cfg.dt
        re_L = table.re_L
        coh = res.rho_mean[:, 0, 1]
        se = res.rho_se[:, 0, 1]
        checkpoints = np.linspace(1, cfg.n_steps, 10).round().astype(int)
        worst = 0.0
        for k in checkpoints:
            w = np.ones(k + 1)
            w[0] = w[-1] = 0.5
            acf = np.correlate(w, w, mode="full")[k:]
            var_q = dt * dt * (acf[0] * re_L[0] + 2.0 * np.dot(acf[1:], re_L[1 : k + 1]))
            target = 0.5 * np.exp(-2.0 * var_q)
            dev = abs(np.abs(coh[k]) - target) / se[k]
            worst = max(worst, dev)
        elapsed = time.perf_counter() - t0
        ok = worst <= 3.0 and elapsed < 600.0
        record_criterion(
            "dephasing oracle (10 checkpoints, 3 SE)", ok,
            f"worst dev {worst:.2f} SE, {elapsed:.0f}s",
        )
        assert worst <= 3.0
        assert elapsed < 600.0


@pytest.fixture(scope="module")
def sanity_result():
    cfg = EnsembleConfig(
        bath=OPERATING, drive=UNDRIVEN, rho0=pauli_eigenstate("z", +1),
        n_realizations=10000, master_seed=SEED, n_steps=512,
    )
    return run_ensemble(cfg, table=build_table(cfg))


class TestEnsembleSanity:
    def test_trace_and_hermiticity_within_three_se(self, sanity_result):
        result = sanity_result
        trace_dev = np.abs(result.trace_mean - 1.0)[1:]
        trace_ok = bool(np.all(trace_dev <= 3.0 * result.trace_se[1:]))
        herm = np.abs(result.rho_mean - np.conj(np.swapaxes(result.rho_mean, 1, 2)))
        bound = 3.0 * np.sqrt(result.rho_se**2 + np.swapaxes(result.rho_se, 1, 2) ** 2)
        herm_ok = bool(np.all(herm[1:] <= np.maximum(bound[1:], 1e-14)))
        record_criterion(
            "ensemble sanity: trace & hermiticity within 3 SE",
            trace_ok and herm_ok,
        )
        assert trace_ok
        assert herm_ok

    def test_se_scales_as_inverse_sqrt_n(self):
        sizes = (
            [6250, 12500, 25000, 50000, 100000] if FULL else [1000, 2000, 4000, 8000, 16000]
        )
        cfg_base = dict(
            bath=OPERATING, drive=UNDRIVEN, rho0=pauli_eigenstate("z", +1),
            master_seed=SEED, n_steps=128, batch_size=1024,
        )
        ses = []
        start = 0
        for n in sizes:
            cfg = EnsembleConfig(n_realizations=start + n, **cfg_base)
            res = run_ensemble(cfg, index_range=(start, start + n))
            ses.append(float(np.median(res.rho_se[-1])))
            start += n
        slope = float(np.polyfit(np.log(sizes), np.log(ses), 1)[0])
        ok = abs(slope + 0.5) <= 0.05
        record_criterion(
            "ensemble sanity: SE slope -0.5 +/- 0.05", ok, f"slope {slope:+.3f}"
        )
        assert abs(slope + 0.5) <= 0.05


class TestInformationBackflow:
    def test_sigma_z_pair_backflow_smoke(self, sigma_z_report):
        # mandated smoke level: the sigma_z pair shows the backflow sign
        windows = [w for w in sigma_z_report.windows if 0.0 < w[0] <= T_END]
        ok = len(windows) >= 1
        record_criterion(
            "backflow, undriven sigma_z pair (N=1e4 smoke)", ok,
            f"windows {['%.2f-%.2f' % w for w in windows]}",
        )
        assert ok

    def test_sigma_y_pair_backflow_smoke(self):
        cfg = pair_config("y", UNDRIVEN, 10000)
        report = build_info_flow_report(run_pair(cfg, table=build_table(cfg)))
        windows = [w for w in report.windows if 0.0 < w[0] <= T_END]
        ok = len(windows) >= 1
        record_criterion(
            "backflow, undriven sigma_y pair (N=1e4 smoke)", ok,
            f"windows {['%.2f-%.2f' % w for w in windows]}",
        )
        assert ok

    def test_sigma_x_pair_no_backflow_undriven(self):
        cfg = pair_config("x", UNDRIVEN, 10000)
        report = build_info_flow_report(run_pair(cfg, table=build_table(cfg)))
        ok = len(report.windows) == 0
        record_criterion(
            "no backflow, undriven sigma_x pair (N=1e4)", ok,
            f"{len(report.windows)} windows",
        )
        assert ok

    def test_sigma_x_pair_gains_backflow_when_driven(self):
        cfg = pair_config("x", DRIVEN, 10000)
        report = build_info_flow_report(run_pair(cfg, table=build_table(cfg)))
        windows = [w for w in report.windows if 0.0 < w[0] <= T_END]
        ok = len(windows) >= 1
        record_criterion(
            "backflow appears for driven sigma_x pair (N=1e4)", ok,
            f"windows {['%.2f-%.2f' % w for w in windows]}",
        )
        assert ok

    @pytest.mark.skipif(not FULL, reason="figure-grade run; set SLNSIM_ACCEPT_FULL=1")
    def test_figure_grade_pair_panel(self):
        outcomes = {}
        for axis, drive, expect_windows in (
            ("z", UNDRIVEN, True),
            ("y", UNDRIVEN, True),
            ("x", UNDRIVEN, False),
            ("x", DRIVEN, True),
        ):
            cfg = pair_config(axis, drive, 100000)
            report = build_info_flow_report(run_pair(cfg, table=build_table(cfg)))
            outcomes[(axis, drive.enabled)] = (len(report.windows), expect_windows)
        ok = all(
            (n >= 1) == expect for n, expect in outcomes.values()
        )
        record_criterion(
            "figure-grade backflow panel (N=1e5)", ok, str(outcomes)
        )
        for (axis, driven), (n, expect) in outcomes.items():
            assert (n >= 1) == expect, (axis, driven, n)


class TestHeatFlux:
    def test_zero_coupling_flux_identically_zero(self):
        bath0 = BathSpec(gamma=0.0, omega_c=10.0, beta=5.0)
        cfg = EnsembleConfig(
            bath=bath0, drive=UNDRIVEN, rho0=pauli_eigenstate("x", -1),
            n_realizations=16, master_seed=SEED, n_steps=512, batch_size=16,
        )
        flux = heat_flux(run_ensemble(cfg), omega=1.0)
        ok = bool(np.all(flux.jq == 0.0) and np.all(flux.jq_imag_residual == 0.0))
        record_criterion("heat flux vanishes at gamma=0", ok)
        assert ok

    def test_imag_residual_within_three_se(self, excited_run):
        flux = heat_flux(excited_run, omega=1.0)
        ratios = np.abs(flux.jq_imag_residual[1:]) / flux.se_imag[1:]
        ok = bool(np.all(ratios <= 3.0))
        record_criterion(
            "heat-flux imaginary residual within 3 SE", ok, f"max {ratios.max():.2f}"
        )
        assert ok

    def test_excited_state_net_heat_into_bath(self, excited_run):
        flux = heat_flux(excited_run, omega=1.0)
        total = float(np.trapezoid(flux.jq, flux.t_grid))
        # Cauchy-Schwarz bound on the error of the correlated integral
        se_total = float(np.trapezoid(flux.se, flux.t_grid))
        ok = total < -3.0 * se_total
        record_criterion(
            "excited-state relaxation: net heat into bath beyond 3 SE", ok,
            f"integral {total:.3f} +/- {se_total:.3f}",
        )
        assert ok


class TestDecouplingStatistic:
    def test_overlap_statistic_emitted(self, sigma_z_run, sigma_z_report):
        stats = {}
        for tag, res in (("plus", sigma_z_run.plus), ("minus", sigma_z_run.minus)):
            flux = heat_flux(res, omega=1.0)
            stats[tag] = backflow_heat_overlap(sigma_z_report.window_flag, flux)
        ok = all(v is None or 0.0 <= v <= 1.0 for v in stats.values()) and any(
            v is not None for v in stats.values()
        )
        record_criterion(
            "information/heat backflow overlap statistic computed", ok, str(stats)
        )
        assert ok


class TestDeterminism:
    def test_worker_count_does_not_change_csv_bytes(self, tmp_path):
        import yaml

        cfg = {
            "kind": "pair-dynamics",
            "bath": {"gamma": 0.05, "omega_c": 10.0, "beta": 5.0},
            "drive": {"enabled": False},
            "grid": {"n_steps": 256, "t_end": T_END},
            "pairs": ["sigma_z"],
            "n_realizations": 300,
            "master_seed": SEED,
            "heat_flux": True,
        }
        path = tmp_path / "cfg.yaml"
        path.write_text(yaml.safe_dump(cfg))
        digests = []
        for tag, workers in (("w1", "1"), ("w2", "2")):
            out = tmp_path / tag
            assert main(
                ["simulate", "--config", str(path), "--out", str(out), "--workers", workers]
            ) == 0
            digests.append(
                tuple(
                    (name, (out / name).read_bytes())
                    for name in sorted(p.name for p in out.glob("*.csv"))
                )
            )
        ok = digests[0] == digests[1]
        record_criterion("determinism: CSVs bitwise equal across worker counts", ok)
        assert ok
