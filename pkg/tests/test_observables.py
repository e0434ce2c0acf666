import numpy as np
import pytest

from slnsim import (
    BathSpec,
    DriveSpec,
    EnsembleConfig,
    antipodal_pair_grid,
    backflow_windows,
    blp_measure,
    build_info_flow_report,
    heat_flux,
    info_loss_gain,
    information_flow,
    run_pair,
    trace_distance,
)
from slnsim.errors import InputError
from slnsim.noisegen import NoisePath
from slnsim.observables import (
    backflow_heat_overlap,
    export_heat_flux_csv,
    export_info_flow_csv,
    positive_flow_area,
    trace_distance_series,
    window_flags,
)
from slnsim.propagator import pauli_eigenstate, propagate

T_END = 2.0 * np.pi


class TestTraceDistance:
    def test_identical_states(self):
        rho = pauli_eigenstate("x", +1)
        assert trace_distance(rho, rho) == 0.0

    @pytest.mark.parametrize("axis", ["x", "y", "z"])
    def test_orthogonal_pure_pair(self, axis):
        d = trace_distance(pauli_eigenstate(axis, +1), pauli_eigenstate(axis, -1))
        assert d == pytest.approx(1.0, abs=1e-12)

    def test_maximally_mixed_vs_pure(self):
        eye = 0.5 * np.eye(2, dtype=complex)
        assert trace_distance(eye, pauli_eigenstate("z", +1)) == pytest.approx(0.5, abs=1e-12)

    def test_symmetry(self):
        r1 = pauli_eigenstate("x", +1)
        r2 = 0.5 * np.eye(2) + 0.2 * np.array([[0, 1], [1, 0]])
        assert trace_distance(r1, r2) == pytest.approx(trace_distance(r2, r1), abs=1e-15)

    def test_small_violation_warns_and_symmetrizes(self):
        rho = pauli_eigenstate("z", +1).copy()
        rho[0, 1] += 1e-12
        with pytest.warns(UserWarning):
            d = trace_distance(rho, pauli_eigenstate("z", -1))
        assert d == pytest.approx(1.0, abs=1e-9)

    def test_large_violation_raises(self):
        rho = pauli_eigenstate("z", +1).copy()
        rho[0, 1] += 0.1
        with pytest.raises(InputError):
            trace_distance(rho, pauli_eigenstate("z", -1))

    def test_series_matches_scalar(self):
        rng = np.random.default_rng(0)
        pairs = []
        for _ in range(8):
            h = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
            a = h @ h.conj().T
            a /= np.trace(a).real
            h2 = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
            b = h2 @ h2.conj().T
            b /= np.trace(b).real
            pairs.append((a, b))
        series = trace_distance_series(np.stack([p[0] - p[1] for p in pairs]))
        scalars = [trace_distance(a, b) for a, b in pairs]
        np.testing.assert_allclose(series, scalars, atol=1e-12)


class TestInformationFlow:
    def test_constant_is_zero(self):
        t = np.linspace(0.0, T_END, 512)
        delta = information_flow(np.ones(512), t)
        assert np.max(np.abs(delta)) == 0.0

    def test_exponential_derivative(self):
        t = np.linspace(0.0, T_END, 4096)
        delta = information_flow(np.exp(-t), t)
        assert np.max(np.abs(delta[1:-1] + np.exp(-t[1:-1]))) < 1e-5

    def test_exponential_derivative_with_smoothing(self):
        t = np.linspace(0.0, T_END, 4096)
        delta = information_flow(np.exp(-t), t, smooth_window=31)
        inner = slice(31, -31)
        assert np.max(np.abs(delta[inner] + np.exp(-t[inner]))) < 1e-5

    def test_integral_consistency(self):
        # trapezoid of the unsmoothed flow reconstructs D(t) - D(0)
        t = np.linspace(0.0, T_END, 4096)
        D = np.exp(-t)
        delta = information_flow(D, t)
        dt = t[1] - t[0]
        recon = np.concatenate([[0.0], np.cumsum(0.5 * (delta[1:] + delta[:-1]) * dt)])
        err = np.abs(recon - (D - D[0]))
        assert err.max() < 1e-6

    def test_bad_grids(self):
        with pytest.raises(InputError):
            information_flow(np.ones(2), np.array([0.0, 1.0]))
        with pytest.raises(InputError):
            information_flow(np.ones(4), np.array([0.0, 1.0, 2.5, 3.0]))
        with pytest.raises(InputError):
            information_flow(np.ones(64), np.linspace(0, 1, 64), smooth_window=4)


class TestBackflowWindows:
    def test_all_negative(self):
        t = np.linspace(0.0, T_END, 256)
        assert backflow_windows(-np.ones(256), t, 0.01) == []

    def test_sine_window(self):
        t = np.linspace(0.0, T_END, 16385)
        windows = backflow_windows(np.sin(t), t, 0.01)
        assert len(windows) == 1
        a, b = windows[0]
        # root-solve oracle: sin(t) = 0.01 crossings
        assert a == pytest.approx(np.arcsin(0.01), abs=2 * (t[1] - t[0]))
        assert b == pytest.approx(np.pi - np.arcsin(0.01), abs=2 * (t[1] - t[0]))
        assert (a, b) == pytest.approx((0.01, 3.13), abs=5e-3)

    def test_nearby_windows_merge(self):
        t = np.arange(20.0)
        delta = np.zeros(20)
        delta[3:6] = 1.0
        delta[7:10] = 1.0  # gap of one node < merge_gap
        delta[15:18] = 1.0
        windows = backflow_windows(delta, t, 0.5, merge_gap=3)
        assert windows == [(3.0, 9.0), (15.0, 17.0)]
        flags = window_flags(delta, 0.5, merge_gap=3)
        assert flags[3:10].all() and flags[15:18].all()
        assert not flags[0:3].any() and not flags[10:15].any()

    def test_epsilon_must_be_positive(self):
        t = np.linspace(0.0, 1.0, 8)
        with pytest.raises(InputError):
            backflow_windows(np.ones(8), t, 0.0)

    def test_pointwise_epsilon(self):
        t = np.arange(10.0)
        delta = np.ones(10)
        eps = np.full(10, 2.0)
        eps[4:6] = 0.5
        assert backflow_windows(delta, t, eps) == [(4.0, 5.0)]


class TestBlp:
    def unitary_runner(self, drive):
        t = np.linspace(0.0, T_END, 257)
        zeros = np.zeros(257, dtype=complex)
        path = NoisePath(t_grid=t, xi=zeros, nu=zeros.copy(), seed_id=0)

        def runner(rho1, rho2):
            t1 = propagate(rho1, path, drive)
            t2 = propagate(rho2, path, drive)
            D = trace_distance_series(t1.rho_series - t2.rho_series)
            return t, D

        return runner

    def test_closed_system_measure_zero(self):
        grid = antipodal_pair_grid(4, 3)
        result = blp_measure(grid, self.unitary_runner(DriveSpec(enabled=False)))
        assert result.value < 1e-10
        result_driven = blp_measure(grid, self.unitary_runner(DriveSpec(enabled=True, lambda_0=1.0)))
        assert result_driven.value < 1e-10

    def test_single_pair_equals_positive_area(self):
        t = np.linspace(0.0, T_END, 257)

        def runner(rho1, rho2):
            return t, 1.0 - 0.1 * np.sin(t)

        grid = [(pauli_eigenstate("z", 1), pauli_eigenstate("z", -1), (0.0, 0.0))]
        res = blp_measure(grid, runner, epsilon=1e-9)
        delta = information_flow(1.0 - 0.1 * np.sin(t), t)
        assert res.value == pytest.approx(positive_flow_area(delta, t, 1e-9), abs=1e-12)

    def test_relabeling_invariance(self):
        runner = self.unitary_runner(DriveSpec(enabled=False))
        r1, r2 = pauli_eigenstate("y", 1), pauli_eigenstate("y", -1)
        a = blp_measure([(r1, r2, None)], runner)
        b = blp_measure([(r2, r1, None)], runner)
        assert a.value == pytest.approx(b.value, abs=1e-14)

    def test_empty_grid(self):
        with pytest.raises(InputError):
            blp_measure([], lambda a, b: None)

    def test_measure_dominates_every_pair(self):
        t = np.linspace(0.0, T_END, 257)
        amps = [0.02, 0.05, 0.03]

        def make_runner():
            calls = {"i": 0}

            def runner(rho1, rho2):
                D = 1.0 - amps[calls["i"] % 3] * np.sin(t)
                calls["i"] += 1
                return t, D

            return runner

        grid = antipodal_pair_grid(3, 1)
        res = blp_measure(grid, make_runner(), epsilon=1e-9)
        assert res.value >= res.per_pair.max() - 1e-15
        assert np.all(res.value >= res.per_pair - 1e-15)


def test_antipodal_grid_properties():
    grid = antipodal_pair_grid(24, 12)
    assert len(grid) == 24 * 12
    for rho_p, rho_m, angles in grid[:: 37]:
        assert np.trace(rho_p) == pytest.approx(1.0, abs=1e-12)
        assert np.max(np.abs(rho_p @ rho_p - rho_p)) < 1e-12  # pure
        assert trace_distance(rho_p, rho_m) == pytest.approx(1.0, abs=1e-12)


class TestInfoLossGain:
    def test_monotone_decreasing(self):
        t = np.linspace(0.0, T_END, 1024)
        D = np.exp(-0.3 * t)
        delta = information_flow(D, t)
        loss, gain, onset = info_loss_gain(D, delta, t, 1e-6)
        assert onset is None
        assert gain == 0.0
        assert loss == pytest.approx(D[-1] - 1.0, abs=1e-12)

    def test_synthetic_backflow(self):
        t = np.linspace(0.0, 5.0, 5001)
        D = np.where(t < 3.0, 1.0 - t / 10.0, 0.7 + 0.05 * np.clip(t - 3.0, 0.0, 1.0))
        delta = information_flow(D, t)
        loss, gain, onset = info_loss_gain(D, delta, t, 0.01)
        dt = t[1] - t[0]
        assert onset == pytest.approx(3.0, abs=3 * dt)
        assert loss == pytest.approx(-0.3, abs=1e-3)
        assert gain == pytest.approx(0.05, abs=1e-3)

    def test_zero_coupling(self):
        t = np.linspace(0.0, T_END, 512)
        D = np.ones(512)
        delta = information_flow(D, t)
        loss, gain, onset = info_loss_gain(D, delta, t, 1e-9)
        assert (loss, gain, onset) == (0.0, 0.0, None)


class TestHeatFlux:
    def make_result(self, operating_bath, gamma=0.0, n=64):
        bath = BathSpec(gamma=gamma, omega_c=10.0, beta=5.0)
        cfg = EnsembleConfig(
            bath=bath,
            drive=DriveSpec(enabled=False),
            pair="x",
            n_realizations=n,
            master_seed=12,
            n_steps=128,
            batch_size=32,
        )
        return run_pair(cfg)

    def test_zero_coupling_flux_identically_zero(self, operating_bath):
        run = self.make_result(operating_bath, gamma=0.0)
        flux = heat_flux(run.plus, omega=1.0)
        assert np.all(flux.jq == 0.0)
        assert np.all(flux.jq_imag_residual == 0.0)

    def test_sign_and_scaling_conventions(self):
        class Dummy:
            t_grid = np.linspace(0, 1, 4)
            jq_mean = np.array([1.0 + 2.0j, -0.5 + 0.1j, 0.0 + 0.0j, 2.0 - 1.0j])
            jq_se_re = np.full(4, 0.1)
            jq_se_im = np.full(4, 0.2)

        flux = heat_flux(Dummy(), omega=2.0)
        np.testing.assert_allclose(flux.jq, -2.0 * Dummy.jq_mean.real)
        np.testing.assert_allclose(flux.jq_imag_residual, -2.0 * Dummy.jq_mean.imag)
        np.testing.assert_allclose(flux.se, 0.2)
        np.testing.assert_allclose(flux.se_imag, 0.4)

    def test_imag_residual_statistical(self, operating_bath):
        cfg = EnsembleConfig(
            bath=operating_bath,
            drive=DriveSpec(enabled=False),
            rho0=pauli_eigenstate("x", -1),
            n_realizations=2000,
            master_seed=7,
            n_steps=256,
            batch_size=512,
        )
        from slnsim import run_ensemble

        res = run_ensemble(cfg)
        flux = heat_flux(res, omega=1.0)
        ok = np.abs(flux.jq_imag_residual[1:]) <= 3.0 * flux.se_imag[1:]
        assert np.all(ok)


def test_unitary_invariance_of_trace_distance(operating_bath):
    # gamma = 0, driven and undriven: distinguishability is frozen
    bath0 = BathSpec(gamma=0.0, omega_c=10.0, beta=5.0)
    for drive in (DriveSpec(enabled=False), DriveSpec(enabled=True, lambda_0=1.0)):
        cfg = EnsembleConfig(
            bath=bath0, drive=drive, pair="y", n_realizations=8,
            master_seed=0, n_steps=4096, batch_size=8,
        )
        run = run_pair(cfg)
        report = build_info_flow_report(run, smooth_window=None)
        assert np.max(np.abs(report.D_series - 1.0)) < 1e-6
        assert report.windows == []
        assert report.info_gain == 0.0


def test_report_csv_and_overlap(tmp_path, small_config):
    run = run_pair(small_config, index_range=(0, 512))
    report = build_info_flow_report(run)
    out = tmp_path / "info.csv"
    export_info_flow_csv(report, out)
    lines = out.read_text().splitlines()
    assert lines[0] == "t,D,Delta,window_flag"
    assert len(lines) == len(report.t_grid) + 1

    flux = heat_flux(run.plus, omega=1.0)
    fout = tmp_path / "flux.csv"
    export_heat_flux_csv(flux, fout)
    assert fout.read_text().splitlines()[0] == "t,jq,jq_se,jq_imag_residual"

    overlap = backflow_heat_overlap(report.window_flag, flux)
    if report.windows:
        assert 0.0 <= overlap <= 1.0
    else:
        assert overlap is None

    summary = report.summary()
    assert summary["pair"] == "z"
    assert "info_loss" in summary and "info_gain" in summary
