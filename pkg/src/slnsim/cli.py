"""Experiment runner: config files in, CSV/JSON artifacts out.

Subcommands
-----------
simulate        run an experiment described by --config or --preset
validate        statically validate a config, listing every violation
bath-table      tabulate the bath correlation function as CSV
noise-selftest  generate noise paths and verify their moments

Presets ``fig2a``, ``fig2b``, ``fig3`` and ``fig4`` bundle the standard
information-backflow, heat-flux and loss/gain experiment layouts so the
corresponding figure data are one-liners.

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 I/O error.
Every output file gets a ``<name>.provenance.json`` sidecar carrying the
resolved config, the master seed and code/library versions, which is
sufficient to reproduce it bit for bit (CSV outputs depend only on the
config and seed, never on worker count).
"""

from __future__ import annotations

import argparse
import copy
import datetime
import json
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .bath import BathSpec, QuadratureSpec, export_correlation_csv, tabulate_correlation
from .ensemble import (
    DEFAULT_T_END,
    EnsembleConfig,
    build_table,
    export_ensemble_csv,
    run_pair,
)
from .errors import ConfigValidationError, NumericalError, SlnsimError
from .noisegen import NoiseGenerator, NoiseStatAccumulator, export_noise_csv
from .observables import (
    backflow_heat_overlap,
    build_info_flow_report,
    export_heat_flux_csv,
    export_info_flow_csv,
    export_summary_json,
    heat_flux,
)
from .propagator import DriveSpec

KINDS = ("bath-table", "noise-selftest", "pair-dynamics", "heat-flux", "loss-gain-sweep")
_PAIR_ALIASES = {
    "x": "x",
    "y": "y",
    "z": "z",
    "sigma_x": "x",
    "sigma_y": "y",
    "sigma_z": "z",
}

_OPERATING_POINT = {"gamma": 0.05, "omega_c": 10.0, "beta": 5.0}


def _preset_configs(name: str, n_realizations: int | None = None):
    """Expand a preset into (subdir, config-dict) entries."""
    n = n_realizations
    base = {
        "bath": dict(_OPERATING_POINT),
        "grid": {"n_steps": 4096, "t_end": DEFAULT_T_END},
        "master_seed": 20210607,
    }
    if name == "fig2a":
        cfg = copy.deepcopy(base)
        cfg.update(
            kind="pair-dynamics",
            pairs=["sigma_x", "sigma_y", "sigma_z"],
            drive={"enabled": False},
            n_realizations=n or 100000,
            heat_flux=True,
        )
        return [("", cfg)]
    if name == "fig2b":
        cfg = copy.deepcopy(base)
        cfg.update(
            kind="pair-dynamics",
            pairs=["sigma_x", "sigma_y", "sigma_z"],
            drive={"enabled": True, "lambda0": 1.0},
            n_realizations=n or 100000,
            heat_flux=True,
        )
        return [("", cfg)]
    if name == "fig3":
        out = []
        for sub, enabled in (("undriven", False), ("driven", True)):
            cfg = copy.deepcopy(base)
            cfg.update(
                kind="heat-flux",
                pairs=["sigma_z", "sigma_x"],
                drive={"enabled": enabled, "lambda0": 1.0},
                n_realizations=n or 100000,
            )
            out.append((sub, cfg))
        return out
    if name == "fig4":
        cfg = copy.deepcopy(base)
        cfg.update(
            kind="loss-gain-sweep",
            pairs=["sigma_x", "sigma_y", "sigma_z"],
            n_realizations=n or 100000,
            sweep={
                "betas": [1.0, 2.5, 5.0, 10.0],
                "gammas": [0.01, 0.05, 0.1],
                "drives": [False, True],
            },
        )
        return [("", cfg)]
    raise ConfigValidationError([f"unknown preset {name!r}"])


def validate_config(cfg) -> list[str]:
    """Static validation; returns the full list of violations."""
    v = []
    if not isinstance(cfg, dict):
        return ["config root must be a mapping"]
    kind = cfg.get("kind")
    if kind not in KINDS:
        v.append(f"kind: must be one of {', '.join(KINDS)}; got {kind!r}")

    bath = cfg.get("bath")
    if not isinstance(bath, dict):
        v.append("bath: section is required")
        bath = {}
    gamma = bath.get("gamma")
    if not isinstance(gamma, (int, float)) or gamma < 0:
        v.append("bath.gamma: must be a number >= 0")
    omega_c = bath.get("omega_c")
    if not isinstance(omega_c, (int, float)) or omega_c <= 0:
        v.append("bath.omega_c: must be a number > 0")
    beta = bath.get("beta")
    if not isinstance(beta, (int, float)) or beta <= 0:
        v.append("bath.beta: must be a number > 0")
    quad = bath.get("quadrature")
    if quad is not None:
        omax = quad.get("omega_max")
        if not isinstance(omax, (int, float)) or (
            isinstance(omega_c, (int, float)) and omax <= omega_c
        ):
            v.append("bath.quadrature.omega_max: must exceed bath.omega_c")
        npts = quad.get("n_points", 16384)
        if not isinstance(npts, int) or npts < 2:
            v.append("bath.quadrature.n_points: must be an integer >= 2")

    drive = cfg.get("drive", {})
    if drive and not isinstance(drive, dict):
        v.append("drive: must be a mapping")
    elif isinstance(drive, dict):
        lam = drive.get("lambda0", 1.0)
        if not isinstance(lam, (int, float)) or lam < 0:
            v.append("drive.lambda0: must be a number >= 0")

    grid = cfg.get("grid", {})
    if isinstance(grid, dict):
        n_steps = grid.get("n_steps", 4096)
        if not isinstance(n_steps, int) or n_steps < 2:
            v.append("grid.n_steps: must be an integer >= 2")
        t_end = grid.get("t_end", DEFAULT_T_END)
        if not isinstance(t_end, (int, float)) or t_end <= 0:
            v.append("grid.t_end: must be a number > 0")
    else:
        v.append("grid: must be a mapping")

    if kind in ("noise-selftest", "pair-dynamics", "heat-flux", "loss-gain-sweep"):
        n = cfg.get("n_realizations")
        if not isinstance(n, int) or n < 1:
            v.append("n_realizations: must be an integer >= 1")
        seed = cfg.get("master_seed")
        if not isinstance(seed, int) or not (0 <= seed < 2**64):
            v.append("master_seed: must be an integer in [0, 2^64)")

    if kind in ("pair-dynamics", "heat-flux", "loss-gain-sweep"):
        pairs = cfg.get("pairs")
        if not isinstance(pairs, list) or not pairs:
            v.append("pairs: a non-empty list of Pauli labels is required")
        else:
            for p in pairs:
                if p not in _PAIR_ALIASES:
                    v.append(f"pairs: unknown label {p!r}")

    if kind == "loss-gain-sweep":
        sweep = cfg.get("sweep")
        if not isinstance(sweep, dict):
            v.append("sweep: section is required for loss-gain-sweep")
        else:
            betas = sweep.get("betas", [])
            gammas = sweep.get("gammas", [])
            if not betas and not gammas:
                v.append("sweep: at least one of betas/gammas must be non-empty")
            for b in betas:
                if not isinstance(b, (int, float)) or b <= 0:
                    v.append(f"sweep.betas: invalid value {b!r}")
            for g in gammas:
                if not isinstance(g, (int, float)) or g < 0:
                    v.append(f"sweep.gammas: invalid value {g!r}")
    return v


def _bath_from_cfg(cfg) -> BathSpec:
    b = cfg["bath"]
    quad = b.get("quadrature")
    qspec = None
    if quad:
        qspec = QuadratureSpec(
            omega_max=float(quad["omega_max"]), n_points=int(quad.get("n_points", 16384))
        )
    return BathSpec(
        gamma=float(b["gamma"]),
        omega_c=float(b["omega_c"]),
        beta=float(b["beta"]),
        quadrature=qspec,
    )


def _drive_from_cfg(cfg) -> DriveSpec:
    d = cfg.get("drive", {}) or {}
    return DriveSpec(
        lambda_0=float(d.get("lambda0", 1.0)),
        enabled=bool(d.get("enabled", False)),
        omega=float(d.get("omega", 1.0)),
    )


def _ensemble_config(cfg, pair_axis) -> EnsembleConfig:
    grid = cfg.get("grid", {}) or {}
    return EnsembleConfig(
        bath=_bath_from_cfg(cfg),
        drive=_drive_from_cfg(cfg),
        pair=pair_axis,
        n_realizations=int(cfg["n_realizations"]),
        master_seed=int(cfg["master_seed"]),
        n_steps=int(grid.get("n_steps", 4096)),
        t_end=float(grid.get("t_end", DEFAULT_T_END)),
    )


class _ArtifactWriter:
    def __init__(self, outdir: Path, cfg: dict, argv):
        self.outdir = outdir
        self.cfg = cfg
        self.argv = list(argv) if argv else []
        self.written = []
        outdir.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        return self.outdir / name

    def sidecar(self, name: str, extra: dict | None = None) -> None:
        payload = {
            "artifact": name,
            "config": self.cfg,
            "master_seed": self.cfg.get("master_seed"),
            "code_version": __version__,
            "numpy_version": np.__version__,
            "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
            "command": self.argv,
        }
        if extra:
            payload.update(extra)
        with open(self.outdir / f"{name}.provenance.json", "w", newline="\n") as fh:
            json.dump(payload, fh, indent=2, default=str)
            fh.write("\n")
        self.written.append(name)

    def done(self, name: str, extra: dict | None = None) -> None:
        self.sidecar(name, extra)
        print(f"wrote {self.outdir / name}")


def _run_bath_table(cfg, writer: _ArtifactWriter, workers: int) -> None:
    bath = _bath_from_cfg(cfg)
    grid = cfg.get("grid", {}) or {}
    n_steps = int(grid.get("n_steps", 4096))
    t_end = float(grid.get("t_end", DEFAULT_T_END))
    t_grid = np.linspace(0.0, t_end, n_steps + 1)
    table = tabulate_correlation(bath, t_grid)
    name = "bath_correlation.csv"
    export_correlation_csv(table, writer.path(name))
    writer.done(name)


def _run_noise_selftest(cfg, writer: _ArtifactWriter, workers: int) -> None:
    grid = cfg.get("grid", {}) or {}
    n_steps = int(grid.get("n_steps", 4096))
    t_end = float(grid.get("t_end", DEFAULT_T_END))
    helper = EnsembleConfig(
        bath=_bath_from_cfg(cfg),
        drive=_drive_from_cfg(cfg),
        pair="z",
        n_realizations=int(cfg["n_realizations"]),
        master_seed=int(cfg["master_seed"]),
        n_steps=n_steps,
        t_end=t_end,
    )
    table = build_table(helper)
    gen = NoiseGenerator(table, helper.n_nodes)
    acc = NoiseStatAccumulator(table, helper.n_nodes, n_lags=int(cfg.get("n_lags", 20)))
    N = helper.n_realizations
    for lo in range(0, N, 512):
        xi, nu = gen.generate_block(helper.master_seed, range(lo, min(lo + 512, N)))
        acc.update(xi, nu)
    report = acc.report()
    name = "noise_selftest.json"
    with open(writer.path(name), "w", newline="\n") as fh:
        fh.write(report.to_json())
        fh.write("\n")
    writer.done(name, {"passed": bool(report.passed)})
    if cfg.get("dump_first_path"):
        dump = "noise_path_000000.csv"
        export_noise_csv(gen.generate(helper.master_seed, 0), writer.path(dump))
        writer.done(dump)
    if not report.passed:
        raise NumericalError("noise self-test failed: estimated moments off target")


def _analyze_pair(cfg, writer, axis, run, with_heat_flux):
    report = build_info_flow_report(run)
    stem = f"pair_sigma_{axis}"
    export_info_flow_csv(report, writer.path(f"{stem}_infoflow.csv"))
    writer.done(f"{stem}_infoflow.csv")
    extra = {}
    if with_heat_flux:
        omega = run.config.drive.omega
        for tag, res in (("plus", run.plus), ("minus", run.minus)):
            flux = heat_flux(res, omega=omega)
            fname = f"{stem}_{tag}_heatflux.csv"
            export_heat_flux_csv(flux, writer.path(fname))
            writer.done(fname)
            extra[f"heat_backflow_overlap_{tag}"] = backflow_heat_overlap(
                report.window_flag, flux
            )
    for tag, res in (("plus", run.plus), ("minus", run.minus)):
        fname = f"{stem}_{tag}_ensemble.csv"
        export_ensemble_csv(res, writer.path(fname))
        writer.done(fname)
    extra["diverged"] = len(run.plus.diverged)
    export_summary_json(report, writer.path(f"{stem}_summary.json"), extra)
    writer.done(f"{stem}_summary.json")
    return report


def _run_pair_dynamics(cfg, writer: _ArtifactWriter, workers: int) -> None:
    with_flux = bool(cfg.get("heat_flux", True)) or cfg["kind"] == "heat-flux"
    for label in cfg["pairs"]:
        axis = _PAIR_ALIASES[label]
        run = run_pair(_ensemble_config(cfg, axis), workers=workers)
        _analyze_pair(cfg, writer, axis, run, with_flux)


def _run_loss_gain_sweep(cfg, writer: _ArtifactWriter, workers: int) -> None:
    sweep = cfg["sweep"]
    drives = sweep.get("drives", [False, True])
    rows = []
    panels = []
    if sweep.get("betas"):
        panels.append(("a", "beta", sweep["betas"]))
    if sweep.get("gammas"):
        panels.append(("b", "gamma", sweep["gammas"]))
    for panel, param, values in panels:
        for value in values:
            sub = copy.deepcopy(cfg)
            sub["bath"][param] = float(value)
            for driven in drives:
                sub["drive"] = dict(cfg.get("drive", {}) or {})
                sub["drive"]["enabled"] = bool(driven)
                sub["drive"].setdefault("lambda0", 1.0)
                for label in cfg["pairs"]:
                    axis = _PAIR_ALIASES[label]
                    run = run_pair(_ensemble_config(sub, axis), workers=workers)
                    report = build_info_flow_report(run)
                    rows.append(
                        (
                            panel,
                            param,
                            float(value),
                            axis,
                            int(driven),
                            report.info_loss,
                            report.info_gain,
                            report.first_backflow_time,
                        )
                    )
    name = "loss_gain_bars.csv"
    with open(writer.path(name), "w", newline="\n") as fh:
        fh.write("panel,sweep_param,sweep_value,pair,driven,info_loss,info_gain,onset_time\n")
        for row in rows:
            onset = "" if row[7] is None else f"{row[7]:.17g}"
            fh.write(
                f"{row[0]},{row[1]},{row[2]:.17g},{row[3]},{row[4]},"
                f"{row[5]:.17g},{row[6]:.17g},{onset}\n"
            )
    writer.done(name)


_RUNNERS = {
    "bath-table": _run_bath_table,
    "noise-selftest": _run_noise_selftest,
    "pair-dynamics": _run_pair_dynamics,
    "heat-flux": _run_pair_dynamics,
    "loss-gain-sweep": _run_loss_gain_sweep,
}


def _load_config_entries(args):
    """Resolve --config/--preset into (subdir, config) entries."""
    if bool(args.config) == bool(args.preset):
        raise ConfigValidationError(["provide exactly one of --config or --preset"])
    if args.preset:
        entries = _preset_configs(args.preset, getattr(args, "n_realizations", None))
    else:
        try:
            with open(args.config) as fh:
                cfg = yaml.safe_load(fh)
        except OSError:
            raise
        except yaml.YAMLError as exc:
            raise ConfigValidationError([f"config is not valid YAML: {exc}"])
        entries = [("", cfg)]
    for _, cfg in entries:
        if isinstance(cfg, dict):
            if getattr(args, "seed", None) is not None:
                cfg["master_seed"] = args.seed
            if getattr(args, "n_realizations", None) is not None and "n_realizations" in cfg:
                cfg["n_realizations"] = args.n_realizations
    return entries


def _error_report(kind, exc, violations=None):
    payload = {"error": kind, "detail": str(exc)}
    if violations:
        payload["violations"] = violations
    print(json.dumps(payload), file=sys.stderr)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="slnsim",
        description="Stochastic Liouville simulator: experiments to CSV/JSON artifacts",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_run_flags=True):
        p.add_argument("--config", help="YAML experiment config")
        p.add_argument("--preset", help="named preset (fig2a, fig2b, fig3, fig4)")
        if with_run_flags:
            p.add_argument("--out", default="out", help="output directory")
            p.add_argument("--seed", type=int, default=None, help="override master seed")
            p.add_argument("--workers", type=int, default=1, help="worker processes")
            p.add_argument(
                "--n-realizations", type=int, default=None, dest="n_realizations",
                help="override realization count",
            )

    add_common(sub.add_parser("simulate", help="run an experiment"))
    add_common(sub.add_parser("validate", help="validate a config"), with_run_flags=False)
    add_common(sub.add_parser("bath-table", help="tabulate the bath correlation"))
    add_common(sub.add_parser("noise-selftest", help="verify noise statistics"))

    args = parser.parse_args(argv)

    try:
        entries = _load_config_entries(args)
        if args.command == "validate":
            all_violations = []
            for _, cfg in entries:
                all_violations.extend(validate_config(cfg))
            if all_violations:
                raise ConfigValidationError(all_violations)
            print("config ok")
            return 0

        if args.command == "bath-table":
            for _, cfg in entries:
                cfg["kind"] = "bath-table"
        elif args.command == "noise-selftest":
            for _, cfg in entries:
                cfg["kind"] = "noise-selftest"
                cfg.setdefault("n_realizations", 10000)
                cfg.setdefault("master_seed", 20210607)

        all_violations = []
        for _, cfg in entries:
            all_violations.extend(validate_config(cfg))
        if all_violations:
            raise ConfigValidationError(all_violations)

        for subdir, cfg in entries:
            outdir = Path(args.out) / subdir if subdir else Path(args.out)
            writer = _ArtifactWriter(outdir, cfg, argv or sys.argv[1:])
            _RUNNERS[cfg["kind"]](cfg, writer, args.workers)
        return 0
    except ConfigValidationError as exc:
        _error_report("config", exc, exc.violations)
        return 2
    except NumericalError as exc:
        _error_report("numerical", exc)
        return 3
    except OSError as exc:
        _error_report("io", exc)
        return 4
    except SlnsimError as exc:
        _error_report("config", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
