"""slnsim: exact stochastic propagation of a driven qubit in an Ohmic bath.

The package decomposes into

* :mod:`slnsim.bath` -- spectral density and the complex bath
  autocorrelation function L(t);
* :mod:`slnsim.noisegen` -- synthesis of the correlated complex noise
  pair (xi, nu) reproducing L, plus a statistical self-test;
* :mod:`slnsim.propagator` -- fixed-step RK4 integration of the
  per-realization stochastic Liouville equation;
* :mod:`slnsim.ensemble` -- deterministic, batch-pooled Monte Carlo
  averaging (including shared-noise preparation pairs);
* :mod:`slnsim.observables` -- trace-distance/information-flow
  diagnostics, backflow windows, loss/gain, BLP maximization and the
  heat flux;
* :mod:`slnsim.cli` -- the experiment runner emitting CSV/JSON
  artifacts.
"""

__version__ = "0.1.0"

from .bath import (
    BathSpec,
    CorrelationTable,
    QuadratureSpec,
    bath_correlation,
    spectral_density,
    tabulate_correlation,
)
from .ensemble import (
    EnsembleConfig,
    EnsembleResult,
    PairRun,
    build_table,
    merge,
    run_ensemble,
    run_pair,
)
from .noisegen import (
    NoiseGenerator,
    NoisePath,
    generate_noise_pair,
    verify_noise_statistics,
)
from .observables import (
    BlpResult,
    HeatFluxSeries,
    InfoFlowReport,
    antipodal_pair_grid,
    backflow_windows,
    blp_measure,
    build_info_flow_report,
    heat_flux,
    info_loss_gain,
    information_flow,
    trace_distance,
)
from .propagator import (
    DriveSpec,
    Trajectory,
    bloch_vector,
    pauli_eigenstate,
    propagate,
    sln_rhs,
)

__all__ = [
    "__version__",
    "BathSpec",
    "QuadratureSpec",
    "CorrelationTable",
    "spectral_density",
    "bath_correlation",
    "tabulate_correlation",
    "NoisePath",
    "NoiseGenerator",
    "generate_noise_pair",
    "verify_noise_statistics",
    "DriveSpec",
    "Trajectory",
    "pauli_eigenstate",
    "bloch_vector",
    "sln_rhs",
    "propagate",
    "EnsembleConfig",
    "EnsembleResult",
    "PairRun",
    "build_table",
    "run_ensemble",
    "run_pair",
    "merge",
    "InfoFlowReport",
    "HeatFluxSeries",
    "BlpResult",
    "trace_distance",
    "information_flow",
    "backflow_windows",
    "blp_measure",
    "antipodal_pair_grid",
    "heat_flux",
    "info_loss_gain",
    "build_info_flow_report",
]
