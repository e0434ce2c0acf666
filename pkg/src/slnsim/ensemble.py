"""Monte Carlo averaging of stochastic Liouville trajectories.

The physical state is the expectation of the per-realization matrix over
noise realizations.  This module orchestrates that average with

* counter-based sub-seeding: realization i always consumes the Philox
  stream keyed by (master_seed, i), so results never depend on worker
  count or scheduling;
* canonical batching: realizations are grouped into batches aligned to
  absolute multiples of ``batch_size``, each batch is reduced
  vectorized, and batch partials are pooled in index order with exact
  streaming mean/variance combination;
* shared-noise pair runs: the two initial preparations of a
  distinguishability pair ride the same realizations, and difference
  statistics (including per-batch replicate means for derivative error
  bars) are accumulated alongside the individual states.

Per-node accumulators track the averaged state, its entrywise standard
error, the trace, and the heat-flux correlator xi(t) * Tr(sigma_y rho_Z),
whose per-realization value is a linear functional of the unnormalized
state so the ensemble mean is an unbiased estimator.
"""

from __future__ import annotations

import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .bath import BathSpec, CorrelationTable, tabulate_correlation
from .errors import EnsembleDivergenceError, GridMismatchError, InputError
from .noisegen import NoiseGenerator, required_table_length
from .propagator import DriveSpec, pauli_eigenstate, propagate_block

__all__ = [
    "EnsembleConfig",
    "EnsembleResult",
    "PairRun",
    "build_table",
    "run_ensemble",
    "run_pair",
    "merge",
    "export_ensemble_csv",
]

DEFAULT_T_END = 2.0 * np.pi


@dataclass(frozen=True)
class EnsembleConfig:
    """Everything needed to reproduce one ensemble run.

    Exactly one of ``rho0`` (a physical initial state) or ``pair`` (a
    Pauli axis label whose +/- eigenstates form the initial pair) must
    be given.
    """

    bath: BathSpec
    drive: DriveSpec
    n_realizations: int
    master_seed: int
    rho0: np.ndarray | None = None
    pair: str | None = None
    n_steps: int = 4096
    t_end: float = DEFAULT_T_END
    batch_size: int = 1024
    substeps: int = 1
    divergence_threshold: float = 1e-3

    def __post_init__(self):
        if self.n_realizations < 1:
            raise InputError("n_realizations must be >= 1")
        if self.n_steps < 2:
            raise InputError("n_steps must be >= 2")
        if self.t_end <= 0:
            raise InputError("t_end must be > 0")
        if self.batch_size < 1:
            raise InputError("batch_size must be >= 1")
        if (self.rho0 is None) == (self.pair is None):
            raise InputError("provide exactly one of rho0 or pair")
        if self.pair is not None and self.pair not in ("x", "y", "z"):
            raise InputError(f"pair must be x, y or z; got {self.pair!r}")
        if self.rho0 is not None:
            object.__setattr__(self, "rho0", np.asarray(self.rho0, dtype=complex))

    @property
    def n_nodes(self) -> int:
        return self.n_steps + 1

    @property
    def dt(self) -> float:
        return self.t_end / self.n_steps

    @property
    def t_grid(self) -> np.ndarray:
        return np.linspace(0.0, self.t_end, self.n_nodes)

    def key(self) -> tuple:
        """Hashable identity used to decide whether results may be merged."""
        rho_bytes = None if self.rho0 is None else self.rho0.tobytes()
        return (
            self.bath,
            self.drive,
            int(self.master_seed),
            rho_bytes,
            self.pair,
            self.n_steps,
            float(self.t_end),
            self.batch_size,
            self.substeps,
        )


# --- streaming statistics --------------------------------------------------


@dataclass
class _ChannelStats:
    """Mean and centered second moments (re/im split) of one observable."""

    mean: np.ndarray  # complex
    m2_re: np.ndarray
    m2_im: np.ndarray

    @staticmethod
    def from_values(v: np.ndarray) -> "_ChannelStats":
        """Batch statistics over axis 0, exact for identical rows."""
        ref = v[0]
        d = v - ref
        dm = d.mean(axis=0)
        mean = ref + dm
        r = d - dm
        return _ChannelStats(mean, (r.real**2).sum(axis=0), (r.imag**2).sum(axis=0))

    @staticmethod
    def pool(a: "_ChannelStats", na: int, b: "_ChannelStats", nb: int) -> "_ChannelStats":
        n = na + nb
        delta = b.mean - a.mean
        w = na * nb / n
        return _ChannelStats(
            a.mean + delta * (nb / n),
            a.m2_re + b.m2_re + w * delta.real**2,
            a.m2_im + b.m2_im + w * delta.imag**2,
        )

    def se(self, n: int) -> np.ndarray:
        """Combined (re + im) standard error of the mean; NaN for n < 2."""
        if n < 2:
            return np.full(self.mean.shape, np.nan)
        return np.sqrt((self.m2_re + self.m2_im) / (n - 1) / n)

    def se_components(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        if n < 2:
            nan = np.full(self.mean.shape, np.nan)
            return nan, nan.copy()
        return (
            np.sqrt(self.m2_re / (n - 1) / n),
            np.sqrt(self.m2_im / (n - 1) / n),
        )


@dataclass
class _BatchPartial:
    start: int
    count: int
    channels: dict
    diverged: list  # (realization_index, node, norm)


class _NodeAccumulator:
    """Per-node batch statistics for one propagated state block."""

    def __init__(self, n_nodes, n_entries=4):
        self.rho = _ChannelStats(
            np.empty((n_nodes, n_entries), dtype=complex),
            np.empty((n_nodes, n_entries)),
            np.empty((n_nodes, n_entries)),
        )
        self.trace = _ChannelStats(
            np.empty(n_nodes, dtype=complex), np.empty(n_nodes), np.empty(n_nodes)
        )
        self.jq = _ChannelStats(
            np.empty(n_nodes, dtype=complex), np.empty(n_nodes), np.empty(n_nodes)
        )

    def set_node(self, k, y, xk):
        st = _ChannelStats.from_values(y)
        self.rho.mean[k] = st.mean
        self.rho.m2_re[k] = st.m2_re
        self.rho.m2_im[k] = st.m2_im
        tr = _ChannelStats.from_values(y[:, 0] + y[:, 3])
        self.trace.mean[k] = tr.mean
        self.trace.m2_re[k] = tr.m2_re
        self.trace.m2_im[k] = tr.m2_im
        z = _ChannelStats.from_values(xk * (1j * (y[:, 1] - y[:, 2])))
        self.jq.mean[k] = z.mean
        self.jq.m2_re[k] = z.m2_re
        self.jq.m2_im[k] = z.m2_im

    def as_channels(self, prefix):
        return {
            f"{prefix}rho": self.rho,
            f"{prefix}trace": self.trace,
            f"{prefix}jq": self.jq,
        }


class _DiffAccumulator:
    """Difference statistics of a shared-noise pair."""

    def __init__(self, n_nodes):
        self.diff = _ChannelStats(
            np.empty((n_nodes, 4), dtype=complex),
            np.empty((n_nodes, 4)),
            np.empty((n_nodes, 4)),
        )

    def set_node(self, k, delta):
        st = _ChannelStats.from_values(delta)
        self.diff.mean[k] = st.mean
        self.diff.m2_re[k] = st.m2_re
        self.diff.m2_im[k] = st.m2_im


# --- batch execution ---------------------------------------------------------


def _canonical_batches(start, stop, batch_size):
    edges = [start]
    nxt = (start // batch_size + 1) * batch_size
    while nxt < stop:
        edges.append(nxt)
        nxt += batch_size
    edges.append(stop)
    return list(zip(edges[:-1], edges[1:]))


def _initial_states(config: EnsembleConfig):
    if config.pair is not None:
        return pauli_eigenstate(config.pair, +1), pauli_eigenstate(config.pair, -1)
    return config.rho0, None


def _run_batch(table: CorrelationTable, config: EnsembleConfig, start: int, stop: int):
    """Propagate realizations [start, stop) and reduce them to a partial."""
    n_nodes = config.n_nodes
    gen = NoiseGenerator(table, n_nodes)
    xi, nu = gen.generate_block(config.master_seed, range(start, stop))
    rho_plus, rho_minus = _initial_states(config)
    is_pair = rho_minus is not None
    B = stop - start

    def attempt(rows):
        nb = len(rows)
        xi_rows = xi[rows]
        nu_rows = nu[rows]
        if is_pair:
            rho0s = np.concatenate(
                [
                    np.broadcast_to(rho_plus, (nb, 2, 2)),
                    np.broadcast_to(rho_minus, (nb, 2, 2)),
                ]
            ).copy()
            xi_b = np.concatenate([xi_rows, xi_rows])
            nu_b = np.concatenate([nu_rows, nu_rows])
        else:
            rho0s = np.broadcast_to(rho_plus, (nb, 2, 2)).copy()
            xi_b = xi_rows
            nu_b = nu_rows

        acc_p = _NodeAccumulator(n_nodes)
        acc_m = _NodeAccumulator(n_nodes) if is_pair else None
        acc_d = _DiffAccumulator(n_nodes) if is_pair else None

        def observer(k, y, xk):
            if is_pair:
                acc_p.set_node(k, y[:nb], xk[:nb])
                acc_m.set_node(k, y[nb:], xk[nb:])
                acc_d.set_node(k, y[:nb] - y[nb:])
            else:
                acc_p.set_node(k, y, xk)

        _, _, diverged = propagate_block(
            rho0s,
            config.t_grid,
            xi_b,
            nu_b,
            config.drive,
            substeps=config.substeps,
            observer=observer,
        )
        bad = {}
        for row, (node, norm) in diverged.items():
            real_row = row % nb
            if real_row not in bad or node < bad[real_row][0]:
                bad[real_row] = (node, norm)
        return acc_p, acc_m, acc_d, bad

    rows = np.arange(B)
    acc_p, acc_m, acc_d, bad = attempt(rows)
    diverged_info = [
        (start + int(rows[r]), node, norm) for r, (node, norm) in sorted(bad.items())
    ]
    if bad:
        keep = np.array([r for r in rows if r not in bad], dtype=int)
        if len(keep) == 0:
            return _BatchPartial(start, 0, {}, diverged_info)
        acc_p, acc_m, acc_d, bad2 = attempt(keep)
        if bad2:  # divergence must be a property of the path, not the batch
            raise EnsembleDivergenceError(len(bad) + len(bad2), B, 0.0)

    count = B - len(diverged_info)
    channels = acc_p.as_channels("plus_" if acc_m is not None else "")
    if acc_m is not None:
        channels.update(acc_m.as_channels("minus_"))
        channels["diff"] = acc_d.diff
    return _BatchPartial(start, count, channels, diverged_info)


def _pool_partials(partials):
    partials = sorted(partials, key=lambda p: p.start)
    live = [p for p in partials if p.count > 0]
    if not live:
        raise EnsembleDivergenceError(
            sum(len(p.diverged) for p in partials), max(1, len(partials)), 0.0
        )
    total = live[0].count
    pooled = dict(live[0].channels)
    for p in live[1:]:
        for name in pooled:
            pooled[name] = _ChannelStats.pool(pooled[name], total, p.channels[name], p.count)
        total += p.count
    diverged = [d for p in partials for d in p.diverged]
    return total, pooled, diverged


# --- public results ----------------------------------------------------------


@dataclass
class EnsembleResult:
    """Averaged dynamics of one ensemble of realizations.

    ``rho_mean`` is the (n_nodes, 2, 2) averaged state; ``rho_se`` the
    per-entry standard error (NaN when only one realization was run).
    ``jq_mean`` is the per-node mean of xi * Tr(sigma_y rho_Z) with
    separate real/imag standard errors, from which the heat flux is
    derived downstream.
    """

    config: EnsembleConfig
    index_start: int
    index_stop: int
    n_effective: int
    t_grid: np.ndarray
    rho_mean: np.ndarray
    rho_se: np.ndarray
    trace_mean: np.ndarray
    trace_se: np.ndarray
    jq_mean: np.ndarray
    jq_se_re: np.ndarray
    jq_se_im: np.ndarray
    diverged: list
    partials: list | None = field(default=None, repr=False)
    state_label: str = ""

    @property
    def stderr_defined(self) -> bool:
        return self.n_effective >= 2


@dataclass
class PairRun:
    """Shared-noise evolution of the +/- eigenstate pair of one Pauli axis.

    ``diff_mean`` is the averaged difference matrix (flattened 2x2 per
    node) whose per-batch replicate means support error estimates of
    derived series such as the information flow.
    """

    label: str
    config: EnsembleConfig
    plus: EnsembleResult
    minus: EnsembleResult
    diff_mean: np.ndarray  # (n_nodes, 4) complex
    diff_se: np.ndarray  # (n_nodes, 4) combined component SE
    batch_diff_means: np.ndarray  # (n_batches, n_nodes, 4) complex
    batch_counts: np.ndarray  # (n_batches,)


@lru_cache(maxsize=8)
def _cached_table(bath: BathSpec, dt: float, length: int) -> CorrelationTable:
    return tabulate_correlation(bath, np.arange(length) * dt)


def build_table(config: EnsembleConfig) -> CorrelationTable:
    """Correlation table sized for this config's noise embedding."""
    return _cached_table(config.bath, config.dt, required_table_length(config.n_nodes))


def _execute(config, workers, table, index_range):
    if index_range is None:
        index_range = (0, config.n_realizations)
    start, stop = index_range
    if not (0 <= start < stop):
        raise InputError("index_range must satisfy 0 <= start < stop")
    if table is None:
        table = build_table(config)
    batches = _canonical_batches(start, stop, config.batch_size)
    if workers <= 1 or len(batches) == 1:
        partials = [_run_batch(table, config, lo, hi) for lo, hi in batches]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_run_batch, table, config, lo, hi) for lo, hi in batches
            ]
            partials = [f.result() for f in futures]

    total, pooled, diverged = _pool_partials(partials)
    attempted = stop - start
    if len(diverged) > config.divergence_threshold * attempted:
        raise EnsembleDivergenceError(
            len(diverged), attempted, config.divergence_threshold
        )
    return total, pooled, diverged, partials, (start, stop)


def _build_result(config, prefix, total, pooled, diverged, partials, index_range, label=""):
    rho = pooled[f"{prefix}rho"]
    trace = pooled[f"{prefix}trace"]
    jq = pooled[f"{prefix}jq"]
    jq_se_re, jq_se_im = jq.se_components(total)
    return EnsembleResult(
        config=config,
        index_start=index_range[0],
        index_stop=index_range[1],
        n_effective=total,
        t_grid=config.t_grid,
        rho_mean=rho.mean.reshape(-1, 2, 2),
        rho_se=rho.se(total).reshape(-1, 2, 2),
        trace_mean=trace.mean,
        trace_se=trace.se(total),
        jq_mean=jq.mean,
        jq_se_re=jq_se_re,
        jq_se_im=jq_se_im,
        diverged=diverged,
        partials=partials,
        state_label=label,
    )


def run_ensemble(
    config: EnsembleConfig,
    workers: int = 1,
    table: CorrelationTable | None = None,
    index_range: tuple[int, int] | None = None,
) -> EnsembleResult:
    """Average the stochastic evolution of a single initial state.

    Results are bitwise independent of ``workers``: batches are fixed by
    absolute realization index and pooled in index order.
    """
    if config.pair is not None:
        raise InputError("config requests a pair; use run_pair")
    total, pooled, diverged, partials, rng = _execute(config, workers, table, index_range)
    return _build_result(config, "", total, pooled, diverged, partials, rng)


def run_pair(
    config: EnsembleConfig,
    workers: int = 1,
    table: CorrelationTable | None = None,
    index_range: tuple[int, int] | None = None,
) -> PairRun:
    """Average both eigenstates of a Pauli pair over shared noise."""
    if config.pair is None:
        raise InputError("config does not request a pair; use run_ensemble")
    total, pooled, diverged, partials, rng = _execute(config, workers, table, index_range)
    plus = _build_result(
        config, "plus_", total, pooled, diverged, partials, rng, label=f"{config.pair}+"
    )
    minus = _build_result(
        config, "minus_", total, pooled, diverged, partials, rng, label=f"{config.pair}-"
    )
    live = [p for p in sorted(partials, key=lambda p: p.start) if p.count > 0]
    diff = pooled["diff"]
    return PairRun(
        label=config.pair,
        config=config,
        plus=plus,
        minus=minus,
        diff_mean=diff.mean,
        diff_se=diff.se(total),
        batch_diff_means=np.stack([p.channels["diff"].mean for p in live]),
        batch_counts=np.array([p.count for p in live]),
    )


def merge(results) -> EnsembleResult:
    """Pool ensemble shards into the result of one combined run.

    Inputs must share the config (including master seed and grid) and
    cover disjoint realization-index ranges.  When shard boundaries are
    aligned to the canonical batch size the pooled mean is bitwise
    identical to a direct single run over the union.
    """
    results = list(results)
    if not results:
        raise InputError("merge needs at least one result")
    key = results[0].config.key()
    ranges = []
    all_partials = []
    for r in results:
        if r.config.key() != key:
            raise InputError("cannot merge results with differing configs")
        if r.partials is None:
            raise InputError("result was built without retained batch partials")
        ranges.append((r.index_start, r.index_stop))
        all_partials.extend(r.partials)
    ranges.sort()
    for (a0, a1), (b0, b1) in zip(ranges[:-1], ranges[1:]):
        if b0 < a1:
            raise InputError("realization-index ranges overlap")

    total, pooled, diverged = _pool_partials(all_partials)
    config = results[0].config
    if "rho" in pooled:
        prefix = ""
    else:  # pair-run shards: recover the side this result describes
        prefix = "minus_" if results[0].state_label.endswith("-") else "plus_"
    return _build_result(
        config,
        prefix,
        total,
        pooled,
        diverged,
        all_partials,
        (ranges[0][0], ranges[-1][1]),
        label=results[0].state_label,
    )


def export_ensemble_csv(result: EnsembleResult, file) -> None:
    """Write the averaged series as CSV.

    Columns: ``t``, re/im of the four averaged entries, the four
    entrywise standard errors, and the heat-flux correlator mean
    (re, im) with its standard error.
    """
    entries = ["rho00", "rho01", "rho10", "rho11"]
    header = ["t"]
    for e in entries:
        header += [f"re_{e}", f"im_{e}"]
    header += [f"stderr_{e}" for e in entries]
    header += ["jq_mean_re", "jq_mean_im", "jq_se"]
    flat = result.rho_mean.reshape(-1, 4)
    se = result.rho_se.reshape(-1, 4)
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for k, t in enumerate(result.t_grid):
        cells = [f"{t:.17g}"]
        for j in range(4):
            cells += [f"{flat[k, j].real:.17g}", f"{flat[k, j].imag:.17g}"]
        cells += [f"{se[k, j]:.17g}" for j in range(4)]
        cells += [
            f"{result.jq_mean[k].real:.17g}",
            f"{result.jq_mean[k].imag:.17g}",
            f"{result.jq_se_re[k]:.17g}",
        ]
        buf.write(",".join(cells) + "\n")
    with open(file, "w", newline="\n") as fh:
        fh.write(buf.getvalue())
