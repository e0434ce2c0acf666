"""Information-flow and heat-flux diagnostics.

Distinguishability of two evolving preparations is measured by the trace
distance D = (1/2) Tr|rho_1 - rho_2|; its time derivative is the
information flow, positive values of which signal memory effects
(information returning from the bath).  The accumulated positive area,
maximized over antipodal pure initial pairs, is the BLP non-Markovianity
measure.  Net information loss and first-backflow gain are summarized by
the trace-distance change since t = 0.

Heat exchange with the bath is estimated from the ensemble correlator of
the xi noise with Tr(sigma_y rho_Z); its real part (times -omega) is the
heat flux, negative when heat leaves the system, while the imaginary
part must vanish statistically and is retained as a consistency
diagnostic.

Monte Carlo series are noisy, so the derivative is taken after a local
cubic (Savitzky-Golay) smoothing of D, and backflow is only declared
where the flow exceeds a threshold tied to its pointwise standard error,
estimated from independent sub-ensemble replicates when available.
"""

from __future__ import annotations

import io
import json
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.signal import savgol_filter

from .ensemble import EnsembleResult, PairRun
from .errors import GridMismatchError, InputError

__all__ = [
    "InfoFlowReport",
    "HeatFluxSeries",
    "BlpResult",
    "trace_distance",
    "trace_distance_series",
    "information_flow",
    "backflow_windows",
    "window_flags",
    "blp_measure",
    "antipodal_pair_grid",
    "heat_flux",
    "info_loss_gain",
    "build_info_flow_report",
    "backflow_heat_overlap",
    "export_info_flow_csv",
    "export_heat_flux_csv",
]

DEFAULT_SMOOTH_WINDOW = 31
DEFAULT_MERGE_GAP = 3
_EPSILON_FLOOR = 1e-9


def _hermitize(rho):
    return 0.5 * (rho + np.conj(np.swapaxes(rho, -1, -2)))


def trace_distance(rho1: np.ndarray, rho2: np.ndarray, herm_tol: float = 1e-9) -> float:
    """Trace distance (1/2) Tr|rho_1 - rho_2| of two 2x2 states.

    Inputs must be Hermitian within ``herm_tol`` (max entry deviation);
    smaller deviations are symmetrized away with a warning, larger ones
    raise.  For Hermitian traceless differences this equals the norm of
    the half-difference Bloch vector.
    """
    rho1 = np.asarray(rho1, dtype=complex)
    rho2 = np.asarray(rho2, dtype=complex)
    for rho in (rho1, rho2):
        dev = float(np.max(np.abs(rho - rho.conj().T)))
        if dev > herm_tol:
            raise InputError(
                f"state is not Hermitian: max deviation {dev:.3e} > {herm_tol:.1e}"
            )
        if dev > 1e-14:  # below that it is construction round-off
            warnings.warn(
                f"symmetrizing an almost-Hermitian state (deviation {dev:.3e})",
                stacklevel=2,
            )
    diff = _hermitize(rho1) - _hermitize(rho2)
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(diff))))


def trace_distance_series(diff_series: np.ndarray) -> np.ndarray:
    """Trace distance per node from a series of difference matrices.

    ``diff_series`` has shape (n, 2, 2) (or (n, 4) flattened); it is
    symmetrized before the eigenvalues are taken, which is the natural
    estimator for Monte Carlo averages whose Hermiticity holds only
    statistically.
    """
    d = np.asarray(diff_series, dtype=complex).reshape(-1, 4)
    h00 = d[:, 0].real
    h11 = d[:, 3].real
    h01 = 0.5 * (d[:, 1] + np.conj(d[:, 2]))
    s = 0.5 * (h00 + h11)
    radius = np.sqrt(0.25 * (h00 - h11) ** 2 + np.abs(h01) ** 2)
    return 0.5 * (np.abs(s + radius) + np.abs(s - radius))


def information_flow(
    D_series: np.ndarray,
    t_grid: np.ndarray,
    smooth_window: int | None = None,
    polyorder: int = 3,
) -> np.ndarray:
    """Time derivative of the trace distance.

    Central finite differences in the interior, one-sided at the ends.
    When ``smooth_window`` is given, D is first smoothed with a local
    polynomial filter of that (odd) width; the raw series is left
    untouched in the caller's hands.
    """
    D = np.asarray(D_series, dtype=float)
    t = np.asarray(t_grid, dtype=float)
    if len(D) != len(t):
        raise GridMismatchError("D_series and t_grid lengths differ")
    if len(D) < 3:
        raise InputError("need at least 3 nodes to differentiate")
    steps = np.diff(t)
    dt = steps[0]
    if not np.allclose(steps, dt, rtol=1e-9, atol=0.0):
        raise InputError("t_grid must be uniform")
    if smooth_window is not None:
        if smooth_window % 2 != 1 or smooth_window < polyorder + 2:
            raise InputError("smooth_window must be odd and exceed polyorder + 1")
        if smooth_window <= len(D):
            D = savgol_filter(D, smooth_window, polyorder)
    delta = np.empty_like(D)
    delta[1:-1] = (D[2:] - D[:-2]) / (2.0 * dt)
    delta[0] = (D[1] - D[0]) / dt
    delta[-1] = (D[-1] - D[-2]) / dt
    return delta


def _window_spans(delta, epsilon, merge_gap):
    delta = np.asarray(delta, dtype=float)
    eps = np.broadcast_to(np.asarray(epsilon, dtype=float), delta.shape)
    if np.any(eps <= 0):
        raise InputError("epsilon must be positive")
    above = delta > eps
    spans = []
    start = None
    for k, flag in enumerate(above):
        if flag and start is None:
            start = k
        elif not flag and start is not None:
            spans.append((start, k - 1))
            start = None
    if start is not None:
        spans.append((start, len(above) - 1))
    if not spans:
        return []
    merged = [spans[0]]
    for s, e in spans[1:]:
        if s - merged[-1][1] < merge_gap:
            merged[-1] = (merged[-1][0], e)
        else:
            merged.append((s, e))
    return merged


def backflow_windows(
    delta_series: np.ndarray,
    t_grid: np.ndarray,
    epsilon,
    merge_gap: int = DEFAULT_MERGE_GAP,
) -> list[tuple[float, float]]:
    """Maximal time intervals where the information flow exceeds epsilon.

    ``epsilon`` may be a positive scalar or a per-node array (e.g. three
    standard errors of the flow).  Adjacent intervals separated by fewer
    than ``merge_gap`` nodes are merged.
    """
    t = np.asarray(t_grid, dtype=float)
    return [(float(t[s]), float(t[e])) for s, e in _window_spans(delta_series, epsilon, merge_gap)]


def window_flags(delta_series, epsilon, merge_gap: int = DEFAULT_MERGE_GAP) -> np.ndarray:
    """Boolean per-node membership in a backflow window."""
    flags = np.zeros(len(delta_series), dtype=bool)
    for s, e in _window_spans(delta_series, epsilon, merge_gap):
        flags[s : e + 1] = True
    return flags


def positive_flow_area(delta_series, t_grid, epsilon) -> float:
    """Trapezoid integral of the flow over its above-threshold regions."""
    delta = np.asarray(delta_series, dtype=float)
    t = np.asarray(t_grid, dtype=float)
    eps = np.broadcast_to(np.asarray(epsilon, dtype=float), delta.shape)
    contrib = np.where(delta > eps, delta, 0.0)
    return float(np.trapezoid(contrib, t))


@dataclass
class BlpResult:
    """Maximized positive-flow area over a grid of initial pairs."""

    value: float
    argmax_index: int
    argmax_pair: tuple
    per_pair: np.ndarray


def antipodal_pair_grid(n_azimuth: int = 24, n_polar: int = 12):
    """Antipodal pure-state pairs on a Bloch-angle grid.

    Returns a list of (rho_plus, rho_minus, (theta, phi)) triples with
    the polar angle sampled at midpoints, so no pair is degenerate.
    """
    pairs = []
    for j in range(n_polar):
        theta = (j + 0.5) * np.pi / n_polar
        for k in range(n_azimuth):
            phi = 2.0 * np.pi * k / n_azimuth
            n = np.array(
                [np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)]
            )
            sx = np.array([[0, 1], [1, 0]], dtype=complex)
            sy = np.array([[0, -1j], [1j, 0]], dtype=complex)
            sz = np.array([[1, 0], [0, -1]], dtype=complex)
            ns = n[0] * sx + n[1] * sy + n[2] * sz
            eye = np.eye(2, dtype=complex)
            pairs.append((0.5 * (eye + ns), 0.5 * (eye - ns), (theta, phi)))
    return pairs


def blp_measure(
    pair_grid,
    dynamics_runner,
    epsilon: float = _EPSILON_FLOOR,
    smooth_window: int | None = None,
) -> BlpResult:
    """Maximize the positive-flow area over a grid of initial pairs.

    ``dynamics_runner(rho1, rho2)`` must return ``(t_grid, D_series)``
    for the evolved pair.  Each pair's flow is integrated over its
    above-epsilon regions and the maximum (with the attaining pair) is
    returned.
    """
    pair_grid = list(pair_grid)
    if not pair_grid:
        raise InputError("pair grid is empty")
    areas = np.empty(len(pair_grid))
    for i, pair in enumerate(pair_grid):
        rho1, rho2 = pair[0], pair[1]
        t_grid, D = dynamics_runner(rho1, rho2)
        delta = information_flow(D, t_grid, smooth_window=smooth_window)
        areas[i] = positive_flow_area(delta, t_grid, epsilon)
    best = int(np.argmax(areas))
    return BlpResult(
        value=float(areas[best]),
        argmax_index=best,
        argmax_pair=pair_grid[best],
        per_pair=areas,
    )


@dataclass
class HeatFluxSeries:
    """Heat flux -omega * E[xi * <sigma_y>] and its diagnostics.

    ``jq`` is the real flux (negative = heat flowing into the bath);
    ``jq_imag_residual`` is the imaginary part of the estimator, which
    is zero in expectation and kept as a consistency check against its
    own standard error ``se_imag``.
    """

    t_grid: np.ndarray
    jq: np.ndarray
    jq_imag_residual: np.ndarray
    se: np.ndarray
    se_imag: np.ndarray


def heat_flux(result: EnsembleResult, omega: float = 1.0) -> HeatFluxSeries:
    """Heat-flux series from an ensemble's correlator accumulators."""
    return HeatFluxSeries(
        t_grid=result.t_grid,
        jq=-omega * result.jq_mean.real,
        jq_imag_residual=-omega * result.jq_mean.imag,
        se=abs(omega) * result.jq_se_re,
        se_imag=abs(omega) * result.jq_se_im,
    )


def info_loss_gain(
    D_series: np.ndarray,
    delta_series: np.ndarray,
    t_grid: np.ndarray,
    epsilon,
    merge_gap: int = DEFAULT_MERGE_GAP,
):
    """Net information lost before, and regained during, the first backflow.

    Loss is the trace-distance change from t = 0 to the onset of the
    first backflow window (or to the end of the propagation when no
    backflow occurs); gain is the change across that first window (zero
    without backflow).  Returns (loss, gain, onset_time_or_None).
    """
    D = np.asarray(D_series, dtype=float)
    t = np.asarray(t_grid, dtype=float)
    spans = _window_spans(delta_series, epsilon, merge_gap)
    if not spans:
        return float(D[-1] - D[0]), 0.0, None
    s, e = spans[0]
    return float(D[s] - D[0]), float(D[e] - D[s]), float(t[s])


# --- pair-run analysis -------------------------------------------------------


@dataclass
class InfoFlowReport:
    """Distinguishability diagnostics for one evolved initial pair."""

    label: str
    t_grid: np.ndarray
    D_series: np.ndarray
    D_se: np.ndarray
    delta_series: np.ndarray
    delta_se: np.ndarray
    epsilon: np.ndarray
    windows: list
    window_flag: np.ndarray
    blp_value: float
    info_loss: float
    info_gain: float
    first_backflow_time: float | None
    smooth_window: int | None

    def summary(self) -> dict:
        return {
            "pair": self.label,
            "blp_value": self.blp_value,
            "info_loss": self.info_loss,
            "info_gain": self.info_gain,
            "first_backflow_time": self.first_backflow_time,
            "n_backflow_windows": len(self.windows),
            "backflow_windows": [[a, b] for a, b in self.windows],
            "smooth_window": self.smooth_window,
        }


def _delta_se_from_replicates(pair: PairRun, t_grid, smooth_window):
    """Pointwise SE of the flow from independent sub-ensemble replicates."""
    reps = pair.batch_diff_means
    counts = pair.batch_counts.astype(float)
    K = len(reps)
    if K < 4:
        return None, None
    total = counts.sum()
    D_reps = np.empty((K, len(t_grid)))
    delta_reps = np.empty((K, len(t_grid)))
    for i in range(K):
        D_reps[i] = trace_distance_series(reps[i])
        delta_reps[i] = information_flow(D_reps[i], t_grid, smooth_window=smooth_window)
    # replicates have near-equal weights; the spread of their means over
    # sqrt(K) estimates the error of the pooled series
    w = counts / total
    d_mean = np.einsum("k,kn->n", w, D_reps)
    dd_mean = np.einsum("k,kn->n", w, delta_reps)
    d_se = np.sqrt(np.einsum("k,kn->n", w, (D_reps - d_mean) ** 2) / (K - 1))
    dd_se = np.sqrt(np.einsum("k,kn->n", w, (delta_reps - dd_mean) ** 2) / (K - 1))
    return d_se, dd_se


def _delta_se_whitenoise(pair: PairRun, t_grid, smooth_window):
    """Fallback SE: independent pointwise noise through the derivative filter."""
    d = pair.diff_mean
    se_entries = pair.diff_se
    h01_se = 0.5 * np.sqrt(se_entries[:, 1] ** 2 + se_entries[:, 2] ** 2)
    # D = (|e1|+|e2|)/2 of the symmetrized difference; bound its error by
    # the dominant-entry propagation (conservative for thresholds)
    D_se = np.sqrt(
        (0.5 * se_entries[:, 0]) ** 2 + (0.5 * se_entries[:, 3]) ** 2 + h01_se**2
    )
    dt = float(t_grid[1] - t_grid[0])
    if smooth_window is None:
        weight = 1.0 / np.sqrt(2.0)
    else:
        w = np.zeros(smooth_window + 2)
        w[(smooth_window + 1) // 2] = 1.0
        resp = savgol_filter(w, smooth_window, 3)
        resp = (np.roll(resp, -1) - np.roll(resp, 1)) / 2.0
        weight = np.sqrt(np.sum(resp**2))
    delta_se = D_se * weight / dt
    return D_se, delta_se


def build_info_flow_report(
    pair: PairRun,
    smooth_window: int | None = DEFAULT_SMOOTH_WINDOW,
    epsilon=None,
    merge_gap: int = DEFAULT_MERGE_GAP,
) -> InfoFlowReport:
    """Full distinguishability analysis of a shared-noise pair run.

    The backflow threshold defaults to three pointwise standard errors
    of the flow (sub-ensemble replicate estimate when enough batches are
    available, conservative white-noise propagation otherwise), floored
    at a tiny positive value so exact-zero flows produce no windows.
    """
    t_grid = pair.plus.t_grid
    D = trace_distance_series(pair.diff_mean)
    delta = information_flow(D, t_grid, smooth_window=smooth_window)
    D_se, delta_se = _delta_se_from_replicates(pair, t_grid, smooth_window)
    if D_se is None:
        D_se, delta_se = _delta_se_whitenoise(pair, t_grid, smooth_window)
    if epsilon is None:
        eps = np.maximum(3.0 * delta_se, _EPSILON_FLOOR)
    else:
        eps = np.maximum(np.broadcast_to(np.asarray(epsilon, dtype=float), D.shape), 0.0)
        eps = np.where(eps > 0, eps, _EPSILON_FLOOR)
    if smooth_window is not None:
        # the filter's polynomial edge fits bias the flow inside half a
        # window of each boundary; keep those nodes out of detection
        eps = eps.copy()
        edge = smooth_window // 2
        eps[:edge] = np.inf
        eps[len(eps) - edge :] = np.inf
    spans = _window_spans(delta, eps, merge_gap)
    windows = [(float(t_grid[s]), float(t_grid[e])) for s, e in spans]
    flags = np.zeros(len(t_grid), dtype=bool)
    for s, e in spans:
        flags[s : e + 1] = True
    loss, gain, onset = info_loss_gain(D, delta, t_grid, eps, merge_gap)
    return InfoFlowReport(
        label=pair.label,
        t_grid=t_grid,
        D_series=D,
        D_se=D_se,
        delta_series=delta,
        delta_se=delta_se,
        epsilon=eps,
        windows=windows,
        window_flag=flags,
        blp_value=positive_flow_area(delta, t_grid, eps),
        info_loss=loss,
        info_gain=gain,
        first_backflow_time=onset,
        smooth_window=smooth_window,
    )


def backflow_heat_overlap(window_flag: np.ndarray, flux: HeatFluxSeries):
    """Fraction of backflow-window time with statistically positive heat flux.

    Returns None when the pair has no backflow windows.  This is the
    overlap statistic used to examine whether information backflow and
    heat backflow coincide; no correlation between the two is asserted.
    """
    flags = np.asarray(window_flag, dtype=bool)
    if not np.any(flags):
        return None
    positive = flux.jq > 3.0 * flux.se
    return float(np.sum(flags & positive) / np.sum(flags))


def export_info_flow_csv(report: InfoFlowReport, file) -> None:
    """CSV with columns ``t, D, Delta, window_flag``."""
    buf = io.StringIO()
    buf.write("t,D,Delta,window_flag\n")
    for k, t in enumerate(report.t_grid):
        buf.write(
            f"{t:.17g},{report.D_series[k]:.17g},{report.delta_series[k]:.17g},"
            f"{int(report.window_flag[k])}\n"
        )
    with open(file, "w", newline="\n") as fh:
        fh.write(buf.getvalue())


def export_heat_flux_csv(flux: HeatFluxSeries, file) -> None:
    """CSV with columns ``t, jq, jq_se, jq_imag_residual``."""
    buf = io.StringIO()
    buf.write("t,jq,jq_se,jq_imag_residual\n")
    for k, t in enumerate(flux.t_grid):
        buf.write(
            f"{t:.17g},{flux.jq[k]:.17g},{flux.se[k]:.17g},"
            f"{flux.jq_imag_residual[k]:.17g}\n"
        )
    with open(file, "w", newline="\n") as fh:
        fh.write(buf.getvalue())


def export_summary_json(report: InfoFlowReport, file, extra: dict | None = None) -> None:
    """JSON summary of a pair analysis (windows, loss/gain, onset)."""
    payload = report.summary()
    if extra:
        payload.update(extra)
    with open(file, "w", newline="\n") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
