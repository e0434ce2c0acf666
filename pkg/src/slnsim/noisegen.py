"""Synthesis of the correlated complex noise pair (xi, nu).

The per-realization stochastic Liouville equation is forced by two
complex-valued Gaussian processes whose only constrained moments are the
non-conjugate second moments

    <xi(t) xi(t')> = Re L(t - t'),
    <xi(t) nu(t')> = 2i * step(t - t') * Im L(t - t'),
    <nu(t) nu(t')> = 0,

with L the bath autocorrelation function.  Conjugate moments are free;
they are allocated to keep the Monte Carlo estimator usable (see below).

Synthesis is done in the frequency domain on a circulant embedding of the
targets over a doubled (power-of-two padded) grid of size M.  The
construction uses two independent real carrier processes x and y:

* xi = x + i*y with E[xx] = Re L + A and E[yy] = A, where A >= 0 is a
  free per-bin "assist" spectrum; the constrained moment
  <xi xi> = Re L holds exactly for any A.
* nu = nu1 + nu2: nu1 filters the spectral innovations of x and y
  through per-bin least-norm filters that reproduce the causal
  cross-kernel 2i*step(t)*Im L(t); nu2 is an independent complex
  component whose pseudo-covariance exactly cancels that of nu1, so
  <nu nu> = 0.

The assist spectrum matters at a cold operating point: the causal
cross-kernel retains the full friction weight of the bath at
frequencies where the thermal power spectrum is small, so realizing it
against x alone forces Var[int nu] ~ gamma*beta*omega_c^2*T/8, which is
O(20) at the parameters of interest and makes per-realization
amplitudes spread like exp(+-4.5) (useless Monte Carlo statistics, the
known cold-bath weakness of this stochastic scheme).  Splitting each
frequency bin of the cross-kernel between the x and y carriers in
inverse proportion to their power, and sizing A ~ |c_hat| where the
native spectrum is short, balances the nu-driven and y-driven growth
exponents at O(1) while leaving every constrained moment exact.

Only lags up to the window length are constrained, so the kernel
extension on the padded half of the circulant is free; it is tapered
smoothly to zero there, which removes the mirror-point kink that would
otherwise contaminate the embedding spectrum with spurious negative
eigenvalues.  Within the simulation window all three target moments are
reproduced exactly on the discrete grid.

Realizations are keyed by (master_seed, realization_index) through a
counter-based Philox stream, so any ensemble schedule reproduces
bit-identical paths.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field

import numpy as np

from .bath import CorrelationTable
from .errors import GridMismatchError, InputError, SpectralFactorizationError

__all__ = [
    "NoisePath",
    "NoiseGenerator",
    "NoiseStatAccumulator",
    "NoiseStatReport",
    "generate_noise_pair",
    "verify_noise_statistics",
    "required_table_length",
    "export_noise_csv",
]

# Truncating the correlation quadrature at omega_max leaves a spectral
# jump there, whose Gibbs undershoot puts O(1e-6)-relative negative
# eigenvalues into any embedding of the tabulated kernel.  Negatives up
# to _NEG_EIGENVALUE_TOL of the peak are therefore clipped, and the
# clipping's actual effect on the realized in-window covariance is
# bounded by _COV_IMPACT_TOL instead; larger violations are an error.
_NEG_EIGENVALUE_TOL = 1e-5  # relative to the spectral peak
_COV_IMPACT_TOL = 1e-6  # relative <xi xi> distortion from clipping
_CROSS_IMPACT_TOL = 1e-3  # relative <xi nu> distortion from dropped bins
_GEN_CHUNK = 256  # paths per FFT block, fixed so batching is canonical
# Assist sizing: a bin is y-assisted when the native power drops below
# ASSIST_WEIGHT * |c_hat|; the value balances the growth exponents of
# the nu-forced (trace) sector against the Im(xi)-forced (coherence)
# sector, whose coupling is twice as strong (hence sqrt(2/4) ~ 0.7).
ASSIST_WEIGHT = 0.7


@dataclass(frozen=True)
class NoisePath:
    """One realization of the noise pair on the simulation grid."""

    t_grid: np.ndarray
    xi: np.ndarray
    nu: np.ndarray
    seed_id: int

    def __post_init__(self):
        if len(self.xi) != len(self.t_grid) or len(self.nu) != len(self.t_grid):
            raise InputError("xi and nu must match the t_grid length")


def _next_pow2(n: int) -> int:
    m = 1
    while m < n:
        m *= 2
    return m


def required_table_length(n_nodes: int) -> int:
    """Correlation-table length that fills the generator's full embedding.

    The circulant embedding lives on a power-of-two grid of size
    M = next_pow2(2 * n_nodes); a table with lags up to M/2 lets the
    tapered extension region use true L values.  A window-only table
    (length n_nodes) is sufficient for exact in-window statistics.
    """
    return _next_pow2(2 * n_nodes) // 2 + 1


class NoiseGenerator:
    """Precomputed spectral filters for a fixed grid and bath table.

    Parameters
    ----------
    table : CorrelationTable
        L(t) sampled with the same spacing as the simulation grid,
        covering at least the simulation window.  Longer tables (up to
        ``required_table_length``) feed true L values into the tapered
        extension region of the embedding.
    n_nodes : int
        Number of simulation grid nodes the paths are sampled on.
    """

    def __init__(self, table: CorrelationTable, n_nodes: int):
        if n_nodes < 2:
            raise InputError("n_nodes must be >= 2")
        avail = len(table.t_grid) - 1  # largest tabulated lag index
        if avail < n_nodes - 1:
            raise InputError(
                f"correlation table covers {avail} lags but the simulation "
                f"window needs {n_nodes - 1}"
            )
        self.table = table
        self.n_nodes = int(n_nodes)
        self.dt = table.dt
        self.t_grid = table.t_grid[:n_nodes]

        M = _next_pow2(2 * n_nodes)
        self.M = M
        half = M // 2

        re_L = np.asarray(table.re_L, dtype=float)
        im_L = np.asarray(table.im_L, dtype=float)

        # Kernels at lags 0..M/2.  Lags inside the window are the exact
        # targets; the free lags (n_nodes-1, M/2] hold the tabulated tail
        # (or its last value) under a cosine taper to zero.
        def half_kernel(values):
            ext = np.empty(half + 1)
            top = min(avail, half)
            ext[: top + 1] = values[: top + 1]
            ext[top + 1 :] = values[avail]
            free = np.arange(n_nodes, half + 1)
            if len(free):
                x = (free - (n_nodes - 1)) / (half - (n_nodes - 1))
                ext[free] = ext[free] * 0.5 * (1.0 + np.cos(np.pi * x))
            return ext

        # symmetric circulant kernel of Re L and its eigenvalues
        rk = half_kernel(re_L)
        r = np.concatenate([rk, rk[-2:0:-1]])
        lam = np.fft.fft(r).real
        peak = float(np.max(lam, initial=0.0))
        if peak > 0.0:
            worst = int(np.argmin(lam))
            if lam[worst] < -_NEG_EIGENVALUE_TOL * peak:
                raise SpectralFactorizationError(
                    worst, 2.0 * np.pi * worst / (M * self.dt), lam[worst], peak
                )
        lam_raw = lam.copy()
        np.clip(lam, 0.0, None, out=lam)
        if peak > 0.0:
            impact = np.abs(np.fft.ifft(lam - lam_raw))[:n_nodes]
            self.clip_covariance_error = float(np.max(impact))
            scale = max(abs(re_L[0]), 1e-300)
            if self.clip_covariance_error > _COV_IMPACT_TOL * scale:
                worst = int(np.argmin(lam_raw))
                raise SpectralFactorizationError(
                    worst, 2.0 * np.pi * worst / (M * self.dt), lam_raw[worst], peak
                )
        else:
            self.clip_covariance_error = 0.0

        # causal cross kernel: exact at in-window positive lags, tapered
        # tail on the free lags, zero on the wrapped (negative-lag) half
        c = np.zeros(M, dtype=complex)
        c[1 : half + 1] = 2j * half_kernel(im_L)[1:]
        c_hat = np.fft.fft(c)

        # Assist spectrum: even in m <-> M-m so y is a real process, and
        # positive wherever the cross kernel needs more carrier power
        # than the native spectrum provides.
        c_need = np.abs(c_hat)
        c_need = np.maximum(c_need, np.roll(c_need[::-1], 1))
        assist = np.maximum(0.0, 0.5 * (ASSIST_WEIGHT * c_need - lam))
        lam_x = lam + assist
        lam_y = assist

        # Split each bin of the cross target between the two carriers in
        # proportion to their power (the least total filter power), and
        # build per-channel least-norm filters.
        denom = lam_x + lam_y
        ok = denom > 0.0
        a_x = np.zeros(M, dtype=complex)
        a_y = np.zeros(M, dtype=complex)
        a_x[ok] = c_hat[ok] * np.sqrt(lam_x[ok]) / denom[ok]
        # the y carrier enters xi as +i*y, so its share carries a -i
        a_y[ok] = -1j * c_hat[ok] * np.sqrt(lam_y[ok]) / denom[ok]

        # Cross power stranded on zero-conductance bins cannot be
        # realized; dropping it is acceptable while the realized cross
        # covariance stays far below Monte Carlo resolution.
        c_scale = float(np.max(np.abs(c), initial=0.0))
        if c_scale > 0.0 and not np.all(ok):
            dropped = np.where(ok, 0.0, c_hat)
            impact = float(np.max(np.abs(np.fft.ifft(dropped))[:n_nodes]))
            self.cross_clip_error = impact
            if impact > _CROSS_IMPACT_TOL * c_scale:
                b = int(np.argmax(np.abs(dropped)))
                raise SpectralFactorizationError(
                    b, 2.0 * np.pi * b / (M * self.dt), lam_raw[b], peak
                )
        else:
            self.cross_clip_error = 0.0

        def reversed_bins(v):
            return np.roll(v[::-1], 1)  # v[(M - m) % M]

        self._sqrt_lam_x = np.sqrt(lam_x)
        self._sqrt_lam_y = np.sqrt(lam_y)
        self._filt_gx = reversed_bins(a_x)
        self._filt_hx_conj = np.conj(a_x)
        self._filt_gy = reversed_bins(a_y)
        self._filt_hy_conj = np.conj(a_y)
        s = np.sqrt(-(a_x * reversed_bins(a_x) + a_y * reversed_bins(a_y)))
        self._filt_s = s
        self._filt_s_conj = np.conj(s)
        self._scale = np.sqrt(M / 2.0)
        self.assist_spectrum = assist

    def _draw(self, master_seed: int, index: int) -> np.ndarray:
        rng = np.random.Generator(
            np.random.Philox(key=[int(master_seed) & (2**64 - 1), int(index)])
        )
        return rng.standard_normal((6, self.M))

    def generate_block(self, master_seed: int, indices) -> tuple[np.ndarray, np.ndarray]:
        """Generate paths for the given realization indices.

        Returns ``(xi, nu)`` with shapes (len(indices), n_nodes), both
        complex (the imaginary part of xi vanishes at bins where no
        assist power is needed).
        """
        indices = list(indices)
        n = self.n_nodes
        xi = np.empty((len(indices), n), dtype=complex)
        nu = np.empty((len(indices), n), dtype=complex)
        inv_sqrt2 = 1.0 / np.sqrt(2.0)
        for lo in range(0, len(indices), _GEN_CHUNK):
            block = indices[lo : lo + _GEN_CHUNK]
            raw = np.stack([self._draw(master_seed, i) for i in block])
            Zx = (raw[:, 0, :] + 1j * raw[:, 1, :]) * inv_sqrt2
            Zy = (raw[:, 2, :] + 1j * raw[:, 3, :]) * inv_sqrt2
            W = (raw[:, 4, :] + 1j * raw[:, 5, :]) * inv_sqrt2
            x = np.fft.ifft(self._sqrt_lam_x * Zx, axis=1)
            y = np.fft.ifft(self._sqrt_lam_y * Zy, axis=1)
            xi[lo : lo + len(block)] = (
                2.0 * self._scale * (x[:, :n].real + 1j * y[:, :n].real)
            )
            n1 = np.fft.ifft(self._filt_gx * Zx, axis=1)
            n1 += np.conj(np.fft.ifft(self._filt_hx_conj * Zx, axis=1))
            n1 += np.fft.ifft(self._filt_gy * Zy, axis=1)
            n1 += np.conj(np.fft.ifft(self._filt_hy_conj * Zy, axis=1))
            n1 += np.fft.ifft(self._filt_s * W, axis=1)
            n1 += np.conj(np.fft.ifft(self._filt_s_conj * W, axis=1))
            nu[lo : lo + len(block)] = self._scale * n1[:, :n]
        return xi, nu

    def generate(self, master_seed: int, realization_index: int) -> NoisePath:
        """Generate a single realization as a :class:`NoisePath`."""
        xi, nu = self.generate_block(master_seed, [realization_index])
        return NoisePath(
            t_grid=self.t_grid,
            xi=xi[0],
            nu=nu[0],
            seed_id=int(realization_index),
        )


def generate_noise_pair(
    table: CorrelationTable, master_seed: int, realization_index: int
) -> NoisePath:
    """One realization of (xi, nu) on the table's own grid.

    Deterministic function of (master_seed, realization_index): repeated
    calls return bit-identical paths.
    """
    gen = NoiseGenerator(table, n_nodes=len(table.t_grid))
    return gen.generate(master_seed, realization_index)


# --- statistical self-test ----------------------------------------------


@dataclass
class NoiseStatReport:
    """Estimated vs target second moments on a lag grid.

    Each family carries the complex estimate, the complex target, and
    per-component (real/imag) standard errors of the across-path mean.
    ``passed`` requires every component of every family at every lag to
    sit within 3 standard errors of its target.
    """

    lag_indices: np.ndarray
    lag_times: np.ndarray
    n_paths: int
    families: dict
    passed: bool

    def to_json(self) -> str:
        payload = {
            "n_paths": self.n_paths,
            "lag_times": self.lag_times.tolist(),
            "passed": bool(self.passed),
            "families": {},
        }
        for name, fam in self.families.items():
            payload["families"][name] = {
                "target_re": fam["target"].real.tolist(),
                "target_im": fam["target"].imag.tolist(),
                "estimate_re": fam["estimate"].real.tolist(),
                "estimate_im": fam["estimate"].imag.tolist(),
                "se_re": fam["se_re"].tolist(),
                "se_im": fam["se_im"].tolist(),
                "passed": fam["passed"].tolist(),
            }
        return json.dumps(payload, indent=2)


class _MomentTally:
    """Across-path mean/variance of per-path lag averages."""

    def __init__(self, n_lags):
        self.n = 0
        self.s1 = np.zeros(n_lags, dtype=complex)
        self.s2_re = np.zeros(n_lags)
        self.s2_im = np.zeros(n_lags)

    def update(self, per_path):  # per_path: (B, n_lags) complex
        self.n += per_path.shape[0]
        self.s1 += per_path.sum(axis=0)
        self.s2_re += (per_path.real**2).sum(axis=0)
        self.s2_im += (per_path.imag**2).sum(axis=0)

    def finalize(self, target):
        n = self.n
        mean = self.s1 / n
        if n > 1:
            var_re = np.maximum(self.s2_re - n * mean.real**2, 0.0) / (n - 1)
            var_im = np.maximum(self.s2_im - n * mean.imag**2, 0.0) / (n - 1)
            se_re = np.sqrt(var_re / n)
            se_im = np.sqrt(var_im / n)
        else:
            se_re = np.full_like(self.s2_re, np.nan)
            se_im = np.full_like(self.s2_im, np.nan)
        ok = (np.abs(mean.real - target.real) <= 3.0 * se_re) & (
            np.abs(mean.imag - target.imag) <= 3.0 * se_im
        )
        return {
            "target": target,
            "estimate": mean,
            "se_re": se_re,
            "se_im": se_im,
            "passed": ok,
        }


class NoiseStatAccumulator:
    """Streaming estimator of the noise second moments.

    Feed batches of paths with :meth:`update` and call :meth:`report`
    once at the end.  Estimates are lag averages over the stationary
    window, with standard errors taken across paths (paths are
    independent, so this is an unbiased error estimate).
    """

    def __init__(self, table: CorrelationTable, n_nodes: int, n_lags: int = 20):
        avail = len(table.t_grid) - 1
        if avail < n_nodes - 1:
            raise InputError("table does not cover the path grid")
        self.n_nodes = int(n_nodes)
        max_lag = n_nodes // 2  # keep >= half the window for averaging
        lags = np.unique(np.linspace(0, max_lag, n_lags).round().astype(int))
        self.lags = lags
        self.lag_times = lags * table.dt
        re_L = np.asarray(table.re_L)
        im_L = np.asarray(table.im_L)
        self._targets = {
            "xi_xi": re_L[lags].astype(complex),
            "xi_later_nu": np.where(lags > 0, 2j * im_L[lags], 0.0),
            "nu_later_xi": np.zeros(len(lags), dtype=complex),
            "nu_nu": np.zeros(len(lags), dtype=complex),
        }
        self._tallies = {k: _MomentTally(len(lags)) for k in self._targets}

    def update(self, xi: np.ndarray, nu: np.ndarray) -> None:
        """Add a batch of paths, shapes (B, n_nodes)."""
        if xi.shape != nu.shape or xi.shape[1] != self.n_nodes:
            raise GridMismatchError("paths do not match the accumulator grid")
        n = self.n_nodes
        B = xi.shape[0]
        per = {k: np.empty((B, len(self.lags)), dtype=complex) for k in self._tallies}
        for j, lag in enumerate(self.lags):
            m = n - lag
            early = slice(0, m)
            late = slice(lag, lag + m)
            per["xi_xi"][:, j] = (xi[:, early] * xi[:, late]).mean(axis=1)
            per["xi_later_nu"][:, j] = (xi[:, late] * nu[:, early]).mean(axis=1)
            per["nu_later_xi"][:, j] = (xi[:, early] * nu[:, late]).mean(axis=1)
            per["nu_nu"][:, j] = (nu[:, early] * nu[:, late]).mean(axis=1)
        for k, tally in self._tallies.items():
            tally.update(per[k])

    def report(self) -> NoiseStatReport:
        families = {
            k: self._tallies[k].finalize(self._targets[k]) for k in self._tallies
        }
        passed = all(bool(np.all(f["passed"])) for f in families.values())
        n_paths = self._tallies["xi_xi"].n
        return NoiseStatReport(
            lag_indices=self.lags,
            lag_times=self.lag_times,
            n_paths=n_paths,
            families=families,
            passed=passed,
        )


def verify_noise_statistics(paths, table: CorrelationTable, n_lags: int = 20) -> NoiseStatReport:
    """Estimate the noise moments of a path collection against the table.

    ``paths`` is a sequence of :class:`NoisePath` on a common grid.  At
    least 1000 paths are required for the error estimates to be
    meaningful.
    """
    paths = list(paths)
    if len(paths) < 1000:
        raise InputError("verify_noise_statistics needs at least 1000 paths")
    n_nodes = len(paths[0].t_grid)
    acc = NoiseStatAccumulator(table, n_nodes, n_lags=n_lags)
    chunk = 512
    for lo in range(0, len(paths), chunk):
        block = paths[lo : lo + chunk]
        for p in block:
            if len(p.t_grid) != n_nodes or not np.array_equal(p.t_grid, paths[0].t_grid):
                raise GridMismatchError("all paths must share one grid")
        xi = np.stack([p.xi for p in block]).astype(complex)
        nu = np.stack([p.nu for p in block])
        acc.update(xi, nu)
    return acc.report()


def export_noise_csv(path: NoisePath, file) -> None:
    """Debug dump of one path: ``t, re_xi, im_xi, re_nu, im_nu``."""
    buf = io.StringIO()
    buf.write("t,re_xi,im_xi,re_nu,im_nu\n")
    xi = np.asarray(path.xi, dtype=complex)
    for k, t in enumerate(path.t_grid):
        buf.write(
            f"{t:.17g},{xi[k].real:.17g},{xi[k].imag:.17g},"
            f"{path.nu[k].real:.17g},{path.nu[k].imag:.17g}\n"
        )
    with open(file, "w", newline="\n") as fh:
        fh.write(buf.getvalue())
