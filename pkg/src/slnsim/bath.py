"""Ohmic bath: spectral density and force-force correlation function.

The environment is a harmonic bath with an Ohmic spectral density and an
algebraic high-frequency cut-off,

    J(omega) = gamma * omega / (1 + (omega/omega_c)^2)^2        (hbar = 1),

fully characterized by the dimensionless coupling ``gamma``, the cut-off
``omega_c`` and the inverse temperature ``beta``.  Everything downstream
(noise synthesis, dephasing oracle, heat flux) consumes the bath through
its complex autocorrelation function

    L(t) = (1/pi) * int_0^inf dw J(w) [coth(beta*w/2) cos(w t) - i sin(w t)],

which this module evaluates by composite Gauss-Legendre quadrature
truncated at ``omega_max``.  The integrand is regular at w = 0 because
J(w) coth(beta*w/2) -> 2*gamma/beta, so no singular treatment is needed.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, QuadratureConvergenceError

__all__ = [
    "QuadratureSpec",
    "BathSpec",
    "CorrelationTable",
    "spectral_density",
    "bath_correlation",
    "tabulate_correlation",
    "export_correlation_csv",
]

_GL_ORDER = 16  # Gauss-Legendre nodes per panel


@dataclass(frozen=True)
class QuadratureSpec:
    """Settings for the correlation-function quadrature.

    omega_max : upper truncation of the frequency integral.
    n_points : total quadrature nodes, split into 16-node panels.
    """

    omega_max: float
    n_points: int = 16384

    def __post_init__(self):
        if self.n_points < 2:
            raise InputError(f"n_points must be >= 2, got {self.n_points}")


@dataclass(frozen=True)
class BathSpec:
    """Bath and coupling parameters in natural units (omega = hbar = kB = 1).

    Parameters
    ----------
    gamma : float
        Dimensionless system-bath coupling, >= 0.
    omega_c : float
        Cut-off frequency of the spectral density, > 0.
    beta : float
        Inverse temperature, > 0.
    quadrature : QuadratureSpec, optional
        Integration settings; defaults to omega_max = 50*omega_c with
        16384 nodes.
    """

    gamma: float
    omega_c: float
    beta: float
    quadrature: QuadratureSpec | None = field(default=None)

    def __post_init__(self):
        if self.gamma < 0:
            raise InputError(f"gamma must be >= 0, got {self.gamma}")
        if self.omega_c <= 0:
            raise InputError(f"omega_c must be > 0, got {self.omega_c}")
        if self.beta <= 0:
            raise InputError(f"beta must be > 0, got {self.beta}")
        if self.quadrature is None:
            object.__setattr__(
                self, "quadrature", QuadratureSpec(omega_max=50.0 * self.omega_c)
            )
        if self.quadrature.omega_max <= self.omega_c:
            raise InputError(
                f"omega_max ({self.quadrature.omega_max}) must exceed "
                f"omega_c ({self.omega_c})"
            )


@dataclass(frozen=True)
class CorrelationTable:
    """L(t) sampled on a uniform time grid.

    ``re_L[k] = Re L(t_grid[k])`` and ``im_L[k] = Im L(t_grid[k])``.
    The t = 0 value of the real part dominates the whole table because
    the integrand of Re L is nonnegative and carries its maximal cosine
    weight at t = 0; Im L(0) vanishes exactly.
    """

    t_grid: np.ndarray
    re_L: np.ndarray
    im_L: np.ndarray

    def __post_init__(self):
        if len(self.t_grid) != len(self.re_L) or len(self.t_grid) != len(self.im_L):
            raise InputError("t_grid, re_L and im_L must have equal lengths")

    @property
    def dt(self) -> float:
        return float(self.t_grid[1] - self.t_grid[0])

    @property
    def t_end(self) -> float:
        return float(self.t_grid[-1])

    def values(self) -> np.ndarray:
        """Complex L samples."""
        return self.re_L + 1j * self.im_L


def _coth(x):
    """Numerically stable coth for x > 0 (vectorized)."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = x < 1e-4
    big = x > 20.0
    mid = ~(small | big)
    out[small] = 1.0 / x[small] + x[small] / 3.0
    out[big] = 1.0
    out[mid] = 1.0 / np.tanh(x[mid])
    return out


def spectral_density(omega, spec: BathSpec):
    """Ohmic spectral density J(omega) with algebraic cut-off.

    Accepts scalars or arrays; omega must be nonnegative.
    """
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0):
        raise InputError("spectral_density requires omega >= 0")
    u = omega / spec.omega_c
    J = spec.gamma * omega / (1.0 + u * u) ** 2
    return J if J.ndim else float(J)


def _panel_nodes(spec: BathSpec, n_points: int):
    """Composite Gauss-Legendre nodes/weights on [0, omega_max]."""
    n_panels = max(1, int(round(n_points / _GL_ORDER)))
    x, w = np.polynomial.legendre.leggauss(_GL_ORDER)
    edges = np.linspace(0.0, spec.quadrature.omega_max, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _correlation_values(spec: BathSpec, ts: np.ndarray, n_points: int):
    """Evaluate (Re L, Im L) at the given times with a fixed node budget."""
    nodes, weights = _panel_nodes(spec, n_points)
    J = spectral_density(nodes, spec)
    w_sym = weights * J * _coth(0.5 * spec.beta * nodes) / np.pi
    w_asym = weights * J / np.pi
    re = np.empty(len(ts))
    im = np.empty(len(ts))
    # chunk over t to bound the size of the trig matrices
    chunk = max(1, int(2**25 // max(len(nodes), 1)))
    for lo in range(0, len(ts), chunk):
        block = ts[lo : lo + chunk]
        phase = np.outer(nodes, block)
        re[lo : lo + chunk] = w_sym @ np.cos(phase)
        im[lo : lo + chunk] = -(w_asym @ np.sin(phase))
    return re, im


def _converged_values(spec: BathSpec, ts: np.ndarray, check: bool, tol: float):
    n_pts = spec.quadrature.n_points
    re, im = _correlation_values(spec, ts, n_pts)
    if check:
        re2, im2 = _correlation_values(spec, ts, 2 * n_pts)
        delta = np.abs((re2 - re) + 1j * (im2 - im))
        scale = max(np.max(np.abs(re + 1j * im)), 1e-300)
        worst = int(np.argmax(delta))
        if delta[worst] > tol * scale:
            raise QuadratureConvergenceError(delta[worst] / scale, tol, ts[worst])
    return re, im


def bath_correlation(t: float, spec: BathSpec, check: bool = True, tol: float = 1e-6) -> complex:
    """Bath autocorrelation L(t) at a single time t >= 0.

    The integral is truncated at ``spec.quadrature.omega_max``.  When
    ``check`` is set, the value is recomputed with twice the node count
    and a :class:`QuadratureConvergenceError` is raised if the relative
    change (against the dominant magnitude) exceeds ``tol``.
    """
    if t < 0:
        raise InputError("bath_correlation requires t >= 0")
    ts = np.array([float(t)])
    re, im = _converged_values(spec, ts, check, tol)
    return complex(re[0] + 1j * im[0])


def tabulate_correlation(
    spec: BathSpec,
    t_grid: np.ndarray,
    check: bool = True,
    tol: float = 1e-6,
) -> CorrelationTable:
    """Sample L(t) on a uniform grid.

    Parameters
    ----------
    spec : BathSpec
    t_grid : ndarray
        Uniform, increasing time samples starting at 0.
    check : bool
        Run the node-doubling self-consistency check (recommended).
    tol : float
        Maximum allowed relative change under node doubling, normalized
        by the dominant magnitude of the table.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or len(t_grid) < 2:
        raise InputError("t_grid must be a 1-d array with at least two samples")
    steps = np.diff(t_grid)
    if t_grid[0] != 0.0 or np.any(steps <= 0):
        raise InputError("t_grid must start at 0 and increase")
    if not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
        raise InputError("t_grid must be uniform")

    if spec.gamma == 0.0:
        zeros = np.zeros_like(t_grid)
        return CorrelationTable(t_grid=t_grid, re_L=zeros, im_L=zeros.copy())

    re, im = _converged_values(spec, t_grid, check, tol)
    im[0] = 0.0  # exact: the sine factor kills the integrand at t = 0
    return CorrelationTable(t_grid=t_grid, re_L=re, im_L=im)


def export_correlation_csv(table: CorrelationTable, path) -> None:
    """Write the table as CSV with columns ``t, re_L, im_L``."""
    buf = io.StringIO()
    buf.write("t,re_L,im_L\n")
    for t, re, im in zip(table.t_grid, table.re_L, table.im_L):
        buf.write(f"{t:.17g},{re:.17g},{im:.17g}\n")
    with open(path, "w", newline="\n") as fh:
        fh.write(buf.getvalue())
