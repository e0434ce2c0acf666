"""Per-realization propagation of the stochastic Liouville equation.

For one noise realization (xi, nu) the 2x2 state rho_Z obeys the
time-local equation

    d rho_Z / dt = -i [H_S(t), rho_Z] + i xi(t) [sigma_z, rho_Z]
                   + (i/2) nu(t) {sigma_z, rho_Z},

with H_S(t) = -(omega/2) sigma_x + lambda_0 sin(omega t) sigma_z when the
resonant drive is enabled (natural units omega = hbar = 1).  The
anticommutator forcing breaks Hermiticity and trace conservation per
realization; only the ensemble average is a physical state, so states are
stored as full complex 2x2 matrices.

Integration is classical fixed-step RK4 on the noise grid (optionally
subdivided), with noise values at stage points obtained by linear
interpolation between grid samples.  Fixed stepping keeps trajectories
bitwise reproducible.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .errors import DivergedTrajectoryError, InputError
from .noisegen import NoisePath

__all__ = [
    "PAULI_X",
    "PAULI_Y",
    "PAULI_Z",
    "IDENTITY",
    "DriveSpec",
    "Trajectory",
    "pauli_eigenstate",
    "bloch_vector",
    "check_physical_state",
    "sln_rhs",
    "propagate",
    "propagate_block",
    "export_trajectory_csv",
]

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)

_PAULI = {"x": PAULI_X, "y": PAULI_Y, "z": PAULI_Z}

NORM_BOUND = 1e6  # per-realization blow-up threshold


@dataclass(frozen=True)
class DriveSpec:
    """Resonant periodic drive lambda_0 * sin(omega t) * sigma_z.

    ``omega`` is the shared system and drive frequency (the drive is
    resonant by construction); it also sets the -(omega/2) sigma_x system
    term, so omega = 0 with the drive disabled gives pure dephasing.
    """

    lambda_0: float = 1.0
    enabled: bool = False
    omega: float = 1.0

    def __post_init__(self):
        if self.lambda_0 < 0:
            raise InputError(f"lambda_0 must be >= 0, got {self.lambda_0}")

    def amplitude(self, t):
        if not self.enabled or self.lambda_0 == 0.0:
            return 0.0 if np.isscalar(t) else np.zeros_like(t)
        return self.lambda_0 * np.sin(self.omega * t)


@dataclass
class Trajectory:
    """One propagated realization sampled on the noise grid."""

    t_grid: np.ndarray
    rho_series: np.ndarray  # (n, 2, 2) complex
    sigma_y_series: np.ndarray  # (n,) complex, Tr(sigma_y rho_Z)
    xi_series: np.ndarray  # (n,) complex, retained for heat-flux estimation

    def __post_init__(self):
        n = len(self.t_grid)
        if len(self.rho_series) != n or len(self.sigma_y_series) != n or len(self.xi_series) != n:
            raise InputError("all trajectory series must share the grid length")


def pauli_eigenstate(axis: str, sign: int) -> np.ndarray:
    """Projector onto the +1 or -1 eigenstate of sigma_axis."""
    if axis not in _PAULI:
        raise InputError(f"axis must be one of x, y, z; got {axis!r}")
    if sign not in (+1, -1):
        raise InputError("sign must be +1 or -1")
    return 0.5 * (IDENTITY + sign * _PAULI[axis])


def bloch_vector(rho: np.ndarray) -> np.ndarray:
    """(x, y, z) components Tr(sigma_i rho); real for Hermitian input."""
    rho = np.asarray(rho)
    return np.array(
        [
            np.trace(PAULI_X @ rho).real,
            np.trace(PAULI_Y @ rho).real,
            np.trace(PAULI_Z @ rho).real,
        ]
    )


def check_physical_state(rho: np.ndarray, tol: float = 1e-9) -> None:
    """Raise unless rho is Hermitian, unit trace and positive semidefinite."""
    rho = np.asarray(rho)
    if rho.shape != (2, 2):
        raise InputError(f"expected a 2x2 matrix, got shape {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise InputError("initial state must be Hermitian")
    if abs(np.trace(rho) - 1.0) > tol:
        raise InputError("initial state must have unit trace")
    if np.min(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))) < -1e-12:
        raise InputError("initial state must be positive semidefinite")


def sln_rhs(rho: np.ndarray, t: float, xi_t: complex, nu_t: complex, drive: DriveSpec) -> np.ndarray:
    """Right-hand side of the stochastic Liouville equation at time t."""
    rho = np.asarray(rho, dtype=complex)
    lam = drive.amplitude(t)
    h_s = -0.5 * drive.omega * PAULI_X + lam * PAULI_Z
    comm_h = h_s @ rho - rho @ h_s
    comm_z = PAULI_Z @ rho - rho @ PAULI_Z
    anti_z = PAULI_Z @ rho + rho @ PAULI_Z
    return -1j * comm_h + 1j * xi_t * comm_z + 0.5j * nu_t * anti_z


def _rhs_flat(y, u, v, lam, omega):
    """Component form of sln_rhs on flattened states y = (B, 4) [a,b,c,d]."""
    a = y[:, 0]
    b = y[:, 1]
    c = y[:, 2]
    d = y[:, 3]
    w = 0.5j * omega
    g = 2.0j * (u - lam)
    out = np.empty_like(y)
    out[:, 0] = w * (c - b) + 1j * v * a
    out[:, 1] = w * (d - a) + g * b
    out[:, 2] = w * (a - d) - g * c
    out[:, 3] = w * (b - c) - 1j * v * d
    return out


def propagate_block(
    rho0s: np.ndarray,
    t_grid: np.ndarray,
    xi: np.ndarray,
    nu: np.ndarray,
    drive: DriveSpec,
    substeps: int = 1,
    observer=None,
    record: bool = False,
):
    """RK4-propagate a batch of initial matrices along per-row noise.

    Parameters
    ----------
    rho0s : (B, 2, 2) complex initial matrices (not necessarily physical).
    t_grid : (n,) uniform node times.
    xi, nu : (B, n) noise samples per row.
    drive : DriveSpec.
    substeps : RK4 steps per noise interval; noise at interior stage
        points is linearly interpolated.
    observer : optional callable ``observer(node_index, y, xi_node)``
        invoked at every grid node with the flattened states (B, 4).
    record : keep the full (B, n, 4) state history.

    Returns
    -------
    (y_final, history, diverged) where ``history`` is None unless
    ``record`` and ``diverged`` maps row index -> (node_index, norm) for
    rows whose max-entry magnitude exceeded the blow-up bound.
    """
    rho0s = np.asarray(rho0s, dtype=complex)
    B, n = xi.shape
    if rho0s.shape != (B, 2, 2) or nu.shape != (B, n) or len(t_grid) != n:
        raise InputError("inconsistent batch shapes")
    if substeps < 1:
        raise InputError("substeps must be >= 1")
    dt_grid = float(t_grid[1] - t_grid[0])
    h = dt_grid / substeps

    y = rho0s.reshape(B, 4).copy()
    history = np.empty((B, n, 4), dtype=complex) if record else None
    diverged: dict[int, tuple[int, float]] = {}

    def note_divergence(node):
        m = np.max(np.abs(y), axis=1)
        bad = ~(m <= NORM_BOUND)  # catches nan/inf too
        for row in np.nonzero(bad)[0]:
            if int(row) not in diverged:
                diverged[int(row)] = (node, float(m[row]))

    if record:
        history[:, 0, :] = y
    if observer is not None:
        observer(0, y, xi[:, 0])

    omega = drive.omega
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(n - 1):
            t_k = t_grid[k]
            du = xi[:, k + 1] - xi[:, k]
            dv = nu[:, k + 1] - nu[:, k]
            for j in range(substeps):
                f0 = j / substeps
                fm = (j + 0.5) / substeps
                f1 = (j + 1) / substeps
                u0 = xi[:, k] + f0 * du
                um = xi[:, k] + fm * du
                u1 = xi[:, k] + f1 * du
                v0 = nu[:, k] + f0 * dv
                vm = nu[:, k] + fm * dv
                v1 = nu[:, k] + f1 * dv
                t0 = t_k + f0 * dt_grid
                tm = t_k + fm * dt_grid
                t1 = t_k + f1 * dt_grid
                k1 = _rhs_flat(y, u0, v0, drive.amplitude(t0), omega)
                k2 = _rhs_flat(y + (0.5 * h) * k1, um, vm, drive.amplitude(tm), omega)
                k3 = _rhs_flat(y + (0.5 * h) * k2, um, vm, drive.amplitude(tm), omega)
                k4 = _rhs_flat(y + h * k3, u1, v1, drive.amplitude(t1), omega)
                y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            note_divergence(k + 1)
            if record:
                history[:, k + 1, :] = y
            if observer is not None:
                observer(k + 1, y, xi[:, k + 1])

    return y, history, diverged


def propagate(
    rho0: np.ndarray,
    path: NoisePath,
    drive: DriveSpec,
    dt: float | None = None,
    scheme: str = "rk4",
    check_initial: bool = True,
) -> Trajectory:
    """Propagate a single initial state along one noise path.

    ``dt`` must divide the noise grid spacing; it defaults to the grid
    spacing itself.  Raises :class:`DivergedTrajectoryError` (carrying
    the realization index) if the state norm exceeds 1e6.
    """
    if scheme != "rk4":
        raise InputError(f"unsupported scheme {scheme!r}")
    rho0 = np.asarray(rho0, dtype=complex)
    if check_initial:
        check_physical_state(rho0)
    t_grid = np.asarray(path.t_grid, dtype=float)
    spacing = float(t_grid[1] - t_grid[0])
    if dt is None:
        substeps = 1
    else:
        substeps = int(round(spacing / dt))
        if substeps < 1 or abs(substeps * dt - spacing) > 1e-9 * spacing:
            raise InputError("dt must divide the noise grid spacing")

    xi = np.asarray(path.xi, dtype=complex)[None, :]
    nu = np.asarray(path.nu, dtype=complex)[None, :]
    _, history, diverged = propagate_block(
        rho0[None, :, :], t_grid, xi, nu, drive, substeps=substeps, record=True
    )
    if 0 in diverged:
        node, norm = diverged[0]
        raise DivergedTrajectoryError(path.seed_id, t_grid[node], norm)
    rho_series = history[0].reshape(-1, 2, 2)
    sigma_y = 1j * (history[0][:, 1] - history[0][:, 2])
    return Trajectory(
        t_grid=t_grid,
        rho_series=rho_series,
        sigma_y_series=sigma_y,
        xi_series=np.asarray(path.xi, dtype=complex),
    )


def export_trajectory_csv(traj: Trajectory, file) -> None:
    """Debug dump of one trajectory (state entries and Tr(sigma_y rho))."""
    buf = io.StringIO()
    buf.write(
        "t,re_rho00,im_rho00,re_rho01,im_rho01,re_rho10,im_rho10,"
        "re_rho11,im_rho11,re_sy,im_sy\n"
    )
    flat = traj.rho_series.reshape(-1, 4)
    for k, t in enumerate(traj.t_grid):
        cells = [f"{t:.17g}"]
        for e in flat[k]:
            cells.append(f"{e.real:.17g}")
            cells.append(f"{e.imag:.17g}")
        sy = traj.sigma_y_series[k]
        cells.append(f"{sy.real:.17g}")
        cells.append(f"{sy.imag:.17g}")
        buf.write(",".join(cells) + "\n")
    with open(file, "w", newline="\n") as fh:
        fh.write(buf.getvalue())
