"""Exception types shared across the simulator."""


class SlnsimError(Exception):
    """Base class for all slnsim errors."""


class InputError(SlnsimError, ValueError):
    """Invalid argument or inconsistent inputs (grids, shapes, labels)."""


class GridMismatchError(InputError):
    """Series defined on incompatible time grids."""


class ConfigValidationError(SlnsimError):
    """Experiment configuration failed validation.

    Carries the full list of violations so callers can report all of
    them at once instead of fixing one field at a time.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__(
            "invalid configuration:\n" + "\n".join(f"  - {v}" for v in self.violations)
        )


class NumericalError(SlnsimError):
    """Numerical procedure failed (quadrature, factorization, blow-up)."""


class QuadratureConvergenceError(NumericalError):
    """Self-consistency check of the correlation quadrature failed."""

    def __init__(self, max_rel_change, tol, worst_t):
        self.max_rel_change = max_rel_change
        self.tol = tol
        self.worst_t = worst_t
        super().__init__(
            f"bath correlation quadrature did not converge: doubling the node "
            f"count changed the result by {max_rel_change:.3e} (tol {tol:.1e}) "
            f"at t = {worst_t:.6g}"
        )


class SpectralFactorizationError(NumericalError):
    """Noise power spectrum estimate is negative beyond tolerance."""

    def __init__(self, bin_index, frequency, value, peak):
        self.bin_index = bin_index
        self.frequency = frequency
        self.value = value
        self.peak = peak
        super().__init__(
            f"negative power-spectrum estimate at frequency bin {bin_index} "
            f"(omega = {frequency:.6g}): {value:.3e} against peak {peak:.3e}"
        )


class DivergedTrajectoryError(NumericalError):
    """A per-realization trajectory exceeded the blow-up norm bound."""

    def __init__(self, realization_index, t, norm):
        self.realization_index = realization_index
        self.t = t
        self.norm = norm
        super().__init__(
            f"trajectory for realization {realization_index} diverged at "
            f"t = {t:.6g} (matrix norm {norm:.3e} > 1e6)"
        )


class EnsembleDivergenceError(NumericalError):
    """Too large a fraction of trajectories diverged for a trustworthy average."""

    def __init__(self, diverged, total, threshold):
        self.diverged = diverged
        self.total = total
        self.threshold = threshold
        super().__init__(
            f"{diverged} of {total} trajectories diverged "
            f"({diverged / total:.2%} > {threshold:.2%}); refusing to average"
        )
