"""Exception types shared across the package."""


class QMaxEntError(Exception):
    """Base class for all package-specific errors."""


class NonHermitianError(QMaxEntError, ValueError):
    """Input matrix is not Hermitian within tolerance.

    Carries the largest entrywise asymmetry |A - A^dagger| observed.
    """

    def __init__(self, max_asymmetry: float, tol: float):
        self.max_asymmetry = max_asymmetry
        self.tol = tol
        super().__init__(
            f"matrix is not Hermitian: max |A - A^H| entry = {max_asymmetry:.3e} "
            f"exceeds tolerance {tol:.1e}"
        )


class EigensolverError(QMaxEntError, RuntimeError):
    """The underlying eigensolver failed to converge."""


class SpectralDomainError(QMaxEntError, ValueError):
    """An eigenvalue lies outside the domain of the requested scalar function.

    Carries the offending eigenvalue.
    """

    def __init__(self, eigenvalue: float, func_name: str):
        self.eigenvalue = eigenvalue
        self.func_name = func_name
        super().__init__(
            f"eigenvalue {eigenvalue!r} is outside the domain of {func_name}"
        )


class CapacityError(QMaxEntError, ValueError):
    """Requested dense operator exceeds the configured qubit budget."""


class NormalizationError(QMaxEntError, ValueError):
    """A Hamiltonian term violates the norm bound required for normalization."""


class SolverFailure(QMaxEntError, RuntimeError):
    """Numerical failure inside an iterative solver step.

    ``index`` identifies the offending coordinate when one exists
    (e.g. a non-positive moment in an iterative-scaling step).
    """

    def __init__(self, message: str, index: int | None = None):
        self.index = index
        super().__init__(message)


class InsufficientDataError(QMaxEntError, ValueError):
    """Not enough iterations recorded to estimate an asymptotic quantity."""


class ConfigError(QMaxEntError, ValueError):
    """Invalid or unparseable experiment configuration."""
