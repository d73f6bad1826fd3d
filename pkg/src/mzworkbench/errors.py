"""Exception types shared across the workbench.

All workbench errors derive from :class:`WorkbenchError`, which itself
derives from ``ValueError`` so that callers treating bad inputs generically
keep working.
"""


class WorkbenchError(ValueError):
    """Base class for all workbench errors."""


class DimensionMismatchError(WorkbenchError):
    """A vector, matrix or series has the wrong shape for the operation."""


class DegenerateProjectionError(WorkbenchError):
    """Projection onto the span of a zero observable is undefined."""


class SpectralDecompositionError(WorkbenchError):
    """Eigen-solver output could not be assembled into rotation planes.

    Carries the residual norm of the failed reconstruction when available.
    """

    def __init__(self, message: str, residual: float | None = None):
        if residual is not None:
            message = f"{message} (residual norm {residual:.3e})"
        super().__init__(message)
        self.residual = residual


class StepSingularityError(WorkbenchError):
    """The implicit update of a marching solver has a vanishing pivot."""


class GridMismatchError(WorkbenchError):
    """Two series that must share a time grid do not."""


class SeriesTooShortError(WorkbenchError):
    """A series has too few nodes for the requested stencil."""


class NonRealizableNoiseError(WorkbenchError):
    """The kernel implies a negative noise variance (K(0) > 0)."""


class FactorizationError(WorkbenchError):
    """Covariance factorization failed even after repair and jitter."""


class SpectralMassError(WorkbenchError):
    """Circulant embedding clipped more than the allowed spectral mass."""


class EstimatorError(WorkbenchError):
    """A statistical estimator was called below its minimum sample count."""


class QuadratureError(WorkbenchError):
    """A quadrature node produced a non-finite integrand value."""


class NotInFastSubspaceError(WorkbenchError):
    """The vector has a component in the slow subspace."""


class CsvFormatError(WorkbenchError):
    """A CSV input file is malformed; the message names file and line."""
