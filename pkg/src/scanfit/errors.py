"""Exception types raised across the package."""


class ScanfitError(Exception):
    """Base class for all package-specific errors."""


class ScanFormatError(ScanfitError):
    """A scan file could not be parsed or failed validation.

    The message carries the file location (row number or JSON field) of the
    offending entry.
    """


class ModelFormatError(ScanfitError):
    """A state-space model file could not be parsed or failed validation."""


class IllConditionedError(ScanfitError):
    """A linear-algebra stage (Lyapunov solve, eigenvector inversion) is too
    ill conditioned to trust; the message carries a conditioning note."""


class VectorFitError(ScanfitError):
    """A vector-fitting least-squares stage failed.

    Raised when the residue-identification system is rank deficient; the
    message includes a conditioning estimate so the caller can distinguish
    duplicate-pole degeneracies from plain bad data.
    """


class UnstableSystemError(ScanfitError):
    """An operation that requires a strictly Hurwitz system received one
    with eigenvalues on or right of the imaginary axis."""


class SingularFrequencyError(ScanfitError):
    """Transfer-function evaluation was requested at (or numerically near)
    a system eigenvalue."""


class AlgebraicLoopError(ScanfitError):
    """Composition produced a singular (or near-singular) feedthrough
    closure; the message lists the participating subsystem ids."""


class PlanError(ScanfitError):
    """A composition plan is malformed: unknown ports, dangling
    references, duplicate ids, or missing model files."""
