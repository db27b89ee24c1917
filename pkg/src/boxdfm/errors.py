"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ValidationError and subclasses -> 2,
SolverError and subclasses -> 3, MissingDataError -> 4.
"""


class BoxDfmError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(BoxDfmError):
    """Invalid mesh, scenario, or material input."""


class MeshFormatError(ValidationError):
    """Unparseable or unsupported mesh file content."""


class MeshGenerationError(ValidationError):
    """A generator failed to produce a conforming mesh."""


class DofMapError(ValidationError):
    """Inconsistent degree-of-freedom topology."""


class SolverError(BoxDfmError):
    """Linear solve failed or stopped short of the requested tolerance."""


class NotPositiveDefiniteError(SolverError):
    """CG breakdown: the operator is not symmetric positive definite."""


class MissingDataError(BoxDfmError):
    """A scenario references a data file that is not present."""
