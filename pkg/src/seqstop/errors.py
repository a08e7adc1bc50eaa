"""Exception types shared across the package."""


class SeqstopError(Exception):
    """Base class for all package-specific errors."""


class ZeroMatrixError(SeqstopError):
    """The operator's spectral norm is below the machine threshold."""


class RankExhaustedError(SeqstopError):
    """More singular components were requested than the operator has."""


class OracleUnavailableError(SeqstopError):
    """An oracle quantity was requested without the data-generating truth."""


class InvalidSizeError(SeqstopError, ValueError):
    """A problem size violates the construction's discretization constraint."""
