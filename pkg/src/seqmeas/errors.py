"""Exception types shared across the package."""


class SeqMeasError(Exception):
    """Base class for all failures raised by this package."""


class ValidationError(SeqMeasError):
    """An input violates a structural invariant; the message names it."""


class NotHermitian(ValidationError):
    """A matrix required to be Hermitian is not, beyond tolerance."""


class BadInterval(ValidationError):
    """An insertion time falls outside the required open interval."""


class DimensionOverflow(SeqMeasError):
    """A composite Hilbert space would exceed the hard dimension cap."""


class PostSelectionImpossible(SeqMeasError):
    """Every post-selected branch has zero amplitude; nothing to normalise."""


class QuadratureNotConverged(SeqMeasError):
    """Adaptive quadrature could not reach the requested tolerance."""


class ZeroDenominator(SeqMeasError):
    """A conditional amplitude sum vanishes; the ratio is undefined."""


class ParseError(SeqMeasError):
    """A run-specification file is malformed."""
