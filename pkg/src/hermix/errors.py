"""Exception types shared across the package.

Every error raised deliberately by this package derives from
:class:`HermixError`, so callers can catch the whole family at once.
"""


class HermixError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatch(HermixError):
    """Operands have incompatible shapes."""


class SingularMatrix(HermixError):
    """A pivot fell below the working-precision threshold.

    For the Gram systems this usually means the basis order is too large
    for the requested precision at the given center separation.
    """


class PrecisionExhausted(HermixError):
    """Intermediate cancellation exceeded the precision budget."""


class OrderTooLarge(HermixError):
    """Hermite order outside the supported range."""


class NonFiniteDensity(HermixError):
    """A density evaluated to NaN or infinity."""


class EmptySample(HermixError):
    """An operation that needs samples received none."""


class DegenerateComponent(HermixError):
    """Positive part of an estimated component has (near) zero mass."""


class OverlappingIntervals(HermixError):
    """Component intervals touch or overlap; the model is unidentifiable."""


class NoValidPartition(HermixError):
    """No scale admits the two-cluster split of the heavy grid points."""


class InsufficientSamples(HermixError):
    """Sample count below the bound required by the interval search."""


class InvalidBalance(HermixError):
    """Positive and negative coefficient sums violate the sign assumption."""
