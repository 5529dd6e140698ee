"""Exception hierarchy for quelab.

Numeric failures are never silently absorbed: every contract violation
raises a distinct exception type so callers (and the CLI exit-code map)
can tell scientific failures from operational ones.
"""


class QuelabError(Exception):
    """Base class for all quelab errors."""


class DimensionZero(QuelabError):
    """The cusp-form space for this weight is trivial."""


class InsufficientOrder(QuelabError):
    """A power series was truncated too early for the requested operation."""


class InsufficientCoeffs(QuelabError):
    """An eigenform does not carry enough coefficients for a certified sum."""


class DegenerateSpectrum(QuelabError):
    """Two Hecke eigenvalues coincide (exactly, or within resolution)."""


class ComplexRoot(QuelabError):
    """A nonreal root of a Hecke characteristic polynomial was detected."""


class MissingPrime(QuelabError):
    """A prime coefficient needed by the Hecke recursion is not stored."""


class NoConvergence(QuelabError):
    """A certified truncation search exceeded its cap."""


class QuadratureStall(QuelabError):
    """Adaptive quadrature refinement stopped reducing the error estimate."""


class NegativeMass(QuelabError):
    """A diagonal mass came out negative beyond tolerance (precision exhausted)."""


class WeightMismatch(QuelabError):
    """Operands are eigenforms of different weights."""


class AllZeroCoeffs(QuelabError):
    """An admissible combination needs at least one nonzero coefficient."""


class DimensionTooSmall(QuelabError):
    """The scenario needs at least two eigenforms per weight."""


class InsufficientRange(QuelabError):
    """A mean-value sum range is empty for every requested weight."""


class CorruptEntry(QuelabError):
    """A cache entry failed digest or schema validation (non-fatal)."""


class DomainError(QuelabError):
    """An argument lies outside the mathematical domain of the operation."""


class RangeOverflow(QuelabError):
    """A log-scale value cannot be converted to a plain float without overflow."""
