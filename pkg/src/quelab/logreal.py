"""Sign/log-magnitude scalars.

A LogReal stores a real number as a sign in {-1, 0, +1} together with the
natural log of its absolute value, so quantities like (4*pi)^(k-1), (k-1)!
and exp(-2*pi*T) stay representable and composable far beyond float range.
Addition factors out the larger magnitude:

    log(a + b) = logmax + log1p(+-exp(logmin - logmax))

which keeps cancellation visible instead of silently flushing to zero.

All operations round at the ambient mpmath precision.  The summation
policy used throughout quelab is "ascending fixed index order", which
makes every accumulated value reproducible bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

from mpmath import mp, mpf

from .errors import RangeOverflow

# Plain-float conversion refuses magnitudes beyond this natural-log bound.
FLOAT_LOG_LIMIT = 700.0


@dataclass(frozen=True)
class LogReal:
    """A real number as (sign, ln|value|); logmag is meaningless when sign == 0."""

    sign: int
    logmag: object  # mpf

    @staticmethod
    def zero() -> "LogReal":
        return LogReal(0, mpf(0))

    @staticmethod
    def one() -> "LogReal":
        return LogReal(1, mpf(0))

    @staticmethod
    def from_mpf(x) -> "LogReal":
        x = mpf(x)
        if x == 0:
            return LogReal.zero()
        return LogReal(1 if x > 0 else -1, mp.log(abs(x)))

    @staticmethod
    def from_log(logmag, sign: int = 1) -> "LogReal":
        if sign == 0:
            return LogReal.zero()
        return LogReal(sign, mpf(logmag))

    def is_zero(self) -> bool:
        return self.sign == 0

    def __neg__(self) -> "LogReal":
        return LogReal(-self.sign, self.logmag)

    def __abs__(self) -> "LogReal":
        return LogReal(abs(self.sign), self.logmag)

    def __mul__(self, other: "LogReal") -> "LogReal":
        if self.sign == 0 or other.sign == 0:
            return LogReal.zero()
        return LogReal(self.sign * other.sign, self.logmag + other.logmag)

    def __truediv__(self, other: "LogReal") -> "LogReal":
        if other.sign == 0:
            raise ZeroDivisionError("LogReal division by zero")
        if self.sign == 0:
            return LogReal.zero()
        return LogReal(self.sign * other.sign, self.logmag - other.logmag)

    def __pow__(self, n: int) -> "LogReal":
        if n == 0:
            return LogReal.one()
        if self.sign == 0:
            return LogReal.zero()
        sign = self.sign if n % 2 else abs(self.sign)
        return LogReal(sign, self.logmag * n)

    def __add__(self, other: "LogReal") -> "LogReal":
        if self.sign == 0:
            return other
        if other.sign == 0:
            return self
        # Pivot on the larger magnitude; ties resolve identically either way.
        if self.logmag >= other.logmag:
            big, small = self, other
        else:
            big, small = other, self
        ratio = mp.exp(small.logmag - big.logmag)
        if big.sign == small.sign:
            return LogReal(big.sign, big.logmag + mp.log1p(ratio))
        if ratio == 1:
            return LogReal.zero()
        return LogReal(big.sign, big.logmag + mp.log1p(-ratio))

    def __sub__(self, other: "LogReal") -> "LogReal":
        return self + (-other)

    def compare(self, other: "LogReal") -> int:
        """Total order compatible with the represented real values."""
        if self.sign != other.sign:
            return 1 if self.sign > other.sign else -1
        if self.sign == 0:
            return 0
        if self.logmag == other.logmag:
            return 0
        bigger_mag = 1 if self.logmag > other.logmag else -1
        return bigger_mag * self.sign

    def __lt__(self, other: "LogReal") -> bool:
        return self.compare(other) < 0

    def __le__(self, other: "LogReal") -> bool:
        return self.compare(other) <= 0

    def to_mpf(self):
        """Exact-to-precision conversion to an mpf (arbitrary exponent)."""
        if self.sign == 0:
            return mpf(0)
        return self.sign * mp.exp(self.logmag)

    def to_float(self) -> float:
        """Conversion to a plain float; raises instead of saturating."""
        if self.sign == 0:
            return 0.0
        if abs(self.logmag) > FLOAT_LOG_LIMIT:
            raise RangeOverflow(
                f"log magnitude {float(self.logmag):.6g} exceeds float range"
            )
        return float(self.sign * mp.exp(self.logmag))

    def __repr__(self) -> str:
        if self.sign == 0:
            return "LogReal(0)"
        s = "-" if self.sign < 0 else ""
        return f"LogReal({s}exp({mp.nstr(self.logmag, 12)}))"


class SignSplitSum:
    """Accumulator that sums positive and negative parts separately.

    The two one-sided streams are monotone, so they accumulate without
    cancellation; the single subtraction at the end is where any loss of
    significance shows up, making NegativeMass a meaningful alarm.
    """

    def __init__(self) -> None:
        self._pos = LogReal.zero()
        self._neg = LogReal.zero()
        self.count = 0

    def add(self, term: LogReal) -> None:
        if term.sign > 0:
            self._pos = self._pos + term
        elif term.sign < 0:
            self._neg = self._neg + abs(term)
        self.count += 1

    @property
    def positive(self) -> LogReal:
        return self._pos

    @property
    def negative(self) -> LogReal:
        return self._neg

    def total(self) -> LogReal:
        return self._pos - self._neg
