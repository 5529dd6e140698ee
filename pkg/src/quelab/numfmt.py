"""Precision-faithful decimal serialization for mpf values.

Cache files and reports store numbers as decimal strings.  Writing uses
an exact integer algorithm that produces the correctly rounded d-digit
decimal of man * 2^exp; reading converts the parsed rational with one
correct rounding.  With d >= ceil(prec * log10(2)) + 2 the round trip
binary -> decimal -> binary is the identity, which is what makes warm
cache runs byte-identical to cold ones.
"""

from __future__ import annotations

from mpmath import mp, mpf
from mpmath.libmp import from_rational

from .errors import DomainError

# Significant digits guaranteeing exact round-trip for values read back
# at `prec` bits: ceil(prec * log10 2) + 1, plus slack.
def roundtrip_digits(prec: int) -> int:
    return int(prec * 0.30103) + 4


def _round_half_even(num: int, den: int) -> int:
    q, r = divmod(num, den)
    twice = 2 * r
    if twice > den or (twice == den and q % 2):
        q += 1
    return q


def mpf_to_decimal(x, digits: int | None = None) -> str:
    """Correctly rounded scientific decimal "m.mmm...e<E>" of an mpf."""
    if not isinstance(x, mp.mpf):
        # never re-wrap an existing mpf: that would re-round it at the
        # ambient precision and silently truncate high-precision values
        x = mpf(x)
    if not mp.isfinite(x):
        raise DomainError(f"cannot serialize non-finite value {x}")
    if x == 0:
        return "0"
    sign, man, exp, bc = x._mpf_
    if digits is None:
        # The mantissa carries its own precision; stay faithful to it.
        digits = roundtrip_digits(max(int(bc), 53))
    man = int(man)
    exp = int(exp)
    if abs(exp) > 2_000_000:
        raise DomainError("exponent too large to serialize as decimal")
    # Decimal exponent estimate; corrected below if off by one.
    bits = man.bit_length() + exp
    e10 = int(bits * 0.30102999566398119) + 1
    for _ in range(4):
        shift10 = digits - e10
        num = man
        den = 1
        if exp >= 0:
            num <<= exp
        else:
            den <<= -exp
        if shift10 >= 0:
            num *= 10**shift10
        else:
            den *= 10 ** (-shift10)
        m10 = _round_half_even(num, den)
        if m10 >= 10**digits:
            e10 += 1
            continue
        if m10 < 10 ** (digits - 1):
            e10 -= 1
            continue
        break
    else:
        raise AssertionError("decimal exponent search failed to settle")
    ds = str(m10)
    body = ds[0] + "." + ds[1:] if digits > 1 else ds
    s = "-" if sign else ""
    return f"{s}{body}e{e10 - 1}"


def decimal_to_mpf(s: str, prec: int | None = None):
    """Parse a decimal string to a correctly rounded mpf at `prec` bits."""
    prec = prec or mp.prec
    s = s.strip()
    if s in ("0", "-0", "+0"):
        return mpf(0)
    neg = s.startswith("-")
    if s[0] in "+-":
        s = s[1:]
    if "e" in s or "E" in s:
        body, _, es = s.replace("E", "e").partition("e")
        e10 = int(es)
    else:
        body, e10 = s, 0
    if "." in body:
        ip, _, fp = body.partition(".")
    else:
        ip, fp = body, ""
    digits = (ip + fp).lstrip("0") or "0"
    if digits == "0":
        return mpf(0)
    # value = int(ip+fp) * 10^(e10 - len(fp))
    p = int(ip + fp)
    shift = e10 - len(fp)
    if shift >= 0:
        num, den = p * 10**shift, 1
    else:
        num, den = p, 10 ** (-shift)
    if neg:
        num = -num
    return mp.make_mpf(from_rational(num, den, prec, "n"))


def fmt(x, sig: int = 25) -> str:
    """Deterministic report formatting for numeric table cells."""
    if isinstance(x, int):
        return str(x)
    if not isinstance(x, mp.mpf):
        x = mpf(x)
    return mpf_to_decimal(x, digits=sig)
