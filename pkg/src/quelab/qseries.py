"""Exact integer q-expansions and the cusp-form spaces they span.

Everything in this module is exact: coefficients are Python integers (a
series may carry a common denominator so rational constants never leak
into the arithmetic), and all products are truncated convolutions.  On
top of the series layer sit the weight-k cusp space constructions: the
closed-form dimension, the echelonized Victor-Miller basis built from
monomials in E4, E6 and Delta, and integer matrices for the Hecke
operators T_p acting on that basis.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import gcd

from .errors import DimensionZero, DomainError, InsufficientOrder

try:
    from gmpy2 import mpz as _mpz
except ImportError:  # pragma: no cover - gmpy2 is a declared dependency
    _mpz = int

# Schoolbook convolution below this many coefficient pairs; Kronecker
# substitution (one big integer multiply) above it.
_SCHOOLBOOK_PAIRS = 4096


def _conv_schoolbook(a, b, nout):
    out = [0] * (nout + 1)
    for i, ai in enumerate(a):
        if ai == 0:
            continue
        jmax = min(len(b) - 1, nout - i)
        for j in range(jmax + 1):
            bj = b[j]
            if bj:
                out[i + j] += ai * bj
    return out


def _conv_kronecker(a, b, nout):
    # Pack both polynomials into single integers at a digit width wide
    # enough that convolution coefficients cannot collide, multiply once,
    # and unpack.  Signed digits are handled by biasing each digit by
    # half the range, which by construction never generates carries.
    maxa = max(abs(c) for c in a) or 1
    maxb = max(abs(c) for c in b) or 1
    width = (
        maxa.bit_length()
        + maxb.bit_length()
        + min(len(a), len(b)).bit_length()
        + 2
    )
    width = ((width + 7) // 8) * 8
    wb = width // 8
    half = 1 << (width - 1)

    def pack(coeffs):
        buf = bytearray()
        for c in coeffs:
            buf += (c + half).to_bytes(wb, "little")
        packed = int.from_bytes(bytes(buf), "little")
        ones = ((1 << (width * len(coeffs))) - 1) // ((1 << width) - 1)
        return packed - half * ones

    x = int(_mpz(pack(a)) * _mpz(pack(b)))
    ndig = len(a) + len(b)
    ones = ((1 << (width * ndig)) - 1) // ((1 << width) - 1)
    y = x + half * ones
    raw = y.to_bytes(ndig * wb, "little")
    out = []
    for i in range(min(ndig, nout + 1)):
        chunk = int.from_bytes(raw[i * wb : (i + 1) * wb], "little")
        out.append(chunk - half)
    out += [0] * (nout + 1 - len(out))
    return out


def _convolve(a, b, nout):
    if len(a) * len(b) <= _SCHOOLBOOK_PAIRS:
        return _conv_schoolbook(a, b, nout)
    return _conv_kronecker(a, b, nout)


@dataclass(frozen=True)
class PowerSeries:
    """Truncated q-expansion (1/denom) * sum coeffs[n] q^n, n = 0..order.

    coeffs are exact integers; denom is a positive integer.  Arithmetic
    never rounds; products of order-N series are truncated back to N.
    """

    coeffs: tuple
    denom: int = 1

    def __post_init__(self):
        if self.denom <= 0:
            raise DomainError("series denominator must be positive")

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @staticmethod
    def constant(value: int, order: int, denom: int = 1) -> "PowerSeries":
        return PowerSeries((value,) + (0,) * order, denom)

    def _normalized(self) -> "PowerSeries":
        g = self.denom
        for c in self.coeffs:
            g = gcd(g, c)
            if g == 1:
                return self
        return PowerSeries(tuple(c // g for c in self.coeffs), self.denom // g)

    def truncate(self, order: int) -> "PowerSeries":
        if order >= self.order:
            return self
        return PowerSeries(self.coeffs[: order + 1], self.denom)

    def coeff(self, n: int) -> Fraction:
        """Exact coefficient of q^n as a rational."""
        if n < 0 or n > self.order:
            raise InsufficientOrder(f"coefficient q^{n} beyond order {self.order}")
        return Fraction(self.coeffs[n], self.denom)

    def coeff_int(self, n: int) -> int:
        """Integer coefficient of q^n; demands denom == 1."""
        if self.denom != 1:
            raise DomainError("series carries a nontrivial denominator")
        if n < 0 or n > self.order:
            raise InsufficientOrder(f"coefficient q^{n} beyond order {self.order}")
        return self.coeffs[n]

    def __add__(self, other: "PowerSeries") -> "PowerSeries":
        n = min(self.order, other.order)
        d = self.denom * other.denom // gcd(self.denom, other.denom)
        sa, sb = d // self.denom, d // other.denom
        return PowerSeries(
            tuple(sa * self.coeffs[i] + sb * other.coeffs[i] for i in range(n + 1)), d
        )._normalized()

    def __neg__(self) -> "PowerSeries":
        return PowerSeries(tuple(-c for c in self.coeffs), self.denom)

    def __sub__(self, other: "PowerSeries") -> "PowerSeries":
        return self + (-other)

    def __mul__(self, other) -> "PowerSeries":
        if isinstance(other, int):
            return PowerSeries(
                tuple(other * c for c in self.coeffs), self.denom
            )._normalized()
        if isinstance(other, Fraction):
            return PowerSeries(
                tuple(other.numerator * c for c in self.coeffs),
                self.denom * other.denominator,
            )._normalized()
        n = min(self.order, other.order)
        out = _convolve(list(self.coeffs), list(other.coeffs), n)
        return PowerSeries(tuple(out), self.denom * other.denom)._normalized()

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "PowerSeries":
        if n < 0:
            raise DomainError("negative series powers are not supported")
        result = PowerSeries.constant(1, self.order)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def exact_div(self, d: int) -> "PowerSeries":
        """Divide every coefficient by d, demanding exactness."""
        for c in self.coeffs:
            if c % d:
                raise DomainError(f"coefficient {c} not divisible by {d}")
        return PowerSeries(tuple(c // d for c in self.coeffs), self.denom)

    def shift(self, j: int) -> "PowerSeries":
        """Multiply by q^j, preserving the truncation order."""
        if j == 0:
            return self
        return PowerSeries(
            (0,) * j + self.coeffs[: self.order + 1 - j], self.denom
        )


@lru_cache(maxsize=None)
def _bernoulli(m: int) -> Fraction:
    # B_0 = 1 and sum_{j<=m} C(m+1, j) B_j = 0 for m >= 1.
    if m == 0:
        return Fraction(1)
    if m == 1:
        return Fraction(-1, 2)
    if m % 2:
        return Fraction(0)
    acc = Fraction(0)
    c = 1  # C(m+1, j) built incrementally
    for j in range(m):
        acc += c * _bernoulli(j)
        c = c * (m + 1 - j) // (j + 1)
    return -acc / (m + 1)


def _sigma_power_list(e: int, n: int):
    s = [0] * (n + 1)
    for d in range(1, n + 1):
        de = d**e
        for m in range(d, n + 1, d):
            s[m] += de
    return s


def eisenstein_series(k: int, order: int) -> PowerSeries:
    """Normalized weight-k Eisenstein series to the given order.

    Constant term 1 and q^n coefficient -(2k/B_k) * sigma_{k-1}(n), stored
    exactly with the rational constant cleared to a common denominator.
    """
    if k % 2 or k < 4:
        raise DomainError("Eisenstein series needs even weight k >= 4")
    if order < 0:
        raise DomainError("order must be nonnegative")
    c = Fraction(-2 * k, 1) / _bernoulli(k)
    sig = _sigma_power_list(k - 1, order)
    coeffs = [c.denominator] + [c.numerator * sig[n] for n in range(1, order + 1)]
    return PowerSeries(tuple(coeffs), c.denominator)._normalized()


def _eta_product_24(order: int) -> PowerSeries:
    # prod (1-q^n) by the pentagonal-number expansion, then the 24th power.
    coeffs = [0] * (order + 1)
    coeffs[0] = 1
    m = 1
    while True:
        p1 = m * (3 * m - 1) // 2
        p2 = m * (3 * m + 1) // 2
        if p1 > order and p2 > order:
            break
        s = 1 if m % 2 == 0 else -1
        if p1 <= order:
            coeffs[p1] = s
        if p2 <= order:
            coeffs[p2] = s
        m += 1
    return PowerSeries(tuple(coeffs)) ** 24


@lru_cache(maxsize=32)
def delta_series(order: int) -> PowerSeries:
    """The discriminant cusp form q * prod (1-q^n)^24 to the given order.

    Both constructions are carried out and compared: the eta-product
    expansion and (E4^3 - E6^2)/1728 must agree coefficient for
    coefficient, or the arithmetic layer itself is broken.
    """
    if order < 1:
        raise DomainError("order must be at least 1")
    from_product = _eta_product_24(order).shift(1)
    e4 = eisenstein_series(4, order)
    e6 = eisenstein_series(6, order)
    from_eisenstein = (e4**3 - e6**2).exact_div(1728)
    if from_product != from_eisenstein:
        raise AssertionError("delta constructions disagree; exact layer corrupted")
    return from_product


def cusp_dim(k: int) -> int:
    """Dimension of the weight-k cusp space for the full modular group."""
    if k % 2:
        raise DomainError("weight must be even")
    if k < 12 or k == 14:
        return 0
    if k % 12 == 2:
        return k // 12 - 1
    return k // 12


@dataclass(frozen=True)
class VictorMillerBasis:
    """Echelonized integral basis g_1..g_d of the weight-k cusp space.

    g_i = q^i + O(q^{d+1}); every coefficient is an exact integer.
    """

    weight: int
    dim: int
    basis: tuple
    order: int

    def form(self, i: int) -> PowerSeries:
        """1-based access matching the echelon index."""
        return self.basis[i - 1]


def victor_miller_basis(k: int, order: int) -> VictorMillerBasis:
    """Monomials E4^a E6^b Delta^c with 4a+6b+12c = k, echelon-reduced."""
    d = cusp_dim(k)
    if d == 0:
        raise DimensionZero(f"no cusp forms of weight {k}")
    if order < 2 * d + 1:
        raise InsufficientOrder(
            f"order {order} < {2 * d + 1} cannot support echelon readoff"
        )
    e4 = eisenstein_series(4, order)
    e6 = eisenstein_series(6, order)
    delta = delta_series(order)

    monomials = {}
    delta_pow = delta
    for c in range(1, k // 12 + 1):
        r = k - 12 * c
        if r == 2:
            delta_pow = delta_pow * delta
            continue
        if r % 4 == 0:
            a, b = r // 4, 0
        else:
            a, b = (r - 6) // 4, 1
        mono = delta_pow
        if a:
            mono = mono * e4**a
        if b:
            mono = mono * e6
        monomials[c] = mono
        delta_pow = delta_pow * delta
    if sorted(monomials) != list(range(1, d + 1)):
        raise AssertionError("monomial valuations do not fill 1..dim")

    # The matrix of leading coefficients is unit upper triangular, so
    # elimination stays in integers.
    forms = [monomials[c] for c in range(1, d + 1)]
    for i in range(d - 1, -1, -1):
        gi = forms[i]
        for j in range(i + 1, d):
            factor = gi.coeff_int(j + 1)
            if factor:
                gi = gi - forms[j] * factor
        forms[i] = gi
    for i, g in enumerate(forms, start=1):
        if g.coeff_int(0) != 0 or g.coeff_int(i) != 1:
            raise AssertionError("echelon normalization failed")
        for j in range(1, d + 1):
            if j != i and g.coeff_int(j) != 0:
                raise AssertionError("echelon normalization failed")
    return VictorMillerBasis(k, d, tuple(forms), order)


@dataclass(frozen=True)
class HeckeMatrix:
    """Integer matrix of T_p on a Victor-Miller basis.

    entries[j][i] is the coefficient of g_{j+1} in T_p g_{i+1}, so column
    eigenvectors of the matrix give Hecke eigenforms.
    """

    prime: int
    weight: int
    entries: tuple

    @property
    def dim(self) -> int:
        return len(self.entries)

    def trace(self) -> int:
        return sum(self.entries[i][i] for i in range(self.dim))

    def matmul(self, other: "HeckeMatrix") -> tuple:
        n = self.dim
        return tuple(
            tuple(
                sum(self.entries[i][l] * other.entries[l][j] for l in range(n))
                for j in range(n)
            )
            for i in range(n)
        )


def hecke_matrix(p: int, basis: VictorMillerBasis) -> HeckeMatrix:
    """T_p on the echelon basis, read off exactly from q-coefficients.

    T_p sends coefficients a(n) to a(pn) + p^(k-1) a(n/p), so the first d
    coefficients of T_p g_i identify its echelon coordinates.
    """
    d, k = basis.dim, basis.weight
    if basis.order < p * (d + 1):
        raise InsufficientOrder(
            f"basis order {basis.order} < {p * (d + 1)} for T_{p}"
        )
    pk = p ** (k - 1)
    cols = []
    for i in range(1, d + 1):
        g = basis.form(i)
        col = []
        for n in range(1, d + 1):
            b = g.coeff_int(p * n)
            if n % p == 0:
                b += pk * g.coeff_int(n // p)
            col.append(b)
        cols.append(col)
    entries = tuple(tuple(cols[i][j] for i in range(d)) for j in range(d))
    return HeckeMatrix(p, k, entries)
