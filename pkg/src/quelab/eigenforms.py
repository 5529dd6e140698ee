"""Hecke eigenforms as certified high-precision coefficient sequences.

The weight-k cusp space is diagonalized through T_2 alone: its exact
integer characteristic polynomial is factored by certified Sturm
isolation, each simple real eigenvalue is polished with safeguarded
Newton, and the near-singular eigenvector solve then yields the Fourier
coefficients in echelon coordinates.  Coefficients are normalized so
a(1) = 1 and stored in the Deligne-normalized form

    lam(n) = a(n) * n^(-(k-1)/2),

the signed real convention (the eigenvector entries are real).
"""

from __future__ import annotations

from dataclasses import dataclass

from mpmath import mp, mpf

from .errors import DimensionZero, DomainError, InsufficientCoeffs, MissingPrime
from .introots import charpoly, real_roots_exact
from .qseries import cusp_dim, hecke_matrix, victor_miller_basis

_DECOMP_GUARD = 64


@dataclass(frozen=True)
class Eigenform:
    """One normalized Hecke eigenform with lam(1..ncoeffs) at fixed precision."""

    weight: int
    index: int
    ncoeffs: int
    lam: tuple
    precision_bits: int
    t2_eigenvalue: object

    def lambda_at(self, n: int):
        if n < 1 or n > self.ncoeffs:
            raise InsufficientCoeffs(
                f"lam({n}) not stored (have 1..{self.ncoeffs})"
            )
        return self.lam[n - 1]

    def a_at(self, n: int):
        """Un-normalized Fourier coefficient a(n) = lam(n) n^((k-1)/2)."""
        with mp.workprec(self.precision_bits + 16):
            val = self.lambda_at(n) * mp.exp(
                mpf(self.weight - 1) / 2 * mp.log(n)
            )
        with mp.workprec(self.precision_bits):
            return +val


@dataclass(frozen=True)
class EigenBasis:
    """All eigenforms of one weight, ordered by ascending T_2 eigenvalue."""

    weight: int
    forms: tuple
    t2_charpoly: tuple

    @property
    def dim(self) -> int:
        return len(self.forms)

    def form(self, index: int) -> Eigenform:
        if index < 1 or index > self.dim:
            raise DomainError(f"form index {index} outside 1..{self.dim}")
        return self.forms[index - 1]


def _kernel_vector(entries, eigval, d, wp):
    """Unit-normalized kernel of (M - eigval I) by partial-pivot elimination.

    The matrix is near-singular by construction; the last pivot collapses
    and its variable becomes the free one.
    """
    with mp.workprec(wp):
        m = [[mpf(entries[i][j]) for j in range(d)] for i in range(d)]
        for i in range(d):
            m[i][i] -= eigval
        for col in range(d - 1):
            piv = max(range(col, d), key=lambda r: abs(m[r][col]))
            if piv != col:
                m[col], m[piv] = m[piv], m[col]
            if m[col][col] == 0:
                continue
            inv = 1 / m[col][col]
            for r in range(col + 1, d):
                f = m[r][col] * inv
                if f == 0:
                    continue
                for c in range(col, d):
                    m[r][c] -= f * m[col][c]
        x = [mpf(0)] * d
        x[d - 1] = mpf(1)
        for i in range(d - 2, -1, -1):
            s = mpf(0)
            for j in range(i + 1, d):
                s += m[i][j] * x[j]
            x[i] = -s / m[i][i]
        return x


def eigen_decompose(k: int, ncoeffs: int, precision_bits: int = 256) -> EigenBasis:
    """Diagonalize T_2 on weight k and extend coefficients to n <= ncoeffs."""
    if precision_bits < 128:
        raise DomainError("precision_bits must be at least 128")
    if ncoeffs < 2:
        raise DomainError("need at least two coefficients")
    d = cusp_dim(k)
    if d == 0:
        raise DimensionZero(f"weight {k} has no cusp forms")
    order = max(ncoeffs, 2 * (d + 1), 2 * d + 1)
    basis = victor_miller_basis(k, order)
    t2 = hecke_matrix(2, basis)
    cp = charpoly(t2.entries)
    wp = precision_bits + _DECOMP_GUARD
    roots = real_roots_exact(cp, precision_bits + _DECOMP_GUARD)

    forms = []
    with mp.workprec(wp):
        log_n = [mpf(0)] * (ncoeffs + 1)
        for n in range(1, ncoeffs + 1):
            log_n[n] = mp.log(n)
        half = mpf(k - 1) / 2
        for idx, root in enumerate(roots, start=1):
            v = _kernel_vector(t2.entries, root, d, wp)
            inv_a1 = 1 / v[0]
            coords = [vi * inv_a1 for vi in v]
            lam = [mpf(1)]
            for n in range(2, ncoeffs + 1):
                a_n = mpf(0)
                for i in range(d):
                    g = basis.basis[i].coeffs[n]
                    if g:
                        a_n += coords[i] * g
                lam.append(a_n * mp.exp(-half * log_n[n]))
            with mp.workprec(precision_bits):
                lam_r = tuple(+x for x in lam)
                root_r = +root
            forms.append(
                Eigenform(k, idx, ncoeffs, lam_r, precision_bits, root_r)
            )
    return EigenBasis(k, tuple(forms), tuple(cp))


def lambda_extend_by_hecke(form: Eigenform, n: int):
    """Rebuild lam(n) from prime data only, as an independent oracle.

    Uses lam(p^(r+1)) = lam(p) lam(p^r) - lam(p^(r-1)) at each prime and
    multiplicativity across coprime parts; never touches the stored
    composite entries.
    """
    if n < 1:
        raise DomainError("index must be positive")
    if n == 1:
        return mpf(1)
    with mp.workprec(form.precision_bits):
        result = mpf(1)
        rest = n
        p = 2
        while p * p <= rest:
            if rest % p == 0:
                e = 0
                while rest % p == 0:
                    rest //= p
                    e += 1
                result *= _prime_power_lambda(form, p, e)
            p += 1 if p == 2 else 2
        if rest > 1:
            result *= _prime_power_lambda(form, rest, 1)
        return +result


def _prime_power_lambda(form: Eigenform, p: int, e: int):
    if p > form.ncoeffs:
        raise MissingPrime(f"lam({p}) not available")
    lp = form.lambda_at(p)
    if e == 1:
        return lp
    prev, cur = mpf(1), lp
    for _ in range(e - 1):
        prev, cur = cur, lp * cur - prev
    return cur


@dataclass(frozen=True)
class DeligneReport:
    """Scan of |lam(n)| / tau(n) against the divisor bound."""

    weight: int
    index: int
    scanned: int
    max_ratio: object
    argmax: int
    passed: bool
    weak_bound_ratio: object  # max |lam(n)| n^(-(1/8 - 1/(8 pi)))


def divisor_counts(n: int):
    tau = [0] * (n + 1)
    for d in range(1, n + 1):
        for m in range(d, n + 1, d):
            tau[m] += 1
    return tau


def deligne_check(form: Eigenform, ncheck: int) -> DeligneReport:
    """max |lam(n)|/tau(n) over n <= ncheck; PASS iff <= 1 + 2^(-prec/2)."""
    if ncheck > form.ncoeffs:
        raise InsufficientCoeffs(f"form stores only {form.ncoeffs} coefficients")
    tau = divisor_counts(ncheck)
    with mp.workprec(form.precision_bits):
        best = mpf(0)
        argmax = 1
        weak = mpf(0)
        weak_exp = mpf(1) / 8 - 1 / (8 * mp.pi)
        for n in range(1, ncheck + 1):
            r = abs(form.lam[n - 1]) / tau[n]
            if r > best:
                best, argmax = r, n
            w = abs(form.lam[n - 1]) * mp.exp(-weak_exp * mp.log(n))
            if w > weak:
                weak = w
        tol = 1 + mpf(2) ** (-(form.precision_bits // 2))
        return DeligneReport(
            form.weight, form.index, ncheck, +best, argmax, best <= tol, +weak
        )
