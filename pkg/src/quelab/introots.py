"""Exact characteristic polynomials and certified real-root isolation.

The Hecke matrices handled here are small (dimension <= ~25) with very
large integer entries, so everything before the final floating polish is
done in exact arithmetic: Faddeev-LeVerrier for the characteristic
polynomial, rational Sturm chains for root counting, and exact dyadic
bisection for isolation.  Only the last refinement step switches to
mpmath Newton iteration, safeguarded against leaving its certified
interval.
"""

from __future__ import annotations

from fractions import Fraction

from mpmath import mp, mpf

from .errors import ComplexRoot, DegenerateSpectrum

# Extra working bits for the floating polish; absorbs coefficient rounding.
_POLISH_GUARD = 96


def charpoly(entries) -> list:
    """Monic characteristic polynomial, ascending coefficients, exact.

    Faddeev-LeVerrier: M_1 = A, c_{d-1} = -tr M_1, and
    M_j = A (M_{j-1} + c_{d-j+1} I), c_{d-j} = -tr(M_j)/j, every division
    exact over the integers.
    """
    a = [list(row) for row in entries]
    d = len(a)
    coeffs = [0] * (d + 1)
    coeffs[d] = 1
    m = [row[:] for row in a]
    for j in range(1, d + 1):
        tr = sum(m[i][i] for i in range(d))
        if tr % j:
            raise AssertionError("Faddeev-LeVerrier trace not divisible")
        c = -(tr // j)
        coeffs[d - j] = c
        if j == d:
            break
        for i in range(d):
            m[i][i] += c
        m = [
            [sum(a[i][l] * m[l][jj] for l in range(d)) for jj in range(d)]
            for i in range(d)
        ]
    return coeffs


def _poly_deriv(p):
    return [i * c for i, c in enumerate(p)][1:]


def _poly_eval_fraction(p, x: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in reversed(p):
        acc = acc * x + c
    return acc


def _poly_divmod(num, den):
    num = list(num)
    q = [Fraction(0)] * max(len(num) - len(den) + 1, 1)
    lead = den[-1]
    while len(num) >= len(den) and any(num):
        while num and num[-1] == 0:
            num.pop()
        if len(num) < len(den):
            break
        f = num[-1] / lead
        shift = len(num) - len(den)
        q[shift] = f
        for i, c in enumerate(den):
            num[shift + i] -= f * c
        num.pop()
    return q, num


def _poly_gcd(a, b):
    a = [Fraction(c) for c in a]
    b = [Fraction(c) for c in b]
    while any(b):
        _, r = _poly_divmod(a, b)
        while r and r[-1] == 0:
            r.pop()
        a, b = b, r
    return a


def squarefree_part(p):
    """(p / gcd(p, p'), had_repeats) over the rationals, integer-cleared."""
    g = _poly_gcd([Fraction(c) for c in p], [Fraction(c) for c in _poly_deriv(p)])
    if len(g) <= 1:
        return list(p), False
    q, r = _poly_divmod([Fraction(c) for c in p], g)
    if any(r):
        raise AssertionError("gcd does not divide its polynomial")
    from math import lcm

    den = 1
    for c in q:
        den = lcm(den, c.denominator)
    out = [int(c * den) for c in q]
    from math import gcd as _gcd

    g2 = 0
    for c in out:
        g2 = _gcd(g2, c)
    return [c // g2 for c in out], True


def _sturm_chain(p):
    chain = [[Fraction(c) for c in p], [Fraction(c) for c in _poly_deriv(p)]]
    while True:
        a, b = chain[-2], chain[-1]
        if not any(b):
            chain.pop()
            break
        _, r = _poly_divmod(a, b)
        while r and r[-1] == 0:
            r.pop()
        if not r:
            break
        chain.append([-c for c in r])
    return chain


def _sign_changes(chain, x: Fraction) -> int:
    signs = []
    for poly in chain:
        v = _poly_eval_fraction(poly, x)
        if v != 0:
            signs.append(1 if v > 0 else -1)
    changes = 0
    for s0, s1 in zip(signs, signs[1:]):
        if s0 != s1:
            changes += 1
    return changes


def _root_bound(p) -> Fraction:
    lead = abs(p[-1])
    m = max(abs(c) for c in p[:-1]) if len(p) > 1 else 0
    return Fraction(m, lead) + 1


def isolate_real_roots(p):
    """Disjoint open dyadic intervals, one simple real root in each.

    The input must be squarefree.  Returns the intervals sorted in
    increasing order; the Sturm count over (lo, hi] is exactly one per
    interval and their union carries every real root of p.
    """
    chain = _sturm_chain(p)
    bound = _root_bound(p)
    lo, hi = -bound, bound
    total = _sign_changes(chain, lo) - _sign_changes(chain, hi)
    intervals = []
    stack = [(lo, hi, total)]
    while stack:
        a, b, count = stack.pop()
        if count == 0:
            continue
        if count == 1:
            intervals.append((a, b))
            continue
        mid = (a + b) / 2
        # Nudge off an exact root hit so interval endpoints stay regular.
        while _poly_eval_fraction([Fraction(c) for c in p], mid) == 0:
            mid += (b - a) / (1 << 20)
        left = _sign_changes(chain, a) - _sign_changes(chain, mid)
        stack.append((a, mid, left))
        stack.append((mid, b, count - left))
    intervals.sort()
    return intervals


def _bisect_exact(p, lo: Fraction, hi: Fraction, steps: int):
    plo = _poly_eval_fraction([Fraction(c) for c in p], lo)
    if plo == 0:
        return lo, lo
    sign_lo = 1 if plo > 0 else -1
    for _ in range(steps):
        mid = (lo + hi) / 2
        v = _poly_eval_fraction([Fraction(c) for c in p], mid)
        if v == 0:
            return mid, mid
        if (1 if v > 0 else -1) == sign_lo:
            lo = mid
        else:
            hi = mid
    return lo, hi


def refine_root(p, interval, prec: int):
    """Polish one isolated root to `prec` bits via safeguarded Newton."""
    lo, hi = interval
    lo, hi = _bisect_exact(p, lo, hi, 48)
    with mp.workprec(prec + _POLISH_GUARD):
        if lo == hi:
            return mpf(lo.numerator) / lo.denominator
        deriv = _poly_deriv(p)
        x = (mpf(lo.numerator) / lo.denominator + mpf(hi.numerator) / hi.denominator) / 2
        flo = mpf(lo.numerator) / lo.denominator
        fhi = mpf(hi.numerator) / hi.denominator
        for _ in range(80):
            fx = _horner_mpf(p, x)
            dfx = _horner_mpf(deriv, x)
            if dfx == 0:
                break
            step = fx / dfx
            x_new = x - step
            if x_new < flo or x_new > fhi:
                x_new = (flo + fhi) / 2  # fall back inside the bracket
            if abs(step) <= abs(x) * mpf(2) ** (-(prec + _POLISH_GUARD - 8)):
                x = x_new
                break
            x = x_new
        return x


def _horner_mpf(p, x):
    acc = mpf(0)
    for c in reversed(p):
        acc = acc * x + c
    return acc


def real_roots_exact(p, prec: int):
    """All real roots of an exact integer polynomial, certified simple.

    Raises DegenerateSpectrum on repeated roots (exact gcd test, plus a
    post-polish spacing check at 2^(-prec/2)) and ComplexRoot when the
    Sturm count falls short of the degree.
    """
    sf, had_repeats = squarefree_part(p)
    if had_repeats:
        raise DegenerateSpectrum("characteristic polynomial has repeated roots")
    degree = len(sf) - 1
    intervals = isolate_real_roots(sf)
    if len(intervals) < degree:
        raise ComplexRoot(
            f"only {len(intervals)} real roots for degree {degree}"
        )
    roots = [refine_root(sf, iv, prec) for iv in intervals]
    with mp.workprec(prec + 8):
        gap_tol = mpf(2) ** (-(prec // 2))
        for r0, r1 in zip(roots, roots[1:]):
            scale = max(mpf(1), abs(r0), abs(r1))
            if abs(r1 - r0) < gap_tol * scale:
                raise DegenerateSpectrum(
                    "adjacent eigenvalues closer than resolution"
                )
    return roots
