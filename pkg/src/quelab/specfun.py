"""Underflow-safe special functions at huge integer shape.

The regularized upper incomplete gamma at integer shape s,

    Q(s, x) = e^(-x) * sum_{m=0}^{s-1} x^m / m!,

is evaluated from that exact finite sum, factoring the largest term out
in log space and accumulating ratio terms outward from it in pairwise
blocks.  The continued-fraction evaluator exists purely as a cross-check
oracle and is never used by the mass pipeline.  The module also provides
factorials as LogReal values, a closed-form bound for exponential-
polynomial tails, and the certified truncation search used before every
coefficient sum.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from mpmath import mp, mpf

from .errors import DomainError, NoConvergence
from .logreal import LogReal

_GUARD = 32
_DIRECT_FACTORIAL_LIMIT = 10_000
# Plain-value Q results below exp(-4 * prec * ln 2) are flushed to an
# exact zero with the underflow flag set; log-space callers are unaffected.
UNDERFLOW_LOG2_FACTOR = 4

_BLOCK = 128


def _blocked_sum(terms):
    """Sum in fixed 128-term blocks, then the block sums in order."""
    total = mpf(0)
    block = mpf(0)
    n = 0
    for t in terms:
        block += t
        n += 1
        if n == _BLOCK:
            total += block
            block = mpf(0)
            n = 0
    return total + block


@lru_cache(maxsize=8192)
def _log_factorial_cached(m: int, wp: int):
    with mp.workprec(wp):
        if m <= _DIRECT_FACTORIAL_LIMIT:
            return _blocked_sum(mp.log(j) for j in range(2, m + 1))
        # Stirling with the Bernoulli correction series; the remainder is
        # smaller than the first omitted term, which we drive below target.
        x = mpf(m)
        acc = (x + mpf(1) / 2) * mp.log(x) - x + mp.log(2 * mp.pi) / 2
        eps = abs(acc) * mpf(2) ** (-wp)
        xpow = x
        x2 = x * x
        j = 1
        while True:
            b = _bernoulli_2j(2 * j)
            term = mpf(b.numerator) / b.denominator / ((2 * j) * (2 * j - 1) * xpow)
            if abs(term) < eps:
                break
            acc += term
            xpow *= x2
            j += 1
            if j > 200:
                raise NoConvergence("Stirling series failed to reach target")
        return acc


@lru_cache(maxsize=512)
def _bernoulli_2j(m: int) -> Fraction:
    from .qseries import _bernoulli

    return _bernoulli(m)


def log_factorial(m: int, prec: int | None = None) -> LogReal:
    """m! as a LogReal; direct log summation for m <= 1e4, Stirling beyond."""
    if m < 0:
        raise DomainError("factorial of a negative integer")
    wp = (prec or mp.prec) + _GUARD
    if m <= 1:
        return LogReal.one()
    logmag = _log_factorial_cached(m, wp)
    with mp.workprec(prec or mp.prec):
        return LogReal(1, +logmag)


def log_factorial_stirling(m: int, prec: int | None = None) -> LogReal:
    """Stirling-path evaluation regardless of size (dual-path oracle)."""
    if m <= _DIRECT_FACTORIAL_LIMIT:
        wp = (prec or mp.prec) + _GUARD
        with mp.workprec(wp):
            if m <= 1:
                return LogReal.one()
            x = mpf(m)
            acc = (x + mpf(1) / 2) * mp.log(x) - x + mp.log(2 * mp.pi) / 2
            eps = abs(acc) * mpf(2) ** (-wp)
            xpow = x
            x2 = x * x
            j = 1
            prev_abs = None
            while True:
                b = _bernoulli_2j(2 * j)
                term = (
                    mpf(b.numerator) / b.denominator / ((2 * j) * (2 * j - 1) * xpow)
                )
                if abs(term) < eps or j > 300:
                    break
                if prev_abs is not None and abs(term) > prev_abs:
                    break  # asymptotic series turned; accuracy cap reached
                prev_abs = abs(term)
                acc += term
                xpow *= x2
                j += 1
        with mp.workprec(prec or mp.prec):
            return LogReal(1, +acc)
    return log_factorial(m, prec)


def _log_q_core(s: int, x, wp: int) -> LogReal:
    """log-space Q(s, x); exact finite sum, outward from the peak term."""
    with mp.workprec(wp):
        x = mpf(x)
        if x == 0:
            return LogReal.one()
        mstar = min(s - 1, int(mp.floor(x)))
        logx = mp.log(x)
        log_tstar = -x + mstar * logx - _log_factorial_cached(mstar, wp)
        eps = mpf(2) ** (-(wp - 8))

        def upward():
            u = mpf(1)
            m = mstar
            while m + 1 <= s - 1:
                u = u * x / (m + 1)
                m += 1
                yield u
                r = x / (m + 1)
                if r < 1 and u * r / (1 - r) < eps:
                    break

        def downward():
            v = mpf(1)
            m = mstar
            while m >= 1:
                v = v * m / x
                m -= 1
                yield v
                r = m / x
                if r < 1 and v * r / (1 - r) < eps:
                    break

        acc = 1 + _blocked_sum(upward()) + _blocked_sum(downward())
        return LogReal(1, log_tstar + mp.log(acc))


def _p_tail_core(s: int, x, wp: int):
    """Lower regularized P(s, x) = 1 - Q(s, x), cancellation-free for x < s."""
    with mp.workprec(wp):
        x = mpf(x)
        if x == 0:
            return mpf(0)
        if x >= s:
            q = mp.exp(_log_q_core(s, x, wp).logmag)
            return 1 - q
        # e^(-x) sum_{m >= s} x^m / m!; ratios x/(m+1) < 1 throughout.
        log_ts = -x + s * mp.log(x) - _log_factorial_cached(s, wp)
        eps = mpf(2) ** (-(wp - 8))

        def tail_terms():
            u = mpf(1)
            m = s
            while True:
                u = u * x / (m + 1)
                m += 1
                yield u
                r = x / (m + 1)
                if u * r / (1 - r) < eps:
                    break

        acc = 1 + _blocked_sum(tail_terms())
        return mp.exp(log_ts + mp.log(acc))


@dataclass(frozen=True)
class QEval:
    """Plain and log-space views of one Q(s, x) evaluation."""

    value: object
    log_value: LogReal
    underflow: bool


def _check_q_args(s, x):
    if not isinstance(s, int) or s < 1:
        raise DomainError("shape s must be an integer >= 1")
    if mpf(x) < 0:
        raise DomainError("argument x must be nonnegative")


def log_reg_inc_gamma_q(s: int, x, prec: int | None = None) -> LogReal:
    """Q(s, x) as a LogReal; never underflows."""
    _check_q_args(s, x)
    prec = prec or mp.prec
    res = _log_q_core(s, mpf(x), prec + _GUARD)
    with mp.workprec(prec):
        return LogReal(1, +res.logmag)


def reg_inc_gamma_q_ex(s: int, x, prec: int | None = None) -> QEval:
    """Q(s, x) with the underflow-to-zero policy made explicit."""
    prec = prec or mp.prec
    lv = log_reg_inc_gamma_q(s, x, prec)
    threshold = -mpf(UNDERFLOW_LOG2_FACTOR) * prec * mp.log(2)
    if lv.logmag < threshold:
        return QEval(mpf(0), lv, True)
    with mp.workprec(prec):
        return QEval(mp.exp(lv.logmag), lv, False)


def reg_inc_gamma_q(s: int, x, prec: int | None = None):
    """Plain value of Q(s, x) in [0, 1]; deep underflow returns exact 0."""
    return reg_inc_gamma_q_ex(s, x, prec).value


def reg_inc_gamma_p(s: int, x, prec: int | None = None):
    """Lower regularized P(s, x) = 1 - Q(s, x)."""
    _check_q_args(s, x)
    prec = prec or mp.prec
    res = _p_tail_core(s, mpf(x), prec + _GUARD)
    with mp.workprec(prec):
        return +res


def gamma_transition_gap(k: int, delta, prec: int | None = None):
    """1 - Q(k-1, k - k^(1/2+delta)), the lower-tail mass at the cut.

    Computed as the tail series directly so no cancellation against 1
    occurs; decays like k^(-delta) as k grows.
    """
    if not isinstance(k, int) or k < 4:
        raise DomainError("k must be an integer >= 4")
    prec = prec or mp.prec
    wp = prec + _GUARD
    with mp.workprec(wp):
        delta = mpf(delta)
        if not 0 < delta < mpf(1) / 2:
            raise DomainError("delta must lie in (0, 1/2)")
        cut = mpf(k) ** (mpf(1) / 2 + delta)
        x = mpf(k) - cut
        if x <= 0:
            raise DomainError("k^(1/2+delta) >= k leaves an empty bulk")
        res = _p_tail_core(k - 1, x, wp)
    with mp.workprec(prec):
        return +res


def reg_inc_gamma_q_cf(s: int, x, prec: int | None = None):
    """Continued-fraction evaluation of Q(s, x); cross-check oracle only.

    Uses the classical upper fraction for x >= s + 1 and the lower one
    otherwise, both via the modified Lentz iteration.
    """
    _check_q_args(s, x)
    prec = prec or mp.prec
    wp = prec + _GUARD
    with mp.workprec(wp):
        x = mpf(x)
        if x == 0:
            result = mpf(1)
        elif x >= s + 1:
            h = _lentz_upper(s, x, wp)
            logq = -x + s * mp.log(x) - _log_factorial_cached(s - 1, wp)
            result = mp.exp(logq) * h
        else:
            h = _lentz_lower(s, x, wp)
            logp = -x + s * mp.log(x) - _log_factorial_cached(s - 1, wp)
            result = 1 - mp.exp(logp) * h
    with mp.workprec(prec):
        return +result


def _lentz_upper(s: int, x, wp: int):
    tiny = mpf(2) ** (-wp * 4)
    eps = mpf(2) ** (-(wp - 4))
    b = x + 1 - s
    c = 1 / tiny
    d = 1 / b if b != 0 else 1 / tiny
    h = d
    for i in range(1, 1_000_000):
        an = -i * (i - s)
        b += 2
        d = an * d + b
        if d == 0:
            d = tiny
        c = b + an / c
        if c == 0:
            c = tiny
        d = 1 / d
        delta = d * c
        h *= delta
        if abs(delta - 1) < eps:
            return h
    raise NoConvergence("upper continued fraction stalled")


def _lentz_lower(s: int, x, wp: int):
    # gamma(s, x) = x^s e^(-x) * CF with partial denominators s, s+1, ...
    # and numerators alternating -(s+j-1) x and j x.
    tiny = mpf(2) ** (-wp * 4)
    eps = mpf(2) ** (-(wp - 4))
    b = mpf(s)
    c = 1 / tiny
    d = 1 / b
    h = d
    for i in range(1, 4_000_000):
        if i % 2 == 1:
            an = -((s + (i - 1) // 2) * x)
        else:
            an = (i // 2) * x
        b += 1
        d = an * d + b
        if d == 0:
            d = tiny
        c = b + an / c
        if c == 0:
            c = tiny
        d = 1 / d
        delta = d * c
        h *= delta
        if abs(delta - 1) < eps:
            return h
    raise NoConvergence("lower continued fraction stalled")


def exp_poly_tail_bound(big_k: int, alpha, kstart: int, prec: int | None = None) -> LogReal:
    """Certified upper bound for sum_{n > kstart} n^K exp(-alpha n).

    max(a(k+1)/a(k), 1) times the closed-form integral
    Gamma(K+1, alpha*k) / alpha^(K+1); always at least the true tail for
    this term shape (ratios a(n+1)/a(n) decrease, single interior peak).
    """
    if big_k < 0:
        raise DomainError("polynomial degree must be nonnegative")
    if kstart < 1:
        raise DomainError("tail start must be >= 1")
    prec = prec or mp.prec
    wp = prec + _GUARD
    with mp.workprec(wp):
        alpha = mpf(alpha)
        if alpha <= 0:
            raise DomainError("decay rate alpha must be positive")
        log_ratio = big_k * mp.log(mpf(kstart + 1) / kstart) - alpha
        log_factor = log_ratio if log_ratio > 0 else mpf(0)
        logq = _log_q_core(big_k + 1, alpha * kstart, wp).logmag
        log_integral = (
            _log_factorial_cached(big_k, wp) + logq - (big_k + 1) * mp.log(alpha)
        )
        total = log_factor + log_integral
    with mp.workprec(prec):
        return LogReal(1, +total)


@dataclass(frozen=True)
class TruncationCertificate:
    """Certified index N* with ln-bound on sum_{n > N*} lam(n)^2 Q(k-1, 4 pi n T)."""

    weight: int
    t: object
    n_star: int
    tail_log: float
    target_log: float


# Certificates are computed at this fixed precision so the chosen index
# never depends on the caller's working precision.
_CERT_PREC = 128
_TRUNCATION_CAP = 10_000_000


def series_truncation_index(
    k: int, t, eps_log: float, cap: int = _TRUNCATION_CAP
) -> TruncationCertificate:
    """Smallest doubling-search index whose certified tail is below target.

    Majorizes lam(n)^2 by 3n (the divisor bound tau(n)^2 <= 3n) and
    Q(k-1, x) by (k-1) x^(k-2) e^(-x) / (k-2)!, valid past the peak term;
    the remaining exponential-polynomial tail gets the closed-form bound.
    """
    with mp.workprec(_CERT_PREC + _GUARD):
        t = mpf(t)
        if t <= 0:
            raise DomainError("strip height T must be positive")
        alpha = 4 * mp.pi * t
        n = max(int(mp.ceil(k / (2 * mp.pi * t))), 4)
        prefix_log = (
            mp.log(3)
            + mp.log(k - 1)
            + (k - 2) * mp.log(alpha)
            - _log_factorial_cached(k - 2, _CERT_PREC + _GUARD)
        )
        while True:
            bound = exp_poly_tail_bound(k - 1, alpha, n, _CERT_PREC)
            tail_log = float(prefix_log + bound.logmag)
            if tail_log <= eps_log:
                return TruncationCertificate(k, t, n, tail_log, float(eps_log))
            n *= 2
            if n > cap:
                raise NoConvergence(
                    f"no certified truncation below {cap} for k={k}, T={t}"
                )
