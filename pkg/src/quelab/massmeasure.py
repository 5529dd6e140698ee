"""Mass measures of Hecke eigenforms over rectangles and Siegel domains.

The probability measure attached to an eigenform f of weight k is

    mu(R) = (1 / ||f||^2) Int_R y^k |f(z)|^2 dx dy / y^2.

For x-periodic regions every integral collapses to coefficient sums
against regularized incomplete-gamma kernels:

  * strip above T, full width:   I(T) = (1/||f||^2) (k-2)!/(4 pi)^(k-1)
                                        sum lam(n)^2 Q(k-1, 4 pi n T),
  * rectangle (a,b) x (T1,T2):   double sum over (n, m) with the exact
    x-factor (b-a or a sine difference) and the closed-form y-integral
    (k-2)! [Q(k-1, 2 pi (n+m) T1) - Q(k-1, 2 pi (n+m) T2)] / (2 pi (n+m))^(k-1).

The Petersson norm itself combines 2-D quadrature below a split height Y
with the exact strip formula above it.  All double sums run in LogReal
with sign-split accumulators and a certified off-diagonal band limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from mpmath import mp, mpf

from .eigenforms import Eigenform, divisor_counts
from .errors import (
    AllZeroCoeffs,
    DomainError,
    InsufficientCoeffs,
    NegativeMass,
    WeightMismatch,
)
from .logreal import LogReal, SignSplitSum
from .numfmt import mpf_to_decimal
from .quadrature import slab_norm_quadrature
from .specfun import (
    UNDERFLOW_LOG2_FACTOR,
    _log_factorial_cached,
    _log_q_core,
    _p_tail_core,
    series_truncation_index,
)

_GUARD = 48
# ln-target for certified series tails of sum lam(n)^2 Q(k-1, 4 pi n T).
DEFAULT_TAIL_LOG = -140 * math.log(2)
# Certified bound on the dropped off-diagonal band, relative to the
# absolute diagonal scale.
BAND_TOL_LOG2 = -110


@dataclass(frozen=True)
class Rectangle:
    """Open box (a, b) x (t1, t2) in the upper half plane; t2 may be inf."""

    a: object
    b: object
    t1: object
    t2: object = mp.inf

    def __post_init__(self):
        a, b, t1, t2 = mpf(self.a), mpf(self.b), mpf(self.t1), mpf(self.t2)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "t1", t1)
        object.__setattr__(self, "t2", t2)
        if not a < b:
            raise DomainError("rectangle needs a < b")
        if not (0 < t1 < t2):
            raise DomainError("rectangle needs 0 < t1 < t2")
        if b - a > 1 + mpf(2) ** -48:
            raise DomainError("rectangle wider than one x-period")

    @property
    def width(self):
        return self.b - self.a


@dataclass(frozen=True)
class SiegelDomain:
    """Cusp neighborhood a < x < b, y > T with [a, b] inside one period."""

    a: object
    b: object
    t: object

    def __post_init__(self):
        a, b, t = mpf(self.a), mpf(self.b), mpf(self.t)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "t", t)
        if not (-mpf(1) / 2 <= a < b <= mpf(1) / 2):
            raise DomainError("Siegel domain needs -1/2 <= a < b <= 1/2")
        if t <= 0:
            raise DomainError("Siegel domain needs T > 0")

    def as_rectangle(self) -> Rectangle:
        return Rectangle(self.a, self.b, self.t, mp.inf)


@dataclass(frozen=True)
class Sym2Value:
    """Symmetric-square value at 1 in both normalizations.

    l_value follows the norm bridge ||f||^2 = L * (2/pi) (k-1)!/(4 pi)^k;
    residue = l_value / zeta(2) is the Dirichlet-series residue of
    sum lam(n)^2 n^(-s) at s = 1.  Downstream formulas use l_value.
    """

    l_value: object
    residue: object


@dataclass(frozen=True)
class IEntry:
    t: object
    value: object
    raw_value: object
    n_star: int
    tail_log: float


@dataclass
class MassProfile:
    """Per-form ledger: norm, symmetric-square value, strip masses."""

    weight: int
    index: int
    log_norm_sq: LogReal = None
    sym2: Sym2Value = None
    norm_meta: dict = field(default_factory=dict)
    i_values: dict = field(default_factory=dict)

    def require_norm(self):
        if self.log_norm_sq is None:
            raise DomainError("profile has no Petersson norm yet")


@dataclass(frozen=True)
class NormDetail:
    log_norm_sq: LogReal
    quad_value: object
    strip_log: LogReal
    n_star: int
    quad_error: object
    panels: int
    evaluations: int


def _quad_required_coeffs(k: int, arc_y: float = math.sqrt(3) / 2) -> int:
    """Series length needed at the lowest quadrature row (float heuristic,
    with the certified cut applied again term-by-term at evaluation)."""
    half = (k - 1) / 2
    c = 2 * math.pi * arc_y
    n_peak = max(1, int(half / c) + 1)
    peak = half * math.log(n_peak) - c * n_peak
    target = peak - (96 + 24) * math.log(2)
    n = n_peak
    while half * math.log(n + 1) + 0.5 * math.log(3 * (n + 1)) - c * (n + 1) > target:
        n += 1
    return n + 4


def _strip_sum_log(form: Eigenform, t, n_use: int, wp: int):
    """ln of sum_{n <= n_use} lam(n)^2 Q(k-1, 4 pi n T); terms are positive."""
    k = form.weight
    with mp.workprec(wp):
        t = mpf(t)
        total = mpf(0)
        for n in range(1, n_use + 1):
            lam = form.lam[n - 1]
            if lam == 0:
                continue
            lq = _log_q_core(k - 1, 4 * mp.pi * n * t, wp)
            total += lam * lam * mp.exp(lq.logmag)
        if total <= 0:
            raise AssertionError("strip sum vanished; coefficients corrupt")
        return mp.log(total)


def petersson_norm_sq(
    form: Eigenform, y_split=2.0, quad_tol: float = 1e-8
) -> LogReal:
    """||f||^2 as quadrature below y_split plus the exact strip above it."""
    return petersson_norm_sq_detail(form, y_split, quad_tol).log_norm_sq


def petersson_norm_sq_detail(
    form: Eigenform, y_split=2.0, quad_tol: float = 1e-8
) -> NormDetail:
    k = form.weight
    prec = form.precision_bits
    wp = prec + _GUARD
    if mpf(y_split) < 1:
        raise DomainError("split height must be >= 1")
    if not 0 < quad_tol < 1e-2:
        raise DomainError("quad_tol out of range")
    need_quad = _quad_required_coeffs(k)
    if form.ncoeffs < need_quad:
        raise InsufficientCoeffs(
            f"quadrature needs {need_quad} coefficients, have {form.ncoeffs}"
        )
    with mp.workprec(wp):
        y_split = mpf(y_split)
        # Strip tail target: quad_tol/8 relative to the leading strip term.
        first_log = float(_log_q_core(k - 1, 4 * mp.pi * y_split, wp).logmag)
        target = min(first_log + math.log(quad_tol / 8), DEFAULT_TAIL_LOG)
        cert = series_truncation_index(k, y_split, target)
        if form.ncoeffs < cert.n_star:
            raise InsufficientCoeffs(
                f"strip tail needs {cert.n_star} coefficients, have {form.ncoeffs}"
            )
        half = mpf(k - 1) / 2
        a_coeffs = [
            form.lam[n - 1] * mp.exp(half * mp.log(n))
            for n in range(1, form.ncoeffs + 1)
        ]
        quad = slab_norm_quadrature(k, a_coeffs, y_split, quad_tol / 4, prec)
        strip_sum = _strip_sum_log(form, y_split, min(form.ncoeffs, cert.n_star), wp)
        log_strip = (
            strip_sum
            + _log_factorial_cached(k - 2, wp)
            - (k - 1) * mp.log(4 * mp.pi)
        )
        total = LogReal.from_mpf(quad.value) + LogReal(1, log_strip)
    with mp.workprec(prec):
        return NormDetail(
            LogReal(1, +total.logmag),
            quad.value,
            LogReal(1, +log_strip),
            cert.n_star,
            quad.error_estimate,
            quad.panels,
            quad.evaluations,
        )


def sym2_l_value(form: Eigenform, norm: LogReal) -> Sym2Value:
    """Invert the norm bridge: L = ||f||^2 (pi/2) (4 pi)^k / (k-1)!."""
    k = form.weight
    prec = form.precision_bits
    with mp.workprec(prec + _GUARD):
        log_l = (
            norm.logmag
            + mp.log(mp.pi / 2)
            + k * mp.log(4 * mp.pi)
            - _log_factorial_cached(k - 1, prec + _GUARD)
        )
        l_val = mp.exp(log_l)
        residue = l_val / (mp.pi**2 / 6)
    with mp.workprec(prec):
        return Sym2Value(+l_val, +residue)


def ensure_profile_norm(
    form: Eigenform, profile: MassProfile, y_split=2.0, quad_tol: float = 1e-8
) -> MassProfile:
    if profile.log_norm_sq is None:
        detail = petersson_norm_sq_detail(form, y_split, quad_tol)
        profile.log_norm_sq = detail.log_norm_sq
        profile.sym2 = sym2_l_value(form, detail.log_norm_sq)
        profile.norm_meta = {
            "y_split": mpf_to_decimal(mpf(y_split), 17),
            "quad_tol": repr(quad_tol),
            "n_star": detail.n_star,
        }
    return profile


def _t_key(t) -> str:
    return mpf_to_decimal(mpf(t), 17)


def vertical_mass(form: Eigenform, t, profile: MassProfile):
    """I_k(T): full-width strip mass above T; reduced and raw paths agree."""
    profile.require_norm()
    k = form.weight
    prec = form.precision_bits
    wp = prec + _GUARD
    key = _t_key(t)
    if key in profile.i_values:
        return profile.i_values[key].value
    cert = series_truncation_index(k, t, DEFAULT_TAIL_LOG)
    if form.ncoeffs < cert.n_star:
        raise InsufficientCoeffs(
            f"I(T) at T={t} needs {cert.n_star} coefficients, have {form.ncoeffs}"
        )
    with mp.workprec(wp):
        s_log = _strip_sum_log(form, t, cert.n_star, wp)
        log_l = mp.log(profile.sym2.l_value)
        reduced = mp.exp(
            s_log + mp.log(2 * mp.pi**2) - mp.log(k - 1) - log_l
        )
        raw = mp.exp(
            s_log
            + _log_factorial_cached(k - 2, wp)
            - (k - 1) * mp.log(4 * mp.pi)
            - profile.log_norm_sq.logmag
        )
        agree_tol = mp.exp(mpf(cert.tail_log) + mp.log(2 * mp.pi**2) - mp.log(k - 1) - log_l)
        if abs(reduced - raw) > agree_tol + abs(reduced) * mpf(2) ** (-100):
            raise AssertionError("strip mass paths disagree beyond certificate")
    with mp.workprec(prec):
        entry = IEntry(mpf(t), +reduced, +raw, cert.n_star, cert.tail_log)
    profile.i_values[key] = entry
    return entry.value


@dataclass(frozen=True)
class SplitMass:
    main: object
    error: object
    cut: int
    n_star: int


def main_error_split(form: Eigenform, t, delta, profile: MassProfile) -> SplitMass:
    """Split I(T) at n = (k + k^(1/2+delta)) / (4 pi T) into main + error."""
    profile.require_norm()
    k = form.weight
    prec = form.precision_bits
    wp = prec + _GUARD
    cert = series_truncation_index(k, t, DEFAULT_TAIL_LOG)
    if form.ncoeffs < cert.n_star:
        raise InsufficientCoeffs("not enough coefficients for the split")
    with mp.workprec(wp):
        t_ = mpf(t)
        delta = mpf(delta)
        if not 0 < delta < mpf(1) / 2:
            raise DomainError("delta must lie in (0, 1/2)")
        cut_real = (k + mpf(k) ** (mpf(1) / 2 + delta)) / (4 * mp.pi * t_)
        cut = int(mp.floor(cut_real))
        pref_log = (
            mp.log(2 * mp.pi**2) - mp.log(k - 1) - mp.log(profile.sym2.l_value)
        )
        main_sum = mpf(0)
        err_sum = mpf(0)
        for n in range(1, cert.n_star + 1):
            lam = form.lam[n - 1]
            if lam == 0:
                continue
            term = lam * lam * mp.exp(_log_q_core(k - 1, 4 * mp.pi * n * t_, wp).logmag)
            if n <= cut:
                main_sum += term
            else:
                err_sum += term
        main = main_sum * mp.exp(pref_log)
        err = err_sum * mp.exp(pref_log)
    with mp.workprec(prec):
        return SplitMass(+main, +err, cut, cert.n_star)


def _delta_q_log(k: int, s: int, t1, t2, wp: int):
    """ln[Q(k-1, 2 pi s t1) - Q(k-1, 2 pi s t2)], branch-chosen to avoid
    cancellation; returns None for a zero difference."""
    with mp.workprec(wp):
        x1 = 2 * mp.pi * s * mpf(t1)
        if t2 == mp.inf:
            return _log_q_core(k - 1, x1, wp).logmag
        x2 = 2 * mp.pi * s * mpf(t2)
        if x2 <= k - 1:
            d = _p_tail_core(k - 1, x2, wp) - _p_tail_core(k - 1, x1, wp)
        else:
            d = mp.exp(_log_q_core(k - 1, x1, wp).logmag) - mp.exp(
                _log_q_core(k - 1, x2, wp).logmag
            )
        if d <= 0:
            return None
        return mp.log(d)


@dataclass(frozen=True)
class PairMassNumerator:
    total: LogReal
    abs_diag: LogReal
    band_limit: int
    band_remainder_log: float
    n_star: int


def _pair_mass_numerator(
    f1: Eigenform, f2: Eigenform, rect: Rectangle, wp: int
) -> PairMassNumerator:
    """Shared double-sum skeleton of every rectangle mass.

    Numerator of <1_R y^(k/2) f1, y^(k/2) f2>: diagonal terms carry the
    window width, off-diagonal pairs the sine difference factor, both
    against the closed-form y-integral.  Off-diagonal bands beyond the
    certified limit are majorized by tau(n) tau(m) / (pi |n-m|).
    """
    k = f1.weight
    cert = series_truncation_index(k, rect.t1, DEFAULT_TAIL_LOG)
    n_max = min(f1.ncoeffs, f2.ncoeffs)
    if n_max < cert.n_star:
        raise InsufficientCoeffs(
            f"rectangle mass needs {cert.n_star} coefficients, have {n_max}"
        )
    nn = cert.n_star
    with mp.workprec(wp):
        lf = _log_factorial_cached(k - 2, wp)
        yint = [None] * (2 * nn + 1)
        for s in range(2, 2 * nn + 1):
            dq = _delta_q_log(k, s, rect.t1, rect.t2, wp)
            if dq is None:
                yint[s] = None
            else:
                yint[s] = lf + dq - (k - 1) * mp.log(2 * mp.pi * s)
        logn = [mpf(0)] * (nn + 1)
        for n in range(1, nn + 1):
            logn[n] = mp.log(n)
        half = mpf(k - 1) / 2

        lam1 = [f1.lam[i] for i in range(nn)]
        lam2 = [f2.lam[i] for i in range(nn)]

        acc = SignSplitSum()
        abs_diag = LogReal.zero()
        width_log = mp.log(rect.width)
        for n in range(1, nn + 1):
            if yint[2 * n] is None:
                continue
            c = lam1[n - 1] * lam2[n - 1]
            if c == 0:
                continue
            mag = mp.log(abs(c)) + (k - 1) * logn[n] + width_log + yint[2 * n]
            acc.add(LogReal(1 if c > 0 else -1, mag))
            abs_diag = abs_diag + LogReal(1, mag)

        def x_factor_log(l: int):
            v = (mp.sin(2 * mp.pi * l * rect.b) - mp.sin(2 * mp.pi * l * rect.a)) / (
                2 * mp.pi * l
            )
            if v == 0:
                return None, 0
            return mp.log(abs(v)), (1 if v > 0 else -1)

        def add_band(l: int):
            xl, xsign = x_factor_log(l)
            if xl is None:
                return
            for n in range(1, nn - l + 1):
                m = n + l
                if yint[n + m] is None:
                    continue
                c = lam1[n - 1] * lam2[m - 1] + lam1[m - 1] * lam2[n - 1]
                if c == 0:
                    continue
                mag = (
                    mp.log(abs(c))
                    + half * (logn[n] + logn[m])
                    + xl
                    + yint[n + m]
                )
                sign = (1 if c > 0 else -1) * xsign
                acc.add(LogReal(sign, mag))

        tau = divisor_counts(nn)

        def band_remainder(l_from: int) -> LogReal:
            rem = LogReal.zero()
            for l in range(l_from, nn):
                inv = -mp.log(mp.pi * l)
                for n in range(1, nn - l + 1):
                    m = n + l
                    if yint[n + m] is None:
                        continue
                    mag = (
                        mp.log(tau[n] * tau[m])
                        + half * (logn[n] + logn[m])
                        + inv
                        + yint[n + m]
                    )
                    rem = rem + LogReal(1, mag)
            return rem

        band = max(1, int(math.ceil(math.log(k))))
        for l in range(1, min(band, nn - 1) + 1):
            add_band(l)
        rem_log = float("-inf")
        while band < nn - 1:
            rem = band_remainder(band + 1)
            scale = abs_diag if not abs_diag.is_zero() else LogReal.one()
            if rem.is_zero() or rem.logmag <= scale.logmag + BAND_TOL_LOG2 * mp.log(2):
                rem_log = float("-inf") if rem.is_zero() else float(rem.logmag)
                break
            new_band = min(2 * band, nn - 1)
            for l in range(band + 1, new_band + 1):
                add_band(l)
            band = new_band
        return PairMassNumerator(acc.total(), abs_diag, band, rem_log, nn)


@dataclass(frozen=True)
class CrossMass:
    raw: LogReal
    normalized: object
    meta: PairMassNumerator


def cross_mass(
    f1: Eigenform,
    f2: Eigenform,
    rect: Rectangle,
    p1: MassProfile,
    p2: MassProfile,
) -> CrossMass:
    """Windowed correlation of two eigenforms of one weight.

    Returns the raw inner-product numerator (LogReal) and the value
    normalized by ||f1|| ||f2||; the diagonal f1 == f2 specialization is
    exactly the rectangle mass.
    """
    if f1.weight != f2.weight:
        raise WeightMismatch(f"weights {f1.weight} != {f2.weight}")
    p1.require_norm()
    p2.require_norm()
    prec = f1.precision_bits
    wp = prec + _GUARD
    num = _pair_mass_numerator(f1, f2, rect, wp)
    with mp.workprec(wp):
        if num.total.is_zero():
            normalized = mpf(0)
        else:
            normalized = num.total.sign * mp.exp(
                num.total.logmag
                - (p1.log_norm_sq.logmag + p2.log_norm_sq.logmag) / 2
            )
    with mp.workprec(prec):
        return CrossMass(num.total, +normalized, num)


def rect_mass(form: Eigenform, rect: Rectangle, profile: MassProfile):
    """mu of a rectangle: diagonal specialization of cross_mass."""
    result = cross_mass(form, form, rect, profile, profile)
    value = result.normalized
    with mp.workprec(form.precision_bits):
        if value < -mpf(2) ** (-90):
            raise NegativeMass(
                f"mu = {mp.nstr(value, 10)} below -2^-90; precision exhausted"
            )
        if rect.t1 >= 1 and value > 1 + mpf(2) ** (-80):
            raise AssertionError("mass above 1 on a region inside one copy")
    return value


@dataclass(frozen=True)
class SiegelMass:
    value: object
    log_mu: LogReal
    bound_log: object
    in_hypothesis: bool
    within_bound: bool
    underflow: bool


def siegel_mass(form: Eigenform, dom: SiegelDomain, profile: MassProfile) -> SiegelMass:
    """mu of a Siegel domain plus the log-space cusp-decay comparison.

    When T >= 4 k ln k the mass must fall below exp(-2 pi T)/(2 pi T);
    the comparison runs entirely in log space because the values
    themselves underflow plain floats by design.
    """
    profile.require_norm()
    prec = form.precision_bits
    result = cross_mass(form, form, dom.as_rectangle(), profile, profile)
    log_mu = result.raw / LogReal(1, profile.log_norm_sq.logmag)
    with mp.workprec(prec + 16):
        t = mpf(dom.t)
        threshold = 4 * form.weight * mp.log(form.weight)
        in_hyp = t >= threshold
        bound_log = -2 * mp.pi * t - mp.log(2 * mp.pi * t)
        if log_mu.sign <= 0:
            within = True
        else:
            within = log_mu.logmag <= bound_log
        underflow = log_mu.sign == 0 or log_mu.logmag < -mpf(
            UNDERFLOW_LOG2_FACTOR
        ) * prec * mp.log(2)
        value = mpf(0) if underflow else log_mu.to_mpf()
    with mp.workprec(prec):
        return SiegelMass(+value, log_mu, +bound_log, in_hyp, bool(within), underflow)


def admissible_mass(coeffs, basis_forms, rect: Rectangle, profiles) -> object:
    """mu for F = sum alpha_i f_i via the orthogonal norm expansion.

    Numerator mixes all cross numerators with alpha_i conj(alpha_l);
    denominator is sum |alpha_i|^2 ||f_i||^2.  The imaginary residue must
    stay below 2^-90 and is then discarded.
    """
    if len(coeffs) != len(basis_forms):
        raise DomainError("one coefficient per eigenform required")
    alphas = [mp.mpc(c) for c in coeffs]
    if all(abs(a) == 0 for a in alphas):
        raise AllZeroCoeffs("admissible combination needs a nonzero coefficient")
    prec = basis_forms[0].precision_bits
    wp = prec + _GUARD
    for p in profiles:
        p.require_norm()
    with mp.workprec(wp):
        numerators = {}
        for i, fi in enumerate(basis_forms):
            for l in range(i, len(basis_forms)):
                num = _pair_mass_numerator(fi, basis_forms[l], rect, wp)
                numerators[(i, l)] = num.total.to_mpf()
        total = mp.mpc(0)
        for i in range(len(basis_forms)):
            for l in range(len(basis_forms)):
                key = (min(i, l), max(i, l))
                total += alphas[i] * mp.conj(alphas[l]) * numerators[key]
        denom = mpf(0)
        for i, p in enumerate(profiles):
            denom += abs(alphas[i]) ** 2 * mp.exp(p.log_norm_sq.logmag)
        mu = total / denom
        if abs(mu.imag) > mpf(2) ** (-90) * max(mpf(1), abs(mu.real)):
            raise AssertionError("imaginary residue beyond tolerance")
        result = mu.real
    with mp.workprec(prec):
        return +result
