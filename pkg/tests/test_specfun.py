"""Special-function layer: incomplete gamma paths, factorials, tail bounds."""

import math

import mpmath
import pytest
from mpmath import mp, mpf

from quelab.errors import DomainError, NoConvergence
from quelab.specfun import (
    exp_poly_tail_bound,
    gamma_transition_gap,
    log_factorial,
    log_factorial_stirling,
    reg_inc_gamma_p,
    reg_inc_gamma_q,
    reg_inc_gamma_q_cf,
    reg_inc_gamma_q_ex,
    series_truncation_index,
)


class TestLogFactorial:
    def test_zero_and_one(self):
        assert log_factorial(0).logmag == 0
        assert log_factorial(1).logmag == 0

    def test_ten_against_exact_integer(self):
        expect = mp.log(3628800)
        assert abs(log_factorial(10).logmag - expect) < mpf(2) ** -250

    def test_dual_path_at_1e5(self):
        direct = log_factorial(100000).logmag  # Stirling branch internally
        stirling = log_factorial_stirling(100000).logmag
        assert abs(direct - stirling) <= abs(direct) * mpf(2) ** -(mp.prec - 10)

    def test_against_mpmath_loggamma(self):
        for m in (5, 117, 9999, 10001, 250000):
            ours = log_factorial(m).logmag
            theirs = mpmath.loggamma(m + 1)
            assert abs(ours - theirs) <= abs(theirs) * mpf(2) ** -240, m

    def test_negative_rejected(self):
        with pytest.raises(DomainError):
            log_factorial(-1)


class TestRegIncGamma:
    def test_x_zero(self):
        assert reg_inc_gamma_q(7, 0) == 1

    def test_shape_one_is_exponential(self):
        for x in (0.5, 3.0, 40.0):
            assert abs(reg_inc_gamma_q(1, mpf(x)) - mp.exp(-mpf(x))) < mpf(2) ** -250

    def test_hand_sum_s3_x2(self):
        # e^-2 (1 + 2 + 2)
        expect = 5 * mp.exp(-2)
        assert abs(reg_inc_gamma_q(3, 2) - expect) < mpf(2) ** -250

    def test_p_plus_q_is_one(self):
        for s, x in ((5, 2.0), (40, 55.0), (101, 99.0)):
            p = reg_inc_gamma_p(s, mpf(x))
            q = reg_inc_gamma_q(s, mpf(x))
            assert abs(p + q - 1) < mpf(2) ** -240

    def test_monotone_in_x(self):
        xs = [mpf(i) / 2 for i in range(1, 60)]
        vals = [reg_inc_gamma_q(12, x) for x in xs]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_monotone_in_s(self):
        vals = [reg_inc_gamma_q(s, mpf(9)) for s in range(2, 40)]
        assert all(a < b for a, b in zip(vals, vals[1:]))

    def test_underflow_policy(self):
        res = reg_inc_gamma_q_ex(5, mpf(10000))
        assert res.underflow
        assert res.value == 0
        assert res.log_value.sign == 1
        assert res.log_value.logmag < -mpf(4) * mp.prec * mp.log(2)

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            reg_inc_gamma_q(0, 1.0)
        with pytest.raises(DomainError):
            reg_inc_gamma_q(3, -1.0)

    def test_continued_fraction_oracle_agrees(self):
        cases = [(3, 2.0), (5, 9.0), (50, 30.0), (1000, 900.0), (1000, 1200.0)]
        for s, x in cases:
            a = reg_inc_gamma_q(s, mpf(x))
            b = reg_inc_gamma_q_cf(s, mpf(x))
            c = mpmath.gammainc(s, mpf(x), mp.inf, regularized=True)
            assert abs(a - b) < mpf(2) ** -200, (s, x)
            assert abs(a - c) < mpf(2) ** -240, (s, x)


class TestGammaTransitionGap:
    def test_reduction_to_small_case(self):
        # lower tail at shape 3, cut 2 equals 1 - 5 e^-2
        expect = 1 - 5 * mp.exp(-2)
        assert abs(reg_inc_gamma_p(3, 2) - expect) < mpf(2) ** -250

    def test_decreasing_along_grid(self):
        gaps = [gamma_transition_gap(k, 0.1) for k in (100, 1000, 10000)]
        assert gaps[0] > gaps[1] > gaps[2]

    def test_larger_delta_decays_faster(self):
        assert gamma_transition_gap(1000, 0.49) < gamma_transition_gap(1000, 0.1)

    def test_scaled_gap_bounded(self):
        scaled = []
        for k in (100, 1000, 10000):
            g = gamma_transition_gap(k, 0.1)
            scaled.append(g * mp.exp(mpf("0.1") * mp.log(k)))
        assert max(scaled) <= 4 * scaled[0]

    def test_domain_guard(self):
        with pytest.raises(DomainError):
            gamma_transition_gap(1000, 0.6)  # cut at or past k empties the bulk


def brute_tail(big_k, alpha, kstart, rel=mpf(10) ** -40):
    total = mpf(0)
    n = kstart + 1
    while True:
        term = mp.exp(big_k * mp.log(n) - alpha * n)
        total += term
        if n > big_k / alpha + 10 and term < rel * total:
            return total
        n += 1


class TestExpPolyTailBound:
    def test_geometric_example(self):
        bound = exp_poly_tail_bound(0, 1.0, 5).to_mpf()
        assert abs(bound - mp.exp(-5)) < mpf(2) ** -200
        true = mp.exp(-6) / (1 - mp.exp(-1))
        assert true <= bound

    def test_dominates_brute_force_grid(self):
        for big_k in (0, 2, 10):
            for alpha in (0.1, 0.5, 2.0):
                for kstart in (1, 10, 100):
                    bound = exp_poly_tail_bound(big_k, alpha, kstart).to_mpf()
                    true = brute_tail(big_k, mpf(alpha), kstart)
                    assert true <= bound, (big_k, alpha, kstart)

    def test_tightness_in_decreasing_regime(self):
        # far past the peak the integral-test bound is within 3x
        for big_k, alpha in ((2, 1.0), (5, 0.5)):
            kstart = int(5 * big_k / alpha) + 20
            bound = exp_poly_tail_bound(big_k, alpha, kstart).to_mpf()
            true = brute_tail(big_k, mpf(alpha), kstart)
            assert bound / true <= 3, (big_k, alpha)


class TestSeriesTruncationIndex:
    def test_small_weight_reasonable(self):
        cert = series_truncation_index(12, 1.0, math.log(1e-30))
        assert cert.n_star <= 200
        assert cert.tail_log <= math.log(1e-30)

    def test_floor_respected(self):
        cert = series_truncation_index(120, 1.0, -10.0)
        assert cert.n_star >= math.ceil(120 / (2 * math.pi))

    def test_monotone_in_t(self):
        lo = series_truncation_index(12, 1.0, math.log(1e-30))
        hi = series_truncation_index(12, 100.0, math.log(1e-30))
        assert hi.n_star <= lo.n_star

    def test_no_convergence_cap(self):
        with pytest.raises(NoConvergence):
            series_truncation_index(12, 1.0, -1e9, cap=64)

    def test_deterministic_across_ambient_precision(self):
        old = mp.prec
        try:
            mp.prec = 53
            a = series_truncation_index(36, 1.0, -100.0)
            mp.prec = 512
            b = series_truncation_index(36, 1.0, -100.0)
        finally:
            mp.prec = old
        assert a.n_star == b.n_star
