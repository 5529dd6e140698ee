"""LogReal scalar semantics and the sign-split accumulator."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from mpmath import mp, mpf

from quelab.errors import RangeOverflow
from quelab.logreal import LogReal, SignSplitSum

finite = st.floats(
    min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False
).filter(lambda x: x == 0 or abs(x) > 1e-6)


class TestLogReal:
    def test_roundtrip(self):
        # relative error of exp(log(v)) grows with |log v| * 2^-prec
        for v in (3.5, -2.25, 0.0, 1e-300):
            x = LogReal.from_mpf(mpf(v))
            assert abs(x.to_mpf() - mpf(v)) <= abs(mpf(v)) * mpf(2) ** -240

    def test_extreme_magnitudes_survive(self):
        big = LogReal.from_log(mpf(50000))
        small = LogReal.from_log(mpf(-50000))
        prod = big * small
        assert abs(prod.to_mpf() - 1) < mpf(2) ** -200

    @given(finite, finite)
    @settings(max_examples=100, deadline=None)
    def test_mul_matches_mpf(self, a, b):
        x = LogReal.from_mpf(mpf(a)) * LogReal.from_mpf(mpf(b))
        ref = mpf(a) * mpf(b)
        assert abs(x.to_mpf() - ref) <= abs(ref) * mpf(2) ** -200

    @given(finite, finite)
    @settings(max_examples=100, deadline=None)
    def test_add_matches_mpf(self, a, b):
        x = LogReal.from_mpf(mpf(a)) + LogReal.from_mpf(mpf(b))
        ref = mpf(a) + mpf(b)
        if ref == 0:
            assert x.sign == 0
        else:
            assert abs(x.to_mpf() - ref) <= abs(ref) * mpf(2) ** -180

    @given(finite, finite)
    @settings(max_examples=60, deadline=None)
    def test_add_commutes_bit_for_bit(self, a, b):
        x = LogReal.from_mpf(mpf(a))
        y = LogReal.from_mpf(mpf(b))
        left, right = x + y, y + x
        assert left.sign == right.sign
        if left.sign:
            assert left.logmag == right.logmag

    @given(finite, finite, finite)
    @settings(max_examples=60, deadline=None)
    def test_add_associative_to_precision(self, a, b, c):
        x, y, z = (LogReal.from_mpf(mpf(v)) for v in (a, b, c))
        lhs = (x + y) + z
        rhs = x + (y + z)
        ref = mpf(a) + mpf(b) + mpf(c)
        scale = max(abs(mpf(a)), abs(mpf(b)), abs(mpf(c)), mpf(1e-300))
        assert abs(lhs.to_mpf() - rhs.to_mpf()) <= scale * mpf(2) ** -180
        assert abs(lhs.to_mpf() - ref) <= scale * mpf(2) ** -180

    def test_exact_cancellation_gives_zero(self):
        x = LogReal.from_mpf(mpf("2.375"))
        assert (x + (-x)).sign == 0

    def test_division_and_power(self):
        x = LogReal.from_mpf(mpf(3))
        assert abs((x**4).to_mpf() - 81) < mpf(2) ** -200 * 81
        assert abs((x / x).to_mpf() - 1) < mpf(2) ** -200

    def test_compare_total_order(self):
        vals = [-5.0, -0.5, 0.0, 0.25, 7.0]
        lrs = [LogReal.from_mpf(mpf(v)) for v in vals]
        for i, a in enumerate(lrs):
            for j, b in enumerate(lrs):
                assert (a.compare(b) < 0) == (vals[i] < vals[j])

    def test_to_float_overflow_raises(self):
        with pytest.raises(RangeOverflow):
            LogReal.from_log(mpf(1000)).to_float()
        assert LogReal.from_log(mpf(10)).to_float() == pytest.approx(22026.465794806718)

    def test_zero_division_guard(self):
        with pytest.raises(ZeroDivisionError):
            LogReal.one() / LogReal.zero()


class TestSignSplitSum:
    def test_matches_direct_sum(self):
        vals = [3.0, -1.5, 0.25, -0.125, 10.0, -12.0]
        acc = SignSplitSum()
        for v in vals:
            acc.add(LogReal.from_mpf(mpf(v)))
        assert abs(acc.total().to_mpf() - sum(map(mpf, vals))) < mpf(2) ** -180
        assert abs(acc.positive.to_mpf() - mpf(13.25)) < mpf(2) ** -180
        assert abs(acc.negative.to_mpf() - mpf(13.625)) < mpf(2) ** -180

    def test_cancellation_is_visible_not_hidden(self):
        acc = SignSplitSum()
        acc.add(LogReal.from_mpf(mpf(1)))
        acc.add(LogReal.from_mpf(mpf(-1)))
        assert acc.total().sign == 0
        assert acc.positive.sign == 1 and acc.negative.sign == 1
