import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from shadowcorr import DomainError, normal_pdf, q_function, q_inverse
from shadowcorr.gaussian import pdf_array, q_array

import oracles


class TestNormalPdf:
    def test_peak(self):
        assert normal_pdf(0.0) == pytest.approx(0.3989422804014327, rel=1e-15)

    def test_symmetric(self):
        assert normal_pdf(-1.5) == normal_pdf(1.5)

    def test_tail_value(self):
        v = normal_pdf(3.719)
        assert 3.9e-4 < v < 4.0e-4
        assert v == pytest.approx(oracles.PDF_3719, rel=1e-14)

    @pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
    def test_rejects_non_finite(self, bad):
        with pytest.raises(DomainError):
            normal_pdf(bad)


class TestQFunction:
    def test_median(self):
        assert q_function(0.0) == 0.5

    def test_reflection_at_two(self):
        assert q_function(-2.0) == pytest.approx(1.0 - q_function(2.0), abs=1e-16)

    def test_eps_1e4_point(self):
        # quadrature of the density is the oracle here, not erfc
        expected = float(oracles.q_by_quadrature(3.719))
        assert q_function(3.719) == pytest.approx(expected, rel=1e-12)
        assert q_function(3.719) == pytest.approx(1.0e-4, rel=0.01)
        assert expected == pytest.approx(oracles.Q_3719, rel=1e-15)

    def test_relative_accuracy_upper_tail(self):
        xs = np.linspace(0.0, 37.4, 749)
        worst = max(
            abs(q_function(x) - float(oracles.q_mp(x))) / float(oracles.q_mp(x)) for x in xs
        )
        assert worst <= 1e-12

    def test_subnormal_range_is_representation_limited(self):
        # beyond x ~ 37.5 Q(x) is a subnormal double, whose spacing (5e-324)
        # rather than the algorithm bounds the relative error
        for x in np.linspace(37.4, 38.0, 25):
            exact = float(oracles.q_mp(x))
            assert abs(q_function(x) - exact) <= max(1e-12 * exact, 4 * 5e-324)

    def test_absolute_accuracy_lower_half(self):
        xs = np.linspace(-38.0, 0.0, 381)
        worst = max(abs(q_function(x) - float(oracles.q_mp(x))) for x in xs)
        assert worst <= 1e-15

    @given(st.floats(-8, 8), st.floats(-8, 8))
    def test_strictly_decreasing(self, a, b):
        if a == b:
            return
        lo, hi = min(a, b), max(a, b)
        assert q_function(lo) >= q_function(hi)
        if hi - lo > 1e-9:
            assert q_function(lo) > q_function(hi)

    @given(st.floats(-8, 8))
    def test_reflection(self, x):
        assert abs(q_function(x) + q_function(-x) - 1.0) <= 1e-14

    @given(st.floats(1.0, 37.0))
    def test_mills_ratio_bracket(self, x):
        pdf = normal_pdf(x)
        assert pdf * (1.0 / x - 1.0 / x**3) < q_function(x) < pdf / x

    def test_rejects_nan(self):
        with pytest.raises(DomainError):
            q_function(math.nan)

    def test_array_kernels_match_scalar(self):
        xs = np.array([-3.0, 0.0, 1.5, 3.719, 10.0])
        np.testing.assert_allclose(q_array(xs), [q_function(x) for x in xs], rtol=1e-14)
        np.testing.assert_allclose(pdf_array(xs), [normal_pdf(x) for x in xs], rtol=1e-15)


class TestQInverse:
    def test_median(self):
        assert q_inverse(0.5) == 0.0

    def test_eps_1e4(self):
        # bisection on Q over [0, 40] to 1e-12 is the oracle
        expected = oracles.q_inverse_bisection(1e-4, lambda x: float(oracles.q_mp(x)))
        assert q_inverse(1e-4) == pytest.approx(expected, abs=2e-12)
        assert q_inverse(1e-4) == pytest.approx(3.71902, abs=5e-6)
        assert q_inverse(1e-4) == pytest.approx(oracles.BETA_1E4, abs=1e-14)

    def test_roundtrip_point(self):
        assert q_inverse(q_function(1.7)) == pytest.approx(1.7, abs=1e-10)

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5, math.nan])
    def test_domain(self, p):
        with pytest.raises(DomainError):
            q_inverse(p)

    @given(st.floats(-12, math.log10(1 - 1e-12)))
    def test_roundtrip(self, log_p):
        p = 10.0**log_p
        assert abs(q_function(q_inverse(p)) - p) / p <= 1e-10

    @given(st.floats(1e-12, 1 - 1e-12), st.floats(1e-12, 1 - 1e-12))
    def test_decreasing(self, p1, p2):
        if p1 == p2:
            return
        lo, hi = min(p1, p2), max(p1, p2)
        assert q_inverse(lo) >= q_inverse(hi)

    def test_extreme_probabilities(self):
        for p in (1e-300, 5e-324, 1 - 1e-16):
            x = q_inverse(p)
            assert math.isfinite(x) and -40 <= x <= 40
