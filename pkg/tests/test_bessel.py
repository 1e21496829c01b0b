"""
Unit tests for the Bessel layer.

Values are checked against mpmath at 30 digits and against the closed forms
available at nu = 1/2.
"""

import math

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.special.bessel import (
    Order,
    bessel_i,
    bessel_i_scaled,
    bessel_j,
    check_interlacing,
    configure_roots,
    cross_product,
    derivative_i,
    derivative_j,
    mcmahon_estimate,
    power_scaled_j,
    ratio_i,
    ratio_j,
    root_config,
    root_h,
    zero_j,
    zero_table,
    zeros_any_order,
)
from src.config.settings import RootConfig
from src.utils.errors import DomainError, PoleError, RangeError

mpmath.mp.dps = 30


class TestOrder:
    """Tests for Order."""

    def test_dimension_round_trip(self):
        """Test nu = N/2 - 1 both ways."""
        assert Order.from_dimension(3.0).nu == 0.5
        assert Order(0.25).dimension == 2.5

    @pytest.mark.parametrize("nu", [-0.6, 1.5, float("nan")])
    def test_out_of_range(self, nu):
        """Test that orders outside [-1/2, 1] are rejected."""
        with pytest.raises(DomainError):
            Order(nu)


class TestBesselJ:
    """Tests for bessel_j."""

    @pytest.mark.parametrize("nu", [-0.5, 0.0, 0.3, 0.5, 1.0])
    @pytest.mark.parametrize("s", [0.5, 2.0, 7.3, 25.0])
    def test_against_mpmath(self, nu, s):
        """Test the value within its own error estimate."""
        result = bessel_j(nu, s)
        exact = float(mpmath.besselj(nu, s))

        assert abs(result.value - exact) <= result.abs_err_estimate

    def test_half_order_closed_form(self):
        """Test J_{1/2}(s) = sqrt(2/(pi s)) sin s."""
        for s in (0.1, 1.0, 4.0, 12.0):
            assert bessel_j(0.5, s).value == pytest.approx(math.sqrt(2.0 / (math.pi * s)) * math.sin(s), rel=1e-13)

    def test_origin(self):
        """Test J_0(0) = 1 and J_nu(0) = 0 for nu > 0."""
        assert bessel_j(0, 0.0).value == 1.0
        assert bessel_j(0.5, 0.0).value == 0.0

    def test_negative_order_at_origin(self):
        """Test that J_{-1/2}(0) is out of range."""
        with pytest.raises(RangeError):
            bessel_j(-0.5, 0.0)

    @pytest.mark.parametrize("s", [-1.0, float("inf")])
    def test_bad_argument(self, s):
        """Test negative and infinite arguments."""
        with pytest.raises(DomainError):
            bessel_j(0.0, s)

    def test_derivative(self):
        """Test J'_nu against mpmath."""
        exact = float(mpmath.diff(lambda x: mpmath.besselj(0.3, x), 2.5))
        assert derivative_j(0.3, 2.5) == pytest.approx(exact, rel=1e-12)


class TestBesselI:
    """Tests for bessel_i and bessel_i_scaled."""

    @pytest.mark.parametrize("s", [0.5, 5.0, 40.0, 300.0])
    def test_against_mpmath(self, s):
        """Test both the direct and the rescaled branch."""
        exact = float(mpmath.besseli(0.5, s))
        assert bessel_i(0.5, s).value == pytest.approx(exact, rel=1e-13)

    def test_overflow(self):
        """Test that the unscaled value refuses to overflow."""
        with pytest.raises(RangeError):
            bessel_i(0.0, 800.0)

    def test_scaled_is_finite(self):
        """Test e^{-s} I_nu(s) ~ 1/sqrt(2 pi s) for large s."""
        value = bessel_i_scaled(0.5, 800.0).value

        assert value == pytest.approx(1.0 / math.sqrt(2.0 * math.pi * 800.0), rel=1e-3)

    def test_derivative(self):
        """Test I'_nu against mpmath."""
        exact = float(mpmath.diff(lambda x: mpmath.besseli(1.0, x), 3.0))
        assert derivative_i(1.0, 3.0) == pytest.approx(exact, rel=1e-12)


class TestRatios:
    """Tests for the continued fractions."""

    @pytest.mark.parametrize("nu,s", [(0.0, 1.3), (0.5, 7.0), (1.0, 0.2), (-0.5, 3.0)])
    def test_ratio_j(self, nu, s):
        """Test J_{nu+1}/J_nu against mpmath."""
        exact = float(mpmath.besselj(nu + 1, s) / mpmath.besselj(nu, s))
        assert ratio_j(nu, s) == pytest.approx(exact, rel=1e-12)

    @pytest.mark.parametrize("nu,s", [(0.0, 1.3), (0.5, 50.0), (1.0, 0.01)])
    def test_ratio_i(self, nu, s):
        """Test I_{nu+1}/I_nu against mpmath."""
        exact = float(mpmath.besseli(nu + 1, s) / mpmath.besseli(nu, s))
        assert ratio_i(nu, s) == pytest.approx(exact, rel=1e-12)

    def test_pole(self):
        """Test that the ratio refuses a zero of J_nu."""
        with pytest.raises(PoleError):
            ratio_j(0.5, math.pi)

    def test_pole_within_root_tolerance(self):
        """Test that an argument closer to j_{0,1} than the root tolerance is a pole."""
        j1 = zero_j(0.0, 1)

        with pytest.raises(PoleError):
            ratio_j(0.0, j1 + 1e-11)
        assert abs(ratio_j(0.0, j1 + 1e-6)) > 1e5

    def test_origin(self):
        """Test the limit 0 at s = 0."""
        assert ratio_j(0.0, 0.0) == 0.0
        assert ratio_i(0.0, 0.0) == 0.0


class TestZeros:
    """Tests for zero_j and the tables."""

    def test_half_order(self, fresh_caches):
        """Test j_{1/2,k} = k pi."""
        for k in (1, 2, 5, 20):
            assert zero_j(0.5, k) == pytest.approx(k * math.pi, abs=1e-10)

    def test_order_zero(self):
        """Test j_{0,1} and j_{0,2}."""
        assert zero_j(0, 1) == pytest.approx(2.404825557695773, abs=1e-10)
        assert zero_j(0, 2) == pytest.approx(5.520078110286311, abs=1e-10)

    @pytest.mark.parametrize("k", [0, -1, 1.5])
    def test_bad_index(self, k):
        """Test that k must be a positive integer."""
        with pytest.raises(DomainError):
            zero_j(0.0, k)

    @settings(max_examples=40, deadline=None)
    @given(
        nu=st.floats(min_value=-0.5, max_value=1.0),
        k=st.integers(min_value=1, max_value=30)
    )
    def test_is_zero_near_mcmahon(self, nu, k):
        """Test that J_nu vanishes at j_{nu,k} and that McMahon is close."""
        z = zero_j(nu, k)

        assert abs(float(mpmath.besselj(nu, z))) < 1e-9
        assert abs(z - mcmahon_estimate(nu, k)) < 0.5

    def test_table(self):
        """Test the table is increasing and 1-based."""
        table = zero_table(0.0, 10)

        assert len(table) == 10
        assert table[1] == zero_j(0.0, 1)
        with pytest.raises(IndexError):
            table[0]

    @pytest.mark.parametrize("nu", [-0.5, 0.0, 0.5])
    def test_interlacing(self, nu):
        """Test j_{nu,k} < j_{nu+1,k} < j_{nu,k+1}."""
        table = zero_table(nu, 15)
        next_table = zero_table(nu + 1.0, 15) if nu + 1.0 <= 1.0 else zeros_any_order(nu + 1.0, 15)

        assert check_interlacing(table, next_table)

    def test_interlacing_detects_swap(self):
        """Test that a table compared with itself is not interlacing."""
        table = zero_table(0.0, 5)

        assert not check_interlacing(table, table)


class TestCrossProductRoot:
    """Tests for cross_product and root_h."""

    def test_half_order_against_tan_tanh(self, fresh_caches):
        """Test h_{1/2} against the root of tan x = tanh x."""
        exact = float(mpmath.findroot(lambda x: mpmath.tan(x) - mpmath.tanh(x), 3.9266))

        assert root_h(0.5) == pytest.approx(exact, abs=1e-9)
        assert root_h(0.5) == pytest.approx(3.926602, abs=1e-6)

    def test_order_zero(self):
        """Test h_0 = 3.196221 between j_{0,1} and j_{0,2}."""
        h = root_h(0)

        assert h == pytest.approx(3.196221, abs=1e-6)
        assert zero_j(0, 1) < h < zero_j(0, 2)

    @pytest.mark.parametrize("nu", [-0.5, -0.25, 0.0, 0.25, 0.5, 0.75, 1.0])
    def test_is_root(self, nu):
        """Test that the cross-product vanishes at h_nu."""
        h = root_h(nu)
        scale = abs(cross_product(nu, 0.5 * (zero_j(nu, 1) + h)))

        assert abs(cross_product(nu, h)) <= 1e-9 * max(scale, 1.0)

    def test_increasing_in_order(self):
        """Test h_nu increases with nu."""
        values = [root_h(nu) for nu in (-0.5, 0.0, 0.5, 1.0)]

        assert values == sorted(values)

    def test_bad_argument(self):
        """Test that the cross-product needs s > 0."""
        with pytest.raises(DomainError):
            cross_product(0.0, 0.0)


def test_power_scaled_limit():
    """Test s^{-nu} J_nu(s) at s = 0 and near it."""
    nu = 0.5
    limit = 1.0 / (2.0 ** nu * math.gamma(nu + 1.0))
    values = power_scaled_j(nu, [0.0, 1e-8])

    assert values[0] == pytest.approx(limit, rel=1e-15)
    assert values[1] == pytest.approx(limit, rel=1e-12)


def test_configure_roots(fresh_caches):
    """Test that new root settings replace the active ones and refine again."""
    default = root_config()
    try:
        configure_roots(RootConfig(bisection_width=1e-4, tolerance=1e-11))

        assert root_config().tolerance == 1e-11
        assert zero_j(0.0, 1) == pytest.approx(2.404825557695773, abs=1e-11)
        assert root_h(0.5) == pytest.approx(3.926602312047919, abs=1e-10)
    finally:
        configure_roots(default)

    assert root_config() == default
