"""
Unit tests for the 1-D model space.

Tests cover the radial Laplacian, extremal profiles, Rayleigh quotients and
the f_0 integral identity.
"""

import math

import numpy as np
import pytest
from numpy.polynomial import Polynomial

from src.model.model_space import (
    Provenance,
    RadialProfile,
    SpectralParams,
    ball_measure,
    bessel_identity_check,
    extremal_U,
    f0_profile,
    laplace_0N,
    laplace_0N_origin,
    rayleigh_quotient_1d,
    sharp_isoperimetric_constant,
    unit_ball_volume,
)
from src.special.bessel import root_h
from src.utils.errors import DomainError

H0 = 3.196221
BUMP = Polynomial([1.0, 0.0, -2.0, 0.0, 1.0])  # (1 - r^2)^2


def test_unit_ball_volume():
    """Test omega_N at integer dimensions."""
    assert unit_ball_volume(1) == pytest.approx(2.0)
    assert unit_ball_volume(2) == pytest.approx(math.pi)
    assert unit_ball_volume(3) == pytest.approx(4.0 * math.pi / 3.0)


def test_spectral_params_from_dimension(params2, params3):
    """Test the N to nu mapping."""
    assert params2.nu.nu == 0.0
    assert params3.nu.nu == 0.5
    assert params2.omega_N == pytest.approx(math.pi)


def test_spectral_params_from_order():
    """Test construction from the Bessel order."""
    params = SpectralParams.from_order(0.25)

    assert params.N == pytest.approx(2.5)


def test_spectral_params_rejects_endpoints():
    """Test that N = 1 and N = 4 are outside the open range."""
    with pytest.raises(DomainError):
        SpectralParams.from_dimension(1.0)

    with pytest.raises(DomainError):
        SpectralParams.from_dimension(4.0)


def test_sharp_isoperimetric_constant(params2):
    """Test N omega_N^{1/N} AVR^{1/N} at N = 2."""
    assert sharp_isoperimetric_constant(params2) == pytest.approx(2.0 * math.sqrt(math.pi))
    assert sharp_isoperimetric_constant(params2, 0.25) == pytest.approx(math.sqrt(math.pi))

    with pytest.raises(DomainError):
        sharp_isoperimetric_constant(params2, 1.5)


def test_ball_measure(params3):
    """Test avr omega_N R^N."""
    assert ball_measure(params3, 2.0, 0.5) == pytest.approx(0.5 * 4.0 * math.pi / 3.0 * 8.0)


class TestLaplace:
    """Tests for the radial Laplacian."""

    @pytest.mark.parametrize("N", [1.5, 2.0, 2.7, 3.0, 3.9])
    def test_laplacian_of_r_squared(self, N):
        """Test Delta_{0,N} r^2 = 2N everywhere, including the origin."""
        params = SpectralParams.from_dimension(N)
        p = RadialProfile.from_polynomial(Polynomial([0.0, 0.0, 1.0]), R=1.0)

        assert laplace_0N(p, params, 0.37) == pytest.approx(2.0 * N)
        assert laplace_0N_origin(p, params) == pytest.approx(2.0 * N)

    def test_origin_is_rejected(self, params2):
        """Test that r = 0 is routed to the origin entry point."""
        p = RadialProfile.from_polynomial(BUMP, R=1.0)

        with pytest.raises(DomainError):
            laplace_0N(p, params2, 0.0)

    def test_outside_interval_is_rejected(self, params2):
        """Test that r > R raises."""
        p = RadialProfile.from_polynomial(BUMP, R=1.0)

        with pytest.raises(DomainError):
            laplace_0N(p, params2, 1.5)


class TestExtremalU:
    """Tests for the clamped extremal profile."""

    @pytest.mark.parametrize("N", [2.0, 2.5, 3.0])
    def test_clamped_at_R(self, N):
        """Test U(R) = U'(R) = 0 relative to the profile size."""
        params = SpectralParams.from_dimension(N)
        U = extremal_U(params, 1.3)
        scale = float(np.max(np.abs(U(np.linspace(0, 1.3, 50)))))

        assert abs(float(U(1.3))) < 1e-10 * scale
        assert abs(float(U.d1(np.asarray(1.3)))) < 1e-9 * scale

    def test_derivatives_are_consistent(self, params3):
        """Test carried derivatives against central differences."""
        U = extremal_U(params3, 1.0)

        assert U.provenance is Provenance.ANALYTIC
        assert U.derivative_discrepancy() < 1e-6

    def test_three_dimensional_closed_form(self, params3):
        """Test U against s^{-1/2}(sinh h sin hs - sin h sinh hs) at N = 3."""
        h = root_h(0.5)
        U = extremal_U(params3, 1.0)
        s = np.linspace(0.1, 0.9, 9)
        closed = s ** -0.5 * (math.sinh(h) * np.sin(h * s) - math.sin(h) * np.sinh(h * s))

        ratio = U(s) / closed
        assert np.allclose(ratio, ratio[0], rtol=1e-10)

    @pytest.mark.parametrize("N,expected", [(2.0, H0 ** 4), (3.0, 3.926602 ** 4)])
    def test_rayleigh_quotient_is_h_to_the_fourth(self, N, expected):
        """Test that U attains h_nu^4 on the unit interval."""
        params = SpectralParams.from_dimension(N)
        result = rayleigh_quotient_1d(extremal_U(params, 1.0), params, 1.0)

        assert result.value == pytest.approx(expected, rel=1e-5)
        assert result.value == pytest.approx(root_h(params.nu) ** 4, rel=1e-8)

    def test_dilation_scales_quotient(self, params2):
        """Test p(c s) on [0, R/c] scales the quotient by c^4."""
        U = extremal_U(params2, 1.0).dilate(0.5)

        assert U.R == pytest.approx(2.0)
        result = rayleigh_quotient_1d(U, params2, 2.0)
        assert result.value == pytest.approx(root_h(0) ** 4 / 16.0, rel=1e-8)


class TestRayleighQuotient:
    """Tests for quadrature-based Rayleigh quotients."""

    def test_polynomial_bump(self, params2):
        """Test (1 - r^2)^2 at N = 2, whose quotient is 320/3."""
        p = RadialProfile.from_polynomial(BUMP, R=1.0)
        result = rayleigh_quotient_1d(p, params2, 1.0)

        assert result.value == pytest.approx(320.0 / 3.0, rel=1e-10)
        assert result.value > root_h(0) ** 4
        assert result.abs_err_estimate < 1e-6

    def test_finite_difference_profile(self, params2):
        """Test that a callable profile reproduces the polynomial quotient."""
        p = RadialProfile.from_callable(lambda s: (1.0 - s ** 2) ** 2, R=1.0)

        assert p.provenance is Provenance.FINITE_DIFFERENCE
        result = rayleigh_quotient_1d(p, params2, 1.0)
        assert result.value == pytest.approx(320.0 / 3.0, rel=1e-3)

    def test_unclamped_profile_is_rejected(self, params2):
        """Test that p(R) != 0 raises."""
        p = RadialProfile.from_polynomial(Polynomial([1.0, 0.0, -1.0]) + 0.5, R=1.0)

        with pytest.raises(DomainError):
            rayleigh_quotient_1d(p, params2, 1.0)

    def test_zero_profile_is_rejected(self, params2):
        """Test that the zero profile raises."""
        p = RadialProfile.from_polynomial(Polynomial([0.0]), R=1.0)

        with pytest.raises(DomainError):
            rayleigh_quotient_1d(p, params2, 1.0)

    def test_combination(self, params2):
        """Test linear combination of two clamped profiles."""
        bump = RadialProfile.from_polynomial(BUMP, R=1.0, label="bump")
        combined = bump.combine(bump, 1.0)

        assert combined(0.5) == pytest.approx(2.0 * float(bump(0.5)))
        result = rayleigh_quotient_1d(combined, params2, 1.0)
        assert result.value == pytest.approx(320.0 / 3.0, rel=1e-10)


class TestF0Profile:
    """Tests for f_0 and the integral identity."""

    def test_clamped_at_h(self, params2):
        """Test f_0(h) = f_0'(h) = 0."""
        f0 = f0_profile(params2)
        h = root_h(0)

        assert abs(float(f0(h))) < 1e-12
        assert abs(float(f0.d1(np.asarray(h)))) < 1e-12

    def test_origin_value(self, params3):
        """Test f_0(0) = (A + B)/(2^nu Gamma(nu + 1))."""
        f0 = f0_profile(params3, A=2.0)
        h = root_h(0.5)
        B = -2.0 * math.sin(h) / math.sinh(h)
        expected = (2.0 + B) / (math.sqrt(2.0) * math.gamma(1.5))

        assert float(f0(0.0)) == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("N", [1.6, 2.0, 2.5, 3.0, 3.5])
    def test_identity_residual(self, N):
        """Test that both sides of the identity agree to 1e-8."""
        params = SpectralParams.from_dimension(N)
        check = bessel_identity_check(params)

        assert abs(check.residual) < 1e-8
        assert check.rhs > 0
