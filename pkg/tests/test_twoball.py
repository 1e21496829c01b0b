"""
Unit tests for the two-ball reduction.

Tests cover K_nu, the boundary determinant, the first root h_nu(a) and
reduction sweeps.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import iv, jv

from src.model.model_space import SpectralParams
from src.reduction.twoball import (
    K,
    SweepReport,
    TwoBallInstance,
    determinant4,
    determinant4_factorized,
    determinant_matrix,
    first_root_h_of_a,
    k_sum,
    reduction_sweep,
    root_bracket,
    symmetric_endpoint,
)
from src.special.bessel import root_h, zero_j
from src.utils.errors import BracketError, DomainError, PoleError


class TestK:
    """Tests for K_nu."""

    def test_zero_at_origin(self):
        """Test the continuity value K_nu(0) = 0."""
        for nu in (-0.25, 0.0, 0.5, 1.0):
            assert K(nu, 0.0) == 0.0

    @pytest.mark.parametrize("s", [0.3, 1.0, 2.0, 4.0])
    def test_half_integer_closed_form(self, s):
        """Test K_{1/2}(s) = s^2 (coth s - cot s)."""
        expected = s ** 2 * (1.0 / math.tanh(s) - 1.0 / math.tan(s))

        assert K(0.5, s) == pytest.approx(expected, rel=1e-10)

    @pytest.mark.parametrize("nu", [0.0, 0.25, 0.5])
    def test_increasing_before_first_pole(self, nu):
        """Test monotonicity of K on (0, j_{nu,1})."""
        j1 = zero_j(nu, 1)
        values = [K(nu, s) for s in np.linspace(0.01, j1 - 0.01, 100)]

        assert all(b > a for a, b in zip(values, values[1:]))

    def test_pole(self):
        """Test evaluation at a zero of J_nu."""
        with pytest.raises(PoleError):
            K(0.0, zero_j(0.0, 1))


class TestTwoBallInstance:
    """Tests for instance normalization."""

    def test_normalization(self, params2):
        """Test a^N + b^N = 1 and a <= b."""
        inst = TwoBallInstance.from_a(params2, 0.4)

        assert inst.a ** 2 + inst.b ** 2 == pytest.approx(1.0, abs=1e-12)
        assert inst.a <= inst.b

    def test_pole_ladder(self, params3):
        """Test that the ladder is increasing and starts at j_{nu,1}/b."""
        inst = TwoBallInstance.from_a(params3, 0.3)
        ladder = inst.pole_ladder

        assert ladder[0] == pytest.approx(zero_j(0.5, 1) / inst.b)
        assert all(q > p for p, q in zip(ladder, ladder[1:]))

    def test_symmetric_endpoint_instance(self, params2):
        """Test that a = 2^{-1/N} gives a = b."""
        inst = TwoBallInstance.from_a(params2, 2.0 ** -0.5)

        assert inst.is_symmetric

    def test_a_out_of_range(self, params2):
        """Test that a beyond 2^{-1/N} raises."""
        with pytest.raises(DomainError):
            TwoBallInstance.from_a(params2, 0.8)

        with pytest.raises(DomainError):
            TwoBallInstance.from_a(params2, 0.0)

    def test_sign_flips_across_poles(self):
        """Test that the K-sum changes sign across the first ladder poles."""
        params = SpectralParams.from_dimension(2.0)
        inst = TwoBallInstance.from_a(params, 0.2)

        for pole in inst.pole_ladder[:2]:
            assert k_sum(inst, pole - 1e-3) * k_sum(inst, pole + 1e-3) < 0


class TestDeterminant:
    """Tests for the 4x4 boundary determinant."""

    @pytest.mark.parametrize("h", [0.5, 2.0, 3.3, 4.7])
    def test_matches_factorized_form(self, params2, h):
        """Test cofactor evaluation against the closed product."""
        inst = TwoBallInstance.from_a(params2, 0.45)

        assert determinant4(inst, h) == pytest.approx(determinant4_factorized(inst, h), rel=1e-9)

    def test_matches_k_form(self, params3):
        """Test the product with K(ha) + K(hb) away from poles."""
        inst = TwoBallInstance.from_a(params3, 0.5)
        nu, a, b, h = 0.5, inst.a, inst.b, 2.0
        prefactor = -2.0 * (a * b) ** -nu * h ** (-2.0 * nu - 1.0)
        bessel = math.prod(
            f(nu, h * r) for r in (a, b) for f in (jv, iv)
        )

        expected = prefactor * bessel * k_sum(inst, h)
        assert determinant4(inst, h) == pytest.approx(expected, rel=1e-9)

    def test_vanishes_at_root(self, params2):
        """Test determinant4 = 0 at h = h_nu(a)."""
        inst = TwoBallInstance.from_a(params2, 0.5)
        root = first_root_h_of_a(inst).h_of_a
        scale = float(np.max(np.abs(determinant_matrix(0.0, inst.a, inst.b, root)))) ** 4

        assert abs(determinant4(inst, root)) <= 1e-8 * scale

    @pytest.mark.parametrize("N", [2.0, 3.0])
    def test_small_h(self, N):
        """Test that the determinant is negative and shrinks as h -> 0."""
        inst = TwoBallInstance.from_a(SpectralParams.from_dimension(N), 0.5)
        values = [determinant4(inst, h) for h in (1e-1, 1e-2, 1e-3)]

        assert all(v < 0 for v in values)
        assert abs(values[0]) > abs(values[1]) > abs(values[2])

    def test_finite_when_radii_coincide(self, params2):
        """Test a = b at the merged pole h = j_{nu,1}/a."""
        inst = TwoBallInstance.from_a(params2, 2.0 ** -0.5)
        value = determinant4(inst, zero_j(0, 1) / inst.a)

        assert math.isfinite(value)
        assert abs(value) < 1e-10

    @settings(max_examples=40, deadline=None)
    @given(
        a=st.floats(min_value=0.05, max_value=0.95),
        b=st.floats(min_value=0.05, max_value=0.95),
        h=st.floats(min_value=0.1, max_value=8.0),
    )
    def test_symmetric_in_radii(self, a, b, h):
        """Test that swapping a and b leaves the determinant unchanged."""
        forward = np.linalg.det(determinant_matrix(0.25, a, b, h))
        backward = np.linalg.det(determinant_matrix(0.25, b, a, h))
        scale = max(
            float(np.max(np.abs(determinant_matrix(0.25, a, b, h)))) ** 4, 1e-300
        )

        assert abs(forward - backward) <= 1e-10 * scale


class TestFirstRoot:
    """Tests for h_nu(a)."""

    def test_symmetric_endpoint_value(self, params2):
        """Test h_nu(2^{-1/N}) = 2^{1/N} j_{nu,1}."""
        assert symmetric_endpoint(params2) == pytest.approx(3.40093, abs=1e-5)

    def test_small_a_limit(self, params2):
        """Test h_nu(a) -> h_nu as a -> 0."""
        inst = TwoBallInstance.from_a(params2, 1e-3)
        result = first_root_h_of_a(inst)

        assert result.h_of_a == pytest.approx(3.196221, abs=5e-3)

    @pytest.mark.parametrize("N,a", [(2.0, 0.4), (2.0, 0.7), (3.0, 0.2), (3.0, 0.75), (2.5, 0.6)])
    def test_root_exceeds_single_ball_value(self, N, a):
        """Test h_nu(a) > h_nu inside the inter-pole bracket."""
        params = SpectralParams.from_dimension(N)
        inst = TwoBallInstance.from_a(params, a)
        result = first_root_h_of_a(inst)
        lo, hi = root_bracket(inst)

        assert result.h_of_a > root_h(params.nu)
        assert lo < result.h_of_a < hi
        assert abs(result.residual) <= 1e-8

    def test_equal_radii_rejected(self, params2):
        """Test that a = b is routed to the endpoint formula."""
        inst = TwoBallInstance.from_a(params2, 2.0 ** -0.5)

        with pytest.raises(DomainError):
            first_root_h_of_a(inst)


class TestReductionSweep:
    """Tests for grid sweeps."""

    @pytest.mark.slow
    def test_planar_sweep(self, params2):
        """Test N = 2: every margin positive, 2^{1/2} j_{0,1} - h_0 at the endpoint."""
        report = reduction_sweep(params2, 200)

        assert report.counterexamples == []
        assert report.failures == []
        assert report.min_margin > 0
        assert report.endpoint_margin == pytest.approx(0.2047, abs=1e-3)

    def test_margin_vanishes_towards_small_a(self, params2):
        """Test that the smallest margin sits at the small-a end of the grid."""
        report = reduction_sweep(params2, 20)

        assert report.argmin_a == pytest.approx(report.records[0].a)
        assert report.min_margin < 0.01

    @pytest.mark.slow
    def test_three_dimensional_sweep(self, params3):
        """Test N = 3: every margin positive."""
        report = reduction_sweep(params3, 200)

        assert report.counterexamples == []
        assert report.min_margin > 0

    def test_near_critical_dimension(self):
        """Test N = 3.3: the endpoint margin nearly closes."""
        params = SpectralParams.from_dimension(3.3)
        report = reduction_sweep(params, 40)

        assert report.failures == []
        assert 0 < report.endpoint_margin < 0.01

    def test_worker_pool_preserves_results(self, params2):
        """Test that a threaded sweep equals the serial one."""
        serial = reduction_sweep(params2, 12)
        threaded = reduction_sweep(params2, 12, workers=4)

        assert [r.a for r in serial.records] == [r.a for r in threaded.records]
        assert [r.h_of_a for r in serial.records] == [r.h_of_a for r in threaded.records]

    def test_failures_become_records(self, params2, mocker):
        """Test that a numerical failure is recorded, not raised."""
        mocker.patch(
            "src.reduction.twoball.first_root_h_of_a",
            side_effect=BracketError("no sign change")
        )

        report = reduction_sweep(params2, 4)

        assert isinstance(report, SweepReport)
        assert len(report.failures) == 3
        assert report.failures[0].error_type == "BracketError"
        # the symmetric endpoint needs no root search
        assert report.records[-1].success is True
