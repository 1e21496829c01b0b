"""
Unit tests for the negativity certificates.

Tests cover the constants, A, B, alpha, beta, the dimension scan and N_0.
"""

import numpy as np
import pytest

from src.config.settings import BoundsConfig
from src.model.model_space import SpectralParams
from src.reduction.bounds import (
    A_from_radii,
    A_term,
    B_direct,
    BoundConstants,
    alpha_max,
    beta_bound,
    certified_intervals,
    certify,
    compute_N0,
    margin_function,
    negativity_scan,
    power_sum_bound,
    rayleigh_sum,
    rayleigh_sum_truncated,
    zero_tail_bound,
)
from src.reduction.twoball import TwoBallInstance, first_root_h_of_a
from src.special.bessel import root_h, zero_j
from src.utils.errors import DomainError


@pytest.fixture
def planar():
    """Bound constants at N = 2."""
    return BoundConstants.from_dimension(2.0)


@pytest.fixture
def spatial():
    """Bound constants at N = 3."""
    return BoundConstants.from_dimension(3.0)


class TestBoundConstants:
    """Tests for BoundConstants."""

    def test_planar_values(self, planar):
        """Test h_0, j_{0,1}, j_{0,2} and both delta readings."""
        assert planar.h == pytest.approx(3.196221, abs=1e-6)
        assert planar.j1 == pytest.approx(2.404826, abs=1e-6)
        assert planar.j2 == pytest.approx(5.520078, abs=1e-6)
        assert planar.delta == pytest.approx(0.1124, abs=1e-4)
        assert planar.delta_printed > 1

    def test_a_max(self, planar):
        """Test a_max = (1 - (j_1/h)^N)^{1/N} inside (0, 2^{-1/N})."""
        expected = (1.0 - (planar.j1 / planar.h) ** 2) ** 0.5

        assert planar.a_max == pytest.approx(expected)
        assert planar.a_max == pytest.approx(0.6587, abs=1e-4)
        assert 0 < planar.a_max < 2.0 ** -0.5

    def test_beyond_critical_dimension(self):
        """Test that a_max >= 2^{-1/N} past N_0 is rejected."""
        with pytest.raises(DomainError):
            BoundConstants.from_dimension(3.5)


class TestATerm:
    """Tests for A(nu, a)."""

    def test_limit_at_zero(self, planar):
        """Test A(0) = -1/(h^4 - j_1^4)."""
        expected = -1.0 / (planar.h ** 4 - planar.j1 ** 4)

        assert A_term(planar, 0.0) == pytest.approx(expected, rel=1e-12)
        assert A_term(planar, 1e-8) == pytest.approx(-0.01410, abs=1e-5)

    def test_diverges_at_a_max(self, planar):
        """Test the one-sided limit at a_max with a negative numerator."""
        assert A_term(planar, planar.a_max - 1e-6) < -1.0

    def test_symmetric_form(self, planar):
        """Test that swapping the radii leaves A unchanged."""
        a = 0.3
        b = planar.partner(a)

        assert A_from_radii(planar, b, a) == pytest.approx(A_term(planar, a), rel=1e-12)

    def test_outside_interval(self, planar):
        """Test that a >= a_max raises."""
        with pytest.raises(DomainError):
            A_term(planar, planar.a_max)

        with pytest.raises(DomainError):
            A_term(planar, -0.1)


class TestBeta:
    """Tests for beta(nu) and the Rayleigh sum."""

    def test_rayleigh_sum(self):
        """Test 1/(16 (nu+1)^2 (nu+2)) at nu = 0."""
        assert rayleigh_sum(0.0) == pytest.approx(1.0 / 32.0)

    @pytest.mark.parametrize("nu", [0.0, 0.5])
    def test_truncated_sum_brackets_closed_form(self, nu):
        """Test direct summation to k = 200 plus the tail bound against the closed form."""
        partial = rayleigh_sum_truncated(nu, 200)
        exact = rayleigh_sum(nu)

        assert partial.value <= exact + 1e-15
        assert exact <= partial.value + partial.tail_bound + 1e-15
        assert exact - partial.value < 1e-9

    def test_planar_beta(self, planar):
        """Test beta(0) = tail/(1 - delta) with tail = 1/32 - 1/j_1^4."""
        tail = 1.0 / 32.0 - planar.j1 ** -4

        assert tail == pytest.approx(0.001349, abs=2e-6)
        assert beta_bound(planar) == pytest.approx(0.001520, abs=2e-6)

    def test_power_sum_bound(self):
        """Test the maximum of a^{4-N} + b^{4-N} on both sides of N = 2."""
        assert power_sum_bound(2.0) == pytest.approx(1.0)
        assert power_sum_bound(3.0) == pytest.approx(2.0 ** (2.0 / 3.0))
        assert power_sum_bound(1.8) == 1.0


class TestBDirect:
    """Tests for the direct tail sum."""

    def test_limit_at_zero(self, planar):
        """Test B(0) = sum over k >= 2 of 1/(j_k^4 - h^4)."""
        zeros = np.array([zero_j(0, k) for k in range(2, 201)])
        expected = float(np.sum(1.0 / (zeros ** 4 - planar.h ** 4)))

        assert B_direct(planar, 0.0).value == pytest.approx(expected, rel=1e-12)

    def test_doubling_k_max(self, planar):
        """Test that doubling k_max moves the value by less than the tail bound."""
        coarse = B_direct(planar, 0.35, k_max=100)
        fine = B_direct(planar, 0.35, k_max=200)

        assert 0 <= fine.value - coarse.value <= coarse.tail_bound

    def test_below_beta_at_random_points(self, planar):
        """Test B(a) <= beta(0) for random admissible a."""
        rng = np.random.default_rng(7)
        beta = beta_bound(planar)

        for a in rng.uniform(0.0, planar.a_max, 20):
            result = B_direct(planar, a)
            assert result.value + result.tail_bound <= beta


class TestAlpha:
    """Tests for alpha(nu) and the certified targets."""

    def test_planar_target(self, planar):
        """Test alpha(0) + beta(0) <= -0.00158 up to slack."""
        alpha = alpha_max(planar)

        assert alpha >= A_term(planar, 0.0)
        assert alpha + beta_bound(planar) <= -0.00158 + 5e-4

    def test_spatial_target(self, spatial):
        """Test alpha(1/2) + beta(1/2) <= -0.000417 up to slack."""
        assert alpha_max(spatial) + beta_bound(spatial) <= -0.000417 + 5e-4

    def test_scan_stability(self, planar):
        """Test that doubling the scan moves alpha by less than 1e-8."""
        assert abs(alpha_max(planar, 4096) - alpha_max(planar, 8192)) < 1e-8

    @pytest.mark.parametrize("N", [1.8, 2.0, 2.05, 3.0])
    def test_chain_validity(self, N):
        """Test A <= alpha and B <= beta on a 500-point grid."""
        c = BoundConstants.from_dimension(N)
        alpha = alpha_max(c)
        beta = beta_bound(c)

        for a in np.linspace(0.0, c.a_max, 502)[1:-1]:
            assert A_term(c, a) <= alpha + 1e-12
            assert B_direct(c, a).value <= beta

    @pytest.mark.parametrize("N", [2.0, 3.0])
    def test_negativity_implies_larger_root(self, N):
        """Test that A + B < 0 at a gives h_nu(a) > h_nu."""
        c = BoundConstants.from_dimension(N)
        params = SpectralParams.from_dimension(N)
        h_nu = root_h(params.nu)

        for a in np.linspace(0.0, c.a_max, 52)[1:-1]:
            if A_term(c, a) + B_direct(c, a).value < 0:
                inst = TwoBallInstance.from_a(params, a)
                assert first_root_h_of_a(inst).h_of_a > h_nu


class TestNegativityScan:
    """Tests for the dimension scan."""

    def test_certified_report(self):
        """Test a single certified dimension."""
        report = certify(2.0, scan_points=1024)

        assert report.certified_negative
        assert report.sum == pytest.approx(report.alpha + report.beta)
        assert report.to_dict()["nu"] == 0.0

    def test_error_estimate_carries_error_terms(self):
        """Test that the error estimate adds the root, refinement, series and rounding terms."""
        report = certify(2.0, scan_points=1024, config=BoundsConfig(k_max=100))
        terms = report.error_terms

        assert set(terms) == {"roots", "refinement", "series", "rounding"}
        assert all(value >= 0 for value in terms.values())
        assert report.error_estimate == pytest.approx(sum(terms.values()))
        assert report.error_estimate >= zero_tail_bound(0.0, 100)
        assert terms["series"] > zero_tail_bound(0.0, 100)
        assert report.sum + report.error_estimate < 0

    def test_series_term_shrinks_with_k_max(self):
        """Test that a longer partial sum tightens the certificate."""
        coarse = certify(3.0, scan_points=256, config=BoundsConfig(k_max=20))
        fine = certify(3.0, scan_points=256, config=BoundsConfig(k_max=200))

        assert fine.error_terms["series"] < coarse.error_terms["series"]
        assert coarse.error_estimate >= zero_tail_bound(0.5, 20)

    def test_uncertified_beyond_critical_dimension(self):
        """Test that N past N_0 is reported, not raised."""
        report = certify(3.4, scan_points=256)

        assert not report.certified_negative
        assert report.note is not None

    @pytest.mark.slow
    def test_interval_around_two(self):
        """Test a certified interval containing N = 2."""
        scan = negativity_scan(1.8, 2.2, 0.01, scan_points=1024)

        assert any(lo <= 2.0 <= hi for lo, hi in scan.intervals)

    @pytest.mark.slow
    def test_interval_around_three(self):
        """Test a certified interval containing N = 3."""
        scan = negativity_scan(2.9, 3.1, 0.01, scan_points=1024)

        assert any(lo <= 3.0 <= hi for lo, hi in scan.intervals)

    def test_failing_region_reported(self):
        """Test that certification failures near N_0 are reported."""
        scan = negativity_scan(3.2, 3.4, 0.05, scan_points=256)

        assert len(scan.reports) == 5
        assert not all(r.certified_negative for r in scan.reports)

    def test_intervals_from_reports(self):
        """Test the maximal-run extraction."""
        reports = [certify(N, scan_points=64) for N in (2.0, 2.01)]
        reports[1].certified_negative = False
        reports.append(certify(2.02, scan_points=64))

        assert certified_intervals(reports) == [(2.0, 2.0), (2.02, 2.02)]

    def test_bad_range(self):
        """Test that N_lo >= N_hi raises."""
        with pytest.raises(DomainError):
            negativity_scan(2.2, 1.8, 0.01)


class TestCriticalDimension:
    """Tests for N_0."""

    def test_value(self):
        """Test N_0 = 3.30417 to 1e-4."""
        assert compute_N0(1e-5) == pytest.approx(3.30417, abs=1e-4)

    def test_margin_signs(self):
        """Test g(2) > 0 and g(3.5) < 0."""
        assert margin_function(2.0) == pytest.approx(3.40093 - 3.196221, abs=1e-5)
        assert margin_function(3.5) < 0

    def test_margin_decreasing(self):
        """Test that g decreases on [2, 3.6]."""
        values = [margin_function(N) for N in np.arange(2.0, 3.6001, 0.02)]

        assert all(b < a for a, b in zip(values, values[1:]))
