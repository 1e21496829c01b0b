"""
The 1-D model space ([0, inf), sigma_N = N omega_N r^{N-1} dr).

Radial profiles with their first two derivatives, the radial Laplacian
Delta_{0,N} p = p'' + (N-1)/r p', the Bessel extremal profiles U and f_0,
and Rayleigh quotients by adaptive quadrature against the weight r^{N-1}.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np
from numpy.polynomial import Polynomial
from scipy import integrate, special

from ..config.settings import N_MAX, N_MIN, QuadratureConfig
from ..special.bessel import Order, power_scaled_i, power_scaled_j, root_h
from ..utils.errors import DomainError
from ..utils.logger import StructuredLogger

logger = StructuredLogger(__name__)

ArrayFn = Callable[[np.ndarray], np.ndarray]

# Clamping residuals at the right endpoint are checked relative to max|p|
CLAMP_TOLERANCE = 1e-6
FD_STEP = 1e-5


def unit_ball_volume(N: float) -> float:
    """omega_N = pi^{N/2} / Gamma(N/2 + 1) for any real N > 0."""
    if N <= 0:
        raise DomainError("N must be positive", N=N)
    return math.pi ** (N / 2.0) / special.gamma(N / 2.0 + 1.0)


@dataclass(frozen=True)
class SpectralParams:
    """Dimension N in (1, 4), order nu = N/2 - 1, and omega_N."""

    N: float
    nu: Order
    omega_N: float

    def __post_init__(self):
        """Validate configuration values."""
        if not N_MIN < self.N < N_MAX:
            raise DomainError(f"N must be in ({N_MIN}, {N_MAX})", N=self.N)
        if self.nu.nu != self.N / 2.0 - 1.0:
            raise DomainError("nu must equal N/2 - 1", N=self.N, nu=self.nu.nu)

    @classmethod
    def from_dimension(cls, N: float) -> "SpectralParams":
        N = float(N)
        if not N_MIN < N < N_MAX:
            raise DomainError(f"N must be in ({N_MIN}, {N_MAX})", N=N)
        return cls(N=N, nu=Order.from_dimension(N), omega_N=unit_ball_volume(N))

    @classmethod
    def from_order(cls, nu: float) -> "SpectralParams":
        return cls.from_dimension(Order(float(nu)).dimension)

    @property
    def h(self) -> float:
        """First root h_nu of the cross-product."""
        return root_h(self.nu)


def ball_measure(params: SpectralParams, R: float, avr: float = 1.0) -> float:
    """Measure avr * omega_N * R^N of a ball of radius R around a cone tip."""
    return avr * params.omega_N * R ** params.N


def sharp_isoperimetric_constant(params: SpectralParams, avr: float = 1.0) -> float:
    """Sharp isoperimetric constant N omega_N^{1/N} AVR^{1/N}."""
    if not 0 < avr <= 1:
        raise DomainError("avr must be in (0, 1]", avr=avr)
    return params.N * params.omega_N ** (1.0 / params.N) * avr ** (1.0 / params.N)


class Provenance(Enum):
    """Where a profile's derivatives come from."""
    ANALYTIC = "analytic"
    FINITE_DIFFERENCE = "finite-difference"


@dataclass(frozen=True)
class RadialProfile:
    """
    A radial function on [0, R] with first and second derivatives.

    All callables accept and return numpy arrays. Profiles are even in r,
    so evaluations at the origin are regular.
    """

    value: ArrayFn
    d1: ArrayFn
    d2: ArrayFn
    R: float
    provenance: Provenance = Provenance.ANALYTIC
    label: str = ""

    def __post_init__(self):
        """Validate configuration values."""
        if not self.R > 0:
            raise DomainError("profile interval [0, R] needs R > 0", R=self.R)

    def __call__(self, s) -> np.ndarray:
        return self.value(np.asarray(s, dtype=float))

    def dilate(self, c: float) -> "RadialProfile":
        """The profile s -> p(c s) on [0, R/c]."""
        if c <= 0:
            raise DomainError("dilation factor must be positive", c=c)
        value, d1, d2 = self.value, self.d1, self.d2
        return RadialProfile(
            value=lambda s: value(c * np.asarray(s, dtype=float)),
            d1=lambda s: c * d1(c * np.asarray(s, dtype=float)),
            d2=lambda s: c * c * d2(c * np.asarray(s, dtype=float)),
            R=self.R / c,
            provenance=self.provenance,
            label=self.label
        )

    def scaled(self, factor: float) -> "RadialProfile":
        """The profile multiplied by a constant."""
        value, d1, d2 = self.value, self.d1, self.d2
        return RadialProfile(
            value=lambda s: factor * value(s),
            d1=lambda s: factor * d1(s),
            d2=lambda s: factor * d2(s),
            R=self.R,
            provenance=self.provenance,
            label=self.label
        )

    def combine(self, other: "RadialProfile", weight: float) -> "RadialProfile":
        """self + weight * other on the common interval."""
        if not math.isclose(self.R, other.R, rel_tol=1e-12):
            raise DomainError("profiles live on different intervals", R=self.R, other_R=other.R)
        provenance = (
            Provenance.ANALYTIC
            if self.provenance is Provenance.ANALYTIC and other.provenance is Provenance.ANALYTIC
            else Provenance.FINITE_DIFFERENCE
        )
        return RadialProfile(
            value=lambda s: self.value(s) + weight * other.value(s),
            d1=lambda s: self.d1(s) + weight * other.d1(s),
            d2=lambda s: self.d2(s) + weight * other.d2(s),
            R=self.R,
            provenance=provenance,
            label=f"{self.label}+{weight:g}*{other.label}"
        )

    @classmethod
    def from_callable(cls, f: ArrayFn, R: float, label: str = "") -> "RadialProfile":
        """
        Wrap an externally supplied radial function.

        Derivatives are central differences with step 1e-5 R, using the even
        extension p(-s) = p(s) next to the origin.
        """
        step = FD_STEP * R

        def even(s):
            return f(np.abs(np.asarray(s, dtype=float)))

        return cls(
            value=even,
            d1=lambda s: (even(np.asarray(s) + step) - even(np.asarray(s) - step)) / (2.0 * step),
            d2=lambda s: (even(np.asarray(s) + step) - 2.0 * even(s) + even(np.asarray(s) - step)) / step ** 2,
            R=R,
            provenance=Provenance.FINITE_DIFFERENCE,
            label=label
        )

    @classmethod
    def from_polynomial(cls, poly: Polynomial, R: float, label: str = "") -> "RadialProfile":
        """Polynomial profile with exact derivatives."""
        first = poly.deriv(1)
        second = poly.deriv(2)
        return cls(
            value=lambda s: poly(np.asarray(s, dtype=float)),
            d1=lambda s: first(np.asarray(s, dtype=float)),
            d2=lambda s: second(np.asarray(s, dtype=float)),
            R=R,
            label=label
        )

    def derivative_discrepancy(self, points: int = 20) -> float:
        """
        Largest relative gap between the carried derivatives and central
        differences at interior points.
        """
        s = np.linspace(0.0, self.R, points + 2)[1:-1]
        step = 1e-4 * self.R
        fd1 = (self.value(s + step) - self.value(s - step)) / (2.0 * step)
        fd2 = (self.value(s + step) - 2.0 * self.value(s) + self.value(s - step)) / step ** 2
        an1, an2 = self.d1(s), self.d2(s)
        scale1 = max(float(np.max(np.abs(an1))), 1e-300)
        scale2 = max(float(np.max(np.abs(an2))), 1e-300)
        return float(max(
            np.max(np.abs(fd1 - an1) / np.maximum(np.abs(an1), scale1)),
            np.max(np.abs(fd2 - an2) / np.maximum(np.abs(an2), scale2))
        ))


@dataclass(frozen=True)
class QuadratureResult:
    """A quadrature value with its absolute error estimate."""

    value: float
    abs_err_estimate: float


@dataclass(frozen=True)
class BesselCombination:
    """
    p(s) = s^{-nu} (cj J_nu(k s) + ci I_nu(k s)) with closed-form derivatives.

    Every expression goes through z^{-nu-m} J_{nu+m}(z), which is regular
    at z = 0, so nothing is divided by s.
    """

    nu: float
    N: float
    k: float
    cj: float
    ci: float

    def _j(self, m: int, z):
        return power_scaled_j(self.nu + m, z)

    def _i(self, m: int, z):
        return power_scaled_i(self.nu + m, z)

    def value(self, s):
        z = self.k * np.asarray(s, dtype=float)
        return self.k ** self.nu * (self.cj * self._j(0, z) + self.ci * self._i(0, z))

    def d1_over_s(self, s):
        """p'(s)/s, regular at the origin."""
        z = self.k * np.asarray(s, dtype=float)
        return self.k ** (self.nu + 2) * (-self.cj * self._j(1, z) + self.ci * self._i(1, z))

    def d1(self, s):
        return np.asarray(s, dtype=float) * self.d1_over_s(s)

    def laplacian(self, s):
        z = self.k * np.asarray(s, dtype=float)
        return self.k ** (self.nu + 2) * (-self.cj * self._j(0, z) + self.ci * self._i(0, z))

    def d2(self, s):
        return self.laplacian(s) - (self.N - 1.0) * self.d1_over_s(s)

    def d3(self, s):
        s = np.asarray(s, dtype=float)
        z = self.k * s
        laplacian_prime = self.k ** (self.nu + 4) * s * (self.cj * self._j(1, z) + self.ci * self._i(1, z))
        ratio_prime = self.k ** (self.nu + 4) * s * (self.cj * self._j(2, z) + self.ci * self._i(2, z))
        return laplacian_prime - (self.N - 1.0) * ratio_prime

    def profile(self, R: float, label: str) -> RadialProfile:
        return RadialProfile(value=self.value, d1=self.d1, d2=self.d2, R=R, label=label)


def laplace_0N(p: RadialProfile, params: SpectralParams, r: float) -> float:
    """
    Delta_{0,N} p(r) = p''(r) + (N-1)/r p'(r).

    Raises:
        DomainError: At r = 0 (use laplace_0N_origin) or outside [0, R]
    """
    if r <= 0:
        raise DomainError("r = 0 is the coordinate singularity; use laplace_0N_origin", r=r)
    if r > p.R * (1.0 + 1e-12):
        raise DomainError("r outside the profile interval", r=r, R=p.R)
    r_arr = np.asarray(r, dtype=float)
    return float(p.d2(r_arr) + (params.N - 1.0) / r * p.d1(r_arr))


def laplace_0N_origin(p: RadialProfile, params: SpectralParams) -> float:
    """Even-extension limit Delta_{0,N} p(0) = N p''(0)."""
    return float(params.N * p.d2(np.asarray(0.0)))


def laplacian_values(p: RadialProfile, N: float, r) -> np.ndarray:
    """Vectorized Delta_{0,N} p with the origin limit N p''(0) at r = 0."""
    r = np.asarray(r, dtype=float)
    safe = np.where(r > 0, r, 1.0)
    return np.where(r > 0, p.d2(r) + (N - 1.0) / safe * p.d1(r), N * p.d2(r))


def extremal_U(params: SpectralParams, R: float) -> RadialProfile:
    """
    Clamped extremal profile on [0, R]:
    U(s) = s^{-nu} (I_nu(h) J_nu(h s/R) - J_nu(h) I_nu(h s/R)), h = h_nu.
    """
    if R <= 0:
        raise DomainError("R must be positive", R=R)
    nu = params.nu.nu
    h = params.h
    combination = BesselCombination(
        nu=nu,
        N=params.N,
        k=h / R,
        cj=float(special.iv(nu, h)),
        ci=-float(special.jv(nu, h))
    )
    return combination.profile(R, label=f"U[N={params.N:g},R={R:g}]")


def f0_coefficients(params: SpectralParams, A: float = 1.0) -> BesselCombination:
    """f_0 = s^{-nu}(A J_nu(s) + B I_nu(s)) with B = -A J_nu(h)/I_nu(h)."""
    nu = params.nu.nu
    h = params.h
    B = -A * float(special.jv(nu, h)) / float(special.iv(nu, h))
    return BesselCombination(nu=nu, N=params.N, k=1.0, cj=A, ci=B)


def f0_profile(params: SpectralParams, A: float = 1.0) -> RadialProfile:
    """f_0 on [0, h_nu]; f_0(0) = (A + B)/(2^nu Gamma(nu + 1))."""
    return f0_coefficients(params, A).profile(params.h, label=f"f0[N={params.N:g},A={A:g}]")


def weighted_integral(
    integrand: ArrayFn,
    N: float,
    R: float,
    config: Optional[QuadratureConfig] = None
) -> QuadratureResult:
    """
    int_0^R g(r) r^{N-1} dr with r = R t and the weight t^{N-1} handled
    by the algebraic-weight rule.
    """
    config = config or QuadratureConfig()
    value, err = integrate.quad(
        lambda t: float(integrand(np.asarray(R * t))),
        0.0, 1.0,
        weight="alg", wvar=(N - 1.0, 0.0),
        epsabs=config.epsabs, epsrel=config.epsrel, limit=config.limit
    )
    scale = R ** N
    return QuadratureResult(value * scale, err * scale)


def _check_clamped(p: RadialProfile, R: float) -> None:
    samples = p(np.linspace(0.0, R, 65))
    scale = max(float(np.max(np.abs(samples))), 1e-300)
    end = np.asarray(R)
    value_end = abs(float(p.value(end))) / scale
    slope_end = abs(float(p.d1(end))) * R / scale
    if value_end > CLAMP_TOLERANCE or slope_end > CLAMP_TOLERANCE:
        raise DomainError(
            "profile is not clamped at R",
            R=R, value=value_end, slope=slope_end
        )


def rayleigh_quotient_1d(
    p: RadialProfile,
    params: SpectralParams,
    R: float,
    config: Optional[QuadratureConfig] = None
) -> QuadratureResult:
    """
    int (Delta_{0,N} p)^2 d sigma_N / int p^2 d sigma_N over [0, R].

    Args:
        p: Profile with p(R) = p'(R) = 0
        params: Dimension parameters
        R: Right endpoint
        config: Quadrature tolerances

    Returns:
        QuadratureResult with the quotient and a propagated error estimate

    Raises:
        DomainError: If p is not clamped at R or vanishes identically
    """
    if R > p.R * (1.0 + 1e-12):
        raise DomainError("R exceeds the profile interval", R=R, profile_R=p.R)
    _check_clamped(p, R)

    N = params.N
    numerator = weighted_integral(lambda r: laplacian_values(p, N, r) ** 2, N, R, config)
    denominator = weighted_integral(lambda r: p(r) ** 2, N, R, config)
    if denominator.value <= 0:
        raise DomainError("profile has zero norm", R=R)

    quotient = numerator.value / denominator.value
    err = quotient * (
        numerator.abs_err_estimate / max(numerator.value, 1e-300)
        + denominator.abs_err_estimate / denominator.value
    )
    logger.debug(
        "Rayleigh quotient",
        profile=p.label, N=N, R=R, quotient=quotient, abs_err=err
    )
    return QuadratureResult(quotient, err)


@dataclass(frozen=True)
class IdentityCheck:
    """Both sides of the f_0 integral identity and their difference."""

    lhs: float
    rhs: float
    residual: float
    details: dict = field(default_factory=dict)


def bessel_identity_check(
    params: SpectralParams,
    A: float = 1.0,
    config: Optional[QuadratureConfig] = None
) -> IdentityCheck:
    """
    Compare
        int_0^1 [((N-1)^2/(h^2 t^2)) f0'^2 - 2 (f0' f0'')' + f0''^2](h t) t^{N-1} dt
    with
        int_0^1 f0^2(h t) t^{N-1} dt.

    The two sides agree because f_0 solves Delta^2 f_0 = f_0 and is clamped at h.
    """
    config = config or QuadratureConfig()
    f0 = f0_coefficients(params, A)
    N = params.N
    h = params.h

    def lhs_integrand(s):
        ratio = f0.d1_over_s(s)
        second = f0.d2(s)
        product_prime = second ** 2 + f0.d1(s) * f0.d3(s)
        return (N - 1.0) ** 2 * ratio ** 2 - 2.0 * product_prime + second ** 2

    lhs = weighted_integral(lhs_integrand, N, h, config)
    rhs = weighted_integral(lambda s: f0.value(s) ** 2, N, h, config)
    # both sides carry the same factor h^N from s = h t
    scale = h ** N
    check = IdentityCheck(
        lhs=lhs.value / scale,
        rhs=rhs.value / scale,
        residual=(lhs.value - rhs.value) / scale,
        details={
            "N": N,
            "A": A,
            "h": h,
            "abs_err_estimate": (lhs.abs_err_estimate + rhs.abs_err_estimate) / scale
        }
    )
    logger.info("Bessel identity evaluated", N=N, A=A, residual=check.residual)
    return check
