"""
Cone fixtures and the sharpness checks of the clamped-plate inequality.

Three families of spaces with positive asymptotic volume ratio are
provided: rotationally symmetric metrics dr^2 + F(r)^2 g_{S^{n-1}} with F' = f,
convex cones carrying a homogeneous weight, and metric measure cones
Z x [0, inf) with measure t^{N-1} dt (x) m_Z. On cones the ball law
m(B_s) = AVR omega_N s^N is exact, so every computation reduces to a
radial one on the model space.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
from numpy.polynomial import Polynomial
from scipy import integrate, special

from ..config.settings import OracleConfig, QuadratureConfig
from ..model.model_space import (
    RadialProfile,
    SpectralParams,
    extremal_U,
    f0_profile,
    laplacian_values,
    rayleigh_quotient_1d,
    unit_ball_volume,
    weighted_integral,
)
from ..oracle.fd_oracle import RadialMesh, solve_clamped
from ..special.bessel import root_h
from ..utils.errors import DomainError, FixtureError
from ..utils.logger import StructuredLogger

logger = StructuredLogger(__name__)

ROTATIONAL_RADIUS = 1e4
ROTATIONAL_TOLERANCE = 1e-4
SHARPNESS_TOLERANCE = 1e-6
ANNULUS_TOLERANCE = 1e-2
LIMIT_TOLERANCE = 1e-8
MONOTONE_SLACK = 1e-12


class ConeKind(str, Enum):
    """Fixture families."""
    ROTATIONAL = "rotational"
    WEIGHTED_CONE = "weighted_cone"
    METRIC_CONE = "metric_cone"


@dataclass(frozen=True)
class WeightedConeAVR:
    """AVR of a weighted convex cone with the dimension N = n + alpha it lives in."""

    avr: float
    N: float
    method: str
    std_error: Optional[float] = None
    samples: Optional[int] = None

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary."""
        return {
            "avr": self.avr,
            "N": self.N,
            "method": self.method,
            "std_error": self.std_error,
            "samples": self.samples
        }


def rotational_volume_quotient(f: Callable[[float], float], n: int, radii: Sequence[float]) -> List[float]:
    """
    n int_0^R F(s)^{n-1} ds / R^n at each R, with F(s) = int_0^s f.

    F and the volume are integrated together as one ODE system.
    """
    radii = sorted(float(R) for R in radii)
    solution = integrate.solve_ivp(
        lambda s, y: [float(f(s)), n * max(y[0], 0.0) ** (n - 1)],
        (0.0, radii[-1]),
        [0.0, 0.0],
        method="DOP853",
        t_eval=radii,
        rtol=1e-12,
        atol=1e-12
    )
    if not solution.success:
        raise FixtureError("volume integration failed", message=solution.message)
    return [float(volume / R ** n) for volume, R in zip(solution.y[1], radii)]


def avr_rotational(
    f: Callable[[float], float],
    a: float,
    n: int,
    R: float = ROTATIONAL_RADIUS,
    tolerance: float = ROTATIONAL_TOLERANCE
) -> float:
    """
    lim_{R -> inf} n int_0^R F(s)^{n-1} ds / R^n for the metric
    dr^2 + F(r)^2 g_{S^{n-1}}, F(r) = int_0^r f.

    The quotient is taken at R and 2R and the two values are combined by
    one Richardson step assuming an O(1/R) error.

    Args:
        f: Smooth non-increasing profile with f(0) = 1
        a: The limit of f at infinity, in (0, 1]
        n: Topological dimension
        R: First radius of the Richardson pair
        tolerance: Allowed distance from a^{n-1}

    Returns:
        The numerical limit

    Raises:
        DomainError: If f is not non-increasing, f(0) != 1, or a, n are out of range
        FixtureError: If the limit differs from a^{n-1} by more than the tolerance
    """
    if not 0 < a <= 1:
        raise DomainError("a must be in (0, 1]", a=a)
    if n < 2:
        raise DomainError("n must be at least 2", n=n)
    if abs(float(f(0.0)) - 1.0) > MONOTONE_SLACK:
        raise DomainError("warping profile must satisfy f(0) = 1", f0=float(f(0.0)))

    grid = np.concatenate([np.linspace(0.0, 10.0, 1001), np.geomspace(10.0, 2.0 * R, 400)[1:]])
    samples = np.array([float(f(s)) for s in grid])
    if np.any(np.diff(samples) > MONOTONE_SLACK):
        worst = int(np.argmax(np.diff(samples)))
        raise DomainError("warping profile must be non-increasing", s=float(grid[worst]))

    q_R, q_2R = rotational_volume_quotient(f, n, [R, 2.0 * R])
    limit = float(2.0 * q_2R - q_R)

    expected = a ** (n - 1)
    if abs(limit - expected) > tolerance:
        raise FixtureError(
            "rotational AVR disagrees with a^{n-1}",
            limit=limit, expected=expected, a=a, n=n
        )

    logger.debug("Rotational AVR", a=a, n=n, limit=limit, q_R=q_R, q_2R=q_2R)
    return limit


def _orthant_integral(exponents: np.ndarray) -> float:
    """int over B_1 in the positive orthant of prod x_i^{A_i}."""
    n = exponents.size
    log_value = (
        float(np.sum(special.gammaln((exponents + 1.0) / 2.0)))
        - n * math.log(2.0)
        - float(special.gammaln(1.0 + (n + exponents.sum()) / 2.0))
    )
    return math.exp(log_value)


def avr_weighted_cone(
    alpha: float,
    solid_fraction: float,
    n: int,
    exponents: Optional[Sequence[float]] = None,
    method: str = "closed_form",
    samples: int = 200_000,
    seed: int = 0
) -> WeightedConeAVR:
    """
    int_{B_1 cap Sigma} w dL^n / omega_N with N = n + alpha.

    Without ``exponents`` the weight is |x|^alpha on a cone covering
    ``solid_fraction`` of the sphere; Monte Carlo is available for plane
    sectors. With ``exponents`` the cone is the positive orthant and
    w = prod x_i^{A_i}, alpha = sum A_i.

    Raises:
        DomainError: On negative alpha, a fraction outside (0, 1], or
            exponents inconsistent with alpha and n
        FixtureError: On an unsupported descriptor/method combination
    """
    if alpha < 0:
        raise DomainError("alpha must be non-negative", alpha=alpha)
    if not 0 < solid_fraction <= 1:
        raise DomainError("solid_fraction must be in (0, 1]", solid_fraction=solid_fraction)
    if n < 1:
        raise DomainError("n must be positive", n=n)
    if method not in ("closed_form", "monte_carlo"):
        raise FixtureError("unsupported method", method=method)

    N = n + alpha
    omega = unit_ball_volume(N)

    if exponents is not None:
        A = np.asarray(exponents, dtype=float)
        if A.size != n or np.any(A < 0):
            raise DomainError("need n non-negative exponents", n=n, exponents=list(A))
        if not math.isclose(A.sum(), alpha, rel_tol=1e-12, abs_tol=1e-12):
            raise DomainError("exponents must add up to alpha", alpha=alpha, total=float(A.sum()))
        if not math.isclose(solid_fraction, 2.0 ** -n, rel_tol=1e-12):
            raise DomainError("orthant covers 2^{-n} of the sphere", solid_fraction=solid_fraction, n=n)

        if method == "closed_form":
            return WeightedConeAVR(_orthant_integral(A) / omega, N, method)

        rng = np.random.default_rng(seed)
        x = rng.random((samples, n))
        inside = np.sum(x ** 2, axis=1) <= 1.0
        values = np.where(inside, np.prod(x ** A, axis=1), 0.0)
        return _monte_carlo_result(values, 1.0, omega, N, samples)

    if method == "closed_form":
        integral = solid_fraction * n * unit_ball_volume(n) / (n + alpha)
        return WeightedConeAVR(integral / omega, N, method)

    if n != 2:
        raise FixtureError("Monte Carlo is implemented for plane sectors only", n=n)

    rng = np.random.default_rng(seed)
    x = rng.uniform(-1.0, 1.0, (samples, 2))
    radius = np.hypot(x[:, 0], x[:, 1])
    angle = np.mod(np.arctan2(x[:, 1], x[:, 0]), 2.0 * math.pi)
    inside = (radius <= 1.0) & (angle < 2.0 * math.pi * solid_fraction)
    values = np.where(inside, radius ** alpha, 0.0)
    return _monte_carlo_result(values, 4.0, omega, N, samples)


def _monte_carlo_result(values: np.ndarray, box: float, omega: float, N: float, samples: int) -> WeightedConeAVR:
    estimate = box * float(np.mean(values)) / omega
    std_error = box * float(np.std(values, ddof=1)) / math.sqrt(samples) / omega
    logger.debug("Monte Carlo AVR", N=N, avr=estimate, std_error=std_error, samples=samples)
    return WeightedConeAVR(estimate, N, "monte_carlo", std_error, samples)


def avr_metric_cone(m_Z_total: float, params: SpectralParams) -> float:
    """m_Z(Z) / (N omega_N)."""
    if m_Z_total <= 0:
        raise DomainError("cross-section mass must be positive", m_Z_total=m_Z_total)
    return m_Z_total / (params.N * params.omega_N)


@dataclass(frozen=True)
class ConeFixture:
    """A space with positive asymptotic volume ratio in one of the three families."""

    kind: ConeKind
    N: float
    avr: float
    descriptor: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        """Validate configuration values."""
        if not 0 < self.avr <= 1 + 1e-12:
            raise FixtureError("avr must be in (0, 1]", avr=self.avr, kind=self.kind.value)
        if self.N <= 1:
            raise FixtureError("N must exceed 1", N=self.N)

    @classmethod
    def rotational(cls, f: Callable[[float], float], a: float, n: int) -> "ConeFixture":
        return cls(ConeKind.ROTATIONAL, float(n), avr_rotational(f, a, n), {"a": a, "n": n})

    @classmethod
    def weighted_sector(cls, alpha: float, fraction: float) -> "ConeFixture":
        """Plane sector covering ``fraction`` of the circle with w = |x|^alpha."""
        result = avr_weighted_cone(alpha, fraction, 2)
        return cls(ConeKind.WEIGHTED_CONE, result.N, result.avr, {"alpha": alpha, "fraction": fraction, "n": 2})

    @classmethod
    def weighted_orthant(cls, exponents: Sequence[float]) -> "ConeFixture":
        """Positive orthant with the monomial weight prod x_i^{A_i}."""
        A = [float(e) for e in exponents]
        result = avr_weighted_cone(sum(A), 2.0 ** -len(A), len(A), exponents=A)
        return cls(ConeKind.WEIGHTED_CONE, result.N, result.avr, {"exponents": A, "n": len(A)})

    @classmethod
    def metric_cone(cls, m_Z_total: float, N: float) -> "ConeFixture":
        params = SpectralParams.from_dimension(N)
        return cls(ConeKind.METRIC_CONE, params.N, avr_metric_cone(m_Z_total, params), {"m_Z_total": m_Z_total})

    @classmethod
    def metric_cone_with_avr(cls, avr: float, N: float) -> "ConeFixture":
        """Metric cone whose cross-section has mass avr N omega_N."""
        return cls.metric_cone(avr * N * unit_ball_volume(N), N)

    @property
    def params(self) -> SpectralParams:
        return SpectralParams.from_dimension(self.N)

    @property
    def exact_ball_law(self) -> bool:
        return self.kind is not ConeKind.ROTATIONAL

    def ball_measure(self, s: float) -> float:
        """m(B_s) = avr omega_N s^N around the tip."""
        return self.avr * unit_ball_volume(self.N) * s ** self.N

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary."""
        return {
            "kind": self.kind.value,
            "N": self.N,
            "avr": self.avr,
            "descriptor": dict(self.descriptor)
        }


def rhs_value(params: SpectralParams, avr: float, V: float) -> float:
    """AVR^{4/N} h_nu^4 (omega_N / V)^{4/N}."""
    if V <= 0:
        raise DomainError("domain measure must be positive", V=V)
    exponent = 4.0 / params.N
    return avr ** exponent * params.h ** 4 * (params.omega_N / V) ** exponent


def equality_radius(params: SpectralParams, avr: float, V: float) -> float:
    """Radius of the cone ball of measure V: AVR^{-1/N} (V/omega_N)^{1/N}."""
    if V <= 0:
        raise DomainError("domain measure must be positive", V=V)
    return avr ** (-1.0 / params.N) * (V / params.omega_N) ** (1.0 / params.N)


@dataclass
class SharpnessReport:
    """Computed principal frequency against the sharp lower bound."""

    fixture: ConeFixture
    V: float
    lhs: float
    rhs: float
    tolerance: float
    changes_sign: Optional[bool] = None
    details: Dict[str, Any] = field(default_factory=dict)

    @property
    def rel_gap(self) -> float:
        return (self.lhs - self.rhs) / self.rhs

    @property
    def passed(self) -> bool:
        return self.rel_gap >= -self.tolerance

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary."""
        return {
            "fixture": self.fixture.to_dict(),
            "V": self.V,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "rel_gap": self.rel_gap,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "changes_sign": self.changes_sign,
            "details": dict(self.details)
        }


def _require_cone(fixture: ConeFixture) -> None:
    if not fixture.exact_ball_law:
        raise FixtureError(
            "rotational fixtures have no exact ball law; use a cone",
            kind=fixture.kind.value
        )


def transplanted_extremal(fixture: ConeFixture, V: float) -> RadialProfile:
    """u(s) = U(AVR^{1/N} s) on [0, r], with U the extremal on the flat ball of measure V."""
    params = fixture.params
    R = (V / params.omega_N) ** (1.0 / params.N)
    return extremal_U(params, R).dilate(fixture.avr ** (1.0 / params.N))


def sharpness_equality_check(
    fixture: ConeFixture,
    V: float,
    tolerance: float = SHARPNESS_TOLERANCE,
    config: Optional[QuadratureConfig] = None
) -> SharpnessReport:
    """
    Rayleigh quotient of the transplanted extremal on the cone ball of measure V.

    Raises:
        FixtureError: If the fixture is not a cone
    """
    _require_cone(fixture)
    params = fixture.params
    r = equality_radius(params, fixture.avr, V)
    profile = transplanted_extremal(fixture, V)

    quotient = rayleigh_quotient_1d(profile, params, r, config)
    report = SharpnessReport(
        fixture=fixture,
        V=V,
        lhs=quotient.value,
        rhs=rhs_value(params, fixture.avr, V),
        tolerance=tolerance,
        details={
            "radius": r,
            "ball_measure": fixture.ball_measure(r),
            "abs_err_estimate": quotient.abs_err_estimate
        }
    )

    if abs(report.rel_gap) > tolerance:
        logger.warning("Equality case not reproduced", **fixture.to_dict(), V=V, rel_gap=report.rel_gap)
    else:
        logger.info("Equality case reproduced", N=fixture.N, avr=fixture.avr, V=V, rel_gap=report.rel_gap)
    return report


def annulus_inequality_check(
    fixture: ConeFixture,
    r1: float,
    r2: float,
    n: int = 1024,
    tolerance: float = ANNULUS_TOLERANCE,
    config: Optional[OracleConfig] = None
) -> SharpnessReport:
    """
    Finite-difference principal frequency of the cone annulus r1 < d < r2.

    r1 = 0 is the ball. The cone factor avr cancels in the Rayleigh quotient,
    so the clamped problem is solved on the model space.

    Raises:
        DomainError: If not 0 <= r1 < r2
        FixtureError: If the fixture is not a cone
    """
    _require_cone(fixture)
    if r1 < 0 or r1 >= r2:
        raise DomainError("need 0 <= r1 < r2", r1=r1, r2=r2)

    params = fixture.params
    config = config or OracleConfig()
    result = solve_clamped(RadialMesh(N=params.N, R=r2, n=n, r_inner=r1), config)
    V = fixture.ball_measure(r2) - fixture.ball_measure(r1)

    report = SharpnessReport(
        fixture=fixture,
        V=V,
        lhs=result.lambda_min,
        rhs=rhs_value(params, fixture.avr, V),
        tolerance=tolerance,
        changes_sign=result.changes_sign,
        details={"r1": r1, "r2": r2, "n": n, "residual": result.residual}
    )
    logger.info(
        "Annulus checked",
        N=params.N, avr=fixture.avr, r1=r1, r2=r2,
        rel_gap=report.rel_gap, changes_sign=result.changes_sign
    )
    return report


@dataclass
class AsymptoticReport:
    """L-dependence of the normalized integrals of u_L = f_0(h d / L)."""

    L_list: List[float]
    mass_quotients: List[float]
    energy_quotients: List[float]
    mass_target: float
    pivot_values: List[float]
    pivot_target: float
    tolerance: float

    @property
    def spread(self) -> float:
        """Largest relative deviation over L of either normalized integral."""
        deviations = [abs(q / self.mass_target - 1.0) for q in self.mass_quotients]
        first = self.energy_quotients[0]
        deviations += [abs(q / first - 1.0) for q in self.energy_quotients]
        deviations += [abs(p / self.pivot_target - 1.0) for p in self.pivot_values]
        return max(deviations)

    @property
    def passed(self) -> bool:
        return self.spread <= self.tolerance

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary."""
        return {
            "L_list": list(self.L_list),
            "mass_quotients": list(self.mass_quotients),
            "energy_quotients": list(self.energy_quotients),
            "mass_target": self.mass_target,
            "pivot_values": list(self.pivot_values),
            "pivot_target": self.pivot_target,
            "spread": self.spread,
            "passed": self.passed
        }


def asymptotic_limit_check(
    fixture: ConeFixture,
    L_list: Sequence[float],
    tolerance: float = LIMIT_TOLERANCE,
    config: Optional[QuadratureConfig] = None
) -> AsymptoticReport:
    """
    Check that int_{B_L} u_L^2 dm / L^N and L^{4-N} int_{B_L} (Delta u_L)^2 dm
    do not depend on L on a cone, and that Lambda(B_L) m(B_L)^{4/N} equals
    AVR^{4/N} h^4 omega_N^{4/N}.

    Raises:
        DomainError: If L_list is empty or holds a non-positive radius
        FixtureError: If the fixture is not a cone
    """
    _require_cone(fixture)
    if not L_list or min(L_list) <= 0:
        raise DomainError("L_list needs positive radii", L_list=list(L_list))

    config = config or QuadratureConfig()
    params = fixture.params
    N, h = params.N, params.h
    cone_factor = fixture.avr * N * params.omega_N
    f0 = f0_profile(params)

    unit_mass = weighted_integral(lambda s: f0(s) ** 2, N, h, config).value / h ** N
    mass_target = cone_factor * unit_mass

    mass_quotients: List[float] = []
    energy_quotients: List[float] = []
    pivots: List[float] = []
    for L in L_list:
        u_L = f0.dilate(h / L)
        mass = cone_factor * weighted_integral(lambda r: u_L(r) ** 2, N, L, config).value
        energy = cone_factor * weighted_integral(lambda r: laplacian_values(u_L, N, r) ** 2, N, L, config).value
        mass_quotients.append(mass / L ** N)
        energy_quotients.append(energy * L ** (4.0 - N))
        pivots.append(energy / mass * fixture.ball_measure(L) ** (4.0 / N))

    report = AsymptoticReport(
        L_list=[float(L) for L in L_list],
        mass_quotients=mass_quotients,
        energy_quotients=energy_quotients,
        mass_target=mass_target,
        pivot_values=pivots,
        pivot_target=fixture.avr ** (4.0 / N) * root_h(params.nu) ** 4 * params.omega_N ** (4.0 / N),
        tolerance=tolerance
    )
    logger.info("Asymptotic limits checked", N=N, avr=fixture.avr, spread=report.spread)
    return report


@dataclass
class PerturbationReport:
    """Rayleigh quotients of perturbed extremals against the unperturbed one."""

    base_quotient: float
    quotients: List[float]
    eps: float
    seed: int

    @property
    def min_excess(self) -> float:
        """Smallest relative increase over the base quotient."""
        return min(q / self.base_quotient - 1.0 for q in self.quotients)

    @property
    def all_larger(self) -> bool:
        return self.min_excess > 0

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary."""
        return {
            "base_quotient": self.base_quotient,
            "count": len(self.quotients),
            "min_excess": self.min_excess,
            "all_larger": self.all_larger,
            "eps": self.eps,
            "seed": self.seed
        }


def _random_clamped_polynomial(rng: np.random.Generator, r: float, degree: int = 3) -> Polynomial:
    """(1 - (s/r)^2)^2 times a random even polynomial in s/r, normalized to sup 1."""
    t = Polynomial([0.0, 1.0 / r])
    bump = (1.0 - t ** 2) ** 2
    coefficients = rng.normal(size=degree + 1)
    even = sum((c * t ** (2 * k) for k, c in enumerate(coefficients)), Polynomial([0.0]))
    poly = bump * even
    scale = float(np.max(np.abs(poly(np.linspace(0.0, r, 257)))))
    return poly / scale


def perturbed_trials(
    fixture: ConeFixture,
    V: float,
    count: int = 20,
    eps: float = 0.05,
    seed: int = 0,
    config: Optional[QuadratureConfig] = None
) -> PerturbationReport:
    """
    Rayleigh quotients of u + eps sup|u| phi for random clamped phi.

    Raises:
        DomainError: If count < 1 or eps <= 0
        FixtureError: If the fixture is not a cone
    """
    _require_cone(fixture)
    if count < 1 or eps <= 0:
        raise DomainError("need count >= 1 and eps > 0", count=count, eps=eps)

    params = fixture.params
    r = equality_radius(params, fixture.avr, V)
    base = transplanted_extremal(fixture, V)
    amplitude = eps * float(np.max(np.abs(base(np.linspace(0.0, r, 257)))))
    base_quotient = rayleigh_quotient_1d(base, params, r, config).value

    rng = np.random.default_rng(seed)
    quotients = []
    for _ in range(count):
        phi = RadialProfile.from_polynomial(_random_clamped_polynomial(rng, r), base.R, label="phi")
        trial = base.combine(phi, amplitude)
        quotients.append(rayleigh_quotient_1d(trial, params, r, config).value)

    report = PerturbationReport(base_quotient, quotients, eps, seed)
    logger.info("Perturbed trials evaluated", N=params.N, avr=fixture.avr, count=count, min_excess=report.min_excess)
    return report
