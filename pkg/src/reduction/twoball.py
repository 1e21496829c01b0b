"""
Coupled two-ball reduction.

Two balls of radii a <= b with a^N + b^N = 1 carry U and W, both solving
Delta^2 = h^4 on their ball, with U(a) = W(b) = 0, matched weighted fluxes
and Delta U(a) + Delta W(b) = 0. Nontrivial solutions exist exactly at the
zeros of the 4x4 boundary determinant, equivalently of
K_nu(h a) + K_nu(h b), with K_nu(s) = s^{2nu+1}(J_{nu+1}/J_nu + I_{nu+1}/I_nu)(s).
"""

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy import optimize, special

from ..model.model_space import SpectralParams
from ..special.bessel import Order, OrderLike, ratio_i, ratio_j, root_h, zero_j
from ..utils.errors import BracketError, ConvergenceError, DomainError, PlateToneError
from ..utils.logger import StructuredLogger
from ..utils.parallel import parallel_map

logger = StructuredLogger(__name__)

K_POLES = 10
BRACKET_XTOL = 1e-14
BISECT_MAXITER = 400
# Grid points below this are covered by the single-ball limit h_nu
A_MIN = 1e-3


def K(nu: OrderLike, s: float) -> float:
    """
    K_nu(s) = s^{2nu+1} (J_{nu+1}/J_nu(s) + I_{nu+1}/I_nu(s)), with K_nu(0) = 0.

    Raises:
        PoleError: If s is a zero of J_nu
    """
    nu_value = nu.nu if isinstance(nu, Order) else Order(float(nu)).nu
    s = float(s)
    if s == 0.0:
        return 0.0
    return s ** (2.0 * nu_value + 1.0) * (ratio_j(nu_value, s) + ratio_i(nu_value, s))


@dataclass(frozen=True)
class TwoBallInstance:
    """Radii a <= b with a^N + b^N = 1 and the merged pole ladder of h -> K(ha) + K(hb)."""

    params: SpectralParams
    a: float
    b: float
    pole_ladder: Tuple[float, ...]

    def __post_init__(self):
        """Validate configuration values."""
        N = self.params.N
        if not 0 < self.a <= self.b:
            raise DomainError("radii must satisfy 0 < a <= b", a=self.a, b=self.b)
        if abs(self.a ** N + self.b ** N - 1.0) > 1e-12:
            raise DomainError("radii must satisfy a^N + b^N = 1", a=self.a, b=self.b, N=N)
        if any(q <= p for p, q in zip(self.pole_ladder, self.pole_ladder[1:])):
            raise DomainError("pole ladder must be strictly increasing")

    @classmethod
    def from_a(cls, params: SpectralParams, a: float, k_poles: int = K_POLES) -> "TwoBallInstance":
        """
        Instance for the smaller radius a in (0, 2^{-1/N}].

        Raises:
            DomainError: If a is outside (0, 2^{-1/N}]
        """
        N = params.N
        a_sym = 2.0 ** (-1.0 / N)
        if not 0 < a <= a_sym * (1.0 + 1e-12):
            raise DomainError(f"a must be in (0, {a_sym}]", a=a, N=N)
        a = min(float(a), a_sym)
        b = (1.0 - a ** N) ** (1.0 / N)
        if b < a:
            b = a

        zeros = np.array([zero_j(params.nu, k) for k in range(1, k_poles + 1)])
        ladder = np.unique(np.concatenate([zeros / a, zeros / b]))
        return cls(params=params, a=a, b=b, pole_ladder=tuple(float(p) for p in ladder))

    @property
    def is_symmetric(self) -> bool:
        return math.isclose(self.a, self.b, rel_tol=1e-12)


@dataclass(frozen=True)
class RootResult:
    """First positive root h_nu(a) with its bracket and K-sum residual."""

    h_of_a: float
    bracket: Tuple[float, float]
    residual: float


def determinant_matrix(nu: float, a: float, b: float, h: float) -> np.ndarray:
    """
    Boundary-condition matrix acting on (A_1, A_2, B_1, B_2):
    both Dirichlet conditions, flux matching and the Laplacian sum.
    """
    x, y = h * a, h * b
    ja, ia = special.jv(nu, x), special.iv(nu, x)
    jb, ib = special.jv(nu, y), special.iv(nu, y)
    ja1, ia1 = special.jv(nu + 1.0, x), special.iv(nu + 1.0, x)
    jb1, ib1 = special.jv(nu + 1.0, y), special.iv(nu + 1.0, y)
    fa, fb = a ** (nu + 1.0), b ** (nu + 1.0)
    la, lb = a ** (-nu), b ** (-nu)
    return np.array([
        [ja, ia, 0.0, 0.0],
        [0.0, 0.0, jb, ib],
        [-ja1 * fa, ia1 * fa, jb1 * fb, -ib1 * fb],
        [-ja * la, ia * la, -jb * lb, ib * lb],
    ])


def determinant4(inst: TwoBallInstance, h: float) -> float:
    """
    The 4x4 boundary determinant at h.

    No ratios are formed, so poles of K show up as ordinary values.
    """
    if h <= 0:
        raise DomainError("h must be positive", h=h)
    return float(np.linalg.det(determinant_matrix(inst.params.nu.nu, inst.a, inst.b, h)))


def _factorized(nu: float, a: float, b: float, h: float) -> float:
    x, y = h * a, h * b
    ja, ia = special.jv(nu, x), special.iv(nu, x)
    jb, ib = special.jv(nu, y), special.iv(nu, y)
    # S(s) = J_nu I_{nu+1} + I_nu J_{nu+1} = J_nu I_nu K_nu(s)/s^{2nu+1}, pole free
    sa = ja * special.iv(nu + 1.0, x) + ia * special.jv(nu + 1.0, x)
    sb = jb * special.iv(nu + 1.0, y) + ib * special.jv(nu + 1.0, y)
    fa, fb = a ** (nu + 1.0), b ** (nu + 1.0)
    la, lb = a ** (-nu), b ** (-nu)
    return float(-2.0 * (fa * lb * jb * ib * sa + fb * la * ja * ia * sb))


def determinant4_factorized(inst: TwoBallInstance, h: float) -> float:
    """
    Closed product form of the determinant,
    -2 (ab)^{-nu} h^{-2nu-1} J_nu(ha) I_nu(ha) J_nu(hb) I_nu(hb) (K(ha) + K(hb)),
    written without ratios so it is finite at the poles of K.
    """
    if h <= 0:
        raise DomainError("h must be positive", h=h)
    return _factorized(inst.params.nu.nu, inst.a, inst.b, h)


def k_sum(inst: TwoBallInstance, h: float) -> float:
    """K_nu(h a) + K_nu(h b)."""
    return K(inst.params.nu, h * inst.a) + K(inst.params.nu, h * inst.b)


def symmetric_endpoint(params: SpectralParams) -> float:
    """Merged-pole value h_nu(2^{-1/N}) = 2^{1/N} j_{nu,1}."""
    return 2.0 ** (1.0 / params.N) * zero_j(params.nu, 1)


def root_bracket(inst: TwoBallInstance) -> Tuple[float, float]:
    """Inter-pole bracket (j_{nu,1}/b, min(j_{nu,1}/a, j_{nu,2}/b))."""
    j1 = zero_j(inst.params.nu, 1)
    j2 = zero_j(inst.params.nu, 2)
    return j1 / inst.b, min(j1 / inst.a, j2 / inst.b)


def first_root_h_of_a(inst: TwoBallInstance) -> RootResult:
    """
    Lowest positive zero of h -> K_nu(ha) + K_nu(hb), by bisection inside
    the first inter-pole bracket.

    Inside the bracket J_nu(ha) > 0 > J_nu(hb), so the factorized determinant
    has the sign of the K-sum and stays finite at both ends. It is negative
    at the lower pole and positive at the upper one.

    Raises:
        DomainError: If a = b (use symmetric_endpoint)
        BracketError: If the bracket shows no sign change
        ConvergenceError: If bisection stalls
    """
    if inst.is_symmetric:
        raise DomainError(
            "a = b merges the bracketing poles; use symmetric_endpoint",
            a=inst.a, b=inst.b
        )

    nu = inst.params.nu.nu
    lo, hi = root_bracket(inst)

    def f(h: float) -> float:
        return _factorized(nu, inst.a, inst.b, h)

    f_lo, f_hi = f(lo), f(hi)
    if not (f_lo < 0 < f_hi):
        raise BracketError(
            "K-sum shows no sign change across the inter-pole bracket",
            a=inst.a, b=inst.b, lo=lo, hi=hi, f_lo=f_lo, f_hi=f_hi
        )

    try:
        root = optimize.bisect(f, lo, hi, xtol=BRACKET_XTOL, maxiter=BISECT_MAXITER)
    except RuntimeError as e:
        raise ConvergenceError(
            f"Bisection for h(a) did not converge: {e}",
            iterations=BISECT_MAXITER,
            a=inst.a
        )

    ka = K(nu, root * inst.a)
    kb = K(nu, root * inst.b)
    residual = (ka + kb) / (1.0 + abs(ka) + abs(kb))
    return RootResult(h_of_a=float(root), bracket=(lo, hi), residual=float(residual))


@dataclass
class SweepRecord:
    """One grid point of a reduction sweep."""

    a: float
    b: Optional[float] = None
    h_of_a: Optional[float] = None
    h_nu: Optional[float] = None
    margin: Optional[float] = None
    success: bool = True
    error: Optional[str] = None
    error_type: Optional[str] = None

    @property
    def is_counterexample(self) -> bool:
        return self.success and self.margin is not None and self.margin <= 0

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary."""
        return asdict(self)


@dataclass
class SweepReport:
    """Records of a sweep plus its smallest margin h_nu(a) - h_nu."""

    N: float
    h_nu: float
    records: List[SweepRecord] = field(default_factory=list)

    @property
    def min_margin(self) -> float:
        margins = [r.margin for r in self.records if r.success and r.margin is not None]
        return min(margins) if margins else float("nan")

    @property
    def argmin_a(self) -> Optional[float]:
        candidates = [r for r in self.records if r.success and r.margin is not None]
        if not candidates:
            return None
        return min(candidates, key=lambda r: r.margin).a

    @property
    def endpoint_margin(self) -> Optional[float]:
        """Margin at the symmetric endpoint a = 2^{-1/N}, i.e. 2^{1/N} j_{nu,1} - h_nu."""
        if not self.records or not self.records[-1].success:
            return None
        return self.records[-1].margin

    @property
    def counterexamples(self) -> List[SweepRecord]:
        return [r for r in self.records if r.is_counterexample]

    @property
    def failures(self) -> List[SweepRecord]:
        return [r for r in self.records if not r.success]

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary."""
        return {
            "N": self.N,
            "h_nu": self.h_nu,
            "min_margin": self.min_margin,
            "argmin_a": self.argmin_a,
            "endpoint_margin": self.endpoint_margin,
            "counterexamples": len(self.counterexamples),
            "failures": len(self.failures),
            "records": [r.to_dict() for r in self.records]
        }


def sweep_grid(params: SpectralParams, grid_size: int) -> List[float]:
    """Uniform grid a_k = k 2^{-1/N} / grid_size, dropping points below 1e-3."""
    if grid_size < 1:
        raise DomainError("grid_size must be positive", grid_size=grid_size)
    a_sym = 2.0 ** (-1.0 / params.N)
    grid = [a_sym * k / grid_size for k in range(1, grid_size + 1)]
    grid[-1] = a_sym
    return [a for a in grid if a >= A_MIN]


def _evaluate_point(params: SpectralParams, h_nu: float, a: float) -> SweepRecord:
    try:
        inst = TwoBallInstance.from_a(params, a)
        if inst.is_symmetric:
            h_of_a = symmetric_endpoint(params)
        else:
            h_of_a = first_root_h_of_a(inst).h_of_a
        return SweepRecord(a=a, b=inst.b, h_of_a=h_of_a, h_nu=h_nu, margin=h_of_a - h_nu)
    except PlateToneError as e:
        logger.warning(
            "Sweep point failed",
            a=a, N=params.N, error=str(e), error_type=type(e).__name__
        )
        return SweepRecord(a=a, h_nu=h_nu, success=False, error=str(e), error_type=type(e).__name__)


def reduction_sweep(params: SpectralParams, grid_size: int, workers: int = 1) -> SweepReport:
    """
    Compute h_nu(a) on a uniform grid of (0, 2^{-1/N}] and compare with h_nu.

    Args:
        params: Dimension parameters
        grid_size: Number of grid intervals
        workers: Worker pool size

    Returns:
        SweepReport; violations appear as counterexample records
    """
    h_nu = root_h(params.nu)
    grid = sweep_grid(params, grid_size)

    logger.info("Reduction sweep started", N=params.N, points=len(grid), workers=workers)
    records = parallel_map(lambda a: _evaluate_point(params, h_nu, a), grid, workers=workers)
    report = SweepReport(N=params.N, h_nu=h_nu, records=records)

    logger.info(
        "Reduction sweep completed",
        N=params.N,
        min_margin=report.min_margin,
        argmin_a=report.argmin_a,
        counterexamples=len(report.counterexamples),
        failures=len(report.failures)
    )
    return report
