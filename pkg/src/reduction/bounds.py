"""
Negativity certificates for the two-ball reduction.

If A(nu, a) + B(nu, a) < 0 on the admissible interval (0, a_max), then
K_nu(h_nu a) + K_nu(h_nu b) < 0 there and h_nu(a) > h_nu follows. A is
the first-zero term, B the tail over the remaining zeros of J_nu. Both are
bounded uniformly in a by alpha(nu) and beta(nu); a negative alpha + beta
certifies the whole interval at once.
"""

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy import optimize

from ..config.settings import BoundsConfig
from ..special.bessel import Order, root_config, root_h, zero_j
from ..utils.errors import BracketError, DomainError, PlateToneError
from ..utils.logger import StructuredLogger
from ..utils.parallel import parallel_map

logger = StructuredLogger(__name__)

# alpha is maximized on [0, a_max - A_MAX_CLIP]
A_MAX_CLIP = 1e-9
# Rounding allowance on alpha + beta, relative to |alpha| + |beta|
ROUNDING_FLOOR = 64.0 * float(np.finfo(float).eps)
# Brent refinement tolerance on the argmax of A
REFINE_XATOL = 1e-12
# Relative step of the central differences that propagate root errors
SENSITIVITY_STEP = 1e-6
N0_BRACKET = (3.0, 3.6)

_DEFAULT_BOUNDS = BoundsConfig()


@dataclass(frozen=True)
class BoundConstants:
    """Constants entering A, B, alpha and beta for one dimension."""

    nu: Order
    N: float
    h: float
    j1: float
    j2: float
    delta: float
    delta_printed: float
    a_max: float

    def __post_init__(self):
        """Validate configuration values."""
        if not 0 < self.delta < 1:
            raise DomainError("delta must be in (0, 1)", N=self.N, delta=self.delta)
        if not 0 < self.a_max < 2.0 ** (-1.0 / self.N):
            raise DomainError(
                "a_max must lie in (0, 2^{-1/N}); N is at or beyond the critical dimension",
                N=self.N, a_max=self.a_max
            )

    @classmethod
    def from_dimension(cls, N: float) -> "BoundConstants":
        """
        Compute h_nu, the first two zeros, both delta readings and a_max.

        delta = h^4/j_2^4 makes j_k^4 - (h a)^4 >= j_k^4 (1 - delta) valid;
        the reading with j_2^2 exceeds 1 and is carried only for reporting.
        """
        nu = Order.from_dimension(N)
        h = root_h(nu)
        j1 = zero_j(nu, 1)
        j2 = zero_j(nu, 2)
        delta = h ** 4 / j2 ** 4
        delta_printed = h ** 4 / j2 ** 2
        if delta_printed >= 1:
            logger.warning(
                "delta with exponent 2 exceeds 1; using exponent 4",
                N=N, delta=delta, delta_printed=delta_printed
            )
        ratio = (j1 / h) ** N
        a_max = (1.0 - ratio) ** (1.0 / N) if ratio < 1 else 0.0
        return cls(
            nu=nu, N=float(N), h=h, j1=j1, j2=j2,
            delta=delta, delta_printed=delta_printed, a_max=a_max
        )

    def partner(self, a: float) -> float:
        """b = (1 - a^N)^{1/N}."""
        return (1.0 - a ** self.N) ** (1.0 / self.N)


@dataclass(frozen=True)
class BoundedSum:
    """A truncated series value with an upper bound on the omitted tail."""

    value: float
    tail_bound: float


def _check_admissible(c: BoundConstants, a: float) -> float:
    a = float(a)
    if not 0 <= a < c.a_max:
        raise DomainError(f"a must be in [0, {c.a_max})", a=a, N=c.N)
    return a


def A_from_radii(c: BoundConstants, a: float, b: float) -> float:
    """
    (h^4 (ab)^{4-N} - j_1^4 (a^{4-N} + b^{4-N})) / ((j_1^4 - (ha)^4)((hb)^4 - j_1^4)).

    Symmetric in (a, b) since both factors of the denominator change sign together.
    """
    p = 4.0 - c.N
    j1_4 = c.j1 ** 4
    numerator = c.h ** 4 * (a * b) ** p - j1_4 * (a ** p + b ** p)
    denominator = (j1_4 - (c.h * a) ** 4) * ((c.h * b) ** 4 - j1_4)
    return numerator / denominator


def A_term(c: BoundConstants, a: float) -> float:
    """
    First-zero term A(nu, a) for a in [0, a_max).

    Raises:
        DomainError: If a is not admissible or a denominator factor is not positive
    """
    a = _check_admissible(c, a)
    b = c.partner(a)
    j1_4 = c.j1 ** 4
    if not j1_4 - (c.h * a) ** 4 > 0 or not (c.h * b) ** 4 - j1_4 > 0:
        raise DomainError("denominator of A is not positive", a=a, b=b, N=c.N)
    return A_from_radii(c, a, b)


def rayleigh_sum(nu: float) -> float:
    """Sum over k >= 1 of 1/j_{nu,k}^4, equal to 1/(16 (nu+1)^2 (nu+2))."""
    return 1.0 / (16.0 * (nu + 1.0) ** 2 * (nu + 2.0))


def _tail_offset(nu: float) -> float:
    # j_{nu,k} >= (k + min(nu, 1/2)/2 - 1/4) pi on the supported orders
    return min(nu, 0.5) / 2.0 - 0.25


def zero_tail_bound(nu: float, k_max: int) -> float:
    """Upper bound on the sum over k > k_max of 1/j_{nu,k}^4."""
    return 1.0 / (3.0 * math.pi ** 4 * (k_max + _tail_offset(nu)) ** 3)


@lru_cache(maxsize=64)
def _zeros(nu: float, k_max: int) -> np.ndarray:
    zeros = np.array([zero_j(nu, k) for k in range(1, k_max + 1)])
    zeros.setflags(write=False)
    return zeros


def rayleigh_sum_truncated(nu: float, k_max: int) -> BoundedSum:
    """Partial sum of 1/j_{nu,k}^4 for k <= k_max with the tail bound."""
    zeros = _zeros(Order(nu).nu, k_max)
    return BoundedSum(float(np.sum(zeros ** -4.0)), zero_tail_bound(nu, k_max))


def power_sum_bound(N: float) -> float:
    """
    max of a^{4-N} + b^{4-N} over a^N + b^N = 1.

    The maximum is 2^{2-4/N} at a = b when N >= 2 and 1 at a = 0 when N < 2.
    Below N = 2 the factor 2^{2-4/N} alone is smaller than 1 and would not
    bound the sum, so the larger value 1 is used there.
    """
    return max(1.0, 2.0 ** (2.0 - 4.0 / N))


def beta_bound(c: BoundConstants) -> float:
    """
    beta(nu) = (P/(1 - delta)) (1/(16 (nu+1)^2 (nu+2)) - 1/j_1^4), where
    P = power_sum_bound(N) is 2^{2-4/N} for N >= 2 and 1 below.

    Raises:
        DomainError: If delta >= 1
    """
    if c.delta >= 1:
        raise DomainError("delta >= 1 invalidates the bound chain", N=c.N, delta=c.delta)
    tail = rayleigh_sum(c.nu.nu) - c.j1 ** -4
    return power_sum_bound(c.N) / (1.0 - c.delta) * tail


def B_direct(c: BoundConstants, a: float, k_max: Optional[int] = None) -> BoundedSum:
    """
    Tail term B(nu, a) summed directly over 2 <= k <= k_max.

    Beyond k_max each term is at most 1/(j_k^4 (1 - delta)) and j_k is
    bounded below by its McMahon leading term, giving the tail bound.
    """
    k_max = k_max or _DEFAULT_BOUNDS.k_max
    a = _check_admissible(c, a)
    b = c.partner(a)
    p = 4.0 - c.N
    zeros4 = _zeros(c.nu.nu, k_max)[1:] ** 4
    value = (
        a ** p * np.sum(1.0 / (zeros4 - (c.h * a) ** 4))
        + b ** p * np.sum(1.0 / (zeros4 - (c.h * b) ** 4))
    )
    tail = (a ** p + b ** p) / (1.0 - c.delta) * zero_tail_bound(c.nu.nu, k_max)
    return BoundedSum(float(value), float(tail))


def _maximize(c: BoundConstants, scan_points: int) -> Tuple[float, float, float]:
    upper = c.a_max - A_MAX_CLIP
    grid = np.linspace(0.0, upper, scan_points)
    values = np.array([A_term(c, a) for a in grid])
    best = int(np.argmax(values))

    lo = grid[max(best - 1, 0)]
    hi = grid[min(best + 1, scan_points - 1)]
    refined = optimize.minimize_scalar(
        lambda a: -A_term(c, a),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": REFINE_XATOL}
    )
    if refined.success and -refined.fun > values[best]:
        return float(refined.x), float(-refined.fun), REFINE_XATOL
    return float(grid[best]), float(values[best]), float(grid[1] - grid[0])


def maximize_A(c: BoundConstants, scan_points: Optional[int] = None) -> Tuple[float, float]:
    """
    Dense scan of A over [0, a_max - 1e-9] refined by bounded Brent search
    around the best grid point.

    Returns:
        (argmax, max)
    """
    argmax, alpha, _ = _maximize(c, scan_points or _DEFAULT_BOUNDS.scan_points)
    return argmax, alpha


def alpha_max(c: BoundConstants, scan_points: Optional[int] = None) -> float:
    """alpha(nu), the maximum of A(nu, .) over the admissible interval."""
    argmax, alpha = maximize_A(c, scan_points)
    logger.debug("alpha maximized", N=c.N, argmax=argmax, alpha=alpha)
    return alpha


def _root_error(c: BoundConstants, argmax: float) -> float:
    """Change of alpha + beta when h, j_1 and j_2 move by their root tolerance."""
    tolerance = root_config().tolerance
    b = c.partner(argmax)
    constants = (c.h, c.j1, c.j2)

    def total(h: float, j1: float, j2: float) -> float:
        varied = replace(c, h=h, j1=j1, j2=j2, delta=h ** 4 / j2 ** 4)
        return A_from_radii(varied, argmax, b) + beta_bound(varied)

    error = 0.0
    for index, x in enumerate(constants):
        step = SENSITIVITY_STEP * x
        up = list(constants)
        down = list(constants)
        up[index] += step
        down[index] -= step
        slope = abs(total(*up) - total(*down)) / (2.0 * step)
        error += slope * tolerance * max(1.0, x)
    return error


def _refinement_error(c: BoundConstants, argmax: float, alpha: float, width: float) -> float:
    """Largest change of A within one refinement width of the argmax."""
    upper = c.a_max - A_MAX_CLIP
    neighbours = [min(max(argmax + sign * width, 0.0), upper) for sign in (-1.0, 1.0)]
    return max(abs(A_term(c, a) - alpha) for a in neighbours)


def _series_error(c: BoundConstants, k_max: int) -> float:
    """
    The closed-form Rayleigh sum must lie in the enclosure given by the
    partial sum to k_max and its tail bound; the width carries into beta.
    """
    truncated = rayleigh_sum_truncated(c.nu.nu, k_max)
    gap = rayleigh_sum(c.nu.nu) - truncated.value
    if not -ROUNDING_FLOOR <= gap <= truncated.tail_bound:
        logger.warning(
            "Rayleigh sum outside its truncation enclosure",
            N=c.N, gap=gap, tail_bound=truncated.tail_bound
        )
    return power_sum_bound(c.N) / (1.0 - c.delta) * max(truncated.tail_bound, abs(gap))


@dataclass
class NegativityReport:
    """alpha + beta for one dimension and whether its negativity is certified."""

    nu: Order
    N: float
    alpha: Optional[float] = None
    beta: Optional[float] = None
    sum: Optional[float] = None
    error_estimate: Optional[float] = None
    error_terms: Dict[str, float] = field(default_factory=dict)
    argmax: Optional[float] = None
    delta: Optional[float] = None
    delta_printed: Optional[float] = None
    certified_negative: bool = False
    note: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary."""
        return {
            "nu": self.nu.nu,
            "N": self.N,
            "alpha": self.alpha,
            "beta": self.beta,
            "sum": self.sum,
            "error_estimate": self.error_estimate,
            "error_terms": dict(self.error_terms),
            "argmax": self.argmax,
            "delta": self.delta,
            "delta_printed": self.delta_printed,
            "certified_negative": self.certified_negative,
            "note": self.note
        }


def certify(
    N: float,
    scan_points: Optional[int] = None,
    config: Optional[BoundsConfig] = None
) -> NegativityReport:
    """
    alpha + beta at dimension N.

    The error estimate adds four terms: the root tolerances of h, j_1 and
    j_2 propagated through alpha + beta, the change of A within the final
    refinement width of its argmax, the Rayleigh-sum enclosure from the
    partial sum to k_max and its tail bound, and a rounding allowance.
    Certified only when alpha + beta plus that estimate stays below zero.
    Dimensions where the constants are not admissible come back uncertified
    with a note.
    """
    config = config or _DEFAULT_BOUNDS
    nu = Order.from_dimension(N)
    try:
        c = BoundConstants.from_dimension(N)
        argmax, alpha, width = _maximize(c, scan_points or config.scan_points)
        beta = beta_bound(c)
        terms = {
            "roots": _root_error(c, argmax),
            "refinement": _refinement_error(c, argmax, alpha, width),
            "series": _series_error(c, config.k_max),
            "rounding": ROUNDING_FLOOR * (abs(alpha) + abs(beta)),
        }
    except PlateToneError as e:
        logger.warning("Certification not possible", N=N, error=str(e), error_type=type(e).__name__)
        return NegativityReport(nu=nu, N=N, note=str(e))

    total = alpha + beta
    error = sum(terms.values())
    report = NegativityReport(
        nu=nu, N=N, alpha=alpha, beta=beta, sum=total, error_estimate=error,
        error_terms=terms, argmax=argmax, delta=c.delta, delta_printed=c.delta_printed,
        certified_negative=total + error < 0
    )
    if not report.certified_negative:
        logger.warning("alpha + beta not certified negative", N=N, sum=total, error_estimate=error)
    return report


@dataclass
class NegativityScan:
    """Per-dimension reports and the maximal certified sub-intervals."""

    reports: List[NegativityReport] = field(default_factory=list)
    intervals: List[Tuple[float, float]] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary."""
        return {
            "reports": [r.to_dict() for r in self.reports],
            "intervals": [list(i) for i in self.intervals]
        }


def certified_intervals(reports: List[NegativityReport]) -> List[Tuple[float, float]]:
    """Maximal runs of consecutive certified dimensions as (first N, last N)."""
    intervals: List[Tuple[float, float]] = []
    start: Optional[float] = None
    last: Optional[float] = None
    for report in reports:
        if report.certified_negative:
            if start is None:
                start = report.N
            last = report.N
        elif start is not None:
            intervals.append((start, last))
            start = None
    if start is not None:
        intervals.append((start, last))
    return intervals


def negativity_scan(
    N_lo: float,
    N_hi: float,
    step: float,
    scan_points: Optional[int] = None,
    workers: int = 1,
    config: Optional[BoundsConfig] = None
) -> NegativityScan:
    """
    Certify alpha + beta < 0 on the grid N_lo, N_lo + step, ..., N_hi.

    Args:
        N_lo: First dimension
        N_hi: Last dimension
        step: Grid step
        scan_points: Scan size for alpha
        workers: Worker pool size
        config: Default scan size and k_max of the series enclosure

    Returns:
        NegativityScan with reports and certified intervals
    """
    if not N_lo < N_hi:
        raise DomainError("N_lo must be below N_hi", N_lo=N_lo, N_hi=N_hi)
    if step <= 0:
        raise DomainError("step must be positive", step=step)

    count = int(math.floor((N_hi - N_lo) / step + 1e-9)) + 1
    grid = [round(N_lo + k * step, 12) for k in range(count)]

    logger.info("Negativity scan started", N_lo=N_lo, N_hi=N_hi, points=len(grid))
    reports = parallel_map(lambda N: certify(N, scan_points, config), grid, workers=workers)
    scan = NegativityScan(reports=reports, intervals=certified_intervals(reports))

    logger.info(
        "Negativity scan completed",
        certified=sum(r.certified_negative for r in reports),
        intervals=scan.intervals
    )
    return scan


def margin_function(N: float) -> float:
    """g(N) = 2^{1/N} j_{nu,1} - h_nu with nu = N/2 - 1."""
    nu = Order.from_dimension(N)
    return 2.0 ** (1.0 / N) * zero_j(nu, 1) - root_h(nu)


def compute_N0(tol: float = 1e-5) -> float:
    """
    Critical dimension, the sign change of g on [3, 3.6].

    Raises:
        BracketError: If g does not change sign on the bracket
    """
    lo, hi = N0_BRACKET
    g_lo, g_hi = margin_function(lo), margin_function(hi)
    if g_lo * g_hi >= 0:
        raise BracketError("margin function has no sign change", lo=lo, hi=hi, g_lo=g_lo, g_hi=g_hi)
    N0 = optimize.bisect(margin_function, lo, hi, xtol=tol)
    logger.info("Critical dimension computed", N0=N0, tol=tol)
    return float(N0)
