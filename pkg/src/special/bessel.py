"""
Real-order Bessel functions J_nu and I_nu on the supported order range.

Values come from scipy.special (Cephes/AMOS); this module adds argument
validation, error estimates, backward-stable ratios J_{nu+1}/J_nu and
I_{nu+1}/I_nu by continued fractions, the zeros j_{nu,k}, and the first
positive root h_nu of the cross-product J_nu I'_nu - J'_nu I_nu.

Supported orders are nu in [-1/2, 1], which covers dimensions N in (1, 4)
through nu = N/2 - 1.
"""

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, List, Tuple, Union

import numpy as np
from scipy import optimize, special

from ..config.settings import RootConfig
from ..utils.errors import BracketError, ConvergenceError, DomainError, PoleError, RangeError
from ..utils.logger import StructuredLogger

logger = StructuredLogger(__name__)

NU_MIN = -0.5
NU_MAX = 1.0

# Beyond this the unscaled I_nu is returned through e^s * ive
SCALED_I_THRESHOLD = 30.0
# exp overflows just above 709.78
I_OVERFLOW_ARGUMENT = 700.0

_EPS = float(np.finfo(float).eps)
_ULP_FACTOR = 64.0
_CF_MAX_TERMS = 100_000

_roots = RootConfig()


@dataclass(frozen=True)
class Order:
    """Bessel order nu, tied to the dimension by nu = N/2 - 1."""

    nu: float

    def __post_init__(self):
        """Validate configuration values."""
        if not math.isfinite(self.nu):
            raise DomainError("nu must be finite", nu=self.nu)
        if not NU_MIN <= self.nu <= NU_MAX:
            raise DomainError(
                f"nu must be in [{NU_MIN}, {NU_MAX}]",
                nu=self.nu
            )

    @classmethod
    def from_dimension(cls, N: float) -> "Order":
        """Order for dimension N."""
        return cls(N / 2.0 - 1.0)

    @property
    def dimension(self) -> float:
        """Dimension N = 2 nu + 2."""
        return 2.0 * self.nu + 2.0


OrderLike = Union[Order, float, int]


@dataclass(frozen=True)
class EvalResult:
    """A function value with an absolute error estimate."""

    value: float
    abs_err_estimate: float


@dataclass(frozen=True)
class ZeroTable:
    """Positive zeros j_{nu,1} < j_{nu,2} < ... of J_nu."""

    nu: Order
    zeros: Tuple[float, ...]

    def __post_init__(self):
        """Validate configuration values."""
        if not self.zeros or any(z <= 0 for z in self.zeros):
            raise DomainError("zeros must be a non-empty list of positive reals")
        if any(b <= a for a, b in zip(self.zeros, self.zeros[1:])):
            raise DomainError("zeros must be strictly increasing", nu=self.nu.nu)

    def __len__(self) -> int:
        return len(self.zeros)

    def __getitem__(self, k: int) -> float:
        """1-based access: table[1] is j_{nu,1}."""
        if k < 1:
            raise IndexError("zero index starts at 1")
        return self.zeros[k - 1]


def _order(nu: OrderLike) -> float:
    if isinstance(nu, Order):
        return nu.nu
    return Order(float(nu)).nu


def _argument(s: float, name: str = "s") -> float:
    s = float(s)
    if not math.isfinite(s):
        raise DomainError(f"{name} must be finite", **{name: s})
    if s < 0:
        raise DomainError(f"{name} must be non-negative", **{name: s})
    return s


def _positive(s: float) -> float:
    s = _argument(s)
    if s == 0.0:
        raise DomainError("s must be positive", s=s)
    return s


def bessel_j(nu: OrderLike, s: float) -> EvalResult:
    """
    Bessel function of the first kind J_nu(s).

    Args:
        nu: Order in [-1/2, 1]
        s: Argument, s >= 0

    Returns:
        EvalResult with J_nu(s)

    Raises:
        DomainError: If s is negative or not finite
        RangeError: If the value is infinite (nu < 0 at s = 0)
    """
    nu = _order(nu)
    s = _argument(s)
    if s == 0.0:
        if nu == 0.0:
            return EvalResult(1.0, 0.0)
        if nu < 0.0:
            raise RangeError("J_nu(0) is infinite for nu < 0", nu=nu, s=s)
        return EvalResult(0.0, 0.0)

    value = float(special.jv(nu, s))
    if not math.isfinite(value):
        raise RangeError("J_nu overflow", nu=nu, s=s)

    # absolute accuracy near zeros is relative to the oscillation envelope
    envelope = min(1.0, math.sqrt(2.0 / (math.pi * s)))
    return EvalResult(value, _ULP_FACTOR * _EPS * max(abs(value), envelope))


def bessel_i(nu: OrderLike, s: float) -> EvalResult:
    """
    Modified Bessel function of the first kind I_nu(s).

    For s > 30 the value is assembled as e^s * (e^{-s} I_nu(s)) from the
    scaled evaluation.

    Raises:
        DomainError: If s is negative or not finite
        RangeError: If I_nu(s) overflows or is infinite at s = 0
    """
    nu = _order(nu)
    s = _argument(s)
    if s == 0.0:
        if nu == 0.0:
            return EvalResult(1.0, 0.0)
        if nu < 0.0:
            raise RangeError("I_nu(0) is infinite for nu < 0", nu=nu, s=s)
        return EvalResult(0.0, 0.0)
    if s > I_OVERFLOW_ARGUMENT:
        raise RangeError("I_nu overflows; use bessel_i_scaled", nu=nu, s=s)

    if s > SCALED_I_THRESHOLD:
        value = float(special.ive(nu, s)) * math.exp(s)
    else:
        value = float(special.iv(nu, s))
    if not math.isfinite(value):
        raise RangeError("I_nu overflow", nu=nu, s=s)
    return EvalResult(value, _ULP_FACTOR * _EPS * abs(value))


def bessel_i_scaled(nu: OrderLike, s: float) -> EvalResult:
    """Exponentially scaled e^{-s} I_nu(s); finite for every s > 0."""
    nu = _order(nu)
    s = _argument(s)
    if s == 0.0 and nu < 0.0:
        raise RangeError("I_nu(0) is infinite for nu < 0", nu=nu, s=s)
    value = float(special.ive(nu, s))
    return EvalResult(value, _ULP_FACTOR * _EPS * abs(value))


def derivative_j(nu: OrderLike, s: float) -> float:
    """J'_nu(s) = J_{nu-1}(s) - (nu/s) J_nu(s)."""
    nu = _order(nu)
    s = _positive(s)
    return float(special.jv(nu - 1.0, s) - nu / s * special.jv(nu, s))


def derivative_i(nu: OrderLike, s: float) -> float:
    """I'_nu(s) = I_{nu-1}(s) - (nu/s) I_nu(s)."""
    nu = _order(nu)
    s = _positive(s)
    return float(special.iv(nu - 1.0, s) - nu / s * special.iv(nu, s))


def _lentz(b: Callable[[int], float], sign: float, nu: float, s: float) -> float:
    """
    Evaluate b(1) + sign/(b(2) + sign/(b(3) + ...)) by the modified Lentz method.
    """
    tiny = 1e-300
    f = b(1)
    if f == 0.0:
        f = tiny
    c = f
    d = 0.0
    for k in range(2, _CF_MAX_TERMS):
        bk = b(k)
        d = bk + sign * d
        if d == 0.0:
            d = tiny
        c = bk + sign / c
        if c == 0.0:
            c = tiny
        d = 1.0 / d
        delta = c * d
        f *= delta
        if abs(delta - 1.0) < _EPS:
            return f
    raise ConvergenceError(
        "Continued fraction did not converge",
        iterations=_CF_MAX_TERMS,
        nu=nu,
        s=s
    )


def ratio_j(nu: OrderLike, s: float) -> float:
    """
    J_{nu+1}(s) / J_nu(s) by the continued fraction
    1/(2(nu+1)/s - 1/(2(nu+2)/s - ...)).

    Raises:
        PoleError: If s is a zero of J_nu
        DomainError: If s is negative
    """
    nu = _order(nu)
    s = _argument(s)
    if s == 0.0:
        return 0.0
    denominator = _lentz(lambda k: 2.0 * (nu + k) / s, -1.0, nu, s)
    # J_nu/J_{nu+1} is about the distance to the nearest zero; within root tolerance it is a zero
    if abs(denominator) <= _roots.tolerance * max(1.0, s):
        raise PoleError("J_nu vanishes; ratio has a pole", nu=nu, s=s)
    return 1.0 / denominator


def ratio_i(nu: OrderLike, s: float) -> float:
    """I_{nu+1}(s) / I_nu(s) by the continued fraction 1/(2(nu+1)/s + 1/(2(nu+2)/s + ...))."""
    nu = _order(nu)
    s = _argument(s)
    if s == 0.0:
        return 0.0
    return 1.0 / _lentz(lambda k: 2.0 * (nu + k) / s, 1.0, nu, s)


def power_scaled_j(nu: float, s) -> np.ndarray:
    """
    s^{-nu} J_nu(s), vectorized, with the limit 1/(2^nu Gamma(nu+1)) at s = 0.
    """
    s = np.asarray(s, dtype=float)
    limit = 1.0 / (2.0 ** nu * special.gamma(nu + 1.0))
    safe = np.where(s > 0, s, 1.0)
    return np.where(s > 0, special.jv(nu, safe) / safe ** nu, limit)


def power_scaled_i(nu: float, s) -> np.ndarray:
    """s^{-nu} I_nu(s), vectorized, with the same limit at s = 0."""
    s = np.asarray(s, dtype=float)
    limit = 1.0 / (2.0 ** nu * special.gamma(nu + 1.0))
    safe = np.where(s > 0, s, 1.0)
    return np.where(s > 0, special.iv(nu, safe) / safe ** nu, limit)


def mcmahon_estimate(nu: float, k: int) -> float:
    """McMahon asymptotic estimate of j_{nu,k}, three terms."""
    mu = 4.0 * nu * nu
    beta = (k + nu / 2.0 - 0.25) * math.pi
    eight_beta = 8.0 * beta
    return (
        beta
        - (mu - 1.0) / eight_beta
        - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * eight_beta ** 3)
    )


def _refine_root(
    f: Callable[[float], float],
    fprime: Callable[[float], float],
    lo: float,
    hi: float,
    config: RootConfig,
    label: str
) -> float:
    """Bisection down to config.bisection_width, then Newton, then a sign-change check."""
    f_lo, f_hi = f(lo), f(hi)
    if f_lo * f_hi > 0:
        raise BracketError(
            f"No sign change bracketing {label}",
            lo=lo, hi=hi, f_lo=f_lo, f_hi=f_hi
        )

    x0 = optimize.bisect(f, lo, hi, xtol=config.bisection_width)
    try:
        x = optimize.newton(
            f, x0, fprime=fprime, tol=config.tolerance * 1e-3,
            maxiter=config.newton_max_iterations
        )
    except RuntimeError as e:
        raise ConvergenceError(
            f"Newton refinement of {label} failed: {e}",
            iterations=config.newton_max_iterations,
            lo=lo, hi=hi
        )

    if not lo < x < hi:
        raise BracketError(f"Newton left the bracket for {label}", lo=lo, hi=hi, x=x)

    delta = config.tolerance * max(1.0, abs(x))
    if f(x - delta) * f(x + delta) > 0:
        raise BracketError(f"No sign change across refined {label}", x=x, delta=delta)
    return float(x)


@lru_cache(maxsize=4096)
def _zero_j_cached(nu: float, k: int) -> float:
    estimate = mcmahon_estimate(nu, k)

    def f(x: float) -> float:
        return float(special.jv(nu, x))

    def fprime(x: float) -> float:
        return float(special.jv(nu - 1.0, x) - nu / x * special.jv(nu, x))

    for half_width in (0.5, 1.0):
        lo = max(estimate - half_width, 1e-6)
        hi = estimate + half_width
        if f(lo) * f(hi) < 0:
            return _refine_root(f, fprime, lo, hi, _roots, f"j_(nu={nu},k={k})")

    raise BracketError(
        "McMahon bracket holds no zero",
        nu=nu, k=k, estimate=estimate
    )


def zero_j(nu: OrderLike, k: int) -> float:
    """
    k-th positive zero j_{nu,k} of J_nu to the root tolerance (1e-10 by default).

    Args:
        nu: Order in [-1/2, 1]
        k: Zero index, k >= 1

    Returns:
        j_{nu,k}

    Raises:
        DomainError: If k < 1
        BracketError: If the McMahon bracket shows no sign change
    """
    nu = _order(nu)
    if int(k) != k or k < 1:
        raise DomainError("k must be a positive integer", k=k)
    return _zero_j_cached(nu, int(k))


def zero_table(nu: OrderLike, k_max: int) -> ZeroTable:
    """Table of the first k_max zeros of J_nu."""
    nu = _order(nu)
    return ZeroTable(Order(nu), tuple(zero_j(nu, k) for k in range(1, k_max + 1)))


def check_interlacing(table: ZeroTable, next_table: ZeroTable) -> bool:
    """
    j_{nu,k} < j_{nu+1,k} < j_{nu,k+1} for every k both tables cover.

    ``next_table`` holds zeros of order nu + 1, which may lie outside the
    supported range, so it is built by the caller (see ``zeros_any_order``).
    """
    count = min(len(table) - 1, len(next_table))
    return all(
        table.zeros[k] < next_table.zeros[k] < table.zeros[k + 1]
        for k in range(count)
    )


def zeros_any_order(nu: float, k_max: int) -> ZeroTable:
    """
    Zeros of J_nu for an order outside [-1/2, 1], as needed for interlacing
    checks against nu + 1. The returned table's order label is clipped.
    """
    zeros: List[float] = []
    for k in range(1, k_max + 1):
        estimate = mcmahon_estimate(nu, k)

        def f(x: float) -> float:
            return float(special.jv(nu, x))

        def fprime(x: float) -> float:
            return float(special.jv(nu - 1.0, x) - nu / x * special.jv(nu, x))

        lo, hi = max(estimate - 0.5, 1e-6), estimate + 0.5
        zeros.append(_refine_root(f, fprime, lo, hi, _roots, f"j_(nu={nu},k={k})"))
    return ZeroTable(Order(min(max(nu, NU_MIN), NU_MAX)), tuple(zeros))


def cross_product(nu: OrderLike, s: float) -> float:
    """
    Cross-product J_nu(s) I'_nu(s) - J'_nu(s) I_nu(s).

    Derivatives use J'_nu = J_{nu-1} - (nu/s) J_nu and the same form for I.

    Raises:
        DomainError: If s <= 0
    """
    nu = _order(nu)
    s = _positive(s)
    j = special.jv(nu, s)
    i = special.iv(nu, s)
    dj = special.jv(nu - 1.0, s) - nu / s * j
    di = special.iv(nu - 1.0, s) - nu / s * i
    return float(j * di - dj * i)


def _cross_product_derivative(nu: float, s: float) -> float:
    # Bessel equations give d/ds (J I' - J' I) = -(J I' - J' I)/s + 2 J I
    return -cross_product(nu, s) / s + 2.0 * float(special.jv(nu, s) * special.iv(nu, s))


@lru_cache(maxsize=1024)
def _root_h_cached(nu: float) -> float:
    lo = zero_j(nu, 1)
    hi = zero_j(nu, 2)
    h = _refine_root(
        lambda s: cross_product(nu, s),
        lambda s: _cross_product_derivative(nu, s),
        lo, hi, _roots, f"h_(nu={nu})"
    )
    logger.debug("Cross-product root found", nu=nu, h=h, j1=lo, j2=hi)
    return h


def root_h(nu: OrderLike) -> float:
    """
    First positive root h_nu of the cross-product, inside (j_{nu,1}, j_{nu,2}).

    Example:
        >>> round(root_h(0.5), 6)    # tan x = tanh x
        3.926602
    """
    return _root_h_cached(_order(nu))


def clear_caches() -> None:
    """Drop memoized zeros and roots."""
    _zero_j_cached.cache_clear()
    _root_h_cached.cache_clear()


def configure_roots(config: RootConfig) -> None:
    """Refine every later zero and root with ``config``; memoized values are dropped."""
    global _roots
    if config != _roots:
        _roots = config
        clear_caches()
        logger.debug("Root settings changed", tolerance=config.tolerance, bisection_width=config.bisection_width)


def root_config() -> RootConfig:
    """The settings zeros and roots are currently refined with."""
    return _roots
