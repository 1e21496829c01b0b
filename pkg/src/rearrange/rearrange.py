"""
Discrete rearrangements and the comparison constructions.

A MeasuredProfile is a finite sample of a function together with the
measure of the cell each sample stands for. On such data the
distribution function, the generalized inverse u^# and the monotone
rearrangement u*(x) = u^#(omega_N x^N) are exact, so equimeasurability
holds up to summation order.

Starting from a sign-changing radial profile u and its Laplacian, the
comparison functions V_+ and V_- are built from the step functions

    F_+(s) = (Delta u)^#_-(s) - (Delta u)^#_+(M - s),   F_-(s) = -F_+(M - s)

on [0, M], M = m({u != 0}), and checked against AVR^{2/N} u_±*.
"""

import csv
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np
from scipy import integrate

from ..config.settings import QuadratureConfig
from ..model.model_space import Provenance, RadialProfile, SpectralParams, laplacian_values
from ..utils.errors import DomainError, FixtureError
from ..utils.logger import StructuredLogger

logger = StructuredLogger(__name__)

CSV_COLUMNS = ("radius", "value", "mass")
PRODUCT_TOLERANCE = 1e-12
MERGE_TOLERANCE = 1e-13
COMPARISON_TOLERANCE = 1e-6
# Absolute floor for the per-piece quadratures in build_V
PIECE_EPSABS = 1e-15


class Sign(str, Enum):
    """Which half of a nodal decomposition."""
    PLUS = "+"
    MINUS = "-"


@dataclass(frozen=True)
class MeasuredProfile:
    """
    Samples of a function on increasing radii with positive cell masses.

    ``masses[i]`` is the measure of the cell represented by ``values[i]``.
    """

    nodes: np.ndarray
    values: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        """Validate configuration values."""
        nodes = np.asarray(self.nodes, dtype=float)
        values = np.asarray(self.values, dtype=float)
        masses = np.asarray(self.masses, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "masses", masses)

        if nodes.ndim != 1 or nodes.size == 0:
            raise FixtureError("profile needs at least one node")
        if values.shape != nodes.shape or masses.shape != nodes.shape:
            raise FixtureError(
                "nodes, values and masses must have equal length",
                nodes=nodes.size, values=values.size, masses=masses.size
            )
        if np.any(np.diff(nodes) <= 0):
            raise FixtureError("nodes must be strictly increasing")
        if np.any(masses <= 0):
            raise FixtureError("cell masses must be positive")
        if not np.all(np.isfinite(values)):
            raise FixtureError("values must be finite")

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.masses))

    def with_values(self, values: np.ndarray) -> "MeasuredProfile":
        """Same cells, new samples."""
        return MeasuredProfile(self.nodes, values, self.masses)

    def positive_part(self) -> "MeasuredProfile":
        return self.with_values(np.maximum(self.values, 0.0))

    def negative_part(self) -> "MeasuredProfile":
        return self.with_values(np.maximum(-self.values, 0.0))

    def restrict(self, mask: np.ndarray) -> "MeasuredProfile":
        """The cells selected by a boolean mask."""
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != self.nodes.shape:
            raise FixtureError("mask length does not match the profile", mask=mask.size, nodes=self.nodes.size)
        if not np.any(mask):
            raise FixtureError("restriction to an empty set of cells")
        return MeasuredProfile(self.nodes[mask], self.values[mask], self.masses[mask])

    def integral(self, power: float = 1.0) -> float:
        """sum_i |v_i|^power m_i."""
        return float(np.sum(np.abs(self.values) ** power * self.masses))

    @classmethod
    def from_radial(
        cls,
        profile: RadialProfile,
        params: SpectralParams,
        n: int,
        avr: float = 1.0
    ) -> "MeasuredProfile":
        """
        Sample a radial profile on a cone with asymptotic volume ratio ``avr``.

        The n shells between faces f_{i-1}, f_i of [0, R] carry mass
        avr omega_N (f_i^N - f_{i-1}^N); each is sampled at its mass median
        ((f_{i-1}^N + f_i^N)/2)^{1/N}.
        """
        if n < 2:
            raise DomainError("need at least two cells", n=n)
        if not 0 < avr <= 1:
            raise DomainError("avr must be in (0, 1]", avr=avr)
        N = params.N
        powers = np.linspace(0.0, profile.R, n + 1) ** N
        nodes = (0.5 * (powers[:-1] + powers[1:])) ** (1.0 / N)
        masses = avr * params.omega_N * np.diff(powers)
        return cls(nodes, profile(nodes), masses)

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> "MeasuredProfile":
        """
        Read a profile from CSV with a header naming radius, value and mass.

        Raises:
            FixtureError: On missing columns or unparseable rows
        """
        path = Path(path)
        with path.open(newline="") as handle:
            reader = csv.DictReader(handle)
            missing = [c for c in CSV_COLUMNS if c not in (reader.fieldnames or [])]
            if missing:
                raise FixtureError("CSV profile is missing columns", path=str(path), missing=missing)

            rows = []
            for line, row in enumerate(reader, start=2):
                try:
                    rows.append(tuple(float(row[c]) for c in CSV_COLUMNS))
                except (TypeError, ValueError) as e:
                    raise FixtureError("unparseable CSV row", path=str(path), line=line, error=str(e)) from e

        if not rows:
            raise FixtureError("CSV profile has no rows", path=str(path))

        data = np.array(rows)
        logger.debug("Loaded profile", path=str(path), cells=len(rows))
        return cls(data[:, 0], data[:, 1], data[:, 2])


@dataclass(frozen=True)
class StepFunction:
    """
    Piecewise constant function on [0, breakpoints[-1]].

    ``values[k]`` holds on the piece between breakpoints k and k+1, which is
    closed on the right for ``side == "left"`` and on the left for
    ``side == "right"``. The function vanishes outside its interval.
    """

    breakpoints: np.ndarray
    values: np.ndarray
    side: str = "left"
    _cumulative: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        """Validate configuration values."""
        breakpoints = np.asarray(self.breakpoints, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "breakpoints", breakpoints)
        object.__setattr__(self, "values", values)

        if self.side not in ("left", "right"):
            raise DomainError("side must be 'left' or 'right'", side=self.side)
        if breakpoints.size != values.size + 1 or values.size == 0:
            raise DomainError("need one more breakpoint than values", breakpoints=breakpoints.size, values=values.size)
        if breakpoints[0] != 0.0 or np.any(np.diff(breakpoints) <= 0):
            raise DomainError("breakpoints must start at 0 and increase strictly")

        pieces = values * np.diff(breakpoints)
        object.__setattr__(self, "_cumulative", np.concatenate([[0.0], np.cumsum(pieces)]))

    @property
    def length(self) -> float:
        return float(self.breakpoints[-1])

    def _piece(self, s: np.ndarray, side: str) -> np.ndarray:
        idx = np.searchsorted(self.breakpoints, s, side=side) - 1
        return np.clip(idx, 0, self.values.size - 1)

    def left_limit(self, s) -> np.ndarray:
        """Value approached from below; zero at s <= 0."""
        s = np.asarray(s, dtype=float)
        inside = (s > 0) & (s <= self.length)
        return np.where(inside, self.values[self._piece(s, "left")], 0.0)

    def right_limit(self, s) -> np.ndarray:
        """Value approached from above; zero at s >= length."""
        s = np.asarray(s, dtype=float)
        inside = (s >= 0) & (s < self.length)
        return np.where(inside, self.values[self._piece(s, "right")], 0.0)

    def __call__(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if self.side == "left":
            return np.where(s == 0.0, self.values[0], self.left_limit(s))
        return np.where(s == self.length, self.values[-1], self.right_limit(s))

    def integral(self, s) -> np.ndarray:
        """int_0^s f, piecewise linear in s and constant past the interval."""
        s = np.clip(np.asarray(s, dtype=float), 0.0, self.length)
        idx = self._piece(s, "right")
        return self._cumulative[idx] + self.values[idx] * (s - self.breakpoints[idx])

    def squared(self) -> "StepFunction":
        return StepFunction(self.breakpoints, self.values ** 2, self.side)

    def scaled(self, factor: float) -> "StepFunction":
        return StepFunction(self.breakpoints, factor * self.values, self.side)

    def reflect(self) -> "StepFunction":
        """s -> f(L - s), with the closed end of each piece moved accordingly."""
        L = self.length
        breakpoints = L - self.breakpoints[::-1]
        breakpoints[0] = 0.0
        breakpoints[-1] = L
        return StepFunction(breakpoints, self.values[::-1], "right" if self.side == "left" else "left")

    def extended(self, length: float) -> "StepFunction":
        """Zero-padded to [0, length]; no-op when length does not exceed the current one."""
        if length <= self.length * (1.0 + 1e-14):
            return self
        return StepFunction(
            np.append(self.breakpoints, length),
            np.append(self.values, 0.0),
            self.side
        )


@dataclass(frozen=True)
class RearrangementResult:
    """
    Distribution function, generalized inverse and monotone rearrangement.

    ``sorted_values`` are the samples in decreasing order (ties kept in node
    order) and ``cumulative[k]`` is the mass of the first k+1 of them.
    """

    sorted_values: np.ndarray
    cumulative: np.ndarray
    N: float
    omega_N: float

    @property
    def total_mass(self) -> float:
        return float(self.cumulative[-1])

    @property
    def radius(self) -> float:
        """r with omega_N r^N equal to the total mass."""
        return (self.total_mass / self.omega_N) ** (1.0 / self.N)

    def mu(self, t) -> np.ndarray:
        """mu(t) = m({u > t})."""
        count = np.searchsorted(-self.sorted_values, -np.asarray(t, dtype=float), side="left")
        return np.concatenate([[0.0], self.cumulative])[count]

    def as_step(self, length: Optional[float] = None) -> StepFunction:
        step = StepFunction(np.concatenate([[0.0], self.cumulative]), self.sorted_values, "left")
        return step if length is None else step.extended(length)

    def u_sharp(self, s) -> np.ndarray:
        """u^#(s) = inf{t : mu(t) < s}, with u^#(0) = max u and zero past the total mass."""
        return self.as_step()(s)

    def u_star(self, x) -> np.ndarray:
        """u*(x) = u^#(omega_N x^N)."""
        return self.u_sharp(self.omega_N * np.asarray(x, dtype=float) ** self.N)

    def star_integral(self, power: float = 1.0) -> float:
        """int |u*|^power d sigma_N over the rearranged ball."""
        shells = np.diff(np.concatenate([[0.0], self.cumulative]))
        return float(np.sum(np.abs(self.sorted_values) ** power * shells))

    def mass_midpoints(self) -> np.ndarray:
        """Middle of each piece in the mass variable."""
        lower = np.concatenate([[0.0], self.cumulative[:-1]])
        return 0.5 * (lower + self.cumulative)


def distribution(p: MeasuredProfile, t: float) -> float:
    """Exact mass of {u > t}."""
    return float(np.sum(p.masses[p.values > t]))


def rearrange(p: MeasuredProfile, params: SpectralParams) -> RearrangementResult:
    """Monotone rearrangement of the samples onto the model space."""
    order = np.argsort(-p.values, kind="stable")
    return RearrangementResult(
        sorted_values=p.values[order],
        cumulative=np.cumsum(p.masses[order]),
        N=params.N,
        omega_N=params.omega_N
    )


def hardy_littlewood_sides(
    p: MeasuredProfile,
    mask: np.ndarray,
    params: SpectralParams
) -> Tuple[float, float]:
    """||u||_{L^1(S)} and ||u*||_{L^1(S*)} for the cells selected by ``mask``."""
    subset = p.restrict(mask)
    lhs = subset.integral(1.0)
    rearranged = rearrange(p.with_values(np.abs(p.values)), params)
    rhs = float(rearranged.as_step().integral(subset.total_mass))
    return lhs, rhs


def hardy_littlewood_check(
    p: MeasuredProfile,
    mask: np.ndarray,
    params: SpectralParams,
    tolerance: float = 1e-12
) -> bool:
    """True when ||u||_{L^1(S)} <= ||u*||_{L^1(S*)} up to a relative tolerance."""
    lhs, rhs = hardy_littlewood_sides(p, mask, params)
    return lhs <= rhs + tolerance * max(abs(rhs), 1.0)


def build_F(
    sign: Union[Sign, str],
    delta_u_plus: RearrangementResult,
    delta_u_minus: RearrangementResult,
    total_mass: float,
    tolerance: float = PRODUCT_TOLERANCE
) -> StepFunction:
    """
    F_+ or F_- on [0, total_mass] from the rearranged parts of Delta u.

    Raises:
        FixtureError: If a rearrangement carries more mass than total_mass,
            or both (Delta u)^#_-(s) and (Delta u)^#_+(M - s) are nonzero
            on a common piece
    """
    sign = Sign(sign)
    for part in (delta_u_plus, delta_u_minus):
        if part.total_mass > total_mass * (1.0 + 1e-12):
            raise FixtureError(
                "rearrangement carries more mass than the support",
                mass=part.total_mass, total_mass=total_mass
            )

    minus = delta_u_minus.as_step(total_mass)
    plus_reflected = delta_u_plus.as_step(total_mass).reflect()

    grid = np.union1d(minus.breakpoints, plus_reflected.breakpoints)
    grid = grid[grid <= total_mass]
    # breakpoints that agree up to summation order are merged
    distinct = np.concatenate([[True], np.diff(grid) > MERGE_TOLERANCE * total_mass])
    grid = grid[distinct]
    if grid.size > 1 and total_mass - grid[-1] <= MERGE_TOLERANCE * total_mass:
        grid[-1] = total_mass
    else:
        grid = np.append(grid, total_mass)
    mids = 0.5 * (grid[:-1] + grid[1:])
    lower = minus.left_limit(mids)
    upper = plus_reflected.left_limit(mids)

    scale = max(float(np.max(np.abs(lower))), float(np.max(np.abs(upper))), 1.0)
    product = np.abs(lower * upper)
    if np.any(product > tolerance * scale ** 2):
        worst = int(np.argmax(product))
        raise FixtureError(
            "positive and negative parts of the Laplacian overlap after rearrangement",
            s=float(mids[worst]), product=float(product[worst])
        )

    F_plus = StepFunction(grid, lower - upper, "left")
    if sign is Sign.PLUS:
        return F_plus
    return F_plus.reflect().scaled(-1.0)


class _StepPotential:
    """
    V(x) = (1/(N omega_N)) int_x^e rho^{1-N} G(omega_N rho^N) d rho with
    G(s) = int_0^s F; quadrature runs piece by piece between the radii
    where F jumps.
    """

    def __init__(self, F: StepFunction, endpoint: float, params: SpectralParams, config: QuadratureConfig):
        self.F = F
        self.endpoint = endpoint
        self.N = params.N
        self.omega = params.omega_N
        self.norm = params.N * params.omega_N
        self.config = config

        s_end = self.omega * endpoint ** self.N
        inner = F.breakpoints[(F.breakpoints > 0) & (F.breakpoints < s_end)]
        self.radii = np.unique(np.concatenate([[0.0], (inner / self.omega) ** (1.0 / self.N), [endpoint]]))
        pieces = np.array([self._integrate(lo, hi) for lo, hi in zip(self.radii[:-1], self.radii[1:])])
        self.tail = np.append(np.cumsum(pieces[::-1])[::-1], 0.0)

    def flux(self, rho: float) -> float:
        """-V'(rho)."""
        if rho <= 0:
            return 0.0
        return rho ** (1.0 - self.N) * float(self.F.integral(self.omega * rho ** self.N)) / self.norm

    def _integrate(self, lo: float, hi: float) -> float:
        value, _ = integrate.quad(
            self.flux, lo, hi,
            epsabs=PIECE_EPSABS, epsrel=self.config.epsrel, limit=self.config.limit
        )
        return value

    def _value_scalar(self, x: float) -> float:
        if x >= self.endpoint:
            return 0.0
        x = max(x, 0.0)
        j = int(np.searchsorted(self.radii, x, side="right")) - 1
        return float(self.tail[j + 1]) + self._integrate(x, float(self.radii[j + 1]))

    def value(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        flat = np.array([self._value_scalar(float(v)) for v in x.ravel()])
        return flat.reshape(x.shape)

    def _G_over_power(self, x: np.ndarray, power: float) -> np.ndarray:
        safe = np.where(x > 0, x, 1.0)
        G = self.F.integral(self.omega * safe ** self.N)
        return np.where(x > 0, safe ** power * G / self.norm, 0.0)

    def d1(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return -self._G_over_power(x, 1.0 - self.N)

    def d2(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        safe = np.where(x > 0, x, 1.0)
        interior = (self.N - 1.0) * self._G_over_power(x, -self.N) - self.F.left_limit(self.omega * safe ** self.N)
        origin = -self.F.right_limit(0.0) / self.N
        return np.where(x > 0, interior, origin)


def build_V(
    F: StepFunction,
    endpoint: float,
    params: SpectralParams,
    config: Optional[QuadratureConfig] = None
) -> RadialProfile:
    """
    The comparison function on [0, endpoint] with Delta_{0,N} V = -F(omega_N r^N)
    and V(endpoint) = 0.

    Second derivatives use the limit of F from inside the ball, so the
    Laplacian at the endpoint is the one-sided value.
    """
    if endpoint <= 0:
        raise DomainError("endpoint must be positive", endpoint=endpoint)
    if params.omega_N * endpoint ** params.N > F.length * (1.0 + 1e-12):
        raise DomainError("endpoint ball exceeds the support of F", endpoint=endpoint, length=F.length)

    potential = _StepPotential(F, endpoint, params, config or QuadratureConfig())
    return RadialProfile(
        value=potential.value,
        d1=potential.d1,
        d2=potential.d2,
        R=endpoint,
        provenance=Provenance.ANALYTIC,
        label=f"V[N={params.N:g},e={endpoint:.6g}]"
    )


@dataclass
class ComparisonReport:
    """Margins V(x) - AVR^{2/N} u*(x) at the mass midpoints of u*."""

    points: np.ndarray
    margins: np.ndarray
    V_values: np.ndarray
    weights: np.ndarray
    min_margin: float
    relative_min_margin: float
    argmin: float
    tolerance: float

    @property
    def holds(self) -> bool:
        return self.relative_min_margin >= -self.tolerance

    @property
    def V_l2_squared(self) -> float:
        """Midpoint sum for int V^2 d sigma_N over the same pieces."""
        return float(np.sum(self.V_values ** 2 * self.weights))

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary."""
        return {
            "points": int(self.points.size),
            "min_margin": self.min_margin,
            "relative_min_margin": self.relative_min_margin,
            "argmin": self.argmin,
            "tolerance": self.tolerance,
            "holds": self.holds
        }


def comparison_check(
    u_star: RearrangementResult,
    V: RadialProfile,
    avr: float,
    params: SpectralParams,
    tolerance: float = COMPARISON_TOLERANCE
) -> ComparisonReport:
    """
    Check AVR^{2/N} u*(x) <= V(x) on [0, V.R].

    Margins are sampled at the mass midpoint of each piece of u*; the
    relative margin divides by the larger of max|V| and max AVR^{2/N}|u*|.
    """
    if not 0 < avr <= 1:
        raise DomainError("avr must be in (0, 1]", avr=avr)

    s_mid = u_star.mass_midpoints()
    x = (s_mid / params.omega_N) ** (1.0 / params.N)
    keep = x <= V.R * (1.0 + 1e-12)
    if not np.any(keep):
        raise FixtureError("no rearranged piece lies inside the comparison ball", R=V.R)

    x = x[keep]
    weights = np.diff(np.concatenate([[0.0], u_star.cumulative]))[keep]
    factor = avr ** (2.0 / params.N)
    scaled_u = factor * u_star.sorted_values[keep]
    V_values = V(x)
    margins = V_values - scaled_u

    scale = max(float(np.max(np.abs(V_values))), float(np.max(np.abs(scaled_u))))
    worst = int(np.argmin(margins))
    min_margin = float(margins[worst])
    relative = min_margin / scale if scale > 0 else 0.0

    return ComparisonReport(
        points=x,
        margins=margins,
        V_values=V_values,
        weights=weights,
        min_margin=min_margin,
        relative_min_margin=relative,
        argmin=float(x[worst]),
        tolerance=tolerance
    )


@dataclass
class TalentiReport:
    """
    Everything the nodal comparison produces for one radial profile.

    Residuals are relative: the flux residual to int|F_+|, the Laplacian
    residual to max|F_+|, the energy residual to the right-hand side.
    """

    N: float
    avr: float
    n: int
    a: float
    b: float
    total_mass: float
    endpoint_values: Tuple[float, float]
    flux_residual: float
    laplacian_residual: float
    energy_lhs: float
    energy_rhs: float
    comparison_plus: ComparisonReport
    comparison_minus: Optional[ComparisonReport]
    l2_lhs: float
    l2_rhs: float
    F_plus: StepFunction = field(repr=False)
    F_minus: StepFunction = field(repr=False)
    V_plus: RadialProfile = field(repr=False)
    V_minus: Optional[RadialProfile] = field(default=None, repr=False)

    @property
    def energy_residual(self) -> float:
        return abs(self.energy_lhs - self.energy_rhs) / max(abs(self.energy_rhs), 1e-300)

    @property
    def comparison_holds(self) -> bool:
        reports = [self.comparison_plus] + ([self.comparison_minus] if self.comparison_minus else [])
        return all(r.holds for r in reports)

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary."""
        return {
            "N": self.N,
            "avr": self.avr,
            "n": self.n,
            "a": self.a,
            "b": self.b,
            "total_mass": self.total_mass,
            "endpoint_values": list(self.endpoint_values),
            "flux_residual": self.flux_residual,
            "laplacian_residual": self.laplacian_residual,
            "energy_lhs": self.energy_lhs,
            "energy_rhs": self.energy_rhs,
            "energy_residual": self.energy_residual,
            "comparison_plus": self.comparison_plus.to_dict(),
            "comparison_minus": self.comparison_minus.to_dict() if self.comparison_minus else None,
            "comparison_holds": self.comparison_holds,
            "l2_lhs": self.l2_lhs,
            "l2_rhs": self.l2_rhs
        }


def talenti_construction(
    profile: RadialProfile,
    params: SpectralParams,
    avr: float = 1.0,
    n: int = 2000,
    tolerance: float = COMPARISON_TOLERANCE,
    config: Optional[QuadratureConfig] = None
) -> TalentiReport:
    """
    Run the nodal comparison on a radial profile over a cone.

    Samples u and Delta_{0,N} u on n shells, rearranges both signs of each,
    builds F_± and V_±, and reports the boundary conditions, the energy
    identity, the pointwise comparison and its L^2 consequence.

    Raises:
        FixtureError: If u vanishes on every cell or the rearranged parts
            of Delta u overlap
    """
    config = config or QuadratureConfig()
    N, omega = params.N, params.omega_N

    u = MeasuredProfile.from_radial(profile, params, n, avr)
    support = u.values != 0
    if not np.any(support):
        raise FixtureError("profile vanishes on every cell", label=profile.label)
    if not np.any(u.values > 0):
        # the construction is symmetric under u -> -u; keep a nonempty positive set
        profile = profile.scaled(-1.0)
        u = u.with_values(-u.values)

    u = u.restrict(support)
    lap = u.with_values(laplacian_values(profile, N, u.nodes))
    M = u.total_mass

    F_plus = build_F(Sign.PLUS, rearrange(lap.positive_part(), params), rearrange(lap.negative_part(), params), M)
    F_minus = F_plus.reflect().scaled(-1.0)

    S_a = float(np.sum(u.masses[u.values > 0]))
    S_b = float(np.sum(u.masses[u.values < 0]))
    a = (S_a / omega) ** (1.0 / N)
    b = (S_b / omega) ** (1.0 / N)

    V_plus = build_V(F_plus, a, params, config)
    comparison_plus = comparison_check(rearrange(u.positive_part(), params), V_plus, avr, params, tolerance)
    flux_plus = float(V_plus.d1(np.asarray(a))) * a ** (N - 1.0)
    # Delta V_+(a) = -F_+(S_a^-)
    lap_plus = -float(F_plus.left_limit(S_a))

    V_minus: Optional[RadialProfile] = None
    comparison_minus: Optional[ComparisonReport] = None
    flux_minus = 0.0
    minus_endpoint = 0.0
    if S_b > 0:
        V_minus = build_V(F_minus, b, params, config)
        comparison_minus = comparison_check(rearrange(u.negative_part(), params), V_minus, avr, params, tolerance)
        flux_minus = float(V_minus.d1(np.asarray(b))) * b ** (N - 1.0)
        minus_endpoint = float(V_minus(np.asarray(b)))
        lap_minus = -float(F_minus.left_limit(S_b))
    else:
        lap_minus = -float(F_minus.right_limit(0.0))

    F_scale = max(float(np.max(np.abs(F_plus.values))), 1e-300)
    F_mass = max(float(np.sum(np.abs(F_plus.values) * np.diff(F_plus.breakpoints))), 1e-300)

    energy_lhs = float(F_plus.squared().integral(S_a)) + float(F_minus.squared().integral(S_b))
    energy_rhs = lap.integral(2.0)

    l2_lhs = avr ** (4.0 / N) * u.integral(2.0)
    l2_rhs = comparison_plus.V_l2_squared + (comparison_minus.V_l2_squared if comparison_minus else 0.0)

    report = TalentiReport(
        N=N,
        avr=avr,
        n=n,
        a=a,
        b=b,
        total_mass=M,
        endpoint_values=(float(V_plus(np.asarray(a))), minus_endpoint),
        flux_residual=abs(flux_plus - flux_minus) * N * omega / F_mass,
        laplacian_residual=abs(lap_plus + lap_minus) / F_scale,
        energy_lhs=energy_lhs,
        energy_rhs=energy_rhs,
        comparison_plus=comparison_plus,
        comparison_minus=comparison_minus,
        l2_lhs=l2_lhs,
        l2_rhs=l2_rhs,
        F_plus=F_plus,
        F_minus=F_minus,
        V_plus=V_plus,
        V_minus=V_minus
    )

    logger.info(
        "Nodal comparison complete",
        N=N, avr=avr, n=n, a=a, b=b,
        comparison_holds=report.comparison_holds,
        energy_residual=report.energy_residual,
        flux_residual=report.flux_residual
    )
    return report
