"""
Command-line entry point for plate_tone.

Each command runs one suite of checks and emits a report to stdout or to
``--output``. Exit codes: 0 when every check passes, 2 when a check fails
(the failing records are still emitted), 1 on usage or configuration errors.

Usage:
    python -m src.cli n0 --tol 1e-5
    python -m src.cli certify-bounds --N 2
    python -m src.cli reduction --N 3 --grid-size 200 --format csv
    python -m src.cli oracle --N 2 --n 512
    python -m src.cli cone --N 2 --avr 0.5 --r1 0.05
    python -m src.cli rearrange-verify --N 2 --profile profile.csv
    python -m src.cli roots --nu 0.5
    python -m src.cli identity
    python -m src.cli report-all --config run.json --output report.json
"""

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy
from numpy.polynomial import Polynomial
from pydantic import ValidationError
from scipy import optimize, special

from . import __version__
from .cones.cones import (
    ConeFixture,
    annulus_inequality_check,
    asymptotic_limit_check,
    perturbed_trials,
    sharpness_equality_check,
)
from .config.settings import Command, OutputFormat, RunConfig, Settings
from .model.model_space import RadialProfile, SpectralParams, bessel_identity_check
from .oracle.fd_oracle import ConvergenceProblem, RadialMesh, convergence_study, solve_clamped, solve_twoball
from .rearrange.rearrange import MeasuredProfile, hardy_littlewood_sides, rearrange, talenti_construction
from .reduction.bounds import certify, compute_N0, margin_function, negativity_scan
from .reduction.twoball import TwoBallInstance, first_root_h_of_a, reduction_sweep, symmetric_endpoint
from .special.bessel import configure_roots, cross_product, root_h, zero_j
from .utils.errors import DomainError, PlateToneError
from .utils.logger import LogContext, StructuredLogger, setup_logging

logger = StructuredLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAILED = 2

DEFAULT_N = 2.0
SIGNIFICANT_DIGITS = 12

# Relative tolerances of the finite-difference comparisons
CLAMPED_TOLERANCE = 5e-3
TWOBALL_TOLERANCE = 1e-2
RATE_WINDOW = (1.7, 2.3)
# Two-ball radii swept when --a is not given; the symmetric endpoint is always added
TWOBALL_A_VALUES = (0.2, 0.4, 0.6)

ROOT_TABLE_SIZE = 5
ZERO_RESIDUAL_TOLERANCE = 1e-9
HALF_ORDER_ZERO_TOLERANCE = 1e-10
HALF_ORDER_ROOT_TOLERANCE = 1e-6
IDENTITY_DIMENSIONS = (2.0, 2.5, 3.0)
IDENTITY_TOLERANCE = 1e-8

ASYMPTOTIC_RADII = (1.0, 10.0, 100.0)
EQUALITY_TOLERANCE = 1e-6

RANDOM_PROFILES = 100
RANDOM_CELLS = 50
EQUIMEASURABLE_TOLERANCE = 1e-10
ENERGY_TOLERANCE = 1e-10
# The nodal comparison converges like n^-2, the Laplacian matching like n^-1
COMPARISON_SCALE = 400.0
FLUX_SCALE = 50.0
LAPLACIAN_SCALE = 40.0

# Fixture profiles on the unit ball: a positive bump and a nodal one
BUMP = Polynomial([1.0, 0.0, -2.0, 0.0, 1.0])
NODAL = Polynomial([1.0, 0.0, -5.0, 0.0, 7.0, 0.0, -3.0])

CSV_COLUMNS: Dict[Command, Sequence[str]] = {
    Command.CERTIFY_BOUNDS: ("N", "nu", "alpha", "beta", "sum", "error_estimate", "certified_negative"),
    Command.N0: ("N0", "tol", "g_below", "g_above"),
    Command.REDUCTION: ("a", "b", "h_of_a", "h_nu", "margin"),
    Command.ORACLE: ("check", "n", "a", "value", "reference", "rel_error", "passed"),
    Command.CONE: ("check", "lhs", "rhs", "rel_gap", "passed"),
    Command.REARRANGE_VERIFY: ("check", "value", "tolerance", "passed"),
    Command.ROOTS: ("check", "nu", "k", "value", "reference", "abs_error", "passed"),
    Command.IDENTITY: ("N", "lhs", "rhs", "residual", "abs_err_estimate", "passed"),
    Command.REPORT_ALL: ("command", "total", "failed", "passed"),
}


class UsageError(Exception):
    """Bad command line or configuration file."""


@dataclass
class Report:
    """Outcome of one command: its inputs, per-item records and a pass/fail summary."""

    command: Command
    parameters: Dict[str, Any]
    records: List[Dict[str, Any]] = field(default_factory=list)
    passed_flags: List[bool] = field(default_factory=list)
    extra: Dict[str, Any] = field(default_factory=dict)
    sections: Dict[str, Any] = field(default_factory=dict)
    versions: Dict[str, Any] = field(default_factory=dict)

    def add(self, record: Dict[str, Any], passed: bool) -> None:
        self.records.append({**record, "passed": bool(passed)})
        self.passed_flags.append(bool(passed))

    @property
    def passed(self) -> bool:
        return all(self.passed_flags)

    @property
    def summary(self) -> Dict[str, Any]:
        failed = self.passed_flags.count(False)
        return {
            "total": len(self.passed_flags),
            "passed": len(self.passed_flags) - failed,
            "failed": failed,
            **self.extra
        }

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary."""
        result = {
            "command": self.command.value,
            "parameters": self.parameters,
            "records": self.records,
            "summary": self.summary
        }
        if self.sections:
            result["reports"] = self.sections
        result["versions"] = self.versions
        return result


def _normalize(value: Any) -> Any:
    """Plain JSON types with floats cut to 12 significant digits; NaN and inf become None."""
    if isinstance(value, dict):
        return {str(k): _normalize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_normalize(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if not math.isfinite(value):
            return None
        return float(f"{value:.{SIGNIFICANT_DIGITS}g}")
    if hasattr(value, "value") and isinstance(getattr(value, "value"), str):
        return value.value
    return value


def _csv_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.{SIGNIFICANT_DIGITS}g}"
    return str(value)


def render(report: Report, fmt: OutputFormat) -> str:
    """Serialize a report; JSON keeps insertion order, CSV uses the command's header."""
    data = _normalize(report.to_dict())
    if fmt is OutputFormat.JSON:
        return json.dumps(data, indent=2) + "\n"

    columns = CSV_COLUMNS[report.command]
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for record in data["records"]:
        writer.writerow([_csv_cell(record.get(c)) for c in columns])
    return buffer.getvalue()


def emit(report: Report, fmt: OutputFormat, output: Optional[str] = None) -> None:
    """
    Write a rendered report to ``output`` or stdout.

    Raises:
        OSError: If the output path cannot be written
    """
    text = render(report, fmt)
    if output is None:
        sys.stdout.write(text)
        return

    try:
        with open(output, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
    except OSError as e:
        logger.error("Failed to write report", path=output, error=str(e))
        raise

    logger.info("Report written", path=output, format=fmt.value, bytes=len(text))


def _params(config: RunConfig) -> SpectralParams:
    return SpectralParams.from_dimension(config.N if config.N is not None else DEFAULT_N)


def run_certify_bounds(config: RunConfig, settings: Settings) -> Report:
    """alpha + beta < 0 at one dimension, or on the grid N_lo, ..., N_hi."""
    if config.N_lo is not None and config.N_hi is not None:
        scan = negativity_scan(
            config.N_lo, config.N_hi, config.step, config.scan_points, settings.parallel.workers, settings.bounds
        )
        report = Report(Command.CERTIFY_BOUNDS, {"N_lo": config.N_lo, "N_hi": config.N_hi, "step": config.step})
        for item in scan.reports:
            report.add(item.to_dict(), item.certified_negative)
        report.extra["intervals"] = [list(i) for i in scan.intervals]
        return report

    N = config.N if config.N is not None else DEFAULT_N
    item = certify(N, config.scan_points, settings.bounds)
    report = Report(Command.CERTIFY_BOUNDS, {"N": N, "scan_points": config.scan_points})
    report.add(item.to_dict(), item.certified_negative)
    return report


def run_n0(config: RunConfig, settings: Settings) -> Report:
    """Critical dimension with a sign check of the margin function around it."""
    N0 = compute_N0(config.tol)
    width = min(2.0 * config.tol, 0.1)
    g_below = margin_function(N0 - width)
    g_above = margin_function(N0 + width)

    report = Report(Command.N0, {"tol": config.tol})
    report.add({"N0": N0, "tol": config.tol, "g_below": g_below, "g_above": g_above}, g_below * g_above < 0)
    return report


def run_reduction(config: RunConfig, settings: Settings) -> Report:
    """h_nu(a) > h_nu along (0, 2^{-1/N}]."""
    if config.N is None:
        raise UsageError("reduction needs --N or --nu")
    params = _params(config)
    sweep = reduction_sweep(params, config.grid_size, settings.parallel.workers)

    report = Report(Command.REDUCTION, {"N": params.N, "grid_size": config.grid_size})
    for record in sweep.records:
        report.add(record.to_dict(), record.success and not record.is_counterexample)
    report.extra.update(
        min_margin=sweep.min_margin,
        argmin_a=sweep.argmin_a,
        endpoint_margin=sweep.endpoint_margin
    )
    return report


def _twoball_instances(params: SpectralParams, a: Optional[float]) -> List[TwoBallInstance]:
    """The requested radius (or the default sweep) followed by the symmetric endpoint."""
    a_sym = 2.0 ** (-1.0 / params.N)
    values = [a] if a is not None else [v for v in TWOBALL_A_VALUES if v < a_sym]
    instances = [TwoBallInstance.from_a(params, v) for v in values]
    if not any(inst.is_symmetric for inst in instances):
        instances.append(TwoBallInstance.from_a(params, a_sym))
    return instances


def run_oracle(config: RunConfig, settings: Settings) -> Report:
    """
    Finite-difference cross-check: the unit ball against h_nu^4 with the
    observed order over n/4, n/2, n, then the two-ball problem against
    h_nu(a) at ``a`` (or 0.2, 0.4, 0.6) and at the symmetric endpoint.
    """
    params = _params(config)
    report = Report(Command.ORACLE, {"N": params.N, "n": config.n, "a": config.a})

    clamped = solve_clamped(RadialMesh(N=params.N, R=1.0, n=config.n), settings.oracle)
    reference = root_h(params.nu) ** 4
    rel_error = abs(clamped.lambda_min - reference) / reference
    report.add(
        {
            "check": "clamped_ball",
            "n": config.n,
            "value": clamped.lambda_min,
            "reference": reference,
            "rel_error": rel_error,
            "iterations": clamped.iterations,
            "changes_sign": clamped.changes_sign
        },
        rel_error <= CLAMPED_TOLERANCE
    )

    n_list = [config.n // 4, config.n // 2, config.n]
    if n_list[0] >= 8:
        study = convergence_study(ConvergenceProblem.CLAMPED, params, n_list, settings.oracle)
        lo, hi = RATE_WINDOW
        report.add(
            {"check": "convergence_rate", "n": config.n, "value": study.rate, "n_list": n_list, "rates": study.rates},
            lo <= study.rate <= hi
        )

    for inst in _twoball_instances(params, config.a):
        h_of_a = symmetric_endpoint(params) if inst.is_symmetric else first_root_h_of_a(inst).h_of_a
        twoball = solve_twoball(params, inst.a, inst.b, config.n, settings.oracle)
        rel_error = abs(twoball.frequency - h_of_a) / h_of_a
        report.add(
            {
                "check": "two_ball_symmetric" if inst.is_symmetric else "two_ball",
                "n": config.n,
                "a": inst.a,
                "b": inst.b,
                "value": twoball.frequency,
                "reference": h_of_a,
                "rel_error": rel_error
            },
            rel_error <= TWOBALL_TOLERANCE
        )
    return report


def run_cone(config: RunConfig, settings: Settings) -> Report:
    """
    Equality on the cone ball, strictness on the annulus r1 < d < r2
    (skipped when r1 = 0, the ball itself), L-independence and minimality.
    """
    params = _params(config)
    fixture = ConeFixture.metric_cone_with_avr(config.avr, params.N)
    V = config.volume if config.volume is not None else params.omega_N
    report = Report(
        Command.CONE,
        {"N": params.N, "avr": config.avr, "volume": V, "r1": config.r1, "r2": config.r2, "n": config.n}
    )

    quadrature = settings.quadrature
    equality = sharpness_equality_check(fixture, V, config=quadrature)
    report.add({"check": "equality", **equality.to_dict()}, abs(equality.rel_gap) <= EQUALITY_TOLERANCE)

    if config.r1 > 0:
        annulus = annulus_inequality_check(fixture, config.r1, config.r2, n=config.n, config=settings.oracle)
        report.add({"check": "annulus", **annulus.to_dict()}, annulus.rel_gap > annulus.tolerance)

    limit = asymptotic_limit_check(fixture, ASYMPTOTIC_RADII, config=quadrature)
    report.add({"check": "asymptotic", **limit.to_dict()}, limit.passed)

    trials = perturbed_trials(fixture, V, seed=config.seed, config=quadrature)
    report.add({"check": "perturbed_trials", **trials.to_dict()}, trials.all_larger)
    return report


def _random_profiles(params: SpectralParams, seed: int) -> List[MeasuredProfile]:
    rng = np.random.default_rng(seed)
    profiles = []
    for _ in range(RANDOM_PROFILES):
        nodes = np.cumsum(rng.uniform(0.01, 1.0, RANDOM_CELLS))
        values = rng.uniform(0.0, 1.0, RANDOM_CELLS)
        # repeated values exercise the tie handling
        values[rng.integers(0, RANDOM_CELLS, 5)] = values[0]
        profiles.append(MeasuredProfile(nodes, values, rng.uniform(0.1, 2.0, RANDOM_CELLS)))
    return profiles


def _equimeasurability_gap(profile: MeasuredProfile, params: SpectralParams) -> float:
    rearranged = rearrange(profile.with_values(np.abs(profile.values)), params)
    gaps = []
    for power in (1.0, 2.0, 4.0):
        exact = profile.integral(power)
        gaps.append(abs(rearranged.star_integral(power) - exact) / max(exact, 1e-300))
    return max(gaps)


def _hardy_littlewood_gaps(profile: MeasuredProfile, params: SpectralParams, seed: int):
    """Relative defect on the full set and worst relative excess on random subsets."""
    full_lhs, full_rhs = hardy_littlewood_sides(profile, np.ones(profile.nodes.size, dtype=bool), params)
    equality = abs(full_lhs - full_rhs) / max(abs(full_rhs), 1e-300)

    rng = np.random.default_rng(seed)
    excess = -math.inf
    for _ in range(20):
        mask = rng.random(profile.nodes.size) < 0.5
        if not np.any(mask):
            continue
        lhs, rhs = hardy_littlewood_sides(profile, mask, params)
        excess = max(excess, (lhs - rhs) / max(abs(rhs), 1e-300))
    return equality, excess


def run_rearrange_verify(config: RunConfig, settings: Settings) -> Report:
    """
    Equimeasurability and Hardy-Littlewood on discrete profiles (random ones,
    or the CSV given by ``profile``), then the nodal comparison on a positive
    and a sign-changing radial profile of the unit ball.
    """
    params = _params(config)
    report = Report(
        Command.REARRANGE_VERIFY,
        {"N": params.N, "avr": config.avr, "n": config.n, "seed": config.seed, "profile": config.profile}
    )

    profiles = [MeasuredProfile.from_csv(config.profile)] if config.profile else _random_profiles(params, config.seed)
    worst = max(_equimeasurability_gap(p, params) for p in profiles)
    report.add(
        {"check": "equimeasurability", "value": worst, "tolerance": EQUIMEASURABLE_TOLERANCE, "profiles": len(profiles)},
        worst <= EQUIMEASURABLE_TOLERANCE
    )

    gaps = [_hardy_littlewood_gaps(p, params, config.seed) for p in profiles]
    equality = max(g[0] for g in gaps)
    excess = max(g[1] for g in gaps)
    report.add(
        {"check": "hardy_littlewood_equality", "value": equality, "tolerance": EQUIMEASURABLE_TOLERANCE},
        equality <= EQUIMEASURABLE_TOLERANCE
    )
    report.add(
        {"check": "hardy_littlewood_subsets", "value": excess, "tolerance": EQUIMEASURABLE_TOLERANCE},
        excess <= EQUIMEASURABLE_TOLERANCE
    )

    comparison_tolerance = max(COMPARISON_SCALE / config.n ** 2, 1e-6)
    for label, poly in (("bump", BUMP), ("nodal", NODAL)):
        nodal = talenti_construction(
            RadialProfile.from_polynomial(poly, 1.0, label=label),
            params,
            avr=config.avr,
            n=config.n,
            tolerance=comparison_tolerance,
            config=settings.quadrature
        )
        endpoint = max(abs(v) for v in nodal.endpoint_values)
        checks = [
            ("endpoint_values", endpoint, EQUIMEASURABLE_TOLERANCE),
            ("flux_residual", nodal.flux_residual, FLUX_SCALE / config.n ** 2),
            ("laplacian_residual", nodal.laplacian_residual, LAPLACIAN_SCALE / config.n),
            ("energy_residual", nodal.energy_residual, ENERGY_TOLERANCE),
        ]
        for name, value, tolerance in checks:
            report.add({"check": f"{label}.{name}", "value": value, "tolerance": tolerance}, value <= tolerance)

        comparisons = [nodal.comparison_plus] + ([nodal.comparison_minus] if nodal.comparison_minus else [])
        report.add(
            {
                "check": f"{label}.comparison",
                "value": min(c.relative_min_margin for c in comparisons),
                "tolerance": comparison_tolerance,
                "details": nodal.to_dict()
            },
            nodal.comparison_holds
        )
        l2_excess = nodal.l2_lhs / nodal.l2_rhs - 1.0
        report.add(
            {"check": f"{label}.l2_consequence", "value": l2_excess, "tolerance": comparison_tolerance},
            l2_excess <= comparison_tolerance
        )
    return report


def _tan_tanh_root() -> float:
    """First root of tan x = tanh x above pi, as sin x cosh x - cos x sinh x = 0 on (pi, 3 pi/2)."""
    return float(optimize.brentq(
        lambda x: math.sin(x) * math.cosh(x) - math.cos(x) * math.sinh(x),
        math.pi, 1.5 * math.pi,
        xtol=1e-14
    ))


def run_roots(config: RunConfig, settings: Settings) -> Report:
    """
    Zeros j_{nu,k} and the root h_nu at the requested order, then the
    closed forms of order 1/2: j_{1/2,k} = k pi and tan h = tanh h.
    """
    params = _params(config)
    nu = params.nu.nu
    report = Report(Command.ROOTS, {"N": params.N, "nu": nu, "k_max": ROOT_TABLE_SIZE})

    zeros = [zero_j(nu, k) for k in range(1, ROOT_TABLE_SIZE + 1)]
    for k, z in enumerate(zeros, start=1):
        residual = abs(float(special.jv(nu, z)))
        report.add(
            {"check": "zero_j", "nu": nu, "k": k, "value": z, "abs_error": residual},
            residual <= ZERO_RESIDUAL_TOLERANCE
        )

    h = root_h(nu)
    delta = 1e-9 * h
    sign_change = cross_product(nu, h - delta) * cross_product(nu, h + delta) <= 0
    report.add(
        {"check": "root_h", "nu": nu, "value": h, "bracket": zeros[:2]},
        zeros[0] < h < zeros[1] and sign_change
    )

    for k in range(1, ROOT_TABLE_SIZE + 1):
        error = abs(zero_j(0.5, k) - k * math.pi)
        report.add(
            {
                "check": "zero_j_half_order",
                "nu": 0.5,
                "k": k,
                "value": zero_j(0.5, k),
                "reference": k * math.pi,
                "abs_error": error
            },
            error <= HALF_ORDER_ZERO_TOLERANCE
        )

    reference = _tan_tanh_root()
    error = abs(root_h(0.5) - reference)
    report.add(
        {"check": "root_h_half_order", "nu": 0.5, "value": root_h(0.5), "reference": reference, "abs_error": error},
        error <= HALF_ORDER_ROOT_TOLERANCE
    )
    return report


def run_identity(config: RunConfig, settings: Settings) -> Report:
    """The f_0 integral identity at N, or at N = 2, 2.5 and 3 when no dimension is given."""
    dimensions = [config.N] if config.N is not None else list(IDENTITY_DIMENSIONS)
    report = Report(Command.IDENTITY, {"N": dimensions})
    for N in dimensions:
        check = bessel_identity_check(SpectralParams.from_dimension(N), config=settings.quadrature)
        report.add(
            {
                "N": N,
                "lhs": check.lhs,
                "rhs": check.rhs,
                "residual": check.residual,
                "abs_err_estimate": check.details["abs_err_estimate"]
            },
            abs(check.residual) < IDENTITY_TOLERANCE
        )
    return report


SUITES: Dict[Command, Callable[[RunConfig, Settings], Report]] = {
    Command.CERTIFY_BOUNDS: run_certify_bounds,
    Command.N0: run_n0,
    Command.REDUCTION: run_reduction,
    Command.ORACLE: run_oracle,
    Command.CONE: run_cone,
    Command.REARRANGE_VERIFY: run_rearrange_verify,
    Command.ROOTS: run_roots,
    Command.IDENTITY: run_identity,
}


# Suites that pick their own dimensions when none is given
DIMENSION_SWEEPS = {Command.IDENTITY}


def run_report_all(config: RunConfig, settings: Settings) -> Report:
    """
    Every suite. Without a dimension, N defaults to 2 except for suites
    that sweep their own dimensions.
    """
    base = config.model_dump()
    base.pop("nu", None)
    N = config.N if config.N is not None else DEFAULT_N

    report = Report(Command.REPORT_ALL, {"N": N})
    for command, runner in SUITES.items():
        suite_N = config.N if command in DIMENSION_SWEEPS else N
        sub = runner(RunConfig(**{**base, "N": suite_N, "command": command}), settings)
        summary = sub.summary
        report.add({"command": command.value, "total": summary["total"], "failed": summary["failed"]}, sub.passed)
        report.sections[command.value] = sub.to_dict()
        if not sub.passed:
            logger.warning("Suite failed", suite=command.value, failed=summary["failed"])
    return report


RUNNERS: Dict[Command, Callable[[RunConfig, Settings], Report]] = {**SUITES, Command.REPORT_ALL: run_report_all}


def run(config: RunConfig, settings: Optional[Settings] = None) -> int:
    """
    Run one command and emit its report.

    Returns:
        Exit code: 0 on success, 2 when a check fails, 1 on usage errors
    """
    settings = settings or Settings.from_env()
    configure_roots(settings.roots)
    config_hash = config.config_hash()

    with LogContext(command=config.command.value, config_hash=config_hash[:12]):
        logger.info("Run started", workers=settings.parallel.workers)
        try:
            report = RUNNERS[config.command](config, settings)
        except (UsageError, DomainError) as e:
            logger.error("Invalid input", error_type=type(e).__name__, error=str(e))
            return EXIT_USAGE
        except PlateToneError as e:
            logger.error("Run failed", error_type=type(e).__name__, error=str(e), exc_info=True)
            report = Report(config.command, config.model_dump(mode="json", exclude={"output"}))
            report.add(e.to_dict(), False)

        report.versions = {
            "plate_tone": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "config_sha256": config_hash
        }

        try:
            emit(report, config.format, config.output)
        except OSError:
            return EXIT_USAGE

        summary = report.summary
        logger.info("Run completed", passed=report.passed, total=summary["total"], failed=summary["failed"])
        return EXIT_OK if report.passed else EXIT_FAILED


class _ArgumentParser(argparse.ArgumentParser):
    """ArgumentParser raising UsageError instead of exiting with status 2."""

    def error(self, message: str):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="plate_tone", description="Principal frequency checks for clamped plates.")
    parser.add_argument("command", choices=[c.value for c in Command])
    parser.add_argument("--config", help="Flat JSON file of run settings; flags take precedence")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")

    # None means "not given" so that the config file can supply it
    parser.add_argument("--N", type=float, default=None)
    parser.add_argument("--nu", type=float, default=None)
    parser.add_argument("--grid-size", dest="grid_size", type=int, default=None)
    parser.add_argument("--n", type=int, default=None)
    parser.add_argument("--tol", type=float, default=None)
    parser.add_argument("--N-lo", dest="N_lo", type=float, default=None)
    parser.add_argument("--N-hi", dest="N_hi", type=float, default=None)
    parser.add_argument("--step", type=float, default=None)
    parser.add_argument("--a", type=float, default=None, help="Two-ball radius; 0.2, 0.4 and 0.6 when omitted")
    parser.add_argument("--avr", type=float, default=None)
    parser.add_argument("--volume", type=float, default=None)
    parser.add_argument("--r1", type=float, default=None, help="Inner annulus radius (default 0.05); 0 skips the annulus")
    parser.add_argument("--r2", type=float, default=None)
    parser.add_argument("--scan-points", dest="scan_points", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--profile", default=None, help="CSV with columns radius,value,mass")
    parser.add_argument("--output", default=None)
    parser.add_argument("--format", choices=[f.value for f in OutputFormat], default=None)
    return parser


CONFIG_FIELDS = set(RunConfig.model_fields) - {"command"}


def load_config_file(path: str) -> Dict[str, Any]:
    """
    Read a flat JSON object of run settings.

    Raises:
        UsageError: If the file is unreadable, not JSON, nested, or has unknown keys
    """
    try:
        with open(path, encoding="utf-8") as handle:
            data = json.load(handle)
    except (OSError, json.JSONDecodeError) as e:
        raise UsageError(f"cannot read config file {path}: {e}")

    if not isinstance(data, dict):
        raise UsageError("config file must hold a JSON object")
    nested = [k for k, v in data.items() if isinstance(v, (dict, list))]
    if nested:
        raise UsageError(f"config file must be flat; nested keys: {nested}")
    unknown = sorted(set(data) - CONFIG_FIELDS)
    if unknown:
        raise UsageError(f"unknown config keys: {unknown}")
    return data


def parse_run_config(argv: Optional[Sequence[str]] = None) -> Tuple[RunConfig, Optional[str]]:
    """
    Merge the config file with command-line flags (flags win) and validate.

    Returns:
        The validated RunConfig and the requested log level

    Raises:
        UsageError: On bad flags or an unreadable config file
        ValidationError: If a value fails validation
    """
    args = build_parser().parse_args(argv)
    merged: Dict[str, Any] = load_config_file(args.config) if args.config else {}
    flags = {k: v for k, v in vars(args).items() if k in CONFIG_FIELDS and v is not None}
    merged.update(flags)
    if args.N is not None and "nu" not in flags:
        merged.pop("nu", None)
    if args.nu is not None and "N" not in flags:
        merged.pop("N", None)
    merged["command"] = args.command
    return RunConfig(**merged), args.log_level


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        settings = Settings.from_env()
        config, log_level = parse_run_config(argv)
    except (UsageError, ValidationError, ValueError) as e:
        setup_logging("WARNING")
        logger.error("Invalid configuration", error_type=type(e).__name__, error=str(e))
        sys.stderr.write(f"plate_tone: {e}\n")
        return EXIT_USAGE

    setup_logging(log_level or settings.log_level)
    return run(config, settings)


if __name__ == "__main__":
    sys.exit(main())
