"""
Finite-difference oracle for the weighted clamped eigenproblems.

A cell-centred radial mesh carries a conservative discretization L of
Delta_{0,N}. The fourth-order problem is the quadratic form
sum_i m_i (L u)_i^2 over sum_i m_i u_i^2, minimized over node vectors that
satisfy the boundary conditions as linear constraints. Constraints are
removed with an orthonormal null-space basis and the smallest eigenvalue
is found by inverse power iteration on a Cholesky factorization.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from scipy import linalg

from ..config.settings import N_MAX, N_MIN, OracleConfig
from ..model.model_space import SpectralParams, unit_ball_volume
from ..special.bessel import root_h, zero_j
from ..utils.errors import ConvergenceError, DomainError
from ..utils.logger import StructuredLogger

logger = StructuredLogger(__name__)

MIN_CELLS = 8
# One-sided relation through the last three nodes, exact on (r - R)^2 (c0 + c1 r)
CLAMP_STENCIL = np.array([225.0, -50.0, 9.0])
# Slope coefficient of the same relation when u'(R) = p
CLAMP_SLOPE = 60.0
# Quadratic extrapolation from the last three nodes to the boundary face
EXTRAPOLATION = np.array([15.0, -10.0, 3.0]) / 8.0
SIGN_TOLERANCE = 1e-8
# Rounding bound on x^T K x is this multiple of eps |x|^T |K| |x|
ROUNDING_FACTOR = 8.0
_EPS = float(np.finfo(float).eps)


class BoundaryCondition(str, Enum):
    """Boundary conditions of the single-domain problem."""
    CLAMPED_OUTER = "clamped_outer"
    CLAMPED_BOTH = "clamped_both"


@dataclass(frozen=True)
class RadialMesh:
    """
    Cell-centred mesh on [r_inner, R]: faces r_inner + j h, nodes at cell centres.

    ``masses`` are the exact shell measures omega_N (f_i^N - f_{i-1}^N);
    ``midpoint_weights`` are N omega_N r_i^{N-1} h.
    """

    N: float
    R: float
    n: int
    r_inner: float = 0.0

    def __post_init__(self):
        """Validate configuration values."""
        if self.n < MIN_CELLS:
            raise DomainError(f"mesh needs at least {MIN_CELLS} cells", n=self.n)
        if not N_MIN < self.N < N_MAX:
            raise DomainError(f"N must be in ({N_MIN}, {N_MAX})", N=self.N)
        if not 0 <= self.r_inner < self.R:
            raise DomainError("need 0 <= r_inner < R", r_inner=self.r_inner, R=self.R)

    @property
    def h(self) -> float:
        return (self.R - self.r_inner) / self.n

    @property
    def faces(self) -> np.ndarray:
        return self.r_inner + self.h * np.arange(self.n + 1)

    @property
    def nodes(self) -> np.ndarray:
        return self.r_inner + self.h * (np.arange(1, self.n + 1) - 0.5)

    @property
    def face_weights(self) -> np.ndarray:
        return self.faces ** (self.N - 1.0)

    @property
    def volumes(self) -> np.ndarray:
        """Shell volume over N h, the discrete counterpart of r^{N-1}."""
        f = self.faces ** self.N
        return (f[1:] - f[:-1]) / (self.N * self.h)

    @property
    def masses(self) -> np.ndarray:
        f = self.faces ** self.N
        return unit_ball_volume(self.N) * (f[1:] - f[:-1])

    @property
    def midpoint_weights(self) -> np.ndarray:
        return self.N * unit_ball_volume(self.N) * self.nodes ** (self.N - 1.0) * self.h

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary."""
        return {"N": self.N, "R": self.R, "n": self.n, "r_inner": self.r_inner}


@dataclass
class DiscreteOperator:
    """
    Quadratic-form data of a discrete clamped problem.

    ``matrix`` maps unknowns to discrete Laplacian values, ``energy_weights``
    weight its rows, ``mass_weights`` weight the unknowns and ``constraints``
    rows must annihilate every admissible vector.
    """

    matrix: np.ndarray
    energy_weights: np.ndarray
    mass_weights: np.ndarray
    constraints: np.ndarray
    bc: str

    def weighted_asymmetry(self, u: np.ndarray, v: np.ndarray) -> float:
        """|<Lu, v>_m - <u, Lv>_m| for square node operators."""
        L, m = self.matrix, self.energy_weights
        return float(abs(np.dot(m * (L @ u), v) - np.dot(m * u, L @ v)))

    def stiffness(self) -> np.ndarray:
        """A^T diag(m) A."""
        return self.matrix.T @ (self.energy_weights[:, None] * self.matrix)


@dataclass
class EigResult:
    """Smallest discrete eigenvalue and its eigenvector."""

    lambda_min: float
    eigenvector: np.ndarray
    mesh: RadialMesh
    iterations: int
    residual: float
    secondary: Optional[np.ndarray] = None
    secondary_mesh: Optional[RadialMesh] = None
    notes: List[str] = field(default_factory=list)

    @property
    def changes_sign(self) -> bool:
        """Whether the ground state takes both signs beyond round-off."""
        values = self.eigenvector if self.secondary is None else np.concatenate(
            [self.eigenvector, self.secondary]
        )
        scale = float(np.max(np.abs(values)))
        return bool(np.any(values > SIGN_TOLERANCE * scale) and np.any(values < -SIGN_TOLERANCE * scale))

    @property
    def frequency(self) -> float:
        """lambda_min^{1/4}."""
        return self.lambda_min ** 0.25

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary."""
        result = {
            "lambda_min": self.lambda_min,
            "frequency": self.frequency,
            "iterations": self.iterations,
            "residual": self.residual,
            "changes_sign": self.changes_sign,
            "mesh": self.mesh.to_dict(),
            "notes": self.notes
        }
        if self.secondary_mesh is not None:
            result["secondary_mesh"] = self.secondary_mesh.to_dict()
        return result


def laplacian_matrix(mesh: RadialMesh) -> np.ndarray:
    """
    Conservative stencil with zero flux through both end faces.

    (L u)_i = (W_{i+1/2}(u_{i+1} - u_i) - W_{i-1/2}(u_i - u_{i-1})) / (vol_i h^2)
    """
    n = mesh.n
    W = mesh.face_weights
    scale = 1.0 / (mesh.volumes * mesh.h ** 2)
    L = np.zeros((n, n))
    idx = np.arange(n)
    inner = W[1:n]  # faces shared by cells i and i+1
    L[idx[:-1], idx[:-1]] -= inner
    L[idx[:-1], idx[1:]] += inner
    L[idx[1:], idx[1:]] -= inner
    L[idx[1:], idx[:-1]] += inner
    return scale[:, None] * L


def _outer_clamp_row(n: int, width: int, offset: int = 0) -> np.ndarray:
    row = np.zeros(width)
    row[offset + n - 1] = CLAMP_STENCIL[0]
    row[offset + n - 2] = CLAMP_STENCIL[1]
    row[offset + n - 3] = CLAMP_STENCIL[2]
    return row


def build_operator(mesh: RadialMesh, bc: BoundaryCondition = BoundaryCondition.CLAMPED_OUTER) -> DiscreteOperator:
    """
    Discrete clamped problem on a ball or annulus.

    Clamping at a face is zero flux through it plus the one-sided relation
    225 u_n - 50 u_{n-1} + 9 u_{n-2} = 0. At the origin the face weight
    vanishes, which is the natural condition there.

    Raises:
        DomainError: If the boundary condition does not match the mesh
    """
    bc = BoundaryCondition(bc)
    if bc is BoundaryCondition.CLAMPED_OUTER and mesh.r_inner > 0:
        raise DomainError("clamped_outer needs a ball mesh (r_inner = 0)", r_inner=mesh.r_inner)
    if bc is BoundaryCondition.CLAMPED_BOTH and mesh.r_inner == 0:
        raise DomainError("clamped_both needs an annulus mesh (r_inner > 0)")

    n = mesh.n
    rows = [_outer_clamp_row(n, n)]
    if bc is BoundaryCondition.CLAMPED_BOTH:
        rows.append(_outer_clamp_row(n, n)[::-1].copy())

    return DiscreteOperator(
        matrix=laplacian_matrix(mesh),
        energy_weights=mesh.masses,
        mass_weights=mesh.masses,
        constraints=np.array(rows),
        bc=bc.value
    )


def build_twoball_operator(params: SpectralParams, a: float, b: float, n: int) -> DiscreteOperator:
    """
    Coupled problem on [0, a] and [0, b].

    Unknowns are (U_1..U_n, p, W_1..W_n, q) with p = U'(a), q = W'(b). The
    outer fluxes are a^{N-1} p and b^{N-1} q. Constraints impose U(a) = 0,
    W(b) = 0, a^{N-1} p = b^{N-1} q and Delta U(a) + Delta W(b) = 0, the
    boundary Laplacians extrapolated from the last three nodes.
    """
    N = params.N
    mesh_a = RadialMesh(N=N, R=a, n=n)
    mesh_b = RadialMesh(N=N, R=b, n=n)
    size = 2 * n + 2
    p_col, q_col = n, 2 * n + 1

    A = np.zeros((2 * n, size))
    A[:n, :n] = laplacian_matrix(mesh_a)
    A[n - 1, p_col] = a ** (N - 1.0) / (mesh_a.h * mesh_a.volumes[-1])
    A[n:, n + 1:2 * n + 1] = laplacian_matrix(mesh_b)
    A[2 * n - 1, q_col] = b ** (N - 1.0) / (mesh_b.h * mesh_b.volumes[-1])

    C = np.zeros((4, size))
    C[0] = _outer_clamp_row(n, size)
    C[0, p_col] = CLAMP_SLOPE * mesh_a.h
    C[1] = _outer_clamp_row(n, size, offset=n + 1)
    C[1, q_col] = CLAMP_SLOPE * mesh_b.h
    C[2, p_col] = a ** (N - 1.0)
    C[2, q_col] = -(b ** (N - 1.0))
    C[3] = (
        EXTRAPOLATION[0] * A[n - 1] + EXTRAPOLATION[1] * A[n - 2] + EXTRAPOLATION[2] * A[n - 3]
        + EXTRAPOLATION[0] * A[2 * n - 1] + EXTRAPOLATION[1] * A[2 * n - 2] + EXTRAPOLATION[2] * A[2 * n - 3]
    )
    # scale the Laplacian row to the size of the others
    C[3] /= max(float(np.max(np.abs(C[3]))), 1.0)

    mass = np.concatenate([mesh_a.masses, [0.0], mesh_b.masses, [0.0]])
    energy = np.concatenate([mesh_a.masses, mesh_b.masses])
    return DiscreteOperator(matrix=A, energy_weights=energy, mass_weights=mass, constraints=C, bc="twoball")


def _inverse_power(K: np.ndarray, M: np.ndarray, start: np.ndarray, config: OracleConfig):
    """
    Inverse iteration with the Rayleigh quotient as eigenvalue estimate.

    Stops once the change in the quotient falls below config.tolerance
    relative, or below the rounding level of x^T K x, which bounds what
    the quotient can resolve on fine meshes.
    """
    factor = linalg.cho_factor(K)
    abs_K = np.abs(K)
    x = start / math.sqrt(float(start @ M @ start))
    lam = float(x @ K @ x)

    for iteration in range(1, config.max_iterations + 1):
        y = linalg.cho_solve(factor, M @ x)
        x = y / math.sqrt(float(y @ M @ y))
        new_lam = float(x @ K @ x)
        increment = abs(new_lam - lam)
        noise = ROUNDING_FACTOR * _EPS * float(np.abs(x) @ abs_K @ np.abs(x))
        logger.debug("Inverse power step", iteration=iteration, rayleigh=new_lam, increment=increment, noise=noise)
        lam = new_lam
        if increment <= max(config.tolerance * lam, noise):
            return lam, x, iteration

    residual = float(np.linalg.norm(K @ x - lam * (M @ x)))
    raise ConvergenceError(
        "Inverse power iteration did not converge",
        iterations=config.max_iterations,
        residual=residual,
        rayleigh=lam
    )


def solve_operator(
    op: DiscreteOperator,
    config: Optional[OracleConfig] = None,
    method: str = "inverse_power"
):
    """
    Smallest eigenpair of the constrained quadratic-form problem.

    Args:
        op: Discrete operator
        config: Iteration cap and tolerance
        method: "inverse_power" or "eigh" (dense generalized eigensolver)

    Returns:
        (lambda, full unknown vector, iterations, relative residual)
    """
    config = config or OracleConfig()
    Z = linalg.null_space(op.constraints)
    K = Z.T @ op.stiffness() @ Z
    K = 0.5 * (K + K.T)
    M = Z.T @ (op.mass_weights[:, None] * Z)
    M = 0.5 * (M + M.T)

    if method == "eigh":
        values, vectors = linalg.eigh(K, M, subset_by_index=[0, 0])
        lam, y, iterations = float(values[0]), vectors[:, 0], 0
    elif method == "inverse_power":
        start = Z.T @ np.where(op.mass_weights > 0, 1.0, 0.0)
        if not np.any(start):
            start = np.ones(Z.shape[1])
        lam, y, iterations = _inverse_power(K, M, start, config)
    else:
        raise DomainError("unknown eigensolver", method=method)

    residual = float(
        np.linalg.norm(K @ y - lam * (M @ y)) / (np.linalg.norm(K) * np.linalg.norm(y))
    )
    u = Z @ y
    u = u / math.sqrt(float(np.dot(op.mass_weights * u, u)))
    if u[int(np.argmax(np.abs(u)))] < 0:
        u = -u
    return lam, u, iterations, residual


def solve_clamped(
    mesh: RadialMesh,
    config: Optional[OracleConfig] = None,
    method: str = "inverse_power"
) -> EigResult:
    """
    Smallest clamped eigenvalue on a ball, or on an annulus when the mesh has
    an inner radius.

    Raises:
        ConvergenceError: If inverse iteration does not converge
    """
    bc = BoundaryCondition.CLAMPED_BOTH if mesh.r_inner > 0 else BoundaryCondition.CLAMPED_OUTER
    lam, u, iterations, residual = solve_operator(build_operator(mesh, bc), config, method)
    if lam <= 0:
        raise ConvergenceError("non-positive discrete eigenvalue", iterations=iterations, residual=residual, lam=lam)

    result = EigResult(lambda_min=lam, eigenvector=u, mesh=mesh, iterations=iterations, residual=residual)
    if result.changes_sign:
        result.notes.append("ground state changes sign")
        logger.warning("Sign-changing ground state", N=mesh.N, R=mesh.R, r_inner=mesh.r_inner)
    logger.info("Clamped problem solved", N=mesh.N, R=mesh.R, n=mesh.n, r_inner=mesh.r_inner, lam=lam)
    return result


def solve_twoball(
    params: SpectralParams,
    a: float,
    b: float,
    n: int,
    config: Optional[OracleConfig] = None,
    method: str = "inverse_power"
) -> EigResult:
    """
    Minimal coupled Rayleigh quotient over the balls of radii a and b.

    When the smaller ball is thinner than one cell of the larger one, the
    problem degenerates to the clamped ball of the larger radius.

    Raises:
        DomainError: If a radius is not positive
    """
    if a <= 0 or b <= 0:
        raise DomainError("radii must be positive", a=a, b=b)
    big, small = max(a, b), min(a, b)
    if small < big / n:
        logger.info("Two-ball problem degenerates to one ball", a=a, b=b, n=n)
        result = solve_clamped(RadialMesh(N=params.N, R=big, n=n), config, method)
        result.notes.append("smaller ball below one cell; single-ball value")
        return result

    op = build_twoball_operator(params, a, b, n)
    lam, x, iterations, residual = solve_operator(op, config, method)
    result = EigResult(
        lambda_min=lam,
        eigenvector=x[:n],
        mesh=RadialMesh(N=params.N, R=a, n=n),
        iterations=iterations,
        residual=residual,
        secondary=x[n + 1:2 * n + 1],
        secondary_mesh=RadialMesh(N=params.N, R=b, n=n)
    )
    logger.info("Two-ball problem solved", N=params.N, a=a, b=b, n=n, lam=lam)
    return result


class ConvergenceProblem(str, Enum):
    """Problems with a closed-form reference eigenvalue."""
    CLAMPED = "clamped"
    TWOBALL_SYMMETRIC = "twoball_symmetric"


@dataclass
class ConvergenceResult:
    """Eigenvalues, errors and observed orders along a mesh sequence."""

    problem: str
    N: float
    exact: float
    n_list: List[int]
    values: List[float]
    errors: List[float]
    rates: List[float]

    @property
    def rate(self) -> float:
        """Order estimated from the two finest meshes."""
        return self.rates[-1]

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary."""
        return {
            "problem": self.problem,
            "N": self.N,
            "exact": self.exact,
            "n_list": self.n_list,
            "values": self.values,
            "errors": self.errors,
            "rates": self.rates,
            "rate": self.rate
        }


def reference_value(problem: ConvergenceProblem, params: SpectralParams) -> float:
    """h_nu^4 on the unit ball, or (2^{1/N} j_{nu,1})^4 for equal radii."""
    if problem is ConvergenceProblem.CLAMPED:
        return root_h(params.nu) ** 4
    return (2.0 ** (1.0 / params.N) * zero_j(params.nu, 1)) ** 4


def convergence_study(
    problem: ConvergenceProblem,
    params: SpectralParams,
    n_list: Sequence[int],
    config: Optional[OracleConfig] = None
) -> ConvergenceResult:
    """
    Observed order log(e_k / e_{k+1}) / log(n_{k+1} / n_k) against the
    closed-form reference.

    Raises:
        DomainError: If fewer than two meshes are given
    """
    problem = ConvergenceProblem(problem)
    n_list = sorted(int(n) for n in n_list)
    if len(n_list) < 2:
        raise DomainError("convergence study needs at least two meshes", n_list=n_list)

    exact = reference_value(problem, params)
    values = []
    for n in n_list:
        if problem is ConvergenceProblem.CLAMPED:
            values.append(solve_clamped(RadialMesh(N=params.N, R=1.0, n=n), config).lambda_min)
        else:
            radius = 2.0 ** (-1.0 / params.N)
            values.append(solve_twoball(params, radius, radius, n, config).lambda_min)

    errors = [abs(v - exact) for v in values]
    rates = [
        math.log(errors[k] / errors[k + 1]) / math.log(n_list[k + 1] / n_list[k])
        for k in range(len(n_list) - 1)
    ]
    result = ConvergenceResult(
        problem=problem.value, N=params.N, exact=exact,
        n_list=n_list, values=values, errors=errors, rates=rates
    )
    logger.info("Convergence study completed", problem=problem.value, N=params.N, rates=rates)
    return result
