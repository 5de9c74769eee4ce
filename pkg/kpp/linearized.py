"""
linearized.py - the moving-frame linearized operator and the small-time profile.

Linearizing the PDE about a travelling wave f in the frame moving with
speed lambda gives

    B w = (-1)^(m+1) w^(2m) + lambda w' + (1 - 2f) w,

discretized with the same stencils as the TW solver; the boundary rows
clamp w and its first m-1 differences to zero. The derivative f' spans an
approximate null direction of B (translation), so every solve here is a
least-squares solve constrained to be orthogonal to f'.

The affine centre system is B psi = f', followed for a given k by
B phi = k psi + k^2 (psi' + psi^2). The value of k is not selected here;
scan_k tabulates the attained residual over k.
"""

#####################################
# Import Modules
#####################################

# Import packages from Python Standard Library
from dataclasses import dataclass
from typing import Optional

# Import external packages
import numpy as np
import pandas as pd
import scipy.sparse as sp
from scipy.integrate import trapezoid
from scipy.sparse.linalg import spsolve

# Import functions from local modules
from kpp import stencils
from kpp.charpoly import build_charpoly, find_roots
from kpp.errors import AssemblyError, DomainError, SolverError
from kpp.model import EquilibriumSide, Grid, TWProfile, profile_derivative
from kpp.twsolver import default_spacing
from utils.utils_logger import logger

#####################################
# Domain Types
#####################################

SELFSIMILAR_EXTENT = 20.0


@dataclass(frozen=True, eq=False)
class LinearOperator:
    """Sparse B on the grid of a TW profile, with f' sampled on the same nodes."""

    matrix: sp.csc_matrix
    profile: TWProfile
    fprime: np.ndarray

    @property
    def grid(self) -> Grid:
        return self.profile.grid

    @property
    def weights(self) -> np.ndarray:
        """Composite trapezoid weights of the grid."""
        w = np.full(self.grid.n, self.grid.h)
        w[0] = w[-1] = 0.5 * self.grid.h
        return w

    def inner(self, a: np.ndarray, b: np.ndarray) -> float:
        return float(trapezoid(a * b, dx=self.grid.h))


@dataclass(frozen=True, eq=False)
class CenterSolution:
    """psi with B psi ~ rhs, psi orthogonal to f'; residual is relative to |rhs|_inf."""

    psi: np.ndarray
    residual: float
    orthogonality_defect: float
    operator: LinearOperator


@dataclass(frozen=True, eq=False)
class SecondOrderReport:
    k: float
    phi: np.ndarray
    residual: float


#####################################
# Assembly
#####################################


def assemble_B(profile: TWProfile) -> LinearOperator:
    """Assemble B for the profile's own lambda and m; f' from model.profile_derivative."""
    grid = profile.grid
    if not grid.supports_order(profile.m):
        raise AssemblyError(f"Grid has {grid.n} nodes; m={profile.m} needs at least {4 * profile.m + 1}.")
    f = np.asarray(profile.values, dtype=float)
    matrix = stencils.linear_operator(
        grid.n, grid.h, profile.m, drift=profile.lam, potential=1.0 - 2.0 * f
    ).tocsc()
    logger.debug(f"Assembled B for m={profile.m}, lambda={profile.lam} on {grid.n} nodes")
    return LinearOperator(matrix, profile, profile_derivative(profile))


def translation_residual(op: LinearOperator) -> float:
    """|B f'|_inf: small when f' is an approximate null vector."""
    return float(np.max(np.abs(op.matrix @ op.fprime)))


def exponential_mode_residual(op: LinearOperator, mu: complex, region: tuple) -> float:
    """
    Apply B to samples of e^(mu y) on a far-field region.

    Returns max |B w| / max |w| over the interior rows inside region. The
    samples are anchored at the region's midpoint so they stay finite; only
    the columns those rows touch are used.
    """
    y = op.grid.nodes
    m = op.profile.m
    rows = np.nonzero((y >= region[0]) & (y <= region[1]) & stencils.interior_mask(op.grid.n, m))[0]
    if rows.size == 0:
        raise DomainError(f"Region {region} contains no interior rows.")
    lo, hi = rows[0] - m, rows[-1] + m
    anchor = 0.5 * (region[0] + region[1])
    w = np.exp(mu * (y[lo:hi + 1] - anchor))
    applied = op.matrix[rows[0]:rows[-1] + 1, lo:hi + 1] @ w
    return float(np.max(np.abs(applied)) / np.max(np.abs(w[m:-m])))


def stable_far_field_root(m: int, lam: float, side: EquilibriumSide) -> complex:
    """Stable root of smallest |Re mu| about one equilibrium, as a test mode."""
    roots = find_roots(build_charpoly(m, lam, side)).values
    orient = -1.0 if EquilibriumSide(side) is EquilibriumSide.ZERO else 1.0
    stable = [mu for mu in roots if orient * mu.real > 0]
    return complex(min(stable, key=lambda mu: abs(mu.real)))


#####################################
# Constrained Least Squares
#####################################


def _constrained_lstsq(matrix: sp.csc_matrix, rhs: np.ndarray, constraint: np.ndarray) -> np.ndarray:
    """
    Minimize |A x - b|_2 subject to c.x = 0.

    Solved through the augmented system
        [ I   A   0 ] [r]   [b]
        [ A^T 0  -c ] [x] = [0]
        [ 0   c^T 0 ] [v]   [0]
    so the normal equations are never formed.
    """
    n = matrix.shape[0]
    c = sp.csc_matrix(constraint[:, None])
    system = sp.bmat(
        [
            [sp.identity(n, format="csc"), matrix, None],
            [matrix.T, None, -c],
            [None, c.T, None],
        ],
        format="csc",
    )
    rhs_full = np.concatenate([rhs, np.zeros(n + 1)])
    try:
        sol = spsolve(system, rhs_full)
    except RuntimeError as e:
        raise SolverError(f"Constrained least-squares solve failed: {e}") from e
    x = sol[n:2 * n]
    if not np.all(np.isfinite(x)):
        raise SolverError("Constrained least-squares solve returned non-finite values.")
    return x


def _constrained_solve(op: LinearOperator, rhs: np.ndarray) -> np.ndarray:
    if not np.any(rhs):
        return np.zeros_like(rhs)
    constraint = op.weights * op.fprime
    norm = np.linalg.norm(constraint)
    if norm == 0.0:
        raise SolverError("Profile derivative vanishes; no translation direction to constrain.")
    return _constrained_lstsq(op.matrix, rhs, constraint / norm)


#####################################
# Affine Centre System
#####################################


def solve_affine_center(op: LinearOperator, rhs: Optional[np.ndarray] = None) -> CenterSolution:
    """
    Solve B psi = rhs (default f') orthogonally to f'.

    Args:
        op: Operator from assemble_B.
        rhs: Right-hand side on the grid nodes; f' when omitted.

    Returns:
        CenterSolution with the relative max-norm residual and the
        trapezoid inner product <psi, f'>.
    """
    rhs = op.fprime.copy() if rhs is None else np.array(rhs, dtype=float)
    if rhs.shape != (op.grid.n,):
        raise DomainError(f"rhs has shape {rhs.shape}, grid has {op.grid.n} nodes.")
    rhs[~stencils.interior_mask(op.grid.n, op.profile.m)] = 0.0
    psi = _constrained_solve(op, rhs)
    scale = float(np.max(np.abs(rhs)))
    attained = float(np.max(np.abs(op.matrix @ psi - rhs)))
    residual = attained / scale if scale > 0 else attained
    defect = abs(op.inner(psi, op.fprime))
    logger.info(f"Affine centre solve: residual={residual:.3e}, <psi,f'>={defect:.3e}")
    return CenterSolution(psi, residual, defect, op)


def second_order_parts(center: CenterSolution):
    """Linear part psi and quadratic part psi' + psi^2 of the second-order forcing."""
    psi = center.psi
    dpsi = np.gradient(psi, center.operator.grid.h, edge_order=2)
    return psi, dpsi + psi**2


def second_order_rhs(center: CenterSolution, k: float) -> np.ndarray:
    """k psi + k^2 (psi' + psi^2)."""
    linear, quadratic = second_order_parts(center)
    return k * linear + k**2 * quadratic


def second_order_residual(center: CenterSolution, k: float) -> SecondOrderReport:
    """Solve B phi = k psi + k^2 (psi' + psi^2) orthogonally to f'; residual is |B phi - rhs|_inf."""
    op = center.operator
    rhs = second_order_rhs(center, k)
    # clamp rows carry homogeneous conditions
    rhs[~stencils.interior_mask(op.grid.n, op.profile.m)] = 0.0
    phi = _constrained_solve(op, rhs)
    residual = float(np.max(np.abs(op.matrix @ phi - rhs)))
    return SecondOrderReport(float(k), phi, residual)


def scan_k(center: CenterSolution, ks) -> pd.DataFrame:
    """Residual of the second-order system for each k, as a k,residual table."""
    rows = [{"k": float(k), "residual": second_order_residual(center, float(k)).residual} for k in ks]
    logger.info(f"Scanned {len(rows)} values of k")
    return pd.DataFrame(rows, columns=["k", "residual"])


#####################################
# Small-time Self-similar Profile
#####################################


def default_selfsimilar_grid(m: int, extent: float = SELFSIMILAR_EXTENT) -> Grid:
    return Grid.from_spacing(-extent, extent, default_spacing(m))


def selfsimilar_profile(m: int, grid: Optional[Grid] = None) -> np.ndarray:
    """
    V(z) solving (-1)^(m+1) V^(2m) + z V' / (2m) = 0, V(left) = 1, V(right) = 0.

    For m = 1 this is erfc(z/2)/2. For m >= 2 V approaches 0 with
    sign-changing oscillations.
    """
    if int(m) != m or m < 1:
        raise DomainError(f"Order parameter m must be an integer >= 1, got {m}.")
    grid = grid or default_selfsimilar_grid(m)
    z = grid.nodes
    matrix = stencils.linear_operator(grid.n, grid.h, m, drift=z / (2.0 * m)).tocsc()
    rhs = stencils.clamp_rhs(grid.n, m, 1.0, 0.0)
    try:
        v = spsolve(matrix, rhs)
    except RuntimeError as e:
        raise SolverError(f"Self-similar system is singular: {e}") from e
    if not np.all(np.isfinite(v)):
        raise SolverError("Self-similar solve returned non-finite values.")
    return v


def field_frame(y: np.ndarray, values: np.ndarray) -> pd.DataFrame:
    """y,value table used for psi, phi and V."""
    return pd.DataFrame({"y": np.asarray(y, dtype=float), "value": np.asarray(values, dtype=float)})
