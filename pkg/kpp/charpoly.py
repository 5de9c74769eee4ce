"""
charpoly.py - characteristic polynomials of the linearized TW equation.

Substituting e^(mu y) into the TW equation linearized about an equilibrium
gives

    P(mu) = (-1)^(m+1) mu^(2m) + lambda mu + sigma,

with sigma = +1 about f = 0 (f(1-f) ~ f) and sigma = -1 about f = 1
(f = 1 + g, f(1-f) ~ -g). Coefficients are stored monic, highest power
first. For m = 2 this is mu^4 - lambda mu - 1 about 0 and
mu^4 - lambda mu + 1 about 1.

Roots come from the eigenvalues of the companion matrix and are polished by
Newton's method. A root counts as stable when it decays towards its own
equilibrium: Re mu < 0 at the zero side (y -> +inf), Re mu > 0 at the one
side (y -> -inf).
"""

#####################################
# Import Modules
#####################################

# Import packages from Python Standard Library
from dataclasses import dataclass

# Import external packages
import numpy as np
import pandas as pd

# Import functions from local modules
from kpp.errors import DomainError, RootFindingError
from kpp.model import EquilibriumSide
from utils.utils_logger import logger

#####################################
# Constants
#####################################

DEFAULT_ROOT_TOL = 1e-12
DEFAULT_MARGIN_TOL = 1e-9
NEWTON_POLISH_STEPS = 50
SMALL_LAMBDA_LIMIT = 0.5

#####################################
# Domain Types
#####################################


@dataclass(frozen=True, eq=False)
class CharPoly:
    """Monic characteristic polynomial of degree 2m about one equilibrium."""

    m: int
    lam: float
    side: EquilibriumSide
    coeffs: np.ndarray

    @property
    def degree(self) -> int:
        return 2 * self.m

    def __call__(self, mu):
        return np.polyval(self.coeffs, mu)

    def derivative(self, mu):
        return np.polyval(np.polyder(self.coeffs), mu)


@dataclass(frozen=True)
class RootSet:
    """Distinct roots with their multiplicities."""

    roots: tuple
    side: EquilibriumSide
    lam: float
    m: int

    @property
    def values(self) -> np.ndarray:
        """All roots repeated by multiplicity."""
        return np.array([mu for mu, mult in self.roots for _ in range(mult)], dtype=complex)

    @property
    def total_multiplicity(self) -> int:
        return sum(mult for _, mult in self.roots)

    def max_multiplicity(self) -> int:
        return max(mult for _, mult in self.roots)


@dataclass(frozen=True)
class BundleDims:
    """Dimensions of the stable, unstable and marginal exponential bundles."""

    stable: int
    unstable: int
    marginal: int

    @property
    def total(self) -> int:
        return self.stable + self.unstable + self.marginal


#####################################
# Polynomials
#####################################


def side_sign(side: EquilibriumSide) -> float:
    """sigma = +1 about f = 0, -1 about f = 1."""
    return 1.0 if EquilibriumSide(side) is EquilibriumSide.ZERO else -1.0


def build_charpoly(m: int, lam: float, side: EquilibriumSide) -> CharPoly:
    """
    Build P(mu) = (-1)^(m+1) mu^(2m) + lambda mu + sigma in monic form.

    Only the mu^(2m), mu^1 and mu^0 coefficients are nonzero.
    """
    if int(m) != m or m < 1:
        raise DomainError(f"Order parameter m must be an integer >= 1, got {m}.")
    side = EquilibriumSide(side)
    lead = (-1.0) ** (m + 1)
    coeffs = np.zeros(2 * m + 1)
    coeffs[0] = 1.0
    coeffs[2 * m - 1] = lam / lead
    coeffs[2 * m] = side_sign(side) / lead
    return CharPoly(int(m), float(lam), side, coeffs)


def companion_matrix(coeffs: np.ndarray) -> np.ndarray:
    """Frobenius companion matrix of a monic polynomial (highest power first)."""
    n = len(coeffs) - 1
    mat = np.zeros((n, n))
    rng = np.arange(n - 1)
    mat[rng + 1, rng] = 1.0
    mat[0, :] = -coeffs[1:] / coeffs[0]
    return mat


def _polish(p: CharPoly, mu: complex) -> complex:
    for _ in range(NEWTON_POLISH_STEPS):
        dp = p.derivative(mu)
        if dp == 0:
            break
        step = p(mu) / dp
        mu = mu - step
        if abs(step) <= 1e-16 * max(1.0, abs(mu)):
            break
    return complex(mu)


def find_roots(p: CharPoly, tol: float = DEFAULT_ROOT_TOL) -> RootSet:
    """
    Return all 2m roots of p, polished, with multiplicities.

    Two polished roots closer than 10 * sqrt(tol) are merged into one root of
    multiplicity 2 (or more). Imaginary parts below that distance are dropped
    so real roots stay real.
    """
    coeffs = np.asarray(p.coeffs, dtype=float)
    if not np.all(np.isfinite(coeffs)):
        raise RootFindingError("Polynomial has non-finite coefficients.", coeffs)
    estimates = np.linalg.eigvals(companion_matrix(coeffs))
    abs_coeffs = np.abs(coeffs)
    polished = []
    for est in estimates:
        mu = _polish(p, complex(est))
        # near a multiple root Newton stalls; keep whichever point is better
        if abs(p(est)) < abs(p(mu)):
            mu = complex(est)
        scale = max(1.0, float(np.polyval(abs_coeffs, abs(mu))))
        if not np.isfinite(mu) or abs(p(mu)) > tol * scale:
            logger.error(f"Root polishing failed for coefficients {coeffs.tolist()} at {mu}")
            raise RootFindingError(
                f"Root {mu} does not satisfy |P| <= {tol:g} after polishing.", coeffs
            )
        polished.append(mu)

    merge = 10.0 * np.sqrt(tol)
    clusters = []
    for mu in sorted(polished, key=lambda z: (z.real, z.imag)):
        for cluster in clusters:
            if abs(cluster[0] - mu) <= merge:
                cluster.append(mu)
                break
        else:
            clusters.append([mu])

    roots = []
    for cluster in clusters:
        mu = complex(np.mean(cluster))
        if abs(mu.imag) <= merge:
            mu = complex(mu.real, 0.0)
        roots.append((mu, len(cluster)))
    roots.sort(key=lambda r: (r[0].real, r[0].imag))
    logger.debug(f"Roots of m={p.m}, lambda={p.lam}, side={p.side.value}: {roots}")
    return RootSet(tuple(roots), p.side, p.lam, p.m)


def classify_bundles(r: RootSet, margin_tol: float = DEFAULT_MARGIN_TOL) -> BundleDims:
    """Count stable, unstable and marginal roots with the side convention."""
    orient = -1.0 if r.side is EquilibriumSide.ZERO else 1.0
    stable = unstable = marginal = 0
    for mu, mult in r.roots:
        if abs(mu.real) <= margin_tol:
            marginal += mult
        elif orient * mu.real > 0:
            stable += mult
        else:
            unstable += mult
    return BundleDims(stable, unstable, marginal)


def bundle_feasibility(m: int, lam: float, margin_tol: float = DEFAULT_MARGIN_TOL) -> int:
    """
    Surplus dimension of a connection from f = 1 to f = 0.

    dim W^u(1) + dim W^s(0) - 2m: the bundle leaving 1 as y grows plus the
    bundle decaying to 0 as y -> +inf, minus the phase-space dimension.
    A negative value rules a connection out by counting; 1 is the
    translation freedom.
    """
    one = classify_bundles(find_roots(build_charpoly(m, lam, EquilibriumSide.ONE)), margin_tol)
    zero = classify_bundles(find_roots(build_charpoly(m, lam, EquilibriumSide.ZERO)), margin_tol)
    return one.stable + zero.stable - 2 * m


#####################################
# Double Roots
#####################################


def double_root_loci(m: int, side: EquilibriumSide) -> list:
    """
    All (mu, lambda) with P(mu) = P'(mu) = 0 and real lambda.

    With s = (-1)^(m+1), P' = 0 gives lambda = -2m s mu^(2m-1); substituting
    into P leaves mu^(2m) = sigma s / (2m - 1). lambda is real only for real
    mu, so solutions exist only when sigma s > 0: mu = +-(1/(2m-1))^(1/2m).
    """
    if int(m) != m or m < 1:
        raise DomainError(f"Order parameter m must be an integer >= 1, got {m}.")
    side = EquilibriumSide(side)
    s = (-1.0) ** (m + 1)
    rhs = side_sign(side) * s / (2 * m - 1)
    if rhs <= 0:
        return []
    loci = []
    for sign in (-1.0, 1.0):
        mu = sign * rhs ** (1.0 / (2 * m))
        lam = -2 * m * s * mu ** (2 * m - 1)
        loci.append((complex(mu, 0.0), float(lam)))
    return loci


#####################################
# Small-lambda Expansions (m = 2, zero side)
#####################################


@dataclass(frozen=True)
class SmallLambdaRoots:
    mu1: float
    mu2: float
    mu_plus: complex
    mu_minus: complex


def asymptotic_roots_small_lambda(lam: float, m: int = 2) -> SmallLambdaRoots:
    """
    First-order roots of mu^4 - lambda mu - 1 near -1, 1 and +-i.

    Each is one Newton step from the lambda = 0 root:
        mu1 ~ -1 + lambda/(4 + lambda)        (stable, real)
        mu2 ~  1 + lambda/(4 - lambda)        (unstable, real)
        mu+- ~ -4 lambda/(lambda^2 + 16) +- i (1 - lambda^2/(lambda^2 + 16))
    """
    if m != 2:
        raise DomainError("Small-lambda expansions are available for m=2 only.")
    if abs(lam) > SMALL_LAMBDA_LIMIT:
        raise DomainError(f"|lambda| must be <= {SMALL_LAMBDA_LIMIT} for the expansion, got {lam}.")
    mu1 = -1.0 + lam / (4.0 + lam)
    mu2 = 1.0 + lam / (4.0 - lam)
    re = -4.0 * lam / (lam**2 + 16.0)
    im = 1.0 - lam**2 / (lam**2 + 16.0)
    return SmallLambdaRoots(mu1, mu2, complex(re, im), complex(re, -im))


#####################################
# Tables
#####################################


def root_table(m: int, lambdas, side: EquilibriumSide, tol: float = DEFAULT_ROOT_TOL) -> pd.DataFrame:
    """Roots and bundle dimensions for each lambda, one row per distinct root."""
    rows = []
    for lam in lambdas:
        roots = find_roots(build_charpoly(m, float(lam), side), tol)
        dims = classify_bundles(roots)
        for mu, mult in roots.roots:
            rows.append(
                {
                    "lambda": float(lam),
                    "re": mu.real,
                    "im": mu.imag,
                    "multiplicity": mult,
                    "stable": dims.stable,
                    "unstable": dims.unstable,
                    "marginal": dims.marginal,
                }
            )
    return pd.DataFrame(rows, columns=["lambda", "re", "im", "multiplicity", "stable", "unstable", "marginal"])
