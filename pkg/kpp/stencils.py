"""
stencils.py - banded finite-difference operators on uniform grids.

Every discrete operator in the package is built here so the travelling-wave
solver, the linearized operator and the time stepper share one set of
stencils:

- centred 2nd-order differences of even order 2p (width 2p+1, binomial
  weights) and the 3-point first derivative;
- clamp rows for the first m and last m nodes, given by forward differences
  at the left end and backward differences at the right end, so that
  f, f', ..., f^(m-1) are pinned at both ends.

Matrices are scipy.sparse CSR. Rows that a stencil cannot reach are zero and
are filled by the clamp rows.
"""

#####################################
# Import Modules
#####################################

# Import packages from Python Standard Library
from math import comb

# Import external packages
import numpy as np
import scipy.sparse as sp

# Import functions from local modules
from kpp.errors import AssemblyError

#####################################
# Stencil Weights
#####################################


def central_weights(order: int) -> np.ndarray:
    """
    Weights of the centred difference of even order on offsets -p..p.

    order=2 gives [1, -2, 1], order=4 gives [1, -4, 6, -4, 1].
    """
    if order < 2 or order % 2:
        raise AssemblyError(f"Centred difference order must be even and >= 2, got {order}.")
    p = order // 2
    return np.array([(-1) ** (j + p) * comb(order, j + p) for j in range(-p, p + 1)], dtype=float)


def difference_weights(order: int) -> np.ndarray:
    """Weights of the forward difference of the given order on nodes 0..order."""
    return np.array([(-1) ** (order - k) * comb(order, k) for k in range(order + 1)], dtype=float)


#####################################
# Sparse Operators
#####################################


def interior_mask(n: int, m: int) -> np.ndarray:
    """Boolean mask of the rows that carry the differential equation."""
    mask = np.zeros(n, dtype=bool)
    mask[m:n - m] = True
    return mask


def even_derivative(n: int, h: float, order: int, m: int) -> sp.csr_matrix:
    """D^order on interior rows m..n-1-m; zero on the clamp rows."""
    weights = central_weights(order) / h**order
    p = order // 2
    offsets = list(range(-p, p + 1))
    band = sp.diags(
        [np.full(n - abs(k), w) for k, w in zip(offsets, weights)],
        offsets,
        shape=(n, n),
    )
    return (sp.diags(interior_mask(n, m).astype(float)) @ band).tocsr()


def first_derivative(n: int, h: float, m: int) -> sp.csr_matrix:
    """Centred 3-point D on interior rows; zero on the clamp rows."""
    band = sp.diags(
        [np.full(n - 1, -0.5 / h), np.full(n - 1, 0.5 / h)],
        [-1, 1],
        shape=(n, n),
    )
    return (sp.diags(interior_mask(n, m).astype(float)) @ band).tocsr()


def clamp_rows(n: int, m: int) -> sp.csr_matrix:
    """
    Boundary rows pinning f and its first m-1 differences at both ends.

    Row j (0 <= j < m) holds the forward difference of order j at node 0;
    row n-1-j holds the backward difference of order j at node n-1.
    """
    rows, cols, vals = [], [], []
    for j in range(m):
        w = difference_weights(j)
        for k in range(j + 1):
            rows.append(j)
            cols.append(k)
            vals.append(w[k])
            # backward difference: same weights read from the right end
            rows.append(n - 1 - j)
            cols.append(n - 1 - k)
            vals.append(w[j - k])
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def clamp_rhs(n: int, m: int, left_value: float, right_value: float) -> np.ndarray:
    """Right-hand side of the clamp rows: f(left)=left_value, f(right)=right_value, differences zero."""
    rhs = np.zeros(n)
    rhs[0] = left_value
    rhs[n - 1] = right_value
    return rhs


def linear_operator(
    n: int,
    h: float,
    m: int,
    drift=0.0,
    potential=0.0,
    with_clamps: bool = True,
) -> sp.csr_matrix:
    """
    Assemble (-1)^(m+1) D^(2m) + drift * D + diag(potential) on interior rows.

    drift and potential may be scalars or arrays of length n. With
    with_clamps the clamp rows are added, giving a square nonsingular system
    for boundary-value problems.
    """
    if n < 4 * m + 1:
        raise AssemblyError(f"Grid has {n} nodes; order m={m} needs at least {4 * m + 1}.")
    sign = (-1) ** (m + 1)
    mask = interior_mask(n, m).astype(float)
    op = sign * even_derivative(n, h, 2 * m, m)
    drift_arr = np.broadcast_to(np.asarray(drift, dtype=float), (n,))
    if np.any(drift_arr):
        op = op + sp.diags(drift_arr) @ first_derivative(n, h, m)
    pot_arr = np.broadcast_to(np.asarray(potential, dtype=float), (n,))
    if np.any(pot_arr):
        op = op + sp.diags(pot_arr * mask)
    if with_clamps:
        op = op + clamp_rows(n, m)
    return op.tocsr()
