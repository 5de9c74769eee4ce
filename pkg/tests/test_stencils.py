import numpy as np
import pytest

from kpp import stencils
from kpp.errors import AssemblyError


def test_central_weights():
    assert stencils.central_weights(2).tolist() == [1.0, -2.0, 1.0]
    assert stencils.central_weights(4).tolist() == [1.0, -4.0, 6.0, -4.0, 1.0]


def test_central_weights_reject_odd_order():
    with pytest.raises(AssemblyError):
        stencils.central_weights(3)


def test_fourth_difference_exact_on_quartic():
    h = 0.1
    y = np.arange(41) * h
    d4 = stencils.even_derivative(len(y), h, 4, 2) @ y**4
    mask = stencils.interior_mask(len(y), 2)
    assert np.allclose(d4[mask], 24.0, rtol=1e-8)
    assert np.all(d4[~mask] == 0.0)


def test_clamp_rows_forward_and_backward():
    rows = stencils.clamp_rows(10, 2).toarray()
    assert rows[0].tolist() == [1.0] + [0.0] * 9
    assert rows[1, :2].tolist() == [-1.0, 1.0]
    assert rows[9, 9] == 1.0
    # backward difference f[n-1] - f[n-2]
    assert rows[8, 8:].tolist() == [-1.0, 1.0]


def test_linear_operator_needs_enough_nodes():
    with pytest.raises(AssemblyError):
        stencils.linear_operator(8, 0.1, 2)


def test_linear_operator_on_exponential():
    # (-1)^(m+1) D^2 e^y + e^y vanishes up to O(h^2) for m = 1 with potential -1
    h = 0.01
    y = np.arange(201) * h
    op = stencils.linear_operator(len(y), h, 1, potential=-1.0, with_clamps=False)
    applied = op @ np.exp(y)
    mask = stencils.interior_mask(len(y), 1)
    assert np.max(np.abs(applied[mask] / np.exp(y[mask]))) < 1e-4
