import numpy as np
import pytest
from scipy.special import erfc

from kpp import linearized, stencils
from kpp.errors import DomainError
from kpp.model import EquilibriumSide, Grid, ModelSpec
from kpp.twsolver import default_options, solve_tw


@pytest.fixture(scope="module")
def m2_operator(m2_outcome):
    return linearized.assemble_B(m2_outcome.profile)


@pytest.fixture(scope="module")
def m2_center(m2_operator):
    return linearized.solve_affine_center(m2_operator)


def test_translation_mode_is_nearly_null(m2_outcome, m2_operator):
    profile = m2_outcome.profile
    bound = 10.0 * (profile.grid.h**2 + profile.residual_norm)
    assert linearized.translation_residual(m2_operator) <= bound


def test_translation_mode_m1(m1_outcome):
    profile = m1_outcome.profile
    op = linearized.assemble_B(profile)
    assert linearized.translation_residual(op) <= 10.0 * (profile.grid.h**2 + profile.residual_norm)


@pytest.mark.parametrize(
    "side, region",
    [(EquilibriumSide.ZERO, (250.0, 300.0)), (EquilibriumSide.ONE, (-90.0, -60.0))],
)
def test_far_field_rows_annihilate_exponential_modes(m2_operator, side, region):
    mu = linearized.stable_far_field_root(2, 0.5, side)
    h = m2_operator.grid.h
    assert linearized.exponential_mode_residual(m2_operator, mu, region) <= 10.0 * h**2


def test_exponential_mode_region_must_hold_rows(m2_operator):
    with pytest.raises(DomainError):
        linearized.exponential_mode_residual(m2_operator, -1.0, (1e4, 2e4))


def test_center_solution_is_orthogonal(m2_center):
    scale = max(1.0, float(np.max(np.abs(m2_center.psi))))
    assert m2_center.orthogonality_defect <= 1e-8 * scale
    assert np.isfinite(m2_center.residual)
    assert m2_center.residual >= 0.0


def test_center_with_zero_rhs(m2_operator):
    center = linearized.solve_affine_center(m2_operator, np.zeros(m2_operator.grid.n))
    assert not np.any(center.psi)
    assert center.residual == 0.0


def test_second_order_at_zero_k(m2_center):
    report = linearized.second_order_residual(m2_center, 0.0)
    assert not np.any(report.phi)
    assert report.residual == 0.0


def test_second_order_rhs_is_quadratic_in_k(m2_center):
    linear, quadratic = linearized.second_order_parts(m2_center)
    assert np.allclose(linearized.second_order_rhs(m2_center, 2.0), 2.0 * linear + 4.0 * quadratic)
    r0, r1, r2 = (linearized.second_order_rhs(m2_center, k) for k in (0.0, 1.0, 2.0))
    # three-point interpolation recovers k = 3
    assert np.allclose(r0 - 3.0 * r1 + 3.0 * r2, linearized.second_order_rhs(m2_center, 3.0))


def test_scan_k_table(m2_center):
    table = linearized.scan_k(m2_center, [0.0, 1.5, 3.0])
    assert list(table.columns) == ["k", "residual"]
    assert table["k"].tolist() == [0.0, 1.5, 3.0]
    assert table["residual"].iloc[0] == 0.0
    assert np.all(np.isfinite(table["residual"]))


def test_selfsimilar_m1_is_erfc():
    grid = linearized.default_selfsimilar_grid(1)
    v = linearized.selfsimilar_profile(1, grid)
    assert np.max(np.abs(v - 0.5 * erfc(grid.nodes / 2.0))) <= 1e-3
    assert v[0] == pytest.approx(1.0) and v[-1] == pytest.approx(0.0, abs=1e-15)


def test_selfsimilar_m1_second_order_convergence():
    errors = []
    for h in (0.1, 0.05):
        grid = Grid.from_spacing(-20.0, 20.0, h)
        v = linearized.selfsimilar_profile(1, grid)
        errors.append(np.max(np.abs(v - 0.5 * erfc(grid.nodes / 2.0))))
    assert np.log2(errors[0] / errors[1]) >= 1.9


def test_selfsimilar_m2_changes_sign():
    grid = linearized.default_selfsimilar_grid(2)
    v = linearized.selfsimilar_profile(2, grid)
    tail = v[(grid.nodes > 0.0) & (grid.nodes < 10.0)]
    assert np.any(tail < 0.0)
    assert v[0] == pytest.approx(1.0)


def test_selfsimilar_rejects_bad_order():
    with pytest.raises(DomainError):
        linearized.selfsimilar_profile(0)


def test_field_frame_columns():
    frame = linearized.field_frame(np.arange(3.0), np.ones(3))
    assert list(frame.columns) == ["y", "value"]


def test_center_residual_never_exceeds_zero_solution(m2_operator, m2_center):
    rhs = m2_operator.fprime.copy()
    rhs[~stencils.interior_mask(len(rhs), 2)] = 0.0
    attained = m2_operator.matrix @ m2_center.psi - rhs
    assert np.linalg.norm(attained) <= np.linalg.norm(rhs) * (1.0 + 1e-9)


def test_center_residual_is_reproducible(m2_operator, m2_center):
    again = linearized.solve_affine_center(m2_operator)
    assert again.residual == m2_center.residual
    assert np.array_equal(again.psi, m2_center.psi)


@pytest.mark.slow
def test_translation_residual_shrinks_under_refinement():
    residuals = []
    for h in (0.1, 0.05):
        opts = default_options(2, 0.5, left=-60.0, right=200.0, spacing=h)
        profile = solve_tw(ModelSpec(2, 0.5), opts).profile
        residuals.append(linearized.translation_residual(linearized.assemble_B(profile)))
    assert residuals[1] < residuals[0]
