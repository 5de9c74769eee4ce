import numpy as np
import pytest

from kpp.errors import DomainError, QuadratureError, SingularityError
from kpp.model import (
    Grid,
    ModelSpec,
    TWProfile,
    blowup_constant,
    blowup_correction_check,
    blowup_derivative,
    blowup_profile,
    check_validity,
    locate_crossing,
    momentum_identity,
)


def test_model_spec_rejects_bad_order():
    with pytest.raises(DomainError):
        ModelSpec(0, 0.5)
    with pytest.raises(DomainError):
        ModelSpec(2, float("nan"))


def test_grid_from_spacing_hits_right_end():
    grid = Grid.from_spacing(-1.0, 1.0, 0.5)
    assert grid.n == 5
    assert grid.h == pytest.approx(0.5)
    assert grid.nodes[-1] == pytest.approx(1.0)
    assert grid.shifted(2.0).left == pytest.approx(1.0)


def test_grid_needs_five_nodes():
    with pytest.raises(DomainError):
        Grid(0.0, 1.0, 3)


def test_momentum_of_tanh_front(make_front):
    # lam / (3 width) = 1/6 for lam = 1, width = 2, up to O(h^2) quadrature error
    profile = make_front(lam=1.0, width=2.0)
    assert momentum_identity(profile) == pytest.approx(1.0 / 6.0, abs=1e-5)


def test_momentum_rejects_non_finite(make_front):
    profile = make_front()
    values = profile.values.copy()
    values[10] = np.nan
    broken = TWProfile(profile.grid, values, 1.0, 2, 1e-8, 0.0)
    with pytest.raises(QuadratureError):
        momentum_identity(broken)


def test_validity_accepts_tanh_front(make_front):
    report = check_validity(make_front())
    assert report.ok
    assert report.reasons == []


def test_validity_reports_each_failure(make_front):
    report = check_validity(make_front(residual=1e-3, lam=2.0))
    assert not report.ok
    assert not report.residual_ok
    assert not report.momentum_ok
    assert len(report.reasons) == 2


def test_validity_flags_unsettled_tail(make_front):
    report = check_validity(make_front(left=-5.0, right=5.0))
    assert not report.tails_ok


def test_locate_crossing_on_ramp():
    x = np.linspace(-20.0, 20.0, 401)
    u = np.clip(0.5 - (x - 3.0) / 10.0, 0.0, 1.0)
    assert locate_crossing(x, u) == pytest.approx(3.0, abs=1e-12)


def test_locate_crossing_none_without_front():
    x = np.linspace(0.0, 10.0, 11)
    assert locate_crossing(x, np.zeros_like(x)) is None


@pytest.mark.parametrize("m, expected", [(1, 6.0), (2, -840.0), (3, 332640.0)])
def test_blowup_constant(m, expected):
    assert blowup_constant(m) == expected


@pytest.mark.parametrize("m", [2, 3])
def test_blowup_solution_solves_dominant_balance(m):
    y = np.linspace(-5.0, -0.5, 50)
    f0 = blowup_profile(0.0, y, m)
    lhs = blowup_derivative(0.0, y, 2 * m, m)
    assert np.allclose(lhs, (-1) ** (m + 1) * f0**2, rtol=1e-12)


def test_blowup_profile_rejects_singular_point():
    with pytest.raises(SingularityError):
        blowup_profile(0.0, np.array([-1.0, 0.0]))


def test_blowup_correction_sign_and_magnitude():
    balance = blowup_correction_check(0.3)
    assert balance.c_derived == pytest.approx(140.0 * 0.3 / 69.0)
    assert balance.c_printed == pytest.approx(-140.0 * 0.3 / 69.0)
    assert balance.balanced
