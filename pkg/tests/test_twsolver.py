import numpy as np
from scipy.interpolate import CubicSpline
import pytest

from kpp.errors import ComparisonError, DomainError, TrackingError
from kpp.model import EquilibriumSide, Grid, ModelSpec, TWProfile, locate_crossing
from kpp.twsolver import (
    Guess,
    SolveStatus,
    align_profile,
    assemble_system,
    branch_lost_at,
    compare_orders,
    continue_branch,
    count_oscillations,
    default_options,
    default_right_end,
    default_spacing,
    perturbation_robustness,
    scan_lambda_max,
    slowest_stable_rate,
    solve_tw,
    tail_decay_rate,
)


def test_default_grid_by_speed_and_order():
    assert default_right_end(0.01) == 6000.0
    assert default_right_end(0.05) == 1500.0
    assert default_right_end(0.5) == 400.0
    assert [default_spacing(m) for m in (1, 2, 3, 4, 5, 6)] == [0.05, 0.05, 0.1, 0.15, 0.25, 0.25]
    opts = default_options(2, 0.5, spacing=0.1, newton_tol=1e-8)
    assert opts.grid.left == -100.0 and opts.grid.right == 400.0
    assert opts.grid.h == pytest.approx(0.1)
    assert opts.newton_tol == 1e-8


def test_options_validate_guess():
    with pytest.raises(DomainError):
        default_options(2, 0.5, guess=Guess.PROFILE)


def test_residual_vanishes_on_equilibria():
    spec = ModelSpec(2, 0.5)
    opts = default_options(2, 0.5, left=-10.0, right=10.0, spacing=0.1)
    constant = np.ones(opts.grid.n)
    residual, jacobian = assemble_system(spec, constant, opts)
    # only the right clamp row f(right) = 0 is violated; interior rows carry rounding only
    assert residual[-1] == 1.0
    assert np.max(np.abs(residual[:-1])) <= 1e-9
    assert jacobian.shape == (opts.grid.n, opts.grid.n)


def test_m2_wave_is_valid(m2_outcome):
    assert m2_outcome.status is SolveStatus.CONVERGED
    profile = m2_outcome.profile
    assert profile.aligned
    assert abs(profile.momentum - 1.0 / 6.0) <= 1e-2
    assert locate_crossing(profile.y, profile.values) == pytest.approx(0.0, abs=1e-9)
    assert np.max(np.abs(profile.values)) <= 10.0


def test_m1_wave_is_monotone(m1_outcome):
    assert m1_outcome.valid
    values = m1_outcome.profile.values
    assert np.all(np.diff(values) <= 1e-9)
    assert count_oscillations(m1_outcome.profile, EquilibriumSide.ZERO, threshold=1e-8) == 0


def test_negative_speed_has_no_valid_wave():
    outcome = solve_tw(ModelSpec(2, -0.1), default_options(2, -0.1, right=100.0))
    assert not outcome.valid
    assert outcome.status in (SolveStatus.INVALID, SolveStatus.DIVERGED, SolveStatus.TRIVIAL)


def test_m2_tail_oscillates_about_zero(m2_outcome):
    assert count_oscillations(m2_outcome.profile, EquilibriumSide.ZERO, threshold=1e-10) >= 2


def test_tail_decay_matches_slowest_root(m2_outcome):
    rate = tail_decay_rate(m2_outcome.profile, (20.0, 120.0))
    assert rate == pytest.approx(slowest_stable_rate(2, 0.5), rel=0.05)


def test_align_profile_moves_crossing_to_origin(make_front):
    shifted = make_front(shift=3.7)
    aligned = align_profile(shifted)
    assert aligned.aligned
    assert locate_crossing(aligned.y, aligned.values) == pytest.approx(0.0, abs=1e-9)


def test_count_oscillations_synthetic():
    grid = Grid.from_spacing(-50.0, 50.0, 0.1)
    y = grid.nodes
    values = np.where(y < 0, 1.0, 0.0) + np.where(y > 5, 1e-3 * np.sin(y), 0.0)
    profile = TWProfile(grid, values, 0.5, 2, 0.0, 0.0, aligned=True)
    # sin changes sign 14 times on (5, 50)
    assert count_oscillations(profile, EquilibriumSide.ZERO, threshold=1e-6) == 14
    assert count_oscillations(profile, EquilibriumSide.ONE) == 0


def _as_aligned(profile):
    return profile.with_grid(profile.grid, aligned=True)


def test_compare_orders_needs_overlap(make_front):
    with pytest.raises(ComparisonError):
        compare_orders(_as_aligned(make_front(left=-10, right=0)), _as_aligned(make_front(left=5, right=20)))


def test_compare_orders_of_aligned_translates(make_front):
    gap = compare_orders(_as_aligned(make_front()), _as_aligned(make_front(shift=0.01)))
    assert gap == pytest.approx(0.0025, rel=0.05)


def test_compare_orders_aligns_its_inputs(make_front):
    base, moved = make_front(), make_front(shift=5.0)
    # tanh(1.25) is the largest gap between the unaligned translates
    assert compare_orders(_as_aligned(base), _as_aligned(moved)) == pytest.approx(np.tanh(1.25), rel=1e-3)
    assert compare_orders(base, moved) == pytest.approx(0.0, abs=1e-4)


def test_compare_orders_rejects_profiles_without_front():
    grid = Grid.from_spacing(-10.0, 10.0, 0.1)
    flat = TWProfile(grid, np.zeros(grid.n), 0.5, 2, 0.0, 0.0)
    with pytest.raises(TrackingError):
        compare_orders(flat, flat)


def test_continue_branch_requires_monotone_list():
    with pytest.raises(DomainError):
        continue_branch(2, [0.3, 0.5, 0.4])


def test_branch_lost_at_reports_transition():
    class Fake:
        def __init__(self, lam, valid):
            self.lam, self.valid = lam, valid

    outcomes = [Fake(1.0, True), Fake(1.1, True), Fake(1.2, False)]
    assert branch_lost_at(outcomes) == (1.1, 1.2)
    assert branch_lost_at(outcomes[:2]) is None


@pytest.mark.slow
def test_m2_branch_continuation_stays_valid():
    outcomes = continue_branch(2, [0.3, 0.4, 0.5, 0.6])
    assert all(o.valid for o in outcomes)
    for outcome in outcomes:
        assert abs(outcome.profile.momentum - 1.0 / 6.0) <= 1e-2


@pytest.mark.slow
def test_m2_slow_wave_has_many_oscillations():
    outcome = solve_tw(ModelSpec(2, 0.1), default_options(2, 0.1, right=1500.0))
    assert outcome.valid
    profile = outcome.profile
    assert count_oscillations(profile, EquilibriumSide.ZERO, threshold=1e-6, window=(0.0, 300.0)) >= 5
    # behind the front the decay rate is about 0.7, so later crossings are small
    assert count_oscillations(profile, EquilibriumSide.ONE, threshold=1e-9) >= 5


@pytest.mark.slow
def test_lambda_max_m2_bracket():
    scan = scan_lambda_max(2, 1.0, 1.5)
    lo, hi = scan.bracket
    assert hi - lo <= 0.01
    assert 1.26 <= lo and hi <= 1.29


@pytest.mark.slow
def test_orders_four_and_five_are_close():
    p4 = solve_tw(ModelSpec(4, 0.5)).profile
    p5 = solve_tw(ModelSpec(5, 0.5)).profile
    assert compare_orders(p4, p5) <= 0.03


def test_perturbed_restarts_return_to_the_wave():
    spec = ModelSpec(1, 2.0)
    opts = default_options(1, 2.0, left=-40.0, right=80.0, spacing=0.1)
    report = perturbation_robustness(spec, opts, trials=2, seed=3)
    assert report.trials == 2
    assert report.converged == 2
    assert report.max_spread <= 1e-4
    again = perturbation_robustness(spec, opts, trials=2, seed=3)
    assert again.spreads == report.spreads


def test_newton_history_ends_below_tolerance(m2_outcome):
    history = m2_outcome.residual_history
    assert history[-1] <= 1e-7
    assert m2_outcome.profile.residual_norm == history[-1]
    assert history[0] > 1.0


@pytest.mark.parametrize(
    "m, lam",
    [
        (1, 2.0),
        (2, 0.5),
        pytest.param(2, 0.3, marks=pytest.mark.slow),
        pytest.param(2, 1.0, marks=pytest.mark.slow),
        pytest.param(3, 1.0, marks=pytest.mark.slow),
        pytest.param(4, 0.5, marks=pytest.mark.slow),
        pytest.param(5, 0.5, marks=pytest.mark.slow),
    ],
)
def test_heaviside_start_converges_to_valid_wave(m, lam):
    outcome = solve_tw(ModelSpec(m, lam))
    assert outcome.status is SolveStatus.CONVERGED, outcome.message
    assert outcome.profile.residual_norm <= 1e-7
    assert abs(outcome.profile.momentum - 1.0 / 6.0) <= 1e-2


def test_speed_above_lambda_max_is_not_a_wave():
    outcome = solve_tw(ModelSpec(2, 1.5))
    assert not outcome.valid


def _spline_gap(coarse, fine):
    """Sup difference with the fine profile read off a cubic spline at the coarse nodes."""
    lo, hi = max(coarse.grid.left, fine.grid.left), min(coarse.grid.right, fine.grid.right)
    y = coarse.y[(coarse.y >= lo) & (coarse.y <= hi)]
    values = np.interp(y, coarse.y, coarse.values)
    return float(np.max(np.abs(values - CubicSpline(fine.y, fine.values)(y))))


@pytest.mark.slow
def test_m2_profile_converges_at_second_order():
    profiles = [
        solve_tw(ModelSpec(2, 0.5), default_options(2, 0.5, left=-60.0, right=200.0, spacing=h)).profile
        for h in (0.1, 0.05, 0.025)
    ]
    coarse_gap = _spline_gap(profiles[0], profiles[1])
    fine_gap = _spline_gap(profiles[1], profiles[2])
    assert np.log2(coarse_gap / fine_gap) >= 1.9


@pytest.mark.slow
def test_longer_interval_leaves_profile_unchanged(m2_outcome):
    longer = solve_tw(ModelSpec(2, 0.5), default_options(2, 0.5, left=-125.0, right=500.0))
    assert longer.valid
    assert _spline_gap(m2_outcome.profile, longer.profile) <= 1e-4


@pytest.mark.slow
@pytest.mark.parametrize("m, lo, hi", [(3, 2.10, 2.14), (4, 2.08, 2.13)])
def test_lambda_max_higher_order_brackets(m, lo, hi):
    scan = scan_lambda_max(m, 1.8, 2.4)
    a, b = scan.bracket
    assert b - a <= 0.01
    assert lo <= a and b <= hi
