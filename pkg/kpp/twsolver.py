"""
twsolver.py - travelling-wave profiles, branches in lambda, and lambda_max.

The truncated boundary-value problem

    (-1)^(m+1) f^(2m) + lambda f' + f (1 - f) = 0   on [left, right],
    f = 1, f' = ... = f^(m-1) = 0 at left,   f = 0, f' = ... = 0 at right,

is discretized with the centred stencils of kpp.stencils and solved by a
damped Newton iteration on the sparse banded system. The truncated problem
is only weakly pinned in position: shifting a solution changes the residual
by an exponentially small amount. Newton therefore runs first on a pinned
system with one extra unknown and a phase equation that holds the front
near y = 0, then polishes with plain Newton steps on the truncated problem
itself. The converged profile is translated afterwards so that its front
crosses 1/2 at y = 0.

A profile counts as an existing wave only when Newton converges AND the
profile passes model.check_validity. That predicate drives the branch
continuation and the bisection for lambda_max.
"""

#####################################
# Import Modules
#####################################

# Import packages from Python Standard Library
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

# Import external packages
import numpy as np
import scipy.sparse as sp
from scipy.signal import find_peaks
from scipy.sparse.linalg import spsolve

# Import functions from local modules
from kpp import stencils
from kpp.charpoly import build_charpoly, find_roots
from kpp.errors import AssemblyError, ComparisonError, DomainError, ScanError, TrackingError
from kpp.model import (
    EquilibriumSide,
    Grid,
    ModelSpec,
    TWProfile,
    ValidityReport,
    check_validity,
    locate_crossing,
    momentum_identity,
)
from utils.utils_logger import logger

#####################################
# Defaults
#####################################

DEFAULT_LEFT = -100.0
DEFAULT_NEWTON_TOL = 1e-7
DEFAULT_MAX_ITER = 200
DEFAULT_MAX_HALVINGS = 30
ALIGN_WINDOW = 5.0
TRIVIAL_MARGIN = 10.0
BLOWN_UP = 1e3
POLISH_STEPS = 20
PHASE_CLIP = 300.0

# spacing by order keeps h^-2m stencil weights well conditioned
DEFAULT_SPACING = {1: 0.05, 2: 0.05, 3: 0.1, 4: 0.15}
HIGH_ORDER_SPACING = 0.25


def default_right_end(lam: float) -> float:
    """Right truncation end by speed: slower waves have longer oscillatory tails."""
    if lam < 0.02:
        return 6000.0
    if lam < 0.1:
        return 1500.0
    return 400.0


def default_spacing(m: int) -> float:
    return DEFAULT_SPACING.get(m, HIGH_ORDER_SPACING)


#####################################
# Domain Types
#####################################


class Guess(str, Enum):
    HEAVISIDE = "heaviside"
    SMOOTHED = "smoothed"
    PROFILE = "profile"


class SolveStatus(str, Enum):
    CONVERGED = "converged"
    DIVERGED = "diverged"
    TRIVIAL = "trivial"
    INVALID = "invalid"


@dataclass(frozen=True)
class BvpOptions:
    """Grid, Newton controls and initial guess for one solve."""

    grid: Grid
    newton_tol: float = DEFAULT_NEWTON_TOL
    max_iter: int = DEFAULT_MAX_ITER
    max_halvings: int = DEFAULT_MAX_HALVINGS
    guess: Guess = Guess.HEAVISIDE
    width: float = 1.0
    seed_profile: Optional[TWProfile] = None

    def __post_init__(self):
        if self.newton_tol <= 0:
            raise DomainError(f"newton_tol must be positive, got {self.newton_tol}.")
        if self.width <= 0:
            raise DomainError(f"Smoothing width must be positive, got {self.width}.")
        if Guess(self.guess) is Guess.PROFILE and self.seed_profile is None:
            raise DomainError("guess=profile requires a seed_profile.")

    def seeded_from(self, profile: TWProfile) -> "BvpOptions":
        return replace(self, guess=Guess.PROFILE, seed_profile=profile)


@dataclass
class SolveOutcome:
    """Result of one travelling-wave solve."""

    status: SolveStatus
    lam: float
    m: int
    profile: Optional[TWProfile] = None
    iterations: int = 0
    residual_history: list = field(default_factory=list)
    validity: Optional[ValidityReport] = None
    message: str = ""

    @property
    def valid(self) -> bool:
        return self.status is SolveStatus.CONVERGED


@dataclass
class LambdaScan:
    """Bracket (lo, hi) around lambda_max with every sample evaluated."""

    m: int
    samples: list
    bracket: tuple
    width: float
    predicate: str = "newton converged and profile valid"


def default_options(m: int, lam: float, **overrides) -> BvpOptions:
    """Options with the default grid for (m, lambda); keyword overrides win."""
    left = overrides.pop("left", DEFAULT_LEFT)
    right = overrides.pop("right", default_right_end(lam))
    h = overrides.pop("spacing", default_spacing(m))
    grid = overrides.pop("grid", None) or Grid.from_spacing(left, right, h)
    return BvpOptions(grid=grid, **overrides)


#####################################
# Assembly
#####################################


def _linear_part(spec: ModelSpec, grid: Grid) -> sp.csr_matrix:
    if not grid.supports_order(spec.m):
        raise AssemblyError(f"Grid has {grid.n} nodes; m={spec.m} needs at least {4 * spec.m + 1}.")
    return stencils.linear_operator(grid.n, grid.h, spec.m, drift=spec.lam)


def _residual(linear, mask, rhs, f):
    return linear @ f + mask * f * (1.0 - f) - rhs


def assemble_system(spec: ModelSpec, f: np.ndarray, opts: BvpOptions):
    """
    Residual and sparse Jacobian of the truncated TW problem at f.

    Interior rows: (-1)^(m+1) D^(2m) f + lambda D f + f(1-f).
    Boundary rows: f(left) - 1, f(right), and the differences of order
    1..m-1 at both ends.
    """
    grid = opts.grid
    f = np.asarray(f, dtype=float)
    if f.shape != (grid.n,):
        raise AssemblyError(f"Vector has shape {f.shape}, grid has {grid.n} nodes.")
    linear = _linear_part(spec, grid)
    mask = stencils.interior_mask(grid.n, spec.m).astype(float)
    rhs = stencils.clamp_rhs(grid.n, spec.m, 1.0, 0.0)
    residual = _residual(linear, mask, rhs, f)
    jacobian = (linear + sp.diags(mask * (1.0 - 2.0 * f))).tocsc()
    return residual, jacobian


#####################################
# Initial Guesses
#####################################


def initial_guess(opts: BvpOptions) -> np.ndarray:
    y = opts.grid.nodes
    guess = Guess(opts.guess)
    if guess is Guess.HEAVISIDE:
        return np.where(y < 0, 1.0, np.where(y > 0, 0.0, 0.5))
    if guess is Guess.SMOOTHED:
        return 0.5 * (1.0 - np.tanh(y / opts.width))
    seed = opts.seed_profile
    return np.interp(y, seed.y, seed.values, left=1.0, right=0.0)


#####################################
# Newton Iteration
#####################################


def _phase_vector(y: np.ndarray) -> np.ndarray:
    """Unit weight concentrated on the front region of a profile crossing 1/2 at y = 0."""
    w = 1.0 / np.cosh(np.clip(y, -PHASE_CLIP, PHASE_CLIP)) ** 2
    return w / np.linalg.norm(w)


def _line_search(evaluate, x, delta, current, max_halvings):
    """Halve the step until evaluate(x + step*delta) has a smaller 2-norm; None when it never does."""
    step = 1.0
    for _ in range(max_halvings):
        trial = x + step * delta
        trial_residual = evaluate(trial)
        trial_norm = np.linalg.norm(trial_residual)
        if np.isfinite(trial_norm) and trial_norm < current:
            return trial, trial_residual, step
        step *= 0.5
    return None


def newton_solve(spec: ModelSpec, opts: BvpOptions):
    """
    Damped Newton iteration from the configured guess.

    Returns (f, converged, iterations, residual_history, message).

    The iteration runs on the pinned system

        R(f) + s c = 0,    c . (f - f_ref) = 0,

    with one extra unknown s, a fixed unit weight c concentrated near y = 0
    and the tanh front f_ref crossing 1/2 there. The second equation fixes
    the position of the front and makes the Jacobian [[J, c], [c^T, 0]]
    regular. Once it converges, plain Newton steps on R(f) = 0 remove the
    forcing s c; if they fail or move the front by more than TRIVIAL_MARGIN,
    the pinned solution is kept and its unpinned residual max|R(f)|, about
    |s| max|c|, decides convergence. residual_history holds max|R| of the iterate at each step
    (the pinned phase records the pinned residual instead).
    """
    grid = opts.grid
    y = grid.nodes
    linear = _linear_part(spec, grid)
    mask = stencils.interior_mask(grid.n, spec.m).astype(float)
    rhs = stencils.clamp_rhs(grid.n, spec.m, 1.0, 0.0)
    c = _phase_vector(y)
    anchor = float(c @ (0.5 * (1.0 - np.tanh(np.clip(y, -PHASE_CLIP, PHASE_CLIP)))))
    weight = sp.csc_matrix(c[:, None])

    def pinned(x):
        f, s = x[:-1], x[-1]
        return np.concatenate([_residual(linear, mask, rhs, f) + s * c, [c @ f - anchor]])

    x = np.concatenate([initial_guess(opts), [0.0]])
    residual = pinned(x)
    history = [float(np.max(np.abs(residual)))]
    iteration = 0
    while history[-1] > opts.newton_tol:
        iteration += 1
        if iteration > opts.max_iter:
            return x[:-1], False, opts.max_iter, history, "max_iter reached"
        f = x[:-1]
        jacobian = (linear + sp.diags(mask * (1.0 - 2.0 * f))).tocsc()
        bordered = sp.bmat([[jacobian, weight], [weight.T, None]], format="csc")
        try:
            delta = spsolve(bordered, -residual)
        except RuntimeError as e:
            logger.warning(f"Linear solve failed at iteration {iteration}: {e}")
            return f, False, iteration, history, f"linear solve failed: {e}"
        if not np.all(np.isfinite(delta)):
            return f, False, iteration, history, "non-finite Newton step"
        found = _line_search(pinned, x, delta, np.linalg.norm(residual), opts.max_halvings)
        if found is None:
            logger.debug(f"Line search stagnated at iteration {iteration}")
            return f, False, iteration, history, "line search stagnated"
        x, residual, step = found
        history.append(float(np.max(np.abs(residual))))
        logger.debug(f"Newton it={iteration} step={step:g} |R|_inf={history[-1]:.3e} s={x[-1]:.3e}")
        if np.max(np.abs(x[:-1])) > BLOWN_UP:
            return x[:-1], False, iteration, history, "iterate blew up"

    f = x[:-1]
    true_norm = float(np.max(np.abs(_residual(linear, mask, rhs, f))))
    polished, steps = _polish(linear, mask, rhs, f, opts)
    iteration += steps
    if polished is not None:
        f, true_norm = polished
    history.append(true_norm)
    if true_norm <= opts.newton_tol:
        return f, True, iteration, history, "converged"
    return f, False, iteration, history, f"pinned residual {true_norm:.3e} above tolerance"


def _polish(linear, mask, rhs, f, opts: BvpOptions):
    """
    Plain Newton steps on R(f) = 0 from a pinned solution.

    Returns ((f, max|R|), steps) on success and (None, steps) when the
    steps stagnate or carry the front further than TRIVIAL_MARGIN.
    """
    y = opts.grid.nodes
    start = locate_crossing(y, f, 0.5, ALIGN_WINDOW)

    def evaluate(v):
        return _residual(linear, mask, rhs, v)

    residual = evaluate(f)
    steps = 0
    while np.max(np.abs(residual)) > opts.newton_tol and steps < POLISH_STEPS:
        steps += 1
        jacobian = (linear + sp.diags(mask * (1.0 - 2.0 * f))).tocsc()
        try:
            delta = spsolve(jacobian, -residual)
        except RuntimeError:
            return None, steps
        if not np.all(np.isfinite(delta)):
            return None, steps
        found = _line_search(evaluate, f, delta, np.linalg.norm(residual), opts.max_halvings)
        if found is None:
            return None, steps
        f, residual, _ = found
    norm = float(np.max(np.abs(residual)))
    if norm > opts.newton_tol:
        return None, steps
    end = locate_crossing(y, f, 0.5, ALIGN_WINDOW)
    if start is None or end is None or abs(end - start) > TRIVIAL_MARGIN:
        logger.debug("Polishing moved the front too far; keeping the pinned solution")
        return None, steps
    return (f, norm), steps


#####################################
# Alignment and Solve
#####################################


def align_profile(profile: TWProfile, window: float = ALIGN_WINDOW) -> TWProfile:
    """Translate the grid so the front crossing of 1/2 sits at y = 0."""
    yc = locate_crossing(profile.y, profile.values, 0.5, window)
    if yc is None:
        raise TrackingError("Profile has no qualifying downward crossing of 1/2.")
    return profile.with_grid(profile.grid.shifted(-yc), aligned=True)


def solve_tw(spec: ModelSpec, opts: Optional[BvpOptions] = None) -> SolveOutcome:
    """
    Solve for the TW profile of (m, lambda) and classify the outcome.

    converged: Newton converged and the aligned profile is valid.
    invalid:   Newton converged but the validity checks fail.
    trivial:   Newton converged to a boundary layer (front pinned at an end).
    diverged:  Newton stagnated, blew up or ran out of iterations.
    """
    opts = opts or default_options(spec.m, spec.lam)
    if spec.lam <= 0:
        logger.warning(f"lambda={spec.lam} <= 0: no travelling wave is expected.")
    f, converged, iterations, history, message = newton_solve(spec, opts)
    outcome = SolveOutcome(SolveStatus.DIVERGED, spec.lam, spec.m, None, iterations, history, None, message)
    if not converged:
        logger.info(f"m={spec.m} lambda={spec.lam}: diverged after {iterations} iterations ({message})")
        return outcome

    raw = TWProfile(opts.grid, f, spec.lam, spec.m, history[-1], 0.0)
    momentum = momentum_identity(raw)
    raw = TWProfile(opts.grid, f, spec.lam, spec.m, history[-1], momentum)
    yc = locate_crossing(raw.y, f, 0.5, ALIGN_WINDOW)
    grid = opts.grid
    if yc is None or yc - grid.left < TRIVIAL_MARGIN or grid.right - yc < TRIVIAL_MARGIN:
        outcome.status = SolveStatus.TRIVIAL
        outcome.profile = raw
        outcome.message = "front pinned at a boundary"
        logger.info(f"m={spec.m} lambda={spec.lam}: trivial solution")
        return outcome

    profile = raw.with_grid(grid.shifted(-yc), aligned=True)
    validity = check_validity(profile)
    outcome.profile = profile
    outcome.validity = validity
    if validity.ok:
        outcome.status = SolveStatus.CONVERGED
        logger.info(
            f"m={spec.m} lambda={spec.lam}: converged in {iterations} iterations, momentum={momentum:.6f}"
        )
    else:
        outcome.status = SolveStatus.INVALID
        outcome.message = "; ".join(validity.reasons)
        logger.info(f"m={spec.m} lambda={spec.lam}: converged but invalid ({outcome.message})")
    return outcome


#####################################
# Branches and lambda_max
#####################################


def _options_for(m: int, lam: float, opts: Optional[BvpOptions]) -> BvpOptions:
    return opts if opts is not None else default_options(m, lam)


def continue_branch(m: int, lambdas, opts: Optional[BvpOptions] = None) -> list:
    """
    Solve along a monotone list of speeds, seeding each from the last valid profile.

    Failures are recorded per lambda; the sweep always runs to the end.
    """
    lambdas = [float(v) for v in lambdas]
    steps = np.diff(lambdas)
    if len(steps) and not (np.all(steps > 0) or np.all(steps < 0)):
        raise DomainError("continue_branch needs a strictly monotone list of speeds.")
    outcomes = []
    last_valid = None
    for lam in lambdas:
        base = _options_for(m, lam, opts)
        run_opts = base.seeded_from(last_valid) if last_valid is not None else base
        outcome = solve_tw(ModelSpec(m, lam), run_opts)
        if outcome.valid:
            last_valid = outcome.profile
        outcomes.append(outcome)
    lost = branch_lost_at(outcomes)
    if lost is not None:
        logger.info(f"m={m}: branch lost between lambda={lost[0]} and lambda={lost[1]}")
    return outcomes


def branch_lost_at(outcomes: list):
    """(last valid lambda, first following non-valid lambda) or None."""
    for before, after in zip(outcomes, outcomes[1:]):
        if before.valid and not after.valid:
            return before.lam, after.lam
    return None


def scan_lambda_max(
    m: int,
    lo: float,
    hi: float,
    width_tol: float = 0.01,
    opts: Optional[BvpOptions] = None,
    coarse: int = 4,
) -> LambdaScan:
    """
    Bracket the largest speed with a valid profile.

    A coarse continuation pass over [lo, hi] checks the predicate is
    valid...valid, invalid...invalid; then bisection with branch-continued
    seeds shrinks the bracket to width_tol. The result is a bracket only.
    """
    if not lo < hi:
        raise DomainError(f"Scan needs lo < hi, got [{lo}, {hi}].")
    samples = []
    coarse_lams = np.linspace(lo, hi, coarse + 2)
    outcomes = continue_branch(m, coarse_lams, opts)
    samples.extend((o.lam, o.status.value) for o in outcomes)
    flags = [o.valid for o in outcomes]
    if not flags[0]:
        raise ScanError(f"No valid profile at the lower end lambda={lo}.", samples)
    if flags[-1]:
        raise ScanError(f"Profile still valid at the upper end lambda={hi}.", samples)
    first_bad = flags.index(False)
    if any(flags[first_bad:]):
        raise ScanError("Existence predicate is not monotone inside the bracket.", samples)

    a, b = float(coarse_lams[first_bad - 1]), float(coarse_lams[first_bad])
    seed = outcomes[first_bad - 1].profile
    while b - a > width_tol:
        mid = 0.5 * (a + b)
        outcome = solve_tw(ModelSpec(m, mid), _options_for(m, mid, opts).seeded_from(seed))
        samples.append((mid, outcome.status.value))
        if outcome.valid:
            a, seed = mid, outcome.profile
        else:
            b = mid
        logger.debug(f"m={m} bracket [{a:.6f}, {b:.6f}]")
    logger.info(f"m={m}: lambda_max in [{a:.6f}, {b:.6f})")
    return LambdaScan(m, samples, (a, b), b - a)


#####################################
# Profile Diagnostics
#####################################


def count_oscillations(profile: TWProfile, side: EquilibriumSide, threshold: float = 1e-12, window=None) -> int:
    """
    Sign changes of f minus the equilibrium beyond the front crossing.

    side=zero looks at y to the right of the crossing, side=one to the left.
    Only samples with |f - equilibrium| > threshold take part. window, if
    given, is a (lo, hi) range in y.
    """
    side = EquilibriumSide(side)
    y, f = profile.y, np.asarray(profile.values)
    yc = 0.0 if profile.aligned else locate_crossing(y, f, 0.5, ALIGN_WINDOW)
    if yc is None:
        return 0
    sel = y > yc if side is EquilibriumSide.ZERO else y < yc
    if window is not None:
        sel &= (y > window[0]) & (y < window[1])
    dev = f[sel] - side.value_at
    signs = np.sign(dev[np.abs(dev) > threshold])
    return int(np.count_nonzero(signs[1:] != signs[:-1]))


def compare_orders(p1: TWProfile, p2: TWProfile) -> float:
    """
    Sup-norm difference of two profiles over the overlap of their grids.

    Profiles that are not aligned are first translated so their front
    crosses 1/2 at y = 0; a profile without such a crossing raises
    TrackingError.
    """
    p1 = p1 if p1.aligned else align_profile(p1)
    p2 = p2 if p2.aligned else align_profile(p2)
    lo = max(p1.grid.left, p2.grid.left)
    hi = min(p1.grid.right, p2.grid.right)
    if lo >= hi:
        raise ComparisonError(f"Profile grids do not overlap: [{p1.grid.left}, {p1.grid.right}] vs [{p2.grid.left}, {p2.grid.right}].")
    if p1.lam != p2.lam:
        logger.warning(f"Comparing profiles at different speeds {p1.lam} and {p2.lam}.")
    y = p1.y
    sel = (y >= lo) & (y <= hi)
    other = np.interp(y[sel], p2.y, p2.values)
    return float(np.max(np.abs(np.asarray(p1.values)[sel] - other)))


def tail_decay_rate(profile: TWProfile, window) -> float:
    """
    Slope of log|f| through the oscillation peaks of the right tail.

    Compared with the real part of the slowest stable root at f = 0.
    """
    y, f = profile.y, np.abs(np.asarray(profile.values))
    sel = (y > window[0]) & (y < window[1])
    peaks, _ = find_peaks(f[sel])
    if len(peaks) < 2:
        raise TrackingError("Fewer than two tail peaks in the window; cannot fit a decay rate.")
    slope, _ = np.polyfit(y[sel][peaks], np.log(f[sel][peaks]), 1)
    return float(slope)


def slowest_stable_rate(m: int, lam: float) -> float:
    """Real part of the stable root at f = 0 closest to the imaginary axis."""
    roots = find_roots(build_charpoly(m, lam, EquilibriumSide.ZERO))
    stable = [mu.real for mu, _ in roots.roots if mu.real < 0]
    return max(stable)


@dataclass
class RobustnessReport:
    trials: int
    converged: int
    max_spread: float
    spreads: list


def perturbation_robustness(
    spec: ModelSpec,
    opts: Optional[BvpOptions] = None,
    trials: int = 5,
    amplitude: float = 0.05,
    seed: int = 0,
) -> RobustnessReport:
    """
    Restart the solve from randomly perturbed seeds and measure the spread.

    Perturbations are sums of three Gaussian bumps of random sign near the
    front. A small spread says the branch is locally robust; it says
    nothing about uniqueness.
    """
    opts = opts or default_options(spec.m, spec.lam)
    base = solve_tw(spec, opts)
    if not base.valid:
        return RobustnessReport(trials, 0, float("nan"), [])
    rng = np.random.default_rng(seed)
    y = opts.grid.nodes
    start = np.interp(y, base.profile.y, base.profile.values, left=1.0, right=0.0)
    spreads = []
    for _ in range(trials):
        centres = rng.uniform(-20.0, 20.0, size=3)
        signs = rng.choice([-1.0, 1.0], size=3)
        bump = sum(s * np.exp(-((y - c) ** 2) / 8.0) for s, c in zip(signs, centres))
        seeded = TWProfile(opts.grid, start + amplitude * bump, spec.lam, spec.m, np.inf, np.nan)
        outcome = solve_tw(spec, opts.seeded_from(seeded))
        if outcome.valid:
            spreads.append(compare_orders(base.profile, outcome.profile))
    spread = max(spreads) if spreads else float("nan")
    logger.info(f"m={spec.m} lambda={spec.lam}: {len(spreads)}/{trials} perturbed restarts converged, spread={spread:.3e}")
    return RobustnessReport(trials, len(spreads), spread, spreads)
