"""
cli.py - command-line front end for the KPP front propagation lab.

Usage:

    python -m kpp.cli scan-max m=2
    python -m kpp.cli sweep m=2 lambdas=0.1:0.1:1.2 --jobs 4
    python -m kpp.cli --config data/evolve_m1.cfg --out results/m1

A run configuration is flat `key = value` text under one `[command]`
header. Inline `key=value` tokens after the command are turned into the
same text. Every run writes its CSVs and a manifest.json (config echo,
version, timestamps, per-task status, output digests) into the output
folder.

Exit codes: 0 success, 2 an expected nonexistence outcome (no valid
profile, scan bracket not found), 1 an error.
"""

#####################################
# Import Modules
#####################################

# Import packages from Python Standard Library
import argparse
import configparser
import pathlib
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from math import log2

# Import external packages
import numpy as np
import pandas as pd
from scipy.special import erfc

# Import functions from local modules
from kpp import cauchy, charpoly, linearized, model, stencils, twsolver
from kpp.errors import ConfigParseError, ConfigValidationError, KppError, ScanError
from kpp.plotdata import PlotKind, emit_plotdata
from utils.utils_config import ARTIFACT_VERSION, get_jobs, get_output_root, get_seed
from utils.utils_io import (
    file_digest,
    read_csv,
    read_json,
    write_frame_csv,
    write_json,
    write_snapshot_csv,
)
from utils.utils_logger import get_log_file_path, logger, set_log_level

#####################################
# Exit Codes
#####################################

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NONEXISTENT = 2

#####################################
# Configuration Schemas
#####################################

# key -> (kind, default); default None marks an optional key
GRID_KEYS = {
    "left": ("float", None),
    "right": ("float", None),
    "spacing": ("float", None),
    "newton_tol": ("float", twsolver.DEFAULT_NEWTON_TOL),
    "max_iter": ("int", twsolver.DEFAULT_MAX_ITER),
    "guess": ("str", twsolver.Guess.HEAVISIDE.value),
}

SCHEMAS = {
    "roots": {"m": ("int", 2), "lambdas": ("floats", [0.0]), "side": ("str", "both")},
    "tw": {"m": ("int", 2), "lambda": ("float", 0.5), "robustness_trials": ("int", 0), **GRID_KEYS},
    "scan-max": {
        "m": ("int", 2),
        "lo": ("float", None),
        "hi": ("float", None),
        "width_tol": ("float", 0.01),
        "coarse": ("int", 4),
        **GRID_KEYS,
    },
    "sweep": {"m": ("int", 2), "lambdas": ("floats", None), "continue": ("bool", False), **GRID_KEYS},
    "evolve": {
        "m": ("int", 1),
        "T": ("float", 100.0),
        "A": ("float", cauchy.DEFAULT_A),
        "B": ("float", cauchy.DEFAULT_B),
        "h": ("float", 0.1),
        "dt0": ("float", 0.01),
        "dt_max": ("float", 0.5),
        "step_tol": ("float", cauchy.DEFAULT_STEP_TOL),
        "u0": ("str", cauchy.InitialData.HEAVISIDE.value),
        "width": ("float", None),
        "u0_file": ("str", None),
        "output_interval": ("float", 1.0),
        "snapshot_every": ("int", 10),
        "lyapunov": ("bool", False),
    },
    "fit-shift": {"history": ("str", None), "t_min": ("float", None), "t_max": ("float", None)},
    "verify": {"manifest": ("str", None)},
    "center": {"m": ("int", 2), "lambda": ("float", 0.5), "ks": ("floats", "0:0.25:3"), **GRID_KEYS},
    "selfsimilar": {"m": ("int", 2), "extent": ("float", linearized.SELFSIMILAR_EXTENT), "spacing": ("float", None)},
}

REQUIRED = {"sweep": ("lambdas",), "fit-shift": ("history",)}

# brackets known to contain lambda_max(m)
DEFAULT_SCAN_BRACKETS = {2: (1.0, 1.5), 3: (1.8, 2.4), 4: (1.8, 2.4)}
FALLBACK_SCAN_BRACKET = (0.5, 3.0)

#####################################
# Domain Types
#####################################


@dataclass(frozen=True)
class RunConfig:
    """A validated command with its typed parameters."""

    command: str
    params: dict
    seed: int = 0
    jobs: int = 1
    out_dir: pathlib.Path = None
    text: str = ""


@dataclass
class RunManifest:
    command: str
    config: dict
    version: str
    started: str
    finished: str = ""
    tasks: list = field(default_factory=list)
    outputs: list = field(default_factory=list)
    exit_code: int = EXIT_OK

    def add_task(self, name: str, status: str, **detail) -> None:
        self.tasks.append({"name": name, "status": status, **detail})

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "config": self.config,
            "version": self.version,
            "started": self.started,
            "finished": self.finished,
            "tasks": self.tasks,
            "outputs": self.outputs,
            "exit_code": self.exit_code,
        }


#####################################
# Parsing
#####################################


def parse_list(raw: str) -> list:
    """`a:step:b` (inclusive) or a comma-separated list of floats."""
    raw = raw.strip()
    if ":" in raw:
        a, step, b = (float(part) for part in raw.split(":"))
        if step <= 0 or b < a:
            raise ValueError(f"range {raw!r} needs step > 0 and b >= a")
        count = int(round((b - a) / step)) + 1
        return [round(a + i * step, 12) for i in range(count)]
    return [float(part) for part in raw.split(",") if part.strip()]


def _locate(text: str, key: str) -> tuple:
    """1-based (line, column) of the value of key in the config text."""
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.lstrip()
        if stripped.split("=", 1)[0].strip() == key and "=" in stripped:
            value_start = line.index("=") + 1
            while value_start < len(line) and line[value_start] == " ":
                value_start += 1
            return number, value_start + 1
    return 0, 0


def _convert(kind: str, raw: str):
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    if kind == "floats":
        values = parse_list(raw)
        if not values:
            raise ValueError("empty list")
        return values
    if kind == "bool":
        lowered = raw.strip().lower()
        if lowered not in configparser.ConfigParser.BOOLEAN_STATES:
            raise ValueError(f"not a boolean: {raw!r}")
        return configparser.ConfigParser.BOOLEAN_STATES[lowered]
    return raw.strip()


def _validate(command: str, params: dict) -> None:
    m = params.get("m")
    if m is not None and m < 1:
        raise ConfigValidationError("order parameter must be >= 1", "m")
    for key in REQUIRED.get(command, ()):
        if params.get(key) is None:
            raise ConfigValidationError("required key is missing", key)
    if "side" in params and params["side"] not in ("zero", "one", "both"):
        raise ConfigValidationError("must be zero, one or both", "side")
    if "guess" in params and params["guess"] not in {g.value for g in twsolver.Guess} - {"profile"}:
        raise ConfigValidationError("must be heaviside or smoothed", "guess")
    if "u0" in params:
        if params["u0"] not in {k.value for k in cauchy.InitialData}:
            raise ConfigValidationError("must be heaviside, smoothed or custom", "u0")
        if params["u0"] == "custom" and not params.get("u0_file"):
            raise ConfigValidationError("u0=custom needs u0_file", "u0_file")
    for key in ("T", "A", "B", "h", "dt0", "dt_max", "spacing", "width_tol", "output_interval", "extent"):
        value = params.get(key)
        if value is not None and value <= 0:
            raise ConfigValidationError("must be positive", key)
    if command == "tw" and params["lambda"] <= 0:
        logger.warning(f"lambda={params['lambda']} <= 0: a valid travelling wave is not expected.")


def parse_config(text: str, seed: int = 0, jobs: int = 1, out_dir=None) -> RunConfig:
    """
    Parse and validate run configuration text.

    Raises:
        ConfigParseError: malformed text or values, with line and column.
        ConfigValidationError: unknown command or key, or a value out of range.
    """
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError as e:
        raise ConfigParseError("expected a [command] section header", e.lineno, 1) from e
    except configparser.DuplicateOptionError as e:
        raise ConfigParseError(f"duplicate key {e.option!r}", e.lineno or 0, 1) from e
    except configparser.DuplicateSectionError as e:
        raise ConfigParseError(f"duplicate section {e.section!r}", e.lineno or 0, 1) from e
    except configparser.ParsingError as e:
        line = e.errors[0][0] if e.errors else 0
        raise ConfigParseError("line is not `key = value`", line, 1) from e

    sections = parser.sections()
    if len(sections) != 1:
        raise ConfigParseError(f"expected exactly one [command] section, found {len(sections)}", 1, 1)
    command = sections[0]
    if command not in SCHEMAS:
        raise ConfigValidationError(f"unknown command {command!r}", "command")
    schema = SCHEMAS[command]

    params = {}
    for key, raw in parser.items(command):
        if key not in schema:
            raise ConfigValidationError(f"unknown key for {command}", key)
        kind, _ = schema[key]
        try:
            params[key] = _convert(kind, raw)
        except ValueError as e:
            line, column = _locate(text, key)
            raise ConfigParseError(f"bad {kind} value for {key!r}: {e}", line, column) from e
    for key, (kind, default) in schema.items():
        if key not in params:
            params[key] = _convert(kind, default) if isinstance(default, str) and kind == "floats" else default

    _validate(command, params)
    out = pathlib.Path(out_dir) if out_dir is not None else None
    return RunConfig(command, params, seed, jobs, out, text)


def inline_config(command: str, tokens: list) -> str:
    """Turn `key=value` tokens into configuration text under [command]."""
    lines = [f"[{command}]"]
    for token in tokens:
        if "=" not in token:
            raise ConfigParseError(f"inline parameter {token!r} is not key=value", 0, 0)
        key, value = token.split("=", 1)
        lines.append(f"{key.strip()} = {value.strip()}")
    return "\n".join(lines) + "\n"


#####################################
# Shared Helpers
#####################################


def _bvp_options(params: dict, m: int, lam: float) -> twsolver.BvpOptions:
    overrides = {k: params[k] for k in ("left", "right", "spacing") if params.get(k) is not None}
    return twsolver.default_options(
        m,
        lam,
        newton_tol=params["newton_tol"],
        max_iter=params["max_iter"],
        guess=twsolver.Guess(params["guess"]),
        **overrides,
    )


def _shared_options(params: dict, m: int, lam: float):
    """One options object for a whole scan when the grid is overridden; None keeps per-lambda defaults."""
    if any(params.get(k) is not None for k in ("left", "right", "spacing")):
        return _bvp_options(params, m, lam)
    return None


def _profile_frame(profile: model.TWProfile) -> pd.DataFrame:
    return pd.DataFrame({"y": profile.y, "f": np.asarray(profile.values)})


class _Outputs:
    """Collects written files for the manifest inventory."""

    def __init__(self, root: pathlib.Path):
        self.root = root
        self.paths = []

    def frame(self, name: str, frame: pd.DataFrame) -> pathlib.Path:
        path = write_frame_csv(self.root / name, frame)
        self.paths.append(path)
        return path

    def add(self, paths) -> None:
        self.paths.extend(pathlib.Path(p) for p in paths)

    def inventory(self) -> list:
        return [
            {"path": str(p.relative_to(self.root)), "sha256": file_digest(p), "bytes": p.stat().st_size}
            for p in self.paths
        ]


#####################################
# Commands
#####################################


def _run_roots(config: RunConfig, manifest: RunManifest, out: _Outputs) -> int:
    p = config.params
    sides = ("zero", "one") if p["side"] == "both" else (p["side"],)
    for side in sides:
        table = charpoly.root_table(p["m"], p["lambdas"], model.EquilibriumSide(side))
        out.frame(f"roots_{side}.csv", table)
        loci = charpoly.double_root_loci(p["m"], model.EquilibriumSide(side))
        manifest.add_task(f"roots-{side}", "ok", double_roots=[[mu.real, lam] for mu, lam in loci])
    feasibility = [charpoly.bundle_feasibility(p["m"], lam) for lam in p["lambdas"]]
    manifest.add_task("feasibility", "ok", surplus=feasibility)
    return EXIT_OK


def _run_tw(config: RunConfig, manifest: RunManifest, out: _Outputs) -> int:
    p = config.params
    spec = model.ModelSpec(p["m"], p["lambda"])
    opts = _bvp_options(p, spec.m, spec.lam)
    outcome = twsolver.solve_tw(spec, opts)
    detail = {"iterations": outcome.iterations, "message": outcome.message}
    profile_path = None
    if outcome.profile is not None:
        profile_path = out.frame("profile.csv", _profile_frame(outcome.profile))
        detail["momentum"] = outcome.profile.momentum
    if outcome.valid:
        label = f"m={spec.m} lambda={spec.lam:g}"
        out.add(emit_plotdata({label: profile_path}, PlotKind.TAIL, out.root / "plots"))
        detail["oscillations_zero"] = twsolver.count_oscillations(outcome.profile, model.EquilibriumSide.ZERO)
        detail["oscillations_one"] = twsolver.count_oscillations(outcome.profile, model.EquilibriumSide.ONE)
    manifest.add_task(f"tw m={spec.m} lambda={spec.lam}", outcome.status.value, **detail)
    if outcome.valid and p["robustness_trials"] > 0:
        report = twsolver.perturbation_robustness(spec, opts, p["robustness_trials"], seed=config.seed)
        manifest.add_task("robustness", "ok", converged=report.converged, max_spread=report.max_spread)
    return EXIT_OK if outcome.valid else EXIT_NONEXISTENT


def _run_scan_max(config: RunConfig, manifest: RunManifest, out: _Outputs) -> int:
    p = config.params
    m = p["m"]
    lo_default, hi_default = DEFAULT_SCAN_BRACKETS.get(m, FALLBACK_SCAN_BRACKET)
    lo = p["lo"] if p["lo"] is not None else lo_default
    hi = p["hi"] if p["hi"] is not None else hi_default
    opts = _shared_options(p, m, lo)
    try:
        scan = twsolver.scan_lambda_max(m, lo, hi, p["width_tol"], opts, p["coarse"])
    except ScanError as e:
        logger.info(f"scan-max m={m}: {e}")
        out.frame("scan_samples.csv", pd.DataFrame(e.samples, columns=["lambda", "status"]))
        manifest.add_task(f"scan-max m={m}", "no-bracket", message=str(e))
        return EXIT_NONEXISTENT
    out.frame("scan_samples.csv", pd.DataFrame(scan.samples, columns=["lambda", "status"]))
    manifest.add_task(f"scan-max m={m}", "ok", bracket=list(scan.bracket), width=scan.width, predicate=scan.predicate)
    return EXIT_OK


def _sweep_task(args):
    params, m, lam = args
    return twsolver.solve_tw(model.ModelSpec(m, lam), _bvp_options(params, m, lam))


def _run_sweep(config: RunConfig, manifest: RunManifest, out: _Outputs) -> int:
    p = config.params
    m, lambdas = p["m"], p["lambdas"]
    if p["continue"]:
        outcomes = twsolver.continue_branch(m, lambdas, _shared_options(p, m, lambdas[0]))
    elif config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            outcomes = list(pool.map(_sweep_task, [(p, m, lam) for lam in lambdas]))
    else:
        outcomes = [_sweep_task((p, m, lam)) for lam in lambdas]

    rows, valid_files = [], {}
    for index, outcome in enumerate(outcomes):
        oscillations = -1
        momentum = float("nan")
        if outcome.profile is not None:
            path = out.frame(f"profile_{index:03d}_lambda_{outcome.lam:g}.csv", _profile_frame(outcome.profile))
            momentum = outcome.profile.momentum
            if outcome.valid:
                oscillations = twsolver.count_oscillations(outcome.profile, model.EquilibriumSide.ZERO)
                valid_files[f"lambda={outcome.lam:g}"] = path
        rows.append({"lambda": outcome.lam, "status": outcome.status.value, "momentum": momentum, "oscillations": oscillations})
        manifest.add_task(f"tw m={m} lambda={outcome.lam:g}", outcome.status.value, message=outcome.message)
    out.frame("summary.csv", pd.DataFrame(rows, columns=["lambda", "status", "momentum", "oscillations"]))
    out.add(emit_plotdata(valid_files, PlotKind.PROFILES, out.root / "plots"))
    lost = twsolver.branch_lost_at(outcomes)
    if lost is not None:
        manifest.add_task("branch", "lost", between=list(lost))
    return EXIT_OK if all(o.valid for o in outcomes) else EXIT_NONEXISTENT


def _run_evolve(config: RunConfig, manifest: RunManifest, out: _Outputs) -> int:
    p = config.params
    custom = {}
    if p["u0"] == "custom":
        samples = read_csv(p["u0_file"])
        custom = {"custom_x": samples["x"].to_numpy(), "custom_u": samples["u"].to_numpy()}
    cfg = cauchy.CauchyConfig(
        m=p["m"],
        T_final=p["T"],
        A=p["A"],
        B=p["B"],
        h=p["h"],
        dt0=p["dt0"],
        dt_max=p["dt_max"],
        step_tol=p["step_tol"],
        u0=cauchy.InitialData(p["u0"]),
        width=p["width"],
        output_interval=p["output_interval"],
        **custom,
    )
    history, snapshots, blowup = cauchy.evolve(cfg)
    history_path = out.frame("front_history.csv", history.to_frame())
    every = max(1, p["snapshot_every"])
    chosen = snapshots[::every]
    if snapshots[-1] is not chosen[-1]:
        chosen.append(snapshots[-1])
    for index, snap in enumerate(chosen):
        path = write_snapshot_csv(out.root / "snapshots" / f"snapshot_{index:04d}.csv", snap.t, snap.x, snap.u)
        out.add([path])
    detail = {"blowup": blowup.detected, "t_detect": blowup.t_detect, "sup_norm": blowup.sup_norm_at_detect}
    if history.times:
        detail.update(umax=max(history.umax), umin=min(history.umin), xf_final=history.xf[-1])
    manifest.add_task(f"evolve m={cfg.m} T={cfg.T_final:g}", "blowup" if blowup.detected else "ok", **detail)
    if p["lyapunov"] and not blowup.detected:
        series = cauchy.lyapunov_monitor(snapshots, m=cfg.m)
        out.frame("lyapunov.csv", pd.DataFrame({"t": [s.t for s in snapshots], "L": series}))
        manifest.add_task("lyapunov", "ok", non_increasing=cauchy.is_non_increasing(series))
    if len(history.times) > 1:
        out.add(emit_plotdata({f"m={cfg.m}": history_path}, PlotKind.FRONT, out.root / "plots"))
    return EXIT_OK


def _run_fit_shift(config: RunConfig, manifest: RunManifest, out: _Outputs) -> int:
    p = config.params
    history = cauchy.FrontHistory.from_frame(read_csv(p["history"]))
    window = None
    if p["t_min"] is not None or p["t_max"] is not None:
        window = (p["t_min"] if p["t_min"] is not None else 1.0, p["t_max"] if p["t_max"] is not None else history.times[-1])
    fit = cauchy.fit_shift(history, window)
    rows = [{"basis": "t,log(t),1", "residual_rms": fit.residual_rms}]
    rows += [{"basis": name, "residual_rms": rms} for name, rms in fit.alternatives.items()]
    out.frame("fit_bases.csv", pd.DataFrame(rows, columns=["basis", "residual_rms"]))
    manifest.add_task(
        "fit-shift", "ok", lambda0=fit.lambda0, k=fit.k, c=fit.c, window=list(fit.window), samples=fit.samples
    )
    return EXIT_OK


def _run_center(config: RunConfig, manifest: RunManifest, out: _Outputs) -> int:
    p = config.params
    spec = model.ModelSpec(p["m"], p["lambda"])
    outcome = twsolver.solve_tw(spec, _bvp_options(p, spec.m, spec.lam))
    if not outcome.valid:
        manifest.add_task(f"tw m={spec.m} lambda={spec.lam}", outcome.status.value, message=outcome.message)
        return EXIT_NONEXISTENT
    op = linearized.assemble_B(outcome.profile)
    center = linearized.solve_affine_center(op)
    out.frame("psi.csv", linearized.field_frame(op.grid.nodes, center.psi))
    scan = linearized.scan_k(center, p["ks"])
    kscan_path = out.frame("kscan.csv", scan)
    out.add(emit_plotdata({f"m={spec.m} lambda={spec.lam:g}": kscan_path}, PlotKind.KSCAN, out.root / "plots"))
    manifest.add_task(
        "center",
        "ok",
        translation_residual=linearized.translation_residual(op),
        residual=center.residual,
        orthogonality_defect=center.orthogonality_defect,
    )
    return EXIT_OK


def _run_selfsimilar(config: RunConfig, manifest: RunManifest, out: _Outputs) -> int:
    p = config.params
    spacing = p["spacing"] or twsolver.default_spacing(p["m"])
    grid = model.Grid.from_spacing(-p["extent"], p["extent"], spacing)
    v = linearized.selfsimilar_profile(p["m"], grid)
    out.frame("V.csv", linearized.field_frame(grid.nodes, v))
    detail = {"sign_changes": int(np.count_nonzero(np.diff(np.sign(v[grid.nodes > 0])) != 0))}
    if p["m"] == 1:
        detail["erfc_error"] = float(np.max(np.abs(v - 0.5 * erfc(grid.nodes / 2.0))))
    manifest.add_task(f"selfsimilar m={p['m']}", "ok", **detail)
    return EXIT_OK


#####################################
# Verification Suite
#####################################


def check_momentum() -> tuple:
    outcome = twsolver.solve_tw(model.ModelSpec(2, 0.5))
    if outcome.profile is None:
        return False, float("inf"), model.VALID_MOMENTUM_DEFECT
    defect = abs(outcome.profile.momentum - model.MOMENTUM_TARGET)
    return outcome.valid and defect <= model.VALID_MOMENTUM_DEFECT, defect, model.VALID_MOMENTUM_DEFECT


def blowup_discrete_error(h: float, y0: float = 0.0) -> float:
    """
    Max |D4 f0 + f0^2| of the exact m=2 blow-up solution sampled on [-3, -1].

    Measured over nodes in [-2.9, -1.1], a set that does not move with h.
    """
    grid = model.Grid.from_spacing(-3.0, -1.0, h)
    f0 = model.blowup_profile(y0, grid)
    d4 = stencils.even_derivative(grid.n, grid.h, 4, 2) @ f0
    y = grid.nodes
    inner = stencils.interior_mask(grid.n, 2) & (y >= -2.9 - 1e-9) & (y <= -1.1 + 1e-9)
    return float(np.max(np.abs(d4[inner] + f0[inner] ** 2)))


def check_blowup_order() -> tuple:
    order = log2(blowup_discrete_error(0.01) / blowup_discrete_error(0.005))
    return order >= 1.9, order, 1.9


def check_double_roots() -> tuple:
    worst = 0.0
    for m in (1, 2, 3):
        for side in model.EquilibriumSide:
            for mu, lam in charpoly.double_root_loci(m, side):
                p = charpoly.build_charpoly(m, lam, side)
                worst = max(worst, abs(p(mu)), abs(p.derivative(mu)))
    return worst <= 1e-10, worst, 1e-10


def check_erfc() -> tuple:
    grid = linearized.default_selfsimilar_grid(1)
    error = float(np.max(np.abs(linearized.selfsimilar_profile(1, grid) - 0.5 * erfc(grid.nodes / 2.0))))
    return error <= 1e-3, error, 1e-3


def check_roots_at_zero() -> tuple:
    roots = charpoly.find_roots(charpoly.build_charpoly(2, 0.0, model.EquilibriumSide.ZERO)).values
    exact = np.array([-1.0, 1.0, 1j, -1j])
    worst = max(min(abs(r - e) for r in roots) for e in exact)
    return worst <= 1e-12, worst, 1e-12


VERIFY_CHECKS = {
    "roots_at_zero": check_roots_at_zero,
    "double_root_loci": check_double_roots,
    "blowup_order": check_blowup_order,
    "erfc_oracle": check_erfc,
    "momentum_identity": check_momentum,
}


def verify_manifest(path) -> list:
    """Re-read every output listed in a manifest; (path, digest matches) per file."""
    path = pathlib.Path(path)
    payload = read_json(path)
    results = []
    for entry in payload.get("outputs", []):
        target = path.parent / entry["path"]
        ok = target.is_file() and file_digest(target) == entry["sha256"]
        results.append((entry["path"], ok))
    return results


def _run_verify(config: RunConfig, manifest: RunManifest, out: _Outputs) -> int:
    rows = []
    for name, check in VERIFY_CHECKS.items():
        passed, value, tolerance = check()
        rows.append({"check": name, "passed": bool(passed), "value": float(value), "tolerance": float(tolerance)})
        manifest.add_task(name, "pass" if passed else "fail", value=float(value))
    if config.params["manifest"]:
        for name, ok in verify_manifest(config.params["manifest"]):
            rows.append({"check": f"digest:{name}", "passed": ok, "value": float(ok), "tolerance": 1.0})
            manifest.add_task(f"digest:{name}", "pass" if ok else "fail")
    out.frame("verify.csv", pd.DataFrame(rows, columns=["check", "passed", "value", "tolerance"]))
    return EXIT_OK if all(row["passed"] for row in rows) else EXIT_ERROR


COMMANDS = {
    "roots": _run_roots,
    "tw": _run_tw,
    "scan-max": _run_scan_max,
    "sweep": _run_sweep,
    "evolve": _run_evolve,
    "fit-shift": _run_fit_shift,
    "verify": _run_verify,
    "center": _run_center,
    "selfsimilar": _run_selfsimilar,
}

#####################################
# Run
#####################################


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def run(config: RunConfig) -> tuple:
    """
    Execute one configured command and write its manifest.

    Returns:
        tuple: (RunManifest, exit code).
    """
    root = config.out_dir or (get_output_root() / config.command)
    root.mkdir(parents=True, exist_ok=True)
    echo = {key: value for key, value in config.params.items()}
    echo.update(seed=config.seed, jobs=config.jobs)
    manifest = RunManifest(config.command, echo, ARTIFACT_VERSION, _now())
    out = _Outputs(root)
    try:
        code = COMMANDS[config.command](config, manifest, out)
    except KppError as e:
        logger.error(f"{config.command} failed: {e}")
        manifest.add_task(config.command, "error", error=type(e).__name__, message=str(e))
        code = EXIT_ERROR
    except Exception as e:
        logger.exception(f"Unexpected error in {config.command}: {e}")
        manifest.add_task(config.command, "error", error=type(e).__name__, message=str(e))
        code = EXIT_ERROR
    manifest.finished = _now()
    manifest.exit_code = code
    manifest.outputs = out.inventory()
    write_json(root / "manifest.json", manifest.to_dict())
    return manifest, code


#####################################
# Main Function
#####################################


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kpp", description="Higher-order KPP front propagation lab.")
    parser.add_argument("command", nargs="?", choices=sorted(COMMANDS), help="command to run")
    parser.add_argument("params", nargs="*", help="inline key=value parameters")
    parser.add_argument("--config", type=pathlib.Path, help="run configuration file")
    parser.add_argument("--out", type=pathlib.Path, help="output folder")
    parser.add_argument("--jobs", type=int, default=None, help="worker pool size for sweeps")
    parser.add_argument("--seed", type=int, default=None, help="seed for randomized restarts")
    parser.add_argument("--log-level", default=None, help="file log level")
    return parser


def main(argv=None) -> int:
    """Parse arguments, run the command, return the exit code."""
    args = build_parser().parse_args(argv)
    if args.log_level:
        set_log_level(args.log_level)
    logger.info("START cli")
    logger.info(f"Logging to {get_log_file_path()}")
    try:
        if args.config is not None:
            text = args.config.read_text()
            if args.params:
                text += inline_config(args.command or "", args.params).split("\n", 1)[1]
        elif args.command:
            text = inline_config(args.command, args.params)
        else:
            logger.error("Give a command or --config.")
            return EXIT_ERROR
        jobs = args.jobs if args.jobs is not None else get_jobs()
        seed = args.seed if args.seed is not None else get_seed()
        config = parse_config(text, seed=seed, jobs=max(1, jobs), out_dir=args.out)
        if args.command and config.command != args.command:
            raise ConfigValidationError(f"config is for {config.command!r}, not {args.command!r}", "command")
    except (KppError, OSError) as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_ERROR
    try:
        manifest, code = run(config)
    except KeyboardInterrupt:
        logger.warning("Run interrupted by user.")
        return EXIT_ERROR
    logger.info(f"END cli ({config.command}, exit {code})")
    return code


#####################################
# Conditional Execution
#####################################

if __name__ == "__main__":
    sys.exit(main())
