"""
plotdata.py - plot-ready CSV bundles with a gnuplot script alongside.

Each bundle is a folder <out_dir>/<kind>/ holding one two-column CSV per
series and a plain-text `plot.gp` that overlays them. No plotting library
is imported; the script is for whoever wants a picture.
"""

#####################################
# Import Modules
#####################################

# Import packages from Python Standard Library
import pathlib
from enum import Enum

# Import functions from local modules
from kpp.errors import EmissionError
from utils.utils_io import read_csv, write_frame_csv
from utils.utils_logger import logger

#####################################
# Bundle Kinds
#####################################


class PlotKind(str, Enum):
    PROFILES = "profiles"
    TAIL = "tail"
    FRONT = "front"
    KSCAN = "kscan"


COLUMNS = {
    PlotKind.PROFILES: ("y", "f"),
    PlotKind.TAIL: ("y", "f"),
    PlotKind.FRONT: ("t", "xf"),
    PlotKind.KSCAN: ("k", "residual"),
}

DEFAULT_TAIL_WINDOWS = ((0.0, 300.0), (0.0, 600.0))


def _safe(label: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in str(label))


def _script(series: list, xcol: str, ycol: str, logscale: bool = False) -> str:
    lines = [
        'set datafile separator ","',
        f'set xlabel "{xcol}"',
        f'set ylabel "{ycol}"',
    ]
    if logscale:
        lines.append("set logscale y")
    plots = [f"'{name}' using 1:2 skip 1 with lines title '{title}'" for name, title in series]
    lines.append("plot " + ", \\\n     ".join(plots))
    return "\n".join(lines) + "\n"


#####################################
# Emission
#####################################


def emit_plotdata(results: dict, kind, out_dir, windows=DEFAULT_TAIL_WINDOWS) -> list:
    """
    Write the bundle for one kind of figure.

    Args:
        results (dict): Series label -> path of a result CSV of the kind.
        kind (PlotKind | str): profiles, tail, front or kscan.
        out_dir: Folder the bundle folder is created in.
        windows: (y_min, y_max) ranges cut from each profile for kind=tail.

    Returns:
        list: Written paths, the script last. Empty when results is empty.
    """
    kind = PlotKind(kind)
    if not results:
        logger.warning(f"No results for the {kind.value} bundle; no files written.")
        return []
    missing = [str(p) for p in results.values() if not pathlib.Path(p).is_file()]
    if missing:
        raise EmissionError(f"Missing result files for the {kind.value} bundle: {', '.join(missing)}")

    xcol, ycol = COLUMNS[kind]
    bundle = pathlib.Path(out_dir) / kind.value
    written, series = [], []
    for label, source in results.items():
        frame = read_csv(source)
        if xcol not in frame.columns or ycol not in frame.columns:
            raise EmissionError(f"{source} lacks the columns {xcol},{ycol}.")
        frame = frame[[xcol, ycol]]
        if kind is PlotKind.TAIL:
            for lo, hi in windows:
                part = frame[(frame[xcol] > lo) & (frame[xcol] < hi)]
                name = f"{_safe(label)}_{lo:g}_{hi:g}.csv"
                written.append(write_frame_csv(bundle / name, part))
                series.append((name, f"{label} ({lo:g},{hi:g})"))
        else:
            name = f"{_safe(label)}.csv"
            written.append(write_frame_csv(bundle / name, frame))
            series.append((name, str(label)))

    script = bundle / "plot.gp"
    script.write_text(_script(series, xcol, ycol, logscale=kind is PlotKind.KSCAN))
    written.append(script)
    logger.info(f"Emitted {kind.value} bundle with {len(series)} series to {bundle}")
    return written
