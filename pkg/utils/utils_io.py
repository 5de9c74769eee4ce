"""
utils_io.py - common functions for writing and reading result files.

All numeric CSVs are written through pandas at full double precision.
Digests are sha256 over the file bytes, as recorded in run manifests.
"""

#####################################
# Import Modules
#####################################

# Import packages from Python Standard Library
import hashlib
import json
import pathlib

# Import external packages
import numpy as np
import pandas as pd

# Import functions from local modules
from utils.utils_logger import logger

#####################################
# Constants
#####################################

FLOAT_FORMAT = "%.17g"

#####################################
# Writers
#####################################


def write_frame_csv(path: pathlib.Path, frame: pd.DataFrame) -> pathlib.Path:
    """Write a DataFrame without its index at full precision."""
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    logger.debug(f"Wrote {len(frame)} rows to {path}")
    return path


def write_snapshot_csv(path: pathlib.Path, t: float, x, u) -> pathlib.Path:
    """Write an `x,u` snapshot preceded by a `# t=<time>` line."""
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as handle:
        handle.write(f"# t={t!r}\n")
        pd.DataFrame({"x": np.asarray(x), "u": np.asarray(u)}).to_csv(
            handle, index=False, float_format=FLOAT_FORMAT
        )
    return path


#####################################
# Readers
#####################################


def read_csv(path: pathlib.Path) -> pd.DataFrame:
    """Read a result CSV, skipping `#` comment lines."""
    return pd.read_csv(path, comment="#")


def read_snapshot_time(path: pathlib.Path) -> float:
    """Return the time stored in the `# t=` header of a snapshot CSV."""
    with open(path, "r") as handle:
        first = handle.readline().strip()
    if not first.startswith("# t="):
        raise ValueError(f"Snapshot file {path} has no '# t=' header line.")
    return float(first[len("# t="):])


#####################################
# Digests and Manifests
#####################################


def file_digest(path: pathlib.Path) -> str:
    """Return the sha256 hex digest of a file."""
    sha = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b""):
            sha.update(chunk)
    return sha.hexdigest()


def write_json(path: pathlib.Path, payload: dict) -> pathlib.Path:
    """Write a JSON document with sorted keys."""
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True, default=str)
        handle.write("\n")
    logger.info(f"Wrote {path}")
    return path


def read_json(path: pathlib.Path) -> dict:
    """Read a JSON document."""
    with open(path, "r") as handle:
        return json.load(handle)
