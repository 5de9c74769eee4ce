"""
utils_config.py - getters for environment-driven defaults.

Values come from the process environment or a .env file in the project root.
Each getter logs what it resolved so a run log shows the effective settings.
"""

#####################################
# Import Modules
#####################################

# Import packages from Python Standard Library
import os
import pathlib

# Import external packages
from dotenv import load_dotenv

# Import functions from local modules
from utils.utils_logger import logger

#####################################
# Load Environment Variables
#####################################

load_dotenv()

#####################################
# Default Configurations
#####################################

DEFAULT_OUTPUT_ROOT = "results"
DEFAULT_JOBS = 1
DEFAULT_SEED = 0

ARTIFACT_VERSION = "0.3.0"

#####################################
# Getter Functions for .env Variables
#####################################


def get_output_root() -> pathlib.Path:
    """Fetch the output root directory from environment or use default."""
    root = pathlib.Path(os.getenv("KPP_OUTPUT_ROOT", DEFAULT_OUTPUT_ROOT))
    logger.info(f"Output root: {root}")
    return root


def get_jobs() -> int:
    """Fetch the worker pool size from environment or use default."""
    raw = os.getenv("KPP_JOBS", str(DEFAULT_JOBS))
    try:
        jobs = max(1, int(raw))
    except ValueError:
        logger.warning(f"KPP_JOBS={raw!r} is not an integer; using {DEFAULT_JOBS}")
        jobs = DEFAULT_JOBS
    logger.info(f"Worker pool size: {jobs}")
    return jobs


def get_seed() -> int:
    """Fetch the random seed from environment or use default."""
    raw = os.getenv("KPP_SEED", str(DEFAULT_SEED))
    try:
        seed = int(raw)
    except ValueError:
        logger.warning(f"KPP_SEED={raw!r} is not an integer; using {DEFAULT_SEED}")
        seed = DEFAULT_SEED
    logger.info(f"Random seed: {seed}")
    return seed
