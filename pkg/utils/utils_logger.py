"""
Logger Setup Script
File: utils/utils_logger.py

This script provides logging functions for the project.
Every solver, simulation and command logs through the shared loguru logger.

Features:
- Logs information, warnings, and errors to a designated log file.
- Ensures the log directory exists.
- Folder and level come from the environment (KPP_LOG_FOLDER, KPP_LOG_LEVEL).
"""

# Imports from Python Standard Library
import os
import pathlib

# Imports from external packages
from dotenv import load_dotenv
from loguru import logger

load_dotenv()

# Get this file name without the extension
CURRENT_SCRIPT = pathlib.Path(__file__).stem

# Set directory where logs will be stored
LOG_FOLDER: pathlib.Path = pathlib.Path(os.getenv("KPP_LOG_FOLDER", "logs"))

# Set the name of the log file
LOG_FILE: pathlib.Path = LOG_FOLDER.joinpath("project_log.log")

# Level for the file sink
LOG_LEVEL: str = os.getenv("KPP_LOG_LEVEL", "INFO").upper()

# Ensure the log folder exists or create it
try:
    LOG_FOLDER.mkdir(parents=True, exist_ok=True)
    logger.debug(f"Log folder ready at: {LOG_FOLDER}")
except Exception as e:
    logger.error(f"Error creating log folder: {e}")

# Configure Loguru to write to the log file
try:
    _FILE_SINK_ID = logger.add(LOG_FILE, level=LOG_LEVEL)
    logger.debug(f"Logging to file: {LOG_FILE} at level {LOG_LEVEL}")
except Exception as e:
    _FILE_SINK_ID = None
    logger.error(f"Error configuring logger to write to file: {e}")


def get_log_file_path() -> pathlib.Path:
    """Return the path to the log file."""
    return LOG_FILE


def set_log_level(level: str) -> None:
    """Re-add the file sink at a new level (used by the --log-level flag)."""
    global _FILE_SINK_ID
    try:
        if _FILE_SINK_ID is not None:
            logger.remove(_FILE_SINK_ID)
        _FILE_SINK_ID = logger.add(LOG_FILE, level=level.upper())
        logger.info(f"Log level set to {level.upper()}")
    except Exception as e:
        logger.error(f"Error changing log level to {level}: {e}")


def main() -> None:
    """Main function to execute logger setup and show where output goes."""
    logger.info(f"STARTING {CURRENT_SCRIPT}.py")
    logger.info(f"View the log output at {LOG_FILE}")
    logger.info(f"EXITING {CURRENT_SCRIPT}.py.")


# Conditional execution block that calls main() only when this file is executed directly
if __name__ == "__main__":
    main()
