"""
Logging Configuration
=====================
Sets up structured logging with console + rotating file output.
"""

import os
import logging
from logging.handlers import RotatingFileHandler

from curvednet.config import LOG_DIR, LOG_DIR_ENV, LOG_LEVEL_ENV

CONSOLE_HANDLER = "curvednet.console"
FILE_HANDLER = "curvednet.file"


def resolve_level(level=None):
    """Explicit level, else $CURVEDNET_LOG_LEVEL, else INFO."""
    if level is None:
        level = os.getenv(LOG_LEVEL_ENV, "INFO")
    if isinstance(level, str):
        resolved = logging.getLevelName(level.strip().upper())
        return resolved if isinstance(resolved, int) else logging.INFO
    return level


def setup_logging(level=None):
    """
    Configure logging for the application.

    - Console handler: requested level, human-readable format
    - File handler: DEBUG level, rotating (10 MB, 5 backups) under
      $CURVEDNET_LOG_DIR or LOG_DIR

    Repeated calls do not add handlers. Returns the log file path.
    """
    log_dir = os.getenv(LOG_DIR_ENV) or LOG_DIR
    os.makedirs(log_dir, exist_ok=True)
    log_path = os.path.join(log_dir, "curvednet.log")

    root_logger = logging.getLogger()
    names = {h.get_name() for h in root_logger.handlers}
    if CONSOLE_HANDLER in names:
        return log_path

    root_logger.setLevel(logging.DEBUG)

    # ── Console Handler ──────────────────────────────────
    console_fmt = logging.Formatter(
        "%(asctime)s  %(levelname)-8s  %(name)s  %(message)s",
        datefmt="%H:%M:%S",
    )
    console_handler = logging.StreamHandler()
    console_handler.set_name(CONSOLE_HANDLER)
    console_handler.setLevel(resolve_level(level))
    console_handler.setFormatter(console_fmt)
    root_logger.addHandler(console_handler)

    # ── File Handler (rotating) ──────────────────────────
    file_fmt = logging.Formatter(
        "%(asctime)s  %(levelname)-8s  %(name)s  [%(filename)s:%(lineno)d]  %(message)s"
    )
    file_handler = RotatingFileHandler(
        log_path,
        maxBytes=10 * 1024 * 1024,  # 10 MB
        backupCount=5,
        encoding="utf-8",
    )
    file_handler.set_name(FILE_HANDLER)
    file_handler.setLevel(logging.DEBUG)
    file_handler.setFormatter(file_fmt)
    root_logger.addHandler(file_handler)

    logging.getLogger(__name__).info("Logging initialised, file: %s", log_path)
    return log_path
