"""Package logger: a single rich handler on stderr, level taken from ``$LOGLEVEL``."""

from __future__ import annotations

import logging
import os

from rich.console import Console
from rich.logging import RichHandler

LOGGER_NAME = "clusterd2d"


def _level_from_env(default: int = logging.INFO) -> int:
    value = os.environ.get("LOGLEVEL")
    if not value:
        return default
    if value.isdigit():
        return int(value)
    level = logging.getLevelName(value.upper())
    return level if isinstance(level, int) else default


def _setup_logger() -> logging.Logger:
    logger = logging.getLogger(LOGGER_NAME)
    logger.setLevel(_level_from_env())
    console = Console(stderr=True, force_terminal=True)
    handler = RichHandler(console=console, show_path=False, show_time=logger.level <= logging.DEBUG, markup=False)
    logger.addHandler(handler)
    logger.propagate = False
    return logger


logger = _setup_logger()
