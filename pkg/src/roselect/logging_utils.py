"""Helpers for consistent logging configuration across the CLI."""

from __future__ import annotations

import logging
import sys
from typing import Optional, TextIO

_LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
_DATE_FORMAT = "%H:%M:%S"


def level_for(verbosity: int) -> int:
    if verbosity >= 2:
        return logging.DEBUG
    if verbosity == 1:
        return logging.INFO
    if verbosity < 0:
        return logging.ERROR
    return logging.WARNING


def configure_logging(verbosity: int, *, stream: Optional[TextIO] = None) -> None:
    """Configure the root logger based on the requested verbosity.

    The CLI treats no flag as WARNING, "-v" as INFO, "-vv" (or more) as
    DEBUG and "-q" as ERROR. Records go to stderr so JSON on stdout stays
    parseable. Repeated invocations only adjust levels to avoid duplicating
    handlers when the CLI is imported in tests.
    """

    level = level_for(verbosity)
    root = logging.getLogger()
    if root.handlers:
        root.setLevel(level)
        for handler in root.handlers:
            handler.setLevel(level)
    else:
        logging.basicConfig(
            level=level,
            format=_LOG_FORMAT,
            datefmt=_DATE_FORMAT,
            stream=stream if stream is not None else sys.stderr,
        )

    logging.captureWarnings(True)
