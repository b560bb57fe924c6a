"""Process-wide logging configuration for the stbeam CLI.

Installs one handler on the root logger: stderr by default, or a
RotatingFileHandler when a log file is given. Nothing is ever logged to
stdout, so command summaries and output files are unaffected. Third-party
library log levels are tuned to reduce noise.
"""

import logging
import sys
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Optional

_FORMAT = "%(asctime)s %(name)s %(levelname)s %(message)s"

_installed: Optional[logging.Handler] = None


def configure_logging(level: str = "WARNING", log_file: Optional[str] = None) -> None:
    """Set up logging for one CLI invocation.

    Args:
        level: logging level name (DEBUG, INFO, WARNING, ERROR).
        log_file: optional path of a rotating log file; stderr when None.
    """
    global _installed
    if log_file:
        path = Path(log_file)
        path.parent.mkdir(parents=True, exist_ok=True)
        handler: logging.Handler = RotatingFileHandler(
            str(path),
            maxBytes=10 * 1024 * 1024,
            backupCount=3,
            encoding="utf-8",
        )
    else:
        handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(_FORMAT, datefmt="%Y-%m-%d %H:%M:%S"))

    root = logging.getLogger()
    root.setLevel(getattr(logging, level.upper(), logging.WARNING))
    if _installed is not None:
        root.removeHandler(_installed)
        _installed.close()
    root.addHandler(handler)
    _installed = handler

    # pandas may pull in numexpr, which logs its thread count at INFO
    logging.getLogger("numexpr").setLevel(logging.WARNING)
