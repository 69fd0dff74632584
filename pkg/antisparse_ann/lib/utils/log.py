"""Module configuring the package logger with a rich console handler"""
import logging

from rich.console import Console
from rich.logging import RichHandler

PACKAGE_LOGGER = "antisparse_ann"

_LEVELS = {0: logging.WARNING, 1: logging.INFO}


def setup_logging(verbosity: int = 0) -> logging.Logger:
    """Attach a RichHandler (stderr) to the package logger and set its level from -v count."""
    logger = logging.getLogger(PACKAGE_LOGGER)
    logger.setLevel(_LEVELS.get(verbosity, logging.DEBUG))
    if not any(isinstance(h, RichHandler) for h in logger.handlers):
        handler = RichHandler(console=Console(stderr=True), show_path=False, rich_tracebacks=True)
        handler.setFormatter(logging.Formatter("%(message)s", datefmt="[%X]"))
        logger.addHandler(handler)
    logger.propagate = False
    return logger
