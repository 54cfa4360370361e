import logging
from typing import Optional
from rich.console import Console
from rich.logging import RichHandler


__all__ = ["get_logger", "configure_logging", "console"]


PROJECT_LOGGER = "ris_uav"
console = Console(stderr=True)


def configure_logging(level: Optional[int] = logging.INFO) -> logging.Logger:
    root = logging.getLogger(PROJECT_LOGGER)
    if not any(isinstance(h, RichHandler) for h in root.handlers):
        handler = RichHandler(
            console=console,
            show_path=False,
            rich_tracebacks=True,
            markup=False
        )
        handler.setFormatter(logging.Formatter("%(name)s: %(message)s"))
        root.addHandler(handler)
        root.propagate = False
    root.setLevel(level)
    return root


def get_logger(name: str) -> logging.Logger:
    """
    Child logger of the project logger, e.g. `ris_uav.learners.trainer`.
    """
    return logging.getLogger(f"{PROJECT_LOGGER}.{name}")
