import sys
from datetime import datetime
from pathlib import Path
from typing import Optional

from loguru import logger as _logger

from app.config import PROJECT_ROOT, config


LOG_DIR = PROJECT_ROOT / "logs"
CONSOLE_FORMAT = (
    "<green>{time:HH:mm:ss.SSS}</green> | <level>{level: <8}</level> | "
    "<cyan>{name}</cyan> - <level>{message}</level>"
)

_print_level = "INFO"


def define_log_level(
    print_level: str = "INFO",
    logfile_level: Optional[str] = "DEBUG",
    name: Optional[str] = None,
    log_dir: Path = LOG_DIR,
):
    """Route console output at ``print_level`` and a per-run file at ``logfile_level``.

    The file sink is ``<log_dir>/<name>_<timestamp>.log``; pass ``logfile_level=None``
    to log to the console only.
    """
    global _print_level
    _print_level = print_level

    stamp = datetime.now().strftime("%Y%m%d%H%M%S")
    log_name = f"{name}_{stamp}" if name else stamp

    _logger.remove()
    _logger.add(sys.stderr, level=print_level, format=CONSOLE_FORMAT)
    if logfile_level is not None:
        _logger.add(Path(log_dir) / f"{log_name}.log", level=logfile_level, enqueue=True)
    return _logger


logger = define_log_level(print_level=config.log_level)
