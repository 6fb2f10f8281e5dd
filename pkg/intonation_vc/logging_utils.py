"""Logging setup driven by LoggingConfig."""
import logging
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Optional

from intonation_vc.config.models import LoggingConfig

_HANDLER_TAG = "_intonation_vc_handler"


def configure_logging(config: Optional[LoggingConfig] = None) -> logging.Logger:
    """
    Configure the package logger.

    Handlers installed by a previous call are replaced, so calling this twice
    (for example after a config reload) does not duplicate output.

    :param config: Logging section of the run configuration
    :return: The configured ``intonation_vc`` logger
    """
    config = config or LoggingConfig()
    logger = logging.getLogger("intonation_vc")
    logger.setLevel(config.level)

    for handler in list(logger.handlers):
        if getattr(handler, _HANDLER_TAG, False):
            logger.removeHandler(handler)
            handler.close()

    formatter = logging.Formatter(config.format)
    handlers: list = [logging.StreamHandler()]
    if config.file:
        Path(config.file).parent.mkdir(parents=True, exist_ok=True)
        handlers.append(
            RotatingFileHandler(config.file, maxBytes=config.max_bytes, backupCount=config.backup_count)
        )
    for handler in handlers:
        handler.setFormatter(formatter)
        setattr(handler, _HANDLER_TAG, True)
        logger.addHandler(handler)
    return logger
