"""
utils
=====

Logging setup shared by the library and the command line
"""

import logging
from logging.config import dictConfig

__all__ = ["configure_logging", "get_logger"]


def configure_logging(verbose: bool = False):
    """
    Configures the "landscape" and "app" loggers

    Args:
        - verbose (bool): DEBUG instead of INFO on stdout
    """
    red = "\033[91m"
    endc = "\033[0m"
    level = "DEBUG" if verbose else "INFO"

    cfg = {
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": {
            "stdout": {
                "format": "[%(levelname)s]: %(asctime)s - %(message)s",
                "datefmt": "%x %X",
            },
            "stderr": {
                "format": red + "[%(levelname)s]: %(asctime)s - %(message)s" + endc,
                "datefmt": "%x %X",
            },
        },
        "filters": {
            "below_error": {
                "()": "landscape.src.utils.BelowErrorFilter",
            },
        },
        "handlers": {
            "stdout": {
                "class": "logging.StreamHandler",
                "level": "DEBUG",
                "formatter": "stdout",
                "filters": ["below_error"],
                "stream": "ext://sys.stdout",
            },
            "stderr": {
                "class": "logging.StreamHandler",
                "level": "ERROR",
                "formatter": "stderr",
                "stream": "ext://sys.stderr",
            },
        },
        "loggers": {
            "landscape": {
                "handlers": ["stdout", "stderr"],
                "level": level,
                "propagate": False,
            },
            "app": {
                "handlers": ["stdout", "stderr"],
                "level": level,
                "propagate": False,
            },
        },
    }

    dictConfig(cfg)


class BelowErrorFilter(logging.Filter):
    def filter(self, record: logging.LogRecord) -> bool:
        return record.levelno < logging.ERROR


def get_logger(name: str) -> logging.Logger:
    return logging.getLogger(name)
