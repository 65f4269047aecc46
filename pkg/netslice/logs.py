# Copyright 2025, netslice developers
# This file is part of the netslice project
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Logging tools"""

import logging
import logging.config
import os
from datetime import datetime
from typing import Union

LOGGING_FORMAT = "%(asctime)s - [%(levelname)s] - %(message)s"
NS_NAME = "netslice"

_COLORS = {
    "DEBUG": "white",
    "INFO": "green",
    "WARNING": "cyan",
    "ERROR": "red",
    "CRITICAL": "fg_bold_red,bg_white",
}


def init_logger(
    curr_logger: logging.Logger,
    log_lvl: int = logging.DEBUG,
    log_format: str = LOGGING_FORMAT,
) -> None:
    """
    Initialize a very basic stream logger, before the run directory is known.

    Args:
        curr_logger (logging.Logger): Logger to be initialize
        log_lvl (int): Logging level to be set
        log_format (str): Logger format to be set

    Example:
        >>> logger = logging.getLogger("netslice")
        >>> init_logger(logger, logging.INFO)
        >>> logger.info("Parsing configuration")
        2025-03-02 16:57:35 - [INFO] - Parsing configuration
    """
    level = logging.getLevelName(log_lvl)
    logging.config.dictConfig(
        {
            "version": 1,
            "disable_existing_loggers": False,
            "formatters": {"fmt": {"format": log_format}},
            "handlers": {
                "stream": {
                    "level": level,
                    "class": "logging.StreamHandler",
                    "formatter": "fmt",
                },
            },
            "loggers": {
                curr_logger.name: {
                    "handlers": ["stream"],
                    "propagate": False,
                    "level": level,
                }
            },
        }
    )


def _stream_formatter(logger: logging.Logger) -> dict:
    """Colored formatter if colorlog is available, plain one otherwise"""
    try:
        # 'colorlog.ColoredFormatter' imported but unused
        from colorlog import ColoredFormatter  # noqa: F401
    except ModuleNotFoundError:
        logger.debug("Impossible to import colorlog, will log without colors.")
        return {"format": LOGGING_FORMAT}

    return {
        "()": "colorlog.ColoredFormatter",
        "format": "%(asctime)s - [%(log_color)s%(levelname)s%(reset)s] - %(message_log_color)s%(message)s",
        "datefmt": "%Y-%m-%d %H:%M:%S",
        "reset": True,
        "log_colors": _COLORS,
        "secondary_log_colors": {
            "message": {**_COLORS, "CRITICAL": "bold_red"},
        },
        "style": "%",
    }


# pylint: disable=R0913
# Too many arguments (6/5) (too-many-arguments)
def create_logger(
    logger: logging.Logger,
    file_log_level: int = logging.DEBUG,
    stream_log_level: int = logging.INFO,
    output_folder: str = None,
    name: str = None,
    other_loggers_names: Union[str, list] = None,
) -> Union[str, None]:
    """
    Create file and stream handlers at the wanted levels for the given logger.

    - If :code:`colorlog` is installed, the stream is colored.
    - Without :code:`output_folder`, no file handler is created.

    Other loggers (i.e. :code:`py.warnings`) share the same handlers.

    Args:
        logger (logging.Logger): Logger to create
        file_log_level (int): File log level
        stream_log_level (int): Stream log level
        output_folder (str): Output folder (usually the run directory)
        name (str): Name of the log file, prefixed with the date and suffixed with :code:`_log.txt`
        other_loggers_names (Union[str, list]): Other existing loggers to manage

    Returns:
        Union[str, None]: Path of the log file, if any

    Example:
        >>> logger = logging.getLogger("netslice")
        >>> create_logger(logger, logging.DEBUG, logging.INFO, "runs/desk", "netslice")
        'runs/desk/250302_165735_netslice_log.txt'
    """
    if other_loggers_names is None:
        other_loggers_names = []
    elif not isinstance(other_loggers_names, list):
        other_loggers_names = [other_loggers_names]

    handlers = {
        "stream": {
            "level": logging.getLevelName(stream_log_level),
            "class": "logging.StreamHandler",
            "formatter": "stream_fmter",
        },
    }

    log_path = None
    if output_folder:
        date = datetime.today().replace(microsecond=0).strftime("%y%m%d_%H%M%S")
        log_path = os.path.join(
            str(output_folder), f"{date}{f'_{name}' if name else ''}_log.txt"
        )
        handlers["file"] = {
            "level": logging.getLevelName(file_log_level),
            "class": "logging.FileHandler",
            "filename": log_path,
            "formatter": "file_fmter",
        }

    logger_cfg = {
        "handlers": list(handlers.keys()),
        "propagate": False,
        "level": "DEBUG",
    }
    logging.config.dictConfig(
        {
            "version": 1,
            "disable_existing_loggers": False,
            "formatters": {
                "stream_fmter": _stream_formatter(logger),
                "file_fmter": {"format": LOGGING_FORMAT},
            },
            "handlers": handlers,
            "loggers": {
                log_name: dict(logger_cfg)
                for log_name in [logger.name] + other_loggers_names
            },
        }
    )

    return log_path


def shutdown_logger(logger: logging.Logger) -> None:
    """
    Shutdown logger (to release the log file of a run directory for example)

    Args:
        logger (logging.Logger): Logger to shutdown
    """
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.flush()
        handler.close()


def reset_logging() -> None:
    """
    Reset every known logger to its default state, closing all handlers.
    """
    manager = logging.root.manager
    manager.disabled = logging.NOTSET
    for logger in manager.loggerDict.values():
        if isinstance(logger, logging.Logger):
            logger.setLevel(logging.NOTSET)
            logger.propagate = True
            logger.disabled = False
            logger.filters.clear()
            for handler in logger.handlers.copy():
                try:
                    handler.acquire()
                    handler.flush()
                    handler.close()
                except (OSError, ValueError):
                    pass
                finally:
                    handler.release()
                logger.removeHandler(handler)
