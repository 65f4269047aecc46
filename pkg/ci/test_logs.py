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
"""Script testing the logs"""

import logging
import os
import sys

import pytest

from netslice import ci, logs
from netslice.logs import LOGGING_FORMAT

ci.reduce_verbosity()


def test_log(tmp_path):
    """Testing log functions"""

    # -- INIT LOGGER --
    log_lvl = logging.WARNING

    logger = logging.getLogger("Test_logger")
    logger.handlers.append(logging.StreamHandler())  # Handler to remove
    logs.init_logger(logger, log_lvl=log_lvl, log_format=LOGGING_FORMAT)
    logs.reset_logging()
    assert logger.handlers == []
    assert logger.filters == []
    assert logger.level == 0

    # Re init logger
    logs.init_logger(logger, log_lvl=log_lvl, log_format=LOGGING_FORMAT)

    # Test init
    assert logger.level == log_lvl
    assert logger.handlers[0].formatter._fmt == LOGGING_FORMAT

    # -- CREATE LOGGER --
    logger_test = logging.getLogger("test")
    file_log_lvl = logging.DEBUG
    stream_log_lvl = logging.INFO
    log_path = logs.create_logger(
        logger,
        file_log_level=file_log_lvl,
        stream_log_level=stream_log_lvl,
        output_folder=str(tmp_path),
        name="run",
        other_loggers_names=["test"],
    )

    logger.info("Hey you!")

    # Test create
    assert log_path.endswith("_run_log.txt")
    assert len(logger.handlers) == 2  # File and stream
    assert len(logger_test.handlers) == 2  # File and stream
    for handler in logger.handlers + logger_test.handlers:
        if isinstance(handler, logging.FileHandler):
            assert handler.level == file_log_lvl
            assert os.path.isfile(handler.baseFilename)
        elif isinstance(handler, logging.StreamHandler):
            assert handler.level == stream_log_lvl
        else:
            raise TypeError(f"Invalid handler type: {handler.__class__}")

    logs.shutdown_logger(logger)
    logs.shutdown_logger(logger_test)
    with open(log_path) as log_file:
        assert "Hey you!" in log_file.read()

    # Stream only
    logs.reset_logging()
    ci.assert_val(logs.create_logger(logger, stream_log_level=stream_log_lvl, other_loggers_names="test"), None, "no file")
    assert len(logger.handlers) == 1
    assert len(logger_test.handlers) == 1

    logs.reset_logging()
    ci.reduce_verbosity()


def test_colored_log():
    """Colors only if colorlog is installed"""
    clog = pytest.importorskip("colorlog")
    logger = logging.getLogger("Test_logger")

    logs.create_logger(logger, stream_log_level=logging.DEBUG)
    assert isinstance(logger.handlers[0].formatter, clog.ColoredFormatter)

    # Without color
    colorlog_sys = sys.modules["colorlog"]
    sys.modules["colorlog"] = None
    try:
        logs.create_logger(logger, stream_log_level=logging.DEBUG)
        logger.info("Urk!")
        for handler in logger.handlers:
            assert not isinstance(handler.formatter, clog.ColoredFormatter)
    finally:
        sys.modules["colorlog"] = colorlog_sys

    logs.reset_logging()
    ci.reduce_verbosity()
