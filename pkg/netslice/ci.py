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
"""
CI tools
"""

import logging
import pprint
from typing import Any, Union

import numpy as np

from netslice import AnyPath, files
from netslice.core import PartitionVector, validate_partition
from netslice.logs import NS_NAME
from netslice.types import AnyFloatVector, AnyPathStrType

LOGGER = logging.getLogger(NS_NAME)


def assert_val(val_1: Any, val_2: Any, field: str) -> None:
    """
    Compare two values corresponding to a field

    Args:
        val_1 (Any): Value 1
        val_2 (Any): Value 2
        field (str): Field to compare
    """
    desc = f"{field} incoherent:\n{val_1} != {val_2}"

    # Manage None as value
    if val_2 is None or val_1 is None:
        assert val_1 is val_2, desc
    elif val_2 is np.nan or val_1 is np.nan:
        assert np.isnan(val_1) and np.isnan(val_2), desc
    else:
        try:
            assert val_1 == val_2, desc
        except ValueError:
            assert np.all(np.asarray(val_1) == np.asarray(val_2)), desc


def assert_files_equal(file_1: AnyPathStrType, file_2: AnyPathStrType) -> None:
    """
    Assert two files are byte-identical by hashing their content

    Args:
        file_1 (AnyPathStrType): Path to file 1
        file_2 (AnyPathStrType): Path to file 2
    """
    digest_1 = files.hash_file(file_1)
    digest_2 = files.hash_file(file_2)
    assert digest_1 == digest_2, f"{file_1} and {file_2} differ ({digest_1} != {digest_2})"


def assert_dir_equal(
    path_1: AnyPathStrType, path_2: AnyPathStrType, pattern: str = "*.csv"
) -> None:
    """
    Assert that two directories hold the same files (matching :code:`pattern`, recursively)
    with identical contents.

    Args:
        path_1 (AnyPathStrType): Directory 1
        path_2 (AnyPathStrType): Directory 2
        pattern (str): Glob pattern of the files to compare

    Example:
        >>> assert_dir_equal("runs/a", "runs/b")
        >>> # Raises AssertionError if sth goes wrong
    """
    path_1 = AnyPath(path_1)
    path_2 = AnyPath(path_2)
    assert path_1.is_dir(), f"{path_1} is not a directory!"
    assert path_2.is_dir(), f"{path_2} is not a directory!"

    files_1 = sorted(str(p.relative_to(path_1)) for p in path_1.rglob(pattern))
    files_2 = sorted(str(p.relative_to(path_2)) for p in path_2.rglob(pattern))

    for f1 in files_1:
        assert f1 in files_2, f"File missing!\n{f1} not in {pprint.pformat(files_2)}"
    for f2 in files_2:
        assert f2 in files_1, f"File missing!\n{f2} not in {pprint.pformat(files_1)}"

    for rel_path in files_1:
        assert_files_equal(path_1 / rel_path, path_2 / rel_path)


def assert_partition_feasible(
    partition: Union[PartitionVector, AnyFloatVector], num_slices: int = None
) -> None:
    """
    Assert that a partition belongs to the feasible set

    Args:
        partition (Union[PartitionVector, AnyFloatVector]): Partition to check
        num_slices (int): Expected number of shares
    """
    report = validate_partition(partition, num_slices)
    assert report.ok, f"{partition}: {report}"


def reduce_verbosity(other_loggers: list = None) -> None:
    """
    Reduce verbosity for other loggers (setting them to WARNING)

    Args:
        other_loggers (list): Other loggers to reduce verbosity
    """
    loggers = [
        "matplotlib",
        "matplotlib.font_manager",
        "PIL",
        "asyncio",
        "urllib3",
        "fsspec",
    ]
    if other_loggers:
        loggers += other_loggers

    # Unique logger names
    for logger in list(set(loggers)):
        logging.getLogger(logger).setLevel(logging.WARNING)
