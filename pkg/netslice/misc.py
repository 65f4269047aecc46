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
"""Miscellaneous Tools"""

import logging
import pprint
from enum import Enum, unique
from typing import Any, Union

from netslice.logs import NS_NAME

LOGGER = logging.getLogger(NS_NAME)


@unique
class ListEnum(Enum):
    """
    List Enum (enum with function listing names and values)

    Example:
        >>> @unique
        >>> class Provenance(ListEnum):
        >>>     RAW = "raw"
        >>>     RULE1 = "augmented_rule1"
        >>>     RULE2 = "augmented_rule2"
    """

    @classmethod
    def list_values(cls) -> list:
        """
        Get the value list of this enum

        Example:
            >>> Provenance.list_values()
            ["raw", "augmented_rule1", "augmented_rule2"]
        """
        return [c.value for c in cls]

    @classmethod
    def list_names(cls) -> list:
        """
        Get the name list of this enum

        Example:
            >>> Provenance.list_names()
            ["RAW", "RULE1", "RULE2"]
        """
        return [c.name for c in cls]

    @classmethod
    def from_value(cls, val: Any) -> "ListEnum":
        """
        Get the enum class from its value

        Args:
            val (Any): Value of the Enum

        Returns:
            ListEnum: Enum with value

        Example:
            >>> Provenance.from_value("raw")
            <Provenance.RAW: 'raw'>
        """
        if isinstance(val, cls):
            val = val.value
        try:
            return next(enum for enum in cls if enum.value == val)
        except StopIteration as ex:
            raise ValueError(f"Non existing {val} in {cls.list_values()}") from ex

    @classmethod
    def convert_from(cls, to_convert: Union[list, str]) -> list:
        """
        Convert from a list or a string (values or names) to enum instances

        Args:
            to_convert (Union[list, str]): List or string to convert into enum instances

        Returns:
            list: Converted list

        Example:
            >>> SchemeName.convert_from(["traffic", "ORACLE"])
            [<SchemeName.TRAFFIC: 'traffic'>, <SchemeName.ORACLE: 'oracle'>]
        """
        if not isinstance(to_convert, list):
            to_convert = [to_convert]

        enums = []
        for tc in to_convert:
            if isinstance(tc, cls):
                enums.append(tc)
            elif tc in cls.list_values():
                enums.append(cls.from_value(tc))
            elif tc in cls.list_names():
                enums.append(getattr(cls, tc))
            else:
                raise TypeError(
                    f"Invalid name {tc}, "
                    f"should be chosen among {cls.list_values()} or {cls.list_names()}"
                )

        return enums


def unique(sequence: list) -> list:
    """
    Keep only unique values from a list, preserving the order of the sequence.

    Args:
        sequence (list): List from which to keep only the unique values

    Returns:
        list: List containing only unique values

    Examples:
        >>> unique([1, 2, 4, 1, 2, 3, 4])
        [1, 2, 4, 3]
    """
    return list(dict.fromkeys(sequence))


def check_mandatory_keys(data_dict: dict, mandatory_keys: list) -> None:
    """
    Check all mandatory keys of a dictionary (non nested).

    Args:
        data_dict (dict): Data dictionary to be checked
        mandatory_keys (list[str]): List of mandatory keys

    Example:
        >>> check_mandatory_keys({"version": 1}, ["version", "weights"])
        Traceback (most recent call last):
        ValueError: Missing mandatory key 'weights' among {'version': 1}
    """
    for mandatory_key in mandatory_keys:
        if mandatory_key not in data_dict:
            raise ValueError(
                f"Missing mandatory key '{mandatory_key}' among {pprint.pformat(data_dict, depth=1)}"
            )


def unknown_keys(data_dict: dict, known_keys: list) -> list:
    """
    List the keys of a dictionary that are not among the known ones.

    Args:
        data_dict (dict): Dictionary to check
        known_keys (list): Accepted keys

    Returns:
        list: Unknown keys, in the dictionary order

    Example:
        >>> unknown_keys({"seed": 1, "sede": 2}, ["seed"])
        ["sede"]
    """
    return [k for k in data_dict if k not in known_keys]
