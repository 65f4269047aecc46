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
"""Shared type aliases"""

from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Any, Union

import numpy as np
from cloudpathlib import CloudPath

AnyPathType = Union[CloudPath, Path]
"""Any Path Type (derived from Pathlib and CloudpathLib)"""

AnyPathStrType = Union[str, CloudPath, Path]
"""Same as :code:`AnyPathType` but appened with :code:`str`"""

AnyFloatVector = Union[Sequence[float], np.ndarray]
"""Anything that can be read as a 1D vector of floats"""


def is_iterable(obj: Any, str_allowed: bool = False) -> bool:
    """
    Is the object an iterable?

    Args:
        obj (Any): Object to check
        str_allowed (bool): If set, strings are considered as iterable.

    Returns:
        bool: True if the object is iterable

    Examples:
        >>> is_iterable([1, 2, 4])
        True
        >>> is_iterable("lagrangian")
        False
    """
    if isinstance(obj, str) and not str_allowed:
        return False
    else:
        return isinstance(obj, Iterable)


def make_iterable(obj: Any, str_allowed: bool = False) -> list:
    """
    Convert the object to a list if this object is not iterable

    Args:
        obj (Any): Object to check
        str_allowed (bool): If set, strings are considered as iterable.

    Returns:
        list: Object as an iterable

    Examples:
        >>> make_iterable("traffic")
        ["traffic"]
        >>> make_iterable(["traffic", "oracle"])
        ["traffic", "oracle"]
    """
    if not is_iterable(obj, str_allowed):
        obj = [obj]

    return obj
