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
"""Script testing the types"""

import numpy as np

from netslice import AnyPath, ci
from netslice.types import is_iterable, make_iterable

ci.reduce_verbosity()


def test_is_iterable():
    """Test is_iterable"""
    assert is_iterable((1, 2, 4))
    assert is_iterable([1, 2, 4])
    assert is_iterable(np.array([0.5, 0.5]))
    assert not is_iterable("traffic")
    assert is_iterable("traffic", str_allowed=True)
    assert not is_iterable(1)
    assert not is_iterable(AnyPath("runs/desk"))


def test_make_iterable():
    """Test make_iterable"""
    ci.assert_val(make_iterable("traffic"), ["traffic"], "string")
    ci.assert_val(make_iterable(["traffic", "oracle"]), ["traffic", "oracle"], "list")
    ci.assert_val(make_iterable((1, 2, 4)), (1, 2, 4), "tuple")
    ci.assert_val(make_iterable(3), [3], "int")
