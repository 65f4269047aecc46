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
Inter-slice resource partitioning with a learned QoS estimator and a per-cell
Lagrangian primal-dual optimizer, plus the simulator and experiment harness
used to evaluate it.
"""

try:
    from cloudpathlib import AnyPath

    AnyPath = AnyPath
except ImportError:
    pass

# flake8: noqa
from .__meta__ import (
    __version__,
)
