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
"""Script testing the miscellaneous functions"""

import pytest

from ci.script_utils import KAPUT_KWARGS
from netslice import ci, misc
from netslice.dataset import Provenance
from netslice.schemes import SchemeName

ci.reduce_verbosity()


def test_enum():
    """Test ListEnum"""
    ci.assert_val(
        Provenance.list_values(), ["raw", "augmented_rule1", "augmented_rule2"], "Values"
    )
    ci.assert_val(Provenance.list_names(), ["RAW", "RULE1", "RULE2"], "Names")
    ci.assert_val(Provenance.from_value("raw"), Provenance.RAW, "From string value")
    ci.assert_val(Provenance.from_value(Provenance.RULE1), Provenance.RULE1, "From enum value")

    with pytest.raises(ValueError):
        Provenance.from_value("augmented_rule3")

    ci.assert_val(
        SchemeName.convert_from(["traffic", "ORACLE", SchemeName.EQUAL]),
        [SchemeName.TRAFFIC, SchemeName.ORACLE, SchemeName.EQUAL],
        "convert_from",
    )
    ci.assert_val(SchemeName.convert_from("lagrangian"), [SchemeName.LAGRANGIAN], "convert_from str")

    with pytest.raises(TypeError):
        SchemeName.convert_from(["drl"])


def test_unique():
    """Test unique function"""
    non_unique = ["oracle", "traffic", "oracle", "equal", "traffic"]
    ci.assert_val(misc.unique(non_unique), ["oracle", "traffic", "equal"], "Unique")


def test_keys():
    """Test the dictionary key checks"""
    data = {"version": 1, "weights": []}
    misc.check_mandatory_keys(data, ["version", "weights"])
    with pytest.raises(ValueError, match="biases"):
        misc.check_mandatory_keys(data, ["version", "biases"])

    ci.assert_val(misc.unknown_keys({**data, **KAPUT_KWARGS}, list(data)), ["fdezf"], "unknown keys")
    ci.assert_val(misc.unknown_keys(data, list(data)), [], "no unknown keys")
