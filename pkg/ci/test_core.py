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
"""Script testing the domain core"""

import logging
import math

import numpy as np
import pytest

from netslice import ci, core
from netslice.core import (
    CellTopology,
    InfeasiblePartitionError,
    PartitionVector,
    QosOutcome,
    SatisfactionLevel,
    SliceSpec,
    ViolationClause,
)

ci.reduce_verbosity()


def test_slice_spec():
    """Test slice specs and cells"""
    spec = SliceSpec(1, 2.0, 10.0)
    ci.assert_val(spec.throughput_req, 2.0, "throughput requirement")

    for tput, delay in [(0.0, 10.0), (2.0, -1.0), (math.inf, 10.0), (2.0, math.nan)]:
        with pytest.raises(ValueError):
            SliceSpec(1, tput, delay)

    cell = CellTopology(0, 20.0, [spec, SliceSpec(4, 0.5, 50.0)])
    ci.assert_val(cell.slice_ids(), [1, 4], "slice ids")
    ci.assert_val(cell.spec_for(4).delay_req, 50.0, "spec_for")
    with pytest.raises(KeyError):
        cell.spec_for(3)

    with pytest.raises(ValueError):
        CellTopology(0, 20.0, [])
    with pytest.raises(ValueError):
        CellTopology(0, 20.0, [spec, spec])
    with pytest.raises(ValueError):
        CellTopology(0, 0.0, [spec])


def test_satisfaction():
    """Test the satisfaction level"""
    spec = SliceSpec(1, 2.0, 10.0)

    # Throughput-limited, delay-limited and saturated
    ci.assert_val(core.satisfaction(QosOutcome(1.0, 5.0), spec), SatisfactionLevel(0.5), "tput")
    ci.assert_val(core.satisfaction(QosOutcome(4.0, 20.0), spec).value, 0.5, "delay")
    ci.assert_val(core.satisfaction(QosOutcome(4.0, 5.0), spec).value, 1.0, "saturated")

    # Null delay never limits
    ci.assert_val(core.satisfaction(QosOutcome(1.0, 0.0), spec).value, 0.5, "null delay")
    ci.assert_val(core.satisfaction(QosOutcome(0.0, 0.0), spec).value, 0.0, "nothing served")

    values = core.satisfaction_values([0.5, 3.0], [10.0, 40.0], [1.0, 1.0], [20.0, 20.0])
    np.testing.assert_array_equal(values, [0.5, 0.5])

    with pytest.raises(ValueError):
        core.satisfaction_values([1.0], [1.0], [0.0], [1.0])
    with pytest.raises(ValueError):
        QosOutcome(-1.0, 1.0)
    with pytest.raises(ValueError):
        SatisfactionLevel(1.5)

    assert SatisfactionLevel(0.2) < SatisfactionLevel(0.3)


def test_utility():
    """Test the logarithmic utility"""
    ci.assert_val(core.log_utility([]), 0.0, "empty utility")
    assert abs(core.log_utility([1, 1, 1]) - 3 * math.log(2)) < 1e-12
    assert abs(core.log_utility([SatisfactionLevel(0.5)]) - math.log(1.5)) < 1e-12

    # Strictly increasing
    assert core.log_utility([0.5, 0.6]) > core.log_utility([0.5, 0.5])

    network = core.network_utility({0: [1.0, 0.0], 1: [1.0]})
    assert abs(network - 2 * math.log(2)) < 1e-12

    with pytest.raises(ValueError):
        core.log_utility([1.2])


def test_validate_partition():
    """Test the feasibility check"""
    assert core.validate_partition(PartitionVector([0.5, 0.5])).ok
    assert core.validate_partition([0.0, 0.0, 0.0]).ok
    assert core.validate_partition([1.0, 0.0]).ok
    assert core.validate_partition([0.5, 0.5 + 0.5e-9]).ok

    report = core.validate_partition(PartitionVector([0.6, 0.6]))
    assert not report
    ci.assert_val(report.violations[0].clause, ViolationClause.SUM_ABOVE_ONE, "sum clause")

    report = core.validate_partition([-0.1, 0.5])
    ci.assert_val(report.violations[0].clause, ViolationClause.NEGATIVE_SHARE, "negative")
    ci.assert_val(report.violations[0].index, 0, "negative index")

    report = core.validate_partition([1.5])
    clauses = [v.clause for v in report.violations]
    assert ViolationClause.SHARE_ABOVE_ONE in clauses
    assert ViolationClause.SUM_ABOVE_ONE in clauses

    report = core.validate_partition([np.nan, 0.1])
    ci.assert_val(report.violations[0].clause, ViolationClause.NOT_FINITE, "nan")

    report = core.validate_partition([0.5, 0.5], num_slices=3)
    ci.assert_val(report.violations[0].clause, ViolationClause.LENGTH_MISMATCH, "length")

    # Never raises
    assert not core.validate_partition("not a partition").ok
    assert "feasible" in str(core.validate_partition([0.2]))

    ci.assert_partition_feasible([0.25, 0.75], 2)
    with pytest.raises(AssertionError):
        ci.assert_partition_feasible([0.75, 0.75], 2)

    err = InfeasiblePartitionError(report, "Cell 0")
    assert isinstance(err, ValueError)
    assert str(err).startswith("Cell 0: infeasible partition")


def test_normalize_to_simplex(caplog):
    """Test the feasibility repair"""
    ci.assert_val(core.normalize_to_simplex([0.8, 0.8]), PartitionVector([0.5, 0.5]), "rescale")
    ci.assert_val(core.normalize_to_simplex([0.2, 0.3]).shares, (0.2, 0.3), "kept")

    with caplog.at_level(logging.WARNING):
        ci.assert_val(core.normalize_to_simplex([0.0, 0.0]), core.equal_shares(2), "zero")
    assert "equal split" in caplog.text

    rng = np.random.default_rng(0)
    for _ in range(100):
        raw = rng.uniform(0.0, 1.0, size=rng.integers(1, 6))
        ci.assert_partition_feasible(core.normalize_to_simplex(raw), raw.size)

    for raw in ([], [-0.1, 0.5], [np.inf]):
        with pytest.raises(ValueError):
            core.normalize_to_simplex(raw)


def test_partition_vector():
    """Test partition vectors"""
    part = PartitionVector(np.array([0.25, 0.75]))
    ci.assert_val(len(part), 2, "length")
    ci.assert_val(part.total, 1.0, "total")
    assert isinstance(part.shares[0], float)
    np.testing.assert_array_equal(part.as_array(), [0.25, 0.75])

    ci.assert_val(core.equal_shares(4).shares, (0.25,) * 4, "equal shares")
    with pytest.raises(ValueError):
        core.equal_shares(0)
