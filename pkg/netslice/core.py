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
Domain types shared by every module and the closed-form QoS / utility math.

- the QoS satisfaction level of a slice: :code:`min(tput / tput_req, delay_req / delay, 1)`
- the logarithmic utility: :code:`sum(ln(r + 1))`
- the feasible set of a cell partition: shares in [0, 1] summing to at most 1

Slice order inside a cell is the declaration order of its active slices, and is
the alignment of every per-slice vector (shares, observations, gradients).
"""

import logging
import math
from dataclasses import dataclass, field
from enum import unique
from typing import Optional, Union

import numpy as np

from netslice.logs import NS_NAME
from netslice.misc import ListEnum
from netslice.types import AnyFloatVector

LOGGER = logging.getLogger(NS_NAME)

PARTITION_TOL = 1e-9
"""Absolute tolerance on the sum of the shares of a partition"""


@dataclass(frozen=True)
class SliceSpec:
    """Identity of a slice and its QoS requirements"""

    slice_id: int
    """Slice (service type) identifier"""

    throughput_req: float
    """Throughput requirement (Mbit/s)"""

    delay_req: float
    """Delay requirement (ms)"""

    def __post_init__(self):
        for name in ("throughput_req", "delay_req"):
            val = getattr(self, name)
            if not math.isfinite(val) or val <= 0:
                raise ValueError(
                    f"Slice {self.slice_id}: '{name}' should be a finite positive value, not {val}"
                )


@dataclass(frozen=True)
class CellTopology:
    """A cell, its bandwidth and its ordered set of active slices"""

    cell_id: int
    bandwidth: float
    """Bandwidth (MHz)"""

    active_slices: tuple = field(default_factory=tuple)
    """Ordered :py:class:`SliceSpec` tuple"""

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ValueError(
                f"Cell {self.cell_id}: bandwidth should be positive, not {self.bandwidth}"
            )
        object.__setattr__(self, "active_slices", tuple(self.active_slices))
        if not self.active_slices:
            raise ValueError(f"Cell {self.cell_id} has no active slice")
        ids = self.slice_ids()
        if len(set(ids)) != len(ids):
            raise ValueError(f"Cell {self.cell_id}: duplicated slice ids in {ids}")

    def slice_ids(self) -> list:
        """Active slice ids, in canonical order"""
        return [spec.slice_id for spec in self.active_slices]

    def spec_for(self, slice_id: int) -> SliceSpec:
        """Get the spec of an active slice"""
        for spec in self.active_slices:
            if spec.slice_id == slice_id:
                return spec
        raise KeyError(f"Slice {slice_id} is not active in cell {self.cell_id}")


@dataclass(frozen=True)
class PartitionVector:
    """
    Per-cell resource shares, aligned with the active slices of the cell.

    Built without checks: use :py:func:`validate_partition` to check feasibility.
    """

    shares: tuple

    def __post_init__(self):
        object.__setattr__(self, "shares", tuple(float(s) for s in self.shares))

    def __len__(self) -> int:
        return len(self.shares)

    def as_array(self) -> np.ndarray:
        """Shares as a float64 array"""
        return np.array(self.shares, dtype=np.float64)

    @property
    def total(self) -> float:
        """Sum of the shares"""
        return math.fsum(self.shares)


@dataclass(frozen=True)
class QosOutcome:
    """Achieved QoS of a slice over one slot"""

    throughput: float
    """Throughput (Mbit/s)"""

    delay: float
    """Delay (ms), 0 is accepted as a degenerate value"""

    def __post_init__(self):
        if not self.throughput >= 0 or not math.isfinite(self.throughput):
            raise ValueError(f"Invalid throughput: {self.throughput}")
        if not self.delay >= 0:
            raise ValueError(f"Invalid delay: {self.delay}")


@dataclass(frozen=True, order=True)
class SatisfactionLevel:
    """QoS satisfaction level, in [0, 1]"""

    value: float

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"Satisfaction level should be in [0, 1], not {self.value}")

    def __float__(self) -> float:
        return float(self.value)


@unique
class ViolationClause(ListEnum):
    """Feasibility clause violated by a partition"""

    NOT_FINITE = "not_finite"
    NEGATIVE_SHARE = "negative_share"
    SHARE_ABOVE_ONE = "share_above_one"
    SUM_ABOVE_ONE = "sum_above_one"
    LENGTH_MISMATCH = "length_mismatch"


@dataclass(frozen=True)
class PartitionViolation:
    clause: ViolationClause
    value: float
    index: Optional[int] = None

    def __str__(self) -> str:
        where = "" if self.index is None else f" at index {self.index}"
        return f"{self.clause.value}{where} ({self.value!r})"


@dataclass(frozen=True)
class PartitionReport:
    """Result of :py:func:`validate_partition`"""

    violations: tuple = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def __str__(self) -> str:
        if self.ok:
            return "feasible partition"
        return "infeasible partition: " + ", ".join(str(v) for v in self.violations)


class InfeasiblePartitionError(ValueError):
    """A partition outside of the feasible set has been submitted"""

    def __init__(self, report: PartitionReport, context: str = ""):
        self.report = report
        super().__init__(f"{context}{': ' if context else ''}{report}")


def satisfaction_values(
    throughput: AnyFloatVector,
    delay: AnyFloatVector,
    throughput_req: AnyFloatVector,
    delay_req: AnyFloatVector,
) -> np.ndarray:
    """
    Vectorized QoS satisfaction level :code:`min(tput / tput_req, delay_req / delay, 1)`.

    A null delay gives an infinite delay ratio, hence never limits the level.

    Args:
        throughput (AnyFloatVector): Achieved throughputs (Mbit/s)
        delay (AnyFloatVector): Achieved delays (ms)
        throughput_req (AnyFloatVector): Throughput requirements (Mbit/s)
        delay_req (AnyFloatVector): Delay requirements (ms)

    Returns:
        np.ndarray: Satisfaction levels, in [0, 1]
    """
    throughput, delay, throughput_req, delay_req = np.broadcast_arrays(
        *(np.asarray(a, dtype=np.float64) for a in (throughput, delay, throughput_req, delay_req))
    )
    if np.any(~(throughput_req > 0)) or np.any(~(delay_req > 0)):
        raise ValueError("QoS requirements should be strictly positive")

    positive = delay > 0
    delay_ratio = np.full(delay.shape, np.inf)
    np.divide(delay_req, delay, out=delay_ratio, where=positive)

    return np.minimum(np.minimum(throughput / throughput_req, delay_ratio), 1.0)


def satisfaction(outcome: QosOutcome, spec: SliceSpec) -> SatisfactionLevel:
    """
    QoS satisfaction level of a slice.

    Args:
        outcome (QosOutcome): Achieved throughput and delay
        spec (SliceSpec): Slice requirements

    Returns:
        SatisfactionLevel: Satisfaction level

    Example:
        >>> satisfaction(QosOutcome(1.0, 5.0), SliceSpec(1, 2.0, 10.0))
        SatisfactionLevel(value=0.5)
    """
    value = satisfaction_values(
        outcome.throughput, outcome.delay, spec.throughput_req, spec.delay_req
    )
    return SatisfactionLevel(float(value))


def log_utility(levels: list) -> float:
    """
    Logarithmic utility :code:`sum(ln(r + 1))` (natural logarithm).

    Args:
        levels (list): :py:class:`SatisfactionLevel` or floats in [0, 1]

    Returns:
        float: Utility

    Example:
        >>> log_utility([1, 1, 1])
        2.0794415416798357
    """
    values = np.array([float(lvl) for lvl in levels], dtype=np.float64)
    if np.any(~((values >= 0.0) & (values <= 1.0))):
        raise ValueError(f"Satisfaction levels should be in [0, 1]: {values}")
    return float(np.sum(np.log1p(values)))


def network_utility(levels_per_cell: dict) -> float:
    """
    Network-wide utility: the logarithmic utility summed over all cells and slices.

    Args:
        levels_per_cell (dict): Cell id -> list of satisfaction levels

    Returns:
        float: Utility
    """
    return math.fsum(log_utility(levels) for levels in levels_per_cell.values())


def validate_partition(
    partition: Union[PartitionVector, AnyFloatVector], num_slices: int = None
) -> PartitionReport:
    """
    Check that a partition belongs to the feasible set: every share in [0, 1]
    and a sum lower than :code:`1 + 1e-9`. Never raises.

    Args:
        partition (Union[PartitionVector, AnyFloatVector]): Partition to check
        num_slices (int): Expected number of shares, if known

    Returns:
        PartitionReport: Report, :code:`ok` if feasible

    Example:
        >>> validate_partition(PartitionVector([0.6, 0.6])).ok
        False
    """
    try:
        shares = (
            partition.as_array()
            if isinstance(partition, PartitionVector)
            else np.asarray(partition, dtype=np.float64).ravel()
        )
    except (TypeError, ValueError):
        return PartitionReport((PartitionViolation(ViolationClause.NOT_FINITE, np.nan),))

    violations = []
    if num_slices is not None and shares.size != num_slices:
        violations.append(
            PartitionViolation(ViolationClause.LENGTH_MISMATCH, float(shares.size))
        )

    for idx, share in enumerate(shares):
        if not math.isfinite(share):
            violations.append(PartitionViolation(ViolationClause.NOT_FINITE, share, idx))
        elif share < 0.0:
            violations.append(PartitionViolation(ViolationClause.NEGATIVE_SHARE, share, idx))
        elif share > 1.0:
            violations.append(PartitionViolation(ViolationClause.SHARE_ABOVE_ONE, share, idx))

    if np.all(np.isfinite(shares)):
        total = math.fsum(shares)
        if total > 1.0 + PARTITION_TOL:
            violations.append(PartitionViolation(ViolationClause.SUM_ABOVE_ONE, total))

    return PartitionReport(tuple(violations))


def equal_shares(num_slices: int) -> PartitionVector:
    """
    Equal split :code:`1 / n` over :code:`n` slices.

    Args:
        num_slices (int): Number of slices

    Returns:
        PartitionVector: Equal split
    """
    if num_slices < 1:
        raise ValueError(f"At least one slice is needed, not {num_slices}")
    return PartitionVector([1.0 / num_slices] * num_slices)


def normalize_to_simplex(raw: AnyFloatVector) -> PartitionVector:
    """
    Feasibility repair: rescale nonnegative shares by :code:`1 / sum` if they sum above 1.

    An all-zero vector falls back to the equal split.

    Args:
        raw (AnyFloatVector): Nonnegative shares

    Returns:
        PartitionVector: Feasible partition

    Example:
        >>> normalize_to_simplex([0.8, 0.8])
        PartitionVector(shares=(0.5, 0.5))
    """
    values = np.asarray(raw, dtype=np.float64).ravel()
    if values.size == 0:
        raise ValueError("Cannot normalize an empty vector")
    if np.any(~np.isfinite(values)) or np.any(values < 0):
        raise ValueError(f"Shares should be finite and nonnegative: {values}")

    total = math.fsum(values)
    if total == 0.0:
        LOGGER.warning(
            "All-zero shares, falling back to the equal split over %d slices",
            values.size,
        )
        return equal_shares(values.size)
    if total <= 1.0:
        return PartitionVector(values)
    return PartitionVector(values / total)
