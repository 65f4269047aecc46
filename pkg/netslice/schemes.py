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
Allocation schemes: the Lagrangian optimizer and the comparison baselines
(traffic-proportional, equal split and brute-force grid oracle).
"""

import logging
import math
from abc import ABC, abstractmethod
from enum import unique
from typing import Optional

import numpy as np

from netslice import AnyPath
from netslice.core import CellTopology, PartitionVector, equal_shares
from netslice.dataset import observation_features
from netslice.logs import NS_NAME
from netslice.misc import ListEnum
from netslice.optimizer import (
    SliceUtilityModel,
    SolverParams,
    default_action,
    solve_cell,
    write_trace_csv,
)
from netslice.types import AnyFloatVector, AnyPathStrType

LOGGER = logging.getLogger(NS_NAME)

MAX_GRID_POINTS = 2_000_000
"""Default enumeration budget of the grid oracle"""

GRID_TOL = 1e-9


@unique
class SchemeName(ListEnum):
    """Available allocation schemes"""

    LAGRANGIAN = "lagrangian"
    TRAFFIC = "traffic"
    EQUAL = "equal"
    ORACLE = "oracle"


def observation_matrix(histories: list) -> np.ndarray:
    """
    Stack the observations of the active slices of a cell.

    Args:
        histories (list): :py:class:`netslice.netsim.SliceHistory` list, in canonical order

    Returns:
        np.ndarray: (S, 2H + 2) observations
    """
    return np.stack([observation_features(h.users, h.cqi, h.spec) for h in histories])


def traffic_proportional(demands: AnyFloatVector) -> PartitionVector:
    """
    Shares proportional to the offered load, equal split if there is no traffic at all.

    Args:
        demands (AnyFloatVector): Offered load per slice, nonnegative

    Returns:
        PartitionVector: Partition

    Example:
        >>> traffic_proportional([2, 1, 1])
        PartitionVector(shares=(0.5, 0.25, 0.25))
    """
    demands = np.asarray(demands, dtype=np.float64).ravel()
    if demands.size == 0:
        raise ValueError("At least one demand is needed")
    if np.any(~np.isfinite(demands)) or np.any(demands < 0):
        raise ValueError(f"Demands should be finite and nonnegative: {demands}")

    total = math.fsum(demands)
    if total == 0.0:
        return equal_shares(demands.size)
    return PartitionVector(demands / total)


def equal_split(num_slices: int) -> PartitionVector:
    """
    Equal split :code:`1 / n`.

    Example:
        >>> equal_split(2)
        PartitionVector(shares=(0.5, 0.5))
    """
    return equal_shares(num_slices)


def _grid_size(grid_step: float) -> int:
    if not 0.0 < grid_step <= 1.0:
        raise ValueError(f"Grid step should be in (0, 1], not {grid_step}")
    num_steps = int(round(1.0 / grid_step))
    if abs(num_steps * grid_step - 1.0) > GRID_TOL:
        raise ValueError(f"Grid step {grid_step} does not divide 1")
    return num_steps


def simplex_grid(
    num_slices: int, grid_step: float, max_points: int = MAX_GRID_POINTS
) -> np.ndarray:
    """
    Every point of the feasible set with coordinates in {0, step, ..., 1}, in lexicographic order.

    Args:
        num_slices (int): Number of slices
        grid_step (float): Grid step, dividing 1
        max_points (int): Enumeration budget

    Returns:
        np.ndarray: (n_points, num_slices) integer grid coordinates (multiply by the step for shares)
    """
    if num_slices < 1:
        raise ValueError(f"At least one slice is needed, not {num_slices}")
    num_steps = _grid_size(grid_step)
    num_points = math.comb(num_steps + num_slices, num_slices)
    if num_points > max_points:
        raise ValueError(
            f"{num_points} grid points for {num_slices} slices at step {grid_step} exceed "
            f"the enumeration budget ({max_points}): use a coarser grid"
        )

    points = np.zeros((1, 0), dtype=np.int64)
    remaining = np.array([num_steps])
    for _ in range(num_slices):
        counts = remaining + 1
        parents = np.repeat(np.arange(points.shape[0]), counts)
        offsets = np.repeat(np.cumsum(counts) - counts, counts)
        levels = np.arange(parents.size) - offsets
        points = np.column_stack([points[parents], levels])
        remaining = remaining[parents] - levels

    return points


def oracle_grid(
    model: SliceUtilityModel,
    observations: np.ndarray,
    grid_step: float = 0.05,
    max_points: int = MAX_GRID_POINTS,
) -> PartitionVector:
    """
    Brute-force maximization of the learned utility over the discretized feasible set.

    The per-slice utilities of every grid level are computed once, so the
    enumeration only sums table entries. Ties go to the first point in lexicographic order.

    Args:
        model (SliceUtilityModel): Slice model
        observations (np.ndarray): (S, 2H + 2) observations
        grid_step (float): Grid step, dividing 1
        max_points (int): Enumeration budget

    Returns:
        PartitionVector: Best grid point
    """
    observations = np.asarray(observations, dtype=np.float64)
    if observations.ndim != 2 or observations.shape[0] < 1:
        raise ValueError(f"One observation row per slice is needed, not {observations.shape}")
    num_slices = observations.shape[0]
    num_steps = _grid_size(grid_step)
    points = simplex_grid(num_slices, grid_step, max_points)

    levels = np.arange(num_steps + 1) / num_steps
    values, _ = model.batch_forward_and_grad(
        np.tile(levels, num_slices), np.repeat(observations, num_steps + 1, axis=0)
    )
    table = np.log1p(values).reshape(num_slices, num_steps + 1)

    utilities = table[np.arange(num_slices), points].sum(axis=1)
    best = int(np.argmax(utilities))
    return PartitionVector(points[best] / num_steps)


class Scheme(ABC):
    """Allocation scheme: one partition per cell and per slot"""

    name: SchemeName

    @abstractmethod
    def allocate(
        self,
        t: int,
        cell: CellTopology,
        histories: list,
        demands: np.ndarray,
        previous: Optional[PartitionVector] = None,
    ) -> PartitionVector:
        """
        Partition of a cell for slot :code:`t`.

        Args:
            t (int): Slot
            cell (CellTopology): Cell and its active slices
            histories (list): Observable histories of the active slices
            demands (np.ndarray): Offered load of the active slices over the slot
            previous (Optional[PartitionVector]): Partition of the previous slot, if the slice set did not change

        Returns:
            PartitionVector: Feasible partition
        """
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"{type(self).__name__}()"


class TrafficScheme(Scheme):
    """Shares proportional to the exact offered load"""

    name = SchemeName.TRAFFIC

    def allocate(self, t, cell, histories, demands, previous=None) -> PartitionVector:
        return traffic_proportional(demands)


class EqualScheme(Scheme):
    name = SchemeName.EQUAL

    def allocate(self, t, cell, histories, demands, previous=None) -> PartitionVector:
        return equal_split(len(cell.active_slices))


class OracleScheme(Scheme):
    """Grid oracle over the learned model, searched again at every slot"""

    name = SchemeName.ORACLE

    def __init__(
        self,
        model: SliceUtilityModel,
        grid_step: float = 0.05,
        max_points: int = MAX_GRID_POINTS,
    ):
        self.model = model
        self.grid_step = grid_step
        self.max_points = max_points

    def allocate(self, t, cell, histories, demands, previous=None) -> PartitionVector:
        return oracle_grid(
            self.model, observation_matrix(histories), self.grid_step, self.max_points
        )


class LagrangianScheme(Scheme):
    """
    Multi-start primal-dual optimizer over the learned model.

    Each cell is warm-started from its previous partition and multiplier,
    and restarted from the default action when its slice set changes.
    """

    name = SchemeName.LAGRANGIAN

    def __init__(
        self,
        model: SliceUtilityModel,
        params: SolverParams = None,
        trace_dir: AnyPathStrType = None,
    ):
        self.model = model
        self.params = params or SolverParams()
        self.trace_dir = None if trace_dir is None else AnyPath(trace_dir)
        self._warm = {}
        self.last_results = {}

    def allocate(self, t, cell, histories, demands, previous=None) -> PartitionVector:
        slice_ids = tuple(cell.slice_ids())
        warm = self._warm.get(cell.cell_id)

        if previous is not None and warm is not None and warm[0] == slice_ids:
            x_init, lambda_init = previous, warm[1]
        else:
            x_init, lambda_init = default_action(len(slice_ids)), self.params.lambda_init

        result = solve_cell(
            self.model,
            observation_matrix(histories),
            x_init,
            self.params,
            lambda_init=lambda_init,
            rng=np.random.default_rng([self.params.seed, cell.cell_id, t]),
            record_trace=self.trace_dir is not None,
            context=f"Cell {cell.cell_id} at t={t}",
        )
        if self.trace_dir is not None:
            self.trace_dir.mkdir(parents=True, exist_ok=True)
            write_trace_csv(result, self.trace_dir / f"trace_c{cell.cell_id}_t{t}.csv")

        self._warm[cell.cell_id] = (slice_ids, result.lambda_final)
        self.last_results[cell.cell_id] = result
        return result.partition


def make_scheme(
    name,
    model: SliceUtilityModel = None,
    solver_params: SolverParams = None,
    grid_step: float = 0.05,
    max_points: int = MAX_GRID_POINTS,
    trace_dir: AnyPathStrType = None,
) -> Scheme:
    """
    Create a scheme from its name.

    Args:
        name (Union[str, SchemeName]): Scheme name
        model (SliceUtilityModel): Trained model, needed by the lagrangian and oracle schemes
        solver_params (SolverParams): Parameters of the lagrangian scheme
        grid_step (float): Grid step of the oracle
        max_points (int): Enumeration budget of the oracle
        trace_dir (AnyPathStrType): Where to dump the optimizer traces, if wanted

    Returns:
        Scheme: Scheme
    """
    name = SchemeName.from_value(name)
    if name in (SchemeName.LAGRANGIAN, SchemeName.ORACLE) and model is None:
        raise ValueError(f"The {name.value} scheme needs a trained model")

    if name == SchemeName.LAGRANGIAN:
        return LagrangianScheme(model, solver_params, trace_dir)
    if name == SchemeName.ORACLE:
        return OracleScheme(model, grid_step, max_points)
    if name == SchemeName.TRAFFIC:
        return TrafficScheme()
    return EqualScheme()
