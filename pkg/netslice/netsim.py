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
Discrete-time synthetic multi-cell network, used as ground truth.

For each (cell, slice) and time slot:

- users are drawn from a Poisson law of mean :code:`mean_users × mask(t)`
- the CQI follows a bounded, mean-reverting random walk on [1, 15]
- offered load is :code:`users × per-user demand`
- the effective capacity is :code:`bandwidth × SE(cqi) × (1 - coupling × neighbor load)`,
  the neighbor load being the mean PRB occupation of the other cells at the previous slot
- the slice gets :code:`share × effective capacity`, and its delay comes from a
  single-queue approximation :code:`base_delay / max(eps, 1 - rho)`

Random draws are keyed by (seed, cell, slice, t): two simulators built from the same
configuration see the same users and channels whatever partitions they receive.
"""

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Optional, Union

import numpy as np
import pandas as pd

from netslice import files
from netslice.core import (
    CellTopology,
    InfeasiblePartitionError,
    PartitionVector,
    SliceSpec,
    equal_shares,
    validate_partition,
)
from netslice.logs import NS_NAME
from netslice.types import AnyPathStrType

LOGGER = logging.getLogger(NS_NAME)

SPECTRAL_EFFICIENCY = (
    0.1523,
    0.2344,
    0.3770,
    0.6016,
    0.8770,
    1.1758,
    1.4766,
    1.9141,
    2.4063,
    2.7305,
    3.3223,
    3.9023,
    4.5234,
    5.1152,
    5.5547,
)
"""Spectral efficiency (bit/s/Hz) per CQI index 1..15 (4-bit CQI table, up to 64QAM)"""

CQI_MIN = 1
CQI_MAX = 15

DEFAULT_THROUGHPUT_REQ = {1: 2.0, 2: 1.0, 3: 1.5, 4: 0.5}
"""Throughput requirements (Mbit/s) of the four slice types"""

DEFAULT_DELAY_REQ = {1: 10.0, 2: 20.0, 3: 15.0, 4: 50.0}
"""Delay requirements (ms) of the four slice types"""

DEFAULT_MEAN_USERS = {1: 6.0, 2: 8.0, 3: 5.0, 4: 12.0}
"""Mean number of active users at full traffic mask"""

DEFAULT_DEMAND = {1: 2.5, 2: 1.25, 3: 1.875, 4: 0.625}
"""Per-user demand (Mbit/s), i.e. 1.25 × the throughput requirement"""

KPI_COLUMNS = [
    "t",
    "cell_id",
    "slice_id",
    "share",
    "prb_util",
    "users",
    "cqi",
    "throughput_mbps",
    "delay_ms",
    "tput_req",
    "delay_req",
    "served_mbps",
]
"""Stable header of the KPI CSV files"""

# Keyed random streams
_USERS_STREAM = 0
_CQI_STREAM = 1
_MASK_STREAM = 2

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def default_slice_catalog() -> tuple:
    """The four slice types with their default QoS requirements"""
    return tuple(
        SliceSpec(sid, DEFAULT_THROUGHPUT_REQ[sid], DEFAULT_DELAY_REQ[sid])
        for sid in sorted(DEFAULT_THROUGHPUT_REQ)
    )


@dataclass(frozen=True)
class TrafficMask:
    """Periodic per-slice traffic profile, in [0, 1]"""

    slice_id: int
    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.values) < 1:
            raise ValueError(f"Traffic mask of slice {self.slice_id} is empty")
        if any(not 0.0 <= v <= 1.0 for v in self.values):
            raise ValueError(f"Traffic mask of slice {self.slice_id} should be in [0, 1]")

    @property
    def period(self) -> int:
        return len(self.values)

    def value_at(self, t: int) -> float:
        """Mask value at time :code:`t` (looped over the period)"""
        return self.values[t % self.period]


def default_traffic_mask(
    slice_id: int, period: int = 96, seed: int = 0, noise: float = 0.05
) -> TrafficMask:
    """
    Synthetic diurnal traffic mask: a sinusoid with a per-slice phase offset
    and a bounded seeded noise, clipped to [0, 1].

    Args:
        slice_id (int): Slice id (drives the phase offset)
        period (int): Period in steps (96 steps of 15 minutes is one day)
        seed (int): Seed of the noise
        noise (float): Half-width of the uniform noise

    Returns:
        TrafficMask: Mask of one period

    Example:
        >>> mask = default_traffic_mask(1)
        >>> mask.value_at(0) == mask.value_at(96)
        True
    """
    if period < 24:
        raise ValueError(f"Traffic mask period should be at least 24 steps, not {period}")

    phase = 2.0 * np.pi * ((slice_id * _GOLDEN) % 1.0)
    steps = np.arange(period)
    profile = 0.55 + 0.35 * np.sin(2.0 * np.pi * steps / period - phase)

    rng = np.random.default_rng([seed, slice_id, _MASK_STREAM])
    profile += rng.uniform(-noise, noise, size=period)

    return TrafficMask(slice_id, np.clip(profile, 0.0, 1.0))


@dataclass(frozen=True)
class SimConfig:
    """Configuration of the synthetic network"""

    num_cells: int = 12
    bandwidth: float = 20.0
    """Per-cell bandwidth (MHz)"""

    slice_catalog: tuple = field(default_factory=default_slice_catalog)
    """Every slice type the network knows (:py:class:`SliceSpec`)"""

    active_slices: tuple = (1, 2, 3, 4)
    """Slice ids active in every cell at init"""

    mean_users: dict = field(default_factory=lambda: dict(DEFAULT_MEAN_USERS))
    per_user_demand: dict = field(default_factory=lambda: dict(DEFAULT_DEMAND))

    mask_period: int = 96
    mask_noise: float = 0.05
    masks: Optional[dict] = None
    """Slice id -> :py:class:`TrafficMask`, overriding the default masks"""

    cqi_mean: float = 9.0
    cqi_reversion: float = 0.2
    cqi_noise: float = 1.0
    coupling: float = 0.2

    base_delay: float = 2.0
    """Delay of an empty queue (ms)"""

    delay_headroom: float = 0.02
    """Load headroom of the delay formula, the maximum delay is :code:`base_delay / delay_headroom`"""

    history: int = 5
    """History length H of the observations"""

    seed: int = 0
    step_minutes: float = 15.0

    def spec_for(self, slice_id: int) -> SliceSpec:
        for spec in self.slice_catalog:
            if spec.slice_id == slice_id:
                return spec
        raise ValueError(
            f"Unknown slice {slice_id}, should be among {[s.slice_id for s in self.slice_catalog]}"
        )

    @property
    def max_delay(self) -> float:
        return self.base_delay / self.delay_headroom


def check_sim_config(config: SimConfig) -> None:
    """
    Check the consistency of a simulator configuration.

    Args:
        config (SimConfig): Configuration

    Raises:
        ValueError: If the configuration is invalid
    """
    if int(config.num_cells) < 1:
        raise ValueError(f"At least one cell is needed, not {config.num_cells}")
    if not config.bandwidth > 0:
        raise ValueError(f"Bandwidth should be positive, not {config.bandwidth}")
    if not 0.0 <= config.coupling < 1.0:
        raise ValueError(f"Coupling coefficient should be in [0, 1), not {config.coupling}")
    if int(config.history) < 1:
        raise ValueError(f"History length should be at least 1, not {config.history}")
    if int(config.seed) < 0:
        raise ValueError(f"Seed should be nonnegative, not {config.seed}")
    if not config.slice_catalog:
        raise ValueError("The slice catalog is empty")

    catalog_ids = [spec.slice_id for spec in config.slice_catalog]
    if len(set(catalog_ids)) != len(catalog_ids):
        raise ValueError(f"Duplicated slice ids in the catalog: {catalog_ids}")
    if not config.active_slices:
        raise ValueError("No active slice")
    for sid in config.active_slices:
        config.spec_for(sid)

    for sid in catalog_ids:
        if config.mean_users.get(sid, -1) < 0:
            raise ValueError(f"Missing or negative mean user count for slice {sid}")
        if not config.per_user_demand.get(sid, -1) > 0:
            raise ValueError(f"Missing or non-positive per-user demand for slice {sid}")

    if config.masks is None:
        if config.mask_period < 24:
            raise ValueError(f"Mask period should be at least 24 steps, not {config.mask_period}")
    else:
        missing = [sid for sid in catalog_ids if sid not in config.masks]
        if missing:
            raise ValueError(f"Missing traffic masks for slices {missing}")

    if not CQI_MIN <= config.cqi_mean <= CQI_MAX:
        raise ValueError(f"CQI mean should be in [{CQI_MIN}, {CQI_MAX}], not {config.cqi_mean}")
    if not 0.0 <= config.cqi_reversion <= 1.0 or config.cqi_noise < 0:
        raise ValueError("Invalid CQI process parameters")
    if not config.base_delay > 0 or not 0.0 < config.delay_headroom < 1.0:
        raise ValueError("Invalid delay model parameters")
    if not config.step_minutes > 0:
        raise ValueError(f"Step duration should be positive, not {config.step_minutes}")


@dataclass(frozen=True)
class KpiRecord:
    """Ground truth of one (cell, slice) over one time slot"""

    t: int
    cell_id: int
    slice_id: int
    share: float
    prb_utilization: float
    active_users: int
    channel_quality: int
    throughput: float
    """Average user throughput (Mbit/s)"""

    delay: float
    """Delay (ms)"""

    throughput_req: float
    delay_req: float
    served_load: float
    """Aggregate served traffic of the slice (Mbit/s)"""


class SliceHistory(NamedTuple):
    """What can be observed of a slice at slot t: its [t-H, t-1] history"""

    spec: SliceSpec
    users: np.ndarray
    cqi: np.ndarray


@dataclass
class SimulatorState:
    """Single-owner state of the simulator at the beginning of slot :code:`t`"""

    config: SimConfig
    t: int
    cells: dict
    """Cell id -> :py:class:`CellTopology`"""

    masks: dict
    users_history: dict
    """Cell id -> slice id -> users over [t-H, t-1]"""

    cqi_history: dict
    cqi_current: dict
    """Cell id -> slice id -> CQI of the last simulated slot"""

    cell_load: np.ndarray
    """Sum of the PRB utilizations of each cell at the last simulated slot"""

    def copy(self) -> "SimulatorState":
        """Independent copy (config and masks are immutable and shared)"""
        return SimulatorState(
            config=self.config,
            t=self.t,
            cells=dict(self.cells),
            masks=self.masks,
            users_history={c: {s: h.copy() for s, h in d.items()} for c, d in self.users_history.items()},
            cqi_history={c: {s: h.copy() for s, h in d.items()} for c, d in self.cqi_history.items()},
            cqi_current={c: dict(d) for c, d in self.cqi_current.items()},
            cell_load=self.cell_load.copy(),
        )

    @property
    def cell_ids(self) -> list:
        return sorted(self.cells)


def spectral_efficiency(cqi: int) -> float:
    """Spectral efficiency (bit/s/Hz) of a CQI index"""
    if not CQI_MIN <= cqi <= CQI_MAX:
        raise ValueError(f"CQI should be in [{CQI_MIN}, {CQI_MAX}], not {cqi}")
    return SPECTRAL_EFFICIENCY[int(cqi) - 1]


def _keyed_rng(seed: int, cell_id: int, slice_id: int, t: int, stream: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(cell_id), int(slice_id), int(t), stream])


def _draw_users(state: SimulatorState, cell_id: int, slice_id: int, t: int) -> int:
    config = state.config
    rate = config.mean_users[slice_id] * state.masks[slice_id].value_at(t)
    return int(_keyed_rng(config.seed, cell_id, slice_id, t, _USERS_STREAM).poisson(rate))


def _next_cqi(state: SimulatorState, cell_id: int, slice_id: int, t: int, previous: int) -> int:
    config = state.config
    noise = _keyed_rng(config.seed, cell_id, slice_id, t, _CQI_STREAM).standard_normal()
    drift = config.cqi_reversion * (config.cqi_mean - previous)
    return int(np.clip(np.rint(previous + drift + config.cqi_noise * noise), CQI_MIN, CQI_MAX))


def _initial_cqi(config: SimConfig) -> int:
    return int(np.clip(round(config.cqi_mean), CQI_MIN, CQI_MAX))


def init(config: SimConfig) -> SimulatorState:
    """
    Create the initial state of the simulator.

    The history buffers are filled by running H warm-up slots under equal split,
    so the first state returned starts at :code:`t = H`.

    Args:
        config (SimConfig): Simulator configuration

    Returns:
        SimulatorState: Deterministic initial state

    Example:
        >>> state = init(SimConfig(num_cells=3))
        >>> state.t
        5
    """
    check_sim_config(config)
    history = int(config.history)
    specs = tuple(config.spec_for(sid) for sid in config.active_slices)

    if config.masks is None:
        masks = {
            spec.slice_id: default_traffic_mask(
                spec.slice_id, config.mask_period, config.seed, config.mask_noise
            )
            for spec in config.slice_catalog
        }
    else:
        masks = dict(config.masks)

    cells = {
        cell_id: CellTopology(cell_id, config.bandwidth, specs)
        for cell_id in range(int(config.num_cells))
    }
    state = SimulatorState(
        config=config,
        t=0,
        cells=cells,
        masks=masks,
        users_history={c: {s.slice_id: np.zeros(history) for s in specs} for c in cells},
        cqi_history={c: {s.slice_id: np.zeros(history) for s in specs} for c in cells},
        cqi_current={c: {s.slice_id: _initial_cqi(config) for s in specs} for c in cells},
        cell_load=np.zeros(len(cells)),
    )

    for _ in range(history):
        state, _ = step(state, {c: equal_shares(len(specs)) for c in cells})

    LOGGER.debug(
        "Simulator initialized: %d cells, slices %s, digest %s",
        len(cells),
        list(config.active_slices),
        state_digest(state),
    )
    return state


def neighbor_load_fraction(state: SimulatorState, cell_id: int) -> float:
    """Mean PRB occupation of the other cells at the previous slot (0 for a single cell)"""
    if len(state.cell_load) <= 1:
        return 0.0
    others = np.delete(state.cell_load, state.cell_ids.index(cell_id))
    return float(np.clip(others.mean(), 0.0, 1.0))


def _as_shares(partition: Union[PartitionVector, list, np.ndarray]) -> PartitionVector:
    if isinstance(partition, PartitionVector):
        return partition
    return PartitionVector(np.asarray(partition, dtype=np.float64).ravel())


def step(state: SimulatorState, partitions: dict) -> tuple:
    """
    Simulate one time slot.

    Args:
        state (SimulatorState): State at the beginning of the slot (not modified)
        partitions (dict): Cell id -> :py:class:`PartitionVector` aligned with its active slices

    Returns:
        tuple: New state, list of :py:class:`KpiRecord`

    Raises:
        InfeasiblePartitionError: If a partition is not feasible
    """
    missing = [c for c in state.cell_ids if c not in partitions]
    unknown = [c for c in partitions if c not in state.cells]
    if missing or unknown:
        raise ValueError(f"One partition per cell is needed (missing: {missing}, unknown: {unknown})")

    shares_per_cell = {}
    for cell_id in state.cell_ids:
        shares = _as_shares(partitions[cell_id])
        report = validate_partition(shares, len(state.cells[cell_id].active_slices))
        if not report.ok:
            raise InfeasiblePartitionError(report, f"Cell {cell_id} at t={state.t}")
        shares_per_cell[cell_id] = shares.shares

    config = state.config
    new_state = state.copy()
    t = state.t
    eps = config.delay_headroom
    records = []

    # Neighbor loads are read from the snapshot of the previous slot
    for idx, cell_id in enumerate(state.cell_ids):
        cell = state.cells[cell_id]
        discount = 1.0 - config.coupling * neighbor_load_fraction(state, cell_id)
        cell_prb = 0.0

        for share, spec in zip(shares_per_cell[cell_id], cell.active_slices):
            sid = spec.slice_id
            users = _draw_users(state, cell_id, sid, t)
            cqi = _next_cqi(state, cell_id, sid, t, state.cqi_current[cell_id][sid])

            demand = config.per_user_demand[sid]
            offered = users * demand
            slice_cap = share * cell.bandwidth * spectral_efficiency(cqi) * discount
            served = min(offered, slice_cap)
            throughput = min(demand, slice_cap / max(users, 1))

            if offered == 0.0:
                rho = 0.0
            elif slice_cap == 0.0:
                rho = 1.0 - eps
            else:
                rho = min(offered / slice_cap, 1.0 - eps)
            delay = config.base_delay / max(eps, 1.0 - rho)

            prb_util = share * min(1.0, offered / slice_cap) if slice_cap > 0.0 else 0.0
            cell_prb += prb_util

            records.append(
                KpiRecord(
                    t=t,
                    cell_id=cell_id,
                    slice_id=sid,
                    share=share,
                    prb_utilization=prb_util,
                    active_users=users,
                    channel_quality=cqi,
                    throughput=throughput,
                    delay=delay,
                    throughput_req=spec.throughput_req,
                    delay_req=spec.delay_req,
                    served_load=served,
                )
            )

            new_state.users_history[cell_id][sid] = np.append(
                new_state.users_history[cell_id][sid][1:], users
            )
            new_state.cqi_history[cell_id][sid] = np.append(
                new_state.cqi_history[cell_id][sid][1:], cqi
            )
            new_state.cqi_current[cell_id][sid] = cqi

        new_state.cell_load[idx] = cell_prb

    new_state.t = t + 1
    return new_state, records


def reconfigure_slices(state: SimulatorState, cell_id: int, new_active_slices: list) -> SimulatorState:
    """
    Change the active slice set of a cell, effective at the next slot.

    Retained slices keep their histories. New slices start with zero-filled histories
    and a CQI at the configured mean; their users spawn from the configuration.

    Args:
        state (SimulatorState): Current state (not modified)
        cell_id (int): Cell to reconfigure
        new_active_slices (list): New ordered slice set, as :py:class:`SliceSpec` or slice ids

    Returns:
        SimulatorState: New state

    Example:
        >>> state = reconfigure_slices(state, 0, [1, 2, 3, 4])
        >>> state.cells[0].slice_ids()
        [1, 2, 3, 4]
    """
    if cell_id not in state.cells:
        raise ValueError(f"Unknown cell {cell_id}, should be among {state.cell_ids}")
    if not new_active_slices:
        raise ValueError(f"Cell {cell_id} cannot be left without any slice")

    specs = tuple(
        s if isinstance(s, SliceSpec) else state.config.spec_for(int(s)) for s in new_active_slices
    )
    for spec in specs:
        if spec.slice_id not in state.masks:
            raise ValueError(f"Slice {spec.slice_id} has no traffic mask")

    new_state = state.copy()
    old_cell = state.cells[cell_id]
    if specs == old_cell.active_slices:
        return new_state

    new_cell = CellTopology(cell_id, old_cell.bandwidth, specs)
    history = int(state.config.history)
    users_hist, cqi_hist, cqi_cur = {}, {}, {}
    for spec in specs:
        sid = spec.slice_id
        if sid in state.users_history[cell_id]:
            users_hist[sid] = state.users_history[cell_id][sid].copy()
            cqi_hist[sid] = state.cqi_history[cell_id][sid].copy()
            cqi_cur[sid] = state.cqi_current[cell_id][sid]
        else:
            users_hist[sid] = np.zeros(history)
            cqi_hist[sid] = np.zeros(history)
            cqi_cur[sid] = _initial_cqi(state.config)

    new_state.cells[cell_id] = new_cell
    new_state.users_history[cell_id] = users_hist
    new_state.cqi_history[cell_id] = cqi_hist
    new_state.cqi_current[cell_id] = cqi_cur

    LOGGER.info(
        "Cell %d reconfigured at t=%d: %s -> %s",
        cell_id,
        state.t,
        old_cell.slice_ids(),
        new_cell.slice_ids(),
    )
    return new_state


def observe(state: SimulatorState, cell_id: int) -> list:
    """
    Observable histories of the active slices of a cell, over [t-H, t-1].

    Args:
        state (SimulatorState): Current state
        cell_id (int): Cell id

    Returns:
        list: One :py:class:`SliceHistory` per active slice, in canonical order
    """
    cell = state.cells[cell_id]
    return [
        SliceHistory(
            spec,
            state.users_history[cell_id][spec.slice_id].copy(),
            state.cqi_history[cell_id][spec.slice_id].copy(),
        )
        for spec in cell.active_slices
    ]


def offered_load(state: SimulatorState, cell_id: int) -> np.ndarray:
    """
    Exact offered load (Mbit/s) of the active slices of a cell for the upcoming slot
    (perfect traffic knowledge).

    Args:
        state (SimulatorState): Current state
        cell_id (int): Cell id

    Returns:
        np.ndarray: Offered load per active slice
    """
    cell = state.cells[cell_id]
    return np.array(
        [
            _draw_users(state, cell_id, spec.slice_id, state.t)
            * state.config.per_user_demand[spec.slice_id]
            for spec in cell.active_slices
        ],
        dtype=np.float64,
    )


def state_digest(state: SimulatorState) -> str:
    """
    Deterministic digest of a simulator state.

    Args:
        state (SimulatorState): State

    Returns:
        str: Hexadecimal digest
    """
    payload = {
        "t": state.t,
        "cells": {
            str(c): {
                "slices": state.cells[c].slice_ids(),
                "users": {str(s): h.tolist() for s, h in state.users_history[c].items()},
                "cqi": {str(s): h.tolist() for s, h in state.cqi_history[c].items()},
                "cqi_current": {str(s): q for s, q in state.cqi_current[c].items()},
            }
            for c in state.cell_ids
        },
        "cell_load": [repr(float(v)) for v in state.cell_load],
    }
    return files.hash_file_content(json.dumps(payload, sort_keys=True), len_param=16)


def records_to_frame(records: list) -> pd.DataFrame:
    """
    Convert KPI records to a dataframe with the stable KPI columns.

    Args:
        records (list): :py:class:`KpiRecord` list

    Returns:
        pd.DataFrame: KPI dataframe
    """
    renaming = {
        "prb_utilization": "prb_util",
        "active_users": "users",
        "channel_quality": "cqi",
        "throughput": "throughput_mbps",
        "delay": "delay_ms",
        "throughput_req": "tput_req",
        "served_load": "served_mbps",
    }
    frame = pd.DataFrame([asdict(rec) for rec in records], columns=list(KpiRecord.__dataclass_fields__))
    return frame.rename(columns=renaming)[KPI_COLUMNS]


def write_kpi_csv(records: list, path: AnyPathStrType) -> None:
    """
    Write a KPI stream as CSV (lossless floats).

    Args:
        records (list): :py:class:`KpiRecord` list
        path (AnyPathStrType): Output CSV
    """
    records_to_frame(records).to_csv(path, index=False, float_format="%.17g")


def read_kpi_csv(path: AnyPathStrType) -> list:
    """
    Read a KPI stream written by :py:func:`write_kpi_csv`.

    Args:
        path (AnyPathStrType): KPI CSV

    Returns:
        list: :py:class:`KpiRecord` list
    """
    frame = pd.read_csv(path, float_precision="round_trip")
    missing = [col for col in KPI_COLUMNS if col not in frame.columns]
    if missing:
        raise ValueError(f"{path} is not a KPI file, missing columns {missing}")

    return [
        KpiRecord(
            t=int(row.t),
            cell_id=int(row.cell_id),
            slice_id=int(row.slice_id),
            share=float(row.share),
            prb_utilization=float(row.prb_util),
            active_users=int(row.users),
            channel_quality=int(row.cqi),
            throughput=float(row.throughput_mbps),
            delay=float(row.delay_ms),
            throughput_req=float(row.tput_req),
            delay_req=float(row.delay_req),
            served_load=float(row.served_mbps),
        )
        for row in frame.itertuples(index=False)
    ]
