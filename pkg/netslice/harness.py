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
Phased experiment:

- **h0**: the simulator is driven by a random exploration policy, its KPIs become an augmented dataset
- the estimator is trained once on this dataset
- **h1**: every scheme drives its own replica of the h0-end network
- **h2**: a new slice is introduced in every cell, without retraining the estimator

Every replica starts from the same snapshot and the simulator draws are keyed by
(cell, slice, slot): all schemes see the same users and channels.

Run directory layout:

.. code-block:: text

    <out>/config.json           resolved configuration
    <out>/kpi_h0.csv            h0 KPI stream
    <out>/dataset.csv           augmented dataset
    <out>/h0_state.pkl          simulator snapshot at the end of h0
    <out>/estimator.json        trained estimator
    <out>/train_report.json     training summary
    <out>/slots.csv             per-slot, per-(cell, slice) log of every scheme
    <out>/summary.csv           per (scheme, phase) metrics
    <out>/slices.csv            per (scheme, phase, slice) metrics
    <out>/cdf.csv               converged satisfaction CDFs
    <out>/utility.csv           per-slot network utility
    <out>/figures/*.svg         throughput per scheme and slice, CDF per scheme
    <out>/supplementary/*.svg   traffic masks, estimator error histogram
"""

import dataclasses
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import unique
from typing import Optional

import numpy as np
import pandas as pd
import psutil
from tqdm import tqdm

from netslice import AnyPath, dataset, estimator, files, misc, netsim, plots
from netslice.core import (
    InfeasiblePartitionError,
    PartitionVector,
    SliceSpec,
    satisfaction_values,
    validate_partition,
)
from netslice.estimator import EstimatorParams
from netslice.logs import NS_NAME
from netslice.misc import ListEnum, unknown_keys
from netslice.netsim import SimConfig, TrafficMask
from netslice.optimizer import SolverParams
from netslice.schemes import SchemeName, make_scheme
from netslice.types import AnyPathStrType, make_iterable

LOGGER = logging.getLogger(NS_NAME)

SLOT_COLUMNS = ["scheme", "phase"] + netsim.KPI_COLUMNS + ["satisfaction"]
SEED_NAMES = ("sim", "exploration", "augment", "split", "estimator", "solver")


class ConfigError(ValueError):
    """Invalid experiment configuration"""


class StageError(RuntimeError):
    """Failure of an experiment stage"""

    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"Stage '{stage}' failed: {message}")


@unique
class Scale(ListEnum):
    """Configuration presets"""

    FULL = "full"
    DESK = "desk"


@dataclass(frozen=True)
class PhaseConfig:
    """Number of slots of each phase"""

    h0: int = 200
    h1: int = 400
    h2: int = 400


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything an experiment needs"""

    sim: SimConfig = field(default_factory=SimConfig)
    phases: PhaseConfig = field(default_factory=PhaseConfig)
    h0_slices: tuple = (1, 2, 4)
    h1_slices: tuple = (1, 2, 4)
    h2_slices: tuple = (1, 2, 3, 4)
    schemes: tuple = tuple(SchemeName.list_values())
    solver: SolverParams = field(default_factory=SolverParams)
    estimator: EstimatorParams = field(default_factory=EstimatorParams)
    oracle_grid_step: float = 0.05
    oracle_max_points: int = 2_000_000
    exploration_alpha: float = 1.0
    """Dirichlet concentration of the h0 exploration policy"""

    cdf_window: float = 0.5
    """Last fraction of each phase considered as converged"""

    workers: int = 1
    """Replicas run concurrently (0: number of physical cores)"""

    trace: bool = False
    output_dir: str = "runs/netslice"
    seed: int = 0
    """Master seed, every other seed derives from it"""


@dataclass
class MetricsTable:
    """Metrics of an experiment"""

    summary: pd.DataFrame
    """Per (scheme, phase): satisfaction, P(satisfaction = 1) and utility"""

    slices: pd.DataFrame
    """Per (scheme, phase, slice): throughput and delay normalized by their requirements"""

    cdf: pd.DataFrame
    """Per (scheme, phase): empirical CDF of the converged satisfaction"""

    utility: pd.DataFrame
    """Per (scheme, slot): network utility"""

    slots: pd.DataFrame
    """Per-slot log"""


@dataclass(frozen=True)
class EmpiricalCdf:
    """Right-continuous empirical CDF"""

    support: np.ndarray
    """Sorted distinct values"""

    probabilities: np.ndarray
    """CDF at each support value"""

    values: np.ndarray = field(repr=False, default_factory=lambda: np.array([]))

    def __call__(self, value: float) -> float:
        return float(np.searchsorted(self.values, value, side="right") / self.values.size)

    @property
    def prob_one(self) -> float:
        """P(value = 1)"""
        return float(np.mean(self.values == 1.0))


@dataclass
class CollectResult:
    samples: list
    records: list
    state: netsim.SimulatorState


def default_config(scale: str = "desk") -> ExperimentConfig:
    """
    Configuration presets.

    - :code:`full`: 12 cells, phases of 1000/2000/2000 slots
    - :code:`desk`: 3 cells, phases of 200/400/400 slots

    Both use the four slice types (2, 1, 1.5, 0.5 Mbit/s; 10, 20, 15, 50 ms), the slice set
    [1, 2, 4] during h0 and h1, and [1, 2, 3, 4] during h2.

    Args:
        scale (str): :code:`full` or :code:`desk`

    Returns:
        ExperimentConfig: Preset
    """
    scale = Scale.from_value(scale)
    if scale == Scale.FULL:
        return ExperimentConfig(
            sim=SimConfig(num_cells=12, active_slices=(1, 2, 4)),
            phases=PhaseConfig(1000, 2000, 2000),
            output_dir="runs/full",
        )
    return ExperimentConfig(
        sim=SimConfig(num_cells=3, active_slices=(1, 2, 4)),
        phases=PhaseConfig(200, 400, 400),
        output_dir="runs/desk",
    )


def derive_seeds(master_seed: int) -> dict:
    """
    Derive the seeds of every stage from the master seed.

    Args:
        master_seed (int): Master seed

    Returns:
        dict: Stage name -> seed
    """
    words = np.random.SeedSequence(int(master_seed)).generate_state(len(SEED_NAMES))
    return {name: int(word) for name, word in zip(SEED_NAMES, words)}


def _resolve_seeds(config: ExperimentConfig) -> ExperimentConfig:
    seeds = derive_seeds(config.seed)
    return replace(
        config,
        sim=replace(config.sim, seed=seeds["sim"]),
        solver=replace(config.solver, seed=seeds["solver"]),
        estimator=replace(config.estimator, seed=seeds["estimator"]),
    )


def validate_config(config: ExperimentConfig) -> None:
    """
    Check an experiment configuration.

    Raises:
        ConfigError: If the configuration is invalid
    """
    try:
        netsim.check_sim_config(config.sim)
        for phase_slices in (config.h0_slices, config.h1_slices, config.h2_slices):
            if not phase_slices:
                raise ValueError("Every phase needs at least one slice")
            for sid in phase_slices:
                config.sim.spec_for(sid)
        SchemeName.convert_from(list(config.schemes))
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc

    phases = config.phases
    if min(phases.h0, phases.h1, phases.h2) < 1:
        raise ConfigError(f"Every phase needs at least one slot: {phases}")
    if tuple(config.h2_slices) == tuple(config.h1_slices):
        raise ConfigError("The h2 slice set should differ from the h1 one (reconfiguration event)")
    if not config.schemes:
        raise ConfigError("At least one scheme is needed")
    if not 0.0 < config.cdf_window <= 1.0:
        raise ConfigError(f"CDF window should be in (0, 1], not {config.cdf_window}")
    if config.workers < 0:
        raise ConfigError(f"Workers should be nonnegative, not {config.workers}")
    if not config.exploration_alpha > 0:
        raise ConfigError("Exploration concentration should be positive")
    if not 0.0 < config.estimator.train_fraction < 1.0:
        raise ConfigError("Train fraction should be in (0, 1)")
    if not 0.0 <= config.estimator.label_margin < 0.5:
        raise ConfigError("Label margin should be in [0, 0.5)")


def _section(cls, data: dict, name: str, base):
    if not isinstance(data, dict):
        raise ConfigError(f"Section '{name}' should be a JSON object")
    known = [f.name for f in dataclasses.fields(cls)]
    unknown = unknown_keys(data, known)
    if unknown:
        raise ConfigError(f"Unknown keys in section '{name}': {unknown}, should be among {known}")
    try:
        return replace(base, **data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"Invalid section '{name}': {exc}") from exc


def _int_keys(data: dict, name: str) -> dict:
    try:
        return {int(k): float(v) for k, v in data.items()}
    except (TypeError, ValueError, AttributeError) as exc:
        raise ConfigError(f"'{name}' should map slice ids to numbers") from exc


def _sim_from_dict(data: dict, base: SimConfig) -> SimConfig:
    if not isinstance(data, dict):
        raise ConfigError("Section 'sim' should be a JSON object")
    data = dict(data)
    try:
        if "slice_catalog" in data:
            data["slice_catalog"] = tuple(SliceSpec(**spec) for spec in data["slice_catalog"])
        if "active_slices" in data:
            data["active_slices"] = tuple(int(s) for s in data["active_slices"])
        for key in ("mean_users", "per_user_demand"):
            if key in data:
                data[key] = _int_keys(data[key], key)
        if data.get("masks") is not None:
            data["masks"] = {
                int(sid): TrafficMask(int(sid), values) for sid, values in data["masks"].items()
            }
    except (TypeError, ValueError, AttributeError) as exc:
        raise ConfigError(f"Invalid 'sim' section: {exc}") from exc
    return _section(SimConfig, data, "sim", base)


def config_from_dict(data: dict, base: ExperimentConfig = None) -> ExperimentConfig:
    """
    Build a configuration from a JSON-like dictionary, on top of a preset.

    Keys mirror the dataclass fields; :code:`sim`, :code:`phases`, :code:`solver` and
    :code:`estimator` are nested sections; :code:`scale` selects the preset.

    Args:
        data (dict): Configuration dictionary
        base (ExperimentConfig): Preset to complete, :code:`default_config(data["scale"])` if not given

    Returns:
        ExperimentConfig: Configuration

    Raises:
        ConfigError: Unknown keys or invalid values

    Example:
        >>> config_from_dict({"scale": "desk", "seed": 3, "phases": {"h0": 300}})
    """
    data = dict(data)
    try:
        scale = data.pop("scale", "desk")
        base = base or default_config(scale)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    known = [f.name for f in dataclasses.fields(ExperimentConfig)]
    unknown = unknown_keys(data, known)
    if unknown:
        raise ConfigError(f"Unknown configuration keys: {unknown}, should be among {known + ['scale']}")

    updates = {}
    for key, value in data.items():
        if key == "sim":
            updates[key] = _sim_from_dict(value, base.sim)
        elif key == "phases":
            updates[key] = _section(PhaseConfig, value, key, base.phases)
        elif key == "solver":
            updates[key] = _section(SolverParams, value, key, base.solver)
        elif key == "estimator":
            if isinstance(value, dict) and "hidden_sizes" in value:
                value = dict(value)
                value["hidden_sizes"] = tuple(value["hidden_sizes"])
            updates[key] = _section(EstimatorParams, value, key, base.estimator)
        elif key in ("h0_slices", "h1_slices", "h2_slices", "schemes"):
            updates[key] = tuple(make_iterable(value))
        else:
            updates[key] = value

    try:
        config = replace(base, **updates)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    validate_config(config)
    return config


def config_to_dict(config: ExperimentConfig) -> dict:
    """
    JSON-ready dictionary of a configuration (readable back with :py:func:`config_from_dict`).
    """
    data = dataclasses.asdict(config)
    sim = data["sim"]
    sim["mean_users"] = {str(k): v for k, v in config.sim.mean_users.items()}
    sim["per_user_demand"] = {str(k): v for k, v in config.sim.per_user_demand.items()}
    if config.sim.masks is not None:
        sim["masks"] = {str(k): list(m.values) for k, m in config.sim.masks.items()}
    return data


def load_config(path: AnyPathStrType = None, scale: str = "desk", **overrides) -> ExperimentConfig:
    """
    Load a JSON configuration file (or a preset), then apply overrides.

    Args:
        path (AnyPathStrType): JSON configuration, optional
        scale (str): Preset used when the file does not set :code:`scale`
        **overrides: Top-level fields to override (None values are ignored)

    Returns:
        ExperimentConfig: Validated configuration
    """
    data = {"scale": scale}
    if path is not None:
        path = AnyPath(path)
        if not path.is_file():
            raise ConfigError(f"Configuration file not found: {path}")
        try:
            loaded = files.read_json(path)
        except ValueError as exc:
            raise ConfigError(f"Invalid JSON in {path}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError(f"{path} should contain a JSON object")
        data.update(loaded)

    data.update({k: v for k, v in overrides.items() if v is not None})
    return config_from_dict(data)


def exploration_partition(rng: np.random.Generator, num_slices: int, alpha: float = 1.0) -> PartitionVector:
    """
    Random partition covering the whole feasible set (sum lower or equal to 1):
    a Dirichlet draw over the slices plus an unused share, which is dropped.

    Args:
        rng (np.random.Generator): Generator
        num_slices (int): Number of slices
        alpha (float): Dirichlet concentration

    Returns:
        PartitionVector: Feasible partition
    """
    draw = rng.dirichlet(np.full(num_slices + 1, alpha))
    return PartitionVector(draw[:num_slices])


def _reconfigure_all(state: netsim.SimulatorState, slices: tuple) -> netsim.SimulatorState:
    for cell_id in state.cell_ids:
        state = netsim.reconfigure_slices(state, cell_id, list(slices))
    return state


def collect_dataset(config: ExperimentConfig, progress: bool = False) -> CollectResult:
    """
    h0: drive the simulator with the exploration policy and build the augmented dataset.

    Args:
        config (ExperimentConfig): Configuration
        progress (bool): Show a progress bar

    Returns:
        CollectResult: Samples, KPI stream and simulator state at the end of h0
    """
    config = _resolve_seeds(config)
    seeds = derive_seeds(config.seed)
    sim = replace(config.sim, active_slices=tuple(config.h0_slices))
    state = netsim.init(sim)
    rng = np.random.default_rng(seeds["exploration"])

    records = []
    for _ in tqdm(range(config.phases.h0), desc="h0", disable=not progress):
        partitions = {
            c: exploration_partition(rng, len(state.cells[c].active_slices), config.exploration_alpha)
            for c in state.cell_ids
        }
        state, step_records = netsim.step(state, partitions)
        records.extend(step_records)

    raw = dataset.assemble_samples(records, sim.history)
    samples = dataset.augment(raw, seeds["augment"])
    LOGGER.info(
        "h0: %d slots, %d KPI records, samples %s",
        config.phases.h0,
        len(records),
        dataset.summarize(samples),
    )
    return CollectResult(samples, records, state)


def train_estimator(samples: list, config: ExperimentConfig, progress: bool = False) -> tuple:
    """
    Train the estimator on the h0 dataset.

    Args:
        samples (list): Dataset
        config (ExperimentConfig): Configuration
        progress (bool): Show a progress bar

    Returns:
        tuple: Trained model, :py:class:`netslice.estimator.TrainReport`
    """
    config = _resolve_seeds(config)
    params = config.estimator
    train_set, test_set = dataset.split(
        samples, params.train_fraction, derive_seeds(config.seed)["split"]
    )
    model = estimator.new(config.sim.history, params.hidden_sizes, params.seed)
    return estimator.train(
        model,
        train_set,
        test_set,
        epochs=params.epochs,
        seed=params.seed,
        learning_rate=params.learning_rate,
        batch_size=params.batch_size,
        label_margin=params.label_margin,
        progress=progress,
    )


def _slot_frame(records: list, scheme: str, phase: str) -> pd.DataFrame:
    frame = netsim.records_to_frame(records)
    frame.insert(0, "phase", phase)
    frame.insert(0, "scheme", scheme)
    frame["satisfaction"] = satisfaction_values(
        frame["throughput_mbps"], frame["delay_ms"], frame["tput_req"], frame["delay_req"]
    )
    return frame[SLOT_COLUMNS]


def _run_replica(
    config: ExperimentConfig,
    scheme_name: SchemeName,
    model: estimator.EstimatorModel,
    h0_state: netsim.SimulatorState,
    progress: bool,
) -> pd.DataFrame:
    trace_dir = (
        AnyPath(config.output_dir) / "traces" if config.trace and scheme_name == SchemeName.LAGRANGIAN else None
    )
    scheme = make_scheme(
        scheme_name,
        model,
        config.solver,
        config.oracle_grid_step,
        config.oracle_max_points,
        trace_dir,
    )

    state = _reconfigure_all(h0_state.copy(), tuple(config.h1_slices))
    frames = []
    for phase, num_slots, slices in (
        ("h1", config.phases.h1, config.h1_slices),
        ("h2", config.phases.h2, config.h2_slices),
    ):
        try:
            state = _reconfigure_all(state, tuple(slices))
            previous = {c: None for c in state.cell_ids}
            records = []
            for _ in tqdm(range(num_slots), desc=f"{scheme_name.value} {phase}", disable=not progress):
                partitions = {}
                for cell_id in state.cell_ids:
                    cell = state.cells[cell_id]
                    partition = scheme.allocate(
                        state.t,
                        cell,
                        netsim.observe(state, cell_id),
                        netsim.offered_load(state, cell_id),
                        previous[cell_id],
                    )
                    report = validate_partition(partition, len(cell.active_slices))
                    if not report.ok:
                        raise InfeasiblePartitionError(
                            report, f"{scheme_name.value}, cell {cell_id} at t={state.t}"
                        )
                    partitions[cell_id] = partition
                state, step_records = netsim.step(state, partitions)
                records.extend(step_records)
                previous = partitions
        except StageError:
            raise
        except Exception as exc:
            raise StageError(phase, f"{scheme_name.value}: {exc}") from exc

        frames.append(_slot_frame(records, scheme_name.value, phase))
        LOGGER.info("%s: %s done (%d slots)", scheme_name.value, phase, num_slots)

    return pd.concat(frames, ignore_index=True)


def _num_workers(workers: int) -> int:
    if workers == 0:
        return psutil.cpu_count(logical=False) or 1
    return workers


def run_online(
    config: ExperimentConfig,
    model: estimator.EstimatorModel,
    h0_state: netsim.SimulatorState,
    progress: bool = False,
) -> pd.DataFrame:
    """
    h1 and h2: every scheme drives its own replica of the h0-end network.

    Args:
        config (ExperimentConfig): Configuration
        model (estimator.EstimatorModel): Trained estimator (shared read-only)
        h0_state (netsim.SimulatorState): Simulator state at the end of h0 (not modified)
        progress (bool): Show progress bars

    Returns:
        pd.DataFrame: Per-slot log, schemes in configuration order
    """
    config = _resolve_seeds(config)
    scheme_names = SchemeName.convert_from(list(config.schemes))
    workers = min(_num_workers(config.workers), len(scheme_names))

    if workers <= 1:
        frames = [_run_replica(config, name, model, h0_state, progress) for name in scheme_names]
    else:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            futures = [
                executor.submit(_run_replica, config, name, model, h0_state, False)
                for name in scheme_names
            ]
            frames = [future.result() for future in futures]

    return pd.concat(frames, ignore_index=True)


def compute_cdf(values) -> EmpiricalCdf:
    """
    Right-continuous empirical CDF of satisfaction levels.

    Args:
        values: Satisfaction levels in [0, 1]

    Returns:
        EmpiricalCdf: CDF

    Example:
        >>> cdf = compute_cdf([0.5, 1.0])
        >>> cdf(0.5), cdf(1.0)
        (0.5, 1.0)
    """
    values = np.sort(np.asarray(values, dtype=np.float64).ravel())
    if values.size == 0:
        raise ValueError("Cannot compute the CDF of an empty series")
    if np.any(~((values >= 0.0) & (values <= 1.0))):
        raise ValueError("Satisfaction levels should be in [0, 1]")

    support, counts = np.unique(values, return_counts=True)
    return EmpiricalCdf(support, np.cumsum(counts) / values.size, values)


def _converged(frame: pd.DataFrame, window: float) -> pd.Series:
    """Rows in the last :code:`window` fraction of their phase"""
    bounds = frame.groupby("phase")["t"].agg(["min", "max"])
    start = bounds["min"] + np.floor((1.0 - window) * (bounds["max"] - bounds["min"] + 1))
    return frame["t"] >= frame["phase"].map(start)


def compute_metrics(slot_log: pd.DataFrame, config: ExperimentConfig) -> MetricsTable:
    """
    Metrics of a per-slot log.

    Args:
        slot_log (pd.DataFrame): Per-slot log (:code:`slots.csv`)
        config (ExperimentConfig): Configuration (convergence window)

    Returns:
        MetricsTable: Metrics
    """
    if slot_log.empty:
        raise ValueError("Empty slot log")

    slots = slot_log.copy()
    slots["log_utility"] = np.log1p(slots["satisfaction"])
    slots["converged"] = _converged(slots, config.cdf_window)
    slots["throughput_ratio"] = slots["throughput_mbps"] / slots["tput_req"]
    slots["delay_ratio"] = slots["delay_ms"] / slots["delay_req"]

    utility = (
        slots.groupby(["scheme", "phase", "t"], sort=False)
        .agg(utility=("log_utility", "sum"), converged=("converged", "first"))
        .reset_index()
    )

    summary_rows, cdf_rows = [], []
    for (scheme, phase), data in slots.groupby(["scheme", "phase"], sort=False):
        window = data[data["converged"]]
        phase_utility = utility[(utility["scheme"] == scheme) & (utility["phase"] == phase)]
        cdf = compute_cdf(window["satisfaction"])
        summary_rows.append(
            {
                "scheme": scheme,
                "phase": phase,
                "num_slots": int(data["t"].nunique()),
                "mean_satisfaction": float(data["satisfaction"].mean()),
                "converged_satisfaction": float(window["satisfaction"].mean()),
                "p_satisfied": cdf.prob_one,
                "mean_utility": float(phase_utility["utility"].mean()),
                "converged_utility": float(
                    phase_utility.loc[phase_utility["converged"], "utility"].mean()
                ),
            }
        )
        cdf_rows.extend(
            {"scheme": scheme, "phase": phase, "satisfaction": s, "cdf": p}
            for s, p in zip(cdf.support, cdf.probabilities)
        )

    slices = (
        slots.groupby(["scheme", "phase", "slice_id"], sort=False)
        .agg(
            mean_throughput_ratio=("throughput_ratio", "mean"),
            mean_delay_ratio=("delay_ratio", "mean"),
            mean_satisfaction=("satisfaction", "mean"),
        )
        .reset_index()
    )
    p_slices = (
        slots[slots["converged"]]
        .assign(satisfied=lambda df: df["satisfaction"] == 1.0)
        .groupby(["scheme", "phase", "slice_id"], sort=False)["satisfied"]
        .mean()
        .rename("p_satisfied")
        .reset_index()
    )
    slices = slices.merge(p_slices, on=["scheme", "phase", "slice_id"], how="left")

    return MetricsTable(
        summary=pd.DataFrame(summary_rows),
        slices=slices,
        cdf=pd.DataFrame(cdf_rows, columns=["scheme", "phase", "satisfaction", "cdf"]),
        utility=utility[["scheme", "phase", "t", "utility"]],
        slots=slot_log,
    )


def emit_outputs(
    metrics: MetricsTable,
    out_dir: AnyPathStrType,
    csv: bool = True,
    figures: bool = True,
    masks: Optional[dict] = None,
    test_errors: Optional[np.ndarray] = None,
) -> list:
    """
    Write the metrics CSVs, the per-slot log and the figures.

    One throughput figure per scheme and slice, one CDF figure per scheme, in :code:`figures/`.
    Traffic masks and estimator errors, if given, go to :code:`supplementary/`.

    Args:
        metrics (MetricsTable): Metrics
        out_dir (AnyPathStrType): Output directory (created if needed)
        csv (bool): Write the CSVs
        figures (bool): Write the figures
        masks (Optional[dict]): Traffic masks to plot
        test_errors (Optional[np.ndarray]): Held-out absolute errors of the estimator

    Returns:
        list: Written paths
    """
    out_dir = AnyPath(out_dir)
    written = []
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        if csv:
            for name, frame in (
                ("summary", metrics.summary),
                ("slices", metrics.slices),
                ("cdf", metrics.cdf),
                ("utility", metrics.utility),
                ("slots", metrics.slots),
            ):
                path = out_dir / f"{name}.csv"
                frame.to_csv(path, index=False, float_format="%.17g")
                written.append(path)

        if figures:
            fig_dir = out_dir / "figures"
            schemes = misc.unique(metrics.slots["scheme"])
            slice_ids = sorted(int(s) for s in metrics.slots["slice_id"].unique())
            for scheme in schemes:
                for slice_id in slice_ids:
                    path = fig_dir / f"throughput_{scheme}_slice{slice_id}.svg"
                    plots.plot_throughput(metrics.slots, scheme, slice_id, path)
                    written.append(path)
                path = fig_dir / f"cdf_{scheme}.svg"
                plots.plot_cdf(metrics.cdf, scheme, path)
                written.append(path)

            if masks:
                path = out_dir / "supplementary" / "traffic_masks.svg"
                plots.plot_traffic_masks(masks, path)
                written.append(path)
            if test_errors is not None:
                path = out_dir / "supplementary" / "estimator_errors.svg"
                plots.plot_error_histogram(test_errors, path)
                written.append(path)
    except OSError as exc:
        raise OSError(f"Cannot write the outputs in {out_dir}: {exc}") from exc

    LOGGER.info("%d output files written in %s", len(written), out_dir)
    return written


def read_slot_log(run_dir: AnyPathStrType) -> pd.DataFrame:
    """Read the per-slot log of a run directory"""
    path = AnyPath(run_dir) / "slots.csv"
    if not path.is_file():
        raise FileNotFoundError(f"No per-slot log in {run_dir}")
    return pd.read_csv(path, float_precision="round_trip")


def _save_failure(out_dir, stage: str, exc: Exception) -> None:
    try:
        files.save_json({"stage": stage, "error": str(exc)}, out_dir / "failure.json")
    except OSError:
        LOGGER.exception("Cannot persist the failure report in %s", out_dir)


def run_experiment(config: ExperimentConfig, progress: bool = False) -> MetricsTable:
    """
    Full phased experiment, writing every artifact in :code:`config.output_dir`.

    Args:
        config (ExperimentConfig): Configuration
        progress (bool): Show progress bars

    Returns:
        MetricsTable: Metrics

    Raises:
        StageError: Failure of a stage (outputs of the completed stages are kept)
    """
    validate_config(config)
    out_dir = AnyPath(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    files.save_json(config_to_dict(config), out_dir / "config.json")
    LOGGER.info("Running the %d-scheme experiment in %s (seed %d)", len(config.schemes), out_dir, config.seed)

    stage = "collect"
    try:
        collected = collect_dataset(config, progress)
        netsim.write_kpi_csv(collected.records, out_dir / "kpi_h0.csv")
        dataset.save(collected.samples, out_dir / "dataset.csv", config.sim.history)
        files.save_obj(collected.state, out_dir / "h0_state.pkl")

        stage = "train"
        model, report = train_estimator(collected.samples, config, progress)
        estimator.save(model, out_dir / "estimator.json")
        files.save_json(
            {
                "test_mae": report.test_mae,
                "epoch_losses": report.epoch_losses,
                "wall_clock": report.wall_clock,
                "seed": report.seed,
            },
            out_dir / "train_report.json",
        )

        stage = "online"
        slot_log = run_online(config, model, collected.state, progress)

        stage = "outputs"
        metrics = compute_metrics(slot_log, config)
        emit_outputs(
            metrics,
            out_dir,
            masks=collected.state.masks,
            test_errors=report.test_errors,
        )
    except StageError as exc:
        _save_failure(out_dir, exc.stage, exc)
        raise
    except Exception as exc:
        _save_failure(out_dir, stage, exc)
        raise StageError(stage, str(exc)) from exc

    LOGGER.info("\n%s", metrics.summary.to_string(index=False))
    return metrics
