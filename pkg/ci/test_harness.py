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
"""Script testing the experiment harness"""

from dataclasses import replace

import numpy as np
import pandas as pd
import pytest

from ci.script_utils import KAPUT_KWARGS, tiny_experiment_config
from netslice import ci, dataset, estimator, files, harness, netsim
from netslice.core import PartitionVector
from netslice.harness import ConfigError, PhaseConfig, StageError

ci.reduce_verbosity()


def test_default_config():
    """Test the presets"""
    full = harness.default_config("full")
    ci.assert_val(full.sim.num_cells, 12, "full cells")
    ci.assert_val(full.phases, PhaseConfig(1000, 2000, 2000), "full phases")

    desk = harness.default_config("desk")
    ci.assert_val(desk.sim.num_cells, 3, "desk cells")
    ci.assert_val(desk.phases, PhaseConfig(200, 400, 400), "desk phases")
    ci.assert_val(desk.h2_slices, (1, 2, 3, 4), "new slice in h2")
    ci.assert_val(desk.sim.spec_for(1).throughput_req, 2.0, "slice 1")
    ci.assert_val(desk.sim.spec_for(4).delay_req, 50.0, "slice 4")
    harness.validate_config(desk)
    harness.validate_config(full)

    with pytest.raises(ValueError):
        harness.default_config("huge")


def test_derive_seeds():
    """Test the seed derivation"""
    seeds = harness.derive_seeds(0)
    ci.assert_val(list(seeds), list(harness.SEED_NAMES), "one seed per stage")
    ci.assert_val(harness.derive_seeds(0), seeds, "deterministic")
    ci.assert_val(len(set(seeds.values())), len(seeds), "distinct")
    assert harness.derive_seeds(1) != seeds


def test_validate_config():
    """Test the configuration checks"""
    desk = harness.default_config("desk")
    for kwargs in [
        {"h2_slices": (1, 2, 4)},
        {"h1_slices": ()},
        {"h0_slices": (1, 9)},
        {"phases": PhaseConfig(100, 0, 10)},
        {"schemes": ()},
        {"schemes": ("greedy",)},
        {"cdf_window": 0.0},
        {"workers": -1},
        {"exploration_alpha": 0.0},
        {"sim": replace(desk.sim, num_cells=0)},
        {"estimator": replace(desk.estimator, train_fraction=1.0)},
    ]:
        with pytest.raises(ConfigError):
            harness.validate_config(replace(desk, **kwargs))


def test_config_from_dict():
    """Test the configuration dictionaries"""
    config = harness.config_from_dict(
        {
            "scale": "desk",
            "seed": 3,
            "phases": {"h0": 300},
            "sim": {"num_cells": 2, "mean_users": {"1": 4, "2": 2, "3": 3, "4": 1}},
            "estimator": {"hidden_sizes": [8, 4]},
            "schemes": ["lagrangian", "traffic"],
        }
    )
    ci.assert_val(config.seed, 3, "seed")
    ci.assert_val(config.phases, PhaseConfig(300, 400, 400), "partial section")
    ci.assert_val(config.sim.num_cells, 2, "sim")
    ci.assert_val(config.sim.mean_users[3], 3.0, "int keys")
    ci.assert_val(config.estimator.hidden_sizes, (8, 4), "hidden sizes")
    ci.assert_val(config.schemes, ("lagrangian", "traffic"), "schemes")

    ci.assert_val(harness.config_from_dict({"scale": "full"}).sim.num_cells, 12, "scale")
    ci.assert_val(harness.config_from_dict({"schemes": "traffic"}).schemes, ("traffic",), "single scheme")

    for data in [
        KAPUT_KWARGS,
        {"scale": "huge"},
        {"sim": {"bogus": 1}},
        {"sim": 3},
        {"sim": {"mean_users": [1, 2]}},
        {"phases": {"h3": 100}},
        {"solver": {"num_starts": 0}},
        {"h2_slices": [1, 2, 4]},
    ]:
        with pytest.raises(ConfigError):
            harness.config_from_dict(data)


def test_load_config(tmp_path):
    """A resolved configuration is read back unchanged"""
    config = harness.config_from_dict({"seed": 5, "sim": {"num_cells": 2}})
    path = tmp_path / "config.json"
    files.save_json(harness.config_to_dict(config), path)
    ci.assert_val(harness.load_config(path), config, "lossless")

    # Overrides, None values ignored
    overridden = harness.load_config(path, seed=None, output_dir=str(tmp_path / "run"))
    ci.assert_val(overridden.seed, 5, "ignored override")
    ci.assert_val(overridden.output_dir, str(tmp_path / "run"), "override")

    ci.assert_val(harness.load_config(scale="full").phases.h1, 2000, "preset only")

    with pytest.raises(ConfigError):
        harness.load_config(tmp_path / "missing.json")

    broken = tmp_path / "broken.json"
    broken.write_text('{"seed": ')
    with pytest.raises(ConfigError):
        harness.load_config(broken)

    not_object = tmp_path / "list.json"
    not_object.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        harness.load_config(not_object)


def test_exploration_partition():
    """The exploration policy covers the feasible set"""
    rng = np.random.default_rng(0)
    draws = np.array([harness.exploration_partition(rng, 3).shares for _ in range(2000)])

    for draw in draws:
        ci.assert_partition_feasible(PartitionVector(draw), 3)
    assert np.all(draws.sum(axis=1) < 1.0)

    # Uniform over the simplex with slack: mean of every share is 1 / (S + 1)
    np.testing.assert_allclose(draws.mean(axis=0), 0.25, atol=0.02)
    assert draws.max() > 0.8 and draws.sum(axis=1).min() < 0.3


def test_compute_cdf():
    """Test the empirical CDF"""
    cdf = harness.compute_cdf([1.0, 0.5])
    ci.assert_val(cdf(0.2), 0.0, "below")
    ci.assert_val(cdf(0.5), 0.5, "right-continuous")
    ci.assert_val(cdf(1.0), 1.0, "at one")
    ci.assert_val(cdf.prob_one, 0.5, "P(s = 1)")
    np.testing.assert_array_equal(cdf.support, [0.5, 1.0])
    np.testing.assert_array_equal(cdf.probabilities, [0.5, 1.0])

    ci.assert_val(harness.compute_cdf([1.0] * 4).prob_one, 1.0, "all satisfied")
    ci.assert_val(harness.compute_cdf([0.0, 0.0, 0.3])(0.0), 2 / 3, "ties")

    for bad in ([], [0.5, 1.2], [np.nan]):
        with pytest.raises(ValueError):
            harness.compute_cdf(bad)


def _slot_log():
    """One cell, one slice, ten slots per phase, satisfied over the second half of h1"""
    rows = []
    for phase, offset in (("h1", 0), ("h2", 10)):
        for t in range(offset, offset + 10):
            satisfied = phase == "h1" and t >= 5
            rows.append(
                {
                    "scheme": "equal",
                    "phase": phase,
                    "t": t,
                    "cell_id": 0,
                    "slice_id": 1,
                    "throughput_mbps": 2.0 if satisfied else 1.0,
                    "delay_ms": 5.0,
                    "tput_req": 2.0,
                    "delay_req": 10.0,
                    "satisfaction": 1.0 if satisfied else 0.5,
                }
            )
    return pd.DataFrame(rows)


def test_compute_metrics():
    """Test the metrics of a per-slot log"""
    config = harness.default_config("desk")
    metrics = harness.compute_metrics(_slot_log(), config)

    summary = metrics.summary.set_index("phase")
    ci.assert_val(summary.loc["h1", "num_slots"], 10, "slots")
    ci.assert_val(summary.loc["h1", "mean_satisfaction"], 0.75, "mean satisfaction")
    ci.assert_val(summary.loc["h1", "converged_satisfaction"], 1.0, "converged satisfaction")
    ci.assert_val(summary.loc["h1", "p_satisfied"], 1.0, "P(s = 1)")
    ci.assert_val(summary.loc["h2", "p_satisfied"], 0.0, "h2")
    assert abs(summary.loc["h1", "converged_utility"] - np.log(2.0)) < 1e-12

    slices = metrics.slices.set_index("phase")
    ci.assert_val(slices.loc["h1", "mean_throughput_ratio"], 0.75, "throughput ratio")
    ci.assert_val(slices.loc["h2", "mean_delay_ratio"], 0.5, "delay ratio")

    ci.assert_val(len(metrics.utility), 20, "one utility per slot")
    ci.assert_val(list(metrics.cdf.columns), ["scheme", "phase", "satisfaction", "cdf"], "cdf columns")

    # The whole phase as window
    whole = harness.compute_metrics(_slot_log(), replace(config, cdf_window=1.0))
    ci.assert_val(whole.summary.set_index("phase").loc["h1", "p_satisfied"], 0.5, "whole phase")

    with pytest.raises(ValueError):
        harness.compute_metrics(_slot_log().iloc[:0], config)


def _check_run(out_dir, metrics, config):
    for name in [
        "config.json",
        "kpi_h0.csv",
        "dataset.csv",
        "h0_state.pkl",
        "estimator.json",
        "train_report.json",
        "summary.csv",
        "slices.csv",
        "cdf.csv",
        "utility.csv",
        "slots.csv",
        "supplementary/traffic_masks.svg",
        "supplementary/estimator_errors.svg",
    ]:
        assert (out_dir / name).is_file(), f"{name} missing"

    slice_ids = sorted(set(config.h1_slices) | set(config.h2_slices))
    figures = sorted(p.name for p in (out_dir / "figures").glob("*.svg"))
    ci.assert_val(len(figures), len(config.schemes) * (len(slice_ids) + 1), "figures")

    # Hard feasibility of every partition
    slots = harness.read_slot_log(out_dir)
    assert (slots["share"] >= 0.0).all()
    sums = slots.groupby(["scheme", "phase", "t", "cell_id"])["share"].sum()
    assert (sums <= 1.0 + 1e-9).all(), sums.max()

    # The new slice only appears in h2
    ci.assert_val(sorted(slots.loc[slots["phase"] == "h1", "slice_id"].unique()), list(config.h1_slices), "h1")
    ci.assert_val(sorted(slots.loc[slots["phase"] == "h2", "slice_id"].unique()), list(config.h2_slices), "h2")

    ci.assert_val(len(metrics.summary), 2 * len(config.schemes), "summary rows")
    ci.assert_val(harness.load_config(out_dir / "config.json"), config, "config persisted")
    assert isinstance(files.load_obj(out_dir / "h0_state.pkl"), netsim.SimulatorState)
    ci.assert_val(estimator.load(out_dir / "estimator.json").input_dim, 13, "estimator")


def test_run_experiment(tmp_path):
    """Full phased run on a tiny network, deterministic whatever the number of workers"""
    config = tiny_experiment_config(tmp_path / "a")
    metrics = harness.run_experiment(config)
    _check_run(tmp_path / "a", metrics, config)

    # Same seed, concurrent replicas: identical outputs
    config_b = replace(config, output_dir=str(tmp_path / "b"), workers=2)
    harness.run_experiment(config_b)
    ci.assert_dir_equal(tmp_path / "a", tmp_path / "b", pattern="*.csv")
    ci.assert_dir_equal(tmp_path / "a", tmp_path / "b", pattern="*.svg")

    # The metrics can be recomputed from the per-slot log
    recomputed = harness.compute_metrics(harness.read_slot_log(tmp_path / "a"), config)
    pd.testing.assert_frame_equal(recomputed.summary, metrics.summary)


def _small_estimator(config):
    return replace(
        config,
        estimator=replace(
            config.estimator, hidden_sizes=(16, 8), epochs=60, learning_rate=5e-3, batch_size=32
        ),
    )


def test_estimator_quality_small(tmp_path):
    """On a short exploration phase, the estimator clearly beats the best constant predictor"""
    config = _small_estimator(tiny_experiment_config(tmp_path, phases=PhaseConfig(120, 20, 20)))
    collected = harness.collect_dataset(config)
    model, report = harness.train_estimator(collected.samples, config)

    _, test_set = dataset.split(
        collected.samples, config.estimator.train_fraction, harness.derive_seeds(config.seed)["split"]
    )
    assert abs(estimator.evaluate(model, test_set) - report.test_mae) < 1e-12

    _, labels = dataset.to_arrays(test_set)
    median_mae = float(np.abs(labels - np.median(labels)).mean())
    assert report.test_mae < 0.85 * median_mae, (report.test_mae, median_mae)


def test_reconfiguration_small(tmp_path):
    """A new slice is served without retraining and the utility recovers within the first h2 slots"""
    config = _small_estimator(
        tiny_experiment_config(
            tmp_path, schemes=("lagrangian", "traffic"), phases=PhaseConfig(120, 40, 40)
        )
    )
    metrics = harness.run_experiment(config)

    slots = metrics.slots
    new_slices = sorted(set(config.h2_slices) - set(config.h1_slices))
    h2 = slots[(slots["scheme"] == "lagrangian") & (slots["phase"] == "h2")]
    assert h2.loc[h2["slice_id"].isin(new_slices), "share"].sum() > 0.0

    utility = metrics.utility[metrics.utility["scheme"] == "lagrangian"]
    h1 = utility.loc[utility["phase"] == "h1", "utility"]
    h1_converged = h1.iloc[len(h1) // 2 :].mean()
    h2_start = utility.loc[utility["phase"] == "h2", "utility"].iloc[:20]
    assert (h2_start >= 0.9 * h1_converged).any(), (h2_start.max(), h1_converged)


def test_trace(tmp_path):
    """Optimizer traces are dumped for the lagrangian scheme only"""
    config = tiny_experiment_config(
        tmp_path, schemes=("lagrangian", "equal"), trace=True, phases=PhaseConfig(40, 3, 3)
    )
    harness.run_experiment(config)
    traces = list((tmp_path / "traces").glob("trace_c*_t*.csv"))
    ci.assert_val(len(traces), config.sim.num_cells * 6, "one trace per cell and slot")


def test_stage_error(tmp_path, monkeypatch):
    """A failing stage is reported and the previous outputs are kept"""

    def _broken_train(*args, **kwargs):
        raise FloatingPointError("Training diverged at epoch 0")

    monkeypatch.setattr(estimator, "train", _broken_train)
    config = tiny_experiment_config(tmp_path)
    with pytest.raises(StageError, match="epoch 0") as exc_info:
        harness.run_experiment(config)

    ci.assert_val(exc_info.value.stage, "train", "stage")
    ci.assert_val(files.read_json(tmp_path / "failure.json")["stage"], "train", "failure report")
    assert (tmp_path / "dataset.csv").is_file()
    assert not (tmp_path / "estimator.json").exists()

    with pytest.raises(FileNotFoundError):
        harness.read_slot_log(tmp_path)
