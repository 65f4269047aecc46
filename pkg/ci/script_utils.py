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
"""Shared helpers of the CI suites"""

from dataclasses import replace

import numpy as np

from netslice import dataset, netsim
from netslice.core import SatisfactionLevel
from netslice.dataset import ObservationVector, Provenance, Sample
from netslice.harness import PhaseConfig, default_config
from netslice.netsim import SimConfig

KAPUT_KWARGS = {"fdezf": 0}


class ExpSurrogate:
    """
    Known strictly concave slice model :code:`f(x) = 1 - exp(-a x)`,
    :code:`a` being read in one column of the observations.
    """

    def __init__(self, column: int = 0, offset: float = 0.0):
        self.column = column
        self.offset = offset

    def batch_forward_and_grad(self, x, z) -> tuple:
        x = np.asarray(x, dtype=np.float64).ravel()
        z = np.atleast_2d(np.asarray(z, dtype=np.float64))
        rate = self.offset + np.broadcast_to(z[:, self.column], x.shape)
        decay = np.exp(-rate * x)
        return 1.0 - decay, rate * decay


class LogisticSurrogate:
    """
    Step-like slice model :code:`f(x) = sigmoid(k (x - c))`, shaped as a trained estimator:
    the steepness :code:`k` and the center :code:`c` are read in the first two observation columns.
    """

    def batch_forward_and_grad(self, x, z) -> tuple:
        x = np.asarray(x, dtype=np.float64).ravel()
        z = np.atleast_2d(np.asarray(z, dtype=np.float64))
        steepness = np.broadcast_to(z[:, 0], x.shape)
        center = np.broadcast_to(z[:, 1], x.shape)
        values = 1.0 / (1.0 + np.exp(-steepness * (x - center)))
        return values, steepness * values * (1.0 - values)


class BrokenModel:
    """Model failing at every evaluation"""

    def batch_forward_and_grad(self, x, z) -> tuple:
        raise FloatingPointError("kaput")


def kkt_allocation(rates: np.ndarray) -> np.ndarray:
    """
    Closed-form maximizer of :code:`sum ln(2 - exp(-a_s x_s))` under :code:`sum x_s = 1`, x in [0, 1].

    Stationarity gives :code:`x_s(lambda) = clip(ln((a_s + lambda) / (2 lambda)) / a_s, 0, 1)`,
    the multiplier being found by bisection.
    """
    rates = np.asarray(rates, dtype=np.float64)

    def shares(lam: float) -> np.ndarray:
        return np.clip(np.log((rates + lam) / (2.0 * lam)) / rates, 0.0, 1.0)

    low, high = 1e-12, float(rates.max())
    for _ in range(200):
        mid = 0.5 * (low + high)
        if shares(mid).sum() > 1.0:
            low = mid
        else:
            high = mid
    return shares(0.5 * (low + high))


def small_sim_config(**kwargs) -> SimConfig:
    """Two cells, three slices"""
    params = {"num_cells": 2, "active_slices": (1, 2, 4), "seed": 7}
    params.update(kwargs)
    return SimConfig(**params)


def tiny_experiment_config(tmp_path, **kwargs):
    """Smallest meaningful experiment: two cells, short phases, a shallow estimator"""
    base = default_config("desk")
    config = replace(
        base,
        sim=replace(base.sim, num_cells=2),
        phases=PhaseConfig(60, 20, 20),
        estimator=replace(base.estimator, hidden_sizes=(8,), epochs=5),
        output_dir=str(tmp_path),
    )
    return replace(config, **kwargs)


def make_sample(
    x: float = 0.3,
    label: float = 0.5,
    throughput: float = 1.0,
    delay: float = 12.0,
    provenance: Provenance = Provenance.RAW,
    group: int = 0,
    history: int = 3,
) -> Sample:
    """Hand-made sample with a 2 Mbit/s - 10 ms requirement"""
    return Sample(
        input=ObservationVector(
            x=x,
            users_history=[4.0 + i for i in range(history)],
            cqi_history=[9.0 - i for i in range(history)],
            throughput_req=2.0,
            delay_req=10.0,
        ),
        label=SatisfactionLevel(label),
        provenance=provenance,
        group=group,
        throughput=throughput,
        delay=delay,
    )


def simulated_samples(num_steps: int = 80, num_cells: int = 2, seed: int = 3) -> list:
    """Raw samples of an equal-split run of the simulator"""
    state = netsim.init(small_sim_config(num_cells=num_cells, seed=seed))
    records = []
    for _ in range(num_steps):
        state, step_records = netsim.step(
            state, {c: [1.0 / 3.0] * 3 for c in state.cell_ids}
        )
        records.extend(step_records)
    return dataset.assemble_samples(records, state.config.history)
