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
Static SVG figures of an experiment.

Figures are reproducible byte for byte: fixed hash salt, no date in the metadata.
"""

import logging

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402
from matplotlib.ticker import MaxNLocator  # noqa: E402

from netslice import AnyPath  # noqa: E402
from netslice.logs import NS_NAME  # noqa: E402
from netslice.types import AnyPathStrType  # noqa: E402

LOGGER = logging.getLogger(NS_NAME)

plt.rcParams["svg.hashsalt"] = NS_NAME

_PHASE_STYLES = {"h1": "-", "h2": "--"}


def _save(fig: plt.Figure, path: AnyPathStrType) -> None:
    path = AnyPath(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    with path.open("wb") as out_file:
        fig.savefig(out_file, format="svg", metadata={"Date": None})
    plt.close(fig)
    LOGGER.debug("Figure written to %s", path)


def _grid(ax: plt.Axes) -> None:
    ax.grid(True, linestyle="--", linewidth=0.5, alpha=0.7)
    ax.xaxis.set_major_locator(MaxNLocator(nbins=6))


def plot_throughput(
    slots: pd.DataFrame, scheme: str, slice_id: int, path: AnyPathStrType
) -> None:
    """
    Average user throughput of a slice (mean over the cells) against time, with its requirement.

    Args:
        slots (pd.DataFrame): Per-slot log
        scheme (str): Scheme to plot
        slice_id (int): Slice to plot
        path (AnyPathStrType): Output SVG
    """
    data = slots[(slots["scheme"] == scheme) & (slots["slice_id"] == slice_id)]
    fig, ax = plt.subplots(figsize=(10, 4))

    if not data.empty:
        series = data.groupby("t", sort=True)["throughput_mbps"].mean()
        ax.plot(series.index, series.to_numpy(), label=f"slice {slice_id}")
        ax.axhline(
            float(data["tput_req"].iloc[0]),
            color="red",
            linestyle="--",
            linewidth=1.5,
            label="requirement",
        )
        h2 = slots.loc[slots["phase"] == "h2", "t"]
        if not h2.empty:
            ax.axvline(int(h2.min()), color="grey", linestyle=":", label="new slice")
        ax.legend(loc="upper right")
    else:
        ax.text(0.5, 0.5, "slice not active", ha="center", transform=ax.transAxes)

    ax.set_title(f"{scheme}: slice {slice_id} throughput")
    ax.set_xlabel("Slot")
    ax.set_ylabel("Average user throughput (Mbit/s)")
    ax.set_ylim(bottom=0.0)
    _grid(ax)
    _save(fig, path)


def plot_cdf(cdf: pd.DataFrame, scheme: str, path: AnyPathStrType) -> None:
    """
    Empirical CDF of the converged satisfaction level of a scheme, one curve per phase.

    Args:
        cdf (pd.DataFrame): CDF table (scheme, phase, satisfaction, cdf)
        scheme (str): Scheme to plot
        path (AnyPathStrType): Output SVG
    """
    fig, ax = plt.subplots(figsize=(6, 4))
    for phase, data in cdf[cdf["scheme"] == scheme].groupby("phase", sort=True):
        support = np.concatenate([[0.0], data["satisfaction"].to_numpy()])
        values = np.concatenate([[0.0], data["cdf"].to_numpy()])
        ax.step(support, values, where="post", linestyle=_PHASE_STYLES.get(phase, "-"), label=phase)

    ax.set_title(f"{scheme}: converged QoS satisfaction")
    ax.set_xlabel("Satisfaction level")
    ax.set_ylabel("Empirical CDF")
    ax.set_xlim(0.0, 1.02)
    ax.set_ylim(0.0, 1.02)
    ax.legend(loc="upper left")
    _grid(ax)
    _save(fig, path)


def plot_traffic_masks(masks: dict, path: AnyPathStrType, num_steps: int = 200) -> None:
    """
    Traffic masks of every slice over the first steps.

    Args:
        masks (dict): Slice id -> :py:class:`netslice.netsim.TrafficMask`
        path (AnyPathStrType): Output SVG
        num_steps (int): Number of steps to plot
    """
    steps = np.arange(num_steps)
    fig, ax = plt.subplots(figsize=(10, 4))
    for slice_id in sorted(masks):
        ax.plot(steps, [masks[slice_id].value_at(t) for t in steps], label=f"slice {slice_id}")

    ax.set_title("Traffic masks")
    ax.set_xlabel("Step")
    ax.set_ylabel("Mask")
    ax.set_ylim(0.0, 1.0)
    ax.legend(loc="upper right")
    _grid(ax)
    _save(fig, path)


def plot_error_histogram(errors: np.ndarray, path: AnyPathStrType, bins: int = 40) -> None:
    """
    Histogram of the held-out absolute errors of the estimator.

    Args:
        errors (np.ndarray): Absolute errors
        path (AnyPathStrType): Output SVG
        bins (int): Number of bins
    """
    errors = np.asarray(errors, dtype=np.float64)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(errors, bins=bins, range=(0.0, 1.0), color="tab:blue", alpha=0.8)
    if errors.size:
        ax.axvline(float(errors.mean()), color="red", linestyle="--", label=f"MAE {errors.mean():.4f}")
        ax.legend(loc="upper right")

    ax.set_title("Estimator held-out absolute error")
    ax.set_xlabel("Absolute error")
    ax.set_ylabel("Samples")
    _grid(ax)
    _save(fig, path)
