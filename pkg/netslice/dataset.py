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
Estimator training sets: feature assembly from KPI streams, labels, augmentation,
leakage-free splitting and CSV persistence.

A sample input is :code:`[x, v_1..v_H, q_1..q_H, tput_req, delay_req]` where :code:`x` is
the PRB utilization of the slice at slot t and :code:`v`, :code:`q` the user counts and CQIs
over [t-H, t-1] (oldest first).
"""

import logging
import re
from collections import Counter, defaultdict
from dataclasses import dataclass, replace
from enum import unique

import numpy as np
import pandas as pd

from netslice import AnyPath
from netslice.core import SatisfactionLevel, SliceSpec, satisfaction_values
from netslice.logs import NS_NAME
from netslice.misc import ListEnum
from netslice.types import AnyFloatVector, AnyPathStrType

LOGGER = logging.getLogger(NS_NAME)

DATASET_VERSION = 1
_VERSION_RE = re.compile(r"^# netslice-dataset v(\d+) H=(\d+)\s*$")
_PANDAS_LINE_RE = re.compile(r"line (\d+)")


@unique
class Provenance(ListEnum):
    """Origin of a sample"""

    RAW = "raw"
    RULE1 = "augmented_rule1"
    RULE2 = "augmented_rule2"


@dataclass(frozen=True)
class ObservationVector:
    """Resource input and local observations of one slice at one slot"""

    x: float
    users_history: tuple
    cqi_history: tuple
    throughput_req: float
    delay_req: float

    def __post_init__(self):
        object.__setattr__(self, "users_history", tuple(float(v) for v in self.users_history))
        object.__setattr__(self, "cqi_history", tuple(float(q) for q in self.cqi_history))
        if len(self.users_history) < 1 or len(self.users_history) != len(self.cqi_history):
            raise ValueError(
                f"User and CQI histories should have the same length H >= 1 "
                f"({len(self.users_history)} != {len(self.cqi_history)})"
            )

    @property
    def history(self) -> int:
        return len(self.users_history)

    def features(self) -> np.ndarray:
        """Local observations z (2H + 2)"""
        return np.array(
            [*self.users_history, *self.cqi_history, self.throughput_req, self.delay_req],
            dtype=np.float64,
        )

    def as_array(self) -> np.ndarray:
        """Full estimator input [x, z] (2H + 3)"""
        return np.concatenate([[self.x], self.features()])


@dataclass(frozen=True)
class Sample:
    """One labeled estimator sample"""

    input: ObservationVector
    label: SatisfactionLevel
    provenance: Provenance
    group: int
    """Id of the raw sample this one derives from (leakage guard of the split)"""

    throughput: float
    """Achieved throughput (Mbit/s)"""

    delay: float
    """Achieved delay (ms)"""


def observation_features(
    users_history: AnyFloatVector, cqi_history: AnyFloatVector, spec: SliceSpec
) -> np.ndarray:
    """
    Build the local observations z of a slice, in the canonical order.

    Args:
        users_history (AnyFloatVector): Users over [t-H, t-1]
        cqi_history (AnyFloatVector): CQIs over [t-H, t-1]
        spec (SliceSpec): Slice requirements

    Returns:
        np.ndarray: z (2H + 2)
    """
    users_history = np.asarray(users_history, dtype=np.float64).ravel()
    cqi_history = np.asarray(cqi_history, dtype=np.float64).ravel()
    if users_history.size < 1 or users_history.size != cqi_history.size:
        raise ValueError("User and CQI histories should have the same length H >= 1")
    return np.concatenate([users_history, cqi_history, [spec.throughput_req, spec.delay_req]])


def assemble_samples(kpi_stream: list, history: int) -> list:
    """
    Build one raw sample per (t, cell, slice) having a full [t-H, t-1] history in the stream.

    Args:
        kpi_stream (list): :py:class:`netslice.netsim.KpiRecord` list
        history (int): History length H

    Returns:
        list: Raw samples, sorted by (t, cell, slice)

    Example:
        >>> samples = assemble_samples(records, 5)
        >>> samples[0].input.as_array().size
        13
    """
    if history < 1:
        raise ValueError(f"History length should be at least 1, not {history}")

    by_key = defaultdict(dict)
    for rec in kpi_stream:
        by_key[(rec.cell_id, rec.slice_id)][rec.t] = rec

    ordered = sorted(kpi_stream, key=lambda r: (r.t, r.cell_id, r.slice_id))
    labels = satisfaction_values(
        [r.throughput for r in ordered],
        [r.delay for r in ordered],
        [r.throughput_req for r in ordered],
        [r.delay_req for r in ordered],
    ) if ordered else np.array([])

    samples = []
    skipped = 0
    for rec, label in zip(ordered, labels):
        past = by_key[(rec.cell_id, rec.slice_id)]
        window = [past.get(t) for t in range(rec.t - history, rec.t)]
        if any(w is None for w in window):
            skipped += 1
            continue

        samples.append(
            Sample(
                input=ObservationVector(
                    x=rec.prb_utilization,
                    users_history=[w.active_users for w in window],
                    cqi_history=[w.channel_quality for w in window],
                    throughput_req=rec.throughput_req,
                    delay_req=rec.delay_req,
                ),
                label=SatisfactionLevel(float(label)),
                provenance=Provenance.RAW,
                group=len(samples),
                throughput=rec.throughput,
                delay=rec.delay,
            )
        )

    if skipped:
        LOGGER.warning(
            "%d records skipped for lack of a %d-step history", skipped, history
        )
    return samples


def augment(samples: list, seed: int = 0) -> list:
    """
    Augment raw samples, keeping them alongside their copies:

    - unsatisfied samples (r < 1) get a copy whose requirements are the achieved
      throughput and delay, labeled 1 (skipped if nothing was served)
    - satisfied samples (r = 1) get a copy whose resource input is drawn uniformly
      in [x, 1], labeled 1

    Only raw samples are augmented. Draws of the second rule are sequential from :code:`seed`.

    Args:
        samples (list): Raw samples
        seed (int): Seed of the second rule

    Returns:
        list: Raw samples, each followed by its augmented copy
    """
    rng = np.random.default_rng(seed)
    one = SatisfactionLevel(1.0)
    out = []
    skipped = 0

    for sample in samples:
        out.append(sample)
        if sample.provenance != Provenance.RAW:
            continue

        if sample.label.value < 1.0:
            if not (sample.throughput > 0.0 and sample.delay > 0.0):
                skipped += 1
                continue
            new_input = replace(
                sample.input, throughput_req=sample.throughput, delay_req=sample.delay
            )
            provenance = Provenance.RULE1
        else:
            x = sample.input.x
            new_x = min(float(rng.uniform(x, 1.0)), 1.0)
            new_input = replace(sample.input, x=new_x)
            provenance = Provenance.RULE2

        out.append(replace(sample, input=new_input, label=one, provenance=provenance))

    if skipped:
        LOGGER.warning("%d unsatisfied samples without served traffic not augmented", skipped)
    return out


def split(samples: list, train_fraction: float, seed: int) -> tuple:
    """
    Seeded train/test split by parent group: augmented copies follow their raw sample.

    Args:
        samples (list): Samples
        train_fraction (float): Fraction of the groups in the train set, in (0, 1)
        seed (int): Seed of the shuffle

    Returns:
        tuple: Train samples, test samples (original order kept)

    Example:
        >>> train, test = split(samples, 0.75, 0)
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"Train fraction should be in (0, 1), not {train_fraction}")
    if not samples:
        raise ValueError("Cannot split an empty sample list")

    groups = list(dict.fromkeys(s.group for s in samples))
    order = np.random.default_rng(seed).permutation(len(groups))
    num_train = int(round(train_fraction * len(groups)))
    train_groups = {groups[i] for i in order[:num_train]}

    train = [s for s in samples if s.group in train_groups]
    test = [s for s in samples if s.group not in train_groups]
    return train, test


def to_arrays(samples: list) -> tuple:
    """
    Stack samples into estimator inputs and labels.

    Args:
        samples (list): Samples, all with the same H

    Returns:
        tuple: inputs (n, 2H + 3), labels (n,)
    """
    if not samples:
        raise ValueError("No sample to stack")
    inputs = np.stack([s.input.as_array() for s in samples])
    labels = np.array([s.label.value for s in samples], dtype=np.float64)
    return inputs, labels


def summarize(samples: list) -> dict:
    """Number of samples per provenance"""
    counts = Counter(s.provenance for s in samples)
    return {prov.value: counts.get(prov, 0) for prov in Provenance}


def columns(history: int) -> list:
    """CSV columns of a dataset with history length H"""
    return (
        ["x"]
        + [f"v_{i}" for i in range(1, history + 1)]
        + [f"q_{i}" for i in range(1, history + 1)]
        + ["tput_req", "delay_req", "label", "provenance", "group", "throughput", "delay"]
    )


def save(samples: list, path: AnyPathStrType, history: int = None) -> None:
    """
    Save samples as a versioned CSV (lossless floats).

    Args:
        samples (list): Samples, all with the same H
        path (AnyPathStrType): Output CSV
        history (int): H, only needed to write an empty dataset
    """
    if samples:
        history = samples[0].input.history
    elif history is None:
        raise ValueError("The history length is needed to save an empty dataset")

    rows = [
        [
            s.input.x,
            *s.input.users_history,
            *s.input.cqi_history,
            s.input.throughput_req,
            s.input.delay_req,
            s.label.value,
            s.provenance.value,
            s.group,
            s.throughput,
            s.delay,
        ]
        for s in samples
    ]
    frame = pd.DataFrame(rows, columns=columns(history))

    with AnyPath(path).open("w", newline="") as out_file:
        out_file.write(f"# netslice-dataset v{DATASET_VERSION} H={history}\n")
        frame.to_csv(out_file, index=False, float_format="%.17g", lineterminator="\n")

    LOGGER.debug("%d samples written to %s", len(samples), path)


def load(path: AnyPathStrType) -> list:
    """
    Load samples written by :py:func:`save`.

    Args:
        path (AnyPathStrType): Dataset CSV

    Returns:
        list: Samples

    Raises:
        ValueError: Unknown version, wrong header or malformed row (with its line number)
    """
    with AnyPath(path).open("r", newline="") as in_file:
        first_line = in_file.readline()
        if not first_line.strip():
            return []

        match = _VERSION_RE.match(first_line)
        if match is None:
            raise ValueError(f"{path}, line 1: not a netslice dataset ({first_line.strip()!r})")
        version, history = int(match.group(1)), int(match.group(2))
        if version != DATASET_VERSION:
            raise ValueError(
                f"{path}: unsupported dataset version {version} (expected {DATASET_VERSION})"
            )

        try:
            frame = pd.read_csv(
                in_file, float_precision="round_trip", dtype={"provenance": str}
            )
        except pd.errors.EmptyDataError:
            return []
        except pd.errors.ParserError as exc:
            line = _PANDAS_LINE_RE.search(str(exc))
            where = f"line {int(line.group(1)) + 1}" if line else "unknown line"
            raise ValueError(f"{path}, {where}: malformed row ({exc})") from exc

    expected = columns(history)
    if list(frame.columns) != expected:
        raise ValueError(f"{path}, line 2: unexpected header {list(frame.columns)}")

    nan_rows = np.flatnonzero(frame.isna().any(axis=1).to_numpy())
    if nan_rows.size:
        raise ValueError(f"{path}, line {nan_rows[0] + 3}: malformed row (missing values)")

    users_cols = [f"v_{i}" for i in range(1, history + 1)]
    cqi_cols = [f"q_{i}" for i in range(1, history + 1)]
    samples = []
    for idx, row in enumerate(frame.to_dict("records")):
        try:
            samples.append(
                Sample(
                    input=ObservationVector(
                        x=float(row["x"]),
                        users_history=[row[c] for c in users_cols],
                        cqi_history=[row[c] for c in cqi_cols],
                        throughput_req=float(row["tput_req"]),
                        delay_req=float(row["delay_req"]),
                    ),
                    label=SatisfactionLevel(float(row["label"])),
                    provenance=Provenance.from_value(row["provenance"]),
                    group=int(row["group"]),
                    throughput=float(row["throughput"]),
                    delay=float(row["delay"]),
                )
            )
        except (TypeError, ValueError) as exc:
            raise ValueError(f"{path}, line {idx + 3}: malformed row ({exc})") from exc

    return samples
