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
"""Script testing the dataset assembly, augmentation and persistence"""

import logging

import numpy as np
import pytest

from ci.script_utils import make_sample, simulated_samples
from netslice import ci, dataset
from netslice.core import SliceSpec
from netslice.dataset import Provenance
from netslice.netsim import KpiRecord

ci.reduce_verbosity()


def _record(t, users=3, cqi=9, cell_id=0, slice_id=1):
    return KpiRecord(
        t=t,
        cell_id=cell_id,
        slice_id=slice_id,
        share=0.5,
        prb_utilization=0.25,
        active_users=users,
        channel_quality=cqi,
        throughput=1.0,
        delay=5.0,
        throughput_req=2.0,
        delay_req=10.0,
        served_load=3.0,
    )


def test_observation_features():
    """Test the canonical order of the observations"""
    z = dataset.observation_features([1, 2], [9, 8], SliceSpec(1, 2.0, 10.0))
    np.testing.assert_array_equal(z, [1, 2, 9, 8, 2.0, 10.0])

    sample = make_sample(x=0.3, history=2)
    np.testing.assert_array_equal(sample.input.as_array(), [0.3, 4, 5, 9, 8, 2, 10])
    ci.assert_val(sample.input.history, 2, "history")

    with pytest.raises(ValueError):
        dataset.observation_features([1, 2], [9], SliceSpec(1, 2.0, 10.0))


def test_assemble_samples(caplog):
    """Test the sample assembly"""
    records = [_record(t, users=t) for t in range(6)]
    with caplog.at_level(logging.WARNING):
        samples = dataset.assemble_samples(records[::-1], history=3)
    assert "3 records skipped" in caplog.text

    ci.assert_val(len(samples), 3, "first H slots have no history")
    first = samples[0]
    ci.assert_val(first.input.users_history, (0.0, 1.0, 2.0), "users history")
    ci.assert_val(first.input.x, 0.25, "resource input is the PRB utilization")
    ci.assert_val(first.label.value, 0.5, "label")
    ci.assert_val([s.group for s in samples], [0, 1, 2], "groups")
    assert all(s.provenance == Provenance.RAW for s in samples)

    # A gap breaks the history
    gap = [r for r in records if r.t != 1]
    ci.assert_val(len(dataset.assemble_samples(gap, 3)), 1, "gap")

    ci.assert_val(dataset.assemble_samples([], 3), [], "empty stream")
    with pytest.raises(ValueError):
        dataset.assemble_samples(records, 0)


def test_augment_rule_1():
    """Unsatisfied samples: requirements replaced by the achieved QoS"""
    raw = make_sample(x=0.3, label=0.5, throughput=1.0, delay=12.0)
    out = dataset.augment([raw])

    ci.assert_val(len(out), 2, "one copy")
    ci.assert_val(out[0], raw, "raw sample kept first")
    copy = out[1]
    ci.assert_val(copy.provenance, Provenance.RULE1, "provenance")
    ci.assert_val(copy.label.value, 1.0, "label")
    ci.assert_val(copy.input.throughput_req, raw.throughput, "throughput requirement")
    ci.assert_val(copy.input.delay_req, raw.delay, "delay requirement")
    ci.assert_val(copy.input.x, raw.input.x, "same resource")
    ci.assert_val(copy.input.users_history, raw.input.users_history, "same history")
    ci.assert_val(copy.group, raw.group, "same group")

    # Nothing served: no copy
    ci.assert_val(len(dataset.augment([make_sample(label=0.0, throughput=0.0)])), 1, "no copy")


def test_augment_rule_2():
    """Satisfied samples: more resource, still satisfied"""
    raws = [make_sample(x=x, label=1.0, group=i) for i, x in enumerate(np.linspace(0, 1, 11))]
    out = dataset.augment(raws, seed=4)

    ci.assert_val(len(out), 22, "one copy each")
    for raw, copy in zip(out[::2], out[1::2]):
        ci.assert_val(copy.provenance, Provenance.RULE2, "provenance")
        ci.assert_val(copy.label.value, 1.0, "label")
        assert raw.input.x <= copy.input.x <= 1.0
        ci.assert_val(copy.input.throughput_req, raw.input.throughput_req, "same requirement")

    # x = 1 stays at 1
    ci.assert_val(out[-1].input.x, 1.0, "saturated")

    # Seeded
    ci.assert_val(dataset.augment(raws, seed=4), out, "seeded")

    # Augmented samples are not augmented again
    ci.assert_val(len(dataset.augment(out)), len(out) + len(raws), "raw only")


def test_split():
    """Test the grouped split"""
    samples = dataset.augment(simulated_samples(num_steps=40))
    train, test = dataset.split(samples, 0.75, seed=1)

    ci.assert_val(len(train) + len(test), len(samples), "partition")
    assert not {s.group for s in train} & {s.group for s in test}

    num_groups = len({s.group for s in samples})
    ci.assert_val(len({s.group for s in train}), int(round(0.75 * num_groups)), "train groups")

    # Order kept, seeded
    ci.assert_val([s.group for s in train], sorted(s.group for s in train), "order")
    ci.assert_val(dataset.split(samples, 0.75, seed=1), (train, test), "seeded")

    for fraction in (0.0, 1.0, 1.5):
        with pytest.raises(ValueError):
            dataset.split(samples, fraction, 0)
    with pytest.raises(ValueError):
        dataset.split([], 0.5, 0)


def test_to_arrays():
    """Test the training arrays"""
    samples = simulated_samples(num_steps=20)
    inputs, labels = dataset.to_arrays(samples)
    ci.assert_val(inputs.shape, (len(samples), 13), "inputs")
    ci.assert_val(labels.shape, (len(samples),), "labels")
    assert np.all((labels >= 0) & (labels <= 1))

    counts = dataset.summarize(dataset.augment(samples))
    ci.assert_val(counts["raw"], len(samples), "summary")
    ci.assert_val(sum(counts.values()) >= len(samples), True, "summary total")

    with pytest.raises(ValueError):
        dataset.to_arrays([])


def test_save_load(tmp_path):
    """Test the dataset files"""
    samples = dataset.augment(simulated_samples(num_steps=20))
    path = tmp_path / "dataset.csv"
    dataset.save(samples, path)

    lines = path.read_text().splitlines()
    ci.assert_val(lines[0], "# netslice-dataset v1 H=5", "version line")
    ci.assert_val(lines[1].split(","), dataset.columns(5), "header")
    ci.assert_val(dataset.load(path), samples, "lossless")

    # Byte-identical
    path_2 = tmp_path / "dataset_2.csv"
    dataset.save(dataset.load(path), path_2)
    ci.assert_files_equal(path, path_2)

    # Empty datasets
    empty = tmp_path / "empty.csv"
    dataset.save([], empty, history=5)
    ci.assert_val(dataset.load(empty), [], "empty dataset")
    with pytest.raises(ValueError):
        dataset.save([], empty)

    blank = tmp_path / "blank.csv"
    blank.write_text("")
    ci.assert_val(dataset.load(blank), [], "blank file")


def test_load_errors(tmp_path):
    """Malformed files are reported with their line"""
    samples = simulated_samples(num_steps=8)
    path = tmp_path / "dataset.csv"
    dataset.save(samples, path)
    lines = path.read_text().splitlines()

    bad_version = tmp_path / "bad_version.csv"
    bad_version.write_text("\n".join(["# netslice-dataset v9 H=5"] + lines[1:]) + "\n")
    with pytest.raises(ValueError, match="version"):
        dataset.load(bad_version)

    not_dataset = tmp_path / "not_dataset.csv"
    not_dataset.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError, match="line 1"):
        dataset.load(not_dataset)

    bad_header = tmp_path / "bad_header.csv"
    bad_header.write_text("\n".join([lines[0], lines[1].replace("v_1", "u_1")] + lines[2:]) + "\n")
    with pytest.raises(ValueError, match="line 2"):
        dataset.load(bad_header)

    # Missing value on the second data row (line 4)
    fields = lines[3].split(",")
    fields[0] = ""
    missing = tmp_path / "missing.csv"
    missing.write_text("\n".join(lines[:3] + [",".join(fields)] + lines[4:]) + "\n")
    with pytest.raises(ValueError, match="line 4"):
        dataset.load(missing)

    # Unknown provenance on the first data row (line 3)
    fields = lines[2].split(",")
    fields[-4] = "magic"
    unknown = tmp_path / "unknown.csv"
    unknown.write_text("\n".join(lines[:2] + [",".join(fields)] + lines[3:]) + "\n")
    with pytest.raises(ValueError, match="line 3"):
        dataset.load(unknown)
