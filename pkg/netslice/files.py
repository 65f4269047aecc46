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
"""Tools for files: JSON documents, pickles and content digests"""

import hashlib
import json
import logging
from enum import Enum
from json import JSONEncoder
from pathlib import Path
from typing import Any

import dill
import numpy as np

from netslice import AnyPath
from netslice.logs import NS_NAME
from netslice.types import AnyPathStrType

LOGGER = logging.getLogger(NS_NAME)


# subclass JSONEncoder
class CustomEncoder(JSONEncoder):
    """Encoder for JSON with methods for numpy types, Enums and paths"""

    # pylint: disable=W0221
    def default(self, obj):
        """Overload of the default method"""
        if isinstance(obj, np.integer):
            out = int(obj)
        elif isinstance(obj, np.floating):
            out = float(obj)
        elif isinstance(obj, np.ndarray):
            out = obj.tolist()
        elif isinstance(obj, Enum):
            out = obj.value
        elif isinstance(obj, (set, tuple)):
            out = list(obj)
        elif isinstance(obj, Path) or hasattr(obj, "cloud_prefix"):
            out = str(obj)
        else:
            out = json.JSONEncoder.default(self, obj)

        return out


def read_json(json_file: AnyPathStrType, print_file: bool = True) -> dict:
    """
    Read a JSON file

    Args:
        json_file (AnyPathStrType): Path to JSON file
        print_file (bool): Print the configuration file (DEBUG level)

    Returns:
        dict: JSON data

    Example:
        >>> read_json("runs/desk/config.json", print_file=False)
        {"seed": 7, "scale": "desk", ...}
    """
    with AnyPath(json_file).open() as file:
        data = json.load(file)
        if print_file:
            LOGGER.debug(
                "Configuration file %s contains:\n%s",
                json_file,
                json.dumps(data, indent=3, cls=CustomEncoder),
            )
    return data


def save_json(json_dict: dict, output_json: AnyPathStrType, **kwargs) -> None:
    """
    Save a JSON file, with numpy types, Enum and path management.

    Python floats are written with their shortest round-trip representation,
    so reading the file back is lossless.

    Args:
        json_dict (dict): Json dictionary
        output_json (AnyPathStrType): Output file
        **kwargs: Other arguments passed to :code:`json.dump`

    Example:
        >>> save_json({"weights": np.ones((2, 2)), "scheme": SchemeName.TRAFFIC}, "model.json")
    """
    kwargs["indent"] = kwargs.get("indent", 3)
    kwargs["cls"] = kwargs.get("cls", CustomEncoder)

    with AnyPath(output_json).open("w") as output_file:
        json.dump(json_dict, output_file, **kwargs)


def save_obj(obj: Any, path: AnyPathStrType, **kwargs) -> None:
    """
    Save an object as a pickle (can save any Python objects, i.e. a simulator state).

    Args:
        obj (Any): Any object serializable
        path (AnyPathStrType): Path where to write the pickle

    Example:
        >>> save_obj(h0_state, "runs/desk/h0_state.pkl")
    """
    with AnyPath(path).open("wb+") as file:
        dill.dump(obj, file, **kwargs)


def load_obj(path: AnyPathStrType) -> Any:
    """
    Load a pickled object.

    Args:
        path (AnyPathStrType): Path of the pickle

    Returns:
        object (Any): Pickled object

    Example:
        >>> load_obj("runs/desk/h0_state.pkl")
        SimulatorState(t=200, ...)
    """
    with AnyPath(path).open("rb") as file:
        return dill.load(file)


# pylint: disable=E1121
def hash_file_content(file_content: str, len_param: int = 5) -> str:
    """
    Hash a string into a unique (short) hexadecimal key.

    Args:
        file_content (str): File content
        len_param (int): Length parameter for the hash (length of the key will be 2x this number)

    Returns:
        str: Hashed file content

    Example:
        >>> hash_file_content("t,cell_id,slice_id")
        "d3fad5bdf9"
    """
    hasher = hashlib.shake_256()
    hasher.update(str.encode(file_content))
    return hasher.hexdigest(len_param)


def hash_file(path: AnyPathStrType, len_param: int = 16) -> str:
    """
    Digest of the binary content of a file (used for determinism checks).

    Args:
        path (AnyPathStrType): File to hash
        len_param (int): Length parameter for the hash

    Returns:
        str: Hexadecimal digest
    """
    hasher = hashlib.shake_256()
    hasher.update(AnyPath(path).read_bytes())
    return hasher.hexdigest(len_param)
