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
Slice QoS estimator: a small feed-forward network mapping :code:`[x, z]` to a
predicted satisfaction level in [0, 1].

- softplus hidden layers, logistic output
- inputs standardized with statistics frozen at training time
- exact derivative of the output with respect to the resource input :code:`x`
- MAE training with Adam

The model file is a JSON document:

.. code-block:: text

    {
        "format": "netslice-estimator",
        "version": 1,
        "history": 5,
        "layer_sizes": [13, 36, 24, 16, 16, 1],
        "hidden_activation": "softplus",
        "output_activation": "sigmoid",
        "weights": [[[...]], ...],
        "biases": [[...], ...],
        "norm": {"shift": [...], "scale": [...]},
        "metadata": {"epochs": 200, "train_mae": ..., "test_mae": ..., "seed": 0, ...}
    }
"""

import logging
import time
from dataclasses import dataclass, field

import numpy as np
from tqdm import tqdm

from netslice import files
from netslice.dataset import to_arrays
from netslice.logs import NS_NAME
from netslice.misc import check_mandatory_keys
from netslice.types import AnyFloatVector, AnyPathStrType

LOGGER = logging.getLogger(NS_NAME)

MODEL_FORMAT = "netslice-estimator"
MODEL_VERSION = 1
DEFAULT_HIDDEN_SIZES = (36, 24, 16, 16)

HIDDEN_ACTIVATION = "softplus"
OUTPUT_ACTIVATION = "sigmoid"

# Adam
BETA_1 = 0.9
BETA_2 = 0.999
ADAM_EPS = 1e-8


def _sigmoid(z: np.ndarray) -> np.ndarray:
    # tanh form: stable for large |z| and bounded in [0, 1]
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _softplus(z: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, z)


@dataclass(frozen=True)
class EstimatorParams:
    """Architecture and training hyperparameters of the estimator"""

    hidden_sizes: tuple = DEFAULT_HIDDEN_SIZES
    epochs: int = 200
    learning_rate: float = 1e-3
    batch_size: int = 64
    label_margin: float = 0.01
    """Training targets are clipped to [margin, 1 - margin]"""

    train_fraction: float = 0.75
    seed: int = 0


@dataclass
class TrainReport:
    """Outcome of a training"""

    epoch_losses: list
    """Mean absolute error on the train set, per epoch"""

    test_mae: float
    wall_clock: float
    """Training duration (s)"""

    seed: int
    test_errors: np.ndarray = field(default_factory=lambda: np.array([]))
    """Absolute error of every held-out sample"""


class EstimatorModel:
    """
    Feed-forward QoS estimator.

    Weights are stored as :code:`(n_out, n_in)` matrices; batches are row-major.
    Once trained, a model is read-only and can be shared between threads.
    """

    def __init__(
        self,
        weights: list,
        biases: list,
        history: int,
        shift: AnyFloatVector = None,
        scale: AnyFloatVector = None,
        metadata: dict = None,
    ):
        self.weights = [np.array(w, dtype=np.float64, ndmin=2) for w in weights]
        self.biases = [np.array(b, dtype=np.float64).ravel() for b in biases]
        self.history = int(history)

        if len(self.weights) != len(self.biases) or not self.weights:
            raise ValueError("One bias vector per weight matrix is needed")
        if self.weights[0].shape[1] != self.input_dim:
            raise ValueError(
                f"Input layer width {self.weights[0].shape[1]} != 2H + 3 = {self.input_dim}"
            )
        for idx, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape[0] != b.size or (idx > 0 and w.shape[1] != self.weights[idx - 1].shape[0]):
                raise ValueError(f"Inconsistent shapes at layer {idx}")
        if self.weights[-1].shape[0] != 1:
            raise ValueError("The output layer should have a single neuron")

        self.shift = np.zeros(self.input_dim) if shift is None else np.asarray(shift, dtype=np.float64)
        self.scale = np.ones(self.input_dim) if scale is None else np.asarray(scale, dtype=np.float64)
        if self.shift.shape != (self.input_dim,) or self.scale.shape != (self.input_dim,):
            raise ValueError("Normalization statistics should have the input width")
        if np.any(self.scale <= 0):
            raise ValueError("Normalization scales should be positive")

        self.metadata = dict(metadata or {})

    def __repr__(self) -> str:
        return f"EstimatorModel(layer_sizes={self.layer_sizes})"

    @property
    def input_dim(self) -> int:
        return 2 * self.history + 3

    @property
    def layer_sizes(self) -> list:
        return [self.input_dim] + [w.shape[0] for w in self.weights]

    def copy(self) -> "EstimatorModel":
        return EstimatorModel(
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            self.history,
            self.shift.copy(),
            self.scale.copy(),
            dict(self.metadata),
        )

    def _check_inputs(self, inputs: np.ndarray) -> np.ndarray:
        inputs = np.asarray(inputs, dtype=np.float64)
        if inputs.ndim == 1:
            inputs = inputs[np.newaxis, :]
        if inputs.ndim != 2 or inputs.shape[1] != self.input_dim:
            raise ValueError(f"Inputs should have {self.input_dim} columns, not {inputs.shape}")
        if inputs.shape[0] == 0:
            raise ValueError("Empty batch")
        if not np.all(np.isfinite(inputs)):
            raise ValueError("Inputs should be finite (NaN or infinite value found)")
        return inputs

    def _forward(self, inputs: np.ndarray) -> tuple:
        """Forward pass keeping every pre-activation and activation for the backward pass"""
        act = (inputs - self.shift) / self.scale
        memory = [(None, act)]
        last = len(self.weights) - 1
        for idx, (w, b) in enumerate(zip(self.weights, self.biases)):
            pre = act @ w.T + b
            act = _sigmoid(pre) if idx == last else _softplus(pre)
            memory.append((pre, act))
        return memory, act[:, 0]

    def _backward(
        self, memory: list, d_out: np.ndarray, with_params: bool = True, from_logit: bool = False
    ) -> tuple:
        """
        Reverse pass from :code:`d_out` (derivative w.r.t. the output, per row).

        With :code:`from_logit`, :code:`d_out` is taken w.r.t. the output pre-activation instead.

        Returns the derivative w.r.t. the raw inputs and, if asked, the parameter gradients.
        """
        if from_logit:
            d_pre = np.asarray(d_out, dtype=np.float64)[:, np.newaxis]
        else:
            out = memory[-1][1][:, 0]
            d_pre = (d_out * out * (1.0 - out))[:, np.newaxis]
        grad_w, grad_b = [], []
        for idx in range(len(self.weights) - 1, -1, -1):
            prev_act = memory[idx][1]
            if with_params:
                grad_w.append(d_pre.T @ prev_act)
                grad_b.append(d_pre.sum(axis=0))
            d_act = d_pre @ self.weights[idx]
            if idx > 0:
                # softplus' = sigmoid
                d_pre = d_act * _sigmoid(memory[idx][0])
        d_inputs = d_act / self.scale
        return d_inputs, grad_w[::-1], grad_b[::-1]

    def predict(self, inputs: np.ndarray) -> np.ndarray:
        """
        Predicted satisfaction of a batch of full inputs :code:`[x, z]`.

        Args:
            inputs (np.ndarray): (n, 2H + 3) inputs

        Returns:
            np.ndarray: (n,) predictions in [0, 1]
        """
        return self._forward(self._check_inputs(inputs))[1]

    def _stack(self, x: AnyFloatVector, z: np.ndarray) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=np.float64))
        z = np.asarray(z, dtype=np.float64)
        if z.ndim == 1:
            z = np.broadcast_to(z, (x.size, z.size))
        if z.shape != (x.size, self.input_dim - 1):
            raise ValueError(
                f"Observations should be ({x.size}, {self.input_dim - 1}), not {z.shape}"
            )
        return np.column_stack([x, z])

    def forward(self, x: float, z: AnyFloatVector) -> float:
        """
        Predicted satisfaction of one slice.

        Args:
            x (float): Resource input
            z (AnyFloatVector): Local observations (2H + 2)

        Returns:
            float: Prediction in [0, 1]
        """
        return float(self.predict(self._stack(x, z))[0])

    def input_gradient(self, x: float, z: AnyFloatVector) -> float:
        """
        Exact derivative of the prediction with respect to the resource input :code:`x`.

        Args:
            x (float): Resource input
            z (AnyFloatVector): Local observations (2H + 2)

        Returns:
            float: df/dx
        """
        return float(self.batch_forward_and_grad(x, z)[1][0])

    def batch_forward_and_grad(self, x: AnyFloatVector, z: np.ndarray) -> tuple:
        """
        Vectorized predictions and input derivatives.

        Args:
            x (AnyFloatVector): (n,) resource inputs
            z (np.ndarray): (n, 2H + 2) observations, or one (2H + 2) vector shared by all rows

        Returns:
            tuple: predictions (n,), df/dx (n,)

        Example:
            >>> values, grads = model.batch_forward_and_grad([0.2, 0.5], z)
        """
        inputs = self._check_inputs(self._stack(x, z))
        memory, out = self._forward(inputs)
        d_inputs, _, _ = self._backward(memory, np.ones_like(out), with_params=False)
        return out, d_inputs[:, 0]


def new(history: int, hidden_sizes: tuple = DEFAULT_HIDDEN_SIZES, seed: int = 0) -> EstimatorModel:
    """
    Seeded fan-in uniform initialization: every weight and bias of a layer with
    :code:`n_in` inputs is drawn in :code:`U(-1/sqrt(n_in), 1/sqrt(n_in))`.

    Args:
        history (int): History length H (the input width is 2H + 3)
        hidden_sizes (tuple): Hidden layer widths, may be empty (affine + logistic model)
        seed (int): Seed

    Returns:
        EstimatorModel: Untrained model

    Example:
        >>> new(5).layer_sizes
        [13, 36, 24, 16, 16, 1]
    """
    if history < 1:
        raise ValueError(f"History length should be at least 1, not {history}")
    if any(int(size) < 1 for size in hidden_sizes):
        raise ValueError(f"Hidden sizes should be positive: {hidden_sizes}")

    rng = np.random.default_rng(seed)
    sizes = [2 * history + 3] + [int(size) for size in hidden_sizes] + [1]
    weights, biases = [], []
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        limit = 1.0 / np.sqrt(n_in)
        weights.append(rng.uniform(-limit, limit, size=(n_out, n_in)))
        biases.append(rng.uniform(-limit, limit, size=n_out))

    return EstimatorModel(weights, biases, history, metadata={"seed": seed, "epochs": 0})


def _norm_statistics(inputs: np.ndarray) -> tuple:
    shift = inputs.mean(axis=0)
    scale = inputs.std(axis=0)
    scale[scale == 0.0] = 1.0
    return shift, scale


def train(
    model: EstimatorModel,
    train_set: list,
    test_set: list,
    epochs: int = 200,
    seed: int = 0,
    learning_rate: float = 1e-3,
    batch_size: int = 64,
    label_margin: float = 0.01,
    progress: bool = False,
) -> tuple:
    """
    Train a copy of the model with the mean absolute error and Adam.

    The normalization statistics are computed on the train set only.

    The MAE subgradient is taken w.r.t. the output pre-activation: the logistic output
    is monotone, so the residual signs (hence the conditional median being fitted) are
    unchanged, but saturated outputs keep learning. Targets are clipped to
    :code:`[label_margin, 1 - label_margin]` so that the pre-activations stay bounded.
    The reported losses are computed against the unclipped labels.

    Args:
        model (EstimatorModel): Initial model (not modified)
        train_set (list): Train samples
        test_set (list): Held-out samples
        epochs (int): Number of epochs
        seed (int): Seed of the mini-batch shuffles
        learning_rate (float): Adam learning rate
        batch_size (int): Mini-batch size
        label_margin (float): Clipping margin of the training targets, in [0, 0.5)
        progress (bool): Show a progress bar

    Returns:
        tuple: Trained model, :py:class:`TrainReport`

    Raises:
        FloatingPointError: If the loss diverges
    """
    if not train_set or not test_set:
        raise ValueError("Train and test sets should not be empty")
    if epochs < 1 or batch_size < 1 or not learning_rate > 0:
        raise ValueError("Epochs, batch size and learning rate should be positive")
    if not 0.0 <= label_margin < 0.5:
        raise ValueError(f"Label margin should be in [0, 0.5), not {label_margin}")

    start = time.perf_counter()
    inputs, labels = to_arrays(train_set)
    test_inputs, test_labels = to_arrays(test_set)
    targets = np.clip(labels, label_margin, 1.0 - label_margin)

    trained = model.copy()
    trained.shift, trained.scale = _norm_statistics(trained._check_inputs(inputs))

    params = trained.weights + trained.biases
    moments_1 = [np.zeros_like(p) for p in params]
    moments_2 = [np.zeros_like(p) for p in params]
    rng = np.random.default_rng(seed)
    n_samples = labels.size
    step_count = 0
    epoch_losses = []

    for epoch in tqdm(range(epochs), desc="Training", disable=not progress):
        order = rng.permutation(n_samples)
        abs_error_sum = 0.0
        for begin in range(0, n_samples, batch_size):
            batch = order[begin : begin + batch_size]
            memory, out = trained._forward(inputs[batch])
            residuals = out - labels[batch]
            abs_error_sum += float(np.abs(residuals).sum())

            # MAE subgradient on the logit scale, 0 at a null residual
            _, grad_w, grad_b = trained._backward(
                memory, np.sign(out - targets[batch]) / batch.size, from_logit=True
            )

            step_count += 1
            for param, grad, m_1, m_2 in zip(params, grad_w + grad_b, moments_1, moments_2):
                m_1 *= BETA_1
                m_1 += (1.0 - BETA_1) * grad
                m_2 *= BETA_2
                m_2 += (1.0 - BETA_2) * grad * grad
                m_hat = m_1 / (1.0 - BETA_1**step_count)
                v_hat = m_2 / (1.0 - BETA_2**step_count)
                param -= learning_rate * m_hat / (np.sqrt(v_hat) + ADAM_EPS)

        epoch_loss = abs_error_sum / n_samples
        if not np.isfinite(epoch_loss) or not all(np.all(np.isfinite(p)) for p in params):
            raise FloatingPointError(f"Training diverged at epoch {epoch} (loss: {epoch_loss})")
        epoch_losses.append(epoch_loss)
        LOGGER.debug("Epoch %d: train MAE %.5f", epoch, epoch_loss)

    test_errors = np.abs(trained.predict(test_inputs) - test_labels)
    test_mae = float(test_errors.mean())
    trained.metadata.update(
        {
            "epochs": epochs,
            "train_mae": epoch_losses[-1],
            "test_mae": test_mae,
            "seed": seed,
            "learning_rate": learning_rate,
            "batch_size": batch_size,
            "label_margin": label_margin,
            "num_train": int(n_samples),
            "num_test": int(test_labels.size),
        }
    )
    report = TrainReport(
        epoch_losses=epoch_losses,
        test_mae=test_mae,
        wall_clock=time.perf_counter() - start,
        seed=seed,
        test_errors=test_errors,
    )
    LOGGER.info(
        "Estimator trained on %d samples in %.1f s: train MAE %.4f, held-out MAE %.4f",
        n_samples,
        report.wall_clock,
        epoch_losses[-1],
        test_mae,
    )
    return trained, report


def evaluate(model: EstimatorModel, samples: list) -> float:
    """
    Mean absolute error of a model on any sample set.

    Args:
        model (EstimatorModel): Model
        samples (list): Samples

    Returns:
        float: MAE
    """
    inputs, labels = to_arrays(samples)
    return float(np.abs(model.predict(inputs) - labels).mean())


def save(model: EstimatorModel, path: AnyPathStrType) -> None:
    """
    Save a model as a versioned JSON document (lossless).

    Args:
        model (EstimatorModel): Model
        path (AnyPathStrType): Output JSON
    """
    files.save_json(
        {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "history": model.history,
            "layer_sizes": model.layer_sizes,
            "hidden_activation": HIDDEN_ACTIVATION,
            "output_activation": OUTPUT_ACTIVATION,
            "weights": model.weights,
            "biases": model.biases,
            "norm": {"shift": model.shift, "scale": model.scale},
            "metadata": model.metadata,
        },
        path,
    )


def load(path: AnyPathStrType) -> EstimatorModel:
    """
    Load a model written by :py:func:`save`.

    Args:
        path (AnyPathStrType): Model JSON

    Returns:
        EstimatorModel: Model

    Raises:
        ValueError: Truncated file, unknown format or version mismatch
    """
    try:
        data = files.read_json(path, print_file=False)
    except ValueError as exc:
        raise ValueError(f"{path} is not a readable model file: {exc}") from exc

    check_mandatory_keys(
        data,
        ["format", "version", "history", "layer_sizes", "weights", "biases", "norm", "metadata"],
    )
    if data["format"] != MODEL_FORMAT:
        raise ValueError(f"{path}: unknown model format {data['format']}")
    if data["version"] != MODEL_VERSION:
        raise ValueError(
            f"{path}: model version {data['version']} is not supported (expected {MODEL_VERSION})"
        )
    for key, expected in (
        ("hidden_activation", HIDDEN_ACTIVATION),
        ("output_activation", OUTPUT_ACTIVATION),
    ):
        if data.get(key, expected) != expected:
            raise ValueError(f"{path}: unsupported {key} {data[key]}")

    model = EstimatorModel(
        data["weights"],
        data["biases"],
        data["history"],
        data["norm"]["shift"],
        data["norm"]["scale"],
        data["metadata"],
    )
    if model.layer_sizes != list(data["layer_sizes"]):
        raise ValueError(f"{path}: layer sizes {data['layer_sizes']} do not match the parameters")
    return model
