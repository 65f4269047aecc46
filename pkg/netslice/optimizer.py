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
Per-cell Lagrangian primal-dual optimizer of a learned slice utility.

Maximizes :code:`F(x) = sum_s ln(f(x_s, z_s) + 1)` subject to :code:`sum_s x_s <= 1`,
:code:`x_s >= 0`, with the projected iteration:

.. code-block:: text

    x_s    <- clip(x_s + dx * (f'(x_s) / (f(x_s) + 1) - lambda), 0, 1)
    lambda <- max(0, lambda - dl * (1 - sum_s x_s))

started from P noisy neighbors of a warm start, with geometrically decaying steps.
The stopping test only looks at the primal moves, so a start may stop with part of the
budget unused: its final iterate is repaired, then completed with
:py:func:`complete_budget` when this raises the utility. The best start is kept.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Protocol, runtime_checkable

import numpy as np
import pandas as pd

from netslice.core import PartitionVector, equal_shares, normalize_to_simplex
from netslice.logs import NS_NAME
from netslice.types import AnyFloatVector, AnyPathStrType

LOGGER = logging.getLogger(NS_NAME)

TRACE_COLUMNS = ["start", "iteration", "sum_x", "lambda", "utility"]


@runtime_checkable
class SliceUtilityModel(Protocol):
    """Any differentiable per-slice satisfaction model (the trained estimator, or an analytic one)"""

    def batch_forward_and_grad(self, x: AnyFloatVector, z: np.ndarray) -> tuple:
        """Predictions f(x_i, z_i) in [0, 1] and derivatives df/dx, per row"""


@dataclass(frozen=True)
class SolverParams:
    """Parameters of :py:func:`solve_cell`"""

    num_starts: int = 5
    """Number of start points P"""

    noise_mean: float = 0.0
    noise_var: float = 0.05
    """Variance of the i.i.d. gaussian perturbation of each coordinate"""

    step_x: float = 0.05
    step_lambda: float = 0.1
    decay: float = 0.99
    """Geometric decay of both steps, per iteration"""

    max_iter: int = 500
    tol: float = 1e-4
    """Convergence threshold on the norm of the primal move"""

    lambda_init: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.num_starts < 1:
            raise ValueError(f"At least one start point is needed, not {self.num_starts}")
        if not (self.step_x > 0 and self.step_lambda > 0):
            raise ValueError("Primal and dual steps should be positive")
        if not 0.0 < self.decay <= 1.0:
            raise ValueError(f"Decay should be in (0, 1], not {self.decay}")
        if not self.tol > 0 or self.max_iter < 1:
            raise ValueError("Convergence threshold and maximum iterations should be positive")
        if self.noise_var < 0 or self.lambda_init < 0:
            raise ValueError("Noise variance and initial multiplier should be nonnegative")


@dataclass(frozen=True)
class StartTrace:
    """Outcome of one start point"""

    start: int
    iterations: int
    utility: float
    converged: bool
    partition: tuple
    lambda_final: float
    sum_x: tuple = ()
    lambdas: tuple = ()
    utilities: tuple = ()
    """Per-iteration history, only filled when traces are recorded"""


@dataclass(frozen=True)
class SolveResult:
    """Result of :py:func:`solve_cell`"""

    partition: PartitionVector
    utility: float
    best_start: int
    lambda_final: float
    traces: tuple = field(default_factory=tuple)
    lambda_range: tuple = (0.0, 0.0)
    """Min and max of the multiplier over every iteration of every start"""

    @property
    def mean_iterations(self) -> float:
        return float(np.mean([tr.iterations for tr in self.traces]))

    @property
    def converged(self) -> bool:
        return self.traces[self.best_start].converged


def _check_observations(observations: np.ndarray, num_slices: int) -> np.ndarray:
    observations = np.asarray(observations, dtype=np.float64)
    if observations.ndim != 2 or observations.shape[0] != num_slices:
        raise ValueError(
            f"One observation vector per slice is needed: {observations.shape} for {num_slices} slices"
        )
    return observations


def default_action(num_slices: int) -> PartitionVector:
    """
    Start point when no previous solution exists: the equal split.

    Example:
        >>> default_action(4)
        PartitionVector(shares=(0.25, 0.25, 0.25, 0.25))
    """
    return equal_shares(num_slices)


def complete_budget(x: np.ndarray, values: np.ndarray, grads: np.ndarray) -> np.ndarray:
    """
    Spread the unused budget :code:`1 - sum_s x_s` of feasible points over their slices,
    proportionally to the marginal utilities :code:`max(0, f'(x_s) / (f(x_s) + 1))`
    (evenly if they are all null).

    Args:
        x (np.ndarray): (n, S) feasible points
        values (np.ndarray): (n, S) predictions at :code:`x`
        grads (np.ndarray): (n, S) derivatives at :code:`x`

    Returns:
        np.ndarray: (n, S) points summing to 1

    Example:
        >>> complete_budget(np.array([[0.2, 0.4]]), np.zeros((1, 2)), np.array([[1.0, 3.0]]))
        array([[0.3, 0.7]])
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    slack = np.clip(1.0 - x.sum(axis=1), 0.0, None)[:, np.newaxis]
    marginal = np.clip(np.atleast_2d(grads) / (np.atleast_2d(values) + 1.0), 0.0, None)
    total = marginal.sum(axis=1, keepdims=True)
    weights = np.where(total > 0.0, marginal / np.where(total > 0.0, total, 1.0), 1.0 / x.shape[1])
    return np.clip(x + slack * weights, 0.0, 1.0)


def surrogate_utility(
    model: SliceUtilityModel, observations: np.ndarray, x: AnyFloatVector
) -> float:
    """
    Learned cell utility :code:`sum_s ln(f(x_s, z_s) + 1)`.

    Args:
        model (SliceUtilityModel): Slice model
        observations (np.ndarray): (S, 2H + 2) observations, one row per active slice
        x (AnyFloatVector): Shares (S,)

    Returns:
        float: Utility
    """
    x = np.asarray(x.shares if isinstance(x, PartitionVector) else x, dtype=np.float64).ravel()
    observations = _check_observations(observations, x.size)
    values, _ = model.batch_forward_and_grad(x, observations)
    return float(np.sum(np.log1p(values)))


def lagrangian_value(
    model: SliceUtilityModel, observations: np.ndarray, x: AnyFloatVector, lam: float
) -> float:
    """
    Lagrangian :code:`F(x) + lambda * (1 - sum_s x_s)`.

    Args:
        model (SliceUtilityModel): Slice model
        observations (np.ndarray): (S, 2H + 2) observations
        x (AnyFloatVector): Shares (S,)
        lam (float): Multiplier, nonnegative

    Returns:
        float: Lagrangian value
    """
    if lam < 0:
        raise ValueError(f"The multiplier should be nonnegative, not {lam}")
    x = np.asarray(x.shares if isinstance(x, PartitionVector) else x, dtype=np.float64).ravel()
    return surrogate_utility(model, observations, x) + lam * (1.0 - float(np.sum(x)))


def primal_dual_step(
    model: SliceUtilityModel,
    observations: np.ndarray,
    x: AnyFloatVector,
    lam: float,
    step_x: float,
    step_lambda: float,
) -> tuple:
    """
    One projected primal-dual iteration.

    Args:
        model (SliceUtilityModel): Slice model
        observations (np.ndarray): (S, 2H + 2) observations
        x (AnyFloatVector): Current shares, nonnegative
        lam (float): Current multiplier, nonnegative
        step_x (float): Primal step
        step_lambda (float): Dual step

    Returns:
        tuple: New shares (np.ndarray), new multiplier
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    if np.any(x < 0) or lam < 0:
        raise ValueError("Shares and multiplier should be nonnegative")
    observations = _check_observations(observations, x.size)

    values, grads = model.batch_forward_and_grad(x, observations)
    new_x = np.clip(x + step_x * (grads / (values + 1.0) - lam), 0.0, 1.0)
    new_lam = max(0.0, lam - step_lambda * (1.0 - float(np.sum(new_x))))
    return new_x, new_lam


def solve_cell(
    model: SliceUtilityModel,
    observations: np.ndarray,
    x_init: AnyFloatVector,
    params: SolverParams = None,
    lambda_init: Optional[float] = None,
    rng: np.random.Generator = None,
    record_trace: bool = False,
    context: str = "",
) -> SolveResult:
    """
    Multi-start primal-dual maximization of the learned utility of a cell.

    The P starts are iterated together until each one moves less than :code:`tol`
    or reaches :code:`max_iter`. Every final iterate is repaired with
    :py:func:`netslice.core.normalize_to_simplex`, then completed with :py:func:`complete_budget`
    if the completed point has a higher utility; the best one wins (lowest start on ties).

    Args:
        model (SliceUtilityModel): Slice model
        observations (np.ndarray): (S, 2H + 2) observations, one row per active slice
        x_init (AnyFloatVector): Feasible warm start (previous solution or default action)
        params (SolverParams): Solver parameters
        lambda_init (Optional[float]): Initial multiplier, :code:`params.lambda_init` if not given
        rng (np.random.Generator): Generator of the start perturbations, seeded from :code:`params.seed` if not given
        record_trace (bool): Keep the per-iteration history of every start
        context (str): Context of the error messages (i.e. cell and slot)

    Returns:
        SolveResult: Best partition and traces

    Example:
        >>> result = solve_cell(model, observations, default_action(3))
        >>> validate_partition(result.partition).ok
        True
    """
    params = params or SolverParams()
    x_init = np.asarray(
        x_init.shares if isinstance(x_init, PartitionVector) else x_init, dtype=np.float64
    ).ravel()
    num_slices = x_init.size
    observations = _check_observations(observations, num_slices)
    lam_0 = params.lambda_init if lambda_init is None else float(lambda_init)
    if lam_0 < 0:
        raise ValueError(f"The initial multiplier should be nonnegative, not {lam_0}")
    rng = rng if rng is not None else np.random.default_rng(params.seed)

    num_starts = params.num_starts
    noise = rng.normal(params.noise_mean, np.sqrt(params.noise_var), size=(num_starts, num_slices))
    starts = np.clip(x_init + noise, 0.0, 1.0)
    xs = np.stack([normalize_to_simplex(row).as_array() for row in starts])
    lams = np.full(num_starts, lam_0)

    active = np.ones(num_starts, dtype=bool)
    converged = np.zeros(num_starts, dtype=bool)
    iterations = np.zeros(num_starts, dtype=int)
    lam_min, lam_max = lam_0, lam_0
    history = {k: ([], [], []) for k in range(num_starts)} if record_trace else None

    def _evaluate(points: np.ndarray, iteration: int, starts_idx: np.ndarray) -> tuple:
        try:
            values, grads = model.batch_forward_and_grad(
                points.ravel(), np.tile(observations, (points.shape[0], 1))
            )
        except Exception as exc:
            raise RuntimeError(
                f"{context or 'solve_cell'}: estimator failure at iteration {iteration} "
                f"(start(s) {starts_idx.tolist()}): {exc}"
            ) from exc
        return values.reshape(points.shape), grads.reshape(points.shape)

    step_x, step_lambda = params.step_x, params.step_lambda
    for iteration in range(1, params.max_iter + 1):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break

        values, grads = _evaluate(xs[idx], iteration, idx)
        new_xs = np.clip(
            xs[idx] + step_x * (grads / (values + 1.0) - lams[idx, np.newaxis]), 0.0, 1.0
        )
        new_lams = np.maximum(0.0, lams[idx] - step_lambda * (1.0 - new_xs.sum(axis=1)))
        moves = np.linalg.norm(new_xs - xs[idx], axis=1)

        xs[idx] = new_xs
        lams[idx] = new_lams
        iterations[idx] = iteration
        lam_min = min(lam_min, float(new_lams.min()))
        lam_max = max(lam_max, float(new_lams.max()))

        if record_trace:
            new_values, _ = _evaluate(new_xs, iteration, idx)
            for row, start in enumerate(idx):
                history[start][0].append(float(new_xs[row].sum()))
                history[start][1].append(float(new_lams[row]))
                history[start][2].append(float(np.sum(np.log1p(new_values[row]))))

        done = idx[moves < params.tol]
        converged[done] = True
        active[done] = False

        step_x *= params.decay
        step_lambda *= params.decay

    repaired = np.stack([normalize_to_simplex(row).as_array() for row in xs])
    last_iteration = iterations.max(initial=0)
    final_values, final_grads = _evaluate(repaired, last_iteration, np.arange(num_starts))
    utilities = np.log1p(final_values).sum(axis=1)

    completed = complete_budget(repaired, final_values, final_grads)
    completed_values, _ = _evaluate(completed, last_iteration, np.arange(num_starts))
    completed_utilities = np.log1p(completed_values).sum(axis=1)
    better = completed_utilities > utilities
    repaired[better] = completed[better]
    utilities[better] = completed_utilities[better]
    best = int(np.argmax(utilities))

    traces = tuple(
        StartTrace(
            start=k,
            iterations=int(iterations[k]),
            utility=float(utilities[k]),
            converged=bool(converged[k]),
            partition=tuple(repaired[k]),
            lambda_final=float(lams[k]),
            sum_x=tuple(history[k][0]) if record_trace else (),
            lambdas=tuple(history[k][1]) if record_trace else (),
            utilities=tuple(history[k][2]) if record_trace else (),
        )
        for k in range(num_starts)
    )

    LOGGER.debug(
        "%s: best start %d, utility %.5f, iterations %s, converged %s",
        context or "solve_cell",
        best,
        utilities[best],
        iterations.tolist(),
        converged.tolist(),
    )
    return SolveResult(
        partition=PartitionVector(repaired[best]),
        utility=float(utilities[best]),
        best_start=best,
        lambda_final=float(lams[best]),
        traces=traces,
        lambda_range=(lam_min, lam_max),
    )


def trace_frame(result: SolveResult) -> pd.DataFrame:
    """
    Per-iteration history of a solve recorded with :code:`record_trace=True`.

    Args:
        result (SolveResult): Solve result

    Returns:
        pd.DataFrame: Columns start, iteration, sum_x, lambda, utility
    """
    rows = [
        [trace.start, it + 1, sum_x, lam, utility]
        for trace in result.traces
        for it, (sum_x, lam, utility) in enumerate(zip(trace.sum_x, trace.lambdas, trace.utilities))
    ]
    return pd.DataFrame(rows, columns=TRACE_COLUMNS)


def write_trace_csv(result: SolveResult, path: AnyPathStrType) -> None:
    """
    Dump the per-iteration history of a solve as CSV.

    Args:
        result (SolveResult): Solve result recorded with :code:`record_trace=True`
        path (AnyPathStrType): Output CSV
    """
    trace_frame(result).to_csv(path, index=False, float_format="%.17g")
