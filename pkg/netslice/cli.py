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
Command line surface.

.. code-block:: bash

    netslice collect --scale desk --out runs/desk
    netslice train --out runs/desk
    netslice run --scale desk --seed 3 --schemes lagrangian,traffic --out runs/desk
    netslice eval --out runs/desk
    netslice plot --out runs/desk

Exit codes: 0 on success, 1 on a configuration error, 2 on any other failure.
"""

import argparse
import logging
import sys

from netslice import AnyPath, __version__, dataset, estimator, files, harness, netsim
from netslice.harness import ConfigError, StageError
from netslice.logs import NS_NAME, create_logger
from netslice.strings import str_to_list, str_to_verbosity

LOGGER = logging.getLogger(NS_NAME)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_FAILURE = 2


class _Parser(argparse.ArgumentParser):
    """Argument parser reporting usage errors as configuration errors"""

    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON configuration file")
    parser.add_argument("--scale", default="desk", help="Preset: full or desk")
    parser.add_argument("--seed", type=int, help="Master seed")
    parser.add_argument("--out", help="Run directory")
    parser.add_argument(
        "-v",
        "--verbosity",
        type=str_to_verbosity,
        default=logging.INFO,
        help="Stream log level (debug, info, warning, error)",
    )


def build_parser() -> argparse.ArgumentParser:
    """Parser of the :code:`netslice` command"""
    parser = _Parser(prog=NS_NAME, description="Neural-assisted network slicing experiments")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    collect = commands.add_parser("collect", help="Run the exploration phase and write the dataset")
    _add_common(collect)

    train = commands.add_parser("train", help="Train the estimator on a dataset")
    _add_common(train)
    train.add_argument("--dataset", help="Dataset CSV (default: <out>/dataset.csv)")
    train.add_argument("--model", help="Output model (default: <out>/estimator.json)")

    run = commands.add_parser("run", help="Run the full phased experiment")
    _add_common(run)
    run.add_argument("--schemes", type=str_to_list, help="Comma-separated schemes")
    run.add_argument("--trace", action="store_true", help="Dump the optimizer traces")
    run.add_argument("--progress", action="store_true", help="Show progress bars")

    for name, description in (
        ("eval", "Recompute the metrics from the per-slot log of a run"),
        ("plot", "Draw the figures from the per-slot log of a run"),
    ):
        sub = commands.add_parser(name, help=description)
        _add_common(sub)

    return parser


def _config(args: argparse.Namespace, **overrides) -> harness.ExperimentConfig:
    config_path = args.config
    if config_path is None and args.command in ("eval", "plot", "train") and args.out:
        run_config = AnyPath(args.out) / "config.json"
        if run_config.is_file():
            config_path = run_config

    return harness.load_config(
        config_path, scale=args.scale, seed=args.seed, output_dir=args.out, **overrides
    )


def _collect(args, config) -> None:
    out_dir = AnyPath(config.output_dir)
    collected = harness.collect_dataset(config)
    files.save_json(harness.config_to_dict(config), out_dir / "config.json")
    netsim.write_kpi_csv(collected.records, out_dir / "kpi_h0.csv")
    dataset.save(collected.samples, out_dir / "dataset.csv", config.sim.history)
    files.save_obj(collected.state, out_dir / "h0_state.pkl")
    LOGGER.info("Dataset of %d samples written in %s", len(collected.samples), out_dir)


def _train(args, config) -> None:
    out_dir = AnyPath(config.output_dir)
    dataset_path = AnyPath(args.dataset) if args.dataset else out_dir / "dataset.csv"
    model_path = AnyPath(args.model) if args.model else out_dir / "estimator.json"
    if not dataset_path.is_file():
        raise FileNotFoundError(f"Dataset not found: {dataset_path}")

    samples = dataset.load(dataset_path)
    model, report = harness.train_estimator(samples, config)
    estimator.save(model, model_path)
    LOGGER.info("Estimator written to %s (held-out MAE %.4f)", model_path, report.test_mae)


def _run(args, config) -> None:
    metrics = harness.run_experiment(config, progress=args.progress)
    LOGGER.info("Metrics written in %s (%d rows)", config.output_dir, len(metrics.summary))


def _from_logs(args, config, csv: bool, figures: bool) -> None:
    slot_log = harness.read_slot_log(config.output_dir)
    metrics = harness.compute_metrics(slot_log, config)
    harness.emit_outputs(metrics, config.output_dir, csv=csv, figures=figures)
    if csv:
        LOGGER.info("\n%s", metrics.summary.to_string(index=False))


_COMMANDS = {
    "collect": _collect,
    "train": _train,
    "run": _run,
    "eval": lambda args, config: _from_logs(args, config, csv=True, figures=False),
    "plot": lambda args, config: _from_logs(args, config, csv=False, figures=True),
}


def main(argv: list = None) -> int:
    """
    Entry point of the :code:`netslice` command.

    Args:
        argv (list): Arguments, :code:`sys.argv[1:]` if not given

    Returns:
        int: Exit code
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        overrides = {}
        if args.command == "run":
            overrides = {"schemes": args.schemes, "trace": args.trace or None}
        config = _config(args, **overrides)
    except ConfigError as exc:
        create_logger(LOGGER, stream_log_level=logging.ERROR)
        LOGGER.error("Configuration error: %s", exc)
        return EXIT_CONFIG

    out_dir = AnyPath(config.output_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        create_logger(
            LOGGER,
            file_log_level=logging.DEBUG,
            stream_log_level=args.verbosity,
            output_folder=str(out_dir) if args.command == "run" else None,
            name=NS_NAME,
        )
        LOGGER.info("netslice %s: %s in %s", __version__, args.command, out_dir)
        _COMMANDS[args.command](args, config)
    except ConfigError as exc:
        LOGGER.error("Configuration error: %s", exc)
        return EXIT_CONFIG
    except StageError as exc:
        LOGGER.error("%s (partial outputs kept in %s)", exc, out_dir)
        return EXIT_FAILURE
    except Exception as exc:
        LOGGER.exception("%s failed: %s", args.command, exc)
        return EXIT_FAILURE

    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
