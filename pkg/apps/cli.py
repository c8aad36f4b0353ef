"""
Command-line front end

    datasync collect  --config cfg.json [--out DIR] [--seed N] [--h STEP]
    datasync design   --config cfg.json [--data DIR]
    datasync simulate --config cfg.json [--data DIR] [--design DIR] [--duration S]
    datasync repro    [--seeds 5] [--check-leader]
    datasync sweep    --config cfg.json --seeds 1 2 3

Exit codes: 0 ok, 2 data, 3 io, 4 design, 5 simulation.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional

from apps import pipeline
from apps.scenario import ScenarioConfig, load_scenario
from core.constants import EXIT_IO, EXIT_OK, EXIT_SIMULATION
from core.logging.logger import get_logger
from core.types import DataSyncError
from data.scenarios import SCENARIOS

logger = get_logger(__name__)


def _load(config: Optional[str], default: Optional[str] = None) -> ScenarioConfig:
    name = config or default
    if name is None:
        raise DataSyncError("--config is required")
    # built-in scenario names resolve before file paths
    if name in SCENARIOS and not Path(name).exists():
        return load_scenario(SCENARIOS[name])
    return load_scenario(name)


def _emit(payload) -> None:
    if isinstance(payload, list):
        data = [p.model_dump(mode="json") for p in payload]
    else:
        data = payload.model_dump(mode="json")
    print(json.dumps(data, indent=2, sort_keys=True))


def _seed_list(values: List[int]) -> List[int]:
    # "--seeds 5" means the first five seeds; several values are explicit seeds
    if len(values) == 1:
        return list(range(values[0]))
    return values


# ============================================
# subcommands
# ============================================

def cmd_collect(args) -> int:
    cfg = _load(args.config)
    _emit(pipeline.collect_stage(cfg, args.out, seed=args.seed, h=args.h))
    return EXIT_OK


def cmd_design(args) -> int:
    cfg = _load(args.config)
    _emit(pipeline.design_stage(cfg, args.out, data_dir=args.data))
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _load(args.config)
    result = pipeline.simulate_stage(
        cfg, args.out, data_dir=args.data, design_dir=args.design,
        duration=args.duration, seed=args.seed, h=args.h,
    )
    _emit(result)
    if not result.metrics.synchronized:
        logger.warning("run finished without synchronization (flagged in metrics.json)")
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _load(args.config)
    _emit(pipeline.run_pipeline(cfg, args.out, seed=args.seed, h=args.h, duration=args.duration))
    return EXIT_OK


def _summaries_exit(summaries) -> int:
    failed = [s.seed for s in summaries if not s.passed]
    if failed:
        logger.error("reproduction failed for seeds %s", failed)
        return EXIT_SIMULATION
    return EXIT_OK


def cmd_repro(args) -> int:
    source = _load(args.config, default="example_heterogeneous")
    if args.seeds:
        summaries = pipeline.sweep_stage(
            _seed_list(args.seeds), args.out, source=source, check_leader=args.check_leader,
            h=args.h, duration=args.duration, workers=args.workers,
        )
    else:
        summaries = [
            pipeline.repro_stage(
                args.out, seed=args.seed, check_leader=args.check_leader,
                h=args.h, duration=args.duration, source=source,
            )
        ]
    _emit(summaries if len(summaries) > 1 else summaries[0])
    return _summaries_exit(summaries)


def cmd_sweep(args) -> int:
    source = _load(args.config, default="example_heterogeneous")
    summaries = pipeline.sweep_stage(
        _seed_list(args.seeds), args.out, source=source, check_leader=args.check_leader,
        h=args.h, duration=args.duration, workers=args.workers,
    )
    _emit(summaries)
    return _summaries_exit(summaries)


# ============================================
# parser
# ============================================

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=None,
                        help="scenario JSON file or built-in name (example_heterogeneous, example_homogeneous)")
    common.add_argument("--out", type=str, default=None,
                        help="output directory (default: $DATASYNC_OUTPUT_ROOT/<scenario name>)")
    common.add_argument("--seed", type=int, default=None, help="random seed")
    common.add_argument("--h", type=float, default=None, help="integration step")

    parser = argparse.ArgumentParser(
        prog="datasync",
        description="Data-driven leader-follower synchronization of linear multiagent systems",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("collect", parents=[common], help="run PCPE experiments and write data CSVs")
    p.set_defaults(func=cmd_collect)

    p = sub.add_parser("design", parents=[common], help="solve the data-based design problem")
    p.add_argument("--data", type=str, default=None, help="data directory (default: <out>/data)")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("simulate", parents=[common], help="simulate the closed-loop network")
    p.add_argument("--data", type=str, default=None)
    p.add_argument("--design", type=str, default=None, help="design directory (default: <out>/design)")
    p.add_argument("--duration", type=float, default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("run", parents=[common], help="collect, design and simulate in one go")
    p.add_argument("--duration", type=float, default=None)
    p.set_defaults(func=cmd_run)

    for name, func, help_text in (
        ("repro", cmd_repro, "reproduce the built-in heterogeneous example"),
        ("sweep", cmd_sweep, "repeat the pipeline over several seeds"),
    ):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("--seeds", type=int, nargs="+", default=None if name == "repro" else [5])
        p.add_argument("--check-leader", action="store_true", help="confirm leader eigenvalues are on the imaginary axis")
        p.add_argument("--duration", type=float, default=None)
        p.add_argument("--workers", type=int, default=4)
        p.set_defaults(func=func)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DataSyncError as e:
        logger.error("%s: %s", type(e).__name__, e)
        return e.exit_code
    except OSError as e:
        logger.error("I/O error: %s", e)
        return EXIT_IO


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
