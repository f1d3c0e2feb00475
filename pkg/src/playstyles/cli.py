"""Command-line entry points for the pipeline and the synthetic generator."""

from __future__ import annotations

import argparse
import json
import sys

from .config import load_generator_config, load_pipeline_config
from .errors import PipelineError
from .pipeline import (
    StageWriter,
    run,
    stage_clean,
    stage_cluster,
    stage_featurize,
    stage_ingest,
    stage_report,
    stage_simgen,
)

_STAGE_COMMANDS = {
    "ingest": stage_ingest,
    "featurize": stage_featurize,
    "clean": stage_clean,
    "cluster": stage_cluster,
    "report": stage_report,
}


def _add_common(parser: argparse.ArgumentParser, with_category: bool) -> None:
    parser.add_argument("--config", required=True, help="pipeline config JSON")
    parser.add_argument("--out", help="output directory (overrides config)")
    parser.add_argument(
        "--seed", type=int, help="master seed (overrides config)"
    )
    if with_category:
        parser.add_argument(
            "--category", help="restrict to one event category"
        )
    parser.add_argument(
        "--quiet", action="store_true", help="suppress progress output"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="playstyles",
        description="Cluster gameplay styles from telemetry event logs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute every stage end to end")
    _add_common(run_p, with_category=False)

    for name in ("ingest", "featurize"):
        stage_p = sub.add_parser(name, help=f"run the {name} stage only")
        _add_common(stage_p, with_category=False)
    for name in ("clean", "report"):
        stage_p = sub.add_parser(name, help=f"run the {name} stage only")
        _add_common(stage_p, with_category=True)

    cluster_p = sub.add_parser("cluster", help="run the cluster stage only")
    _add_common(cluster_p, with_category=True)
    cluster_p.add_argument(
        "--k", type=int, help="force this cluster count instead of sweeping"
    )

    sim_p = sub.add_parser("simgen", help="generate a synthetic telemetry log")
    sim_p.add_argument(
        "--archetypes", required=True, help="archetype catalog JSON"
    )
    sim_p.add_argument("--n", required=True, type=int, help="number of sessions")
    sim_p.add_argument("--seed", type=int, default=0, help="generator seed")
    sim_p.add_argument("--out", required=True, help="output directory")
    sim_p.add_argument("--quiet", action="store_true")
    return parser


def _load_config(args: argparse.Namespace):
    config = load_pipeline_config(args.config)
    if args.out:
        config.output_dir = args.out
    if args.seed is not None:
        config.seed = args.seed
    config.validate()
    return config


def _log(args: argparse.Namespace):
    if args.quiet:
        return None
    return lambda msg: print(msg, file=sys.stderr)


def _dispatch(args: argparse.Namespace) -> int:
    log = _log(args)
    if args.command == "simgen":
        gen_config = load_generator_config(args.archetypes, args.n, args.seed)
        summary = stage_simgen(gen_config, StageWriter(args.out))
        if log:
            log(f"simgen: {json.dumps(summary, sort_keys=True)}")
        return 0

    config = _load_config(args)
    if args.command == "run":
        run(config, log=log)
        return 0

    writer = StageWriter(config.output_dir)
    stage_fn = _STAGE_COMMANDS[args.command]
    kwargs = {}
    if args.command in ("clean", "cluster", "report"):
        kwargs["only"] = args.category
    if args.command == "cluster" and args.k is not None:
        kwargs["k_override"] = args.k
    summary = stage_fn(config, writer, **kwargs)
    if log:
        log(f"{args.command}: {json.dumps(summary, sort_keys=True)}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except PipelineError as exc:
        print(f"{args.command}: error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
