"""Command line front door.

Subcommands: ``run`` (one episode), ``batch`` (seeded sweep), ``baseline``
(trivial policies under the same budget), ``ingest`` (corpus to triple export),
``serve`` (live play service), ``replay`` (re-check a recorded trace).

Exit codes: 0 on success, 2 when an episode or replay honestly came up
negative (target not found, trace mismatch), 1 on configuration errors.
"""

from __future__ import annotations

import argparse
import json
import sys

from .harness import (
    ConfigError,
    RunConfig,
    ingest,
    replay_file,
    run_batch,
    run_one,
    write_episode,
)
from .agent import BASELINES


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--floorplan", help="floorplan path or bundled name")
    p.add_argument("--target", help="target class name")
    p.add_argument("--corpus", help="scene-graph corpus path or bundled name")
    p.add_argument("--class-table", dest="class_table", help="class table JSON path")
    p.add_argument(
        "--seed",
        dest="seeds",
        type=int,
        action="append",
        help="episode seed; repeat the flag for batches",
    )
    p.add_argument("--out", dest="out_dir", help="directory for result/trace files")
    p.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="GROUP.FIELD=VALUE",
        help="parameter override, e.g. --set detector.p_miss=0 --set action.rotation_deg=45",
    )


def build_config(args: argparse.Namespace) -> RunConfig:
    if args.config:
        config = RunConfig.from_file(args.config)
    else:
        if not args.floorplan or not args.target:
            raise ConfigError("--floorplan and --target are required without --config")
        config = RunConfig(floorplan=args.floorplan, target=args.target)
    for name in ("floorplan", "target", "corpus", "class_table", "out_dir"):
        value = getattr(args, name, None)
        if value is not None:
            config = config.override(name, json.dumps(value))
    if args.seeds:
        config = config.override("seeds", json.dumps(args.seeds))
    for item in args.overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form field=value")
        dotted, _, value = item.partition("=")
        config = config.override(dotted.strip(), value.strip())
    return config


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="geosemnav", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one agent episode")
    _add_config_flags(p_run)
    p_run.add_argument("--leaderboard", help="append the result to this leaderboard file")

    p_batch = sub.add_parser("batch", help="run every configured seed and summarize")
    _add_config_flags(p_batch)

    p_base = sub.add_parser("baseline", help="run a trivial policy over the seeds")
    _add_config_flags(p_base)
    p_base.add_argument("--policy", required=True, choices=sorted(BASELINES))

    p_ingest = sub.add_parser("ingest", help="build a triple store from a corpus")
    p_ingest.add_argument("--corpus", required=True)
    p_ingest.add_argument("--out", required=True, help="triple export text file")
    p_ingest.add_argument("--class-table", dest="class_table")

    p_serve = sub.add_parser("serve", help="host the live play service")
    _add_config_flags(p_serve)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--leaderboard", help="leaderboard JSON-lines file")
    p_serve.add_argument(
        "--actuation-delay",
        type=float,
        default=0.0,
        help="real seconds each action stays in flight",
    )
    p_serve.add_argument(
        "--record-agent",
        action="store_true",
        help="run the agent once at startup and post it to the leaderboard",
    )

    p_replay = sub.add_parser("replay", help="re-execute and verify a trace file")
    _add_config_flags(p_replay)
    p_replay.add_argument("--trace", required=True)
    return parser


def cmd_run(args: argparse.Namespace) -> int:
    config = build_config(args)
    result, episode = run_one(config, config.seeds[0])
    if config.out_dir:
        result_path, trace_path = write_episode(config.out_dir, result, episode)
        print(f"wrote {result_path} and {trace_path}", file=sys.stderr)
    if args.leaderboard:
        from .service import PlayService, ServiceConfig

        service = PlayService(ServiceConfig(config, leaderboard_path=args.leaderboard))
        service.record_result(result, "agent", result.sim_time_s)
    print(result.to_json(indent=2))
    return 0 if result.success else 2


def _run_policy_batch(args: argparse.Namespace, policy: str | None) -> int:
    config = build_config(args)
    summary, _ = run_batch(config, policy)
    print(summary.table())
    print(summary.to_json())
    return 0


def cmd_ingest(args: argparse.Namespace) -> int:
    from pathlib import Path

    from .perception import load_class_table

    table = load_class_table(Path(args.class_table).read_text()) if args.class_table else None
    store = ingest(args.corpus, args.out, class_table=table)
    print(f"ingested {len(store.graphs())} scenes -> {args.out}", file=sys.stderr)
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import PlayService, ServiceConfig, create_app

    config = build_config(args)
    service_config = ServiceConfig(
        config,
        leaderboard_path=args.leaderboard,
        actuation_delay_s=args.actuation_delay,
    )
    app = create_app(service_config)
    if args.record_agent:
        service: PlayService = app.state.service
        result = service.record_agent()
        print(f"agent reference run: {result.sim_time_s:.1f} s simulated", file=sys.stderr)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_replay(args: argparse.Namespace) -> int:
    config = build_config(args)
    report = replay_file(config, args.trace)
    print(
        json.dumps(
            {
                "ok": report.ok,
                "final_pose": list(report.final_pose),
                "success": report.success,
                "records": report.n_records,
                "blocked": report.n_blocked,
                "mismatches": report.mismatches,
            },
            indent=2,
        )
    )
    return 0 if report.ok else 2


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args)
        if args.command == "batch":
            return _run_policy_batch(args, None)
        if args.command == "baseline":
            return _run_policy_batch(args, args.policy)
        if args.command == "ingest":
            return cmd_ingest(args)
        if args.command == "serve":
            return cmd_serve(args)
        return cmd_replay(args)
    except (ConfigError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
