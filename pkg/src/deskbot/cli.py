"""Launcher and headless harness.

`deskbot run` starts the simulator, either serving interactively until
interrupted or replaying a scripted scenario and exiting; both write
the per-tick ground-truth trace, the trip log and the sensor sample
logs into the output directory.  `deskbot export-footprints` renders a
recorded trip log into a polyline file and a figure.

Exit codes are stable: 0 ok, 2 invalid config or input file, 3 listen
address busy, 4 invalid scenario.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
import threading
from pathlib import Path

from .config import ConfigError, RunConfig, ScenarioError, assemble, load_config, load_scenario
from .deadreckoning import TripLogError
from .export import export_footprints
from .kinematics import TRACE_FIELDS
from .service import BindError, RobotService, default_assets_dir
from .simulation import TickLoop, run_scenario

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BIND = 3
EXIT_SCENARIO = 4


def _parse_listen(addr: str) -> tuple[str, int]:
    host, sep, port = addr.rpartition(":")
    if not sep or not host:
        raise ConfigError(f"listen address must be host:port, got {addr!r}")
    try:
        return host, int(port)
    except ValueError:
        raise ConfigError(f"listen port must be an integer, got {port!r}") from None


def _cmd_run(args: argparse.Namespace) -> int:
    try:
        config = load_config(args.config) if args.config else RunConfig()
        if args.seed is not None:
            config.seed = args.seed
        if args.listen is not None:
            config.listen_addr = args.listen
        listen = _parse_listen(config.listen_addr) if config.listen_addr else None
    except ConfigError as exc:
        logger.error("invalid config: %s", exc)
        return EXIT_CONFIG

    steps = None
    if args.scenario:
        try:
            steps = load_scenario(args.scenario)
        except ScenarioError as exc:
            logger.error("invalid scenario: %s", exc)
            return EXIT_SCENARIO

    out_dir = Path(args.trace_out)
    sim = assemble(config, out_dir)
    trace_fh = open(out_dir / "trace.csv", "w", newline="", encoding="utf-8")
    trace = csv.writer(trace_fh)
    trace.writerow(TRACE_FIELDS)
    sim.on_frame(lambda frame: trace.writerow(sim.trace_row(frame)))

    service = RobotService(sim, default_assets_dir())
    try:
        if listen is not None:
            try:
                host, port = service.start(*listen)
                print(f"listening on http://{host}:{port}", flush=True)
            except BindError as exc:
                logger.error("%s", exc)
                return EXIT_BIND

        if steps is not None:
            run_scenario(sim, steps)
            logger.info(
                "scenario done: %d ticks, %d trip segments", sim.tick, len(sim.recorder.segments)
            )
        else:
            if listen is None:
                logger.error("nothing to do: no scenario and no listen address")
                return EXIT_CONFIG
            loop = TickLoop(sim)
            loop.start()
            try:
                threading.Event().wait()  # serve until interrupted
            except KeyboardInterrupt:
                logger.info("interrupted, shutting down")
            finally:
                loop.stop()
        return EXIT_OK
    finally:
        service.stop()
        trace_fh.close()
        if sim.recorder.log is not None:
            sim.recorder.log.close()
        if sim.registry.store is not None:
            sim.registry.store.close()


def _cmd_export(args: argparse.Namespace) -> int:
    try:
        estimate = export_footprints(args.trip_log, args.out_dir, plot=not args.no_plot)
    except TripLogError as exc:
        logger.error("bad trip log: %s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        logger.error("cannot read %s: %s", args.trip_log, exc)
        return EXIT_CONFIG
    print(
        f"vertices={len(estimate.segments) + 1} "
        f"total={estimate.total_distance_m!r} net={estimate.net_displacement_m!r}"
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="deskbot",
        description="desk-scale networked robot simulator and teleoperation service",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="start the simulator (serve or replay a scenario)")
    run.add_argument("--config", metavar="PATH", help="JSON run configuration")
    run.add_argument("--scenario", metavar="PATH", help="JSON scenario script to replay")
    run.add_argument("--listen", metavar="ADDR", help="host:port to serve on (overrides config)")
    run.add_argument("--trace-out", metavar="DIR", default="out", help="trace output directory")
    run.add_argument("--seed", metavar="N", type=int, help="run seed (overrides config)")
    run.set_defaults(func=_cmd_run)

    export = sub.add_parser("export-footprints", help="render a trip log to polyline + figure")
    export.add_argument("trip_log", metavar="TRIP_LOG", help="JSON-lines trip log")
    export.add_argument("--out-dir", metavar="DIR", default=".", help="output directory")
    export.add_argument("--no-plot", action="store_true", help="skip the PNG figure")
    export.set_defaults(func=_cmd_export)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
