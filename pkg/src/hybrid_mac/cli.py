"""Command-line entry point: run, sweep and report."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Optional, Sequence

from pydantic import ValidationError

from hybrid_mac.artifacts import aggregate_summaries, build_summary, report, write_run
from hybrid_mac.contracts import MacMode, ScenarioConfig
from hybrid_mac.scenario import load_scenario_file, run_scenario

logger = logging.getLogger(__name__)

EXIT_INVALID_CONFIG = 2
DEFAULT_OUT_DIR = "runs"


def parse_seeds(text: str) -> list[int]:
    """Parse "1..20", "3" or "1,4,7" (ranges inclusive)."""
    seeds: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            low, high = (int(bound) for bound in part.split("..", 1))
            if high < low:
                raise ValueError(f"invalid seed range '{part}': end is before start")
            seeds.extend(range(low, high + 1))
        else:
            seeds.append(int(part))
    if not seeds:
        raise ValueError(f"no seeds in '{text}'")
    return seeds


def parse_modes(text: str) -> list[MacMode]:
    valid = ", ".join(mode.value for mode in MacMode)
    modes = []
    for part in text.split(","):
        try:
            modes.append(MacMode(part.strip()))
        except ValueError as exc:
            raise ValueError(f"unknown mode '{part.strip()}'. Valid options: {valid}") from exc
    return modes


def _overrides(args: argparse.Namespace) -> dict[str, Any]:
    overrides: dict[str, Any] = {}
    if getattr(args, "mode", None):
        overrides["mac_mode"] = args.mode
    if getattr(args, "duration", None) is not None:
        overrides["duration_s"] = args.duration
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    return overrides


def run_directory(root: Path, scenario: ScenarioConfig) -> Path:
    return root / f"{scenario.name}_{scenario.mac_mode.value}_seed{scenario.seed}"


def _run_one(config: dict[str, Any], out_dir: str) -> dict[str, Any]:
    """Sweep worker: one isolated simulation, artifacts in its own directory."""
    scenario = ScenarioConfig.model_validate(config)
    result = run_scenario(scenario)
    write_run(result, Path(out_dir))
    return build_summary(result)


def cmd_run(args: argparse.Namespace) -> int:
    scenario = load_scenario_file(args.config, _overrides(args))
    out_root = Path(args.out or scenario.output_dir or DEFAULT_OUT_DIR)
    out_dir = run_directory(out_root, scenario)
    result = run_scenario(scenario)
    write_run(result, out_dir)
    critical = build_summary(result)["mission_critical"]
    print(
        f"{scenario.name} [{scenario.mac_mode.value}, seed {scenario.seed}] "
        f"success={critical['success']} missed={critical['missed_deadline']} "
        f"lost={critical['packet_loss']} in_flight={critical['in_flight']}"
    )
    if result.tracker is not None:
        print(f"tracking rmse={result.tracker.summary()['rmse_m']} m")
    print(f"artifacts: {out_dir}")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    base = load_scenario_file(args.config, _overrides(args))
    seeds = parse_seeds(args.seeds)
    modes = parse_modes(args.modes)
    out_root = Path(args.out or base.output_dir or DEFAULT_OUT_DIR)
    jobs = []
    for mode in modes:
        for seed in seeds:
            scenario = base.model_copy(update={"mac_mode": mode, "seed": seed})
            config = ScenarioConfig.model_validate(scenario.model_dump()).model_dump(mode="json")
            jobs.append((config, str(run_directory(out_root, scenario))))

    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            summaries = list(pool.map(_run_one, *zip(*jobs)))
    else:
        summaries = [_run_one(config, out_dir) for config, out_dir in jobs]

    aggregate = aggregate_summaries(summaries)
    out_root.mkdir(parents=True, exist_ok=True)
    aggregate_path = out_root / f"{base.name}_aggregate.json"
    aggregate_path.write_text(json.dumps(aggregate, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    for mode, stats in aggregate["modes"].items():
        print(
            f"{mode:<7} runs={stats['runs']} mean_missed={stats['mean_missed_deadline']} "
            f"mean_lost={stats['mean_packet_loss']} missed_share={stats['pooled_missed_share_pct']}%"
        )
    if aggregate["paired"] is not None:
        print(f"paired: {json.dumps(aggregate['paired'], sort_keys=True)}")
    print(f"aggregate: {aggregate_path}")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    print(json.dumps(report(Path(args.run_dir)), indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Hybrid TDMA/CSMA channel simulator")
    parser.add_argument(
        "--log-level",
        default="WARNING",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Logging verbosity",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_flags(command: argparse.ArgumentParser) -> None:
        command.add_argument("--config", type=str, default=None, help="Scenario JSON file")
        command.add_argument("--duration", type=float, default=None, help="Simulated seconds")
        command.add_argument("--out", type=str, default=None, help="Output root directory")

    run = sub.add_parser("run", help="Run one scenario and write its artifacts")
    scenario_flags(run)
    run.add_argument("--mode", choices=[mode.value for mode in MacMode], default=None, help="MAC mode")
    run.add_argument("--seed", type=int, default=None, help="Master seed")
    run.set_defaults(handler=cmd_run)

    sweep = sub.add_parser("sweep", help="Run seeds x modes and aggregate paired summaries")
    scenario_flags(sweep)
    sweep.add_argument("--seeds", type=str, default="1..10", help='Seeds, e.g. "1..20" or "1,2,5"')
    sweep.add_argument("--modes", type=str, default="csma,hybrid", help="Comma-separated MAC modes")
    sweep.add_argument("--workers", type=int, default=1, help="Parallel worker processes")
    sweep.set_defaults(handler=cmd_sweep)

    rep = sub.add_parser("report", help="Re-summarize an existing run directory from its CSVs")
    rep.add_argument("run_dir", type=str, help="Directory holding outcomes.csv and throughput.csv")
    rep.set_defaults(handler=cmd_report)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.handler(args)
    except ValidationError as exc:
        print("Invalid scenario configuration:", file=sys.stderr)
        for error in exc.errors():
            location = ".".join(str(token) for token in error["loc"]) or "<root>"
            print(f"  - {location}: {error['msg']}", file=sys.stderr)
        return EXIT_INVALID_CONFIG
    except (ValueError, FileNotFoundError) as exc:
        print(f"Error: {exc}", file=sys.stderr)
        return EXIT_INVALID_CONFIG


if __name__ == "__main__":
    sys.exit(main())
