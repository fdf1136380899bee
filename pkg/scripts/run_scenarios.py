#!/usr/bin/env python3
"""Run every bundled scenario under data/scenarios/ and print its outcome mix.

Durations are capped so a full pass stays interactive; use the CLI ``run``
command for full-length runs.

Usage:
    python scripts/run_scenarios.py [--max-duration 30]
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

# Add src/ to path for imports
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root / "src"))

from hybrid_mac import load_scenario_file, run_scenario


def run_file(filepath: Path, max_duration: float) -> None:
    """Run one scenario file with its duration capped."""
    try:
        scenario = load_scenario_file(filepath)
        if scenario.duration_s > max_duration:
            scenario = load_scenario_file(filepath, {"duration_s": max_duration})
    except ValueError as exc:
        print(f"\n❌ {filepath.name}: {exc}")
        return

    print(f"\n{'=' * 80}")
    print(f"Scenario: {scenario.name} ({filepath.name})")
    print(f"{'=' * 80}")
    print(f"  Mode: {scenario.mac_mode.value}")
    print(f"  Duration: {scenario.duration_s:g} s, seed {scenario.seed}, clients {scenario.clients}")

    result = run_scenario(scenario)
    verdicts = result.metrics.verdict_counts()
    print(f"  Offered load: {result.offered.fraction:.3f}")
    print(
        f"  Mission-critical: success={verdicts['success']} "
        f"missed={verdicts['missed_deadline']} lost={verdicts['packet_loss']} "
        f"in_flight={result.metrics.in_flight}"
    )
    if result.manager is not None:
        print(
            f"  Manager: {len(result.manager.applied)} maps applied, "
            f"{len(result.manager.rejections)} rejections"
        )
    if result.tracker is not None:
        print(f"  Tracking RMSE: {result.tracker.summary()['rmse_m']} m")
    diagnostics = result.diagnostics.as_dict()
    if diagnostics:
        print(f"  Diagnostics: {diagnostics}")


def main() -> None:
    """Run all bundled scenarios."""
    parser = argparse.ArgumentParser(description="Run bundled scenarios")
    parser.add_argument("--max-duration", type=float, default=30.0, help="Cap on simulated seconds")
    args = parser.parse_args()

    scenarios = sorted((project_root / "data" / "scenarios").glob("*.json"))
    if not scenarios:
        print("No scenario files found in data/scenarios/")
        sys.exit(1)

    print("Hybrid MAC scenario runner")
    print(f"Running {len(scenarios)} scenarios...\n")
    for scenario_file in scenarios:
        run_file(scenario_file, args.max_duration)


if __name__ == "__main__":
    main()
