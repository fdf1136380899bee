"""Run artifacts: outcomes.csv, throughput.csv, trajectory.csv and summary.json.

summary.json is schema-versioned and validated against
``data/summary.schema.json`` before it is written. ``report`` re-summarizes a
run directory from its CSVs alone, and ``aggregate_summaries`` folds a
sweep's per-run summaries into one paired comparison.
"""

from __future__ import annotations

import csv
import json
import logging
from pathlib import Path
from typing import TYPE_CHECKING, Any, Iterable, Optional

import numpy as np

from hybrid_mac.config import NS_PER_MS, SUMMARY_SCHEMA_VERSION
from hybrid_mac.contracts import Verdict
from hybrid_mac.traffic_classes import DATA_CLASSES, TrafficClass

if TYPE_CHECKING:
    from hybrid_mac.scenario import RunResult

logger = logging.getLogger(__name__)

OUTCOME_COLUMNS = (
    "packet_id",
    "flow",
    "verdict",
    "created_at_ns",
    "delivered_at_ns",
    "resolved_at_ns",
    "delay_ns",
    "deadline_ns",
    "attempts",
    "via_tdma",
)
TRAJECTORY_COLUMNS = ("t_ns", "x_m", "y_m", "heading_rad", "last_command_age_ms")
NON_CRITICAL_CLASSES = (TrafficClass.LARGE_VOLUME, TrafficClass.EVENT_DRIVEN)


def _discover_project_root() -> Path:
    """Locate the repo root (the directory holding data/summary.schema.json)."""
    here = Path(__file__).resolve()
    cwd = Path.cwd().resolve()
    for candidate in (here.parent.parent.parent, cwd, *cwd.parents):
        if (candidate / "data" / "summary.schema.json").exists():
            return candidate
    return here.parent.parent.parent


SUMMARY_SCHEMA_FILE = _discover_project_root() / "data" / "summary.schema.json"


def _load_json(path: Path) -> dict[str, Any]:
    if not path.exists():
        raise FileNotFoundError(f"Required JSON file not found: {path}")
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"Invalid JSON in {path}: {exc}") from exc
    if not isinstance(payload, dict):
        raise ValueError(f"JSON root for {path} must be an object")
    return payload


# =============================================================================
# Summary
# =============================================================================


def _rate(numerator: float, denominator: float) -> Optional[float]:
    return None if denominator == 0 else numerator / denominator


def mission_critical_block(
    verdicts: dict[str, int],
    in_flight: int,
    delays_ns: Iterable[int],
    via_tdma: int,
) -> dict[str, Any]:
    """Verdict counts, failure mix and delay statistics of the critical class."""
    missed = verdicts.get(Verdict.MISSED_DEADLINE.value, 0)
    lost = verdicts.get(Verdict.PACKET_LOSS.value, 0)
    failures = missed + lost
    delays = np.array(list(delays_ns), dtype=np.float64) / NS_PER_MS
    delay_ms: dict[str, Optional[float]] = {"mean": None, "p50": None, "p99": None, "max": None}
    if delays.size:
        delay_ms = {
            "mean": round(float(delays.mean()), 6),
            "p50": round(float(np.percentile(delays, 50)), 6),
            "p99": round(float(np.percentile(delays, 99)), 6),
            "max": round(float(delays.max()), 6),
        }
    return {
        "generated": sum(verdicts.values()) + in_flight,
        "success": verdicts.get(Verdict.SUCCESS.value, 0),
        "missed_deadline": missed,
        "packet_loss": lost,
        "in_flight": in_flight,
        "via_tdma": via_tdma,
        "failure_mix": None
        if failures == 0
        else {
            "missed_pct": round(100.0 * missed / failures, 6),
            "loss_pct": round(100.0 * lost / failures, 6),
            "failures": failures,
        },
        "delay_ms": delay_ms,
    }


def build_summary(result: "RunResult") -> dict[str, Any]:
    """Assemble summary.json content for one finished run."""
    scenario = result.scenario
    metrics = result.metrics
    critical = mission_critical_block(
        metrics.verdict_counts(),
        metrics.in_flight,
        (outcome.delay for outcome in metrics.outcomes if outcome.delay is not None),
        sum(1 for outcome in metrics.outcomes if outcome.via_tdma),
    )
    generated = metrics.tallies[TrafficClass.MISSION_CRITICAL].generated
    if critical["generated"] != generated:
        raise RuntimeError(
            f"outcome conservation violated: {critical['generated']} resolved + in flight "
            f"vs {generated} generated"
        )
    classes = {
        cls.value: {
            "generated": tally.generated,
            "generated_bytes": tally.generated_bytes,
            "delivered": tally.delivered,
            "delivered_bytes": tally.delivered_bytes,
            "lost": tally.lost,
        }
        for cls, tally in metrics.tallies.items()
    }
    offered = result.offered
    manager = result.manager
    return {
        "schema_version": SUMMARY_SCHEMA_VERSION,
        "name": scenario.name,
        "mac_mode": scenario.mac_mode.value,
        "seed": scenario.seed,
        "duration_s": scenario.duration_s,
        "events_processed": result.events_processed,
        "trace_digest": result.trace_digest,
        "offered_load": {
            "fraction": round(offered.fraction, 6),
            "bits_per_s": {key: round(value, 3) for key, value in offered.bits_per_s.items()},
            "critical_bit_share": round(offered.critical_bit_share, 6),
            "critical_count_share": round(offered.critical_count_share, 6),
        },
        "mission_critical": critical,
        "classes": classes,
        "non_critical_delivered_bytes": sum(
            metrics.tallies[cls].delivered_bytes for cls in NON_CRITICAL_CLASSES
        ),
        "channel": {
            "transmissions": result.channel.transmissions,
            "delivered": result.channel.delivered,
            "collided": result.channel.collided,
            "channel_errors": result.channel.channel_errors,
            "busy_ns_by_kind": dict(sorted(result.channel.busy_ns_by_kind.items())),
        },
        "diagnostics": result.diagnostics.as_dict(),
        "sync": result.sync,
        "manager": None
        if manager is None
        else {
            "grants": [
                {"node": g.node, "slots": list(g.slots), "version": g.version, "at_ns": g.at_ns}
                for g in manager.grants
            ],
            "rejections": [
                {"action": r.action, "reason": r.reason, "at_ns": r.at_ns} for r in manager.rejections
            ],
            "applied": [
                {
                    "version": a.version,
                    "effective_from": a.effective_from,
                    "at_ns": a.at_ns,
                    "n_tdma": a.n_tdma,
                    "tau_tdma_ns": a.tau_tdma_ns,
                }
                for a in manager.applied
            ],
        },
        "tracking": None if result.tracker is None else result.tracker.summary(),
        "ignored_injections": result.ignored_injections,
        "config": scenario.model_dump(mode="json"),
    }


def validate_summary(summary: dict[str, Any], schema_path: Optional[Path] = None) -> None:
    """Validate a summary against the versioned schema.

    Raises:
        ValueError: At the first schema violation, naming its location
    """
    try:
        from jsonschema import Draft202012Validator
    except ImportError as exc:
        raise RuntimeError(
            "The 'jsonschema' package is required for summary validation. "
            "Install it with: pip install jsonschema"
        ) from exc

    schema = _load_json(schema_path or SUMMARY_SCHEMA_FILE)
    validator = Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(summary), key=lambda e: list(e.path))
    if errors:
        first = errors[0]
        location = ".".join(str(token) for token in first.path) or "<root>"
        raise ValueError(f"summary failed schema validation at {location}: {first.message}")


# =============================================================================
# Writers
# =============================================================================


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def write_csv(path: Path, columns: Iterable[str], rows: Iterable[Iterable[Any]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(value) for value in row])


def write_run(result: "RunResult", out_dir: Path) -> dict[str, Path]:
    """Write every artifact of a run into ``out_dir`` and return their paths."""
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "outcomes": out_dir / "outcomes.csv",
        "throughput": out_dir / "throughput.csv",
        "summary": out_dir / "summary.json",
    }
    write_csv(
        paths["outcomes"],
        OUTCOME_COLUMNS,
        (
            (
                o.packet_id,
                o.flow,
                o.verdict.value,
                o.created_at,
                o.delivered_at,
                o.resolved_at,
                o.delay,
                o.deadline,
                o.attempts,
                o.via_tdma,
            )
            for o in result.metrics.outcomes
        ),
    )
    series = result.metrics.series
    per_class = [series.bytes_for(cls) for cls in DATA_CLASSES]
    write_csv(
        paths["throughput"],
        ("window_start_ns", "window_end_ns", *(f"{cls.value}_bytes" for cls in DATA_CLASSES)),
        (
            (k * series.window_ns, (k + 1) * series.window_ns, *(column[k] for column in per_class))
            for k in range(series.n_windows)
        ),
    )
    tracker = result.tracker
    if tracker is not None:
        paths["trajectory"] = out_dir / "trajectory.csv"
        write_csv(
            paths["trajectory"],
            TRAJECTORY_COLUMNS,
            (
                (
                    s.t_ns,
                    s.x,
                    s.y,
                    s.heading,
                    None if s.last_command_age_ns is None else s.last_command_age_ns / NS_PER_MS,
                )
                for s in tracker.samples
            ),
        )
    summary = build_summary(result)
    validate_summary(summary)
    paths["summary"].write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logger.info("wrote artifacts for %s to %s", result.scenario.name, out_dir)
    return paths


# =============================================================================
# Re-summarize and aggregate
# =============================================================================


def report(run_dir: Path) -> dict[str, Any]:
    """Recompute critical-class metrics and class bytes from a run's CSVs."""
    outcomes_path = run_dir / "outcomes.csv"
    throughput_path = run_dir / "throughput.csv"
    for path in (outcomes_path, throughput_path):
        if not path.exists():
            raise FileNotFoundError(f"Run artifact not found: {path}")

    verdicts = {verdict.value: 0 for verdict in Verdict}
    delays: list[int] = []
    via_tdma = 0
    with open(outcomes_path, "r", encoding="utf-8", newline="") as handle:
        for row in csv.DictReader(handle):
            verdict = row["verdict"]
            if verdict not in verdicts:
                raise ValueError(f"{outcomes_path}: unknown verdict '{verdict}'")
            verdicts[verdict] += 1
            if row["delay_ns"]:
                delays.append(int(row["delay_ns"]))
            via_tdma += row["via_tdma"] == "1"

    delivered_bytes: dict[str, int] = {}
    with open(throughput_path, "r", encoding="utf-8", newline="") as handle:
        for row in csv.DictReader(handle):
            for column, value in row.items():
                if column.endswith("_bytes"):
                    key = column[: -len("_bytes")]
                    delivered_bytes[key] = delivered_bytes.get(key, 0) + int(value)

    in_flight = 0
    summary_path = run_dir / "summary.json"
    if summary_path.exists():
        in_flight = int(_load_json(summary_path)["mission_critical"]["in_flight"])

    return {
        "run_dir": str(run_dir),
        "mission_critical": mission_critical_block(verdicts, in_flight, delays, via_tdma),
        "delivered_bytes": delivered_bytes,
        "non_critical_delivered_bytes": sum(
            delivered_bytes.get(cls.value, 0) for cls in NON_CRITICAL_CLASSES
        ),
    }


def _mean(values: list[float]) -> Optional[float]:
    return None if not values else round(float(np.mean(values)), 6)


def aggregate_summaries(summaries: list[dict[str, Any]]) -> dict[str, Any]:
    """Per-mode means plus paired hybrid-vs-csma comparisons over shared seeds."""
    by_mode: dict[str, dict[int, dict[str, Any]]] = {}
    for summary in summaries:
        by_mode.setdefault(summary["mac_mode"], {})[summary["seed"]] = summary

    modes: dict[str, Any] = {}
    for mode, runs in sorted(by_mode.items()):
        critical = [run["mission_critical"] for run in runs.values()]
        missed = sum(c["missed_deadline"] for c in critical)
        lost = sum(c["packet_loss"] for c in critical)
        rmses = [
            run["tracking"]["rmse_m"]
            for run in runs.values()
            if run.get("tracking") and run["tracking"]["rmse_m"] is not None
        ]
        modes[mode] = {
            "runs": len(runs),
            "seeds": sorted(runs),
            "mean_success": _mean([c["success"] for c in critical]),
            "mean_missed_deadline": _mean([c["missed_deadline"] for c in critical]),
            "mean_packet_loss": _mean([c["packet_loss"] for c in critical]),
            "pooled_missed_share_pct": None
            if missed + lost == 0
            else round(100.0 * missed / (missed + lost), 6),
            "mean_non_critical_bytes": _mean(
                [run["non_critical_delivered_bytes"] for run in runs.values()]
            ),
            "mean_rmse_m": _mean(rmses),
        }

    paired: Optional[dict[str, Any]] = None
    csma, hybrid = by_mode.get("csma", {}), by_mode.get("hybrid", {})
    shared = sorted(set(csma) & set(hybrid))
    if shared:
        csma_missed = [csma[s]["mission_critical"]["missed_deadline"] for s in shared]
        hybrid_missed = [hybrid[s]["mission_critical"]["missed_deadline"] for s in shared]
        csma_bytes = [csma[s]["non_critical_delivered_bytes"] for s in shared]
        hybrid_bytes = [hybrid[s]["non_critical_delivered_bytes"] for s in shared]
        reduction = _rate(float(np.mean(hybrid_missed)), float(np.mean(csma_missed)))
        ratio = _rate(float(np.mean(hybrid_bytes)), float(np.mean(csma_bytes)))
        paired = {
            "seeds": shared,
            "missed_deadline_reduction": None if reduction is None else round(1.0 - reduction, 6),
            "non_critical_bytes_ratio": None if ratio is None else round(ratio, 6),
        }
        rmse_pairs = [
            (csma[s]["tracking"]["rmse_m"], hybrid[s]["tracking"]["rmse_m"])
            for s in shared
            if csma[s].get("tracking")
            and hybrid[s].get("tracking")
            and csma[s]["tracking"]["rmse_m"] is not None
            and hybrid[s]["tracking"]["rmse_m"] is not None
        ]
        if rmse_pairs:
            paired["hybrid_rmse_lower"] = sum(1 for c, h in rmse_pairs if h < c)
            rmse_ratio = _rate(
                float(np.mean([h for _, h in rmse_pairs])),
                float(np.mean([c for c, _ in rmse_pairs])),
            )
            paired["rmse_reduction"] = None if rmse_ratio is None else round(1.0 - rmse_ratio, 6)
    return {"schema_version": SUMMARY_SCHEMA_VERSION, "modes": modes, "paired": paired}
