"""Outcome classification, failure mix and throughput windows.

Verdicts for deadline-constrained packets:
- Success: delivered and delivered_at − created_at ≤ deadline
- Missed deadline: delivered, but after the deadline
- Packet loss: never delivered (retries exhausted, or a lost TDMA shot)

Packets still unresolved when the run ends are "in flight" and kept out of
every mix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from hybrid_mac.contracts import Verdict
from hybrid_mac.traffic import Packet, PacketLedger
from hybrid_mac.traffic_classes import DATA_CLASSES, TrafficClass, is_deadline_class


@dataclass(frozen=True)
class TxOutcome:
    """Resolved fate of one deadline-constrained packet."""

    packet_id: int
    flow: str
    verdict: Verdict
    created_at: int
    resolved_at: int
    delivered_at: Optional[int]
    attempts: int
    deadline: Optional[int]
    via_tdma: bool = False

    @property
    def delay(self) -> Optional[int]:
        """End-to-end delay (queuing + contention + airtime) of a delivered packet."""
        if self.delivered_at is None:
            return None
        return self.delivered_at - self.created_at


def classify(packet: Packet) -> TxOutcome:
    """Classify a resolved packet.

    Raises:
        ValueError: If the packet is still unresolved
    """
    if packet.resolved_at is None and packet.delivered_at is None:
        raise ValueError(f"packet {packet.packet_id} is unresolved and cannot be classified.")
    if packet.delivered_at is not None:
        delay = packet.delivered_at - packet.created_at
        if packet.deadline is None or delay <= packet.deadline:
            verdict = Verdict.SUCCESS
        else:
            verdict = Verdict.MISSED_DEADLINE
        resolved_at = packet.delivered_at
    else:
        verdict = Verdict.PACKET_LOSS
        resolved_at = packet.resolved_at  # type: ignore[assignment]
    return TxOutcome(
        packet_id=packet.packet_id,
        flow=packet.flow,
        verdict=verdict,
        created_at=packet.created_at,
        resolved_at=resolved_at,
        delivered_at=packet.delivered_at,
        attempts=packet.attempt_count,
        deadline=packet.deadline,
        via_tdma=packet.via_tdma,
    )


@dataclass(frozen=True)
class FailureMix:
    """Shares of failures only (successes excluded)."""

    missed_pct: float
    loss_pct: float
    failures: int


def failure_mix(outcomes: Iterable[TxOutcome]) -> Optional[FailureMix]:
    """Missed-deadline vs loss percentages over failures; None when nothing failed."""
    missed = 0
    lost = 0
    for outcome in outcomes:
        if outcome.verdict == Verdict.MISSED_DEADLINE:
            missed += 1
        elif outcome.verdict == Verdict.PACKET_LOSS:
            lost += 1
    failures = missed + lost
    if failures == 0:
        return None
    return FailureMix(
        missed_pct=100.0 * missed / failures,
        loss_pct=100.0 * lost / failures,
        failures=failures,
    )


class ThroughputSeries:
    """Delivered bytes per class in half-open windows [k·w, (k+1)·w)."""

    def __init__(self, window_ns: int, run_end_ns: int) -> None:
        if window_ns <= 0:
            raise ValueError(f"window_ns must be > 0, got {window_ns}.")
        self.window_ns = window_ns
        self.run_end_ns = run_end_ns
        self.n_windows = max(1, math.ceil(run_end_ns / window_ns))
        self._bytes = {cls: np.zeros(self.n_windows, dtype=np.int64) for cls in DATA_CLASSES}

    def add(self, traffic_class: TrafficClass, size_bytes: int, delivered_at: int) -> None:
        if traffic_class not in self._bytes or not 0 <= delivered_at < self.run_end_ns:
            return
        self._bytes[traffic_class][delivered_at // self.window_ns] += size_bytes

    def bytes_for(self, traffic_class: TrafficClass) -> list[int]:
        return [int(value) for value in self._bytes[traffic_class]]


def throughput(series: ThroughputSeries, traffic_class: TrafficClass) -> list[int]:
    """Per-window delivered bytes of one class."""
    return series.bytes_for(traffic_class)


@dataclass
class ClassTally:
    generated: int = 0
    generated_bytes: int = 0
    delivered: int = 0
    delivered_bytes: int = 0
    lost: int = 0


@dataclass
class MetricsCollector:
    """Append-only collectors fed by the packet ledger."""

    series: ThroughputSeries
    outcomes: list[TxOutcome] = field(default_factory=list)
    tallies: dict[TrafficClass, ClassTally] = field(
        default_factory=lambda: {cls: ClassTally() for cls in DATA_CLASSES}
    )

    def attach(self, ledger: PacketLedger) -> None:
        ledger.on_delivered(self._on_delivered)
        ledger.on_resolved(self._on_resolved)

    def _on_delivered(self, packet: Packet, now: int) -> None:
        tally = self.tallies.get(packet.traffic_class)
        if tally is None:
            return
        tally.delivered += 1
        tally.delivered_bytes += packet.size_bytes
        self.series.add(packet.traffic_class, packet.size_bytes, now)
        if is_deadline_class(packet.traffic_class):
            self.outcomes.append(classify(packet))

    def _on_resolved(self, packet: Packet, now: int) -> None:
        tally = self.tallies.get(packet.traffic_class)
        if tally is None or packet.delivered_at is not None:
            return
        tally.lost += 1
        if is_deadline_class(packet.traffic_class):
            self.outcomes.append(classify(packet))

    def finalize(self, ledger: PacketLedger) -> "RunMetrics":
        """Count generation per class and separate in-flight packets."""
        for packet in ledger.generated:
            tally = self.tallies[packet.traffic_class]
            tally.generated += 1
            tally.generated_bytes += packet.size_bytes
        in_flight = sum(
            1
            for packet in ledger.generated
            if is_deadline_class(packet.traffic_class) and packet.delivered_at is None and packet.resolved_at is None
        )
        return RunMetrics(
            outcomes=sorted(self.outcomes, key=lambda outcome: outcome.packet_id),
            tallies=self.tallies,
            series=self.series,
            in_flight=in_flight,
        )


@dataclass
class RunMetrics:
    outcomes: list[TxOutcome]
    tallies: dict[TrafficClass, ClassTally]
    series: ThroughputSeries
    in_flight: int

    def verdict_counts(self) -> dict[str, int]:
        counts = {verdict.value: 0 for verdict in Verdict}
        for outcome in self.outcomes:
            counts[outcome.verdict.value] += 1
        return counts

