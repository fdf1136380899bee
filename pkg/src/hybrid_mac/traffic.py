"""Traffic generators for the robotic workload.

This module produces the three application traffic classes and hands their
packets to the sending node's MAC:

1. Large-volume: a fixed-period bulk transfer, fragmented to MTU payloads
2. Event-driven: a Poisson request/response cycle
   (poll → history → response delay → reply)
3. Mission-critical: strictly periodic commands with a QoS deadline

Generators only emit arrivals with ``created_at`` inside the half-open run
window [0, horizon). Resolution of every packet flows back through the
``PacketLedger``, which also drives the next step of event-driven cycles.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable, Optional

from hybrid_mac.config import NS_PER_MS, NS_PER_S
from hybrid_mac.contracts import Direction, ScenarioConfig
from hybrid_mac.engine import EventKind, Simulator
from hybrid_mac.medium import FrameKind
from hybrid_mac.traffic_classes import TrafficClass

if TYPE_CHECKING:
    from hybrid_mac.contracts import (
        EventDrivenConfig,
        LargeVolumeConfig,
        MissionCriticalConfig,
    )
    from hybrid_mac.randomness import RngStream

logger = logging.getLogger(__name__)

SERVER = 0

Submit = Callable[["Packet"], None]


@dataclass
class Packet:
    """One unit of traffic handed to a MAC."""

    packet_id: int
    traffic_class: TrafficClass
    size_bytes: int
    created_at: int
    src: int
    dst: Optional[int]
    deadline: Optional[int] = None  # relative, ns
    flow: str = ""
    message_id: Optional[int] = None
    frame_kind: FrameKind = FrameKind.DATA
    payload: bytes = b""
    on_tx_start: Optional[Callable[["Packet", int], None]] = None
    command: Optional[float] = None  # steering rate carried by tracking commands
    attempt_count: int = 0
    delivered_at: Optional[int] = None
    resolved_at: Optional[int] = None
    via_tdma: bool = False

    @property
    def absolute_deadline(self) -> Optional[int]:
        if self.deadline is None:
            return None
        return self.created_at + self.deadline

    @property
    def delivered(self) -> bool:
        return self.delivered_at is not None

    @property
    def resolved(self) -> bool:
        return self.resolved_at is not None


def fragment_sizes(total_bytes: int, mtu_bytes: int) -> list[int]:
    """Split a burst into MTU payloads; sizes sum to ``total_bytes``."""
    if mtu_bytes <= 0:
        raise ValueError(f"mtu_bytes must be > 0, got {mtu_bytes}.")
    if total_bytes <= 0:
        return []
    full, rest = divmod(total_bytes, mtu_bytes)
    return [mtu_bytes] * full + ([rest] if rest else [])


def flow_endpoints(direction: Direction, client: int, peer: int = SERVER) -> tuple[int, int]:
    """(source, destination) of a flow between an application server and a client."""
    if direction == Direction.SERVER_TO_CLIENT:
        return peer, client
    return client, peer


class PacketLedger:
    """Assigns packet ids, tracks outstanding packets and fans out outcomes.

    ``delivered`` fires once per packet at its first successful reception;
    ``resolved`` fires once when the sender is done with it (acknowledged,
    retries exhausted, or a TDMA slot's single shot resolved).
    """

    def __init__(self) -> None:
        self._next_packet_id = 0
        self._next_message_id = 0
        self.generated: list[Packet] = []
        self.outstanding: dict[int, Packet] = {}
        self._delivered_hooks: list[Callable[[Packet, int], None]] = []
        self._resolved_hooks: list[Callable[[Packet, int], None]] = []
        self._messages: dict[int, _Message] = {}

    def on_delivered(self, hook: Callable[[Packet, int], None]) -> None:
        self._delivered_hooks.append(hook)

    def on_resolved(self, hook: Callable[[Packet, int], None]) -> None:
        self._resolved_hooks.append(hook)

    def new_packet(self, **fields: object) -> Packet:
        packet = Packet(packet_id=self._next_packet_id, **fields)  # type: ignore[arg-type]
        self._next_packet_id += 1
        if packet.traffic_class != TrafficClass.MANAGEMENT:
            self.generated.append(packet)
        self.outstanding[packet.packet_id] = packet
        return packet

    def new_message(self, packets: list[Packet], on_done: Optional[Callable[[int], None]]) -> int:
        """Group fragments; ``on_done(now)`` fires when the last one resolves."""
        message_id = self._next_message_id
        self._next_message_id += 1
        for packet in packets:
            packet.message_id = message_id
        self._messages[message_id] = _Message(remaining=len(packets), on_done=on_done)
        return message_id

    def delivered(self, packet: Packet, now: int) -> None:
        if packet.delivered_at is not None:
            return
        packet.delivered_at = now
        for hook in self._delivered_hooks:
            hook(packet, now)

    def resolved(self, packet: Packet, now: int) -> None:
        if packet.resolved_at is not None:
            return
        packet.resolved_at = now
        self.outstanding.pop(packet.packet_id, None)
        for hook in self._resolved_hooks:
            hook(packet, now)
        if packet.message_id is not None:
            message = self._messages.get(packet.message_id)
            if message is not None:
                message.remaining -= 1
                if message.remaining == 0:
                    del self._messages[packet.message_id]
                    if message.on_done is not None:
                        message.on_done(now)


@dataclass
class _Message:
    remaining: int
    on_done: Optional[Callable[[int], None]] = None


class LargeVolumeGenerator:
    """Fixed-period bulk bursts (default 5 MiB every 3 s, client → server)."""

    def __init__(
        self,
        sim: Simulator,
        ledger: PacketLedger,
        submit: Submit,
        settings: "LargeVolumeConfig",
        mtu_bytes: int,
        horizon: int,
    ) -> None:
        self.sim = sim
        self.ledger = ledger
        self.submit = submit
        self.settings = settings
        self.mtu_bytes = mtu_bytes
        self.horizon = horizon
        self.period = round(settings.period_s * NS_PER_S)
        self.src, self.dst = flow_endpoints(settings.direction, settings.client, settings.peer)
        self.bursts: list[int] = []

    def start(self) -> None:
        if self.horizon > 0:
            self.sim.call_at(0, EventKind.TRAFFIC_ARRIVAL, self._burst, "large_volume")

    def _burst(self) -> None:
        now = self.sim.now
        self.bursts.append(now)
        packets = [
            self.ledger.new_packet(
                traffic_class=TrafficClass.LARGE_VOLUME,
                size_bytes=size,
                created_at=now,
                src=self.src,
                dst=self.dst,
                flow="large_volume",
            )
            for size in fragment_sizes(self.settings.burst_bytes, self.mtu_bytes)
        ]
        if packets:
            self.ledger.new_message(packets, on_done=None)
            logger.debug("large-volume burst at %d ns: %d fragments", now, len(packets))
        for packet in packets:
            self.submit(packet)
        if now + self.period < self.horizon:
            self.sim.call_at(now + self.period, EventKind.TRAFFIC_ARRIVAL, self._burst, "large_volume")


@dataclass
class EventCycle:
    """Timeline of one request/response cycle."""

    index: int
    started_at: int
    history_at: Optional[int] = None
    reply_at: Optional[int] = None
    done_at: Optional[int] = None
    order: list[str] = field(default_factory=list)


class EventDrivenGenerator:
    """Poisson-arriving poll → history → (response delay) → reply cycles.

    Cycles may overlap: a new cycle starts on its own arrival regardless of
    whether earlier cycles are still waiting on the channel or the responder.
    """

    def __init__(
        self,
        sim: Simulator,
        ledger: PacketLedger,
        submit: Submit,
        settings: "EventDrivenConfig",
        mtu_bytes: int,
        horizon: int,
        arrival_rng: "RngStream",
        response_rng: "RngStream",
    ) -> None:
        self.sim = sim
        self.ledger = ledger
        self.submit = submit
        self.settings = settings
        self.mtu_bytes = mtu_bytes
        self.horizon = horizon
        self.arrival_rng = arrival_rng
        self.response_rng = response_rng
        self.requester, self.responder = flow_endpoints(settings.direction, settings.client, settings.peer)
        self.cycles: list[EventCycle] = []

    def draw_interarrival(self) -> int:
        return round(self.arrival_rng.exponential(self.settings.interarrival_mean_s) * NS_PER_S)

    def draw_response_delay(self) -> int:
        if self.settings.response_mean_s == 0:
            return 0
        return round(self.response_rng.exponential(self.settings.response_mean_s) * NS_PER_S)

    def start(self) -> None:
        self._schedule_next(0)

    def _schedule_next(self, now: int) -> None:
        at = now + self.draw_interarrival()
        if at < self.horizon:
            self.sim.call_at(at, EventKind.TRAFFIC_ARRIVAL, self._start_cycle, "event_driven")

    def _start_cycle(self) -> None:
        now = self.sim.now
        cycle = EventCycle(index=len(self.cycles), started_at=now)
        self.cycles.append(cycle)
        self._schedule_next(now)
        self._emit(
            cycle,
            "poll",
            self.settings.poll_bytes,
            self.requester,
            self.responder,
            lambda t: self._send_history(cycle, t),
        )

    def _send_history(self, cycle: EventCycle, now: int) -> None:
        cycle.history_at = now
        self._emit(
            cycle,
            "history",
            self.settings.history_bytes,
            self.responder,
            self.requester,
            lambda t: self._await_reply(cycle, t),
        )

    def _await_reply(self, cycle: EventCycle, now: int) -> None:
        delay = self.draw_response_delay()
        self.sim.call_at(
            now + delay,
            EventKind.TRAFFIC_ARRIVAL,
            lambda: self._send_reply(cycle),
            "event_driven:reply",
        )

    def _send_reply(self, cycle: EventCycle) -> None:
        now = self.sim.now
        cycle.reply_at = now
        self._emit(
            cycle,
            "fsm",
            self.settings.fsm_bytes,
            self.requester,
            self.responder,
            lambda t: setattr(cycle, "done_at", t),
        )

    def _emit(
        self,
        cycle: EventCycle,
        stage: str,
        size_bytes: int,
        src: int,
        dst: int,
        on_done: Callable[[int], None],
    ) -> None:
        now = self.sim.now
        cycle.order.append(stage)
        packets = [
            self.ledger.new_packet(
                traffic_class=TrafficClass.EVENT_DRIVEN,
                size_bytes=size,
                created_at=now,
                src=src,
                dst=dst,
                flow=f"event_driven:{stage}",
            )
            for size in fragment_sizes(size_bytes, self.mtu_bytes)
        ]
        if not packets:
            on_done(now)
            return
        self.ledger.new_message(packets, on_done=on_done)
        for packet in packets:
            self.submit(packet)


class MissionCriticalGenerator:
    """Strictly periodic commands: created_at(k) = k · period, deadline relative."""

    def __init__(
        self,
        sim: Simulator,
        ledger: PacketLedger,
        submit: Submit,
        settings: "MissionCriticalConfig",
        src: int,
        dst: int,
        horizon: int,
        command_source: Optional[Callable[[int], float]] = None,
    ) -> None:
        self.sim = sim
        self.ledger = ledger
        self.submit = submit
        self.settings = settings
        self.src = src
        self.dst = dst
        self.horizon = horizon
        self.period = round(settings.period_ms * NS_PER_MS)
        self.deadline = round(settings.deadline_ms * NS_PER_MS)
        self.command_source = command_source
        self.flow = f"mission_critical:{src}->{dst}"
        self.issued = 0

    def start(self) -> None:
        if self.horizon > 0:
            self.sim.call_at(0, EventKind.TRAFFIC_ARRIVAL, self._issue, self.flow)

    def _issue(self) -> None:
        now = self.sim.now
        command = self.command_source(now) if self.command_source is not None else None
        packet = self.ledger.new_packet(
            traffic_class=TrafficClass.MISSION_CRITICAL,
            size_bytes=self.settings.size_bytes,
            created_at=now,
            src=self.src,
            dst=self.dst,
            deadline=self.deadline,
            flow=self.flow,
            command=command,
        )
        self.issued += 1
        self.submit(packet)
        next_at = self.issued * self.period
        if next_at < self.horizon:
            self.sim.call_at(next_at, EventKind.TRAFFIC_ARRIVAL, self._issue, self.flow)


# =============================================================================
# Offered load
# =============================================================================


@dataclass(frozen=True)
class OfferedLoad:
    """Analytic mean offered payload per class."""

    bits_per_s: dict[str, float]
    packets_per_s: dict[str, float]
    data_rate_bps: int

    @property
    def total_bits_per_s(self) -> float:
        return sum(self.bits_per_s.values())

    @property
    def fraction(self) -> float:
        return self.total_bits_per_s / self.data_rate_bps

    @property
    def critical_bit_share(self) -> float:
        total = self.total_bits_per_s
        if total == 0:
            return 0.0
        return self.bits_per_s[TrafficClass.MISSION_CRITICAL.value] / total

    @property
    def critical_count_share(self) -> float:
        total = sum(self.packets_per_s.values())
        if total == 0:
            return 0.0
        return self.packets_per_s[TrafficClass.MISSION_CRITICAL.value] / total


def offered_load_breakdown(scenario: ScenarioConfig) -> OfferedLoad:
    """Mean offered payload bits/s and packets/s per traffic class."""
    traffic = scenario.traffic
    mtu = traffic.mtu_bytes
    bits = {cls.value: 0.0 for cls in (TrafficClass.MISSION_CRITICAL, TrafficClass.LARGE_VOLUME, TrafficClass.EVENT_DRIVEN)}
    packets = dict(bits)

    large = traffic.large_volume
    if large.enabled and large.burst_bytes > 0:
        bits[TrafficClass.LARGE_VOLUME.value] = 8 * large.burst_bytes / large.period_s
        packets[TrafficClass.LARGE_VOLUME.value] = math.ceil(large.burst_bytes / mtu) / large.period_s

    event = traffic.event_driven
    if event.enabled:
        sizes = (event.poll_bytes, event.history_bytes, event.fsm_bytes)
        bits[TrafficClass.EVENT_DRIVEN.value] = 8 * sum(sizes) / event.interarrival_mean_s
        packets[TrafficClass.EVENT_DRIVEN.value] = (
            sum(math.ceil(size / mtu) for size in sizes) / event.interarrival_mean_s
        )

    critical = traffic.mission_critical
    if critical.enabled:
        rate = 1000.0 / critical.period_ms * len(critical.flows)
        bits[TrafficClass.MISSION_CRITICAL.value] = 8 * critical.size_bytes * rate
        packets[TrafficClass.MISSION_CRITICAL.value] = rate

    return OfferedLoad(bits_per_s=bits, packets_per_s=packets, data_rate_bps=scenario.phy.data_rate_bps)


def offered_load(scenario: ScenarioConfig) -> float:
    """Mean offered payload bits/s divided by the channel data rate."""
    return offered_load_breakdown(scenario).fraction
