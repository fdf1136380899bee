"""Hybrid TDMA/CSMA MAC.

Each superframe starts with a server beacon that carries the server's
transmit timestamp, the NAV of the protected part and the server
receive times of the clients' last sync responses. After the beacon come
three sections:

- TDMA: one mission-critical packet per owned slot, sent when the node's
  counter reaches its slot timestamp; no carrier sense, no NAV, no ACK
- CTL: DCF contention for management frames (sync responses, slot maps,
  association), ignoring the beacon NAV
- GEN: DCF contention for everything else, behind the beacon NAV

Clients see the superframe only through their own clock and PTP estimate,
so every section boundary is computed on the node's counter and converted
to true time through its oscillator.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable, Optional

from hybrid_mac.clocks import (
    ClockState,
    PtpEstimate,
    SyncRecord,
    periodic_sync_due,
    ptp_update,
    schedule_slot_tx,
)
from hybrid_mac.config import MGMT_HEADER_BYTES, SERVER_NODE
from hybrid_mac.contracts import Section, SuperframeConfig
from hybrid_mac.engine import EventKind, Simulator
from hybrid_mac.frames import (
    AssociationReply,
    BeaconPayload,
    SlotMapPayload,
    SyncResponsePayload,
    TimestampRecord,
    decode_association_reply,
    decode_association_request,
    decode_beacon,
    decode_slot_map,
    decode_sync_response,
    encode_association_reply,
    encode_association_request,
    encode_beacon,
    encode_slot_map,
    encode_sync_response,
)
from hybrid_mac.mac_csma import DcfStation, MacNode
from hybrid_mac.medium import Frame, FrameKind, Medium, RxResult, Transmission
from hybrid_mac.traffic_classes import TrafficClass

if TYPE_CHECKING:
    from hybrid_mac.contracts import DcfParams
    from hybrid_mac.diagnostics import Diagnostics
    from hybrid_mac.randomness import RngRegistry
    from hybrid_mac.traffic import Packet, PacketLedger

logger = logging.getLogger(__name__)

# Frames searched ahead for a free owned slot
TDMA_LOOKAHEAD_FRAMES = 64
# Sync rounds older than this many superframes are forgotten
PENDING_ROUND_LIMIT = 16


@dataclass(frozen=True)
class SlotMap:
    """Versioned TDMA schedule: superframe layout plus slot ownership."""

    version: int
    effective_from: int
    superframe: SuperframeConfig
    assignments: tuple[tuple[int, int], ...] = ()  # (slot, node), sorted by slot

    def owner(self, slot_index: int) -> Optional[int]:
        for slot, node in self.assignments:
            if slot == slot_index:
                return node
        return None

    def slots_of(self, node: int) -> list[int]:
        return [slot for slot, owner in self.assignments if owner == node]

    def to_payload(self) -> SlotMapPayload:
        return SlotMapPayload(
            version=self.version,
            effective_from=self.effective_from,
            n_tdma=self.superframe.n_tdma,
            tau_tdma_ns=self.superframe.tau_tdma_ns,
            t_ctl_ns=self.superframe.t_ctl_ns,
            assignments=self.assignments,
        )

    @classmethod
    def from_payload(cls, payload: SlotMapPayload, base: SuperframeConfig) -> "SlotMap":
        superframe = SuperframeConfig(
            superframe_ns=base.superframe_ns,
            n_tdma=payload.n_tdma,
            tau_tdma_ns=payload.tau_tdma_ns,
            t_ctl_ns=payload.t_ctl_ns,
            beacon_airtime_ns=base.beacon_airtime_ns,
            guard_ns=base.guard_ns,
        )
        return cls(
            version=payload.version,
            effective_from=payload.effective_from,
            superframe=superframe,
            assignments=tuple(sorted(payload.assignments)),
        )


@dataclass
class QueueSet:
    """Per-node queues; TDMA data and timestamps are kept pairwise."""

    tdma_data: deque = field(default_factory=deque)
    tdma_timestamps: deque = field(default_factory=deque)
    tdma_backlog: deque = field(default_factory=deque)  # waiting for a slot
    csma_ctl: deque = field(default_factory=deque)
    csma_gen: deque = field(default_factory=deque)

    @staticmethod
    def queue_for(packet: "Packet") -> str:
        """Queue a packet is classified into (by traffic class)."""
        return packet.traffic_class.queue_name


class FrameTiming:
    """A node's view of superframe timing on its own counter."""

    def __init__(self, clock: ClockState, superframe_ns: int) -> None:
        self.clock = clock
        self.superframe_ns = superframe_ns
        self.ref_frame: Optional[int] = None

    @property
    def known(self) -> bool:
        return self.ref_frame is not None

    def estimate_for(self, frame_index: int) -> PtpEstimate:
        assert self.ref_frame is not None
        return self.clock.estimate.shifted(frame_index - self.ref_frame, self.superframe_ns)

    def local_frame_start(self, frame_index: int) -> int:
        """Counter value at which the server starts frame ``frame_index``."""
        est = self.estimate_for(frame_index)
        return est.frame_ref + est.o_hat - est.d_hat

    def frame_start(self, frame_index: int) -> int:
        return self.clock.true_at(self.local_frame_start(frame_index))

    def frame_at(self, now: int) -> int:
        assert self.ref_frame is not None
        base = self.local_frame_start(self.ref_frame)
        return self.ref_frame + (self.clock.local(now) - base) // self.superframe_ns


class SectionGate:
    """Opens a DCF station only inside one section of the node's superframe.

    An exchange must end one guard interval before the section ends.
    """

    def __init__(self, node: "HybridNode", section: Section) -> None:
        self.node = node
        self.section = section

    def _bounds_local(self, frame_index: int) -> tuple[int, int, int]:
        superframe = self.node.map_for(frame_index).superframe
        start, end = superframe.section_bounds(self.section)
        base = self.node.timing.local_frame_start(frame_index)
        return base + start, base + end, superframe.guard_ns

    def is_open(self, now: int) -> bool:
        if not self.node.timing.known:
            return False
        frame_index = self.node.timing.frame_at(now)
        start, end, guard = self._bounds_local(frame_index)
        local = self.node.clock.local(now)
        return start <= local < end - guard

    def next_open(self, now: int) -> Optional[int]:
        if not self.node.timing.known:
            return None
        frame_index = self.node.timing.frame_at(now)
        start, _, _ = self._bounds_local(frame_index)
        if self.node.clock.local(now) >= start:
            start, _, _ = self._bounds_local(frame_index + 1)
        return self.node.clock.true_at(start)

    def fits(self, now: int, exchange_ns: int) -> bool:
        if not self.node.timing.known:
            return False
        frame_index = self.node.timing.frame_at(now)
        _, end, guard = self._bounds_local(frame_index)
        return now + exchange_ns <= self.node.clock.true_at(end - guard)


@dataclass
class _SyncRound:
    s_ap_beacon: int
    s_tilde_arrival: int


class HybridNode(MacNode):
    """Client side of the hybrid MAC (the server extends it)."""

    def __init__(
        self,
        node_id: int,
        sim: Simulator,
        medium: Medium,
        dcf: "DcfParams",
        ledger: "PacketLedger",
        diagnostics: "Diagnostics",
        rngs: "RngRegistry",
        clock: ClockState,
        initial_map: SlotMap,
        sync_period_ns: int,
        associated: bool = True,
        max_ppdu_ns: int = 0,
    ) -> None:
        super().__init__(node_id, sim, medium, dcf, ledger, diagnostics)
        self.clock = clock
        self.base_superframe = initial_map.superframe
        self.timing = FrameTiming(clock, initial_map.superframe.superframe_ns)
        self.maps: list[SlotMap] = [initial_map]
        self.required_version = initial_map.version
        self.sync_period_ns = sync_period_ns
        self.associated = associated
        self.queues = QueueSet()
        self.ctl = DcfStation(
            self,
            dcf,
            rngs.stream(f"backoff:{node_id}:ctl"),
            name=f"ctl:{node_id}",
            queue=self.queues.csma_ctl,
            gate=SectionGate(self, Section.CTL),
            respects_nav=False,
            access="ctl",
        )
        self.gen = DcfStation(
            self,
            dcf,
            rngs.stream(f"backoff:{node_id}:gen"),
            name=f"gen:{node_id}",
            queue=self.queues.csma_gen,
            gate=SectionGate(self, Section.GEN),
            respects_nav=True,
            access="gen",
            max_ppdu_ns=max_ppdu_ns,
        )
        self.held: list["Packet"] = []
        self._pending_rounds: dict[int, _SyncRound] = {}
        self._claims: dict[int, tuple[int, int]] = {}  # timestamp -> (frame, slot)
        self._slot_timer: Optional[int] = None
        self.sync_rounds = 0
        self.beacons_decoded = 0
        self.residual_errors: list[int] = []  # |o_hat - o_i| at every TDMA transmission heard on air
        self.round_errors: list[int] = []  # |o_hat - o_i| when a sync round completes
        self.tdma_sent = 0
        self.slot_usage: list[tuple[int, int]] = []  # (frame, slot) of each TDMA fire

    # ------------------------------------------------------------------
    # Schedules
    # ------------------------------------------------------------------

    def map_for(self, frame_index: int) -> SlotMap:
        """Latest received slot map in force at ``frame_index``."""
        best = self.maps[0]
        for slot_map in self.maps:
            if slot_map.effective_from <= frame_index and (
                slot_map.effective_from,
                slot_map.version,
            ) >= (best.effective_from, best.version):
                best = slot_map
        return best

    def known_versions(self) -> set[int]:
        return {slot_map.version for slot_map in self.maps}

    @property
    def tdma_suspended(self) -> bool:
        """The beacon advertises a schedule this node has not received."""
        return self.required_version not in self.known_versions()

    def install_map(self, slot_map: SlotMap) -> None:
        if slot_map.version in self.known_versions():
            return
        self.maps.append(slot_map)
        logger.debug(
            "node %d received slot map v%d effective from frame %d",
            self.node_id,
            slot_map.version,
            slot_map.effective_from,
        )
        self._schedule_tdma()

    def owns_any_slot(self) -> bool:
        return any(slot_map.slots_of(self.node_id) for slot_map in self.maps)

    def section_gate(self, now: int) -> Optional[Section]:
        """Section ``now`` falls in on this node's view (None before any beacon)."""
        if not self.timing.known:
            return None
        frame_index = self.timing.frame_at(now)
        offset = self.clock.local(now) - self.timing.local_frame_start(frame_index)
        return self.map_for(frame_index).superframe.section_at(offset)

    # ------------------------------------------------------------------
    # Classification
    # ------------------------------------------------------------------

    def submit(self, packet: "Packet") -> None:
        self.classify_and_enqueue(packet)

    def classify_and_enqueue(self, packet: "Packet") -> str:
        """Route a packet to tdma_data, csma_ctl or csma_gen by traffic class."""
        if not self.associated and packet.traffic_class != TrafficClass.MANAGEMENT:
            self.held.append(packet)
            return "held"
        queue = QueueSet.queue_for(packet)
        if queue == "tdma_data":
            if not self.owns_any_slot():
                self.diagnostics.report(
                    "tdma_fallback", self.sim.now, f"node {self.node_id} owns no slot; command sent in GEN"
                )
                self.gen.enqueue(packet)
                return "csma_gen"
            self.queues.tdma_backlog.append(packet)
            self._schedule_tdma()
            return queue
        if queue == "csma_ctl":
            self.ctl.enqueue(packet)
        else:
            self.gen.enqueue(packet)
        return queue

    # ------------------------------------------------------------------
    # TDMA
    # ------------------------------------------------------------------

    def can_use_tdma(self) -> bool:
        return (
            self.associated
            and self.timing.known
            and self.clock.estimate.synchronized
            and not self.tdma_suspended
        )

    def slot_send_local(self, frame_index: int, slot_index: int, slot_map: SlotMap) -> int:
        """Counter value at which to send in slot j of a frame, past the beacon period."""
        superframe = slot_map.superframe
        return (
            schedule_slot_tx(self.timing.estimate_for(frame_index), slot_index, superframe.tau_tdma_ns)
            + superframe.beacon_airtime_ns
            + superframe.guard_ns // 2
        )

    def _schedule_tdma(self) -> None:
        """(Re)assign every queued command to the next free owned slot."""
        queues = self.queues
        packets = list(queues.tdma_data) + list(queues.tdma_backlog)
        queues.tdma_data.clear()
        queues.tdma_timestamps.clear()
        queues.tdma_backlog.clear()
        self._claims.clear()
        if not packets:
            self._arm_slot_timer()
            return
        if not self.can_use_tdma():
            queues.tdma_backlog.extend(packets)
            self._arm_slot_timer()
            return
        local_now = self.clock.local(self.sim.now)
        first_frame = self.timing.frame_at(self.sim.now)
        claimed: set[tuple[int, int]] = set()
        for packet in packets:
            timestamp = self._next_free_slot(first_frame, local_now, claimed)
            if timestamp is None:
                queues.tdma_backlog.append(packet)
                continue
            queues.tdma_data.append(packet)
            queues.tdma_timestamps.append(timestamp)
        self._arm_slot_timer()

    def _next_free_slot(
        self, first_frame: int, local_now: int, claimed: set[tuple[int, int]]
    ) -> Optional[int]:
        for frame_index in range(first_frame, first_frame + TDMA_LOOKAHEAD_FRAMES):
            slot_map = self.map_for(frame_index)
            for slot_index in slot_map.slots_of(self.node_id):
                if (frame_index, slot_index) in claimed:
                    continue
                timestamp = self.slot_send_local(frame_index, slot_index, slot_map)
                if timestamp <= local_now:
                    continue
                claimed.add((frame_index, slot_index))
                self._claims[timestamp] = (frame_index, slot_index)
                return timestamp
        return None

    def _arm_slot_timer(self) -> None:
        if self._slot_timer is not None:
            self.sim.cancel(self._slot_timer)
            self._slot_timer = None
        if not self.queues.tdma_timestamps:
            return
        fire_at = max(self.clock.true_at(self.queues.tdma_timestamps[0]), self.sim.now)
        self._slot_timer = self.sim.call_at(
            fire_at, EventKind.SLOT_TIMER, self.tdma_fire, f"slot:{self.node_id}"
        )

    def tdma_fire(self) -> None:
        """Counter reached the head timestamp: send the head packet in its slot."""
        self._slot_timer = None
        now = self.sim.now
        queues = self.queues
        if not queues.tdma_timestamps:
            return
        timestamp = queues.tdma_timestamps[0]
        frame_index, slot_index = self._claims.get(timestamp, (-1, -1))
        slot_map = self.map_for(frame_index)
        owned = frame_index >= 0 and slot_map.owner(slot_index) == self.node_id
        in_slot = owned and abs(
            self.slot_send_local(frame_index, slot_index, slot_map) - timestamp
        ) <= slot_map.superframe.guard_ns // 2
        if not (owned and in_slot and self.can_use_tdma()):
            self.diagnostics.report(
                "tdma_stale_timestamp",
                now,
                f"node {self.node_id} timestamp {timestamp} outside its slot; rescheduled",
                node=self.node_id,
            )
            self._schedule_tdma()
            return
        if self.medium.is_transmitting(self.node_id, now):
            self.diagnostics.report(
                "tdma_radio_busy", now, f"node {self.node_id} busy at slot {slot_index}", node=self.node_id
            )
            self._schedule_tdma()
            return
        packet = queues.tdma_data.popleft()
        queues.tdma_timestamps.popleft()
        del self._claims[timestamp]
        packet.via_tdma = True
        packet.attempt_count += 1
        frame = Frame(
            kind=FrameKind.DATA,
            src=self.node_id,
            dst=packet.dst,
            size_bytes=packet.size_bytes + self.medium.phy.mac_overhead_bytes,
            packet=packet,
            access="tdma",
        )
        self.transmit(frame)
        self.tdma_sent += 1
        self.slot_usage.append((frame_index, slot_index))
        self._arm_slot_timer()

    # ------------------------------------------------------------------
    # Beacon and synchronization (client)
    # ------------------------------------------------------------------

    def on_management(self, tx: Transmission, now: int) -> None:
        kind = tx.frame.kind
        if kind == FrameKind.BEACON:
            self._on_beacon(tx, now)
        elif kind == FrameKind.SLOT_MAP:
            self.install_map(SlotMap.from_payload(decode_slot_map(tx.frame.payload), self.base_superframe))
        elif kind == FrameKind.ASSOC_REPLY:
            self._on_association_reply(decode_association_reply(tx.frame.payload))

    def on_frame_lost(self, tx: Transmission, result: RxResult, now: int) -> None:
        if tx.frame.kind == FrameKind.BEACON:
            self.diagnostics.report(
                "beacon_missed",
                now,
                f"node {self.node_id} lost a beacon ({result.value}); sync round skipped",
                node=self.node_id,
            )

    def _on_beacon(self, tx: Transmission, now: int) -> None:
        beacon = decode_beacon(tx.frame.payload)
        s_tilde = self.clock.local(self.medium.arrival_start(self.node_id, tx))
        self.beacons_decoded += 1
        self.medium.set_nav(self.node_id, now + beacon.nav_ns)

        estimate = self.clock.estimate
        completed = False
        record = beacon.record_for(self.node_id)
        if record is not None:
            sync_round = self._pending_rounds.pop(record.frame_index, None)
            if sync_round is not None:
                estimate = ptp_update(
                    SyncRecord(
                        s_ap_beacon=sync_round.s_ap_beacon,
                        s_tilde_arrival=sync_round.s_tilde_arrival,
                        s_response=record.s_response,
                        t_server_rx=record.t_rx,
                    ),
                    synced_at=sync_round.s_tilde_arrival,
                )
                self.sync_rounds += 1
                completed = True
                if estimate.d_hat < 0:
                    self.diagnostics.report(
                        "negative_delay_estimate", now, f"node {self.node_id} d_hat={estimate.d_hat}"
                    )
        self.clock.estimate = estimate.rebased(s_tilde)
        if completed:
            self.round_errors.append(self.clock.offset_error(now))
        self.timing.ref_frame = beacon.frame_index
        self.required_version = beacon.schedule_version
        if self.tdma_suspended:
            self.diagnostics.report(
                "tdma_suspended",
                now,
                f"node {self.node_id} lacks slot map v{beacon.schedule_version}",
                node=self.node_id,
            )
        for frame_index in [f for f in self._pending_rounds if f < beacon.frame_index - PENDING_ROUND_LIMIT]:
            del self._pending_rounds[frame_index]

        if self.associated:
            ctl_open = self.timing.frame_start(beacon.frame_index) + self.map_for(
                beacon.frame_index
            ).superframe.ctl_start_ns
            self.sim.call_at(
                max(ctl_open, now),
                EventKind.SYNC_DUE,
                lambda: self._sync_decision(beacon.frame_index, beacon.s_ap, s_tilde),
                f"sync:{self.node_id}",
            )
        self._schedule_tdma()
        self.ctl.poke()
        self.gen.poke()

    def _sync_outstanding(self) -> bool:
        packets = list(self.queues.csma_ctl)
        if self.ctl.current is not None:
            packets.append(self.ctl.current)
        return any(packet.frame_kind == FrameKind.SYNC_RESPONSE for packet in packets)

    def _sync_decision(self, frame_index: int, s_ap: int, s_tilde: int) -> None:
        """At CTL open: answer this frame's beacon if a sync round is due."""
        local_now = self.clock.local(self.sim.now)
        if not periodic_sync_due(self.clock.estimate, local_now, self.sync_period_ns):
            return
        if self._sync_outstanding():
            return
        self._pending_rounds[frame_index] = _SyncRound(s_ap_beacon=s_ap, s_tilde_arrival=s_tilde)

        def stamp(packet: "Packet", tx_start: int) -> None:
            packet.payload = encode_sync_response(
                SyncResponsePayload(frame_index=frame_index, s_response=self.clock.local(tx_start))
            )

        packet = self._management_packet(
            FrameKind.SYNC_RESPONSE,
            SERVER_NODE,
            encode_sync_response(SyncResponsePayload(frame_index=frame_index, s_response=0)),
        )
        packet.on_tx_start = stamp
        self.ctl.enqueue(packet)

    def sync_age(self, now: int) -> Optional[int]:
        """Client-clock time since the beacon that opened the last completed round."""
        if self.clock.estimate.last_sync_at is None:
            return None
        return self.clock.local(now) - self.clock.estimate.last_sync_at

    def _management_packet(self, kind: FrameKind, dst: Optional[int], payload: bytes) -> "Packet":
        return self.ledger.new_packet(
            traffic_class=TrafficClass.MANAGEMENT,
            size_bytes=len(payload) + MGMT_HEADER_BYTES,
            created_at=self.sim.now,
            src=self.node_id,
            dst=dst,
            frame_kind=kind,
            payload=payload,
            flow=f"management:{kind.value}",
        )

    # ------------------------------------------------------------------
    # Association (late joiners)
    # ------------------------------------------------------------------

    def request_association(self) -> None:
        packet = self._management_packet(
            FrameKind.ASSOC_REQUEST, SERVER_NODE, encode_association_request(self.node_id)
        )
        self.ctl.enqueue(packet)

    def _on_association_reply(self, reply: AssociationReply) -> None:
        if reply.node != self.node_id or self.associated:
            return
        self.associated = True
        self.required_version = reply.schedule_version
        logger.info("node %d associated at t=%d ns", self.node_id, self.sim.now)
        held, self.held = self.held, []
        for packet in held:
            self.classify_and_enqueue(packet)


class ServerNode(HybridNode):
    """Access point: reference clock, beacon source, sync responder, slot-map owner."""

    def __init__(self, *args: object, horizon: int, **kwargs: object) -> None:
        super().__init__(*args, **kwargs)  # type: ignore[arg-type]
        self.horizon = horizon
        self.clock.estimate = PtpEstimate(o_hat=0, d_hat=0, last_sync_at=0, frame_ref=0)
        self.timing.ref_frame = 0
        self.records: dict[int, TimestampRecord] = {}
        self.associated_clients: set[int] = set()
        self.beacons_sent = 0
        self.beacons_skipped = 0
        self.ctl_open_hooks: list[Callable[[int], None]] = []

    @property
    def current_map(self) -> SlotMap:
        return max(self.maps, key=lambda slot_map: slot_map.version)

    def start(self) -> None:
        self.sim.call_at(0, EventKind.BEACON_DUE, lambda: self.emit_beacon(0), "beacon:0")

    def emit_beacon(self, frame_index: int) -> None:
        """Broadcast the frame's beacon; skipped if the radio is busy."""
        now = self.sim.now
        slot_map = self.map_for(frame_index)
        superframe = slot_map.superframe
        beacon = BeaconPayload(
            frame_index=frame_index,
            s_ap=self.clock.local(now),
            nav_ns=superframe.nav_ns,
            schedule_version=slot_map.version,
            n_tdma=superframe.n_tdma,
            tau_tdma_ns=superframe.tau_tdma_ns,
            records=tuple(self.records[node] for node in sorted(self.records)),
        )
        payload = encode_beacon(beacon)
        frame = Frame(
            kind=FrameKind.BEACON,
            src=self.node_id,
            dst=None,
            size_bytes=len(payload) + MGMT_HEADER_BYTES,
            payload=payload,
            access="beacon",
        )
        if self.transmit(frame) is None:
            self.beacons_skipped += 1
            self.diagnostics.report("beacon_skipped", now, f"server busy at frame {frame_index}")
        else:
            self.beacons_sent += 1
        ctl_open = self.timing.frame_start(frame_index) + superframe.ctl_start_ns
        self.sim.call_at(
            ctl_open, EventKind.SECTION_OPEN, lambda: self._on_ctl_open(frame_index), "ctl_open"
        )
        next_start = (frame_index + 1) * superframe.superframe_ns
        if next_start < self.horizon:
            self.sim.call_at(
                next_start,
                EventKind.BEACON_DUE,
                lambda: self.emit_beacon(frame_index + 1),
                f"beacon:{frame_index + 1}",
            )

    def _on_ctl_open(self, frame_index: int) -> None:
        for hook in self.ctl_open_hooks:
            hook(frame_index)

    def on_management(self, tx: Transmission, now: int) -> None:
        kind = tx.frame.kind
        if kind == FrameKind.SYNC_RESPONSE:
            response = decode_sync_response(tx.frame.payload)
            self.records[tx.sender] = TimestampRecord(
                node=tx.sender,
                frame_index=response.frame_index,
                s_response=response.s_response,
                t_rx=self.clock.local(self.medium.arrival_start(self.node_id, tx)),
            )
        elif kind == FrameKind.ASSOC_REQUEST:
            node = decode_association_request(tx.frame.payload)
            self.associated_clients.add(node)
            reply = self._management_packet(
                FrameKind.ASSOC_REPLY,
                node,
                encode_association_reply(
                    AssociationReply(node=node, schedule_version=self.current_map.version)
                ),
            )
            self.ctl.enqueue(reply)
            self.broadcast_slot_map(self.current_map)

    def broadcast_slot_map(self, slot_map: SlotMap) -> None:
        """Queue one slot-map broadcast in the control section."""
        packet = self._management_packet(FrameKind.SLOT_MAP, None, encode_slot_map(slot_map.to_payload()))
        self.ctl.enqueue(packet)


class LegacyNode(MacNode):
    """Unmodified station in a hybrid network: honours the beacon NAV only."""

    def on_management(self, tx: Transmission, now: int) -> None:
        if tx.frame.kind == FrameKind.BEACON:
            beacon = decode_beacon(tx.frame.payload)
            self.medium.set_nav(self.node_id, now + beacon.nav_ns)
