"""Contention MAC: carrier sense, DIFS, binary exponential backoff, ACKs.

``DcfStation`` is one DCF access function serving one FIFO. The CSMA
baseline gives every node a single station; the hybrid MAC runs two per node
(control and general sections) behind section gates. ``MacNode`` is the
per-node channel listener: it answers unicast frames with an ACK after SIFS,
reports deliveries to the packet ledger and routes channel events to the
node's stations.

Station states::

    IDLE ──enqueue──> (gate closed) GATED ──section open──┐
                      (busy) WAIT_IDLE <──carrier busy──┐ │
                      (idle) IFS ──DIFS──> BACKOFF ──0──> TX ──> WAIT_ACK
"""

from __future__ import annotations

import logging
from collections import deque
from enum import Enum
from typing import TYPE_CHECKING, Callable, Optional, Protocol

from hybrid_mac.config import ACK_FRAME_BYTES, MGMT_HEADER_BYTES
from hybrid_mac.engine import EventKind, Simulator
from hybrid_mac.medium import Frame, FrameKind, Medium, RxResult, Transmission
from hybrid_mac.traffic_classes import is_deadline_class

if TYPE_CHECKING:
    from hybrid_mac.contracts import DcfParams
    from hybrid_mac.diagnostics import Diagnostics
    from hybrid_mac.randomness import RngStream
    from hybrid_mac.traffic import Packet, PacketLedger

logger = logging.getLogger(__name__)


class StationState(str, Enum):
    IDLE = "idle"
    GATED = "gated"
    WAIT_IDLE = "wait_idle"
    IFS = "ifs"
    BACKOFF = "backoff"
    TX = "tx"
    WAIT_ACK = "wait_ack"


class AccessGate(Protocol):
    """Decides when a station may contend (section gating)."""

    def is_open(self, now: int) -> bool: ...

    def next_open(self, now: int) -> Optional[int]: ...

    def fits(self, now: int, exchange_ns: int) -> bool: ...


class AlwaysOpen:
    """Gate of the plain CSMA baseline."""

    def is_open(self, now: int) -> bool:
        return True

    def next_open(self, now: int) -> Optional[int]:
        return now

    def fits(self, now: int, exchange_ns: int) -> bool:
        return True


def frame_for(
    packet: "Packet", mac_overhead_bytes: int, aggregated: tuple["Packet", ...] = ()
) -> Frame:
    """On-air frame carrying a packet (data or management), plus any aggregated data."""
    if packet.frame_kind == FrameKind.DATA:
        size = sum(item.size_bytes + mac_overhead_bytes for item in (packet, *aggregated))
    else:
        size = len(packet.payload) + MGMT_HEADER_BYTES
    return Frame(
        kind=packet.frame_kind,
        src=packet.src,
        dst=packet.dst,
        size_bytes=size,
        packet=packet,
        payload=packet.payload,
        aggregated=aggregated,
    )


class DcfStation:
    """One DCF access function over a FIFO of packets."""

    def __init__(
        self,
        node: "MacNode",
        dcf: "DcfParams",
        rng: "RngStream",
        name: str = "dcf",
        queue: Optional[deque] = None,
        gate: Optional[AccessGate] = None,
        respects_nav: bool = True,
        access: str = "csma",
        record_attempts: bool = False,
        max_ppdu_ns: int = 0,
    ) -> None:
        self.node = node
        self.sim: Simulator = node.sim
        self.medium: Medium = node.medium
        self.dcf = dcf
        self.rng = rng
        self.name = name
        self.queue: deque = queue if queue is not None else deque()
        self.gate: AccessGate = gate if gate is not None else AlwaysOpen()
        self.respects_nav = respects_nav
        self.access = access
        self.state = StationState.IDLE
        self.current: Optional["Packet"] = None
        self.aggregated: list["Packet"] = []
        self.max_ppdu_ns = max_ppdu_ns
        self.attempt_no = 0
        self.cw = dcf.cw_min
        self.backoff_remaining = 0
        self.deferrals = 0
        self.attempt_log: Optional[list[tuple[int, int, int, int]]] = [] if record_attempts else None
        self._timer: Optional[int] = None
        self._countdown_start = 0
        self._tx: Optional[Transmission] = None
        node.stations.append(self)

    # ------------------------------------------------------------------
    # Queue side
    # ------------------------------------------------------------------

    def enqueue(self, packet: "Packet") -> None:
        """Append to the FIFO and start contending if idle."""
        self.queue.append(packet)
        if self.state == StationState.IDLE:
            self._next_packet()

    @property
    def backlog(self) -> int:
        return len(self.queue) + len(self.aggregated) + (1 if self.current is not None else 0)

    def poke(self) -> None:
        """Re-evaluate a gated wait (timing information changed)."""
        if self.state == StationState.GATED:
            self._cancel_timer()
            self._resume_access()

    def _next_packet(self) -> None:
        if not self.queue:
            self.current = None
            self.state = StationState.IDLE
            return
        self.current = self.queue.popleft()
        self.attempt_no = 0
        self._new_attempt()

    def _aggregate(self) -> None:
        """Pull data for the head's receiver from the FIFO while the PPDU fits ``max_ppdu_ns``."""
        head = self.current
        if not self.max_ppdu_ns or head is None or head.frame_kind != FrameKind.DATA or head.dst is None:
            return
        overhead = self.medium.phy.mac_overhead_bytes
        size = sum(item.size_bytes + overhead for item in (head, *self.aggregated))
        while self.queue:
            candidate = self.queue[0]
            if candidate.frame_kind != FrameKind.DATA or candidate.dst != head.dst:
                break
            if self.medium.airtime(size + candidate.size_bytes + overhead) > self.max_ppdu_ns:
                break
            size += candidate.size_bytes + overhead
            self.aggregated.append(self.queue.popleft())

    def _frame(self) -> Frame:
        assert self.current is not None
        return frame_for(self.current, self.medium.phy.mac_overhead_bytes, tuple(self.aggregated))

    def _new_attempt(self) -> None:
        self.cw = self.dcf.cw_for_attempt(self.attempt_no)
        self.backoff_remaining = self.rng.integer(0, self.cw)
        self._resume_access()

    # ------------------------------------------------------------------
    # Medium access
    # ------------------------------------------------------------------

    def _busy(self, now: int) -> bool:
        return self.medium.carrier_busy(self.node.node_id, now, include_nav=self.respects_nav)

    def _cancel_timer(self) -> None:
        if self._timer is not None:
            self.sim.cancel(self._timer)
            self._timer = None

    def _resume_access(self) -> None:
        now = self.sim.now
        if not self.gate.is_open(now):
            self._wait_for_section(now)
            return
        if self._busy(now):
            self.state = StationState.WAIT_IDLE
            return
        self.state = StationState.IFS
        self._timer = self.sim.call_at(now + self.dcf.difs_ns, EventKind.IFS_DONE, self._on_ifs_done, self.name)

    def _wait_for_section(self, now: int) -> None:
        self.state = StationState.GATED
        opens_at = self.gate.next_open(now)
        if opens_at is not None:
            self._timer = self.sim.call_at(
                max(opens_at, now + 1), EventKind.SECTION_OPEN, self._on_section_open, self.name
            )

    def _on_section_open(self) -> None:
        self._timer = None
        self._resume_access()

    def _on_ifs_done(self) -> None:
        self._timer = None
        self.state = StationState.BACKOFF
        self._countdown_start = self.sim.now
        self._timer = self.sim.call_at(
            self.sim.now + self.backoff_remaining * self.dcf.slot_time_ns,
            EventKind.BACKOFF_EXPIRY,
            self._on_backoff_expiry,
            self.name,
        )

    def on_carrier_change(self, now: int) -> None:
        """Freeze on busy, resume after idle (called on every carrier edge)."""
        if self.state == StationState.IFS:
            if self._busy(now):
                self._cancel_timer()
                self.state = StationState.WAIT_IDLE
        elif self.state == StationState.BACKOFF:
            if self._busy(now):
                self._cancel_timer()
                elapsed_slots = (now - self._countdown_start) // self.dcf.slot_time_ns
                self.backoff_remaining = max(0, self.backoff_remaining - elapsed_slots)
                self.state = StationState.WAIT_IDLE
        elif self.state == StationState.WAIT_IDLE:
            if not self._busy(now):
                self._resume_access()

    def exchange_ns(self, frame: Frame) -> int:
        """Airtime of a frame plus, for unicast, SIFS and the returning ACK."""
        duration = self.medium.airtime(frame.size_bytes)
        if not frame.broadcast:
            duration += (
                self.dcf.sifs_ns
                + self.medium.airtime(ACK_FRAME_BYTES)
                + 2 * self.medium.phy.max_link_delay_ns
            )
        return duration

    def ack_timeout_ns(self) -> int:
        return (
            self.dcf.sifs_ns
            + self.dcf.slot_time_ns
            + self.medium.airtime(ACK_FRAME_BYTES)
            + 2 * self.medium.phy.max_link_delay_ns
        )

    def _on_backoff_expiry(self) -> None:
        self._timer = None
        now = self.sim.now
        self.backoff_remaining = 0
        packet = self.current
        assert packet is not None
        self._aggregate()
        frame = self._frame()
        while self.aggregated and not self.gate.fits(now, self.exchange_ns(frame)):
            # Shorten the aggregate to what still fits before the section ends.
            self.queue.appendleft(self.aggregated.pop())
            frame = self._frame()
        if not self.gate.fits(now, self.exchange_ns(frame)):
            # Exchange would cross the section end: fresh backoff in the next open section.
            self.deferrals += 1
            self.backoff_remaining = self.rng.integer(0, self.cw)
            self._wait_for_section(now)
            return
        if packet.on_tx_start is not None:
            packet.on_tx_start(packet, now)
            frame = self._frame()
        frame.access = self.access
        tx = self.node.transmit(frame)
        if tx is None:
            # Node radio busy (answering with an ACK); contend again.
            self.backoff_remaining = self.rng.integer(0, self.cw)
            self.state = StationState.WAIT_IDLE
            return
        for item in frame.packets:
            item.attempt_count += 1
        if self.attempt_log is not None:
            self.attempt_log.append((packet.packet_id, self.attempt_no, self.cw, now))
        self._tx = tx
        self.state = StationState.TX

    # ------------------------------------------------------------------
    # Exchange completion
    # ------------------------------------------------------------------

    def owns(self, tx: Transmission) -> bool:
        return self._tx is not None and self._tx.tx_id == tx.tx_id

    def on_tx_end(self, tx: Transmission, now: int) -> None:
        if tx.frame.broadcast:
            self._finish(delivered=True)
            return
        self.state = StationState.WAIT_ACK
        self._timer = self.sim.call_at(
            now + self.ack_timeout_ns(), EventKind.ACK_TIMEOUT, self._on_ack_timeout, self.name
        )

    def on_ack(self, ack_for: Optional[int], now: int) -> None:
        if self.state != StationState.WAIT_ACK or self._tx is None or self._tx.tx_id != ack_for:
            return
        self._cancel_timer()
        self.on_tx_result(RxResult.DELIVERED)

    def _on_ack_timeout(self) -> None:
        self._timer = None
        self.on_tx_result(RxResult.COLLIDED)

    def on_tx_result(self, result: RxResult) -> None:
        """Advance after an attempt: done on success, retry or give up on failure."""
        if result == RxResult.DELIVERED:
            self._finish(delivered=True)
        elif self.attempt_no < self.dcf.retry_limit:
            self.attempt_no += 1
            self._tx = None
            self._new_attempt()
        else:
            self._finish(delivered=False)

    def _finish(self, delivered: bool) -> None:
        packet = self.current
        assert packet is not None
        now = self.sim.now
        self._tx = None
        if packet.frame_kind == FrameKind.DATA and packet.dst is not None and not delivered:
            logger.debug(
                "packet %d dropped after %d attempts (%s)", packet.packet_id, packet.attempt_count, self.name
            )
        carried, self.aggregated = [packet, *self.aggregated], []
        for item in carried:
            self.node.ledger.resolved(item, now)
        self._next_packet()


class MacNode:
    """Channel listener of one node: ACK responder, delivery reporting, dispatch."""

    def __init__(
        self,
        node_id: int,
        sim: Simulator,
        medium: Medium,
        dcf: "DcfParams",
        ledger: "PacketLedger",
        diagnostics: "Diagnostics",
    ) -> None:
        self.node_id = node_id
        self.sim = sim
        self.medium = medium
        self.dcf = dcf
        self.ledger = ledger
        self.diagnostics = diagnostics
        self.stations: list[DcfStation] = []
        self.tx_observers: list[Callable[[Transmission], None]] = []
        medium.attach(node_id, self)

    # ------------------------------------------------------------------
    # Sending
    # ------------------------------------------------------------------

    def submit(self, packet: "Packet") -> None:
        """Hand an application packet to the MAC."""
        self.stations[0].enqueue(packet)

    def transmit(self, frame: Frame) -> Optional[Transmission]:
        """Start a transmission now unless the radio is already sending."""
        now = self.sim.now
        if self.medium.is_transmitting(self.node_id, now):
            return None
        tx = self.medium.begin_tx(self.node_id, frame, now)
        for observer in self.tx_observers:
            observer(tx)
        for station in self.stations:
            station.on_carrier_change(now)
        return tx

    def _send_ack(self, tx: Transmission) -> None:
        ack = Frame(
            kind=FrameKind.ACK,
            src=self.node_id,
            dst=tx.sender,
            size_bytes=ACK_FRAME_BYTES,
            ack_for=tx.tx_id,
        )
        ack.access = "ack"
        if self.transmit(ack) is None:
            self.diagnostics.report(
                "ack_suppressed", self.sim.now, f"node {self.node_id} busy, ACK for tx {tx.tx_id} not sent"
            )

    # ------------------------------------------------------------------
    # Medium listener
    # ------------------------------------------------------------------

    def on_carrier_change(self, now: int) -> None:
        for station in self.stations:
            station.on_carrier_change(now)

    def on_tx_end(self, tx: Transmission, now: int) -> None:
        for station in self.stations:
            if station.owns(tx):
                station.on_tx_end(tx, now)
                break
        else:
            self.on_own_tx_end(tx, now)
        for station in self.stations:
            station.on_carrier_change(now)

    def on_own_tx_end(self, tx: Transmission, now: int) -> None:
        """Transmissions not owned by a station (beacons, TDMA, ACKs)."""

    def on_frame(self, tx: Transmission, result: RxResult, now: int) -> None:
        frame = tx.frame
        if frame.kind == FrameKind.ACK:
            if result == RxResult.DELIVERED:
                for station in self.stations:
                    station.on_ack(frame.ack_for, now)
            return
        packet = frame.packet
        if result != RxResult.DELIVERED:
            if result == RxResult.COLLIDED and any(
                is_deadline_class(item.traffic_class) for item in frame.packets
            ):
                self.diagnostics.count("critical_collisions")
            if packet is not None and packet.via_tdma and frame.dst == self.node_id:
                self.ledger.resolved(packet, now)
            self.on_frame_lost(tx, result, now)
            return
        if not frame.broadcast:
            if packet is not None and packet.via_tdma:
                self.ledger.delivered(packet, now)
                self.ledger.resolved(packet, now)
                return
            self.sim.call_at(
                now + self.dcf.sifs_ns,
                EventKind.IFS_DONE,
                lambda: self._send_ack(tx),
                f"ack:{self.node_id}->{tx.sender}",
            )
        if frame.kind == FrameKind.DATA and packet is not None:
            for item in frame.packets:
                self.ledger.delivered(item, now)
        else:
            self.on_management(tx, now)

    def on_frame_lost(self, tx: Transmission, result: RxResult, now: int) -> None:
        """A frame addressed to (or broadcast at) this node was not received."""

    def on_management(self, tx: Transmission, now: int) -> None:
        """A management frame was received."""
