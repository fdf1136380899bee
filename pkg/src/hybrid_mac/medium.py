"""Single collision domain, half-duplex wireless channel.

Every transmission is heard by every node after the pair's propagation
delay. A reception fails when anything else overlaps it at the receiver
(no capture; the receiver's own transmissions count as overlap), and an
uncollided frame is lost to channel error with a configured probability.
The medium also keeps each node's NAV so carrier sensing covers both
physical and virtual busy states.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Optional, Protocol

from hybrid_mac.config import NS_PER_S
from hybrid_mac.engine import EventKind, Simulator

if TYPE_CHECKING:
    from hybrid_mac.contracts import PhyConfig
    from hybrid_mac.randomness import RngStream
    from hybrid_mac.traffic import Packet

logger = logging.getLogger(__name__)


class MediumError(RuntimeError):
    """Raised when a node starts a transmission while still transmitting."""


class FrameKind(str, Enum):
    DATA = "data"
    ACK = "ack"
    BEACON = "beacon"
    SYNC_RESPONSE = "sync_response"
    SLOT_MAP = "slot_map"
    ASSOC_REQUEST = "assoc_request"
    ASSOC_REPLY = "assoc_reply"


class RxResult(str, Enum):
    DELIVERED = "delivered"
    COLLIDED = "collided"
    CHANNEL_ERROR = "channel_error"


def airtime(size_bytes: int, data_rate_bps: int, per_frame_overhead_ns: int = 0) -> int:
    """Airtime in ns: overhead + ceil(8 · size / rate)."""
    if size_bytes < 0:
        raise ValueError(f"size_bytes must be >= 0, got {size_bytes}.")
    if data_rate_bps <= 0:
        raise ValueError(f"data_rate_bps must be > 0, got {data_rate_bps}.")
    bits_ns = 8 * size_bytes * NS_PER_S
    return per_frame_overhead_ns + -(-bits_ns // data_rate_bps)


@dataclass
class Frame:
    """What goes on the air. ``dst=None`` is a broadcast."""

    kind: FrameKind
    src: int
    dst: Optional[int]
    size_bytes: int
    packet: Optional["Packet"] = None
    payload: bytes = b""
    ack_for: Optional[int] = None  # tx_id of the acknowledged data frame
    access: str = ""  # tdma | ctl | gen | csma | beacon | ack
    aggregated: tuple["Packet", ...] = ()  # packets after ``packet`` in an A-MPDU

    @property
    def broadcast(self) -> bool:
        return self.dst is None

    @property
    def packets(self) -> list["Packet"]:
        """Every packet carried, head first (empty for ACKs and beacons)."""
        if self.packet is None:
            return []
        return [self.packet, *self.aggregated]


@dataclass
class Transmission:
    tx_id: int
    sender: int
    frame: Frame
    start: int
    airtime: int

    @property
    def end(self) -> int:
        return self.start + self.airtime


class MediumListener(Protocol):
    """Callbacks a node's MAC receives from the channel."""

    def on_carrier_change(self, now: int) -> None: ...

    def on_frame(self, tx: Transmission, result: RxResult, now: int) -> None: ...

    def on_tx_end(self, tx: Transmission, now: int) -> None: ...


@dataclass
class ChannelStats:
    transmissions: int = 0
    delivered: int = 0
    collided: int = 0
    channel_errors: int = 0
    busy_ns_by_kind: dict[str, int] = field(default_factory=dict)


class Medium:
    """Shared channel with interval-based collision resolution."""

    def __init__(self, sim: Simulator, phy: "PhyConfig", rng: "RngStream") -> None:
        self.sim = sim
        self.phy = phy
        self._rng = rng
        self._listeners: dict[int, MediumListener] = {}
        self._recent: list[Transmission] = []
        self._tx_end: dict[int, int] = {}
        self._nav_until: dict[int, int] = {}
        self._nav_from: dict[int, int] = {}
        self._next_tx_id = 0
        self._max_airtime = 0
        self.stats = ChannelStats()

    # ------------------------------------------------------------------
    # Wiring
    # ------------------------------------------------------------------

    def attach(self, node: int, listener: MediumListener) -> None:
        self._listeners[node] = listener

    @property
    def nodes(self) -> list[int]:
        return sorted(self._listeners)

    def delay(self, a: int, b: int) -> int:
        return self.phy.delay(a, b)

    def airtime(self, size_bytes: int) -> int:
        return airtime(size_bytes, self.phy.data_rate_bps, self.phy.per_frame_overhead_ns)

    # ------------------------------------------------------------------
    # Transmission
    # ------------------------------------------------------------------

    def is_transmitting(self, node: int, now: int) -> bool:
        return self._tx_end.get(node, -1) > now

    def begin_tx(self, sender: int, frame: Frame, now: Optional[int] = None) -> Transmission:
        """Put a frame on the air and schedule every receiver-side event.

        Raises:
            MediumError: If the sender is still transmitting
        """
        now = self.sim.now if now is None else now
        if self.is_transmitting(sender, now):
            raise MediumError(
                f"node {sender} started a {frame.kind.value} frame at t={now} ns while "
                f"transmitting until t={self._tx_end[sender]} ns"
            )
        tx = Transmission(
            tx_id=self._next_tx_id,
            sender=sender,
            frame=frame,
            start=now,
            airtime=self.airtime(frame.size_bytes),
        )
        self._next_tx_id += 1
        self._prune(now)
        self._recent.append(tx)
        self._tx_end[sender] = tx.end
        self._max_airtime = max(self._max_airtime, tx.airtime)
        self.stats.transmissions += 1
        kind = frame.kind.value
        self.stats.busy_ns_by_kind[kind] = self.stats.busy_ns_by_kind.get(kind, 0) + tx.airtime

        label = f"{kind}:{sender}->{'*' if frame.broadcast else frame.dst}#{tx.tx_id}"
        self.sim.call_at(tx.end, EventKind.TX_END, lambda: self._finish_tx(tx), label)
        for node in self.nodes:
            if node == sender:
                continue
            delay = self.delay(sender, node)
            self.sim.call_at(
                tx.start + delay,
                EventKind.RX_START,
                lambda node=node: self._notify_carrier(node),
                f"{label}@{node}",
            )
            self.sim.call_at(
                tx.end + delay,
                EventKind.RX_COMPLETE,
                lambda node=node: self._complete_rx(node, tx),
                f"{label}@{node}",
            )
        return tx

    def _finish_tx(self, tx: Transmission) -> None:
        listener = self._listeners.get(tx.sender)
        if listener is not None:
            listener.on_tx_end(tx, self.sim.now)

    def _notify_carrier(self, node: int) -> None:
        listener = self._listeners.get(node)
        if listener is not None:
            listener.on_carrier_change(self.sim.now)

    def _complete_rx(self, node: int, tx: Transmission) -> None:
        listener = self._listeners.get(node)
        if listener is None:
            return
        if tx.frame.broadcast or tx.frame.dst == node:
            result = self.resolve_rx(node, tx)
            listener.on_frame(tx, result, self.sim.now)
        listener.on_carrier_change(self.sim.now)

    def _prune(self, now: int) -> None:
        horizon = now - 2 * self._max_airtime - self.phy.max_link_delay_ns
        if self._recent and self._recent[0].end < horizon:
            self._recent = [tx for tx in self._recent if tx.end >= horizon]

    # ------------------------------------------------------------------
    # Reception
    # ------------------------------------------------------------------

    def rx_interval(self, node: int, tx: Transmission) -> tuple[int, int]:
        """Half-open interval during which ``tx`` occupies the channel at ``node``."""
        delay = self.delay(tx.sender, node)
        return (tx.start + delay, tx.end + delay)

    def arrival_start(self, node: int, tx: Transmission) -> int:
        return tx.start + self.delay(tx.sender, node)

    def overlapping(self, node: int, tx: Transmission) -> list[Transmission]:
        start, end = self.rx_interval(node, tx)
        overlaps = []
        for other in self._recent:
            if other.tx_id == tx.tx_id:
                continue
            other_start, other_end = self.rx_interval(node, other)
            if other_start < end and start < other_end:
                overlaps.append(other)
        return overlaps

    def resolve_rx(self, node: int, tx: Transmission) -> RxResult:
        """Decide the fate of ``tx`` at ``node`` once its last bit has arrived."""
        if self.overlapping(node, tx):
            self.stats.collided += 1
            return RxResult.COLLIDED
        exempt = tx.frame.kind == FrameKind.ACK and not self.phy.ack_errors
        if not exempt and self.phy.frame_error_prob > 0:
            if self._rng.random() < self.phy.frame_error_prob:
                self.stats.channel_errors += 1
                return RxResult.CHANNEL_ERROR
        self.stats.delivered += 1
        return RxResult.DELIVERED

    # ------------------------------------------------------------------
    # Carrier sense and NAV
    # ------------------------------------------------------------------

    def physically_busy(self, node: int, now: int) -> bool:
        for tx in reversed(self._recent):
            start, end = self.rx_interval(node, tx)
            if start <= now < end:
                return True
        return False

    def busy_until(self, node: int, now: int) -> int:
        """End of the physically busy stretch covering ``now`` (``now`` if idle)."""
        until = now
        changed = True
        while changed:
            changed = False
            for tx in self._recent:
                start, end = self.rx_interval(node, tx)
                if start <= until < end:
                    until = end
                    changed = True
        return until

    def carrier_busy(self, node: int, now: int, include_nav: bool = True) -> bool:
        """Physical carrier or (optionally) the node's NAV reports busy."""
        if include_nav and self.nav_until(node) > now:
            return True
        return self.physically_busy(node, now)

    def nav_until(self, node: int) -> int:
        return self._nav_until.get(node, 0)

    def set_nav(self, node: int, until: int) -> None:
        """Extend a node's NAV; the listener is notified when it expires."""
        if until <= self.nav_until(node):
            return
        if self.nav_until(node) <= self.sim.now:
            self._nav_from[node] = self.sim.now
        self._nav_until[node] = until
        self.sim.call_at(
            max(until, self.sim.now),
            EventKind.NAV_EXPIRY,
            lambda: self._notify_carrier(node),
            f"nav@{node}",
        )

    def nav_window(self, node: int) -> tuple[int, int]:
        """[from, until) of the node's latest NAV reservation."""
        return self._nav_from.get(node, 0), self.nav_until(node)

    def busy_intervals(self, node: int) -> list[tuple[int, int]]:
        """Union of retained busy intervals at ``node``, merged and sorted."""
        intervals = sorted(self.rx_interval(node, tx) for tx in self._recent)
        merged: list[tuple[int, int]] = []
        for start, end in intervals:
            if merged and start <= merged[-1][1]:
                merged[-1] = (merged[-1][0], max(merged[-1][1], end))
            else:
                merged.append((start, end))
        return merged
