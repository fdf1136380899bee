"""Tests for the DCF contention MAC in hybrid_mac.mac_csma."""

from __future__ import annotations

from typing import Optional

from hybrid_mac.config import ACK_FRAME_BYTES, HT_MAX_PPDU_NS, NS_PER_MS, NS_PER_S, NS_PER_US
from hybrid_mac.contracts import DcfParams, PhyConfig
from hybrid_mac.diagnostics import Diagnostics
from hybrid_mac.engine import EventKind, Simulator
from hybrid_mac.mac_csma import DcfStation, MacNode, StationState, frame_for
from hybrid_mac.medium import Medium
from hybrid_mac.randomness import RngStream
from hybrid_mac.traffic import Packet, PacketLedger
from hybrid_mac.traffic_classes import TrafficClass


class FixedDraws:
    """Backoff source that always draws the same slot count."""

    def __init__(self, value: int = 0) -> None:
        self.value = value

    def integer(self, low: int, high: int) -> int:
        return min(max(self.value, low), high)


class WindowGate:
    """Section ``[start, end)`` of every ``period``; an exchange must end ``guard`` before ``end``."""

    def __init__(self, period: int, start: int, end: int, guard: int) -> None:
        self.period = period
        self.start = start
        self.end = end
        self.guard = guard

    def _base(self, now: int) -> int:
        return now // self.period * self.period

    def is_open(self, now: int) -> bool:
        base = self._base(now)
        return base + self.start <= now < base + self.end - self.guard

    def next_open(self, now: int) -> Optional[int]:
        base = self._base(now)
        return base + self.start if now < base + self.start else base + self.period + self.start

    def fits(self, now: int, exchange_ns: int) -> bool:
        return now + exchange_ns <= self._base(now) + self.end - self.guard


class Network:
    """Plain CSMA nodes on one channel."""

    def __init__(
        self,
        nodes: int = 2,
        frame_error_prob: float = 0.0,
        draws: object = None,
        max_ppdu_ns: int = 0,
        gate: object = None,
    ) -> None:
        self.sim = Simulator()
        self.dcf = DcfParams()
        self.phy = PhyConfig(frame_error_prob=frame_error_prob)
        self.medium = Medium(self.sim, self.phy, RngStream(1, "channel"))
        self.ledger = PacketLedger()
        self.diagnostics = Diagnostics()
        self.nodes: list[MacNode] = []
        self.stations: list[DcfStation] = []
        for node_id in range(nodes):
            node = MacNode(node_id, self.sim, self.medium, self.dcf, self.ledger, self.diagnostics)
            rng = draws if draws is not None else RngStream(1, f"backoff:{node_id}")
            station = DcfStation(
                node,
                self.dcf,
                rng,  # type: ignore[arg-type]
                name=f"csma:{node_id}",
                gate=gate,  # type: ignore[arg-type]
                record_attempts=True,
                max_ppdu_ns=max_ppdu_ns,
            )
            self.nodes.append(node)
            self.stations.append(station)

    def packet(self, src: int, dst: int, cls: TrafficClass = TrafficClass.LARGE_VOLUME, size: int = 1_500) -> Packet:
        return self.ledger.new_packet(
            traffic_class=cls,
            size_bytes=size,
            created_at=self.sim.now,
            src=src,
            dst=dst,
            deadline=100 * NS_PER_MS if cls == TrafficClass.MISSION_CRITICAL else None,
        )


# =============================================================================
# Access
# =============================================================================


def test_idle_channel_transmits_after_difs_and_backoff() -> None:
    net = Network()
    packet = net.packet(0, 1)
    net.nodes[0].submit(packet)
    net.sim.run_until(NS_PER_S)
    (packet_id, attempt_no, cw, started) = net.stations[0].attempt_log[0]
    assert (packet_id, attempt_no, cw) == (packet.packet_id, 0, 15)
    waited = started - net.dcf.difs_ns
    assert waited % net.dcf.slot_time_ns == 0
    assert 0 <= waited // net.dcf.slot_time_ns <= 15


def test_success_on_first_attempt_occupies_one_airtime_and_ack() -> None:
    net = Network()
    packet = net.packet(0, 1)
    net.nodes[0].submit(packet)
    net.sim.run_until(NS_PER_S)
    assert packet.delivered and packet.resolved
    assert packet.attempt_count == 1
    assert net.ledger.outstanding == {}
    assert net.medium.stats.busy_ns_by_kind == {
        "data": net.phy.data_airtime(1_500),
        "ack": net.phy.airtime(ACK_FRAME_BYTES),
    }
    assert net.stations[0].state == StationState.IDLE


def test_fifo_order_is_kept() -> None:
    net = Network()
    packets = [net.packet(0, 1) for _ in range(3)]
    for packet in packets:
        net.nodes[0].submit(packet)
    net.sim.run_until(NS_PER_S)
    delivered = [packet.delivered_at for packet in packets]
    assert all(at is not None for at in delivered)
    assert delivered == sorted(delivered)


def test_busy_channel_defers_until_idle() -> None:
    """A node enqueuing mid-frame starts only after the frame and a fresh DIFS."""
    net = Network(nodes=3, draws=FixedDraws(0))
    first = net.packet(0, 2)
    net.nodes[0].submit(first)
    data_end = net.dcf.difs_ns + net.phy.data_airtime(1_500)
    second = net.packet(1, 2)
    net.sim.call_at(
        net.dcf.difs_ns + 5_000, EventKind.TRAFFIC_ARRIVAL, lambda: net.nodes[1].submit(second)
    )
    net.sim.run_until(NS_PER_S)
    started = net.stations[1].attempt_log[0][3]
    assert started >= data_end + net.phy.link_delay_ns + net.dcf.difs_ns
    assert second.delivered


def test_nav_defers_access_until_it_expires() -> None:
    """NAV set to 5 ms, request at 3 ms: the frame starts at 5 ms + DIFS + backoff."""
    net = Network(draws=FixedDraws(3))
    net.medium.set_nav(0, 5 * NS_PER_MS)
    packet = net.packet(0, 1)
    net.sim.call_at(3 * NS_PER_MS, EventKind.TRAFFIC_ARRIVAL, lambda: net.nodes[0].submit(packet))
    net.sim.run_until(NS_PER_S)
    started = net.stations[0].attempt_log[0][3]
    assert started >= 5 * NS_PER_MS + net.dcf.difs_ns
    assert started == 5 * NS_PER_MS + net.dcf.difs_ns + 3 * net.dcf.slot_time_ns
    assert packet.delivered


def test_exchange_crossing_the_section_end_is_deferred() -> None:
    """A backoff ending 0.45 ms before the section closes defers a 0.7 ms exchange."""
    period, section_end, guard = 10 * NS_PER_MS, 5 * NS_PER_MS, 20 * NS_PER_US
    net = Network(draws=FixedDraws(0), gate=WindowGate(period, 0, section_end, guard))
    packet = net.packet(0, 1)
    net.sim.call_at(4_500 * NS_PER_US, EventKind.TRAFFIC_ARRIVAL, lambda: net.nodes[0].submit(packet))
    net.sim.run_until(NS_PER_S)
    station = net.stations[0]
    assert station.deferrals == 1
    started = station.attempt_log[0][3]
    assert started == period + net.dcf.difs_ns
    assert len(station.attempt_log) == 1
    assert packet.delivered and packet.attempt_count == 1


# =============================================================================
# Retries
# =============================================================================


def test_equal_backoff_draws_collide_and_double_the_window() -> None:
    """Two nodes drawing the same backoff collide and retry with cw 31."""
    net = Network(nodes=3, draws=FixedDraws(0))
    a = net.packet(0, 2, TrafficClass.MISSION_CRITICAL, size=25)
    b = net.packet(1, 2, TrafficClass.MISSION_CRITICAL, size=25)
    net.nodes[0].submit(a)
    net.nodes[1].submit(b)
    net.sim.run_until(NS_PER_S)
    log_a = net.stations[0].attempt_log
    log_b = net.stations[1].attempt_log
    assert [entry[1:] for entry in log_a[:2]] == [entry[1:] for entry in log_b[:2]]
    assert [entry[2] for entry in log_a[:2]] == [15, 31]
    assert net.diagnostics["critical_collisions"] >= 2
    assert net.medium.stats.collided >= 2


def test_retry_limit_exhaustion_is_packet_loss() -> None:
    """Eight failed attempts (retry_limit 7) resolve the packet undelivered."""
    net = Network(frame_error_prob=1.0)
    packet = net.packet(0, 1)
    net.nodes[0].submit(packet)
    net.sim.run_until(NS_PER_S)
    log = net.stations[0].attempt_log
    assert [entry[1] for entry in log] == list(range(8))
    assert [entry[2] for entry in log] == [15, 31, 63, 127, 255, 511, 1023, 1023]
    assert packet.attempt_count == 8
    assert packet.delivered_at is None
    assert packet.resolved_at is not None
    assert net.medium.stats.busy_ns_by_kind.get("ack", 0) == 0


def test_ack_timeout_and_exchange_durations() -> None:
    net = Network()
    station = net.stations[0]
    ack = net.phy.airtime(ACK_FRAME_BYTES)
    delays = 2 * net.phy.max_link_delay_ns
    assert station.ack_timeout_ns() == net.dcf.sifs_ns + net.dcf.slot_time_ns + ack + delays
    packet = net.packet(0, 1, size=100)
    frame = frame_for(packet, net.phy.mac_overhead_bytes)
    assert frame.size_bytes == 100 + net.phy.mac_overhead_bytes
    assert station.exchange_ns(frame) == net.phy.data_airtime(100) + net.dcf.sifs_ns + ack + delays


# =============================================================================
# Aggregation
# =============================================================================


def test_aggregate_packs_up_to_the_ppdu_limit() -> None:
    """Ten MTU packets to one receiver go out as frames of seven and three."""
    net = Network(draws=FixedDraws(0), max_ppdu_ns=HT_MAX_PPDU_NS)
    packets = [net.packet(0, 1) for _ in range(10)]
    for packet in packets:
        net.nodes[0].submit(packet)
    net.sim.run_until(NS_PER_S)
    per_packet = 1_500 + net.phy.mac_overhead_bytes
    assert net.medium.airtime(7 * per_packet) <= HT_MAX_PPDU_NS < net.medium.airtime(8 * per_packet)
    assert net.medium.stats.busy_ns_by_kind["data"] == (
        net.medium.airtime(7 * per_packet) + net.medium.airtime(3 * per_packet)
    )
    assert len(net.stations[0].attempt_log) == 2
    assert len({packet.delivered_at for packet in packets[:7]}) == 1
    assert len({packet.delivered_at for packet in packets[7:]}) == 1
    assert all(packet.resolved and packet.attempt_count == 1 for packet in packets)
    assert net.stations[0].backlog == 0


def test_aggregate_stops_at_another_receiver() -> None:
    net = Network(nodes=3, draws=FixedDraws(0), max_ppdu_ns=HT_MAX_PPDU_NS)
    packets = [net.packet(0, 1), net.packet(0, 1), net.packet(0, 2), net.packet(0, 1)]
    for packet in packets:
        net.nodes[0].submit(packet)
    net.sim.run_until(NS_PER_S)
    assert len(net.stations[0].attempt_log) == 3
    assert packets[0].delivered_at == packets[1].delivered_at
    assert all(packet.delivered for packet in packets)


def test_lost_aggregate_resolves_every_packet() -> None:
    net = Network(frame_error_prob=1.0, max_ppdu_ns=HT_MAX_PPDU_NS)
    packets = [net.packet(0, 1) for _ in range(3)]
    for packet in packets:
        net.nodes[0].submit(packet)
    net.sim.run_until(NS_PER_S)
    assert len(net.stations[0].attempt_log) == 8
    assert all(packet.attempt_count == 8 for packet in packets)
    assert all(packet.resolved and not packet.delivered for packet in packets)
    assert net.ledger.outstanding == {}


def test_aggregate_is_trimmed_to_fit_the_section() -> None:
    """Near the section end only the packets whose exchange still fits go out."""
    period, section_end, guard = 20 * NS_PER_MS, 10 * NS_PER_MS, 20 * NS_PER_US
    net = Network(draws=FixedDraws(0), max_ppdu_ns=HT_MAX_PPDU_NS, gate=WindowGate(period, 0, section_end, guard))
    packets = [net.packet(0, 1) for _ in range(7)]
    submit_at = 8 * NS_PER_MS
    net.sim.call_at(
        submit_at,
        EventKind.TRAFFIC_ARRIVAL,
        lambda: [net.nodes[0].submit(packet) for packet in packets],
    )
    net.sim.run_until(NS_PER_S)
    station = net.stations[0]
    per_packet = 1_500 + net.phy.mac_overhead_bytes
    ack_tail = net.dcf.sifs_ns + net.phy.ack_airtime() + 2 * net.phy.max_link_delay_ns
    room = section_end - guard - (submit_at + net.dcf.difs_ns)
    fitting = max(n for n in range(1, 8) if net.medium.airtime(n * per_packet) + ack_tail <= room)
    assert fitting == 2
    first = {packet.delivered_at for packet in packets[:fitting]}
    assert len(first) == 1
    assert all(at is not None and at < section_end for at in first)
    later = [packet.delivered_at for packet in packets[fitting:]]
    assert all(at is not None and at > period for at in later)
    assert len(set(later)) == 1
    # The rest no longer fits this section and waits for the next one.
    assert station.deferrals == 1
