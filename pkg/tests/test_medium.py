"""Tests for the shared channel in hybrid_mac.medium."""

from __future__ import annotations

import pytest

from hybrid_mac.config import NS_PER_US
from hybrid_mac.contracts import PhyConfig
from hybrid_mac.engine import Simulator
from hybrid_mac.medium import Frame, FrameKind, Medium, MediumError, RxResult, Transmission, airtime
from hybrid_mac.randomness import RngStream


class Recorder:
    """Medium listener that remembers what it was told."""

    def __init__(self) -> None:
        self.frames: list[tuple[int, RxResult, int]] = []
        self.carrier_edges: list[int] = []
        self.tx_ends: list[int] = []

    def on_carrier_change(self, now: int) -> None:
        self.carrier_edges.append(now)

    def on_frame(self, tx: Transmission, result: RxResult, now: int) -> None:
        self.frames.append((tx.sender, result, now))

    def on_tx_end(self, tx: Transmission, now: int) -> None:
        self.tx_ends.append(now)


def _medium(frame_error_prob: float = 0.0, nodes: int = 3) -> tuple[Simulator, Medium, list[Recorder]]:
    sim = Simulator()
    phy = PhyConfig(frame_error_prob=frame_error_prob, link_delay_ns=100)
    medium = Medium(sim, phy, RngStream(1, "channel"))
    recorders = [Recorder() for _ in range(nodes)]
    for node, recorder in enumerate(recorders):
        medium.attach(node, recorder)
    return sim, medium, recorders


def _data(src: int, dst: int | None, size: int = 200) -> Frame:
    return Frame(kind=FrameKind.DATA, src=src, dst=dst, size_bytes=size)


# =============================================================================
# Airtime
# =============================================================================


def test_airtime_empty_frame_is_overhead_only() -> None:
    assert airtime(0, 17_300_000, 100 * NS_PER_US) == 100 * NS_PER_US


def test_airtime_command_frame() -> None:
    """25 bytes at 17.3 Mbps with no overhead: ceil(200 bits / rate) = 11 561 ns."""
    assert airtime(25, 17_300_000, 0) == 11_561


def test_airtime_of_unfragmented_bulk_transfer() -> None:
    """Five million bytes as one unit would hold the channel for about 2.312 s."""
    assert airtime(5_000_000, 17_300_000) / 1e9 == pytest.approx(2.312, abs=1e-3)


@pytest.mark.parametrize("size,rate", [(-1, 1_000_000), (10, 0)])
def test_airtime_rejects_bad_arguments(size: int, rate: int) -> None:
    with pytest.raises(ValueError):
        airtime(size, rate)


# =============================================================================
# Reception
# =============================================================================


def test_sole_transmission_is_delivered() -> None:
    sim, medium, recorders = _medium()
    tx = medium.begin_tx(0, _data(0, 1))
    sim.run_until(10 * tx.airtime)
    assert recorders[1].frames == [(0, RxResult.DELIVERED, tx.end + 100)]
    assert recorders[2].frames == []  # unicast to node 1 only
    assert recorders[0].tx_ends == [tx.end]
    assert medium.stats.delivered == 1


def test_overlapping_transmissions_collide_everywhere() -> None:
    """No capture: both broadcasts are lost at every receiver."""
    sim, medium, recorders = _medium()
    first = medium.begin_tx(0, _data(0, None))
    medium.begin_tx(1, _data(1, None, size=400))
    sim.run_until(10 * first.airtime)
    assert [result for _, result, _ in recorders[2].frames] == [RxResult.COLLIDED, RxResult.COLLIDED]
    assert [result for _, result, _ in recorders[1].frames] == [RxResult.COLLIDED]
    assert [result for _, result, _ in recorders[0].frames] == [RxResult.COLLIDED]


def test_back_to_back_transmissions_do_not_collide() -> None:
    sim, medium, recorders = _medium()
    first = medium.begin_tx(0, _data(0, 2))
    sim.run_until(first.end)
    medium.begin_tx(1, _data(1, 2))
    sim.run_until(10 * first.airtime)
    assert [result for _, result, _ in recorders[2].frames] == [RxResult.DELIVERED, RxResult.DELIVERED]


def test_frame_error_probability_one_always_fails() -> None:
    sim, medium, recorders = _medium(frame_error_prob=1.0)
    tx = medium.begin_tx(0, _data(0, 1))
    sim.run_until(10 * tx.airtime)
    assert recorders[1].frames == [(0, RxResult.CHANNEL_ERROR, tx.end + 100)]
    assert medium.stats.channel_errors == 1


def test_acks_are_exempt_from_channel_errors_by_default() -> None:
    sim, medium, recorders = _medium(frame_error_prob=1.0)
    ack = Frame(kind=FrameKind.ACK, src=1, dst=0, size_bytes=14, ack_for=0)
    medium.begin_tx(1, ack)
    sim.run_until(NS_PER_US * 1_000)
    assert recorders[0].frames[0][1] == RxResult.DELIVERED


def test_node_cannot_start_while_transmitting() -> None:
    _, medium, _ = _medium()
    medium.begin_tx(0, _data(0, 1))
    with pytest.raises(MediumError, match="while transmitting"):
        medium.begin_tx(0, _data(0, 2))


# =============================================================================
# Carrier sense and NAV
# =============================================================================


def test_carrier_idle_without_transmissions() -> None:
    _, medium, _ = _medium()
    assert medium.carrier_busy(1, 0) is False


def test_carrier_busy_during_airtime_after_propagation() -> None:
    _, medium, _ = _medium()
    tx = medium.begin_tx(0, _data(0, 1))
    assert medium.physically_busy(1, 50) is False
    assert medium.physically_busy(1, 150) is True
    assert medium.physically_busy(1, tx.end + 99) is True
    assert medium.physically_busy(1, tx.end + 100) is False
    assert medium.busy_until(1, 150) == tx.end + 100


def test_nav_makes_carrier_busy() -> None:
    """Within a beacon-set NAV the node senses busy unless it ignores NAV."""
    _, medium, _ = _medium()
    medium.set_nav(2, 5_000)
    assert medium.carrier_busy(2, 100) is True
    assert medium.carrier_busy(2, 100, include_nav=False) is False
    assert medium.carrier_busy(2, 5_000) is False
    assert medium.nav_window(2) == (0, 5_000)


def test_nav_expiry_notifies_listener() -> None:
    sim, medium, recorders = _medium()
    medium.set_nav(2, 5_000)
    medium.set_nav(2, 4_000)  # shorter reservations never shrink the NAV
    sim.run_until(10_000)
    assert medium.nav_until(2) == 5_000
    assert recorders[2].carrier_edges == [5_000]


def test_busy_intervals_are_merged() -> None:
    _, medium, _ = _medium()
    first = medium.begin_tx(0, _data(0, None))
    medium.begin_tx(1, _data(1, None))
    assert medium.busy_intervals(2) == [(first.start + 100, first.end + 100)]
