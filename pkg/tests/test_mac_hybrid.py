"""Tests for the hybrid TDMA/CSMA MAC in hybrid_mac.mac_hybrid."""

from __future__ import annotations

from typing import Optional

import pytest

from hybrid_mac.clocks import ClockState, OscillatorModel, PtpEstimate
from hybrid_mac.config import NS_PER_MS, NS_PER_S
from hybrid_mac.contracts import DcfParams, PhyConfig, ScenarioConfig, Section, SuperframeConfig, Verdict
from hybrid_mac.diagnostics import Diagnostics
from hybrid_mac.engine import EventKind, Simulator
from hybrid_mac.mac_hybrid import HybridNode, QueueSet, SectionGate, SlotMap
from hybrid_mac.medium import Frame, FrameKind, Medium, Transmission
from hybrid_mac.randomness import RngRegistry, RngStream
from hybrid_mac.scenario import ScenarioRun
from hybrid_mac.traffic import Packet, PacketLedger
from hybrid_mac.traffic_classes import TrafficClass

NO_TRAFFIC = {
    "large_volume": {"enabled": False},
    "event_driven": {"enabled": False},
    "mission_critical": {"enabled": False},
}


def _client(
    assignments: tuple[tuple[int, int], ...] = (),
    associated: bool = True,
    oscillator: Optional[OscillatorModel] = None,
    superframe: Optional[SuperframeConfig] = None,
) -> HybridNode:
    """A lone client node (id 1) with its own simulator and channel."""
    sim = Simulator()
    medium = Medium(sim, PhyConfig(frame_error_prob=0.0), RngStream(1, "channel"))
    return HybridNode(
        node_id=1,
        sim=sim,
        medium=medium,
        dcf=DcfParams(),
        ledger=PacketLedger(),
        diagnostics=Diagnostics(),
        rngs=RngRegistry(1),
        clock=ClockState(oscillator=oscillator or OscillatorModel()),
        initial_map=SlotMap(
            version=1,
            effective_from=0,
            superframe=superframe or SuperframeConfig(),
            assignments=assignments,
        ),
        sync_period_ns=100 * NS_PER_MS,
        associated=associated,
    )


def _packet(node: HybridNode, traffic_class: TrafficClass) -> Packet:
    return node.ledger.new_packet(
        traffic_class=traffic_class,
        size_bytes=25,
        created_at=0,
        src=node.node_id,
        dst=0,
        deadline=100 * NS_PER_MS if traffic_class == TrafficClass.MISSION_CRITICAL else None,
    )


# =============================================================================
# Slot maps and queues
# =============================================================================


def test_slot_map_ownership() -> None:
    slot_map = SlotMap(
        version=3,
        effective_from=12,
        superframe=SuperframeConfig(n_tdma=3),
        assignments=((1, 0), (2, 4), (3, 4)),
    )
    assert slot_map.owner(2) == 4
    assert slot_map.owner(4) is None
    assert slot_map.slots_of(4) == [2, 3]
    assert slot_map.slots_of(7) == []


def test_slot_map_survives_the_wire_format() -> None:
    base = SuperframeConfig()
    slot_map = SlotMap(
        version=2,
        effective_from=5,
        superframe=SuperframeConfig(n_tdma=2, tau_tdma_ns=500_000),
        assignments=((1, 0), (2, 3)),
    )
    decoded = SlotMap.from_payload(slot_map.to_payload(), base)
    assert decoded == slot_map


@pytest.mark.parametrize(
    "traffic_class,queue",
    [
        (TrafficClass.MISSION_CRITICAL, "tdma_data"),
        (TrafficClass.LARGE_VOLUME, "csma_gen"),
        (TrafficClass.EVENT_DRIVEN, "csma_gen"),
        (TrafficClass.MANAGEMENT, "csma_ctl"),
    ],
)
def test_queue_routing_by_class(traffic_class: TrafficClass, queue: str) -> None:
    packet = Packet(packet_id=0, traffic_class=traffic_class, size_bytes=1, created_at=0, src=1, dst=0)
    assert QueueSet.queue_for(packet) == queue


# =============================================================================
# Classification
# =============================================================================


def test_unassociated_node_holds_data() -> None:
    node = _client(associated=False)
    packet = _packet(node, TrafficClass.LARGE_VOLUME)
    assert node.classify_and_enqueue(packet) == "held"
    assert node.held == [packet]


def test_unassociated_node_still_sends_management() -> None:
    node = _client(associated=False)
    assert node.classify_and_enqueue(_packet(node, TrafficClass.MANAGEMENT)) == "csma_ctl"
    assert node.ctl.backlog == 1


def test_command_without_owned_slot_falls_back_to_gen() -> None:
    node = _client(assignments=((1, 0),))
    assert node.classify_and_enqueue(_packet(node, TrafficClass.MISSION_CRITICAL)) == "csma_gen"
    assert node.diagnostics["tdma_fallback"] == 1
    assert node.gen.backlog == 1


def test_command_with_owned_slot_waits_for_tdma() -> None:
    """Before the first beacon there is no timing, so the command stays in the backlog."""
    node = _client(assignments=((1, 0), (2, 1)), superframe=SuperframeConfig(n_tdma=2))
    assert node.classify_and_enqueue(_packet(node, TrafficClass.MISSION_CRITICAL)) == "tdma_data"
    assert len(node.queues.tdma_backlog) == 1
    assert node.can_use_tdma() is False


def test_bulk_data_goes_to_gen() -> None:
    node = _client()
    assert node.classify_and_enqueue(_packet(node, TrafficClass.LARGE_VOLUME)) == "csma_gen"


# =============================================================================
# Slot timing
# =============================================================================


def test_slot_send_local_past_the_beacon_period() -> None:
    """(o, d, s~l) = (500, 100, 100): slot 1 at 400 plus beacon period and half a guard."""
    node = _client(assignments=((1, 1),))
    node.clock.estimate = PtpEstimate(o_hat=500, d_hat=100, last_sync_at=0, frame_ref=100)
    node.timing.ref_frame = 0
    slot_map = node.map_for(0)
    assert node.slot_send_local(0, 1, slot_map) == 110_400
    assert node.slot_send_local(1, 1, slot_map) == 110_400 + 100 * NS_PER_MS


def test_exact_estimate_lands_on_the_slot_boundary() -> None:
    """With an exact estimate the frame arrives half a guard after the slot boundary."""
    offset, delay = 37_000, 100
    superframe = SuperframeConfig(n_tdma=3)
    node = _client(
        assignments=((1, 1), (2, 1), (3, 1)),
        oscillator=OscillatorModel(drift_ppm=0.0, initial_offset=offset),
        superframe=superframe,
    )
    beacon_arrival = node.clock.local(delay)
    node.clock.estimate = PtpEstimate(o_hat=offset, d_hat=delay, last_sync_at=0).rebased(beacon_arrival)
    node.timing.ref_frame = 0
    for frame_index in range(3):
        slot_map = node.map_for(frame_index)
        for slot in (1, 2, 3):
            true_send = node.clock.true_at(node.slot_send_local(frame_index, slot, slot_map))
            frame_start = frame_index * superframe.superframe_ns
            assert true_send + delay == (
                frame_start + superframe.slot_offset_ns(slot) + superframe.guard_ns // 2
            )


def _timed_client() -> HybridNode:
    """Client whose frame k starts at k superframes on an ideal clock."""
    node = _client()
    node.clock.estimate = PtpEstimate(o_hat=0, d_hat=0, last_sync_at=0, frame_ref=0)
    node.timing.ref_frame = 0
    return node


def test_gen_gate_rejects_exchanges_crossing_the_section_end() -> None:
    node = _timed_client()
    gate = SectionGate(node, Section.GEN)
    superframe = SuperframeConfig()
    gen_start, gen_end = superframe.section_bounds(Section.GEN)
    guard = superframe.guard_ns
    assert gate.is_open(gen_end - guard - 1)
    assert not gate.is_open(gen_end - guard)
    assert gate.fits(99 * NS_PER_MS, gen_end - guard - 99 * NS_PER_MS)
    assert not gate.fits(99 * NS_PER_MS, gen_end - guard - 99 * NS_PER_MS + 1)
    assert gate.next_open(99_500_000) == superframe.superframe_ns + gen_start
    assert gate.next_open(NS_PER_MS) == gen_start


def test_gen_frame_crossing_the_boundary_waits_for_the_next_section() -> None:
    """A 1500 B exchange whose backoff ends 0.45 ms before the GEN end moves to the next GEN."""
    node = _timed_client()
    started: list[Transmission] = []
    node.tx_observers.append(started.append)
    packet = node.ledger.new_packet(
        traffic_class=TrafficClass.LARGE_VOLUME, size_bytes=1_500, created_at=0, src=1, dst=0
    )
    node.sim.call_at(99_500_000, EventKind.TRAFFIC_ARRIVAL, lambda: node.classify_and_enqueue(packet))
    node.sim.run_until(110 * NS_PER_MS)
    superframe = SuperframeConfig()
    next_gen = superframe.superframe_ns + superframe.section_bounds(Section.GEN)[0]
    assert node.gen.deferrals == 1
    assert started
    first = started[0]
    assert first.frame.access == "gen"
    assert first.start >= next_gen + node.dcf.difs_ns
    assert first.end <= 2 * superframe.superframe_ns - superframe.guard_ns


def test_map_for_picks_the_version_in_force() -> None:
    node = _client()
    update = SlotMap(version=2, effective_from=4, superframe=SuperframeConfig(), assignments=((1, 1),))
    node.install_map(update)
    assert node.map_for(3).version == 1
    assert node.map_for(4).version == 2
    assert node.owns_any_slot()


# =============================================================================
# Runs
# =============================================================================


def test_server_commands_use_consecutive_superframes() -> None:
    """Two queued commands take slot 1 of frames 0 and 1, one superframe apart."""
    scenario = ScenarioConfig(
        mac_mode="hybrid",
        duration_s=1.0,
        phy={"frame_error_prob": 0.0},
        traffic=NO_TRAFFIC,
    )
    run = ScenarioRun(scenario)
    packets = [
        run.ledger.new_packet(
            traffic_class=TrafficClass.MISSION_CRITICAL,
            size_bytes=25,
            created_at=0,
            src=0,
            dst=1,
            deadline=100 * NS_PER_MS,
            flow="mission_critical:0->1",
        )
        for _ in range(2)
    ]
    for packet in packets:
        run.route(packet)
    run.sim.run_until(250 * NS_PER_MS)
    assert run.server is not None
    assert run.server.slot_usage == [(0, 1), (1, 1)]
    first, second = (packet.delivered_at for packet in packets)
    assert first is not None and second is not None
    assert second - first == 100 * NS_PER_MS
    assert all(packet.via_tdma for packet in packets)


def _hybrid_scenario() -> ScenarioConfig:
    return ScenarioConfig(
        name="hybrid_end_to_end",
        mac_mode="hybrid",
        duration_s=2.0,
        seed=3,
        clients=2,
        phy={"frame_error_prob": 0.0},
        superframe={"superframe_ns": 50 * NS_PER_MS, "n_tdma": 2},
        hybrid={"assignments": [{"slot": 1, "node": 0}, {"slot": 2, "node": 1}]},
        traffic={
            "large_volume": {"burst_bytes": 300_000, "client": 2},
            "event_driven": {"enabled": False},
            "mission_critical": {"flows": [{"src": 0, "dst": 1}, {"src": 1, "dst": 0}]},
        },
    )


def test_hybrid_commands_all_meet_their_deadline() -> None:
    run = ScenarioRun(_hybrid_scenario())
    gen_frames: list[Transmission] = []
    for node in run.nodes.values():
        node.tx_observers.append(lambda tx: gen_frames.append(tx) if tx.frame.access == "gen" else None)
    result = run.run()

    commands = [p for p in run.ledger.generated if p.traffic_class == TrafficClass.MISSION_CRITICAL]
    assert len(commands) == 40
    assert all(packet.via_tdma for packet in commands)
    assert result.metrics.verdict_counts()[Verdict.SUCCESS.value] == 40

    assert result.sync["max_residual_ns"] is not None
    assert result.sync["max_residual_ns"] < 10_000
    assert result.diagnostics["nav_intrusion"] == 0
    assert result.diagnostics["beacon_skipped"] == 0

    superframe_ns = 50 * NS_PER_MS
    assert gen_frames
    for tx in gen_frames:
        assert tx.start // superframe_ns == tx.end // superframe_ns
    bulk_client = run.nodes[2]
    assert isinstance(bulk_client, HybridNode)
    assert bulk_client.gen.deferrals > 0


def test_late_joiner_holds_data_until_associated() -> None:
    scenario = ScenarioConfig(
        name="late_joiner",
        mac_mode="hybrid",
        duration_s=1.5,
        clients=2,
        phy={"frame_error_prob": 0.0},
        hybrid={"late_joiners": [{"node": 2, "join_at_s": 0.5}]},
        traffic={
            "large_volume": {"burst_bytes": 15_000, "client": 2},
            "event_driven": {"enabled": False},
            "mission_critical": {"enabled": False},
        },
    )
    run = ScenarioRun(scenario)
    run.run()
    joiner = run.nodes[2]
    assert isinstance(joiner, HybridNode)
    assert joiner.associated
    assert joiner.held == []
    assert run.server is not None and 2 in run.server.associated_clients
    bulk = [p for p in run.ledger.generated if p.traffic_class == TrafficClass.LARGE_VOLUME]
    assert len(bulk) == 10
    assert all(p.delivered_at is not None and p.delivered_at > NS_PER_S // 2 for p in bulk)


def _pinned_clocks() -> dict[str, object]:
    return {
        "nodes": [
            {"node": 1, "drift_ppm": 5.0, "offset_ns": 30_000},
            {"node": 2, "drift_ppm": -5.0, "offset_ns": -30_000},
        ]
    }


def test_collided_beacon_is_reported_and_sync_resumes() -> None:
    """A frame on air at the fifth TBTT destroys the beacon; the next beacon completes the round."""
    scenario = ScenarioConfig(
        name="beacon_collision",
        mac_mode="hybrid",
        duration_s=1.0,
        clients=2,
        phy={"frame_error_prob": 0.0},
        clocks=_pinned_clocks(),
        traffic=NO_TRAFFIC,
    )
    run = ScenarioRun(scenario)
    client = run.nodes[1]
    assert isinstance(client, HybridNode)
    tbtt = 500 * NS_PER_MS
    jam = Frame(kind=FrameKind.DATA, src=2, dst=9, size_bytes=1_500)
    run.sim.call_at(tbtt, EventKind.TRAFFIC_ARRIVAL, lambda: run.nodes[2].transmit(jam))
    rounds: dict[int, int] = {}
    for at_ms in (450, 550, 650):
        run.sim.call_at(
            at_ms * NS_PER_MS,
            EventKind.TRAFFIC_ARRIVAL,
            lambda at_ms=at_ms: rounds.__setitem__(at_ms, client.sync_rounds),
        )
    run.run()

    assert run.diagnostics["beacon_missed"] >= 1
    missed = [event for event in run.diagnostics.events if event["name"] == "beacon_missed"]
    assert any(event["node"] == 1 and tbtt < event["t_ns"] < tbtt + NS_PER_MS for event in missed)
    assert rounds[450] > 0
    # No round completes on the lost beacon; the next one completes the pending round.
    assert rounds[550] == rounds[450]
    assert rounds[650] == rounds[450] + 1
    assert client.sync_rounds > rounds[650]
    assert client.round_errors
    # Two superframes of 5 ppm drift separate the round opened before the lost beacon and its completion.
    assert max(client.round_errors) < 1_100


def test_sync_error_stays_below_a_microsecond() -> None:
    """60 s at ±5 ppm: every TDMA send and every sync round is within 1 µs of the true offset."""
    scenario = ScenarioConfig(
        name="sync_error",
        mac_mode="hybrid",
        duration_s=60.0,
        seed=4,
        clients=2,
        phy={"frame_error_prob": 0.0},
        superframe={"n_tdma": 2},
        hybrid={"assignments": [{"slot": 1, "node": 0}, {"slot": 2, "node": 1}]},
        clocks=_pinned_clocks(),
        traffic={
            "large_volume": {"burst_bytes": 150_000, "client": 2},
            "event_driven": {"enabled": False},
            "mission_critical": {"flows": [{"src": 0, "dst": 1}, {"src": 1, "dst": 0}]},
        },
    )
    run = ScenarioRun(scenario)
    result = run.run()
    sync = result.sync
    assert sync["tdma_fires_checked"] > 1_000
    assert sync["max_residual_ns"] < 1_000
    assert sync["rounds_checked"] > 1_000
    assert sync["max_round_error_ns"] < 1_000
    for node_id in (1, 2):
        node = run.nodes[node_id]
        assert isinstance(node, HybridNode)
        assert node.residual_errors and node.round_errors
    assert result.diagnostics["beacon_missed"] == 0
    assert result.metrics.verdict_counts()[Verdict.SUCCESS.value] >= 1_190
