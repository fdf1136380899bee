"""Tests for the path-tracking co-simulation in hybrid_mac.tracking."""

from __future__ import annotations

import math
from pathlib import Path

import pytest

from hybrid_mac.artifacts import aggregate_summaries, build_summary
from hybrid_mac.config import NS_PER_MS, NS_PER_S
from hybrid_mac.contracts import ScenarioConfig, TrackingConfig
from hybrid_mac.engine import Simulator
from hybrid_mac.scenario import load_scenario_file, run_scenario
from hybrid_mac.tracking import (
    FollowerState,
    PathModel,
    PathTracker,
    pure_pursuit_rate,
    rmse,
    wrap_angle,
)
from hybrid_mac.traffic import Packet, PacketLedger
from hybrid_mac.traffic_classes import TrafficClass

SCENARIO_DIR = Path(__file__).parent.parent / "data" / "scenarios"


@pytest.fixture
def s_curve() -> PathModel:
    return PathModel.s_curve(straight_m=5.0, arc_radius_m=5.0)


def _tracking_scenario(**tracking: object) -> ScenarioConfig:
    return ScenarioConfig(
        name="tracking_test",
        duration_s=32.0,
        traffic={
            "large_volume": {"enabled": False},
            "event_driven": {"enabled": False},
        },
        tracking={"enabled": True, **tracking},
    )


# =============================================================================
# Reference path
# =============================================================================


def test_wrap_angle() -> None:
    assert wrap_angle(3 * math.pi / 2) == pytest.approx(-math.pi / 2)
    assert wrap_angle(-3 * math.pi / 2) == pytest.approx(math.pi / 2)
    assert wrap_angle(math.pi) == pytest.approx(math.pi)


def test_s_curve_geometry(s_curve: PathModel) -> None:
    """Straight, left quarter arc, straight, right quarter arc, straight."""
    assert s_curve.length == pytest.approx(15.0 + 5.0 * math.pi)
    assert s_curve.point_at(0.0) == pytest.approx((0.0, 0.0, 0.0))
    assert s_curve.point_at(5.0) == pytest.approx((5.0, 0.0, 0.0))
    assert s_curve.point_at(5.0 + 2.5 * math.pi) == pytest.approx((10.0, 5.0, math.pi / 2))
    assert s_curve.point_at(s_curve.length) == pytest.approx((20.0, 15.0, 0.0), abs=1e-9)


def test_point_beyond_the_end_follows_the_end_tangent(s_curve: PathModel) -> None:
    assert s_curve.point_at(s_curve.length + 1.0) == pytest.approx((21.0, 15.0, 0.0), abs=1e-9)


def test_path_rejects_empty_or_degenerate_segments() -> None:
    with pytest.raises(ValueError, match="at least one segment"):
        PathModel([])
    with pytest.raises(ValueError, match="length must be > 0"):
        PathModel([(0.0, 0.0)])


def test_nearest_point_on_arc(s_curve: PathModel) -> None:
    distance, s = s_curve.nearest(5.0 + 4.0 * math.sin(math.pi / 4), 5.0 - 4.0 * math.cos(math.pi / 4))
    assert distance == pytest.approx(1.0)
    assert s == pytest.approx(5.0 + 5.0 * math.pi / 4)


def test_rmse_zero_on_the_path(s_curve: PathModel) -> None:
    points = [s_curve.point_at(s)[:2] for s in (0.0, 3.0, 9.0, 14.0, 22.0, 30.0)]
    assert rmse(points, s_curve) == pytest.approx(0.0, abs=1e-9)


def test_rmse_constant_lateral_offset(s_curve: PathModel) -> None:
    """A 0.5 m offset along the first straight gives an RMSE of 0.5 m."""
    points = [(0.5 + 0.5 * k, 0.5) for k in range(9)]
    assert rmse(points, s_curve) == pytest.approx(0.5)


def test_rmse_rejects_empty_trajectory(s_curve: PathModel) -> None:
    with pytest.raises(ValueError, match="trajectory is empty"):
        rmse([], s_curve)


# =============================================================================
# Pure pursuit and kinematics
# =============================================================================


def test_pure_pursuit_steers_back_toward_the_path(s_curve: PathModel) -> None:
    """Right of the path steers left (positive rate), left of it steers right."""
    assert pure_pursuit_rate(s_curve, 1.0, -0.5, 0.0, 1.0, 1.0) > 0
    assert pure_pursuit_rate(s_curve, 1.0, 0.5, 0.0, 1.0, 1.0) < 0
    assert pure_pursuit_rate(s_curve, 1.0, 0.0, 0.0, 1.0, 1.0) == pytest.approx(0.0, abs=1e-12)


def test_follower_straight_motion() -> None:
    follower = FollowerState(x=0.0, y=0.0, heading=0.0)
    follower.advance(NS_PER_S, speed_mps=1.0, step_ns=NS_PER_MS)
    assert (follower.x, follower.y) == pytest.approx((1.0, 0.0))
    assert follower.updated_at == NS_PER_S


def test_follower_constant_rate_quarter_turn() -> None:
    """ω = π/2 rad/s for 1 s at 1 m/s is a quarter circle of radius 2/π."""
    follower = FollowerState(x=0.0, y=0.0, heading=0.0, last_command=math.pi / 2)
    follower.advance(NS_PER_S, speed_mps=1.0, step_ns=NS_PER_MS)
    radius = 2.0 / math.pi
    assert (follower.x, follower.y) == pytest.approx((radius, radius))
    assert follower.heading == pytest.approx(math.pi / 2)


# =============================================================================
# Command delivery
# =============================================================================


def _command(ledger: PacketLedger, created_at: int, rate: float) -> Packet:
    return ledger.new_packet(
        traffic_class=TrafficClass.MISSION_CRITICAL,
        size_bytes=25,
        created_at=created_at,
        src=0,
        dst=1,
        deadline=100 * NS_PER_MS,
        flow="mission_critical:0->1",
        command=rate,
    )


def test_late_commands_are_discarded_and_previous_rate_held() -> None:
    sim = Simulator()
    ledger = PacketLedger()
    tracker = PathTracker(sim, TrackingConfig(enabled=True), horizon=NS_PER_S)
    tracker.attach(ledger, "mission_critical:0->1")
    tracker.apply_delivery(_command(ledger, 0, 0.3), 50 * NS_PER_MS)
    assert tracker.follower.last_command == 0.3
    assert tracker.follower.last_command_time == 0
    tracker.apply_delivery(_command(ledger, 100 * NS_PER_MS, -0.2), 250 * NS_PER_MS)
    assert tracker.follower.last_command == 0.3
    assert (tracker.stats.adopted, tracker.stats.discarded) == (1, 1)


def test_drop_every_gate_drops_before_the_channel() -> None:
    sim = Simulator()
    ledger = PacketLedger()
    tracker = PathTracker(sim, TrackingConfig(enabled=True, drop_every=3), horizon=NS_PER_S)
    tracker.attach(ledger, "mission_critical:0->1")
    submitted: list[Packet] = []
    send = tracker.gate(submitted.append, ledger)
    packets = [_command(ledger, 0, 0.0) for _ in range(6)]
    for packet in packets:
        send(packet)
    assert submitted == [packets[0], packets[1], packets[3], packets[4]]
    assert tracker.stats.dropped_before_channel == 2
    assert packets[2].resolved and not packets[2].delivered


def test_tracking_ends_after_path_traversal() -> None:
    tracker = PathTracker(Simulator(), TrackingConfig(enabled=True), horizon=100 * NS_PER_S)
    assert tracker.end_ns == math.ceil((15.0 + 5.0 * math.pi) * NS_PER_S)


def test_ideal_delivery_converges_onto_the_path() -> None:
    result = run_scenario(_tracking_scenario(delivery="ideal"))
    tracker = result.tracker
    assert tracker is not None
    summary = tracker.summary()
    assert summary["commands_issued"] == summary["commands_adopted"]
    assert summary["commands_discarded"] == 0
    assert summary["samples"] == math.ceil(tracker.end_ns / (10 * NS_PER_MS))
    assert 0.0 < summary["rmse_m"] < 0.25
    assert tracker.samples[-1].last_command_age_ns is not None


def test_dropped_commands_hold_the_previous_rate() -> None:
    result = run_scenario(_tracking_scenario(delivery="ideal", drop_every=2))
    tracker = result.tracker
    assert tracker is not None
    stats = tracker.stats
    assert stats.dropped_before_channel == stats.issued // 2
    assert stats.adopted == stats.issued - stats.dropped_before_channel
    assert result.metrics.verdict_counts()["packet_loss"] == stats.dropped_before_channel


@pytest.mark.slow
def test_rmse_grows_with_command_loss() -> None:
    """Mean RMSE over ten seeds rises from 0% to 25% to 50% dropped commands."""
    means = []
    for loss in (0.0, 0.25, 0.5):
        values = []
        for seed in range(1, 11):
            scenario = _tracking_scenario(delivery="ideal", synthetic_loss=loss)
            result = run_scenario(scenario.model_copy(update={"seed": seed}))
            assert result.tracker is not None
            value = result.tracker.rmse()
            assert value is not None
            values.append(value)
        means.append(sum(values) / len(values))
    assert means[0] < means[1] < means[2]


@pytest.mark.slow
def test_hybrid_tracks_closer_than_csma_under_contention() -> None:
    """On the loaded S-curve run, late CSMA commands leave the follower further off the path."""
    path = SCENARIO_DIR / "tracking_s_curve.json"
    summaries = []
    for seed in (1, 2, 3):
        for mode in ("csma", "hybrid"):
            result = run_scenario(load_scenario_file(path, {"seed": seed, "mac_mode": mode}))
            summaries.append(build_summary(result))
    aggregate = aggregate_summaries(summaries)
    ideal = run_scenario(load_scenario_file(path, {"tracking": {"delivery": "ideal"}}))
    assert ideal.tracker is not None
    ideal_rmse = ideal.tracker.rmse()
    assert ideal_rmse is not None

    modes = aggregate["modes"]
    assert aggregate["paired"]["rmse_reduction"] > 0
    assert modes["hybrid"]["mean_rmse_m"] < modes["csma"]["mean_rmse_m"]
    assert modes["csma"]["mean_missed_deadline"] > modes["hybrid"]["mean_missed_deadline"]
    assert ideal_rmse < modes["csma"]["mean_rmse_m"]
