"""Path-tracking co-simulation driven by mission-critical commands.

A master samples the follower's true pose every command period, computes a
pure-pursuit steering rate toward a lookahead point on an S-curve reference
and sends it as a mission-critical packet. The follower (unicycle, constant
speed) only adopts commands delivered within their deadline; late or lost
commands are discarded and the previous steering rate is held.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Optional

import numpy as np

from hybrid_mac.config import NS_PER_MS, NS_PER_S
from hybrid_mac.contracts import DeliveryMode, TrackingConfig
from hybrid_mac.engine import EventKind, Simulator

if TYPE_CHECKING:
    from hybrid_mac.randomness import RngStream
    from hybrid_mac.traffic import Packet, PacketLedger, Submit

logger = logging.getLogger(__name__)


def wrap_angle(angle: float) -> float:
    """Wrap to (−π, π]."""
    wrapped = math.atan2(math.sin(angle), math.cos(angle))
    return math.pi if wrapped == -math.pi else wrapped


# =============================================================================
# Reference path
# =============================================================================


@dataclass(frozen=True)
class PathSegment:
    """Constant-curvature piece of the reference (curvature 0 = straight)."""

    start_s: float
    length: float
    x0: float
    y0: float
    heading0: float
    curvature: float = 0.0

    @property
    def end_s(self) -> float:
        return self.start_s + self.length

    def pose_at(self, ds: float) -> tuple[float, float, float]:
        k = self.curvature
        if k == 0.0:
            return (
                self.x0 + ds * math.cos(self.heading0),
                self.y0 + ds * math.sin(self.heading0),
                self.heading0,
            )
        heading = self.heading0 + k * ds
        return (
            self.x0 + (math.sin(heading) - math.sin(self.heading0)) / k,
            self.y0 - (math.cos(heading) - math.cos(self.heading0)) / k,
            heading,
        )

    def nearest(self, x: float, y: float) -> tuple[float, float]:
        """(distance, local arc length) of the closest point on this segment."""
        k = self.curvature
        if k == 0.0:
            ux, uy = math.cos(self.heading0), math.sin(self.heading0)
            ds = min(max((x - self.x0) * ux + (y - self.y0) * uy, 0.0), self.length)
        else:
            cx = self.x0 - math.sin(self.heading0) / k
            cy = self.y0 + math.cos(self.heading0) / k
            phi0 = math.atan2(self.y0 - cy, self.x0 - cx)
            phi = math.atan2(y - cy, x - cx)
            ds = wrap_angle(phi - phi0) / k
            if not 0.0 <= ds <= self.length:
                ends = (0.0, self.length)
                ds = min(ends, key=lambda d: _distance(self.pose_at(d), x, y))
        return _distance(self.pose_at(ds), x, y), ds


def _distance(pose: tuple[float, float, float], x: float, y: float) -> float:
    return math.hypot(pose[0] - x, pose[1] - y)


class PathModel:
    """Tangent-continuous chain of straights and arcs, indexed by arc length."""

    def __init__(self, pieces: Iterable[tuple[float, float]]) -> None:
        """Build from (length, curvature) pieces starting at the origin heading +x."""
        segments: list[PathSegment] = []
        x = y = heading = s = 0.0
        for length, curvature in pieces:
            if length <= 0:
                raise ValueError(f"segment length must be > 0, got {length}.")
            segment = PathSegment(s, length, x, y, heading, curvature)
            x, y, heading = segment.pose_at(length)
            s += length
            segments.append(segment)
        if not segments:
            raise ValueError("path needs at least one segment.")
        self.segments = segments
        self.length = s

    @classmethod
    def s_curve(cls, straight_m: float, arc_radius_m: float) -> "PathModel":
        """Straight, 90° left arc, straight, 90° right arc, straight."""
        arc = arc_radius_m * math.pi / 2
        curvature = 1.0 / arc_radius_m
        pieces = [
            (straight_m, 0.0),
            (arc, curvature),
            (straight_m, 0.0),
            (arc, -curvature),
            (straight_m, 0.0),
        ]
        return cls(piece for piece in pieces if piece[0] > 0)

    def point_at(self, s: float) -> tuple[float, float, float]:
        """Pose at arc length s; beyond either end the end tangent is extended."""
        if s <= 0.0:
            return self.segments[0].pose_at(s)
        for segment in self.segments:
            if s <= segment.end_s:
                return segment.pose_at(s - segment.start_s)
        last = self.segments[-1]
        x, y, heading = last.pose_at(last.length)
        extra = s - self.length
        return x + extra * math.cos(heading), y + extra * math.sin(heading), heading

    def nearest(self, x: float, y: float) -> tuple[float, float]:
        """(distance, arc length) of the closest reference point."""
        best = (math.inf, 0.0)
        for segment in self.segments:
            distance, ds = segment.nearest(x, y)
            if distance < best[0]:
                best = (distance, segment.start_s + ds)
        return best

    def distance(self, x: float, y: float) -> float:
        return self.nearest(x, y)[0]


def pure_pursuit_rate(
    path: PathModel,
    x: float,
    y: float,
    heading: float,
    speed_mps: float,
    lookahead_m: float,
) -> float:
    """Steering rate ω = 2·v·sin(α)/L toward the point L ahead of the nearest one."""
    _, s_near = path.nearest(x, y)
    tx, ty, _ = path.point_at(s_near + lookahead_m)
    chord = math.hypot(tx - x, ty - y)
    if chord < 1e-9:
        return 0.0
    alpha = wrap_angle(math.atan2(ty - y, tx - x) - heading)
    return 2.0 * speed_mps * math.sin(alpha) / chord


def rmse(trajectory: Iterable[tuple[float, float]], path: PathModel) -> float:
    """Root mean square of point-to-nearest-reference distances.

    Raises:
        ValueError: If the trajectory is empty
    """
    distances = np.array([path.distance(x, y) for x, y in trajectory], dtype=np.float64)
    if distances.size == 0:
        raise ValueError("trajectory is empty; nothing to compare against the reference.")
    return float(np.sqrt(np.mean(distances**2)))


# =============================================================================
# Follower
# =============================================================================


@dataclass
class FollowerState:
    """Unicycle pose plus the steering rate currently being executed."""

    x: float
    y: float
    heading: float
    last_command: float = 0.0
    last_command_time: Optional[int] = None
    updated_at: int = 0

    def advance(self, to_ns: int, speed_mps: float, step_ns: int) -> None:
        """Integrate exact constant-rate arcs in steps of at most step_ns."""
        while self.updated_at < to_ns:
            step_end = min((self.updated_at // step_ns + 1) * step_ns, to_ns)
            dt = (step_end - self.updated_at) / NS_PER_S
            omega = self.last_command
            if abs(omega) < 1e-12:
                self.x += speed_mps * dt * math.cos(self.heading)
                self.y += speed_mps * dt * math.sin(self.heading)
            else:
                heading = self.heading + omega * dt
                radius = speed_mps / omega
                self.x += radius * (math.sin(heading) - math.sin(self.heading))
                self.y -= radius * (math.cos(heading) - math.cos(self.heading))
                self.heading = wrap_angle(heading)
            self.updated_at = step_end


@dataclass(frozen=True)
class TrajectorySample:
    t_ns: int
    x: float
    y: float
    heading: float
    last_command_age_ns: Optional[int]


@dataclass
class TrackingStats:
    issued: int = 0
    adopted: int = 0
    discarded: int = 0
    dropped_before_channel: int = 0


class PathTracker:
    """Couples the follower's kinematics to command deliveries in the event loop."""

    def __init__(
        self,
        sim: Simulator,
        settings: TrackingConfig,
        horizon: int,
        loss_rng: Optional["RngStream"] = None,
    ) -> None:
        self.sim = sim
        self.settings = settings
        self.path = PathModel.s_curve(settings.straight_m, settings.arc_radius_m)
        self.follower = FollowerState(x=0.0, y=settings.initial_lateral_offset_m, heading=0.0)
        self.step_ns = max(1, round(settings.step_ms * NS_PER_MS))
        self.sample_ns = max(1, round(settings.sample_ms * NS_PER_MS))
        traverse_ns = math.ceil(self.path.length / settings.speed_mps * NS_PER_S)
        self.end_ns = min(horizon, traverse_ns)
        self.loss_rng = loss_rng
        self.flow = ""
        self.samples: list[TrajectorySample] = []
        self.stats = TrackingStats()

    def start(self) -> None:
        if self.end_ns > 0:
            self.sim.call_at(0, EventKind.TRACKING_SAMPLE, self._sample, "tracking")

    def _advance(self, now: int) -> None:
        self.follower.advance(now, self.settings.speed_mps, self.step_ns)

    def _sample(self) -> None:
        now = self.sim.now
        self._advance(now)
        follower = self.follower
        age = None if follower.last_command_time is None else now - follower.last_command_time
        self.samples.append(TrajectorySample(now, follower.x, follower.y, follower.heading, age))
        next_at = now + self.sample_ns
        if next_at < self.end_ns:
            self.sim.call_at(next_at, EventKind.TRACKING_SAMPLE, self._sample, "tracking")

    def master_command(self, now: int) -> float:
        """Pure-pursuit steering rate from the follower's true pose at ``now``."""
        self._advance(now)
        follower = self.follower
        return pure_pursuit_rate(
            self.path,
            follower.x,
            follower.y,
            follower.heading,
            self.settings.speed_mps,
            self.settings.lookahead_m,
        )

    def gate(self, submit: "Submit", ledger: "PacketLedger") -> "Submit":
        """Wrap a MAC submit with the configured delivery mode and synthetic loss."""

        def send(packet: "Packet") -> None:
            now = self.sim.now
            index = self.stats.issued
            self.stats.issued += 1
            dropped = False
            if self.loss_rng is not None and self.settings.synthetic_loss > 0:
                dropped = self.loss_rng.random() < self.settings.synthetic_loss
            if self.settings.drop_every and (index + 1) % self.settings.drop_every == 0:
                dropped = True
            if dropped:
                self.stats.dropped_before_channel += 1
                ledger.resolved(packet, now)
                return
            if self.settings.delivery == DeliveryMode.IDEAL:
                ledger.delivered(packet, now)
                ledger.resolved(packet, now)
                return
            submit(packet)

        return send

    def attach(self, ledger: "PacketLedger", flow: str) -> None:
        self.flow = flow
        ledger.on_delivered(self.apply_delivery)
        ledger.on_resolved(self._on_resolved)

    def apply_delivery(self, packet: "Packet", now: int) -> None:
        """Adopt a timely command at its delivery time; late ones are discarded."""
        if packet.flow != self.flow or packet.command is None:
            return
        delay = now - packet.created_at
        if packet.deadline is not None and delay > packet.deadline:
            self.stats.discarded += 1
            return
        self._advance(now)
        self.follower.last_command = packet.command
        self.follower.last_command_time = packet.created_at
        self.stats.adopted += 1

    def _on_resolved(self, packet: "Packet", now: int) -> None:
        if packet.flow == self.flow and packet.delivered_at is None:
            self.stats.discarded += 1

    def rmse(self) -> Optional[float]:
        if not self.samples:
            return None
        return rmse(((sample.x, sample.y) for sample in self.samples), self.path)

    def summary(self) -> dict[str, object]:
        value = self.rmse()
        return {
            "rmse_m": None if value is None else round(value, 6),
            "samples": len(self.samples),
            "path_length_m": round(self.path.length, 6),
            "commands_issued": self.stats.issued,
            "commands_adopted": self.stats.adopted,
            "commands_discarded": self.stats.discarded,
            "commands_dropped_before_channel": self.stats.dropped_before_channel,
        }
