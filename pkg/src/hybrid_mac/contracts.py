"""Scenario contracts and validation for the channel simulator.

This module defines the Pydantic models that describe one simulation run.
Every cross-field invariant (superframe section arithmetic, contention
windows of the form 2^k − 1, slot sizing, node references) is checked at
this boundary, and all violations are reported together so an invalid
scenario never starts.
"""

from __future__ import annotations

from enum import Enum
from typing import Any, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from hybrid_mac import config
from hybrid_mac.frames import beacon_size
from hybrid_mac.medium import airtime


# =============================================================================
# Enums (Single Source of Truth)
# =============================================================================


class MacMode(str, Enum):
    """Channel access method of a run."""

    CSMA = "csma"
    HYBRID = "hybrid"


class Direction(str, Enum):
    """Flow direction relative to the server (node 0)."""

    SERVER_TO_CLIENT = "server_to_client"
    CLIENT_TO_SERVER = "client_to_server"


class Section(str, Enum):
    """Superframe section a local instant falls in."""

    TDMA = "tdma"
    CTL = "ctl"
    GEN = "gen"


class Verdict(str, Enum):
    """Outcome of a deadline-constrained transmission."""

    SUCCESS = "success"
    MISSED_DEADLINE = "missed_deadline"
    PACKET_LOSS = "packet_loss"


class DeliveryMode(str, Enum):
    """How tracking commands reach the follower.

    - NETWORK: through the simulated channel
    - IDEAL: bypass the channel, every command adopted at issue time
    """

    NETWORK = "network"
    IDEAL = "ideal"


def _is_power_of_two_minus_one(value: int) -> bool:
    return value > 0 and (value + 1) & value == 0


# =============================================================================
# PHY / MAC parameters
# =============================================================================


class LinkDelay(BaseModel):
    """Symmetric propagation delay override for one node pair."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    a: int = Field(ge=0)
    b: int = Field(ge=0)
    delay_ns: int = Field(ge=0)


class PhyConfig(BaseModel):
    """Abstract PHY: effective rate, fixed per-frame overhead, delays, errors."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    data_rate_bps: int = Field(
        default=config.DEFAULT_DATA_RATE_BPS,
        gt=0,
        description="Effective payload rate of the channel",
    )
    per_frame_overhead_ns: int = Field(
        default=config.DEFAULT_PER_FRAME_OVERHEAD_NS,
        ge=0,
        description="Preamble + PHY header airtime added to every frame",
    )
    link_delay_ns: int = Field(
        default=config.DEFAULT_LINK_DELAY_NS,
        ge=0,
        description="Default symmetric propagation delay between any two nodes",
    )
    link_delays: list[LinkDelay] = Field(
        default_factory=list,
        description="Per-pair delay overrides",
    )
    frame_error_prob: float = Field(
        default=config.DEFAULT_FRAME_ERROR_PROB,
        ge=0,
        le=1,
        description="Probability that an uncollided frame is lost to channel error",
    )
    ack_errors: bool = Field(
        default=False,
        description="Let ACK frames suffer channel errors too",
    )
    mac_overhead_bytes: int = Field(
        default=config.DEFAULT_MAC_OVERHEAD_BYTES,
        ge=0,
        description="Transport + MAC header bytes added to every data payload",
    )

    def delay(self, a: int, b: int) -> int:
        """Propagation delay between two nodes (0 for a node to itself)."""
        if a == b:
            return 0
        for link in self.link_delays:
            if {link.a, link.b} == {a, b}:
                return link.delay_ns
        return self.link_delay_ns

    @property
    def max_link_delay_ns(self) -> int:
        return max([self.link_delay_ns, *(link.delay_ns for link in self.link_delays)])

    def airtime(self, size_bytes: int) -> int:
        return airtime(size_bytes, self.data_rate_bps, self.per_frame_overhead_ns)

    def data_airtime(self, payload_bytes: int) -> int:
        """Airtime of a data frame carrying ``payload_bytes`` of user payload."""
        return self.airtime(payload_bytes + self.mac_overhead_bytes)

    def ack_airtime(self) -> int:
        return self.airtime(config.ACK_FRAME_BYTES)


class DcfParams(BaseModel):
    """Distributed coordination function timings and retry policy."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    slot_time_ns: int = Field(default=config.DEFAULT_SLOT_TIME_NS, gt=0)
    sifs_ns: int = Field(default=config.DEFAULT_SIFS_NS, ge=0)
    difs_ns: int = Field(default=config.DEFAULT_DIFS_NS, ge=0)
    cw_min: int = Field(default=config.DEFAULT_CW_MIN, ge=1)
    cw_max: int = Field(default=config.DEFAULT_CW_MAX, ge=1)
    retry_limit: int = Field(
        default=config.DEFAULT_RETRY_LIMIT,
        ge=0,
        description="Retransmissions allowed after the first attempt",
    )

    @model_validator(mode="after")
    def validate_contention_windows(self) -> DcfParams:
        """Ensure both windows are 2^k − 1 and ordered."""
        problems = []
        if not _is_power_of_two_minus_one(self.cw_min):
            problems.append(f"cw_min must be of the form 2^k - 1, got {self.cw_min}")
        if not _is_power_of_two_minus_one(self.cw_max):
            problems.append(f"cw_max must be of the form 2^k - 1, got {self.cw_max}")
        if self.cw_min > self.cw_max:
            problems.append(f"cw_min ({self.cw_min}) must not exceed cw_max ({self.cw_max})")
        if problems:
            raise ValueError("; ".join(problems))
        return self

    def cw_for_attempt(self, attempt_no: int) -> int:
        """Contention window of attempt ``attempt_no`` (0 = initial transmission)."""
        return min(self.cw_max, (self.cw_min + 1) * 2**attempt_no - 1)


class StationProfile(BaseModel):
    """Per-node contention window and frame aggregation.

    Models stations that do not use the scenario's DCF defaults, e.g. a
    commercial 802.11n access point sending video in the WMM video category
    with A-MPDU aggregation.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    node: int = Field(ge=0)
    cw_min: Optional[int] = Field(default=None, ge=1)
    cw_max: Optional[int] = Field(default=None, ge=1)
    max_ppdu_ns: int = Field(
        default=0,
        ge=0,
        description="Aggregate queued data frames to one receiver up to this airtime (0 = off)",
    )

    def dcf(self, base: DcfParams) -> DcfParams:
        """The node's DCF parameters: ``base`` with this profile's windows.

        Raises:
            pydantic.ValidationError: If the resulting windows are invalid
        """
        overrides = {
            key: value
            for key, value in (("cw_min", self.cw_min), ("cw_max", self.cw_max))
            if value is not None
        }
        if not overrides:
            return base
        return DcfParams.model_validate({**base.model_dump(), **overrides})


# =============================================================================
# Superframe
# =============================================================================


class SuperframeConfig(BaseModel):
    """Superframe timing.

    Layout of one frame on the server clock: the beacon occupies
    [0, beacon_airtime), the TDMA section the next t_tdma, the control
    section the next t_ctl, and the general CSMA section the remainder.
    T_f = t_tdma + t_ctl + t_gen and t_tdma = n_tdma · tau,
    so the beacon period is carved out of t_gen.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    superframe_ns: int = Field(default=config.DEFAULT_SUPERFRAME_NS, gt=0)
    n_tdma: int = Field(default=config.DEFAULT_N_TDMA, ge=0)
    tau_tdma_ns: int = Field(default=config.DEFAULT_TAU_TDMA_NS, gt=0)
    t_ctl_ns: int = Field(default=config.DEFAULT_T_CTL_NS, ge=0)
    t_tdma_ns: int = Field(default=0, ge=0, description="Derived when omitted: n_tdma · tau")
    t_gen_ns: int = Field(default=0, ge=0, description="Derived when omitted: T_f − t_tdma − t_ctl")
    beacon_airtime_ns: int = Field(default=config.DEFAULT_BEACON_AIRTIME_NS, ge=0)
    guard_ns: int = Field(default=config.DEFAULT_GUARD_NS, ge=0)

    @model_validator(mode="before")
    @classmethod
    def derive_section_lengths(cls, data: Any) -> Any:
        """Fill t_tdma and t_gen from the section arithmetic when they are not given."""
        if not isinstance(data, dict):
            return data
        values = dict(data)
        defaults = cls.model_fields
        n_tdma = values.get("n_tdma", defaults["n_tdma"].default)
        tau = values.get("tau_tdma_ns", defaults["tau_tdma_ns"].default)
        total = values.get("superframe_ns", defaults["superframe_ns"].default)
        t_ctl = values.get("t_ctl_ns", defaults["t_ctl_ns"].default)
        if values.get("t_tdma_ns") is None and isinstance(n_tdma, int) and isinstance(tau, int):
            values["t_tdma_ns"] = n_tdma * tau
        t_tdma = values.get("t_tdma_ns")
        if values.get("t_gen_ns") is None and all(isinstance(v, int) for v in (total, t_tdma, t_ctl)):
            values["t_gen_ns"] = total - t_tdma - t_ctl
        return values

    @model_validator(mode="after")
    def validate_superframe_equations(self) -> SuperframeConfig:
        """Check the section arithmetic and that the general section can host the beacon."""
        problems = []
        if self.t_tdma_ns != self.n_tdma * self.tau_tdma_ns:
            problems.append(
                f"t_tdma ({self.t_tdma_ns}) must equal n_tdma * tau_tdma "
                f"({self.n_tdma} * {self.tau_tdma_ns})"
            )
        if self.superframe_ns != self.t_tdma_ns + self.t_ctl_ns + self.t_gen_ns:
            problems.append(
                f"superframe ({self.superframe_ns}) must equal t_tdma + t_ctl + t_gen "
                f"({self.t_tdma_ns} + {self.t_ctl_ns} + {self.t_gen_ns})"
            )
        if self.t_gen_ns <= self.beacon_airtime_ns:
            problems.append(
                f"t_gen ({self.t_gen_ns}) must exceed the beacon period ({self.beacon_airtime_ns})"
            )
        if problems:
            raise ValueError("; ".join(problems))
        return self

    @property
    def nav_ns(self) -> int:
        """Beacon NAV duration: the TDMA and control sections."""
        return self.t_tdma_ns + self.t_ctl_ns

    @property
    def tdma_start_ns(self) -> int:
        return self.beacon_airtime_ns

    @property
    def ctl_start_ns(self) -> int:
        return self.beacon_airtime_ns + self.t_tdma_ns

    @property
    def gen_start_ns(self) -> int:
        return self.ctl_start_ns + self.t_ctl_ns

    def slot_offset_ns(self, slot_index: int) -> int:
        """Offset of slot j's boundary from frame start."""
        return self.beacon_airtime_ns + (slot_index - 1) * self.tau_tdma_ns

    def section_at(self, offset_ns: int) -> Section:
        """Section of an offset into the frame (the beacon counts as TDMA)."""
        offset = offset_ns % self.superframe_ns
        if offset < self.ctl_start_ns:
            return Section.TDMA
        if offset < self.gen_start_ns:
            return Section.CTL
        return Section.GEN

    def section_bounds(self, section: Section) -> tuple[int, int]:
        """[start, end) offsets of a section within the frame."""
        if section == Section.TDMA:
            return (0, self.ctl_start_ns)
        if section == Section.CTL:
            return (self.ctl_start_ns, self.gen_start_ns)
        return (self.gen_start_ns, self.superframe_ns)


class SlotAssignment(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    slot: int = Field(ge=1)
    node: int = Field(ge=0)


class LateJoiner(BaseModel):
    """Client that associates mid-run instead of at start."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    node: int = Field(ge=1)
    join_at_s: float = Field(ge=0)


class HybridConfig(BaseModel):
    """Hybrid MAC options: initial slot map, sync cadence, manager limits."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    assignments: list[SlotAssignment] = Field(
        default_factory=lambda: [SlotAssignment(slot=1, node=config.SERVER_NODE)],
        description="Initial slot ownership (the server owns slot 1 for downlink commands)",
    )
    sync_period_ns: int = Field(
        default=config.DEFAULT_SUPERFRAME_NS,
        gt=0,
        description="PTP resynchronization period",
    )
    slot_map_repeats: int = Field(default=config.DEFAULT_SLOT_MAP_REPEATS, ge=1)
    max_tdma_fraction: float = Field(default=config.DEFAULT_MAX_TDMA_FRACTION, gt=0, le=1)
    legacy_nodes: list[int] = Field(
        default_factory=list,
        description="Clients that honour the beacon NAV but ignore sections",
    )
    late_joiners: list[LateJoiner] = Field(default_factory=list)


class NodeClock(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    node: int = Field(ge=1)
    drift_ppm: float = Field(ge=-config.MAX_DRIFT_PPM, le=config.MAX_DRIFT_PPM)
    offset_ns: int


class ClockConfig(BaseModel):
    """Client oscillators are drawn uniformly within these bounds unless pinned."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    max_drift_ppm: float = Field(default=config.DEFAULT_CLIENT_DRIFT_PPM, ge=0, le=config.MAX_DRIFT_PPM)
    max_offset_ns: int = Field(default=config.DEFAULT_CLIENT_OFFSET_NS, ge=0)
    nodes: list[NodeClock] = Field(default_factory=list)


# =============================================================================
# Traffic
# =============================================================================


class LargeVolumeConfig(BaseModel):
    """Periodic bulk link between ``peer`` (the application server) and ``client``."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    enabled: bool = True
    period_s: float = Field(default=config.LARGE_VOLUME_PERIOD_NS / config.NS_PER_S, gt=0)
    burst_bytes: int = Field(default=config.LARGE_VOLUME_BURST_BYTES, ge=0)
    direction: Direction = Direction.CLIENT_TO_SERVER
    client: int = Field(default=1, ge=1)
    peer: int = Field(
        default=config.SERVER_NODE,
        ge=0,
        description="Node at the server end of the link (a separate access point when not 0)",
    )


class EventDrivenConfig(BaseModel):
    """Request/response cycle: poll, history, then the reply after a response delay.

    ``direction`` is the direction of the poll and the reply; the history
    travels the opposite way. ``peer`` is the server end of the exchange.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    enabled: bool = True
    interarrival_mean_s: float = Field(default=config.EVENT_INTERARRIVAL_MEAN_S, gt=0)
    response_mean_s: float = Field(default=config.EVENT_RESPONSE_MEAN_S, ge=0)
    poll_bytes: int = Field(default=config.EVENT_POLL_BYTES, ge=0)
    history_bytes: int = Field(default=config.EVENT_HISTORY_BYTES, ge=0)
    fsm_bytes: int = Field(default=config.EVENT_FSM_BYTES, ge=0)
    direction: Direction = Direction.SERVER_TO_CLIENT
    client: int = Field(default=1, ge=1)
    peer: int = Field(default=config.SERVER_NODE, ge=0)


class Flow(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    src: int = Field(ge=0)
    dst: int = Field(ge=0)


class MissionCriticalConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    enabled: bool = True
    period_ms: float = Field(default=config.COMMAND_PERIOD_NS / config.NS_PER_MS, gt=0)
    size_bytes: int = Field(default=config.COMMAND_BYTES, ge=1)
    deadline_ms: float = Field(default=config.COMMAND_DEADLINE_NS / config.NS_PER_MS, gt=0)
    flows: list[Flow] = Field(
        default_factory=lambda: [Flow(src=config.SERVER_NODE, dst=1)],
        min_length=1,
    )


class TrafficConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    large_volume: LargeVolumeConfig = Field(default_factory=LargeVolumeConfig)
    event_driven: EventDrivenConfig = Field(default_factory=EventDrivenConfig)
    mission_critical: MissionCriticalConfig = Field(default_factory=MissionCriticalConfig)
    mtu_bytes: int = Field(default=config.MTU_PAYLOAD_BYTES, ge=1)


# =============================================================================
# Tracking
# =============================================================================


class TrackingConfig(BaseModel):
    """Follower robot driven by the first mission-critical flow."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    enabled: bool = False
    speed_mps: float = Field(default=config.TRACKING_SPEED_MPS, gt=0)
    arc_radius_m: float = Field(default=config.TRACKING_ARC_RADIUS_M, gt=0)
    straight_m: float = Field(default=config.TRACKING_STRAIGHT_M, ge=0)
    lookahead_m: float = Field(default=config.TRACKING_LOOKAHEAD_M, gt=0)
    initial_lateral_offset_m: float = Field(default=0.25)
    step_ms: float = Field(default=config.TRACKING_STEP_NS / config.NS_PER_MS, gt=0)
    sample_ms: float = Field(default=config.TRACKING_SAMPLE_NS / config.NS_PER_MS, gt=0)
    delivery: DeliveryMode = DeliveryMode.NETWORK
    synthetic_loss: float = Field(
        default=0.0,
        ge=0,
        lt=1,
        description="Random fraction of commands dropped before the channel",
    )
    drop_every: int = Field(
        default=0,
        ge=0,
        description="Drop every n-th command (0 = never)",
    )


# =============================================================================
# Manager requests and injections
# =============================================================================


class ReallocateRequest(BaseModel):
    """Slot reallocation request; omitted fields keep their current value."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    n_tdma: Optional[int] = Field(default=None, ge=0)
    tau_tdma_ns: Optional[int] = Field(default=None, gt=0)
    assignments: Optional[list[SlotAssignment]] = None


class SubscribeRequest(BaseModel):
    """QoS subscription of a node for periodic deadline-constrained traffic."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    node: int = Field(ge=0)
    deadline_ms: float = Field(gt=0)
    period_ms: float = Field(gt=0)
    priority: int = Field(default=0, description="Higher is granted first")


class Injection(BaseModel):
    """Manager operation fired at a simulated instant."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    at_s: float = Field(ge=0)
    action: Literal["reallocate", "subscribe"]
    payload: dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def validate_payload(self) -> Injection:
        try:
            self.request()
        except ValidationError as exc:
            raise ValueError(f"invalid {self.action} payload: {exc}") from exc
        return self

    def request(self) -> ReallocateRequest | SubscribeRequest:
        if self.action == "reallocate":
            return ReallocateRequest.model_validate(self.payload)
        return SubscribeRequest.model_validate(self.payload)


# =============================================================================
# Scenario
# =============================================================================


class ScenarioConfig(BaseModel):
    """Complete, validated description of one simulation run.

    Example:
        >>> scenario = ScenarioConfig(mac_mode=MacMode.HYBRID, duration_s=2.0, seed=7)
        >>> scenario.superframe.nav_ns
        5000000
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    name: str = "scenario"
    mac_mode: MacMode = MacMode.CSMA
    duration_s: float = Field(default=10.0, gt=0)
    seed: int = Field(default=1, ge=0)
    clients: int = Field(default=1, ge=1, description="Client nodes 1..clients; node 0 is the server")
    phy: PhyConfig = Field(default_factory=PhyConfig)
    dcf: DcfParams = Field(default_factory=DcfParams)
    stations: list[StationProfile] = Field(
        default_factory=list,
        description="Nodes with their own contention window or frame aggregation",
    )
    superframe: SuperframeConfig = Field(default_factory=SuperframeConfig)
    hybrid: HybridConfig = Field(default_factory=HybridConfig)
    clocks: ClockConfig = Field(default_factory=ClockConfig)
    traffic: TrafficConfig = Field(default_factory=TrafficConfig)
    tracking: TrackingConfig = Field(default_factory=TrackingConfig)
    injections: list[Injection] = Field(default_factory=list)
    throughput_window_ms: float = Field(
        default=config.THROUGHPUT_WINDOW_NS / config.NS_PER_MS,
        gt=0,
    )
    output_dir: Optional[str] = None

    @model_validator(mode="after")
    def validate_scenario(self) -> ScenarioConfig:
        """Check cross-section invariants and report every violation at once."""
        problems: list[str] = []
        nodes = set(self.node_ids)

        def check_node(node: int, where: str, allow_server: bool = True) -> None:
            if node not in nodes:
                problems.append(f"{where}: node {node} does not exist (nodes 0..{self.clients})")
            elif not allow_server and node == config.SERVER_NODE:
                problems.append(f"{where}: node 0 is the server and cannot be listed")

        traffic = self.traffic
        for name, link in (("large_volume", traffic.large_volume), ("event_driven", traffic.event_driven)):
            check_node(link.client, f"traffic.{name}.client", allow_server=False)
            check_node(link.peer, f"traffic.{name}.peer")
            if link.client == link.peer:
                problems.append(f"traffic.{name}: client and peer are both {link.client}")
        for flow in traffic.mission_critical.flows:
            check_node(flow.src, "traffic.mission_critical.flows.src")
            check_node(flow.dst, "traffic.mission_critical.flows.dst")
            if flow.src == flow.dst:
                problems.append(f"traffic.mission_critical.flows: src and dst are both {flow.src}")

        for node in self.hybrid.legacy_nodes:
            check_node(node, "hybrid.legacy_nodes", allow_server=False)
        for joiner in self.hybrid.late_joiners:
            check_node(joiner.node, "hybrid.late_joiners")
        for pinned in self.clocks.nodes:
            check_node(pinned.node, "clocks.nodes")
        profiled: set[int] = set()
        for profile in self.stations:
            check_node(profile.node, "stations")
            if profile.node in profiled:
                problems.append(f"stations: node {profile.node} is listed more than once")
            profiled.add(profile.node)
            try:
                profile.dcf(self.dcf)
            except ValidationError as exc:
                problems.append(f"stations: node {profile.node}: {exc.errors()[0]['msg']}")

        problems.extend(
            slot_map_problems(
                self.hybrid.assignments, self.superframe.n_tdma, nodes, "hybrid.assignments"
            )
        )

        if self.mac_mode == MacMode.HYBRID:
            slot_need = self.min_slot_ns()
            if traffic.mission_critical.enabled and self.superframe.tau_tdma_ns < slot_need:
                problems.append(
                    f"superframe.tau_tdma_ns ({self.superframe.tau_tdma_ns}) is below critical "
                    f"airtime + guard ({slot_need})"
                )
            beacon_ns = self.phy.airtime(beacon_size(self.clients) + config.MGMT_HEADER_BYTES)
            if beacon_ns > self.superframe.beacon_airtime_ns:
                problems.append(
                    f"superframe.beacon_airtime_ns ({self.superframe.beacon_airtime_ns}) is shorter "
                    f"than the beacon frame for {self.clients} clients ({beacon_ns})"
                )

        if self.tracking.enabled and not traffic.mission_critical.enabled:
            problems.append("tracking.enabled requires traffic.mission_critical.enabled")

        if problems:
            raise ValueError("Invalid scenario:\n  - " + "\n  - ".join(problems))
        return self

    @property
    def node_ids(self) -> list[int]:
        return list(range(self.clients + 1))

    @property
    def duration_ns(self) -> int:
        return round(self.duration_s * config.NS_PER_S)

    def station_profile(self, node: int) -> Optional[StationProfile]:
        for profile in self.stations:
            if profile.node == node:
                return profile
        return None

    def dcf_for(self, node: int) -> DcfParams:
        """DCF parameters of one node (scenario defaults unless profiled)."""
        profile = self.station_profile(node)
        return self.dcf if profile is None else profile.dcf(self.dcf)

    def max_ppdu_for(self, node: int) -> int:
        """Aggregation limit of one node in ns (0 = one packet per frame)."""
        profile = self.station_profile(node)
        return 0 if profile is None else profile.max_ppdu_ns

    def min_slot_ns(self) -> int:
        """Shortest slot that fits a critical packet plus its guard."""
        return (
            self.phy.data_airtime(self.traffic.mission_critical.size_bytes)
            + self.superframe.guard_ns
        )


def slot_map_problems(
    assignments: list[SlotAssignment],
    n_tdma: int,
    nodes: set[int],
    where: str,
) -> list[str]:
    """Ownership problems of a slot map: unknown nodes, duplicate or out-of-range slots."""
    problems = []
    seen: set[int] = set()
    for assignment in assignments:
        if assignment.slot > n_tdma:
            problems.append(f"{where}: slot {assignment.slot} exceeds n_tdma ({n_tdma})")
        if assignment.slot in seen:
            problems.append(f"{where}: slot {assignment.slot} is assigned more than once")
        seen.add(assignment.slot)
        if assignment.node not in nodes:
            problems.append(f"{where}: node {assignment.node} does not exist")
    return problems
