"""Build and run one simulation from a ScenarioConfig.

Node 0 is the server (access point, superframe coordinator, PTP master and
reference clock); nodes 1..clients are clients. In CSMA mode every node runs
one plain DCF station. In hybrid mode the server and modified clients run the
section-gated MAC, legacy clients run one NAV-honouring DCF station, and the
network manager processes injected requests in the server's control section.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Union

from hybrid_mac.clocks import REFERENCE_OSCILLATOR, ClockState, OscillatorModel
from hybrid_mac.config import NS_PER_MS, NS_PER_S, SERVER_NODE
from hybrid_mac.contracts import MacMode, ScenarioConfig
from hybrid_mac.diagnostics import Diagnostics
from hybrid_mac.engine import EventKind, Simulator
from hybrid_mac.mac_csma import DcfStation, MacNode
from hybrid_mac.mac_hybrid import HybridNode, LegacyNode, ServerNode, SlotMap
from hybrid_mac.manager import NetworkManager
from hybrid_mac.medium import ChannelStats, Medium, Transmission
from hybrid_mac.metrics import MetricsCollector, RunMetrics, ThroughputSeries
from hybrid_mac.randomness import RngRegistry
from hybrid_mac.tracking import PathTracker
from hybrid_mac.traffic import (
    EventDrivenGenerator,
    LargeVolumeGenerator,
    MissionCriticalGenerator,
    OfferedLoad,
    Packet,
    PacketLedger,
    offered_load_breakdown,
)

logger = logging.getLogger(__name__)

INITIAL_SCHEDULE_VERSION = 1
INTRUSION_ACCESS = frozenset({"gen", "csma"})


@dataclass
class RunResult:
    """Everything a finished run exposes to artifacts and tests."""

    scenario: ScenarioConfig
    metrics: RunMetrics
    diagnostics: Diagnostics
    channel: ChannelStats
    offered: OfferedLoad
    events_processed: int
    trace_digest: Optional[str] = None
    tracker: Optional[PathTracker] = None
    manager: Optional[NetworkManager] = None
    sync: dict[str, Any] = field(default_factory=dict)
    ignored_injections: int = 0


class ScenarioRun:
    """Wires simulator, medium, nodes, generators and collectors for one run."""

    def __init__(self, scenario: ScenarioConfig, record_trace: bool = False) -> None:
        self.scenario = scenario
        self.horizon = scenario.duration_ns
        self.sim = Simulator(record_trace=record_trace)
        self.rngs = RngRegistry(scenario.seed)
        self.medium = Medium(self.sim, scenario.phy, self.rngs.stream("channel"))
        self.ledger = PacketLedger()
        self.diagnostics = Diagnostics()
        self.nodes: dict[int, MacNode] = {}
        self.server: Optional[ServerNode] = None
        self.manager: Optional[NetworkManager] = None
        self.tracker: Optional[PathTracker] = None
        self.ignored_injections = 0
        window_ns = round(scenario.throughput_window_ms * NS_PER_MS)
        self.collector = MetricsCollector(ThroughputSeries(window_ns, self.horizon))
        self.collector.attach(self.ledger)

        if scenario.mac_mode == MacMode.HYBRID:
            self._build_hybrid()
        else:
            self._build_csma()
        for node in self.nodes.values():
            node.tx_observers.append(self._check_intrusion)
            if self.server is not None:
                node.tx_observers.append(self._check_sync)
        self._build_traffic()
        self._schedule_injections()

    # ------------------------------------------------------------------
    # Nodes
    # ------------------------------------------------------------------

    def _build_csma(self) -> None:
        scenario = self.scenario
        if scenario.hybrid.legacy_nodes or scenario.hybrid.late_joiners:
            logger.warning("hybrid.legacy_nodes and hybrid.late_joiners are ignored in csma mode")
        for node_id in scenario.node_ids:
            self.nodes[node_id] = self._legacy_station(MacNode, node_id)

    def _legacy_station(self, node_cls: type[MacNode], node_id: int) -> MacNode:
        dcf = self.scenario.dcf_for(node_id)
        node = node_cls(node_id, self.sim, self.medium, dcf, self.ledger, self.diagnostics)
        DcfStation(
            node,
            dcf,
            self.rngs.stream(f"backoff:{node_id}"),
            name=f"csma:{node_id}",
            respects_nav=True,
            access="csma",
            max_ppdu_ns=self.scenario.max_ppdu_for(node_id),
        )
        return node

    def oscillator_for(self, node_id: int) -> OscillatorModel:
        """Pinned oscillator, or one drawn from the node's clock stream within bounds."""
        if node_id == SERVER_NODE:
            return REFERENCE_OSCILLATOR
        clocks = self.scenario.clocks
        for pinned in clocks.nodes:
            if pinned.node == node_id:
                return OscillatorModel(drift_ppm=pinned.drift_ppm, initial_offset=pinned.offset_ns)
        stream = self.rngs.stream(f"clock:{node_id}")
        return OscillatorModel(
            drift_ppm=stream.uniform(-clocks.max_drift_ppm, clocks.max_drift_ppm),
            initial_offset=stream.integer(-clocks.max_offset_ns, clocks.max_offset_ns),
        )

    def _build_hybrid(self) -> None:
        scenario = self.scenario
        hybrid = scenario.hybrid
        initial_map = SlotMap(
            version=INITIAL_SCHEDULE_VERSION,
            effective_from=0,
            superframe=scenario.superframe,
            assignments=tuple(sorted((a.slot, a.node) for a in hybrid.assignments)),
        )
        late = {joiner.node: joiner.join_at_s for joiner in hybrid.late_joiners}
        common = dict(
            sim=self.sim,
            medium=self.medium,
            ledger=self.ledger,
            diagnostics=self.diagnostics,
            rngs=self.rngs,
            initial_map=initial_map,
            sync_period_ns=hybrid.sync_period_ns,
        )
        server = ServerNode(
            node_id=SERVER_NODE,
            clock=ClockState(oscillator=REFERENCE_OSCILLATOR),
            horizon=self.horizon,
            dcf=scenario.dcf_for(SERVER_NODE),
            max_ppdu_ns=scenario.max_ppdu_for(SERVER_NODE),
            **common,
        )
        self.server = server
        self.nodes[SERVER_NODE] = server
        for node_id in scenario.node_ids[1:]:
            oscillator = self.oscillator_for(node_id)
            if node_id in hybrid.legacy_nodes:
                self.nodes[node_id] = self._legacy_station(LegacyNode, node_id)
                continue
            self.nodes[node_id] = HybridNode(
                node_id=node_id,
                clock=ClockState(oscillator=oscillator),
                associated=node_id not in late,
                dcf=scenario.dcf_for(node_id),
                max_ppdu_ns=scenario.max_ppdu_for(node_id),
                **common,
            )
        server.associated_clients.update(
            node_id for node_id, node in self.nodes.items() if node_id != SERVER_NODE and node_id not in late
        )

        self.manager = NetworkManager(
            self.sim,
            server,
            hybrid,
            scenario.min_slot_ns(),
            set(scenario.node_ids),
            self.diagnostics,
            is_associated=lambda node_id: getattr(self.nodes.get(node_id), "associated", True),
        )
        for node_id, join_at_s in sorted(late.items()):
            node = self.nodes[node_id]
            join_at = round(join_at_s * NS_PER_S)
            if node_id == SERVER_NODE or not isinstance(node, HybridNode):
                logger.warning("late joiner %d is not a modified client; ignored", node_id)
                continue
            if join_at >= self.horizon:
                logger.warning("late joiner %d joins after the run ends; it never associates", node_id)
                continue
            self.sim.call_at(join_at, EventKind.MANAGER_REQUEST, node.request_association, f"associate:{node_id}")
        server.start()

    # ------------------------------------------------------------------
    # Traffic
    # ------------------------------------------------------------------

    def route(self, packet: Packet) -> None:
        """Hand a packet to its source node's MAC."""
        self.nodes[packet.src].submit(packet)

    def _build_traffic(self) -> None:
        scenario = self.scenario
        traffic = scenario.traffic
        if traffic.large_volume.enabled:
            LargeVolumeGenerator(
                self.sim, self.ledger, self.route, traffic.large_volume, traffic.mtu_bytes, self.horizon
            ).start()
        if traffic.event_driven.enabled:
            EventDrivenGenerator(
                self.sim,
                self.ledger,
                self.route,
                traffic.event_driven,
                traffic.mtu_bytes,
                self.horizon,
                arrival_rng=self.rngs.stream("traffic:event_driven:arrival"),
                response_rng=self.rngs.stream("traffic:event_driven:response"),
            ).start()
        if not traffic.mission_critical.enabled:
            return
        if scenario.tracking.enabled:
            self.tracker = PathTracker(
                self.sim, scenario.tracking, self.horizon, loss_rng=self.rngs.stream("tracking:loss")
            )
        for index, flow in enumerate(traffic.mission_critical.flows):
            tracked = self.tracker is not None and index == 0
            generator = MissionCriticalGenerator(
                self.sim,
                self.ledger,
                self.tracker.gate(self.route, self.ledger) if tracked else self.route,  # type: ignore[union-attr]
                traffic.mission_critical,
                src=flow.src,
                dst=flow.dst,
                horizon=self.horizon,
                command_source=self.tracker.master_command if tracked else None,  # type: ignore[union-attr]
            )
            if tracked:
                self.tracker.attach(self.ledger, generator.flow)  # type: ignore[union-attr]
                self.tracker.start()  # type: ignore[union-attr]
            generator.start()

    # ------------------------------------------------------------------
    # Injections and protocol checks
    # ------------------------------------------------------------------

    def _schedule_injections(self) -> None:
        for injection in self.scenario.injections:
            at = round(injection.at_s * NS_PER_S)
            if at >= self.horizon:
                self.ignored_injections += 1
                logger.warning(
                    "%s injection at %.3f s is beyond the run (%.3f s); ignored",
                    injection.action,
                    injection.at_s,
                    self.scenario.duration_s,
                )
                continue
            if self.manager is None:
                self.ignored_injections += 1
                logger.warning("%s injection ignored: csma mode has no network manager", injection.action)
                continue
            request = injection.request()
            self.sim.call_at(
                at,
                EventKind.MANAGER_REQUEST,
                lambda request=request: self.manager.submit(request),  # type: ignore[union-attr]
                injection.action,
            )

    def _check_intrusion(self, tx: Transmission) -> None:
        """Count contention frames whose arrival overlaps any node's beacon NAV."""
        if tx.frame.access not in INTRUSION_ACCESS:
            return
        for node_id in self.medium.nodes:
            nav_from, nav_until = self.medium.nav_window(node_id)
            delay = 0 if node_id == tx.sender else self.medium.delay(tx.sender, node_id)
            if tx.start + delay < nav_until and tx.end + delay > nav_from:
                legacy = not isinstance(self.nodes[tx.sender], HybridNode)
                self.diagnostics.report(
                    "nav_intrusion_legacy" if legacy else "nav_intrusion",
                    tx.start,
                    f"{tx.frame.access} frame from node {tx.sender} overlaps the NAV of node {node_id}",
                    node=tx.sender,
                )
                return

    # ------------------------------------------------------------------
    # Run
    # ------------------------------------------------------------------

    def _synced_clients(self) -> list[HybridNode]:
        return [
            node
            for node_id, node in sorted(self.nodes.items())
            if node_id != SERVER_NODE
            and isinstance(node, HybridNode)
            and node.associated
            and node.clock.estimate.synchronized
        ]

    def _check_sync(self, tx: Transmission) -> None:
        """At every TDMA transmission, record each synchronized client's offset error."""
        if tx.frame.access != "tdma":
            return
        for node in self._synced_clients():
            node.residual_errors.append(node.clock.offset_error(tx.start))

    def sync_summary(self) -> dict[str, Any]:
        clients = [
            node for node_id, node in sorted(self.nodes.items())
            if node_id != SERVER_NODE and isinstance(node, HybridNode)
        ]
        residuals = [error for node in clients for error in node.residual_errors]
        round_errors = [error for node in clients for error in node.round_errors]
        return {
            "rounds": {str(node.node_id): node.sync_rounds for node in clients},
            "tdma_fires_checked": len(residuals),
            "max_residual_ns": max(residuals) if residuals else None,
            "rounds_checked": len(round_errors),
            "max_round_error_ns": max(round_errors) if round_errors else None,
        }

    def run(self) -> RunResult:
        """Process every event in the half-open window [0, duration)."""
        logger.info(
            "running %s (%s, %.3f s, seed %d)",
            self.scenario.name,
            self.scenario.mac_mode.value,
            self.scenario.duration_s,
            self.scenario.seed,
        )
        self.sim.run_until(self.horizon - 1)
        metrics = self.collector.finalize(self.ledger)
        return RunResult(
            scenario=self.scenario,
            metrics=metrics,
            diagnostics=self.diagnostics,
            channel=self.medium.stats,
            offered=offered_load_breakdown(self.scenario),
            events_processed=self.sim.processed,
            trace_digest=self.sim.trace_digest() if self.sim.trace else None,
            tracker=self.tracker,
            manager=self.manager,
            sync=self.sync_summary() if self.server is not None else {},
            ignored_injections=self.ignored_injections,
        )


def run_scenario(scenario: ScenarioConfig, record_trace: bool = False) -> RunResult:
    """Build and execute one run."""
    return ScenarioRun(scenario, record_trace=record_trace).run()


def _merge(base: dict[str, Any], overrides: dict[str, Any]) -> dict[str, Any]:
    merged = dict(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_scenario_file(
    path: Optional[Union[str, Path]] = None,
    overrides: Optional[dict[str, Any]] = None,
) -> ScenarioConfig:
    """Load a scenario JSON file (or defaults) and apply nested overrides.

    Raises:
        FileNotFoundError: If the file does not exist
        ValueError: If the file is not a JSON object
        pydantic.ValidationError: If the merged scenario is invalid
    """
    data: dict[str, Any] = {}
    if path is not None:
        scenario_path = Path(path)
        if not scenario_path.exists():
            raise FileNotFoundError(f"Scenario file not found: {scenario_path}")
        with open(scenario_path, "r", encoding="utf-8") as handle:
            data = json.load(handle)
        if not isinstance(data, dict):
            raise ValueError(f"Scenario file {scenario_path} must contain a JSON object.")
    return ScenarioConfig.model_validate(_merge(data, overrides or {}))
