"""hybrid-mac-sim: deterministic simulator of a shared wireless channel.

Compares a baseline CSMA/CA MAC with a hybrid TDMA/CSMA MAC (PTP-aligned
slots, three-section superframe, beacon NAV protection) on a robotic
workload, and measures deadline outcomes, throughput and path-tracking error.
"""

from __future__ import annotations

__version__ = "0.1.0"

# Public API exports
from hybrid_mac.artifacts import aggregate_summaries, build_summary, report, write_run
from hybrid_mac.clocks import (
    ClockState,
    OscillatorModel,
    PtpEstimate,
    SyncRecord,
    local_read,
    periodic_sync_due,
    ptp_update,
    schedule_slot_tx,
)
from hybrid_mac.contracts import (
    DcfParams,
    Direction,
    MacMode,
    PhyConfig,
    ScenarioConfig,
    Section,
    SuperframeConfig,
    TrackingConfig,
    Verdict,
)
from hybrid_mac.engine import Event, EventKind, SchedulingError, Simulator
from hybrid_mac.manager import NetworkManager, SlotAllocationError
from hybrid_mac.medium import Frame, FrameKind, Medium, MediumError, RxResult, airtime
from hybrid_mac.metrics import FailureMix, ThroughputSeries, TxOutcome, classify, failure_mix, throughput
from hybrid_mac.randomness import RngRegistry, RngStream
from hybrid_mac.scenario import RunResult, load_scenario_file, run_scenario
from hybrid_mac.tracking import PathModel, PathTracker, pure_pursuit_rate, rmse
from hybrid_mac.traffic import Packet, PacketLedger, offered_load, offered_load_breakdown
from hybrid_mac.traffic_classes import TrafficClass

__all__ = [
    "ClockState",
    "DcfParams",
    "Direction",
    "Event",
    "EventKind",
    "FailureMix",
    "Frame",
    "FrameKind",
    "MacMode",
    "Medium",
    "MediumError",
    "NetworkManager",
    "OscillatorModel",
    "Packet",
    "PacketLedger",
    "PathModel",
    "PathTracker",
    "PhyConfig",
    "PtpEstimate",
    "RngRegistry",
    "RngStream",
    "RunResult",
    "RxResult",
    "ScenarioConfig",
    "SchedulingError",
    "Section",
    "Simulator",
    "SlotAllocationError",
    "SuperframeConfig",
    "SyncRecord",
    "ThroughputSeries",
    "TrackingConfig",
    "TrafficClass",
    "TxOutcome",
    "Verdict",
    "aggregate_summaries",
    "airtime",
    "build_summary",
    "classify",
    "failure_mix",
    "load_scenario_file",
    "local_read",
    "offered_load",
    "offered_load_breakdown",
    "periodic_sync_due",
    "ptp_update",
    "pure_pursuit_rate",
    "report",
    "rmse",
    "run_scenario",
    "schedule_slot_tx",
    "throughput",
    "write_run",
]
