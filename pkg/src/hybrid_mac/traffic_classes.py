"""Traffic class definitions and queue routing.

This module defines the robotic traffic classes carried over the shared
channel and controls which of them are deadline-constrained.
"""

from __future__ import annotations

from enum import Enum


class TrafficClass(str, Enum):
    """Traffic classes of the robotic network.

    Each class has different timing requirements and is routed to a
    different queue by the hybrid MAC.
    """

    MISSION_CRITICAL = "mission_critical"
    LARGE_VOLUME = "large_volume"
    EVENT_DRIVEN = "event_driven"
    MANAGEMENT = "management"

    @property
    def display_name(self) -> str:
        """Human-readable display name."""
        return {
            TrafficClass.MISSION_CRITICAL: "Mission-Critical Control",
            TrafficClass.LARGE_VOLUME: "Large-Volume Data",
            TrafficClass.EVENT_DRIVEN: "Event-Driven",
            TrafficClass.MANAGEMENT: "Management",
        }[self]

    @property
    def queue_name(self) -> str:
        """Hybrid MAC queue the class is classified into."""
        return {
            TrafficClass.MISSION_CRITICAL: "tdma_data",
            TrafficClass.LARGE_VOLUME: "csma_gen",
            TrafficClass.EVENT_DRIVEN: "csma_gen",
            TrafficClass.MANAGEMENT: "csma_ctl",
        }[self]


# Classes that carry a QoS deadline and get an outcome verdict
DEADLINE_CLASSES = {TrafficClass.MISSION_CRITICAL}

# Classes reported in throughput windows (user data only)
DATA_CLASSES = (
    TrafficClass.MISSION_CRITICAL,
    TrafficClass.LARGE_VOLUME,
    TrafficClass.EVENT_DRIVEN,
)


def is_deadline_class(traffic_class: TrafficClass) -> bool:
    """Check if packets of a class are classified against a deadline.

    Args:
        traffic_class: The traffic class to check

    Returns:
        True if the class carries a QoS deadline, False otherwise
    """
    return traffic_class in DEADLINE_CLASSES
