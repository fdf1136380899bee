"""Protocol anomaly counters.

Anomalies (missed beacons, stale TDMA timestamps, NAV intrusions, negative
delay estimates, rejected manager requests) are logged to the
``hybrid_mac.diagnostics`` logger and counted here, so summary.json can
report them without relying on log output.
"""

from __future__ import annotations

import logging
from collections import Counter
from typing import Any

diag_logger = logging.getLogger("hybrid_mac.diagnostics")


class Diagnostics:
    """Named counters plus a bounded list of notable events."""

    def __init__(self, max_events: int = 200) -> None:
        self.counters: Counter[str] = Counter()
        self.events: list[dict[str, Any]] = []
        self._max_events = max_events

    def count(self, name: str, amount: int = 1) -> None:
        self.counters[name] += amount

    def report(self, name: str, now: int, message: str, **context: Any) -> None:
        """Count an anomaly, keep it as an event and log it."""
        self.counters[name] += 1
        if len(self.events) < self._max_events:
            self.events.append({"name": name, "t_ns": now, **context})
        diag_logger.info("[t=%d ns] %s: %s", now, name, message)

    def __getitem__(self, name: str) -> int:
        return self.counters[name]

    def as_dict(self) -> dict[str, int]:
        return {name: self.counters[name] for name in sorted(self.counters)}
