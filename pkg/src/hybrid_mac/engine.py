"""Deterministic discrete-event core.

The simulator owns the virtual clock (integer nanoseconds), a future-event
list kept as a heap of ``(fire_at, seq, event)`` entries, and the run loop.
Events at equal timestamps fire in insertion order, so a fixed scenario and
seed always replays the same event trace.
"""

from __future__ import annotations

import hashlib
import heapq
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable

logger = logging.getLogger(__name__)


class EventKind(str, Enum):
    """Event payload kinds processed by the run loop."""

    BEACON_DUE = "beacon_due"
    SLOT_TIMER = "slot_timer"
    IFS_DONE = "ifs_done"
    BACKOFF_EXPIRY = "backoff_expiry"
    ACK_TIMEOUT = "ack_timeout"
    SECTION_OPEN = "section_open"
    NAV_EXPIRY = "nav_expiry"
    RX_START = "rx_start"
    TX_END = "tx_end"
    RX_COMPLETE = "rx_complete"
    TRAFFIC_ARRIVAL = "traffic_arrival"
    SYNC_DUE = "sync_due"
    WINDOW_CLOSE = "window_close"
    TRACKING_SAMPLE = "tracking_sample"
    MANAGER_REQUEST = "manager_request"


class SchedulingError(ValueError):
    """Raised when an event is scheduled before the current time."""


@dataclass
class Event:
    """A pending callback on the virtual timeline."""

    fire_at: int
    kind: EventKind
    action: Callable[[], None]
    label: str = ""
    seq: int = -1


class Simulator:
    """Single-threaded event loop with stable tie-breaking and cancellation."""

    def __init__(self, record_trace: bool = False) -> None:
        self._now = 0
        self._seq = 0
        self._heap: list[tuple[int, int, Event]] = []
        self._pending: dict[int, Event] = {}
        self._record_trace = record_trace
        self.trace: list[tuple[int, int, str, str]] = []
        self.processed = 0

    @property
    def now(self) -> int:
        """Current virtual time in nanoseconds."""
        return self._now

    def schedule(self, event: Event) -> int:
        """Enqueue an event and return its id (the tie-break sequence number).

        Raises:
            SchedulingError: If the event lies in the past or is not integral
        """
        if not isinstance(event.fire_at, int) or isinstance(event.fire_at, bool):
            raise SchedulingError(
                f"fire_at must be integer nanoseconds, got {event.fire_at!r}."
            )
        if event.fire_at < self._now:
            raise SchedulingError(
                f"Cannot schedule {event.kind.value} at t={event.fire_at} ns; "
                f"clock is already at t={self._now} ns."
            )
        event.seq = self._seq
        self._seq += 1
        heapq.heappush(self._heap, (event.fire_at, event.seq, event))
        self._pending[event.seq] = event
        return event.seq

    def call_at(
        self,
        fire_at: int,
        kind: EventKind,
        action: Callable[[], None],
        label: str = "",
    ) -> int:
        """Schedule ``action`` at an absolute time."""
        return self.schedule(Event(fire_at=fire_at, kind=kind, action=action, label=label))

    def call_in(
        self,
        delay: int,
        kind: EventKind,
        action: Callable[[], None],
        label: str = "",
    ) -> int:
        """Schedule ``action`` ``delay`` nanoseconds from now."""
        return self.call_at(self._now + delay, kind, action, label)

    def cancel(self, event_id: int) -> bool:
        """Remove a pending event. Returns False if it already fired or was cancelled."""
        return self._pending.pop(event_id, None) is not None

    def is_pending(self, event_id: int) -> bool:
        return event_id in self._pending

    @property
    def pending_count(self) -> int:
        return len(self._pending)

    def run_until(self, end: int) -> int:
        """Process every event with ``fire_at <= end`` and advance the clock to ``end``.

        Returns:
            Number of events processed by this call
        """
        if end < self._now:
            raise SchedulingError(f"run_until({end}) is earlier than the clock ({self._now}).")
        count = 0
        while self._heap and self._heap[0][0] <= end:
            fire_at, seq, event = heapq.heappop(self._heap)
            if self._pending.pop(seq, None) is None:
                continue  # cancelled
            self._now = fire_at
            if self._record_trace:
                self.trace.append((fire_at, seq, event.kind.value, event.label))
            event.action()
            count += 1
        self._now = end
        self.processed += count
        return count

    def trace_digest(self) -> str:
        """SHA-256 over the recorded trace, for replay comparisons."""
        digest = hashlib.sha256()
        for fire_at, seq, kind, label in self.trace:
            digest.update(f"{fire_at},{seq},{kind},{label}\n".encode("utf-8"))
        return digest.hexdigest()
