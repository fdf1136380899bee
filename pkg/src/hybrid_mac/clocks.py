"""Drifting node oscillators, PTP offset/delay estimation and slot scheduling.

Sign convention: a client's clock reads ``true time + o_i``. The server is
the time reference (its oscillator reads true time).

The estimation follows the three-timestamp handshake:
1. The beacon carries the server transmit time ``s_ap``; the client records
   its arrival ``s~`` on its own clock.
2. The client sends a sync response stamped ``s_resp`` (client clock) in the
   control section; the server records its arrival ``t_rx``.
3. ``t_rx`` comes back in the next beacon and the client solves for delay and
   offset assuming symmetric propagation.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional

from hybrid_mac.config import MAX_DRIFT_PPM

logger = logging.getLogger(__name__)
diag_logger = logging.getLogger("hybrid_mac.diagnostics")


def round_half_up(value: float) -> int:
    """Round to the nearest integer, halves upward."""
    return math.floor(value + 0.5)


def _half_round_up(value: int) -> int:
    """Exact ``round_half_up(value / 2)`` for integers."""
    return (value + 1) // 2


@dataclass(frozen=True)
class OscillatorModel:
    """Constant-drift oscillator: reading(t) = t + offset + drift_ppm·1e-6·t."""

    drift_ppm: float = 0.0
    initial_offset: int = 0  # o_i at t=0, ns

    def __post_init__(self) -> None:
        if abs(self.drift_ppm) > MAX_DRIFT_PPM:
            raise ValueError(
                f"drift_ppm must satisfy |drift_ppm| <= {MAX_DRIFT_PPM}, got {self.drift_ppm}."
            )

    def reading(self, true_time: int) -> int:
        """Local counter value at a true instant, rounded to integer ns."""
        return true_time + self.initial_offset + round_half_up(self.drift_ppm * true_time / 1e6)

    def offset_at(self, true_time: int) -> int:
        """True clock offset o_i at a given instant."""
        return self.reading(true_time) - true_time

    def true_time_at(self, local_time: int) -> int:
        """Earliest true instant at which the local counter reaches ``local_time``."""
        rate = 1.0 + self.drift_ppm / 1e6
        guess = math.ceil((local_time - self.initial_offset) / rate)
        while self.reading(guess) < local_time:
            guess += 1
        while self.reading(guess - 1) >= local_time:
            guess -= 1
        return guess


REFERENCE_OSCILLATOR = OscillatorModel()


def local_read(oscillator: OscillatorModel, true_time: int) -> int:
    """Local clock reading of a node at a true instant."""
    return oscillator.reading(true_time)


@dataclass(frozen=True)
class PtpEstimate:
    """A client's current offset/delay estimates and frame reference."""

    o_hat: int = 0
    d_hat: int = 0
    last_sync_at: Optional[int] = None  # client clock, beacon arrival opening the last round
    frame_ref: int = 0  # client clock, start of the reference frame (s_i^l)

    @property
    def synchronized(self) -> bool:
        return self.last_sync_at is not None

    def rebased(self, beacon_arrival_local: int) -> "PtpEstimate":
        """Move the frame reference to a newly decoded beacon."""
        return replace(self, frame_ref=beacon_arrival_local - self.o_hat)

    def shifted(self, frames: int, superframe_ns: int) -> "PtpEstimate":
        """Extrapolate the frame reference ``frames`` superframes ahead."""
        return replace(self, frame_ref=self.frame_ref + frames * superframe_ns)


@dataclass(frozen=True)
class SyncRecord:
    """The four timestamps of one completed handshake."""

    s_ap_beacon: int  # server clock
    s_tilde_arrival: int  # client clock
    s_response: int  # client clock
    t_server_rx: int  # server clock


def ptp_update(record: SyncRecord, synced_at: Optional[int] = None) -> PtpEstimate:
    """Solve the symmetric-delay handshake for (o_hat, d_hat).

    d_hat = ½(s~ + t_rx − s_ap − s_resp)
    o_hat = ½(s~ − t_rx − s_ap + s_resp)

    Both are rounded half up to integer ns. A negative delay is kept but
    reported, since it means asymmetric paths or a corrupted record.

    Args:
        record: Complete set of handshake timestamps
        synced_at: Client-clock instant stored as ``last_sync_at``
            (defaults to the beacon arrival of the round)

    Returns:
        New estimate with ``frame_ref`` rebased on the round's beacon
    """
    d_hat = _half_round_up(
        record.s_tilde_arrival + record.t_server_rx - record.s_ap_beacon - record.s_response
    )
    o_hat = _half_round_up(
        record.s_tilde_arrival - record.t_server_rx - record.s_ap_beacon + record.s_response
    )
    if d_hat < 0:
        diag_logger.warning(
            "negative propagation delay estimate d_hat=%d ns (asymmetric delay or bad record)",
            d_hat,
        )
    return PtpEstimate(
        o_hat=o_hat,
        d_hat=d_hat,
        last_sync_at=record.s_tilde_arrival if synced_at is None else synced_at,
        frame_ref=record.s_tilde_arrival - o_hat,
    )


def schedule_slot_tx(estimate: PtpEstimate, slot_index: int, slot_duration: int) -> int:
    """Client-clock send time for slot ``j``: s_i^l + o_i + (j−1)·T_s − 2·d_i."""
    if slot_index < 1:
        raise ValueError(f"slot_index must be >= 1, got {slot_index}.")
    if slot_duration <= 0:
        raise ValueError(f"slot_duration must be > 0, got {slot_duration}.")
    return (
        estimate.frame_ref
        + estimate.o_hat
        + (slot_index - 1) * slot_duration
        - 2 * estimate.d_hat
    )


def periodic_sync_due(estimate: PtpEstimate, now: int, period: int) -> bool:
    """True when the node has never synced or its last round is ``period`` old."""
    if estimate.last_sync_at is None:
        return True
    return now - estimate.last_sync_at >= period


@dataclass
class ClockState:
    """Per-node oscillator plus the node's PTP view."""

    oscillator: OscillatorModel = field(default_factory=OscillatorModel)
    estimate: PtpEstimate = field(default_factory=PtpEstimate)

    def local(self, true_time: int) -> int:
        return self.oscillator.reading(true_time)

    def true_at(self, local_time: int) -> int:
        return self.oscillator.true_time_at(local_time)

    def offset_error(self, true_time: int) -> int:
        """Residual |o_hat − o_i(t)| in ns."""
        return abs(self.estimate.o_hat - self.oscillator.offset_at(true_time))
