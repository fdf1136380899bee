"""Canonical byte layouts of the management payloads.

All fields are little-endian; timestamps are signed 64-bit nanoseconds and
slot counts are unsigned 16-bit. The layouts are fixed so management frame
sizes (and therefore airtimes and golden traces) are byte-stable.

    beacon        <I q q H H q H  frame, s_ap, nav, version, n_tdma, tau, n_records
                  + n_records × <H I q q   node, frame, s_response echo, t_rx
    sync response <I q            frame, s_response
    slot map      <H I H q q H    version, effective_from, n_tdma, tau, t_ctl, n_assign
                  + n_assign × <H H  slot, node
    assoc request <H              node
    assoc reply   <H H            node, schedule version
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

_BEACON_HEAD = struct.Struct("<IqqHHqH")
_TIMESTAMP_RECORD = struct.Struct("<HIqq")
_SYNC_RESPONSE = struct.Struct("<Iq")
_SLOT_MAP_HEAD = struct.Struct("<HIHqqH")
_ASSIGNMENT = struct.Struct("<HH")
_ASSOC_REQUEST = struct.Struct("<H")
_ASSOC_REPLY = struct.Struct("<HH")


@dataclass(frozen=True)
class TimestampRecord:
    """Server receive time of one client's sync response."""

    node: int
    frame_index: int  # superframe whose beacon opened the round
    s_response: int  # client clock, echoed from the delivered response
    t_rx: int  # server clock


@dataclass(frozen=True)
class BeaconPayload:
    frame_index: int
    s_ap: int
    nav_ns: int
    schedule_version: int
    n_tdma: int
    tau_tdma_ns: int
    records: tuple[TimestampRecord, ...] = ()

    def record_for(self, node: int) -> TimestampRecord | None:
        for record in self.records:
            if record.node == node:
                return record
        return None


@dataclass(frozen=True)
class SyncResponsePayload:
    frame_index: int  # superframe whose beacon opened the round
    s_response: int


@dataclass(frozen=True)
class SlotMapPayload:
    version: int
    effective_from: int
    n_tdma: int
    tau_tdma_ns: int
    t_ctl_ns: int
    assignments: tuple[tuple[int, int], ...] = ()  # (slot, node), sorted by slot


@dataclass(frozen=True)
class AssociationReply:
    node: int
    schedule_version: int


def beacon_size(n_records: int) -> int:
    return _BEACON_HEAD.size + n_records * _TIMESTAMP_RECORD.size


def encode_beacon(beacon: BeaconPayload) -> bytes:
    parts = [
        _BEACON_HEAD.pack(
            beacon.frame_index,
            beacon.s_ap,
            beacon.nav_ns,
            beacon.schedule_version,
            beacon.n_tdma,
            beacon.tau_tdma_ns,
            len(beacon.records),
        )
    ]
    parts.extend(
        _TIMESTAMP_RECORD.pack(r.node, r.frame_index, r.s_response, r.t_rx) for r in beacon.records
    )
    return b"".join(parts)


def decode_beacon(data: bytes) -> BeaconPayload:
    frame_index, s_ap, nav_ns, version, n_tdma, tau, count = _BEACON_HEAD.unpack_from(data, 0)
    expected = beacon_size(count)
    if len(data) != expected:
        raise ValueError(f"Beacon payload is {len(data)} bytes, expected {expected}.")
    records = tuple(
        TimestampRecord(*_TIMESTAMP_RECORD.unpack_from(data, _BEACON_HEAD.size + i * _TIMESTAMP_RECORD.size))
        for i in range(count)
    )
    return BeaconPayload(
        frame_index=frame_index,
        s_ap=s_ap,
        nav_ns=nav_ns,
        schedule_version=version,
        n_tdma=n_tdma,
        tau_tdma_ns=tau,
        records=records,
    )


def sync_response_size() -> int:
    return _SYNC_RESPONSE.size


def encode_sync_response(response: SyncResponsePayload) -> bytes:
    return _SYNC_RESPONSE.pack(response.frame_index, response.s_response)


def decode_sync_response(data: bytes) -> SyncResponsePayload:
    if len(data) != _SYNC_RESPONSE.size:
        raise ValueError(
            f"Sync response payload is {len(data)} bytes, expected {_SYNC_RESPONSE.size}."
        )
    frame_index, s_response = _SYNC_RESPONSE.unpack(data)
    return SyncResponsePayload(frame_index=frame_index, s_response=s_response)


def slot_map_size(n_assignments: int) -> int:
    return _SLOT_MAP_HEAD.size + n_assignments * _ASSIGNMENT.size


def encode_slot_map(slot_map: SlotMapPayload) -> bytes:
    parts = [
        _SLOT_MAP_HEAD.pack(
            slot_map.version,
            slot_map.effective_from,
            slot_map.n_tdma,
            slot_map.tau_tdma_ns,
            slot_map.t_ctl_ns,
            len(slot_map.assignments),
        )
    ]
    parts.extend(_ASSIGNMENT.pack(slot, node) for slot, node in slot_map.assignments)
    return b"".join(parts)


def decode_slot_map(data: bytes) -> SlotMapPayload:
    version, effective_from, n_tdma, tau, t_ctl, count = _SLOT_MAP_HEAD.unpack_from(data, 0)
    expected = slot_map_size(count)
    if len(data) != expected:
        raise ValueError(f"Slot map payload is {len(data)} bytes, expected {expected}.")
    assignments = tuple(
        _ASSIGNMENT.unpack_from(data, _SLOT_MAP_HEAD.size + i * _ASSIGNMENT.size)
        for i in range(count)
    )
    return SlotMapPayload(
        version=version,
        effective_from=effective_from,
        n_tdma=n_tdma,
        tau_tdma_ns=tau,
        t_ctl_ns=t_ctl,
        assignments=assignments,
    )


def encode_association_request(node: int) -> bytes:
    return _ASSOC_REQUEST.pack(node)


def decode_association_request(data: bytes) -> int:
    (node,) = _ASSOC_REQUEST.unpack(data)
    return node


def encode_association_reply(reply: AssociationReply) -> bytes:
    return _ASSOC_REPLY.pack(reply.node, reply.schedule_version)


def decode_association_reply(data: bytes) -> AssociationReply:
    node, version = _ASSOC_REPLY.unpack(data)
    return AssociationReply(node=node, schedule_version=version)
