"""Tests for management payload layouts in hybrid_mac.frames."""

from __future__ import annotations

import pytest

from hybrid_mac.frames import (
    AssociationReply,
    BeaconPayload,
    SlotMapPayload,
    SyncResponsePayload,
    TimestampRecord,
    beacon_size,
    decode_association_reply,
    decode_association_request,
    decode_beacon,
    decode_slot_map,
    decode_sync_response,
    encode_association_reply,
    encode_association_request,
    encode_beacon,
    encode_slot_map,
    encode_sync_response,
    slot_map_size,
    sync_response_size,
)


def _beacon() -> BeaconPayload:
    return BeaconPayload(
        frame_index=42,
        s_ap=4_200_000_000,
        nav_ns=5_000_000,
        schedule_version=3,
        n_tdma=2,
        tau_tdma_ns=1_000_000,
        records=(
            TimestampRecord(node=1, frame_index=41, s_response=-12_345, t_rx=4_101_100_000),
            TimestampRecord(node=2, frame_index=41, s_response=4_101_300_007, t_rx=4_101_300_100),
        ),
    )


def test_fixed_sizes() -> None:
    """Beacon is 34 B plus 22 B per timestamp record."""
    assert beacon_size(0) == 34
    assert beacon_size(3) == 34 + 3 * 22
    assert sync_response_size() == 12
    assert slot_map_size(2) == 26 + 2 * 4


def test_beacon_encoding_preserves_records() -> None:
    beacon = _beacon()
    data = encode_beacon(beacon)
    assert len(data) == beacon_size(2)
    decoded = decode_beacon(data)
    assert decoded == beacon
    assert decoded.record_for(2) == beacon.records[1]
    assert decoded.record_for(7) is None


def test_truncated_beacon_rejected() -> None:
    data = encode_beacon(_beacon())
    with pytest.raises(ValueError, match="expected 78"):
        decode_beacon(data[:-1])


def test_sync_response_length_checked() -> None:
    data = encode_sync_response(SyncResponsePayload(frame_index=9, s_response=-5))
    assert decode_sync_response(data) == SyncResponsePayload(frame_index=9, s_response=-5)
    with pytest.raises(ValueError, match="Sync response payload is 13 bytes"):
        decode_sync_response(data + b"\x00")


def test_slot_map_encoding() -> None:
    slot_map = SlotMapPayload(
        version=2,
        effective_from=17,
        n_tdma=3,
        tau_tdma_ns=1_000_000,
        t_ctl_ns=4_000_000,
        assignments=((1, 0), (2, 1), (3, 2)),
    )
    data = encode_slot_map(slot_map)
    assert len(data) == slot_map_size(3)
    assert decode_slot_map(data) == slot_map
    with pytest.raises(ValueError, match="Slot map payload"):
        decode_slot_map(data[:-2])


def test_association_payloads() -> None:
    assert decode_association_request(encode_association_request(5)) == 5
    reply = AssociationReply(node=5, schedule_version=4)
    assert decode_association_reply(encode_association_reply(reply)) == reply
