"""Configuration constants for the hybrid TDMA/CSMA channel simulator.

This module centralizes the time base, the default PHY/DCF timings, the
default superframe, and the reference robot workload used across the protocol,
traffic and metrics models. All durations are integer nanoseconds.
"""

from __future__ import annotations

# Time base (1 ns ticks)
NS_PER_US = 1_000
NS_PER_MS = 1_000_000
NS_PER_S = 1_000_000_000

# Binary size units (MB/KB read as 2^20 / 2^10 bytes)
KIB = 1_024
MIB = 1_024 * 1_024

# PHY defaults
# Calibrated so the reference workload offers 77.1% of data_rate_bps:
# 14_089_304.5 bit/s / 18_274_000 bit/s = 0.7710
DEFAULT_DATA_RATE_BPS = 18_274_000
DEFAULT_PER_FRAME_OVERHEAD_NS = 20 * NS_PER_US  # legacy preamble + PHY header
DEFAULT_LINK_DELAY_NS = 100  # ~30 m, symmetric
DEFAULT_FRAME_ERROR_PROB = 1e-3
TARGET_OFFERED_LOAD = 0.771

# Byte overheads added to payloads when computing airtime
DEFAULT_MAC_OVERHEAD_BYTES = 66  # TCP/IP + MAC headers of data frames
MGMT_HEADER_BYTES = 28  # 802.11 management header + FCS
ACK_FRAME_BYTES = 14

# DCF defaults (802.11n, 2.4 GHz)
DEFAULT_SLOT_TIME_NS = 9 * NS_PER_US
DEFAULT_SIFS_NS = 10 * NS_PER_US
DEFAULT_DIFS_NS = 28 * NS_PER_US
DEFAULT_CW_MIN = 15
DEFAULT_CW_MAX = 1_023
DEFAULT_RETRY_LIMIT = 7  # one initial attempt plus seven retransmissions

# Commercial 802.11n stations: WMM video access category and A-MPDU aggregation
VIDEO_CW_MIN = 7
VIDEO_CW_MAX = 15
HT_MAX_PPDU_NS = 5_484 * NS_PER_US  # HT-mixed L-SIG length limit

# Superframe defaults: one critical command per deadline window
DEFAULT_SUPERFRAME_NS = 100 * NS_PER_MS
DEFAULT_N_TDMA = 1
DEFAULT_TAU_TDMA_NS = 1 * NS_PER_MS
DEFAULT_T_CTL_NS = 4 * NS_PER_MS
DEFAULT_BEACON_AIRTIME_NS = 100 * NS_PER_US
DEFAULT_GUARD_NS = 20 * NS_PER_US
DEFAULT_SLOT_MAP_REPEATS = 3
DEFAULT_MAX_TDMA_FRACTION = 0.5

# Clock defaults
MAX_DRIFT_PPM = 100.0
DEFAULT_CLIENT_DRIFT_PPM = 5.0
DEFAULT_CLIENT_OFFSET_NS = 50 * NS_PER_US

# Reference robot workload
LARGE_VOLUME_PERIOD_NS = 3 * NS_PER_S
LARGE_VOLUME_BURST_BYTES = 5 * MIB
EVENT_INTERARRIVAL_MEAN_S = 40.0
EVENT_RESPONSE_MEAN_S = 25.0
EVENT_POLL_BYTES = 2 * KIB
EVENT_HISTORY_BYTES = 512 * KIB
EVENT_FSM_BYTES = 5 * KIB
COMMAND_PERIOD_NS = 100 * NS_PER_MS
COMMAND_BYTES = 25
COMMAND_DEADLINE_NS = 100 * NS_PER_MS
MTU_PAYLOAD_BYTES = 1_500

# Metrics
THROUGHPUT_WINDOW_NS = 100 * NS_PER_MS
SUMMARY_SCHEMA_VERSION = "1.0"

# Tracking defaults
TRACKING_SPEED_MPS = 1.0
TRACKING_ARC_RADIUS_M = 5.0
TRACKING_STRAIGHT_M = 5.0
TRACKING_LOOKAHEAD_M = 1.0
TRACKING_STEP_NS = 1 * NS_PER_MS
TRACKING_SAMPLE_NS = 10 * NS_PER_MS

SERVER_NODE = 0
