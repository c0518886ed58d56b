"""On-air durations of data frames, block ACKs, successes and collisions.

Frame duration: T_PHY plus one OFDM symbol per started chunk of
bits_per_ofdm_symbol data bits, over service field + per-MPDU overhead
(delimiter + MAC header) + payload + tail bits. A successful exchange is
frame + SIFS + BlockACK + DIFS + one empty slot; a collision is the longest
colliding frame + DIFS + one empty slot (nothing acknowledges it).

All results are integer microseconds.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

from .config import PhyConfig

if TYPE_CHECKING:
    from .engine import TxAttempt

__all__ = [
    "AirtimeBreakdown",
    "SERVICE_FIELD_BITS",
    "MPDU_DELIMITER_BITS",
    "MAC_HEADER_BITS",
    "TAIL_BITS",
    "BLOCKACK_BITS",
    "t_frame",
    "t_frame_for_payloads",
    "t_blockack",
    "t_success",
    "t_success_for_payloads",
    "t_collision",
]

SERVICE_FIELD_BITS = 16       # 2 B service field
MPDU_DELIMITER_BITS = 32      # 4 B A-MPDU delimiter
MAC_HEADER_BITS = 288         # 36 B MAC header (3-bit stage field rides in Address 4)
TAIL_BITS = 6
BLOCKACK_BITS = 256           # 32 B block acknowledgement

DEFAULT_PAYLOAD_BYTES = 1470


@dataclass(frozen=True)
class AirtimeBreakdown:
    t_frame_us: int
    t_blockack_us: int
    t_success_us: int
    n_symbols: int


def _symbols(data_bits: int, phy: PhyConfig) -> int:
    return -(-data_bits // phy.bits_per_ofdm_symbol)


def t_frame_for_payloads(payload_bytes: Sequence[int], phy: PhyConfig) -> int:
    """Duration of one aggregate carrying the given per-MPDU payload sizes."""
    if len(payload_bytes) < 1:
        raise ValueError("an aggregate carries at least one frame")
    bits = SERVICE_FIELD_BITS + TAIL_BITS
    for size in payload_bytes:
        bits += MPDU_DELIMITER_BITS + MAC_HEADER_BITS + 8 * size
    return phy.t_phy_us + _symbols(bits, phy) * phy.t_sym_us


def t_frame(n_frames: int, phy: PhyConfig, payload_bytes: int = DEFAULT_PAYLOAD_BYTES) -> int:
    """Duration of an aggregate of n_frames equal-sized MPDUs."""
    if n_frames < 1:
        raise ValueError("n_frames must be >= 1")
    bits = (SERVICE_FIELD_BITS + TAIL_BITS
            + n_frames * (MPDU_DELIMITER_BITS + MAC_HEADER_BITS + 8 * payload_bytes))
    return phy.t_phy_us + _symbols(bits, phy) * phy.t_sym_us


def t_blockack(phy: PhyConfig) -> int:
    bits = SERVICE_FIELD_BITS + BLOCKACK_BITS + TAIL_BITS
    return phy.t_phy_us + _symbols(bits, phy) * phy.t_sym_us


def t_success(n_frames: int, phy: PhyConfig, payload_bytes: int = DEFAULT_PAYLOAD_BYTES) -> AirtimeBreakdown:
    """Full successful-exchange breakdown for an n_frames aggregate."""
    frame = t_frame(n_frames, phy, payload_bytes)
    ba = t_blockack(phy)
    bits = (SERVICE_FIELD_BITS + TAIL_BITS
            + n_frames * (MPDU_DELIMITER_BITS + MAC_HEADER_BITS + 8 * payload_bytes))
    return AirtimeBreakdown(
        t_frame_us=frame,
        t_blockack_us=ba,
        t_success_us=frame + phy.sifs_us + ba + phy.difs_us + phy.slot_us,
        n_symbols=_symbols(bits, phy),
    )


def t_success_for_payloads(payload_bytes: Sequence[int], phy: PhyConfig) -> AirtimeBreakdown:
    frame = t_frame_for_payloads(payload_bytes, phy)
    ba = t_blockack(phy)
    return AirtimeBreakdown(
        t_frame_us=frame,
        t_blockack_us=ba,
        t_success_us=frame + phy.sifs_us + ba + phy.difs_us + phy.slot_us,
        n_symbols=(frame - phy.t_phy_us) // phy.t_sym_us,
    )


def t_collision(attempts: Sequence["TxAttempt"], phy: PhyConfig) -> int:
    """Channel occupancy of a collision: the longest frame, then DIFS + slot."""
    if len(attempts) < 2:
        raise ValueError("a collision involves at least two attempts")
    longest = max(t_frame_for_payloads(a.frame_payloads, phy) for a in attempts)
    return longest + phy.difs_us + phy.slot_us
