"""Distributed reservation: stage announcements and the prohibited-values ledger.

Every transmitted frame header carries a 3-bit backoff-stage field (riding
in the otherwise unused Address 4 field). An overhearing station combines
the announced stage with the traffic category's CW_min to predict, in idle
slots, when the transmitter will contend again (its Next Transmission, NT).
Announced NTs go into a per-station ledger of prohibited values that counts
down in lockstep with backoff counters and that random backoff draws must
avoid. Field value 7 announces an emptied queue and reserves nothing.
"""

from __future__ import annotations

import random

from .config import EMPTY_QUEUE_SENTINEL

__all__ = [
    "EMPTY_QUEUE_SENTINEL",
    "encode_stage_field",
    "decode_stage_field",
    "compute_nt",
    "ReservationLedger",
    "draw_avoiding",
    "on_overhear",
]

# One failed draw per slot of headroom would livelock in dense ledgers; cap
# the redraw attempts and accept the final raw draw.
MAX_REDRAWS = 16


def encode_stage_field(stage: int) -> bytes:
    """Pack the 3-bit stage field into the first byte of an Address 4 value."""
    if not 0 <= stage <= 7:
        raise ValueError(f"stage field must fit 3 bits, got {stage}")
    return bytes([stage & 0x07, 0, 0, 0, 0, 0])


def decode_stage_field(address4: bytes) -> int:
    if len(address4) != 6:
        raise ValueError("Address 4 field must be 6 bytes")
    return address4[0] & 0x07


def compute_nt(field: int, cw_min: int) -> int | None:
    """Predicted idle slots until the announcer contends again; None for the
    empty-queue sentinel."""
    if field == EMPTY_QUEUE_SENTINEL:
        return None
    if not 0 <= field < EMPTY_QUEUE_SENTINEL:
        raise ValueError(f"invalid stage field {field}")
    return (cw_min << field) // 2 - 1


class ReservationLedger:
    """Multiset of countdown counters for foreign predicted transmissions.

    Entries are stored as absolute positions on the station's idle-slot
    clock, so a tick is O(1) and batch ticks cost nothing extra. The clock
    advances exactly when backoff counters would: on idle slots, whether or
    not the station has traffic.
    """

    __slots__ = ("_due", "_clock")

    def __init__(self) -> None:
        self._due: dict[int, int] = {}
        self._clock = 0

    def __len__(self) -> int:
        return len(self._due)

    def add(self, nt: int) -> None:
        if nt <= 0:
            return
        key = self._clock + nt
        self._due[key] = self._due.get(key, 0) + 1

    def contains(self, value: int) -> bool:
        return self._clock + value in self._due

    def tick(self, n: int = 1) -> None:
        clock = self._clock + n
        self._clock = clock
        due = self._due
        if n == 1:
            due.pop(clock, None)
        elif due:
            expired = [k for k in due if k <= clock]
            for k in expired:
                del due[k]

    def values(self) -> list[int]:
        """Current remaining counts, one per entry (duplicates repeated)."""
        clock = self._clock
        out: list[int] = []
        for key, count in self._due.items():
            if key > clock:
                out.extend([key - clock] * count)
        return sorted(out)


def draw_avoiding(rng: random.Random, stage: int, cw_min: int,
                  ledger: ReservationLedger) -> int:
    """Uniform draw over [0, 2^stage*cw_min - 1] avoiding ledger entries.

    If 16 draws all land on prohibited values (ledger nearly covering the
    window), the last raw draw is accepted so the station stays live.
    """
    n = cw_min << stage
    value = 0
    for _ in range(MAX_REDRAWS):
        value = rng.randrange(n)
        if not ledger.contains(value):
            return value
    return value


def on_overhear(ledger: ReservationLedger, acs, nt: int | None, rngs) -> None:
    """Register an overheard announcement and dodge predicted collisions.

    The NT goes into the ledger first; any backlogged AC whose counter sits
    exactly on it redraws immediately, excluding everything currently
    prohibited (the fresh entry included).
    """
    if nt is None:
        return
    ledger.add(nt)
    for st, rng in zip(acs, rngs):
        if st.backoff == nt:
            st.backoff = draw_avoiding(rng, st.stage, st.cw_min, ledger)
