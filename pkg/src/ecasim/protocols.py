"""Per-AC MAC state machines for the three contention disciplines.

CSMA/CA is the classic binary-exponential-backoff baseline: stage resets to
zero after every success and the next backoff is a fresh uniform draw. ECA
keeps the stage after a success (Hysteresis) and parks on the deterministic
value (2^k * CW_min)/2 - 1, transmitting 2^k aggregated frames per attempt
(Fair Share). ECA-DR additionally consults the contender estimate when a
stage must be escalated or reset, and draws random backoffs that avoid the
station's prohibited-values ledger.
"""

from __future__ import annotations

import random

from .config import AcParams, MacConfig, Protocol
from .estimator import NacEstimate, choose_biv, choose_stage
from .reservation import ReservationLedger, draw_avoiding
from .traffic import BoundedQueue

__all__ = ["AcState", "deterministic_backoff", "on_success", "on_collision",
           "on_new_packet_empty_queue"]


def deterministic_backoff(stage: int, cw_min: int) -> int:
    """Post-success Hysteresis value: (2^stage * cw_min) / 2 - 1."""
    return (cw_min << stage) // 2 - 1


class AcState:
    """Backoff machinery plus bookkeeping for one access category of one station.

    backoff is None exactly while the queue is empty: an idle AC holds no
    slot claim, so other stations are free to land on its old value.
    """

    __slots__ = (
        "params", "cw_min", "stage", "retries", "backoff", "queue",
        # per-AC accounting folded in here so the engine touches one object
        "arrivals", "queue_drops", "retry_drops", "delivered_packets",
        "delivered_bits", "tx_attempts", "collisions", "successes",
        "delays_us", "last_success_us", "gap_sum_us", "gap_count",
        "empty_events",
    )

    def __init__(self, params: AcParams, queue_capacity: int):
        self.params = params
        self.cw_min = params.cw_min
        self.stage = 0
        self.retries = 0
        self.backoff: int | None = None
        self.queue = BoundedQueue(queue_capacity)
        self.arrivals = 0
        self.queue_drops = 0
        self.retry_drops = 0
        self.delivered_packets = 0
        self.delivered_bits = 0
        self.tx_attempts = 0
        self.collisions = 0
        self.successes = 0
        self.delays_us: list[int] = []
        self.last_success_us = -1
        self.gap_sum_us = 0
        self.gap_count = 0
        self.empty_events = 0


def _draw(rng: random.Random, stage: int, cw_min: int,
          ledger: ReservationLedger | None) -> int:
    if ledger is not None and len(ledger) > 0:
        return draw_avoiding(rng, stage, cw_min, ledger)
    return rng.randrange(cw_min << stage)


def on_success(st: AcState, protocol: Protocol, mac: MacConfig, rng: random.Random) -> None:
    """Terminal success path; the delivered frames have already left the queue."""
    st.retries = 0
    if len(st.queue) == 0:
        # Wait path: no claim while idle; stage is (re)chosen when the next
        # packet arrives.
        st.backoff = None
        return
    if protocol is Protocol.CSMA_CA:
        st.stage = 0
        st.backoff = rng.randrange(st.cw_min)
    else:
        # Hysteresis: keep the stage, park on its expected value.
        st.backoff = deterministic_backoff(st.stage, st.cw_min)


def on_collision(
    st: AcState,
    protocol: Protocol,
    mac: MacConfig,
    rng: random.Random,
    nac_est: NacEstimate | None = None,
    ledger: ReservationLedger | None = None,
) -> int:
    """Retry path after a (real or virtual) collision.

    Returns the number of packets discarded (non-zero only when the retry
    limit was reached).
    """
    st.retries += 1
    if protocol is Protocol.ECA_DR and nac_est is not None:
        biv = choose_biv(st.stage, st.params, nac_est, mac.max_stage)
    else:
        biv = 1
    st.stage = min(st.stage + biv, mac.max_stage)

    if st.retries < mac.retry_limit:
        st.backoff = _draw(rng, st.stage, st.cw_min, ledger)
        return 0

    # Retry limit hit: discard the head-of-line burst (2^k at the escalated
    # stage, bounded by what the queue actually holds) and reset.
    n_discard = min(1 << st.stage, len(st.queue)) if protocol is not Protocol.CSMA_CA else 1
    n_discard = min(n_discard, len(st.queue))
    st.queue.pop_head(n_discard)
    st.retry_drops += n_discard
    st.retries = 0
    st.stage = 0
    if protocol is Protocol.ECA_DR and nac_est is not None:
        st.stage = choose_stage(st.params, nac_est, mac.max_stage)
    if len(st.queue) == 0:
        st.backoff = None
    else:
        st.backoff = _draw(rng, st.stage, st.cw_min, ledger)
    return n_discard


def on_new_packet_empty_queue(
    st: AcState,
    protocol: Protocol,
    mac: MacConfig,
    rng: random.Random,
    nac_est: NacEstimate | None = None,
    ledger: ReservationLedger | None = None,
) -> None:
    """A packet just arrived into an empty queue: take a fresh claim."""
    st.stage = 0
    if protocol is Protocol.ECA_DR and nac_est is not None:
        st.stage = choose_stage(st.params, nac_est, mac.max_stage)
    st.backoff = _draw(rng, st.stage, st.cw_min, ledger)
