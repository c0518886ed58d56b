"""Slotted discrete-event core for a single-hop collision domain.

Time advances slot by slot while the channel is idle and atomically across
busy periods. Per slot event the engine delivers due arrivals, collects the
transmission attempts of every station whose backoff reached zero for some
backlogged AC, resolves intra-station virtual collisions by AC priority,
classifies the slot (idle / success / collision), notifies every station,
and finally advances the clock by the outcome duration. Backoff counters
and reservation ledgers count down on idle slots only; busy periods freeze
them and consume no backoff.

Two exact shortcuts keep pure-Python runs fast without changing per-slot
semantics: consecutive idle slots are advanced in one batch (bounded so no
backoff expiry, arrival or estimator boundary is skipped), and arrivals
into a full queue are settled in bulk as counted drops when that queue next
drains (its occupancy cannot change in between).
"""

from __future__ import annotations

import hashlib
import heapq
import random
from typing import Callable, NamedTuple

from . import protocols
from .airtime import t_blockack, t_frame_for_payloads
from .config import AC, Protocol, ScenarioConfig
from .estimator import BUSY, COLLISION, IDLE, NacEstimate, PccWindow, invert_pcc
from .reservation import EMPTY_QUEUE_SENTINEL, ReservationLedger, compute_nt, draw_avoiding
from .traffic import ArrivalSource, PacketRecord, make_source

__all__ = ["TxAttempt", "SlotOutcome", "Station", "Simulation", "run",
           "resolve_virtual_collision", "derive_seed"]

_UNREACHABLE = 1 << 62

# Queue-empty events are only meaningful for saturation audits after the
# initial fill; see the traffic module's saturation invariant.
EMPTY_EVENT_WARMUP_US = 1_000_000


class TxAttempt(NamedTuple):
    station_id: int
    ac: int
    n_frames: int
    frame_payloads: tuple[int, ...]
    advertised_stage: int
    more_data: bool


class SlotOutcome(NamedTuple):
    kind: str  # "idle" | "success" | "collision"
    attempts: tuple[TxAttempt, ...]
    duration_us: int


def derive_seed(*parts) -> int:
    """Stable cross-platform child seed from labelled parts."""
    digest = hashlib.sha256("/".join(map(str, parts)).encode()).digest()
    return int.from_bytes(digest[:8], "big")


def resolve_virtual_collision(ready: list[protocols.AcState]) -> tuple[protocols.AcState, list[protocols.AcState]]:
    """Highest-priority AC transmits; the rest take the collision path."""
    if not ready:
        raise ValueError("no ready access categories")
    winner = max(ready, key=lambda st: st.params.ac)
    return winner, [st for st in ready if st is not winner]


class _SmoothedNac:
    """Per-station EMA over the shared channel observation window."""

    __slots__ = ("nac", "pcc", "updated_at", "alpha", "cap")

    def __init__(self, alpha: float, cap: float):
        self.nac = 1.0
        self.pcc = 0.0
        self.updated_at = 0
        self.alpha = alpha
        self.cap = cap

    def update(self, pcc: float, mean_cw: float, at_slot: int, pcc_cap: float) -> None:
        raw = invert_pcc(pcc, mean_cw, pcc_cap)
        if raw > self.cap:
            raw = self.cap
        nac = self.nac + self.alpha * (raw - self.nac)
        self.nac = nac if nac > 1.0 else 1.0
        self.pcc = pcc
        self.updated_at = at_slot

    @property
    def estimate(self) -> NacEstimate:
        return NacEstimate(nac=self.nac, pcc=self.pcc, updated_at=self.updated_at)


class Station:
    __slots__ = ("sid", "acs", "sources", "rngs", "ledger", "nac")

    def __init__(self, sid: int, scenario: ScenarioConfig, seed: int):
        self.sid = sid
        mac = scenario.mac
        self.acs = [protocols.AcState(scenario.ac_params[i], mac.queue_capacity)
                    for i in range(4)]
        self.sources: list[ArrivalSource | None] = [
            make_source(scenario.traffic[i], i, derive_seed(seed, "source", sid, i))
            for i in range(4)
        ]
        self.rngs = [random.Random(derive_seed(seed, "backoff", sid, i)) for i in range(4)]
        if mac.protocol is Protocol.ECA_DR:
            self.ledger: ReservationLedger | None = ReservationLedger()
            self.nac: _SmoothedNac | None = _SmoothedNac(
                scenario.estimator.ema_alpha,
                scenario.estimator.nac_cap_factor * scenario.n_stations)
        else:
            self.ledger = None
            self.nac = None

    def mean_cw(self) -> float:
        """Mean current contention window over backlogged ACs (all ACs if none)."""
        total = 0
        n = 0
        for st in self.acs:
            if st.backoff is not None:
                total += st.cw_min << st.stage
                n += 1
        if n == 0:
            for st in self.acs:
                total += st.cw_min << st.stage
            n = 4
        return total / n


class Simulation:
    """One seeded run; strictly single-threaded and deterministic."""

    def __init__(
        self,
        scenario: ScenarioConfig,
        seed: int,
        trace: Callable[[str], None] | None = None,
        trace_level: int = 0,
        audit_hook: Callable[["Simulation", SlotOutcome], None] | None = None,
        max_idle_batch: int | None = None,
    ):
        self.scenario = scenario
        self.seed = seed
        self.phy = scenario.phy
        self.mac = scenario.mac
        self.protocol = scenario.mac.protocol
        self.now = 0
        self.idle_slots = 0
        self.success_slots = 0
        self.collision_slots = 0
        self.busy_time_us = 0
        self.idle_clock = 0  # idle slots elapsed; shared by all stations
        self.trace = trace
        self.trace_level = trace_level
        self.audit_hook = audit_hook
        self.max_idle_batch = max_idle_batch or _UNREACHABLE
        self.stations = [Station(sid, scenario, seed) for sid in range(scenario.n_stations)]

        self._t_blockack = t_blockack(self.phy)
        self._frame_cache: dict[tuple[int, ...], int] = {}
        self._dr = self.protocol is Protocol.ECA_DR
        est = scenario.estimator
        self._window = PccWindow(est.window_slots) if self._dr else None
        self._warmup_slots = est.window_slots / 10
        self._update_every = est.update_every_slots
        self._since_update = 0
        self._slots_seen = 0
        self._pcc_cap = est.pcc_cap
        self._weighted = self.mac.pcc_duration_weighted

        # (next arrival time, sid, ac) for every live source; sources facing
        # a full queue leave the heap until that queue next drains.
        self._arrival_heap: list[tuple[int, int, int]] = []
        self._deferred: set[tuple[int, int]] = set()
        for sta in self.stations:
            for i, src in enumerate(sta.sources):
                if src is not None:
                    heapq.heappush(self._arrival_heap, (src.next_time, sta.sid, i))

    # -- helpers ---------------------------------------------------------

    def _frame_time(self, payloads: tuple[int, ...]) -> int:
        cached = self._frame_cache.get(payloads)
        if cached is None:
            cached = t_frame_for_payloads(payloads, self.phy)
            self._frame_cache[payloads] = cached
        return cached

    def _observe(self, kind: int, n: int) -> None:
        """Feed the shared channel window, smoothing every station's estimate
        at each estimator boundary crossed (exact per-slot cadence)."""
        window = self._window
        if window is None:
            self._slots_seen += n
            return
        step = self._update_every
        while n > 0:
            chunk = step - self._since_update
            if chunk > n:
                chunk = n
            window.observe(kind, chunk)
            self._slots_seen += chunk
            self._since_update += chunk
            n -= chunk
            if self._since_update == step:
                self._since_update = 0
                if self._slots_seen >= self._warmup_slots:
                    pcc = window.pcc
                    at = self._slots_seen
                    cap = self._pcc_cap
                    for sta in self.stations:
                        sta.nac.update(pcc, sta.mean_cw(), at, cap)
                    if self.trace is not None and self.trace_level >= 2:
                        self.trace(f"{self.now} est pcc={pcc:.4f} "
                                   + " ".join(f"sta{sta.sid}={sta.nac.nac:.2f}"
                                              for sta in self.stations))

    def _deliver_source(self, sta: Station, ac_idx: int, now: int) -> None:
        """Move one source's due arrivals into its queue (or drop-count them)."""
        src = sta.sources[ac_idx]
        st = sta.acs[ac_idx]
        m = src.count_until(now)
        if m > 0:
            space = st.queue.space()
            if m <= space:
                st.queue.extend(src.take(m))
                st.arrivals += m
            else:
                if space > 0:
                    st.queue.extend(src.take(space))
                src.discard(m - space)
                st.arrivals += m
                st.queue_drops += m - space
                if st.queue.space() == 0:
                    # Full: every arrival is a drop until this queue drains;
                    # settle them in bulk at the next drain.
                    self._deferred.add((sta.sid, ac_idx))
                    if st.backoff is None:
                        self._new_claim(sta, st, ac_idx)
                    return
            if st.backoff is None:
                self._new_claim(sta, st, ac_idx)
        heapq.heappush(self._arrival_heap, (src.next_time, sta.sid, ac_idx))

    def _settle_deferred(self, sta: Station, ac_idx: int) -> None:
        """Count the bulk drops of a source parked behind a full queue."""
        key = (sta.sid, ac_idx)
        if key not in self._deferred:
            return
        self._deferred.discard(key)
        src = sta.sources[ac_idx]
        st = sta.acs[ac_idx]
        m = src.count_until(self.now)
        if m > 0:
            src.discard(m)
            st.arrivals += m
            st.queue_drops += m
        heapq.heappush(self._arrival_heap, (src.next_time, sta.sid, ac_idx))

    def _new_claim(self, sta: Station, st: protocols.AcState, ac_idx: int) -> None:
        est = sta.nac.estimate if sta.nac is not None else None
        protocols.on_new_packet_empty_queue(
            st, self.protocol, self.mac, sta.rngs[ac_idx], est, sta.ledger)

    def _deliver(self, now: int) -> None:
        heap = self._arrival_heap
        while heap and heap[0][0] <= now:
            _, sid, ac_idx = heapq.heappop(heap)
            self._deliver_source(self.stations[sid], ac_idx, now)

    def preload(self, sid: int, ac: AC, n_packets: int, payload_bytes: int | None = None) -> None:
        """Stuff a queue with immediate arrivals (test scaffolding)."""
        payload = payload_bytes if payload_bytes is not None else self.mac.payload_bytes
        sta = self.stations[sid]
        st = sta.acs[int(ac)]
        base = st.arrivals
        for j in range(n_packets):
            if st.queue.enqueue(PacketRecord(int(ac), self.now, payload, base + j)):
                st.arrivals += 1
            else:
                st.arrivals += 1
                st.queue_drops += 1
        if st.backoff is None and len(st.queue) > 0:
            self._new_claim(sta, st, int(ac))

    # -- slot processing --------------------------------------------------

    def step(self) -> SlotOutcome:
        """Process one slot event and return its outcome."""
        now = self.now
        self._deliver(now)

        attempts: list[TxAttempt] = []
        attempt_states: list[protocols.AcState] = []
        virtual_losers: list[tuple[Station, protocols.AcState]] = []
        min_backoff = _UNREACHABLE
        single_frame = self.protocol is Protocol.CSMA_CA
        for sta in self.stations:
            ready: protocols.AcState | None = None
            for st in sta.acs:
                b = st.backoff
                if b is None:
                    continue
                if b == 0:
                    if ready is not None:
                        # intra-station conflict: iteration runs BK->VO, so
                        # the later AC outranks the current winner
                        ready.tx_attempts += 1
                        virtual_losers.append((sta, ready))
                    ready = st
                elif b < min_backoff:
                    min_backoff = b
            if ready is not None:
                qlen = len(ready.queue)
                n = 1 if single_frame else min(1 << ready.stage, qlen)
                advertised = EMPTY_QUEUE_SENTINEL if n == qlen else ready.stage
                attempts.append(TxAttempt(
                    station_id=sta.sid,
                    ac=int(ready.params.ac),
                    n_frames=n,
                    frame_payloads=ready.queue.head_payloads(n),
                    advertised_stage=advertised,
                    more_data=advertised != EMPTY_QUEUE_SENTINEL,
                ))
                attempt_states.append(ready)
                ready.tx_attempts += 1

        if not attempts:
            outcome = self._idle_step(min_backoff)
        elif len(attempts) == 1:
            outcome = self._success_step(attempts[0], attempt_states[0], virtual_losers)
        else:
            outcome = self._collision_step(attempts, attempt_states, virtual_losers)

        if self.audit_hook is not None:
            self.audit_hook(self, outcome)
        return outcome

    def _idle_step(self, min_backoff: int) -> SlotOutcome:
        now = self.now
        slot = self.phy.slot_us
        batch = min_backoff
        heap = self._arrival_heap
        if heap:
            until_arrival = -(-(heap[0][0] - now) // slot)
            if until_arrival < batch:
                batch = until_arrival
        remaining = -(-(self.scenario.duration_us - now) // slot)
        if remaining < batch:
            batch = remaining
        if batch > self.max_idle_batch:
            batch = self.max_idle_batch
        if batch < 1:
            batch = 1

        for sta in self.stations:
            for st in sta.acs:
                if st.backoff is not None and st.backoff > 0:
                    st.backoff -= batch
            if sta.ledger is not None:
                sta.ledger.tick(batch)
        self._observe(IDLE, batch)
        self.idle_slots += batch
        self.idle_clock += batch
        self.now = now + batch * slot
        if self.trace is not None and self.trace_level >= 2:
            self.trace(f"{now} idle n={batch}")
        return SlotOutcome("idle", (), batch * slot)

    def _finish_ac_event(self, sta: Station, st: protocols.AcState) -> None:
        """Post-handler bookkeeping shared by success and collision paths."""
        if len(st.queue) == 0 and self.now > EMPTY_EVENT_WARMUP_US:
            st.empty_events += 1

    def _collide_ac(self, sta: Station, st: protocols.AcState) -> None:
        st.collisions += 1
        est = sta.nac.estimate if sta.nac is not None else None
        ac_idx = int(st.params.ac)
        dropped = protocols.on_collision(
            st, self.protocol, self.mac, sta.rngs[ac_idx], est, sta.ledger)
        if dropped:
            self._settle_deferred(sta, ac_idx)
        self._finish_ac_event(sta, st)

    def _success_step(self, attempt: TxAttempt, st: protocols.AcState,
                      virtual_losers: list[tuple[Station, protocols.AcState]]) -> SlotOutcome:
        now = self.now
        phy = self.phy
        sta = self.stations[attempt.station_id]
        frame_us = self._frame_time(attempt.frame_payloads)
        exchange_end = now + frame_us + phy.sifs_us + self._t_blockack
        duration = frame_us + phy.sifs_us + self._t_blockack + phy.difs_us + phy.slot_us

        delivered = st.queue.pop_head(attempt.n_frames)
        self._settle_deferred(sta, attempt.ac)
        bits = 0
        delays = st.delays_us
        for pkt in delivered:
            bits += pkt.payload_bytes * 8
            delays.append(exchange_end - pkt.arrival_time_us)
        st.delivered_packets += attempt.n_frames
        st.delivered_bits += bits
        st.successes += 1
        if st.last_success_us >= 0:
            st.gap_sum_us += exchange_end - st.last_success_us
            st.gap_count += 1
        st.last_success_us = exchange_end

        protocols.on_success(st, self.protocol, self.mac, sta.rngs[attempt.ac])
        self._finish_ac_event(sta, st)
        for loser_sta, loser_st in virtual_losers:
            self._collide_ac(loser_sta, loser_st)

        if self._dr:
            nt = compute_nt(attempt.advertised_stage,
                            self.scenario.ac_params[attempt.ac].cw_min)
            if nt is not None:
                sid = attempt.station_id
                for other in self.stations:
                    if other.sid == sid:
                        continue
                    ledger = other.ledger
                    ledger.add(nt)
                    for ost in other.acs:
                        if ost.backoff == nt:
                            ost.backoff = draw_avoiding(
                                other.rngs[int(ost.params.ac)], ost.stage,
                                ost.cw_min, ledger)

        weight = -(-duration // phy.slot_us) if self._weighted else 1
        self._observe(BUSY, weight)
        self.success_slots += 1
        self.busy_time_us += duration
        self.now = now + duration
        if self.trace is not None and self.trace_level >= 1:
            self.trace(f"{now} success sta={attempt.station_id} ac={AC(attempt.ac).name} "
                       f"stage={attempt.advertised_stage} frames={attempt.n_frames} "
                       f"b={st.backoff} dur={duration}")
        return SlotOutcome("success", (attempt,), duration)

    def _collision_step(self, attempts: list[TxAttempt],
                        states: list[protocols.AcState],
                        virtual_losers: list[tuple[Station, protocols.AcState]]) -> SlotOutcome:
        now = self.now
        phy = self.phy
        longest = max(self._frame_time(a.frame_payloads) for a in attempts)
        duration = longest + phy.difs_us + phy.slot_us

        for attempt, st in zip(attempts, states):
            self._collide_ac(self.stations[attempt.station_id], st)
        for loser_sta, loser_st in virtual_losers:
            self._collide_ac(loser_sta, loser_st)

        weight = -(-duration // phy.slot_us) if self._weighted else 1
        self._observe(COLLISION, weight)
        self.collision_slots += 1
        self.busy_time_us += duration
        self.now = now + duration
        if self.trace is not None and self.trace_level >= 1:
            involved = " ".join(
                f"sta={a.station_id},ac={AC(a.ac).name},stage={a.advertised_stage},b={st.backoff}"
                for a, st in zip(attempts, states))
            self.trace(f"{now} collision n={len(attempts)} {involved} dur={duration}")
        return SlotOutcome("collision", tuple(attempts), duration)

    # -- run & invariants --------------------------------------------------

    def run(self) -> None:
        end = self.scenario.duration_us
        while self.now < end:
            self.step()
        self.finalize()

    def finalize(self) -> None:
        for sta in self.stations:
            for i, src in enumerate(sta.sources):
                if src is not None:
                    self._settle_deferred(sta, i)
        self.check_conservation()

    def check_conservation(self) -> None:
        """Arrivals must equal deliveries + drops + residual, per (station, AC)."""
        for sta in self.stations:
            for st in sta.acs:
                residual = len(st.queue)
                balance = st.delivered_packets + st.queue_drops + st.retry_drops + residual
                if st.arrivals != balance:
                    raise AssertionError(
                        f"conservation violated at station {sta.sid} "
                        f"{st.params.ac.name}: arrivals={st.arrivals} "
                        f"delivered={st.delivered_packets} queue_drops={st.queue_drops} "
                        f"retry_drops={st.retry_drops} residual={residual}")


def run(scenario: ScenarioConfig, seed: int, **kwargs):
    """Execute one seeded run and return its metrics."""
    from .metrics import collect_run_metrics

    sim = Simulation(scenario, seed, **kwargs)
    sim.run()
    return collect_run_metrics(sim)
