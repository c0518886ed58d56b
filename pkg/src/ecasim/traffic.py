"""Per-AC packet sources and the bounded MAC queue.

Four source families: constant-bit-rate (periodic by default, optionally
Poisson), iLBC-style voice with exponential talk/silence spurts, frame-based
VBR video with lognormal frame sizes fragmented to MPDU-sized packets, and a
replayed video trace file. Every source owns an independent RNG stream, so
sources can be advanced in any order without perturbing each other.

CBR sources expose closed-form arrival counting so the engine can account
for queue-overflow drops in bulk without materialising packet records that
would be dropped anyway.
"""

from __future__ import annotations

import itertools
import math
import random
from collections import deque
from typing import Iterator, NamedTuple

from .config import (
    AC,
    CbrSettings,
    SourceSettings,
    TraceSettings,
    VideoSettings,
    VoiceSettings,
)

__all__ = ["PacketRecord", "BoundedQueue", "ArrivalSource", "make_source", "next_arrivals"]


class PacketRecord(NamedTuple):
    ac: int
    arrival_time_us: int
    payload_bytes: int
    seqno: int


class BoundedQueue:
    """FIFO MAC queue with a hard capacity; overflow is a counted drop."""

    __slots__ = ("capacity", "_items")

    def __init__(self, capacity: int):
        self.capacity = capacity
        self._items: deque[PacketRecord] = deque()

    def __len__(self) -> int:
        return len(self._items)

    def enqueue(self, pkt: PacketRecord) -> bool:
        if len(self._items) >= self.capacity:
            return False
        self._items.append(pkt)
        return True

    def space(self) -> int:
        return self.capacity - len(self._items)

    def extend(self, pkts: list[PacketRecord]) -> None:
        self._items.extend(pkts)

    def head_payloads(self, n: int) -> tuple[int, ...]:
        return tuple(p.payload_bytes for p in itertools.islice(self._items, n))

    def pop_head(self, n: int) -> list[PacketRecord]:
        pop = self._items.popleft
        return [pop() for _ in range(n)]

    def snapshot(self) -> list[PacketRecord]:
        return list(self._items)


class ArrivalSource:
    """Arrival stream interface used by the engine.

    count_until/take/discard operate on the pending prefix in time order;
    the engine either materialises pending packets into the queue or, when
    the queue is full, discards them in bulk as counted drops.
    """

    ac: int

    @property
    def next_time(self) -> int:
        raise NotImplementedError

    def count_until(self, t: int) -> int:
        raise NotImplementedError

    def take(self, k: int) -> list[PacketRecord]:
        raise NotImplementedError

    def discard(self, k: int) -> None:
        raise NotImplementedError


class GenSource(ArrivalSource):
    """Buffered source over an infinite (time, payload) generator."""

    __slots__ = ("ac", "_buf", "_gen", "_next_seq")

    def __init__(self, ac: int, gen: Iterator[tuple[int, int]]):
        self.ac = ac
        self._gen = gen
        self._buf: deque[PacketRecord] = deque()
        self._next_seq = 0
        self._fill(1)

    def _fill(self, n: int) -> None:
        while len(self._buf) < n:
            t, size = next(self._gen)
            self._buf.append(PacketRecord(self.ac, t, size, self._next_seq))
            self._next_seq += 1

    @property
    def next_time(self) -> int:
        return self._buf[0].arrival_time_us

    def count_until(self, t: int) -> int:
        buf = self._buf
        while buf[-1].arrival_time_us <= t:
            at, size = next(self._gen)
            buf.append(PacketRecord(self.ac, at, size, self._next_seq))
            self._next_seq += 1
        n = 0
        for rec in buf:
            if rec.arrival_time_us > t:
                break
            n += 1
        return n

    def take(self, k: int) -> list[PacketRecord]:
        self._fill(k + 1)
        pop = self._buf.popleft
        return [pop() for _ in range(k)]

    def discard(self, k: int) -> None:
        self._fill(k + 1)
        pop = self._buf.popleft
        for _ in range(k):
            pop()


class CbrSource(ArrivalSource):
    """Periodic CBR stream; arrival i lands at phase + floor(i*bits*1e6/rate)."""

    __slots__ = ("ac", "_phase", "_num", "_rate", "_payload", "_next_idx")

    def __init__(self, ac: int, settings: CbrSettings, rng: random.Random):
        self.ac = ac
        self._payload = settings.payload_bytes
        self._num = settings.payload_bytes * 8 * 1_000_000  # packet bits scaled to us
        self._rate = settings.rate_bps
        period = self._num // self._rate
        self._phase = rng.randrange(max(1, period))
        self._next_idx = 0

    def _time_of(self, i: int) -> int:
        return self._phase + i * self._num // self._rate

    @property
    def next_time(self) -> int:
        return self._time_of(self._next_idx)

    def count_until(self, t: int) -> int:
        if t < self._phase:
            return 0
        total = ((t - self._phase + 1) * self._rate + self._num - 1) // self._num
        return total - self._next_idx

    def take(self, k: int) -> list[PacketRecord]:
        base = self._next_idx
        self._next_idx += k
        ac = self.ac
        payload = self._payload
        return [
            PacketRecord(ac, self._time_of(base + j), payload, base + j)
            for j in range(k)
        ]

    def discard(self, k: int) -> None:
        self._next_idx += k


def _poisson_cbr_gen(settings: CbrSettings, rng: random.Random) -> Iterator[tuple[int, int]]:
    mean_gap = settings.payload_bytes * 8 * 1_000_000 / settings.rate_bps
    t = 0.0
    while True:
        t += rng.expovariate(1.0 / mean_gap)
        yield round(t), settings.payload_bytes


def _voice_gen(settings: VoiceSettings, rng: random.Random) -> Iterator[tuple[int, int]]:
    spurt_start = 0
    while True:
        if settings.always_on:
            t = spurt_start
            while True:
                yield t, settings.payload_bytes
                t += settings.interval_us
        talk = max(1, round(rng.expovariate(1.0 / settings.talk_mean_us)))
        t = spurt_start
        while t < spurt_start + talk:
            yield t, settings.payload_bytes
            t += settings.interval_us
        silence = max(1, round(rng.expovariate(1.0 / settings.silence_mean_us)))
        spurt_start = spurt_start + talk + silence


def _fragment(size: int, fragment_bytes: int) -> list[int]:
    full, rem = divmod(size, fragment_bytes)
    sizes = [fragment_bytes] * full
    if rem:
        sizes.append(rem)
    return sizes


def _video_gen(settings: VideoSettings, rng: random.Random) -> Iterator[tuple[int, int]]:
    mean_bytes = settings.mean_rate_bps / settings.fps / 8
    cap = round(settings.max_frame_factor * mean_bytes)
    mu = math.log(mean_bytes) - settings.sigma ** 2 / 2 if settings.sigma > 0 else 0.0
    phase = rng.randrange(max(1, 1_000_000 // settings.fps))
    i = 0
    while True:
        t = phase + i * 1_000_000 // settings.fps
        if settings.sigma > 0:
            size = rng.lognormvariate(mu, settings.sigma)
        else:
            size = mean_bytes
        for frag in _fragment(max(1, min(round(size), cap)), settings.fragment_bytes):
            yield t, frag
        i += 1


def _trace_gen(settings: TraceSettings) -> Iterator[tuple[int, int]]:
    with open(settings.path, "r", encoding="utf-8") as fh:
        sizes = [int(line) for line in fh if line.strip()]
    if not sizes:
        raise ValueError(f"video trace {settings.path} is empty")
    i = 0
    while True:
        t = i * 1_000_000 // settings.fps
        for frag in _fragment(sizes[i % len(sizes)], settings.fragment_bytes):
            yield t, frag
        i += 1


def make_source(settings: SourceSettings | None, ac: int, seed: int) -> ArrivalSource | None:
    """Build the arrival source for one (station, AC); None when the AC is off."""
    if settings is None:
        return None
    rng = random.Random(seed)
    if isinstance(settings, CbrSettings):
        if settings.poisson:
            return GenSource(ac, _poisson_cbr_gen(settings, rng))
        return CbrSource(ac, settings, rng)
    if isinstance(settings, VoiceSettings):
        return GenSource(ac, _voice_gen(settings, rng))
    if isinstance(settings, VideoSettings):
        return GenSource(ac, _video_gen(settings, rng))
    if isinstance(settings, TraceSettings):
        return GenSource(ac, _trace_gen(settings))
    raise TypeError(f"unknown source settings {settings!r}")


def next_arrivals(
    settings: SourceSettings | None,
    ac: AC,
    now_us: int,
    horizon_us: int,
    seed: int,
) -> list[PacketRecord]:
    """All arrivals of a fresh seeded source falling in [now, now + horizon)."""
    if horizon_us <= 0 or settings is None:
        return []
    src = make_source(settings, int(ac), seed)
    assert src is not None
    if now_us > 0:
        src.discard(src.count_until(now_us - 1))
    return src.take(src.count_until(now_us + horizon_us - 1))
