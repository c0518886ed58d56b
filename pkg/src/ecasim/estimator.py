"""Channel-activity measurement and active-contender estimation.

A station classifies every slot event it observes (its own transmissions
included) as idle, busy (a success) or collision, and keeps the activity
ratio P = (busy + collision) / total over a sliding window. Inverting the
slotted-contention relation P = 1 - (1 - tau)^(n-1), with tau approximated
from the station's own mean contention window as tau = 2/(mean_cw + 1),
gives a raw contender count; an exponential moving average smooths it.

The smoothed estimate drives contention-window selection: the chosen stage
is the smallest k whose window 2^k * CW_min exceeds nac^2 * P. Backoff for
delay-sensitive categories (VO, VI) is one stage lower (half the window) to
honour their deadlines.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Callable

from .config import AcParams, EstimatorConfig

__all__ = [
    "IDLE", "BUSY", "COLLISION",
    "PccWindow", "NacEstimate", "NacEstimator",
    "invert_pcc", "choose_stage", "choose_biv",
]

# Slot outcome kinds as observed on the channel.
IDLE = 0
BUSY = 1        # a successful transmission occupied the channel
COLLISION = 2


class PccWindow:
    """Sliding-window slot classification counters.

    Stores (kind, count) runs so a batch of identical slots costs O(1);
    trimming keeps exactly the last `window` slots.
    """

    __slots__ = ("window", "_runs", "total_slots", "busy_slots", "collision_slots")

    def __init__(self, window: int):
        self.window = window
        self._runs: deque[list[int]] = deque()
        self.total_slots = 0
        self.busy_slots = 0
        self.collision_slots = 0

    def observe(self, kind: int, n: int = 1) -> None:
        if n <= 0:
            return
        runs = self._runs
        if runs and runs[-1][0] == kind:
            runs[-1][1] += n
        else:
            runs.append([kind, n])
        self.total_slots += n
        if kind == BUSY:
            self.busy_slots += n
        elif kind == COLLISION:
            self.collision_slots += n
        excess = self.total_slots - self.window
        while excess > 0:
            head = runs[0]
            drop = head[1] if head[1] <= excess else excess
            head[1] -= drop
            if head[1] == 0:
                runs.popleft()
            self.total_slots -= drop
            if head[0] == BUSY:
                self.busy_slots -= drop
            elif head[0] == COLLISION:
                self.collision_slots -= drop
            excess -= drop

    @property
    def pcc(self) -> float:
        if self.total_slots == 0:
            return 0.0
        return (self.busy_slots + self.collision_slots) / self.total_slots


@dataclass(frozen=True)
class NacEstimate:
    nac: float
    pcc: float
    updated_at: int  # slot index of the last smoothing step


def invert_pcc(pcc: float, mean_cw: float, pcc_cap: float = 0.999) -> float:
    """Raw contender count from an activity ratio and a mean contention window."""
    if pcc <= 0.0:
        return 1.0
    pcc = min(pcc, pcc_cap)
    tau = 2.0 / (mean_cw + 1.0)
    return 1.0 + math.log(1.0 - pcc) / math.log(1.0 - tau)


class NacEstimator:
    """Windowed P measurement plus EMA-smoothed contender estimation.

    mean_cw_fn supplies the station's current mean contention window (over
    its backlogged ACs) at each smoothing step. Before the warm-up slot
    count is reached the estimate stays at its prior of 1, so early ECA-DR
    behaviour matches plain ECA.
    """

    __slots__ = ("cfg", "counters", "nac", "_slots_seen", "_since_update",
                 "_updated_at", "mean_cw_fn", "nac_cap")

    def __init__(self, cfg: EstimatorConfig, mean_cw_fn: Callable[[], float],
                 nac_cap: float):
        self.cfg = cfg
        self.counters = PccWindow(cfg.window_slots)
        self.nac = 1.0
        self._slots_seen = 0
        self._since_update = 0
        self._updated_at = 0
        self.mean_cw_fn = mean_cw_fn
        self.nac_cap = nac_cap

    def observe(self, kind: int, n: int = 1) -> None:
        """Feed n identical slot observations, smoothing at every boundary."""
        step = self.cfg.update_every_slots
        while n > 0:
            chunk = step - self._since_update
            if chunk > n:
                chunk = n
            self.counters.observe(kind, chunk)
            self._slots_seen += chunk
            self._since_update += chunk
            n -= chunk
            if self._since_update == step:
                self._since_update = 0
                self._update()

    def _update(self) -> None:
        if self._slots_seen < self.counters.window / 10:
            return  # warm-up: hold the prior
        raw = invert_pcc(self.counters.pcc, self.mean_cw_fn(), self.cfg.pcc_cap)
        if raw > self.nac_cap:
            raw = self.nac_cap
        alpha = self.cfg.ema_alpha
        nac = (1.0 - alpha) * self.nac + alpha * raw
        self.nac = nac if nac > 1.0 else 1.0
        self._updated_at = self._slots_seen

    @property
    def estimate(self) -> NacEstimate:
        return NacEstimate(nac=self.nac, pcc=self.counters.pcc,
                           updated_at=self._updated_at)


def estimate_nac(counters: PccWindow, mean_cw: float, prior: float = 1.0,
                 pcc_cap: float = 0.999) -> NacEstimate:
    """One-shot estimate from raw counters (warm-up returns the prior)."""
    if counters.total_slots < counters.window / 10:
        return NacEstimate(nac=prior, pcc=counters.pcc, updated_at=0)
    nac = max(1.0, invert_pcc(counters.pcc, mean_cw, pcc_cap))
    return NacEstimate(nac=nac, pcc=counters.pcc, updated_at=counters.total_slots)


def choose_stage(ac: AcParams, est: NacEstimate, max_stage: int = 5) -> int:
    """Smallest stage whose window beats nac^2 * P; halved for VO/VI."""
    threshold = est.nac * est.nac * est.pcc
    stage = max_stage
    cw = ac.cw_min
    for k in range(max_stage + 1):
        if (cw << k) > threshold:
            stage = k
            break
    if ac.delay_sensitive and stage > 0:
        stage -= 1
    return stage


def choose_biv(current_stage: int, ac: AcParams, est: NacEstimate,
               max_stage: int = 5) -> int:
    """Stage increase after a collision: straight to the chosen stage, but
    never less than the classic +1."""
    return max(1, choose_stage(ac, est, max_stage) - current_stage)
