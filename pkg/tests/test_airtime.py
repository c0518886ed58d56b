import random

import pytest

from ecasim.airtime import (
    AirtimeBreakdown,
    t_blockack,
    t_collision,
    t_frame,
    t_frame_for_payloads,
    t_success,
    t_success_for_payloads,
)
from ecasim.config import PhyConfig, default_phy_config
from ecasim.engine import TxAttempt

PHY = default_phy_config()


def attempt(payloads):
    return TxAttempt(station_id=0, ac=1, n_frames=len(payloads),
                     frame_payloads=tuple(payloads), advertised_stage=0, more_data=True)


# Hand-computed oracle values with the defaults (260 bits/symbol, T_PHY 32,
# T_sym 4): 1 frame = 16 + (32+288+11760) + 6 = 12102 bits -> 47 symbols.
def test_frame_duration_single_aggregate():
    assert t_frame(1, PHY) == 32 + 47 * 4 == 220


def test_frame_duration_two_aggregates():
    # 16 + 2*12080 + 6 = 24182 bits -> 94 symbols
    assert t_frame(2, PHY) == 32 + 94 * 4 == 408


def test_frame_duration_zero_payload():
    # 16 + 320 + 6 = 342 bits -> 2 symbols
    assert t_frame(1, PHY, payload_bytes=0) == 40


def test_frame_rejects_empty_aggregate():
    with pytest.raises(ValueError):
        t_frame(0, PHY)
    with pytest.raises(ValueError):
        t_frame_for_payloads((), PHY)


def test_blockack_duration():
    # 16 + 256 + 6 = 278 bits -> 2 symbols of 260
    assert t_blockack(PHY) == 40
    exact = PhyConfig(bits_per_ofdm_symbol=278)
    assert t_blockack(exact) == 32 + 1 * 4
    unit = PhyConfig(bits_per_ofdm_symbol=1)
    assert t_blockack(unit) == 32 + 278 * 4


def test_success_breakdown_values():
    one = t_success(1, PHY)
    assert one == AirtimeBreakdown(t_frame_us=220, t_blockack_us=40,
                                   t_success_us=307, n_symbols=47)
    two = t_success(2, PHY)
    assert two.t_success_us == 408 + 10 + 40 + 28 + 9 == 495
    assert two.n_symbols == 94


def test_success_decomposition_is_exact():
    rng = random.Random(7)
    for _ in range(50):
        n = rng.randint(1, 32)
        payload = rng.randint(0, 4000)
        bd = t_success(n, PHY, payload)
        assert bd.t_success_us == (bd.t_frame_us + PHY.sifs_us + bd.t_blockack_us
                                   + PHY.difs_us + PHY.slot_us)
        assert bd.t_frame_us == t_frame(n, PHY, payload)


def test_success_for_mixed_payloads_matches_uniform_case():
    bd = t_success_for_payloads((1470, 1470, 1470), PHY)
    assert bd == t_success(3, PHY)
    voice = t_success_for_payloads((38,), PHY)
    assert voice.t_frame_us == t_frame(1, PHY, 38)


def test_collision_duration_two_single_frames():
    dur = t_collision([attempt([1470]), attempt([1470])], PHY)
    assert dur == 220 + 28 + 9 == 257


def test_collision_uses_longest_frame():
    four = attempt([1470] * 4)
    dur = t_collision([attempt([1470]), four], PHY)
    assert dur == t_frame(4, PHY) + PHY.difs_us + PHY.slot_us


def test_collision_rejects_single_attempt():
    with pytest.raises(ValueError):
        t_collision([attempt([1470])], PHY)


def test_frame_time_strictly_increases_with_frame_count():
    prev = 0
    for n in range(1, 40):
        cur = t_frame(n, PHY)
        assert cur > prev
        prev = cur


def test_frame_time_non_decreasing_with_payload():
    rng = random.Random(11)
    for _ in range(30):
        p = rng.randint(0, 3000)
        assert t_frame(1, PHY, p + 1) >= t_frame(1, PHY, p)
        # one full symbol of extra payload always crosses a boundary
        assert t_frame(1, PHY, p + PHY.bits_per_ofdm_symbol // 8 + 1) > t_frame(1, PHY, p)


def test_frame_time_is_symbol_quantised():
    rng = random.Random(13)
    for _ in range(50):
        n = rng.randint(1, 32)
        p = rng.randint(0, 3000)
        assert (t_frame(n, PHY, p) - PHY.t_phy_us) % PHY.t_sym_us == 0
