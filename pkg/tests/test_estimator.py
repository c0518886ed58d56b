import math
import random

import pytest

from ecasim.config import EstimatorConfig, default_ac_params
from ecasim.estimator import (
    BUSY,
    COLLISION,
    IDLE,
    NacEstimate,
    NacEstimator,
    PccWindow,
    choose_biv,
    choose_stage,
    estimate_nac,
    invert_pcc,
)

ACP = default_ac_params()
BE = ACP[1]
VI = ACP[2]
VO = ACP[3]


def test_activity_ratio_arithmetic():
    w = PccWindow(window=1000)
    w.observe(IDLE, 450)
    w.observe(BUSY, 40)
    w.observe(COLLISION, 10)
    assert w.total_slots == 500
    assert w.pcc == (40 + 10) / 500 == 0.1


def test_activity_ratio_extremes():
    idle = PccWindow(100)
    idle.observe(IDLE, 80)
    assert idle.pcc == 0.0
    jammed = PccWindow(100)
    jammed.observe(COLLISION, 80)
    assert jammed.pcc == 1.0


def test_window_trims_to_last_n_slots():
    w = PccWindow(window=100)
    w.observe(BUSY, 200)
    assert w.total_slots == 100 and w.busy_slots == 100
    w.observe(IDLE, 50)
    assert w.total_slots == 100
    assert w.busy_slots == 50 and w.collision_slots == 0
    assert w.pcc == 0.5


def test_batched_observation_equals_per_slot():
    a = PccWindow(window=64)
    b = PccWindow(window=64)
    rng = random.Random(3)
    for _ in range(60):
        kind = rng.choice([IDLE, BUSY, COLLISION])
        n = rng.randint(1, 30)
        a.observe(kind, n)
        for _ in range(n):
            b.observe(kind, 1)
        assert (a.total_slots, a.busy_slots, a.collision_slots) == \
               (b.total_slots, b.busy_slots, b.collision_slots)


def test_invert_pcc_closed_form():
    # 1 + ln(1-0.5)/ln(1-2/33)
    expected = 1.0 + math.log(0.5) / math.log(1.0 - 2.0 / 33.0)
    assert invert_pcc(0.5, 32.0) == pytest.approx(expected)
    assert invert_pcc(0.5, 32.0) == pytest.approx(12.1, abs=0.1)


def test_invert_pcc_boundaries():
    assert invert_pcc(0.0, 32.0) == 1.0
    assert invert_pcc(-0.1, 32.0) == 1.0
    capped = invert_pcc(1.0, 32.0)
    assert math.isfinite(capped) and capped > 50


def test_invert_pcc_monotone_in_pcc():
    prev = 0.0
    for i in range(1, 20):
        cur = invert_pcc(i / 20.0, 32.0)
        assert cur > prev
        prev = cur


def test_choose_stage_reproduces_worked_examples():
    est = NacEstimate(nac=20.0, pcc=0.3, updated_at=0)
    # threshold 400 * 0.3 = 120: BE needs 32*2^2=128, VO reaches 8*2^4=128 then halves
    assert choose_stage(BE, est) == 2
    assert choose_stage(VO, est) == 3
    quiet = NacEstimate(nac=1.0, pcc=0.0, updated_at=0)
    for ac in ACP:
        assert choose_stage(ac, quiet) == 0


def test_choose_stage_clamps_to_max_stage():
    est = NacEstimate(nac=500.0, pcc=0.99, updated_at=0)
    assert choose_stage(BE, est, max_stage=5) == 5
    assert choose_stage(VO, est, max_stage=5) == 4  # halved after the clamp


def test_choose_stage_monotone_in_threshold():
    rng = random.Random(9)
    pts = sorted((rng.uniform(1, 60), rng.uniform(0, 1)) for _ in range(200))
    for ac in ACP:
        stages = [choose_stage(ac, NacEstimate(n, p, 0)) for n, p in
                  sorted(pts, key=lambda t: t[0] * t[0] * t[1])]
        assert stages == sorted(stages)


def test_delay_sensitive_stage_is_half_window():
    # the VO/VI stage is exactly one below the bare inequality solution
    rng = random.Random(30)
    for _ in range(200):
        est = NacEstimate(rng.uniform(1, 100), rng.uniform(0, 1), 0)
        threshold = est.nac * est.nac * est.pcc
        for ac in (VO, VI):
            plain = next((k for k in range(6) if (ac.cw_min << k) > threshold), 5)
            assert choose_stage(ac, est) == max(0, plain - 1)


def test_choose_biv_examples():
    est = NacEstimate(nac=20.0, pcc=0.3, updated_at=0)
    assert choose_biv(0, BE, est) == 2      # jump straight to the chosen stage
    assert choose_biv(3, BE, est) == 1      # never below the classic +1
    assert choose_biv(5, BE, est) == 1


def test_estimator_warm_up_holds_prior():
    cfg = EstimatorConfig(window_slots=1000, update_every_slots=100)
    est = NacEstimator(cfg, mean_cw_fn=lambda: 32.0, nac_cap=100.0)
    est.observe(BUSY, 99)  # below window/10
    assert est.estimate.nac == 1.0
    est.observe(BUSY, 1)   # crosses warm-up at the 100-slot boundary
    assert est.estimate.nac > 1.0


def test_estimator_smoothing_bounded_step():
    cfg = EstimatorConfig(window_slots=100, update_every_slots=100, ema_alpha=0.1)
    est = NacEstimator(cfg, mean_cw_fn=lambda: 32.0, nac_cap=1000.0)
    est.observe(BUSY, 100)
    raw = invert_pcc(1.0, 32.0)
    assert est.estimate.nac == pytest.approx(1.0 + 0.1 * (raw - 1.0))


def test_estimator_updates_every_boundary():
    cfg = EstimatorConfig(window_slots=100, update_every_slots=100, ema_alpha=0.5)
    a = NacEstimator(cfg, mean_cw_fn=lambda: 32.0, nac_cap=1000.0)
    b = NacEstimator(cfg, mean_cw_fn=lambda: 32.0, nac_cap=1000.0)
    a.observe(BUSY, 300)
    for _ in range(300):
        b.observe(BUSY, 1)
    assert a.estimate == b.estimate


def test_estimate_nac_one_shot():
    w = PccWindow(window=100)
    w.observe(BUSY, 5)
    assert estimate_nac(w, 32.0).nac == 1.0  # warm-up
    w.observe(BUSY, 95)
    est = estimate_nac(w, 32.0)
    assert est.nac > 1.0
    assert est.pcc == 1.0


def test_nac_cap_applies():
    cfg = EstimatorConfig(window_slots=100, update_every_slots=100, ema_alpha=1.0)
    est = NacEstimator(cfg, mean_cw_fn=lambda: 1024.0, nac_cap=50.0)
    est.observe(COLLISION, 100)
    assert est.estimate.nac <= 50.0
