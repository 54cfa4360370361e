import numpy as np
import pytest
from utils.rng import RngStream
from simulator.energy import endurance_speed
from experiments.baselines import (
    FIXED_CHARGING_TIME,
    DiagonalShuttle,
    RandomPolicy,
    run_fixed_baseline,
    run_random_baseline
)


def test_random_actions_are_valid(small_cfg, generator):
    policy = RandomPolicy(small_cfg)
    schedules = set()
    for _ in range(300):
        action = policy(np.zeros(small_cfg.obs_dim), generator)
        action.validate(small_cfg)
        schedules.add(action.schedule)
    assert schedules == {0, 1, 2}


def test_shuttle_respects_step_bound(small_cfg):
    shuttle = DiagonalShuttle(small_cfg, speed=100.0)
    assert np.all(np.abs(shuttle.step) <= [small_cfg.max_step_x, small_cfg.max_step_y])
    slow = DiagonalShuttle(small_cfg)
    assert np.linalg.norm(slow.step) == pytest.approx(endurance_speed(small_cfg) * small_cfg.slot_len)


def test_fixed_baseline_schedule(small_cfg):
    metrics = run_fixed_baseline(small_cfg, 2, RngStream(1))
    assert len(metrics) == 2
    for m in metrics:
        trace = m.trace
        assert len(trace) == small_cfg.horizon
        np.testing.assert_allclose(trace["delta"], FIXED_CHARGING_TIME)
        np.testing.assert_array_equal(trace["scheduled"], np.arange(small_cfg.horizon) % small_cfg.n_iotds)
        # constant speed, no clamping
        np.testing.assert_allclose(trace["E_P"], trace["E_P"].iloc[0], rtol=1e-6)
        assert (trace["r_P"] == 0).all()


def test_fixed_baseline_stays_in_area(default_cfg):
    cfg = default_cfg.with_overrides(horizon=40)
    trace = run_fixed_baseline(cfg, 1)[0].trace
    assert trace["x"].between(cfg.x_min, cfg.x_max).all()
    assert trace["y"].between(cfg.y_min, cfg.y_max).all()


def test_random_baseline_is_reproducible(small_cfg):
    first = run_random_baseline(small_cfg, 3, RngStream(4))
    second = run_random_baseline(small_cfg, 3, RngStream(4))
    assert [m.cum_reward for m in first] == [m.cum_reward for m in second]
    assert [m.avg_aoi for m in first] == [m.avg_aoi for m in second]
    other = run_random_baseline(small_cfg, 3, RngStream(5))
    assert [m.cum_reward for m in first] != [m.cum_reward for m in other]


def test_episodes_are_independent(small_cfg):
    metrics = run_random_baseline(small_cfg, 2, RngStream(4))
    assert not metrics[0].trace[["x", "y"]].equals(metrics[1].trace[["x", "y"]])
