import numpy as np
import pytest
from simulator.energy import (
    IotdState,
    UavEnergyLedger,
    average_aoi,
    charge_energy,
    endurance_speed,
    harvested_energy,
    horizontal_velocity,
    propulsion_energy,
    propulsion_power,
    total_energy,
    update_aoi,
    update_buffer
)


def test_harvested_energy(default_cfg):
    composite = np.sqrt(1e-9)
    assert harvested_energy(0.0, composite, default_cfg) == 0.0
    assert harvested_energy(1.0, composite, default_cfg) == pytest.approx(8e-10)
    assert harvested_energy(0.4, composite, default_cfg) * 2 == \
        pytest.approx(harvested_energy(0.8, composite, default_cfg))
    with pytest.raises(ValueError):
        harvested_energy(1.5, composite, default_cfg)


@pytest.mark.parametrize("buffer, harvested, expected", [
    (5e-6, 1e-6, 5e-6),
    (0.0, 0.0, 0.0),
    (1e-6, 2e-6, 3e-6)
])
def test_update_buffer(default_cfg, buffer, harvested, expected):
    state = update_buffer(IotdState(aoi=4, buffer=buffer), harvested, default_cfg)
    assert state.buffer == pytest.approx(expected)
    assert state.aoi == 4


def test_update_buffer_rejects_negative_harvest(default_cfg):
    with pytest.raises(ValueError):
        update_buffer(IotdState(aoi=1, buffer=0.0), -1e-9, default_cfg)


@pytest.mark.parametrize("delta, expected", [(0.0, 0.0), (0.5, 0.5), (1.0, 1.0)])
def test_charge_energy(default_cfg, delta, expected):
    assert charge_energy(delta, default_cfg) == pytest.approx(expected)


@pytest.mark.parametrize("ax, ay, expected", [(3, 4, 5.0), (0, 0, 0.0), (20, 20, np.sqrt(800))])
def test_horizontal_velocity(ax, ay, expected):
    assert horizontal_velocity(ax, ay, 1.0) == pytest.approx(expected)


def test_horizontal_velocity_rejects_zero_slot():
    with pytest.raises(ValueError):
        horizontal_velocity(1.0, 1.0, 0.0)


def test_hover_energy(default_cfg):
    assert propulsion_energy(0.0, default_cfg) == pytest.approx(168.48, rel=1e-9)


def test_propulsion_at_ten_meters_per_second(default_cfg):
    v = 10.0
    profile = 79.85 * (1 + 3 * v ** 2 / 120 ** 2)
    induced = 88.63 * np.sqrt(np.sqrt(1 + v ** 4 / (4 * 4.03 ** 4)) - v ** 2 / (2 * 4.03 ** 2))
    parasite = 0.5 * 0.6 * 1.225 * 0.05 * 0.503 * v ** 3
    assert parasite == pytest.approx(9.243, abs=1e-3)
    assert propulsion_energy(v, default_cfg) == pytest.approx(profile + induced + parasite, rel=1e-9)


def test_propulsion_rejects_negative_speed(default_cfg):
    with pytest.raises(ValueError):
        propulsion_power(-1.0, default_cfg)


def test_ledger_accumulates():
    ledger = total_energy(UavEnergyLedger(), 1.0, 168.48)
    assert (ledger.charge_j, ledger.propulsion_j) == (1.0, 168.48)
    assert total_energy(ledger, 0.0, 0.0) == ledger
    ledger = total_energy(total_energy(UavEnergyLedger(), 0.5, 100.0), 0.5, 100.0)
    assert ledger.total_j == pytest.approx(201.0)
    with pytest.raises(ValueError):
        total_energy(ledger, -1.0, 0.0)


def test_iotd_state_invariants():
    with pytest.raises(ValueError):
        IotdState(aoi=0, buffer=0.0)
    with pytest.raises(ValueError):
        IotdState(aoi=1, buffer=-1e-9)


def test_update_aoi_success_resets(default_cfg):
    state = IotdState(aoi=7, buffer=default_cfg.buffer_capacity)
    updated, success = update_aoi(state, True, 0.5, 1e3, default_cfg)
    assert success and updated.aoi == 1
    assert updated.buffer == pytest.approx(default_cfg.buffer_capacity - 0.5e-6)


def test_update_aoi_unscheduled_ages(default_cfg):
    state = IotdState(aoi=7, buffer=default_cfg.buffer_capacity)
    updated, success = update_aoi(state, False, 0.5, 1e3, default_cfg)
    assert not success and updated.aoi == 8
    assert updated.buffer == state.buffer


def test_update_aoi_threshold_is_strict(default_cfg):
    state = IotdState(aoi=2, buffer=default_cfg.buffer_capacity)
    rate = (default_cfg.min_data - 1e-9) / 0.5
    updated, success = update_aoi(state, True, 0.5, rate, default_cfg)
    assert not success and updated.aoi == 3


def test_update_aoi_needs_energy(default_cfg):
    state = IotdState(aoi=2, buffer=1e-7)
    updated, success = update_aoi(state, True, 0.0, 1e3, default_cfg)
    assert not success and updated.aoi == 3


def test_update_aoi_full_charging_slot_fails(default_cfg):
    state = IotdState(aoi=2, buffer=default_cfg.buffer_capacity)
    _, success = update_aoi(state, True, 1.0, 1e6, default_cfg)
    assert not success


def test_average_aoi():
    assert average_aoi([IotdState(1, 0.0)] * 3) == 1.0
    assert average_aoi([IotdState(1, 0.0), IotdState(3, 0.0)]) == 2.0
    assert average_aoi([IotdState(5, 0.0)] * 4) == 5.0
    with pytest.raises(ValueError):
        average_aoi([])


def test_endurance_speed_matches_grid_scan(default_cfg):
    grid = np.arange(0.01, 100.0, 0.01)
    per_meter = np.array([propulsion_power(v, default_cfg) / v for v in grid])
    assert endurance_speed(default_cfg) == pytest.approx(grid[np.argmin(per_meter)], abs=0.01)
