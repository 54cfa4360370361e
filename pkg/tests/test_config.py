import pytest
from pathlib import Path
from utils.geometry import Position3
from simulator.config import ScenarioConfig, load_config, load_profile, resolve_seed, SEED_ENV_VAR


CONFIG_DIR = Path(__file__).parent.parent / "configs"


def test_defaults_resolve_derived_fields(default_cfg):
    assert default_cfg.ris_row_spacing == pytest.approx(0.0625)
    assert default_cfg.ris_col_spacing == pytest.approx(0.0625)
    assert default_cfg.uav_start == Position3(200.0, 200.0, 50.0)
    assert len(default_cfg.iotd_positions) == 10
    assert all(default_cfg.contains(p) for p in default_cfg.iotd_positions)
    assert default_cfg.obs_dim == 22
    assert default_cfg.n_elements == 64
    assert default_cfg.initial_buffer == pytest.approx(2.5e-6)


def test_layout_is_seeded():
    assert ScenarioConfig().iotd_positions == ScenarioConfig().iotd_positions
    assert ScenarioConfig(layout_seed=1).iotd_positions != ScenarioConfig().iotd_positions


def test_carrier_frequency_sets_wavelength():
    cfg = ScenarioConfig(carrier_frequency=2.4e9)
    assert cfg.wavelength == pytest.approx(299_792_458.0 / 2.4e9)
    assert cfg.ris_row_spacing == pytest.approx(cfg.wavelength / 2)


@pytest.mark.parametrize("kwargs, field", [
    ({"x_min": 10.0, "x_max": 5.0}, "x_max"),
    ({"n_iotds": 0}, "n_iotds"),
    ({"horizon": 0}, "horizon"),
    ({"harvest_efficiency": 1.0}, "harvest_efficiency"),
    ({"buffer_capacity": 0.0}, "buffer_capacity"),
    ({"phase_bits": 0}, "phase_bits")
])
def test_invalid_scalars_name_the_field(kwargs, field):
    with pytest.raises(ValueError, match=field):
        ScenarioConfig(**kwargs)


def test_iotd_outside_area_rejected():
    with pytest.raises(ValueError, match="iotd_positions"):
        ScenarioConfig(n_iotds=1, iotd_positions=(Position3(500.0, 0.0),))


def test_iotd_count_mismatch_rejected():
    with pytest.raises(ValueError, match="n_iotds"):
        ScenarioConfig(n_iotds=2, iotd_positions=(Position3(1.0, 1.0),))


def test_with_overrides(small_cfg):
    changed = small_cfg.with_overrides(min_data=1.5)
    assert changed.min_data == 1.5
    assert changed.iotd_positions == small_cfg.iotd_positions
    with pytest.raises(ValueError, match="bogus"):
        small_cfg.with_overrides(bogus=1)


def test_load_profile_with_aliases(tmp_path):
    profile = tmp_path / "profile.yaml"
    profile.write_text(
        "n_iotds: 2\n"
        "iotd_positions: [[10, 10, 0], [20, 30, 0]]\n"
        "ris_position: [0, 100, 15]\n"
        "noise_power_dbm: -130\n"
        "training:\n"
        "  population: 4\n"
    )
    cfg, training = load_profile(profile)
    assert cfg.n_iotds == 2
    assert cfg.iotd_positions[1] == Position3(20.0, 30.0, 0.0)
    assert cfg.ris_position == Position3(0.0, 100.0, 15.0)
    assert cfg.noise_power == pytest.approx(1e-16)
    assert training == {"population": 4}


def test_load_profile_rejects_unknown_key(tmp_path):
    profile = tmp_path / "profile.yaml"
    profile.write_text("n_iotd: 2\n")
    with pytest.raises(ValueError, match="n_iotd"):
        load_profile(profile)


def test_dbm_alias_conflict(tmp_path):
    profile = tmp_path / "profile.yaml"
    profile.write_text("noise_power_dbm: -100\nnoise_power: 1.0e-13\n")
    with pytest.raises(ValueError, match="mutually exclusive"):
        load_profile(profile)


def test_missing_profile_raises_runtime_error(tmp_path):
    with pytest.raises(RuntimeError, match="missing.yaml"):
        load_profile(tmp_path / "missing.yaml")


def test_default_profile_warns_about_link_budget():
    with pytest.warns(UserWarning, match="min_data"):
        cfg = load_config(CONFIG_DIR / "default.yaml")
    assert cfg.noise_power == pytest.approx(1e-13)
    assert cfg.uav_tx_power == pytest.approx(1.0)


@pytest.mark.parametrize("name, noise", [("desk.yaml", 1e-16), ("smoke.yaml", 10 ** -16.3)])
def test_shipped_profiles_load(name, noise):
    cfg, training = load_profile(CONFIG_DIR / name)
    assert cfg.noise_power == pytest.approx(noise)
    assert "generations" in training


def test_smoke_profile_layout():
    cfg, _ = load_profile(CONFIG_DIR / "smoke.yaml")
    assert cfg.n_iotds == 3 and cfg.horizon == 20
    assert cfg.initial_buffer == cfg.buffer_capacity
    # the UAV cannot reach the boundary within the horizon
    reach = cfg.horizon * max(cfg.max_step_x, cfg.max_step_y)
    assert cfg.uav_start.x - reach >= cfg.x_min and cfg.uav_start.x + reach <= cfg.x_max
    assert cfg.uav_start.y - reach >= cfg.y_min and cfg.uav_start.y + reach <= cfg.y_max


def test_resolve_seed(monkeypatch):
    monkeypatch.delenv(SEED_ENV_VAR, raising=False)
    assert resolve_seed() == 0
    assert resolve_seed(5) == 5
    monkeypatch.setenv(SEED_ENV_VAR, "42")
    assert resolve_seed(5) == 42
    monkeypatch.setenv(SEED_ENV_VAR, "abc")
    with pytest.raises(ValueError, match=SEED_ENV_VAR):
        resolve_seed()
