import numpy as np
import pytest
from utils.geometry import Position3
from simulator.config import ScenarioConfig
from simulator.channel import (
    ChannelRealization,
    PhaseConfig,
    achievable_rate,
    composite_channel,
    sample_direct,
    sample_realization,
    sample_ris_iotd,
    sample_uav_ris,
    steering_vector
)


def test_phase_config_unit_modulus():
    phases = PhaseConfig(indices=[0, 1, 2, 3], bits=2)
    np.testing.assert_allclose(np.abs(phases.coefficients), 1.0)
    np.testing.assert_allclose(phases.phases, [0, np.pi / 2, np.pi, 3 * np.pi / 2])


def test_phase_config_rejects_out_of_range():
    with pytest.raises(ValueError):
        PhaseConfig(indices=[4], bits=2)
    with pytest.raises(ValueError):
        PhaseConfig(indices=[[0]], bits=2)


def test_phase_config_from_phases_rounds_to_grid():
    phases = PhaseConfig.from_phases([np.pi / 2, 0.1, 2 * np.pi - 0.1], bits=2)
    np.testing.assert_array_equal(phases.indices, [1, 0, 0])


def test_steering_single_element():
    np.testing.assert_allclose(steering_vector(0.3, 0.2, 1, 1, 0.1, 0.1, 0.2), [1 + 0j])


def test_steering_broadside_is_all_ones():
    np.testing.assert_allclose(steering_vector(0.0, 1.1, 3, 4, 0.05, 0.05, 0.1), np.ones(12))


def test_steering_half_wavelength_rows():
    vec = steering_vector(np.pi / 2, 0.0, 2, 1, 0.05, 0.05, 0.1)
    np.testing.assert_allclose(vec, [1.0, np.exp(-1j * np.pi)], atol=1e-12)


def test_steering_shape_and_modulus():
    vec = steering_vector(0.4, 0.7, 4, 2, 0.05, 0.05, 0.1)
    assert vec.shape == (8,)
    np.testing.assert_allclose(np.abs(vec), 1.0)


def test_direct_pure_los_has_exact_modulus(default_cfg, generator):
    uav, iotd = Position3(0, 0, 100), Position3(0, 0, 0)
    h = sample_direct(uav, iotd, default_cfg, generator, rician_factor=np.inf)
    assert abs(h) == pytest.approx(np.sqrt(1e-3 / 100 ** 3))


@pytest.mark.slow
def test_direct_mean_power_and_distance_scaling(default_cfg, generator):
    iotd = Position3(0, 0, 0)
    near = np.array([
        abs(sample_direct(Position3(0, 0, 100), iotd, default_cfg, generator)) ** 2
        for _ in range(100_000)
    ])
    far = np.array([
        abs(sample_direct(Position3(0, 0, 200), iotd, default_cfg, generator)) ** 2
        for _ in range(100_000)
    ])
    assert near.mean() == pytest.approx(1e-9, rel=0.02)
    assert far.mean() / near.mean() == pytest.approx(1 / 8, rel=0.03)


def test_uav_ris_is_deterministic_los(default_cfg):
    uav, ris = default_cfg.uav_start, default_cfg.ris_position
    a = sample_uav_ris(uav, ris, default_cfg)
    b = sample_uav_ris(uav, ris, default_cfg)
    np.testing.assert_array_equal(a, b)
    distance = np.linalg.norm(uav.as_array() - ris.as_array())
    np.testing.assert_allclose(np.abs(a), np.sqrt(1e-3 / distance ** 2.2))


def test_uav_ris_single_element():
    cfg = ScenarioConfig(ris_rows=1, ris_cols=1)
    h = sample_uav_ris(Position3(0, 200, 120), cfg.ris_position, cfg)
    np.testing.assert_allclose(h, [np.sqrt(1e-3 / 100 ** 2.2)])


def test_ris_iotd_shape_and_pure_los(generator):
    cfg = ScenarioConfig(ris_rows=4, ris_cols=2)
    iotd = cfg.iotd_positions[0]
    h = sample_ris_iotd(cfg.ris_position, iotd, cfg, generator, rician_factor=np.inf)
    assert h.shape == (8,)
    distance = np.linalg.norm(cfg.ris_position.as_array() - iotd.as_array())
    np.testing.assert_allclose(np.abs(h), np.sqrt(1e-3 / distance ** 2.8))


@pytest.mark.slow
def test_ris_iotd_mean_power(generator):
    cfg = ScenarioConfig(ris_rows=2, ris_cols=2)
    iotd = cfg.iotd_positions[0]
    draws = np.concatenate([
        np.abs(sample_ris_iotd(cfg.ris_position, iotd, cfg, generator)) ** 2
        for _ in range(25_000)
    ])
    distance = np.linalg.norm(cfg.ris_position.as_array() - iotd.as_array())
    assert draws.mean() == pytest.approx(1e-3 / distance ** 2.8, rel=0.02)


def test_sample_realization_shapes(small_cfg, generator):
    real = sample_realization(small_cfg.uav_start, small_cfg, generator)
    assert real.h_ud.shape == (3,)
    assert real.h_ur.shape == (4,)
    assert real.h_rd.shape == (3, 4)


def test_realization_rejects_inconsistent_shapes():
    with pytest.raises(ValueError, match="h_rd"):
        ChannelRealization(h_ud=np.zeros(2), h_ur=np.zeros(3), h_rd=np.zeros((2, 2)))


def test_composite_single_element():
    real = ChannelRealization(h_ud=[0j], h_ur=[1 + 0j], h_rd=[[1 + 0j]])
    phases = PhaseConfig(indices=[1], bits=1)
    assert composite_channel(real, phases, 0) == pytest.approx(-1 + 0j)


def test_composite_coherent_sum():
    terms = np.array([0.5, 1.0, 2.0]) * np.exp(1j * np.array([0.3, 0.3, 0.3]))
    real = ChannelRealization(
        h_ud=[0.25 * np.exp(1j * 0.3)], h_ur=np.ones(3), h_rd=[terms]
    )
    composite = composite_channel(real, PhaseConfig.uniform(3, 0, 2), 0)
    assert abs(composite) == pytest.approx(3.75)


def test_composite_without_reflection():
    real = ChannelRealization(h_ud=[1 + 2j, 3j], h_ur=np.ones(2), h_rd=np.zeros((2, 2)))
    assert composite_channel(real, PhaseConfig.uniform(2, 3, 2), 1) == pytest.approx(3j)


def _complex(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


@pytest.mark.parametrize("seed", range(5))
def test_composite_superposition(seed):
    rng = np.random.default_rng(seed)
    n, m = 3, 6
    phases = PhaseConfig.random(m, 2, rng)
    ud, ud2 = _complex(rng, n), _complex(rng, n)
    ur, ur2 = _complex(rng, m), _complex(rng, m)
    rd, rd2 = _complex(rng, n, m), _complex(rng, n, m)
    scale = complex(*rng.standard_normal(2))

    def composite(h_ud, h_ur, h_rd, index):
        return composite_channel(ChannelRealization(h_ud, h_ur, h_rd), phases, index)

    for k in range(n):
        # jointly linear in the direct and RIS-IoTD links
        assert composite(ud + ud2, ur, rd + rd2, k) == pytest.approx(
            composite(ud, ur, rd, k) + composite(ud2, ur, rd2, k)
        )
        assert composite(scale * ud, ur, scale * rd, k) == pytest.approx(
            scale * composite(ud, ur, rd, k)
        )
        # the reflected part is linear in the UAV-RIS link
        reflected = composite(np.zeros(n), ur + scale * ur2, rd, k)
        assert reflected == pytest.approx(
            composite(np.zeros(n), ur, rd, k) + scale * composite(np.zeros(n), ur2, rd, k)
        )
        # and sums the single-element contributions
        singles = [
            composite(np.zeros(n), ur, rd * (np.arange(m) == e), k) for e in range(m)
        ]
        assert composite(ud, ur, rd, k) == pytest.approx(ud[k] + sum(singles))


def test_composite_rejects_wrong_phase_length():
    real = ChannelRealization(h_ud=[0j], h_ur=np.ones(2), h_rd=np.ones((1, 2)))
    with pytest.raises(ValueError):
        composite_channel(real, PhaseConfig.uniform(3, 0, 2), 0)


def test_achievable_rate():
    assert achievable_rate(0j, 1e-6, 1e-13) == 0.0
    # |H|^2 = 1e-6 gives an SNR of 10
    assert achievable_rate(np.sqrt(1e-6), 1e-6, 1e-13) == pytest.approx(np.log2(11))
    high = achievable_rate(1.0, 1e-6, 1e-13)
    assert achievable_rate(1.0, 2e-6, 1e-13) - high == pytest.approx(1.0, abs=1e-6)
    with pytest.raises(ValueError):
        achievable_rate(1.0, 1e-6, 0.0)
