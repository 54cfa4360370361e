import numpy as np
import pytest
from utils.rng import RngStream
from simulator.config import ScenarioConfig
from learners.trainer import TrainerConfig


@pytest.fixture
def default_cfg():
    return ScenarioConfig()


@pytest.fixture
def small_cfg():
    """
    Three IoTDs, six slots, a 2x2 surface and a noise floor low enough for
    uploads to succeed.
    """
    return ScenarioConfig(
        n_iotds=3,
        horizon=6,
        ris_rows=2,
        ris_cols=2,
        noise_power=1e-16,
        min_data=3.0
    )


@pytest.fixture
def tiny_training():
    return TrainerConfig(
        generations=3,
        population=4,
        gradient_steps=2,
        batch_size=8,
        replay_capacity=1000,
        hidden=(16, 8),
        lr_policy=1e-3,
        lr_value=1e-3,
        eval_every=2,
        ao_iters=1
    )


@pytest.fixture
def rng_stream():
    return RngStream(7)


@pytest.fixture
def generator():
    return np.random.default_rng(1234)
