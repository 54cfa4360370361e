import numpy as np
import pytest
from simulator.config import ScenarioConfig
from learners.neuralnet import numeric_gradient
from learners.replay import Batch
from learners.pdqn import AgentConfig, PdqnAgent
from learners.pddpg import PddpgAgent


@pytest.fixture
def two_cfg():
    return ScenarioConfig(n_iotds=2, horizon=5, ris_rows=2, ris_cols=2)


def _agent(cls, cfg, seed=0, **kwargs):
    return cls(cfg, AgentConfig(hidden=(8,), **kwargs), np.random.default_rng(seed))


def _constant_critic(agent, outputs):
    """
    Zero every value weight so the critic returns `outputs` for any input.
    """
    vector = np.zeros(agent.value.n_params)
    vector[agent.value.layer_slices()[-1][1]] = outputs
    agent.value = agent.value.with_vector(vector)


def _batch(agent, rng, size=4, dones=None):
    obs_dim, width = agent.obs_dim, agent.param_width
    return Batch(
        obs=rng.uniform(-1, 1, size=(size, obs_dim)),
        params=rng.uniform(-1, 1, size=(size, width)),
        schedule=rng.integers(0, agent.scenario.n_iotds, size=size),
        rewards=rng.standard_normal(size),
        next_obs=rng.uniform(-1, 1, size=(size, obs_dim)),
        dones=np.zeros(size) if dones is None else np.asarray(dones, dtype=float)
    )


def test_network_widths(small_cfg):
    pdqn = _agent(PdqnAgent, small_cfg)
    assert pdqn.param_width == 9
    assert pdqn.value_width == 3
    assert pdqn.policy.layer_sizes == (small_cfg.obs_dim, 8, 9)
    assert pdqn.value.layer_sizes == (small_cfg.obs_dim + 9, 8, 3)
    pddpg = _agent(PddpgAgent, small_cfg)
    assert pddpg.param_width == 6
    assert pddpg.value_width == 1


@pytest.mark.parametrize("cls", [PdqnAgent, PddpgAgent])
def test_exploration_stays_in_bounds(cls, small_cfg, generator):
    agent = _agent(cls, small_cfg)
    obs = np.zeros(small_cfg.obs_dim)
    for _ in range(200):
        action = agent.select_action(obs, 1.0, generator)
        action.validate(small_cfg)
        assert action.params.shape == (agent.param_width,)


def test_greedy_follows_critic_argmax(small_cfg, generator):
    agent = _agent(PdqnAgent, small_cfg)
    _constant_critic(agent, [0.0, 1.0, 5.0])
    action = agent.select_action(np.zeros(small_cfg.obs_dim), 0.0, generator)
    assert action.schedule == 2
    raw = action.params
    assert action.ax == pytest.approx(small_cfg.max_step_x * raw[6])


def test_parameter_mapping(small_cfg):
    agent = _agent(PdqnAgent, small_cfg)
    action = agent.branch_action(np.ones(9), 1)
    assert (action.ax, action.ay, action.delta) == (20.0, 20.0, 1.0)
    action = agent.branch_action(-np.ones(9), 0)
    assert (action.ax, action.ay, action.delta) == (-20.0, -20.0, 0.0)
    mid = agent.branch_action(np.zeros(9), 2)
    assert mid.delta == pytest.approx(0.5)


def test_pddpg_decodes_schedule_by_argmax(small_cfg):
    agent = _agent(PddpgAgent, small_cfg)
    action = agent.decode(np.array([0.5, -0.5, 0.0, -0.2, 0.9, 0.1]))
    assert action.schedule == 1
    assert action.ax == pytest.approx(10.0)
    assert action.ay == pytest.approx(-10.0)


@pytest.mark.parametrize("cls", [PdqnAgent, PddpgAgent])
def test_targets_without_discount(cls, two_cfg, generator):
    agent = _agent(cls, two_cfg, gamma=0.0)
    batch = _batch(agent, generator)
    np.testing.assert_allclose(agent.td_targets(batch), batch.rewards)


def test_terminal_targets_ignore_bootstrap(two_cfg, generator):
    agent = _agent(PdqnAgent, two_cfg)
    _constant_critic(agent, [3.0, 7.0])
    agent.value_target = agent.value.copy()
    batch = _batch(agent, generator, dones=[1, 0, 1, 0])
    targets = agent.td_targets(batch)
    np.testing.assert_allclose(targets[[0, 2]], batch.rewards[[0, 2]])
    np.testing.assert_allclose(targets[[1, 3]], batch.rewards[[1, 3]] + 0.99 * 7.0)


def test_weighted_value_loss(two_cfg, generator):
    agent = _agent(PdqnAgent, two_cfg)
    _constant_critic(agent, [1.0, 2.0])
    batch = _batch(agent, generator, size=2)
    batch = Batch(
        obs=batch.obs, params=batch.params, schedule=np.array([0, 1]),
        rewards=batch.rewards, next_obs=batch.next_obs, dones=batch.dones
    )
    loss, errors, _ = agent.value_loss(batch, np.array([1.0, 0.5]), targets=np.zeros(2))
    np.testing.assert_allclose(errors, [1.0, 2.0])
    assert loss == pytest.approx(1.5)


@pytest.mark.parametrize("cls", [PdqnAgent, PddpgAgent])
def test_value_gradient_matches_finite_differences(cls, two_cfg, generator):
    agent = _agent(cls, two_cfg)
    batch = _batch(agent, generator)
    weights = generator.uniform(0.2, 1.0, size=4)
    targets = agent.td_targets(batch)
    _, _, grad = agent.value_loss(batch, weights, targets)
    value = agent.value

    def loss(vector):
        agent.value = value.with_vector(vector)
        return agent.value_loss(batch, weights, targets)[0]

    numeric = numeric_gradient(loss, value.vector)
    assert np.max(np.abs(grad - numeric)) < 1e-4


def test_policy_loss_of_constant_critic(two_cfg, generator):
    agent = _agent(PdqnAgent, two_cfg)
    _constant_critic(agent, [1.0, 2.0])
    loss, grad = agent.policy_loss(generator.uniform(-1, 1, size=(5, agent.obs_dim)))
    assert loss == pytest.approx(-3.0)
    assert not grad.any()


@pytest.mark.parametrize("cls", [PdqnAgent, PddpgAgent])
def test_policy_gradient_matches_finite_differences(cls, two_cfg, generator):
    agent = _agent(cls, two_cfg)
    obs = generator.uniform(-1, 1, size=(6, agent.obs_dim))
    _, grad = agent.policy_loss(obs)
    policy = agent.policy

    def loss(vector):
        agent.policy = policy.with_vector(vector)
        return agent.policy_loss(obs)[0]

    numeric = numeric_gradient(loss, policy.vector)
    assert np.max(np.abs(grad - numeric)) < 1e-3


def test_soft_update_weights(two_cfg):
    agent = _agent(PdqnAgent, two_cfg)
    before = agent.policy_target.vector.copy()
    agent.policy = agent.policy.with_vector(agent.policy.vector + 1.0)
    agent.soft_update(0.0)
    np.testing.assert_array_equal(agent.policy_target.vector, before)
    agent.soft_update(0.5)
    np.testing.assert_allclose(agent.policy_target.vector, before + 0.5)
    agent.soft_update(1.0)
    np.testing.assert_array_equal(agent.policy_target.vector, agent.policy.vector)
    np.testing.assert_array_equal(agent.value_target.vector, agent.value.vector)
    with pytest.raises(ValueError, match="Soft-update"):
        agent.soft_update(1.5)


@pytest.mark.parametrize("tau", [0.01, 0.1, 0.5])
def test_soft_update_contracts_towards_online(tau, two_cfg, generator):
    agent = _agent(PdqnAgent, two_cfg)
    agent.policy_target = agent.policy_target.with_vector(
        generator.standard_normal(agent.policy.n_params)
    )
    agent.value_target = agent.value_target.with_vector(
        generator.standard_normal(agent.value.n_params)
    )
    gaps = [
        np.linalg.norm(agent.policy_target.vector - agent.policy.vector),
        np.linalg.norm(agent.value_target.vector - agent.value.vector)
    ]
    for k in range(1, 31):
        agent.soft_update(tau)
        bound = (1 - tau) ** k
        assert np.linalg.norm(agent.policy_target.vector - agent.policy.vector) \
            <= bound * gaps[0] + 1e-12
        assert np.linalg.norm(agent.value_target.vector - agent.value.vector) \
            <= bound * gaps[1] + 1e-12


@pytest.mark.parametrize("shift", [-50.0, 3.0, 1e3])
def test_greedy_schedule_ignores_constant_q_shift(shift, small_cfg):
    agent = _agent(PdqnAgent, small_cfg, seed=3)
    observations = np.random.default_rng(8).uniform(-1, 1, size=(25, small_cfg.obs_dim))
    before = [
        agent.select_action(obs, 0.0, np.random.default_rng(0)).schedule
        for obs in observations
    ]
    bias = agent.value.layer_slices()[-1][1]
    vector = agent.value.vector.copy()
    vector[bias] += shift
    agent.value = agent.value.with_vector(vector)
    after = [
        agent.select_action(obs, 0.0, np.random.default_rng(0)).schedule
        for obs in observations
    ]
    assert after == before


@pytest.mark.parametrize("cls", [PdqnAgent, PddpgAgent])
def test_train_step_moves_both_networks(cls, two_cfg, generator):
    agent = _agent(cls, two_cfg)
    policy, value = agent.policy.vector.copy(), agent.value.vector.copy()
    stats = agent.train_step(_batch(agent, generator, size=8), np.ones(8))
    assert stats.td_errors.shape == (8,)
    assert stats.value_loss >= 0
    assert not np.array_equal(agent.policy.vector, policy)
    assert not np.array_equal(agent.value.vector, value)
    assert agent.value_opt.t == agent.policy_opt.t == 1


def test_arrays_round_trip_and_mismatch(two_cfg, small_cfg):
    agent = _agent(PdqnAgent, two_cfg, seed=1)
    clone = _agent(PdqnAgent, two_cfg, seed=2)
    clone.load_arrays(agent.to_arrays())
    np.testing.assert_array_equal(clone.policy.vector, agent.policy.vector)
    np.testing.assert_array_equal(clone.value_target.vector, agent.value_target.vector)
    other = _agent(PdqnAgent, small_cfg)
    with pytest.raises(ValueError, match="layers"):
        other.load_arrays(agent.to_arrays())


def test_agent_config_validation():
    with pytest.raises(ValueError, match="gamma"):
        AgentConfig(gamma=1.5)
    with pytest.raises(ValueError, match="hidden"):
        AgentConfig(hidden=())
