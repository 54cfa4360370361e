import numpy as np
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple
from simulator.config import ScenarioConfig
from simulator.environment import Action
from .neuralnet import (
    Activation,
    NetworkParams,
    OptimizerState,
    backward,
    forward,
    init_params,
    optimizer_step
)
from .replay import Batch


__all__ = ["AgentConfig", "HybridAgent", "PdqnAgent", "TrainStats"]


@dataclass(frozen=True)
class AgentConfig:
    hidden: Tuple[int, ...] = (400, 200)
    gamma: float = 0.99
    tau: float = 0.01
    lr_policy: float = 3e-5
    lr_value: float = 3e-4

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if len(self.hidden) == 0 or min(self.hidden) < 1:
            raise ValueError(f"AgentConfig.hidden must be positive sizes, got {self.hidden}")
        if not 0 <= self.gamma <= 1:
            raise ValueError(f"AgentConfig.gamma must lie in [0, 1], got {self.gamma}")
        if not 0 <= self.tau <= 1:
            raise ValueError(f"AgentConfig.tau must lie in [0, 1], got {self.tau}")
        if self.lr_policy <= 0 or self.lr_value <= 0:
            raise ValueError("AgentConfig learning rates must be positive")


@dataclass(frozen=True)
class TrainStats:
    value_loss: float
    policy_loss: float
    td_errors: np.ndarray


class HybridAgent(object):
    """
    Actor-critic pair with target copies for a hybrid action space.

    The policy network emits tanh-bounded continuous parameters and the value
    network scores (observation, parameters). Subclasses decide the layer
    widths, how the critic output is read and how raw parameters become an
    `Action`.
    """

    def __init__(
            self,
            scenario: ScenarioConfig,
            config: AgentConfig,
            rng: np.random.Generator
    ):
        self.scenario = scenario
        self.config = config
        self.obs_dim = scenario.obs_dim
        self.policy = init_params(
            [self.obs_dim, *config.hidden, self.param_width],
            rng,
            output_activation=Activation.TANH
        )
        self.value = init_params(
            [self.obs_dim + self.param_width, *config.hidden, self.value_width],
            rng,
            output_activation=Activation.IDENTITY
        )
        self.policy_target = self.policy.copy()
        self.value_target = self.value.copy()
        self.policy_opt = OptimizerState.for_params(self.policy, config.lr_policy)
        self.value_opt = OptimizerState.for_params(self.value, config.lr_value)

    @property
    def param_width(self) -> int:
        raise NotImplementedError

    @property
    def value_width(self) -> int:
        raise NotImplementedError

    def _taken_values(self, q: np.ndarray, schedule: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _bootstrap_values(self, q_next: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _greedy_action(self, obs: np.ndarray, raw: np.ndarray) -> Action:
        raise NotImplementedError

    def _explore_action(self, raw: np.ndarray, rng: np.random.Generator) -> Action:
        raise NotImplementedError

    def _motion(self, triple: Sequence[float]) -> Tuple[float, float, float]:
        """
        Map a tanh triple onto [-x_max, x_max] x [-y_max, y_max] x [0, t_d].
        """
        u = np.clip(np.asarray(triple, dtype=np.float64), -1.0, 1.0)
        cfg = self.scenario
        return (
            float(cfg.max_step_x * u[0]),
            float(cfg.max_step_y * u[1]),
            float(np.clip(cfg.slot_len * (u[2] + 1) / 2, 0.0, cfg.slot_len))
        )

    def critic(
            self,
            obs: np.ndarray,
            params: np.ndarray,
            value: Optional[NetworkParams] = None
    ) -> np.ndarray:
        value = self.value if value is None else value
        return forward(value, np.concatenate([obs, params], axis=-1))

    def select_action(
            self,
            obs: np.ndarray,
            epsilon: float,
            rng: np.random.Generator,
            policy: Optional[NetworkParams] = None
    ) -> Action:
        """
        Epsilon-greedy hybrid action.

        Args:
            obs (np.ndarray): Normalized observation.
            epsilon (float): Probability of a uniformly random action.
            rng (np.random.Generator): Exploration draws.
            policy (Optional[NetworkParams]): Genome to act with instead of
                the trained policy; the shared value network still scores it.

        Returns:
            Action: The action, with the raw parameters attached for replay.
        """
        if rng.random() < epsilon:
            raw = rng.uniform(-1.0, 1.0, size=self.param_width)
            return self._explore_action(raw, rng)
        policy = self.policy if policy is None else policy
        raw = forward(policy, obs)
        return self._greedy_action(obs, raw)

    def td_targets(self, batch: Batch) -> np.ndarray:
        """
        y = r + gamma * (1 - done) * bootstrap(Q'(s', c'(s'))), target nets only.
        """
        next_params = forward(self.policy_target, batch.next_obs)
        q_next = self.critic(batch.next_obs, next_params, self.value_target)
        bootstrap = self._bootstrap_values(q_next)
        return batch.rewards + self.config.gamma * (1.0 - batch.dones) * bootstrap

    def value_loss(
            self,
            batch: Batch,
            weights: np.ndarray,
            targets: Optional[np.ndarray] = None
    ) -> Tuple[float, np.ndarray, np.ndarray]:
        """
        Importance-weighted mean squared TD error.

        Returns:
            Tuple[float, np.ndarray, np.ndarray]: Loss, TD errors
                (Q - y, per sample) and the gradient w.r.t. the value params.
        """
        targets = self.td_targets(batch) if targets is None else targets
        weights = np.asarray(weights, dtype=np.float64)
        inputs = np.concatenate([batch.obs, batch.params], axis=1)
        q = forward(self.value, inputs)
        errors = self._taken_values(q, batch.schedule) - targets
        loss = float(np.mean(weights * errors ** 2))
        upstream = np.zeros_like(q)
        rows = np.arange(len(batch))
        column = batch.schedule if q.shape[1] > 1 else np.zeros(len(batch), dtype=np.int64)
        upstream[rows, column] = 2.0 * weights * errors / len(batch)
        grad, _ = backward(self.value, inputs, upstream)
        return loss, errors, grad

    def policy_loss(self, obs: np.ndarray) -> Tuple[float, np.ndarray]:
        """
        -mean over the batch of the summed critic outputs at the policy's own
        parameters; the critic is held fixed and only the policy gets a
        gradient.

        Returns:
            Tuple[float, np.ndarray]: Loss and the policy parameter gradient.
        """
        obs = np.atleast_2d(obs)
        params = forward(self.policy, obs)
        inputs = np.concatenate([obs, params], axis=1)
        q = forward(self.value, inputs)
        loss = -float(np.mean(np.sum(q, axis=1)))
        upstream = -np.ones_like(q) / obs.shape[0]
        _, input_grad = backward(self.value, inputs, upstream)
        grad, _ = backward(self.policy, obs, input_grad[:, self.obs_dim:])
        return loss, grad

    def soft_update(self, tau: Optional[float] = None) -> None:
        tau = self.config.tau if tau is None else tau
        if not 0 <= tau <= 1:
            raise ValueError(f"Soft-update weight must lie in [0, 1], got {tau}")
        self.policy_target = self.policy_target.with_vector(
            tau * self.policy.vector + (1 - tau) * self.policy_target.vector
        )
        self.value_target = self.value_target.with_vector(
            tau * self.value.vector + (1 - tau) * self.value_target.vector
        )

    def train_step(self, batch: Batch, weights: np.ndarray) -> TrainStats:
        """
        Value update, then policy update against the refreshed critic, then
        soft target updates.
        """
        v_loss, errors, v_grad = self.value_loss(batch, weights)
        self.value = optimizer_step(self.value_opt, self.value, v_grad)
        p_loss, p_grad = self.policy_loss(batch.obs)
        self.policy = optimizer_step(self.policy_opt, self.policy, p_grad)
        self.soft_update()
        return TrainStats(value_loss=v_loss, policy_loss=p_loss, td_errors=errors)

    def to_arrays(self) -> Dict[str, np.ndarray]:
        arrays = dict()
        arrays.update(self.policy.to_arrays("policy"))
        arrays.update(self.value.to_arrays("value"))
        arrays.update(self.policy_target.to_arrays("policy_target"))
        arrays.update(self.value_target.to_arrays("value_target"))
        arrays.update(self.policy_opt.to_arrays("policy_opt"))
        arrays.update(self.value_opt.to_arrays("value_opt"))
        return arrays

    def load_arrays(self, arrays) -> None:
        """
        Restore networks and optimizer states; dimensions must match.
        """
        loaded = {
            "policy": NetworkParams.from_arrays(arrays, "policy"),
            "value": NetworkParams.from_arrays(arrays, "value"),
            "policy_target": NetworkParams.from_arrays(arrays, "policy_target"),
            "value_target": NetworkParams.from_arrays(arrays, "value_target")
        }
        for name, params in loaded.items():
            current = getattr(self, name)
            if params.layer_sizes != current.layer_sizes:
                raise ValueError(
                    f"Checkpoint network `{name}` has layers {params.layer_sizes}, "
                    f"scenario expects {current.layer_sizes}"
                )
            setattr(self, name, params)
        self.policy_opt = OptimizerState.from_arrays(arrays, "policy_opt")
        self.value_opt = OptimizerState.from_arrays(arrays, "value_opt")


class PdqnAgent(HybridAgent):
    """
    Parameterized deep Q-network: one (ax, ay, delta) triple per IoTD from
    the policy, one Q value per IoTD from the value network.
    """

    @property
    def param_width(self) -> int:
        return 3 * self.scenario.n_iotds

    @property
    def value_width(self) -> int:
        return self.scenario.n_iotds

    def branch_action(self, raw: np.ndarray, branch: int) -> Action:
        ax, ay, delta = self._motion(raw[3 * branch:3 * branch + 3])
        return Action(ax=ax, ay=ay, delta=delta, schedule=int(branch), params=np.array(raw))

    def _taken_values(self, q, schedule):
        return q[np.arange(q.shape[0]), schedule]

    def _bootstrap_values(self, q_next):
        return np.max(q_next, axis=1)

    def _greedy_action(self, obs, raw):
        q = self.critic(obs, raw)
        return self.branch_action(raw, int(np.argmax(q)))

    def _explore_action(self, raw, rng):
        return self.branch_action(raw, int(rng.integers(0, self.scenario.n_iotds)))
