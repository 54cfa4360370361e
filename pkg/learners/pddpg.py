import numpy as np
from simulator.environment import Action
from .pdqn import HybridAgent


__all__ = ["PddpgAgent"]


class PddpgAgent(HybridAgent):
    """
    DDPG-style baseline over the hybrid space: a single actor emits
    (ax, ay, delta) followed by a relaxed N-way scheduling vector, executed
    by argmax, and a single critic scores the full action.
    """

    @property
    def param_width(self) -> int:
        return 3 + self.scenario.n_iotds

    @property
    def value_width(self) -> int:
        return 1

    def decode(self, raw: np.ndarray) -> Action:
        ax, ay, delta = self._motion(raw[:3])
        return Action(
            ax=ax,
            ay=ay,
            delta=delta,
            schedule=int(np.argmax(raw[3:])),
            params=np.array(raw)
        )

    def _taken_values(self, q, schedule):
        return q[:, 0]

    def _bootstrap_values(self, q_next):
        return q_next[:, 0]

    def _greedy_action(self, obs, raw):
        return self.decode(raw)

    def _explore_action(self, raw, rng):
        return self.decode(raw)
