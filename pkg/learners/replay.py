import numpy as np
from numbers import Number
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple
from simulator.environment import Action


__all__ = [
    "Experience",
    "Batch",
    "PerConfig",
    "SegmentTree",
    "SumTree",
    "PrioritizedReplayBuffer",
    "collate"
]


@dataclass(frozen=True)
class Experience:
    """
    One transition (s, a, r, s', done); `action.params` holds the learner's
    raw continuous output for every branch.
    """
    state_vec: np.ndarray
    action: Action
    reward: float
    next_state_vec: np.ndarray
    done: bool = False


@dataclass(frozen=True)
class Batch:
    obs: np.ndarray
    params: np.ndarray
    schedule: np.ndarray
    rewards: np.ndarray
    next_obs: np.ndarray
    dones: np.ndarray

    def __len__(self) -> int:
        return self.rewards.shape[0]


def collate(experiences: Sequence[Experience]) -> Batch:
    if len(experiences) == 0:
        raise ValueError("Cannot collate an empty batch")
    if any(e.action.params is None for e in experiences):
        raise ValueError("Every experience needs raw action parameters for replay")
    return Batch(
        obs=np.stack([e.state_vec for e in experiences]),
        params=np.stack([e.action.params for e in experiences]),
        schedule=np.array([e.action.schedule for e in experiences], dtype=np.int64),
        rewards=np.array([e.reward for e in experiences], dtype=np.float64),
        next_obs=np.stack([e.next_state_vec for e in experiences]),
        dones=np.array([e.done for e in experiences], dtype=np.float64)
    )


@dataclass(frozen=True)
class PerConfig:
    """
    Prioritized replay settings; `alpha = 0` with `mu = 0` is uniform replay.
    """
    capacity: int = 1_000_000
    alpha: float = 0.6
    mu_start: float = 0.4
    mu_end: float = 1.0
    epsilon: float = 1e-6

    def __post_init__(self):
        if self.capacity < 1:
            raise ValueError(f"PerConfig.capacity must be >= 1, got {self.capacity}")
        if self.alpha < 0:
            raise ValueError(f"PerConfig.alpha must be >= 0, got {self.alpha}")
        for name in ("mu_start", "mu_end"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"PerConfig.{name} must lie in [0, 1], got {getattr(self, name)}")
        if self.epsilon <= 0:
            raise ValueError(f"PerConfig.epsilon must be positive, got {self.epsilon}")

    def mu_at(self, progress: Number) -> float:
        """
        Linearly annealed importance exponent at training progress in [0, 1].
        """
        progress = min(max(float(progress), 0.0), 1.0)
        return self.mu_start + (self.mu_end - self.mu_start) * progress


class SegmentTree(object):
    """
    Array-backed complete binary tree; every parent holds `operation` of
    its two children, recomputed from them on each update.
    """

    def __init__(
            self,
            capacity: int,
            operation: Callable[[np.ndarray, np.ndarray], np.ndarray],
            neutral: float
    ):
        size = 1
        while size < capacity:
            size *= 2
        self.capacity = capacity
        self._size = size
        self._operation = operation
        self._nodes = np.full(2 * size, neutral, dtype=np.float64)

    @property
    def root(self) -> float:
        return float(self._nodes[1])

    def __getitem__(self, index):
        return self._nodes[self._size + np.asarray(index)]

    def update(self, index: int, value: float) -> None:
        node = self._size + int(index)
        self._nodes[node] = value
        node //= 2
        while node >= 1:
            self._nodes[node] = self._operation(
                self._nodes[2 * node], self._nodes[2 * node + 1]
            )
            node //= 2


class SumTree(SegmentTree):

    def __init__(self, capacity: int):
        super().__init__(capacity, operation=np.add, neutral=0.0)

    def find_prefix(self, targets: np.ndarray) -> np.ndarray:
        """
        Leaf index whose cumulative range contains each target in [0, root).
        """
        targets = np.array(targets, dtype=np.float64)
        nodes = np.ones(targets.shape, dtype=np.int64)
        while nodes[0] < self._size:
            left = 2 * nodes
            left_sum = self._nodes[left]
            go_right = targets >= left_sum
            targets = np.where(go_right, targets - left_sum, targets)
            nodes = np.where(go_right, left + 1, left)
        return nodes - self._size


class PrioritizedReplayBuffer(object):
    """
    Proportional prioritized replay with FIFO eviction.

    Sampled indices are insertion ids; an id whose slot has since been
    overwritten is stale and rejected by `update_priorities`.
    """

    def __init__(self, config: PerConfig):
        self.config = config
        self.__data: List[Optional[Experience]] = [None] * config.capacity
        self.__ids = np.full(config.capacity, -1, dtype=np.int64)
        self.__sum_tree = SumTree(config.capacity)
        self.__max_tree = SegmentTree(config.capacity, operation=np.maximum, neutral=0.0)
        self.__inserted = 0
        self.__size = 0

    def __len__(self) -> int:
        return self.__size

    @property
    def max_priority(self) -> float:
        return self.__max_tree.root if self.__size > 0 else 1.0

    @property
    def total(self) -> float:
        return self.__sum_tree.root

    def priority(self, index: int) -> float:
        return float(self.__max_tree[self.__slot(index)])

    def insert(self, exp: Experience) -> int:
        """
        Store with the current maximum priority; returns the insertion id.
        """
        priority = self.max_priority
        slot = self.__inserted % self.config.capacity
        self.__data[slot] = exp
        self.__ids[slot] = self.__inserted
        self.__set_priority(slot, priority)
        self.__inserted += 1
        self.__size = min(self.__size + 1, self.config.capacity)
        return self.__inserted - 1

    def extend(self, experiences: Sequence[Experience]) -> None:
        for exp in experiences:
            self.insert(exp)

    def probabilities(self) -> np.ndarray:
        """
        Sampling probability of every stored entry, in slot order.
        """
        leaves = self.__sum_tree[np.arange(self.__size)]
        return leaves / self.total

    def sample(
            self,
            batch: int,
            rng: np.random.Generator,
            mu: Optional[float] = None
    ) -> Tuple[List[Experience], np.ndarray, np.ndarray]:
        """
        Draw `batch` entries independently with P(b) = p_b^a / sum p^a.

        Args:
            batch (int): Number of draws.
            rng (np.random.Generator): Source of the draws.
            mu (Optional[float]): Importance exponent; defaults to `mu_start`.

        Returns:
            Tuple[List[Experience], np.ndarray, np.ndarray]: The experiences,
                their insertion ids and importance weights normalized so the
                largest is 1.
        """
        if batch < 1:
            raise ValueError(f"Batch size must be >= 1, got {batch}")
        if self.__size < batch:
            raise ValueError(
                f"Replay buffer holds {self.__size} experiences, "
                f"fewer than the batch size {batch}"
            )
        mu = self.config.mu_start if mu is None else mu
        total = self.total
        slots = self.__sum_tree.find_prefix(rng.uniform(0.0, total, size=batch))
        slots = np.minimum(slots, self.__size - 1)
        probs = self.__sum_tree[slots] / total
        weights = (self.__size * probs) ** (-mu)
        weights = weights / weights.max()
        experiences = [self.__data[s] for s in slots]
        return experiences, self.__ids[slots].copy(), weights

    def update_priorities(
            self,
            indices: Sequence[int],
            td_errors: Sequence[float]
    ) -> None:
        """
        p_b = |td_error| + epsilon for every sampled id.
        """
        indices = np.asarray(indices, dtype=np.int64)
        td_errors = np.asarray(td_errors, dtype=np.float64)
        if indices.shape != td_errors.shape:
            raise ValueError(
                f"{indices.shape[0]} indices but {td_errors.shape[0]} TD errors"
            )
        for index, error in zip(indices, td_errors):
            self.__set_priority(
                self.__slot(int(index)), abs(float(error)) + self.config.epsilon
            )

    def __slot(self, index: int) -> int:
        if not 0 <= index < self.__inserted:
            raise ValueError(f"Replay index {index} was never inserted")
        slot = index % self.config.capacity
        if self.__ids[slot] != index:
            raise ValueError(f"Replay index {index} is stale (evicted)")
        return slot

    def __set_priority(self, slot: int, priority: float) -> None:
        self.__max_tree.update(slot, priority)
        self.__sum_tree.update(slot, priority ** self.config.alpha)

    def check_consistency(self, tol: Optional[float] = 1e-9) -> bool:
        """
        Whether the tree root equals the direct sum of p^alpha over entries.
        """
        direct = float(np.sum(self.__max_tree[np.arange(self.__size)] ** self.config.alpha))
        return abs(direct - self.total) <= tol * max(1.0, direct)
