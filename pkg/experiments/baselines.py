import numpy as np
from typing import List, Optional
from rich.progress import Progress
from utils.rng import RngStream, substream
from utils.log import get_logger
from utils.progress import advance
from simulator.config import ScenarioConfig
from simulator.energy import endurance_speed
from simulator.environment import Action, RisEnvironment, run_episode
from optimizers.ao_ris import fixed_selector, random_selector
from .metrics import EpisodeMetrics


__all__ = [
    "RandomPolicy",
    "DiagonalShuttle",
    "run_random_baseline",
    "run_fixed_baseline",
    "FIXED_CHARGING_TIME"
]


logger = get_logger(__name__)

FIXED_CHARGING_TIME = 0.5


class RandomPolicy(object):
    """
    Uniformly random valid actions.
    """

    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg

    def __call__(self, obs: np.ndarray, rng: np.random.Generator) -> Action:
        return Action(
            ax=float(rng.uniform(-self.cfg.max_step_x, self.cfg.max_step_x)),
            ay=float(rng.uniform(-self.cfg.max_step_y, self.cfg.max_step_y)),
            delta=float(rng.uniform(0.0, self.cfg.slot_len)),
            schedule=int(rng.integers(0, self.cfg.n_iotds))
        )


class DiagonalShuttle(object):
    """
    Shuttles parallel to the area diagonal at constant speed, reversing
    before a move would leave the area; charges for a fixed time and polls
    the IoTDs round-robin.
    """

    def __init__(
            self,
            cfg: ScenarioConfig,
            speed: Optional[float] = None,
            charging_time: Optional[float] = FIXED_CHARGING_TIME
    ):
        self.cfg = cfg
        self.speed = endurance_speed(cfg) if speed is None else speed
        self.charging_time = min(charging_time, cfg.slot_len)
        diagonal = np.array([cfg.x_max - cfg.x_min, cfg.y_max - cfg.y_min])
        step = self.speed * cfg.slot_len * diagonal / np.linalg.norm(diagonal)
        # scale down uniformly when a component exceeds the per-slot bound
        limit = np.array([cfg.max_step_x, cfg.max_step_y])
        ratio = np.max(np.divide(step, limit, out=np.full(2, np.inf), where=limit > 0))
        if ratio > 1:
            step = np.minimum(step / ratio, limit)
        self.step = step
        self.reset()

    def reset(self) -> None:
        self.slot = 0
        self.direction = 1.0

    def __call__(self, obs: np.ndarray, rng: np.random.Generator) -> Action:
        cfg = self.cfg
        position = np.array([obs[0] * cfg.x_max, obs[1] * cfg.y_max])
        target = position + self.direction * self.step
        tol = 1e-9 * max(cfg.x_max - cfg.x_min, cfg.y_max - cfg.y_min)
        outside = (target[0] < cfg.x_min - tol or target[0] > cfg.x_max + tol
                   or target[1] < cfg.y_min - tol or target[1] > cfg.y_max + tol)
        if outside:
            self.direction = -self.direction
        ax, ay = self.direction * self.step
        schedule = self.slot % cfg.n_iotds
        self.slot += 1
        return Action(
            ax=float(ax), ay=float(ay), delta=self.charging_time, schedule=schedule
        )


def run_random_baseline(
        cfg: ScenarioConfig,
        episodes: int,
        rng: RngStream,
        progress_host: Optional[Progress] = None
) -> List[EpisodeMetrics]:
    """
    Random flight, random charging time, random scheduling and random RIS
    phases every slot.
    """
    policy = RandomPolicy(cfg)
    selector = random_selector(cfg)
    env = RisEnvironment(cfg, substream(rng, "random"))
    task = None
    if progress_host is not None:
        task = progress_host.add_task("Random baseline", total=episodes)
    metrics = list()
    for episode in range(episodes):
        stream = substream(rng, f"random/ep{episode}")
        record = run_episode(
            env, policy, selector, substream(stream, "act").generator,
            env_rng=substream(stream, "env")
        )
        metrics.append(EpisodeMetrics.from_record(record, episode))
        advance(progress_host, task, metrics[-1].avg_aoi)
    return metrics


def run_fixed_baseline(
        cfg: ScenarioConfig,
        episodes: int,
        rng: Optional[RngStream] = None,
        progress_host: Optional[Progress] = None
) -> List[EpisodeMetrics]:
    """
    Diagonal shuttle at maximum-endurance speed, 0.5 s charging, round-robin
    scheduling and every RIS phase at pi/2. Only the fading is random.
    """
    rng = RngStream(0) if rng is None else rng
    policy = DiagonalShuttle(cfg)
    logger.debug(f"Fixed baseline speed {policy.speed:.3f} m/s, step {policy.step}")
    selector = fixed_selector(cfg)
    env = RisEnvironment(cfg, substream(rng, "fixed"))
    task = None
    if progress_host is not None:
        task = progress_host.add_task("Fixed baseline", total=episodes)
    metrics = list()
    for episode in range(episodes):
        policy.reset()
        stream = substream(rng, f"fixed/ep{episode}")
        record = run_episode(
            env, policy, selector, substream(stream, "act").generator,
            env_rng=substream(stream, "env")
        )
        metrics.append(EpisodeMetrics.from_record(record, episode))
        advance(progress_host, task, metrics[-1].avg_aoi)
    return metrics
