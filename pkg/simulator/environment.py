import numpy as np
import pandas as pd
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple
from utils.geometry import Position3, clamp_to_area
from utils.rng import RngStream, substream
from utils.log import get_logger
from .config import ScenarioConfig
from .channel import (
    ChannelRealization,
    PhaseConfig,
    achievable_rate,
    composite_channel,
    sample_realization
)
from .energy import (
    IotdState,
    UavEnergyLedger,
    charge_energy,
    harvested_energy,
    horizontal_velocity,
    propulsion_energy,
    total_energy,
    update_aoi,
    update_buffer
)


__all__ = [
    "EnvState",
    "Action",
    "StepOutcome",
    "EpisodeOverError",
    "reset",
    "step",
    "reward_aoi",
    "reward_energy",
    "observe",
    "RisEnvironment",
    "EpisodeRecord",
    "run_episode",
    "trace_frame",
    "TRACE_COLUMNS"
]


logger = get_logger(__name__)

TRACE_COLUMNS = [
    "slot", "x", "y", "delta", "scheduled", "success", "rate",
    "E_C", "E_P", "r_A", "r_E", "r_P"
]

PhaseSelector = Callable[
    [ChannelRealization, int, np.random.Generator],
    Tuple[PhaseConfig, PhaseConfig]
]


class EpisodeOverError(RuntimeError):
    """
    Raised when stepping an environment whose horizon is exhausted.
    """


@dataclass(frozen=True, eq=False)
class EnvState:
    uav_pos: Position3
    aoi: np.ndarray
    buffers: np.ndarray
    slot: int

    def __post_init__(self):
        aoi = np.asarray(self.aoi, dtype=np.int64).copy()
        buffers = np.asarray(self.buffers, dtype=np.float64).copy()
        if aoi.shape != buffers.shape or aoi.ndim != 1:
            raise ValueError(
                f"EnvState.aoi {aoi.shape} and buffers {buffers.shape} must be "
                "equal-length vectors"
            )
        if np.any(aoi < 1):
            raise ValueError("EnvState.aoi entries must be >= 1")
        if np.any(buffers < 0):
            raise ValueError("EnvState.buffers entries must be >= 0")
        aoi.setflags(write=False)
        buffers.setflags(write=False)
        object.__setattr__(self, "aoi", aoi)
        object.__setattr__(self, "buffers", buffers)

    def iotd(self, index: int) -> IotdState:
        return IotdState(aoi=int(self.aoi[index]), buffer=float(self.buffers[index]))


@dataclass(frozen=True)
class Action:
    """
    Hybrid action of one slot.

    Attributes:
        ax (float): Horizontal move along x, meters.
        ay (float): Horizontal move along y, meters.
        delta (float): WPT sub-slot length, seconds.
        schedule (int): Index of the IoTD polled in the data sub-slot.
        params (Optional[np.ndarray]): Raw continuous parameters of every
            discrete branch as emitted by a learner; carried for replay only.
    """
    ax: float
    ay: float
    delta: float
    schedule: int
    params: Optional[np.ndarray] = field(default=None, compare=False, repr=False)

    def validate(self, cfg: ScenarioConfig) -> None:
        if abs(self.ax) > cfg.max_step_x:
            raise ValueError(f"Action.ax={self.ax} outside [-{cfg.max_step_x}, {cfg.max_step_x}]")
        if abs(self.ay) > cfg.max_step_y:
            raise ValueError(f"Action.ay={self.ay} outside [-{cfg.max_step_y}, {cfg.max_step_y}]")
        if not 0 <= self.delta <= cfg.slot_len:
            raise ValueError(f"Action.delta={self.delta} outside [0, {cfg.slot_len}]")
        if int(self.schedule) != self.schedule or not 0 <= self.schedule < cfg.n_iotds:
            raise ValueError(f"Action.schedule={self.schedule} outside [0, {cfg.n_iotds})")


@dataclass(frozen=True)
class StepOutcome:
    next_state: EnvState
    reward: float
    reward_parts: Tuple[float, float, float]
    success: bool
    rate: float
    energy_slot: Tuple[float, float]
    done: bool = False


def reward_aoi(
        prev_aoi: np.ndarray,
        next_aoi: np.ndarray,
        literal_sign: Optional[bool] = False
) -> float:
    """
    Sum of AoI reductions over all IoTDs; positive when ages drop.

    Args:
        literal_sign (Optional[bool]): Negate the sum, which rewards AoI growth.
    """
    prev_aoi = np.asarray(prev_aoi)
    next_aoi = np.asarray(next_aoi)
    if prev_aoi.shape != next_aoi.shape:
        raise ValueError(
            f"AoI vectors differ in shape: {prev_aoi.shape} vs {next_aoi.shape}"
        )
    value = float(np.sum(prev_aoi - next_aoi))
    return -value if literal_sign else value


def reward_energy(e_u_slot: float, omega: float) -> float:
    if omega <= 0:
        raise ValueError(f"Energy reward scale must be positive, got {omega}")
    return -e_u_slot / omega


def observe(state: EnvState, cfg: ScenarioConfig) -> np.ndarray:
    """
    Normalized observation [x, y, aoi_1..N, buffer_1..N], all in [0, 1].
    """
    return np.concatenate([
        [state.uav_pos.x / cfg.x_max, state.uav_pos.y / cfg.y_max],
        np.minimum(state.aoi / cfg.horizon, 1.0),
        state.buffers / cfg.buffer_capacity
    ]).astype(np.float64)


def reset(
        cfg: ScenarioConfig,
        rng: Optional[np.random.Generator] = None
) -> EnvState:
    """
    Initial state: UAV at the configured start, every AoI at 1 and every
    buffer at the configured fill. Deterministic; `rng` is accepted for
    symmetry with `step`.
    """
    return EnvState(
        uav_pos=cfg.uav_start,
        aoi=np.ones(cfg.n_iotds, dtype=np.int64),
        buffers=np.full(cfg.n_iotds, cfg.initial_buffer),
        slot=0
    )


def _move(
        state: EnvState,
        action: Action,
        cfg: ScenarioConfig
) -> Tuple[Position3, float]:
    if state.slot >= cfg.horizon:
        raise EpisodeOverError(
            f"Episode over: slot {state.slot} reached horizon {cfg.horizon}"
        )
    action.validate(cfg)
    raw = state.uav_pos.moved(action.ax, action.ay)
    position, outside = clamp_to_area(raw, cfg.bbox)
    return position, (cfg.boundary_penalty if outside else 0.0)


def _transition(
        state: EnvState,
        action: Action,
        position: Position3,
        penalty: float,
        real: ChannelRealization,
        phase_wpt: PhaseConfig,
        phase_data: PhaseConfig,
        cfg: ScenarioConfig
) -> StepOutcome:
    # WPT sub-slot: every IoTD harvests under the WPT configuration.
    buffers = np.empty(cfg.n_iotds)
    for n in range(cfg.n_iotds):
        composite = composite_channel(real, phase_wpt, n)
        harvested = harvested_energy(action.delta, composite, cfg)
        buffers[n] = update_buffer(state.iotd(n), harvested, cfg).buffer

    # Data sub-slot: only the scheduled IoTD may upload.
    scheduled = int(action.schedule)
    rate = achievable_rate(
        composite_channel(real, phase_data, scheduled),
        tx_power=cfg.iotd_tx_power,
        noise=cfg.noise_power
    )
    aoi = np.empty(cfg.n_iotds, dtype=np.int64)
    success = False
    for n in range(cfg.n_iotds):
        current = IotdState(aoi=int(state.aoi[n]), buffer=float(buffers[n]))
        updated, ok = update_aoi(
            current,
            scheduled=(n == scheduled),
            delta=action.delta,
            rate=rate if n == scheduled else 0.0,
            cfg=cfg
        )
        aoi[n] = updated.aoi
        buffers[n] = updated.buffer
        success = success or ok
    assert np.all(buffers >= 0) and np.all(buffers <= cfg.buffer_capacity), \
        "IoTD buffer left [0, E_max]"

    e_c = charge_energy(action.delta, cfg)
    e_p = propulsion_energy(
        horizontal_velocity(action.ax, action.ay, cfg.slot_len), cfg
    )
    r_a = reward_aoi(state.aoi, aoi, literal_sign=cfg.reward_aoi_growth)
    r_e = reward_energy(e_c + e_p, cfg.energy_scale)
    next_state = EnvState(
        uav_pos=position, aoi=aoi, buffers=buffers, slot=state.slot + 1
    )
    return StepOutcome(
        next_state=next_state,
        reward=r_a + r_e + penalty,
        reward_parts=(r_a, r_e, penalty),
        success=success,
        rate=rate,
        energy_slot=(e_c, e_p),
        done=next_state.slot >= cfg.horizon
    )


def step(
        state: EnvState,
        action: Action,
        phase_wpt: PhaseConfig,
        phase_data: PhaseConfig,
        cfg: ScenarioConfig,
        rng: np.random.Generator
) -> StepOutcome:
    """
    Advance one slot: move (clamped, with the boundary penalty when the raw
    move leaves the area), draw the channels at the new position, harvest,
    attempt the scheduled upload and score the slot.

    Raises:
        EpisodeOverError: If `state.slot` already equals the horizon.
    """
    position, penalty = _move(state, action, cfg)
    real = sample_realization(position, cfg, rng)
    return _transition(
        state, action, position, penalty, real, phase_wpt, phase_data, cfg
    )


class RisEnvironment(object):
    """
    Stateful wrapper around `reset`/`step` owning its fading stream and the
    cumulative UAV energy ledger.

    Phases may be passed directly or chosen per slot by a `phase_selector`
    that sees the slot's channel realization first, which is how AO-RIS
    configures the surface.
    """

    def __init__(self, cfg: ScenarioConfig, rng: RngStream):
        self.cfg = cfg
        self.__rng = rng
        self.__fading = substream(rng, "fading").generator
        self.__state = reset(cfg)
        self.__ledger = UavEnergyLedger()
        self.__last_realization = None

    @property
    def state(self) -> EnvState:
        return self.__state

    @property
    def ledger(self) -> UavEnergyLedger:
        return self.__ledger

    @property
    def done(self) -> bool:
        return self.__state.slot >= self.cfg.horizon

    @property
    def last_realization(self) -> Optional[ChannelRealization]:
        return self.__last_realization

    def observation(self) -> np.ndarray:
        return observe(self.__state, self.cfg)

    def reset(self, rng: Optional[RngStream] = None) -> np.ndarray:
        """
        Restart the episode; a new stream re-seeds the fading draws.
        """
        if rng is not None:
            self.__rng = rng
            self.__fading = substream(rng, "fading").generator
        self.__state = reset(self.cfg)
        self.__ledger = UavEnergyLedger()
        self.__last_realization = None
        return self.observation()

    def step(
            self,
            action: Action,
            phase_wpt: Optional[PhaseConfig] = None,
            phase_data: Optional[PhaseConfig] = None,
            phase_selector: Optional[PhaseSelector] = None,
            selector_rng: Optional[np.random.Generator] = None
    ) -> StepOutcome:
        if phase_selector is None and (phase_wpt is None or phase_data is None):
            raise ValueError("Either both phase configurations or a phase_selector is required")
        position, penalty = _move(self.__state, action, self.cfg)
        real = sample_realization(position, self.cfg, self.__fading)
        if phase_selector is not None:
            phase_wpt, phase_data = phase_selector(
                real, int(action.schedule), selector_rng
            )
        outcome = _transition(
            self.__state, action, position, penalty, real,
            phase_wpt, phase_data, self.cfg
        )
        self.__ledger = total_energy(self.__ledger, *outcome.energy_slot)
        self.__state = outcome.next_state
        self.__last_realization = real
        return outcome


@dataclass
class EpisodeRecord:
    """
    Everything one episode produced: T+1 observations, T actions and T
    outcomes, plus the initial state.
    """
    initial_state: EnvState
    observations: List[np.ndarray] = field(default_factory=list)
    actions: List[Action] = field(default_factory=list)
    outcomes: List[StepOutcome] = field(default_factory=list)

    @property
    def rewards(self) -> np.ndarray:
        return np.array([o.reward for o in self.outcomes])

    @property
    def cum_reward(self) -> float:
        return float(np.sum(self.rewards))

    @property
    def success_count(self) -> int:
        return int(sum(o.success for o in self.outcomes))

    @property
    def aoi_trace(self) -> np.ndarray:
        """
        Average AoI over the IoTDs after every slot.
        """
        return np.array([np.mean(o.next_state.aoi) for o in self.outcomes])

    @property
    def energy_trace(self) -> np.ndarray:
        return np.array([sum(o.energy_slot) for o in self.outcomes])

    @property
    def avg_aoi(self) -> float:
        """
        Mean over slots of the IoTD-average AoI.
        """
        return float(np.mean(self.aoi_trace)) if self.outcomes else float("nan")

    @property
    def avg_energy(self) -> float:
        """
        UAV energy per slot, joules.
        """
        return float(np.mean(self.energy_trace)) if self.outcomes else float("nan")

    def transitions(self):
        """
        Yields (obs, action, reward, next_obs, done) in slot order.
        """
        for t, (action, outcome) in enumerate(zip(self.actions, self.outcomes)):
            yield (
                self.observations[t],
                action,
                outcome.reward,
                self.observations[t + 1],
                outcome.done
            )


def run_episode(
        env: RisEnvironment,
        decide: Callable[[np.ndarray, np.random.Generator], Action],
        phase_selector: PhaseSelector,
        rng: np.random.Generator,
        env_rng: Optional[RngStream] = None
) -> EpisodeRecord:
    """
    Reset `env` and roll it out for the full horizon.

    Args:
        env (RisEnvironment): Environment to drive; reset first.
        decide: Maps (observation, rng) to an `Action`.
        phase_selector: Chooses the WPT and data phases per slot.
        rng (np.random.Generator): Exploration and phase-selection draws.
        env_rng (Optional[RngStream]): Re-seeds the environment's fading.

    Returns:
        EpisodeRecord: The full rollout.
    """
    obs = env.reset(env_rng)
    record = EpisodeRecord(initial_state=env.state, observations=[obs])
    while not env.done:
        action = decide(obs, rng)
        outcome = env.step(
            action, phase_selector=phase_selector, selector_rng=rng
        )
        obs = env.observation()
        record.actions.append(action)
        record.outcomes.append(outcome)
        record.observations.append(obs)
    logger.debug(
        f"Episode done: reward={record.cum_reward:.4f} "
        f"successes={record.success_count}/{len(record.outcomes)}"
    )
    return record


def trace_frame(record: EpisodeRecord, episode: Optional[int] = 0) -> pd.DataFrame:
    """
    Per-slot trajectory trace of an episode, one row per slot.
    """
    rows = list()
    for t, (action, outcome) in enumerate(zip(record.actions, record.outcomes)):
        r_a, r_e, r_p = outcome.reward_parts
        rows.append([
            t,
            outcome.next_state.uav_pos.x,
            outcome.next_state.uav_pos.y,
            action.delta,
            int(action.schedule),
            int(outcome.success),
            outcome.rate,
            outcome.energy_slot[0],
            outcome.energy_slot[1],
            r_a,
            r_e,
            r_p
        ])
    frame = pd.DataFrame(rows, columns=TRACE_COLUMNS)
    frame.insert(0, "episode", episode)
    return frame
