from .config import ScenarioConfig, load_config, load_profile, resolve_seed
from .channel import PhaseConfig, ChannelRealization
from .energy import IotdState, UavEnergyLedger, endurance_speed
from .environment import (
    Action,
    EnvState,
    EpisodeOverError,
    EpisodeRecord,
    RisEnvironment,
    StepOutcome,
    run_episode
)
