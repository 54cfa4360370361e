import numpy as np
from enum import Enum
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple, Union
from utils.log import get_logger
from simulator.config import ScenarioConfig
from simulator.channel import (
    ChannelRealization,
    PhaseConfig,
    achievable_rate,
    composite_channel
)
from simulator.energy import harvested_energy


__all__ = [
    "Objective",
    "AoRisConfig",
    "CoordinateUpdate",
    "optimize_phases",
    "objective_value",
    "brute_force_phases",
    "fixed_phases",
    "ao_ris_selector",
    "fixed_selector",
    "random_selector",
    "BRUTE_FORCE_CAP"
]


logger = get_logger(__name__)

BRUTE_FORCE_CAP = 2 ** 20
# Configurations scored per vectorized chunk by the exhaustive search.
ENUMERATION_CHUNK = 2 ** 14


class Objective(Enum):
    HARVEST_ENERGY = "harvest_energy"
    DATA_RATE = "data_rate"


@dataclass(frozen=True)
class AoRisConfig:
    """
    Stopping rule of the coordinate ascent.

    Attributes:
        max_iters (int): Upper bound on full sweeps over the elements.
        tolerance (float): Stop once a sweep raises |H|^2 by no more than
            this fraction of its starting value; 0 runs every sweep.
    """
    max_iters: int = 3
    tolerance: float = 0.0

    def __post_init__(self):
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ValueError(f"AoRisConfig.max_iters must be >= 1, got {self.max_iters}")
        if self.tolerance < 0:
            raise ValueError(f"AoRisConfig.tolerance must be >= 0, got {self.tolerance}")
        object.__setattr__(self, "max_iters", int(self.max_iters))


@dataclass(frozen=True)
class CoordinateUpdate:
    """
    One single-element update of the coordinate ascent, for instrumentation.
    """
    sweep: int
    element: int
    before: float
    after: float


def _candidates(bits: int) -> np.ndarray:
    levels = 2 ** bits
    return np.exp(2j * np.pi * np.arange(levels) / levels)


def optimize_phases(
        real: ChannelRealization,
        iotd_index: int,
        obj: Objective,
        cfg: ScenarioConfig,
        rng: np.random.Generator,
        settings: Optional[Union[int, AoRisConfig]] = None,
        trace: Optional[List[CoordinateUpdate]] = None
) -> PhaseConfig:
    """
    Alternating optimization of the quantized RIS phases for one IoTD.

    Starts from uniformly random phase indices and sweeps the elements in
    row-major order. Each element takes the grid phase maximizing |H|^2 with
    all other elements fixed; ties go to the lowest index. Both objectives
    are increasing in |H|^2, so `obj` does not change the result and only
    matters to callers reporting `objective_value`.

    Args:
        real (ChannelRealization): Slot channels.
        iotd_index (int): Target IoTD.
        obj (Objective): Sub-phase objective.
        cfg (ScenarioConfig): Scenario; provides the quantization bits.
        rng (np.random.Generator): Source of the random initial phases.
        settings (Optional[Union[int, AoRisConfig]]): Stopping rule; a bare
            integer is the sweep count.
        trace (Optional[List[CoordinateUpdate]]): Receives every
            single-element update when given.

    Returns:
        PhaseConfig: The final configuration.
    """
    settings = _as_settings(settings)
    if real.n_elements != cfg.n_elements:
        raise ValueError(
            f"Realization has {real.n_elements} elements, config {cfg.n_elements}"
        )
    if not 0 <= iotd_index < real.n_iotds:
        raise ValueError(f"iotd_index={iotd_index} outside [0, {real.n_iotds})")
    Objective(obj)
    coefficients = _candidates(cfg.phase_bits)
    terms = real.reflected_terms(iotd_index)
    direct = real.h_ud[iotd_index]
    indices = rng.integers(0, cfg.phase_levels, size=cfg.n_elements)

    for sweep in range(settings.max_iters):
        # Fresh sum each sweep keeps the incremental updates from drifting.
        total = direct + np.sum(terms * coefficients[indices])
        start = abs(total) ** 2
        for m in range(cfg.n_elements):
            rest = total - terms[m] * coefficients[indices[m]]
            values = np.abs(rest + terms[m] * coefficients) ** 2
            best = int(np.argmax(values))
            if trace is not None:
                update = CoordinateUpdate(
                    sweep=sweep,
                    element=m,
                    before=float(values[indices[m]]),
                    after=float(values[best])
                )
                assert update.after >= update.before, \
                    f"Coordinate update decreased |H|^2 at element {m}"
                trace.append(update)
            indices[m] = best
            total = rest + terms[m] * coefficients[best]
        gain = abs(total) ** 2
        logger.debug(f"AO-RIS sweep {sweep}: |H|^2={gain:.6e}")
        if settings.tolerance > 0 and gain - start <= settings.tolerance * start:
            break
    return PhaseConfig(indices=indices, bits=cfg.phase_bits)


def _as_settings(settings: Optional[Union[int, AoRisConfig]]) -> AoRisConfig:
    if settings is None:
        return AoRisConfig()
    if isinstance(settings, AoRisConfig):
        return settings
    return AoRisConfig(max_iters=settings)


def objective_value(
        real: ChannelRealization,
        phases: PhaseConfig,
        iotd_index: int,
        obj: Objective,
        delta: float,
        cfg: ScenarioConfig
) -> float:
    """
    Harvested energy (joules) or achievable rate (normalized bits) of the
    target IoTD under the given phases.
    """
    composite = composite_channel(real, phases, iotd_index)
    if Objective(obj) is Objective.HARVEST_ENERGY:
        return harvested_energy(delta, composite, cfg)
    return achievable_rate(composite, cfg.iotd_tx_power, cfg.noise_power)


def brute_force_phases(
        real: ChannelRealization,
        iotd_index: int,
        cfg: ScenarioConfig,
        cap: Optional[int] = BRUTE_FORCE_CAP
) -> Tuple[PhaseConfig, float]:
    """
    Exhaustive search over every quantized configuration.

    Returns:
        Tuple[PhaseConfig, float]: The global maximizer of |H|^2 (lowest
            enumeration code on ties) and its |H|^2.

    Raises:
        ValueError: If 2^(bits * elements) exceeds `cap`.
    """
    levels = cfg.phase_levels
    n_elements = cfg.n_elements
    total = levels ** n_elements
    if total > cap:
        raise ValueError(
            f"Exhaustive search over {levels}^{n_elements} configurations "
            f"exceeds the cap of {cap}; reduce the RIS size or phase_bits"
        )
    coefficients = _candidates(cfg.phase_bits)
    terms = real.reflected_terms(iotd_index)
    direct = real.h_ud[iotd_index]
    # First element is the most significant digit of the enumeration code.
    place = levels ** np.arange(n_elements - 1, -1, -1)
    best_value, best_digits = -np.inf, None
    for start in range(0, total, ENUMERATION_CHUNK):
        codes = np.arange(start, min(start + ENUMERATION_CHUNK, total))
        digits = (codes[:, None] // place[None, :]) % levels
        values = np.abs(direct + np.sum(coefficients[digits] * terms, axis=1)) ** 2
        idx = int(np.argmax(values))
        if values[idx] > best_value:
            best_value, best_digits = float(values[idx]), digits[idx]
    return PhaseConfig(indices=best_digits, bits=cfg.phase_bits), best_value


def fixed_phases(cfg: ScenarioConfig, phase: Optional[float] = np.pi / 2) -> PhaseConfig:
    """
    Every element at the grid point nearest to `phase`.
    """
    return PhaseConfig.from_phases(np.full(cfg.n_elements, phase), cfg.phase_bits)


PhaseSelector = Callable[
    [ChannelRealization, int, np.random.Generator],
    Tuple[PhaseConfig, PhaseConfig]
]


def ao_ris_selector(
        cfg: ScenarioConfig,
        settings: Optional[Union[int, AoRisConfig]] = None
) -> PhaseSelector:
    """
    Two AO-RIS runs per slot for the scheduled IoTD: harvest energy for the
    WPT sub-slot, then data rate for the data sub-slot.
    """
    settings = _as_settings(settings)

    def select(real, scheduled, rng):
        wpt = optimize_phases(
            real, scheduled, Objective.HARVEST_ENERGY, cfg, rng, settings
        )
        data = optimize_phases(
            real, scheduled, Objective.DATA_RATE, cfg, rng, settings
        )
        return wpt, data
    return select


def fixed_selector(cfg: ScenarioConfig) -> PhaseSelector:
    phases = fixed_phases(cfg)

    def select(real, scheduled, rng):
        return phases, phases
    return select


def random_selector(cfg: ScenarioConfig) -> PhaseSelector:
    def select(real, scheduled, rng):
        return (
            PhaseConfig.random(cfg.n_elements, cfg.phase_bits, rng),
            PhaseConfig.random(cfg.n_elements, cfg.phase_bits, rng)
        )
    return select
