import numpy as np
from numbers import Number
from dataclasses import dataclass
from typing import Sequence, Tuple
from scipy.optimize import minimize_scalar
from .config import ScenarioConfig


__all__ = [
    "IotdState",
    "UavEnergyLedger",
    "harvested_energy",
    "update_buffer",
    "charge_energy",
    "horizontal_velocity",
    "propulsion_power",
    "propulsion_energy",
    "total_energy",
    "update_aoi",
    "average_aoi",
    "endurance_speed"
]


@dataclass(frozen=True)
class IotdState:
    aoi: int
    buffer: float

    def __post_init__(self):
        if int(self.aoi) != self.aoi or self.aoi < 1:
            raise ValueError(f"IotdState.aoi must be an integer >= 1, got {self.aoi}")
        if not np.isfinite(self.buffer) or self.buffer < 0:
            raise ValueError(f"IotdState.buffer must be >= 0, got {self.buffer}")
        object.__setattr__(self, "aoi", int(self.aoi))
        object.__setattr__(self, "buffer", float(self.buffer))


@dataclass(frozen=True)
class UavEnergyLedger:
    """
    Cumulative UAV charging and propulsion energy of a run, in joules.
    """
    charge_j: float = 0.0
    propulsion_j: float = 0.0

    def __post_init__(self):
        if self.charge_j < 0 or self.propulsion_j < 0:
            raise ValueError(
                f"UavEnergyLedger totals must be non-negative, got "
                f"({self.charge_j}, {self.propulsion_j})"
            )

    @property
    def total_j(self) -> float:
        return self.charge_j + self.propulsion_j


def _check_delta(delta: Number, cfg: ScenarioConfig) -> None:
    if not 0 <= delta <= cfg.slot_len:
        raise ValueError(
            f"Charging time delta={delta} outside [0, {cfg.slot_len}]"
        )


def harvested_energy(
        delta: Number,
        composite: complex,
        cfg: ScenarioConfig
) -> float:
    """
    Linear harvesting model: delta * eta * P_U * |H|^2.

    This is the single place a non-linear harvester would plug in.
    """
    _check_delta(delta, cfg)
    return float(delta * cfg.harvest_efficiency * cfg.uav_tx_power * abs(composite) ** 2)


def update_buffer(
        state: IotdState,
        harvested: Number,
        cfg: ScenarioConfig
) -> IotdState:
    if harvested < 0:
        raise ValueError(f"Harvested energy must be >= 0, got {harvested}")
    return IotdState(
        aoi=state.aoi,
        buffer=min(cfg.buffer_capacity, state.buffer + harvested)
    )


def charge_energy(delta: Number, cfg: ScenarioConfig) -> float:
    _check_delta(delta, cfg)
    return float(cfg.uav_tx_power * delta)


def horizontal_velocity(ax: Number, ay: Number, t_d: Number) -> float:
    if t_d <= 0:
        raise ValueError(f"Slot length must be positive, got {t_d}")
    return float(np.hypot(ax, ay) / t_d)


def propulsion_power(v: Number, cfg: ScenarioConfig) -> float:
    """
    Rotary-wing power at horizontal speed `v`: blade profile, induced and
    parasite terms, in watts.
    """
    if v < 0:
        raise ValueError(f"Speed must be non-negative, got {v}")
    profile = cfg.blade_profile_power * (1 + 3 * v ** 2 / cfg.tip_speed ** 2)
    ratio = v ** 2 / (2 * cfg.hover_induced_velocity ** 2)
    # sqrt(1 + r^2) - r, with r = v^2 / (2 V_h^2)
    induced = cfg.induced_power * np.sqrt(np.sqrt(1 + ratio ** 2) - ratio)
    parasite = 0.5 * cfg.drag_ratio * cfg.air_density * cfg.rotor_solidity \
        * cfg.rotor_disc_area * v ** 3
    return float(profile + induced + parasite)


def propulsion_energy(v: Number, cfg: ScenarioConfig) -> float:
    return propulsion_power(v, cfg) * cfg.slot_len


def total_energy(
        ledger: UavEnergyLedger,
        e_c: Number,
        e_p: Number
) -> UavEnergyLedger:
    """
    Accumulate one slot's charging and propulsion energy.

    Returns:
        UavEnergyLedger: New ledger; the slot's E^U is `e_c + e_p`.
    """
    if e_c < 0 or e_p < 0:
        raise ValueError(f"Slot energies must be non-negative, got ({e_c}, {e_p})")
    return UavEnergyLedger(
        charge_j=ledger.charge_j + e_c,
        propulsion_j=ledger.propulsion_j + e_p
    )


def update_aoi(
        state: IotdState,
        scheduled: bool,
        delta: Number,
        rate: Number,
        cfg: ScenarioConfig
) -> Tuple[IotdState, bool]:
    """
    AoI transition of one IoTD for one slot.

    An upload succeeds when the IoTD is scheduled, the data sub-slot carries
    at least `min_data` normalized bits and the buffer covers the transmit
    energy (t_d - delta) * P_D. Success resets the AoI to 1 and spends that
    energy; anything else ages the IoTD by one slot.

    Returns:
        Tuple[IotdState, bool]: The next state and the success flag.
    """
    _check_delta(delta, cfg)
    tx_time = cfg.slot_len - delta
    tx_energy = tx_time * cfg.iotd_tx_power
    success = bool(
        scheduled
        and tx_time > 0
        and tx_time * rate >= cfg.min_data
        and tx_energy <= state.buffer
    )
    if not success:
        return IotdState(aoi=state.aoi + 1, buffer=state.buffer), False
    remaining = state.buffer - tx_energy
    assert remaining >= 0, "Upload succeeded with an insufficient buffer"
    return IotdState(aoi=1, buffer=remaining), True


def average_aoi(states: Sequence[IotdState]) -> float:
    if len(states) == 0:
        raise ValueError("Average AoI of an empty IoTD set is undefined")
    return float(np.mean([s.aoi for s in states]))


def endurance_speed(cfg: ScenarioConfig, v_max: Number = 100.0) -> float:
    """
    Maximum-endurance speed: the speed minimizing propulsion energy per meter.

    A coarse scan brackets the minimum of P(v) / v, which golden-section
    search then refines.
    """
    def energy_per_meter(v):
        return propulsion_power(v, cfg) / v

    grid = np.linspace(v_max / 200, v_max, 200)
    values = np.array([energy_per_meter(v) for v in grid])
    best = int(np.argmin(values))
    if best == 0 or best == len(grid) - 1:
        return float(grid[best])
    result = minimize_scalar(
        energy_per_meter,
        bracket=(grid[best - 1], grid[best], grid[best + 1]),
        method="golden",
        tol=1e-10
    )
    return float(result.x)
