import os
import yaml
import numpy as np
from pathlib import Path
from warnings import warn
from dataclasses import asdict, dataclass, fields, replace
from typing import Any, Dict, Optional, Tuple, Union
from utils.geometry import Position3
from utils.units import dbm_to_watt


__all__ = [
    "ScenarioConfig",
    "load_profile",
    "load_config",
    "resolve_seed",
    "SEED_ENV_VAR",
    "SPEED_OF_LIGHT"
]


SEED_ENV_VAR = "RIS_UAV_SEED"
SPEED_OF_LIGHT = 299_792_458.0
DEFAULT_SEED = 0

# Keys accepted in dBm by the profile loader, mapped to the watt field.
DBM_ALIASES = {
    "uav_tx_power_dbm": "uav_tx_power",
    "iotd_tx_power_dbm": "iotd_tx_power",
    "noise_power_dbm": "noise_power"
}
POSITION_FIELDS = {"ris_position", "uav_start"}


@dataclass(frozen=True)
class ScenarioConfig:
    """
    Every physical, channel, energy and task constant of a scenario.

    Powers are stored in watts; dBm only appears at the profile boundary.
    Rates and `min_data` are normalized (bits/s/Hz and bits/Hz per slot).
    Derived values (wavelength, element spacing, IoTD layout, UAV start) are
    resolved once in `__post_init__`.
    """
    # area and timing
    x_min: float = 0.0
    x_max: float = 400.0
    y_min: float = 0.0
    y_max: float = 400.0
    n_iotds: int = 10
    horizon: int = 120
    slot_len: float = 1.0
    # RIS
    ris_rows: int = 8
    ris_cols: int = 8
    ris_row_spacing: Optional[float] = None
    ris_col_spacing: Optional[float] = None
    phase_bits: int = 2
    ris_position: Position3 = Position3(0.0, 200.0, 20.0)
    # UAV
    uav_altitude: float = 50.0
    max_step_x: float = 20.0
    max_step_y: float = 20.0
    uav_tx_power: float = 1.0
    uav_start: Optional[Position3] = None
    # IoTDs
    iotd_tx_power: float = 1e-6
    buffer_capacity: float = 5e-6
    initial_buffer_fraction: float = 0.5
    iotd_positions: Optional[Tuple[Position3, ...]] = None
    layout_seed: int = 2024
    # channel
    ref_gain: float = 1e-3
    wavelength: Optional[float] = 0.125
    carrier_frequency: Optional[float] = None
    pathloss_direct: float = 3.0
    pathloss_uav_ris: float = 2.2
    pathloss_ris_iotd: float = 2.8
    rician_direct: float = 1.0
    rician_ris_iotd: float = 1.0
    noise_power: float = 1e-13
    # energy
    harvest_efficiency: float = 0.8
    blade_profile_power: float = 79.85
    induced_power: float = 88.63
    tip_speed: float = 120.0
    hover_induced_velocity: float = 4.03
    drag_ratio: float = 0.6
    air_density: float = 1.225
    rotor_solidity: float = 0.05
    rotor_disc_area: float = 0.503
    # task and reward
    min_data: float = 3.0
    energy_scale: float = 1000.0
    boundary_penalty: float = -100.0
    discount: float = 0.99
    reward_aoi_growth: bool = False

    def __post_init__(self):
        if self.carrier_frequency is not None:
            if self.carrier_frequency <= 0:
                raise ValueError(
                    f"carrier_frequency must be positive, got {self.carrier_frequency}"
                )
            object.__setattr__(
                self, "wavelength", SPEED_OF_LIGHT / self.carrier_frequency
            )
        if self.wavelength is None or self.wavelength <= 0:
            raise ValueError(f"wavelength must be positive, got {self.wavelength}")
        if self.ris_row_spacing is None:
            object.__setattr__(self, "ris_row_spacing", self.wavelength / 2)
        if self.ris_col_spacing is None:
            object.__setattr__(self, "ris_col_spacing", self.wavelength / 2)
        self._validate_scalars()
        if self.iotd_positions is None:
            rng = np.random.default_rng(self.layout_seed)
            xs = rng.uniform(self.x_min, self.x_max, size=self.n_iotds)
            ys = rng.uniform(self.y_min, self.y_max, size=self.n_iotds)
            object.__setattr__(
                self,
                "iotd_positions",
                tuple(Position3(x, y, 0.0) for x, y in zip(xs, ys))
            )
        else:
            object.__setattr__(
                self, "iotd_positions", tuple(self.iotd_positions)
            )
        if self.uav_start is None:
            object.__setattr__(
                self,
                "uav_start",
                Position3(
                    (self.x_min + self.x_max) / 2,
                    (self.y_min + self.y_max) / 2,
                    self.uav_altitude
                )
            )
        self._validate_layout()

    def _validate_scalars(self) -> None:
        checks = (
            ("x_max", self.x_min < self.x_max, "x_min < x_max"),
            ("y_max", self.y_min < self.y_max, "y_min < y_max"),
            ("n_iotds", self.n_iotds >= 1, "n_iotds >= 1"),
            ("horizon", self.horizon >= 1, "horizon >= 1"),
            ("slot_len", self.slot_len > 0, "slot_len > 0"),
            ("harvest_efficiency", 0 < self.harvest_efficiency < 1,
             "0 < harvest_efficiency < 1"),
            ("buffer_capacity", self.buffer_capacity > 0, "buffer_capacity > 0"),
            ("phase_bits", self.phase_bits >= 1, "phase_bits >= 1"),
            ("ris_rows", self.ris_rows >= 1, "ris_rows >= 1"),
            ("ris_cols", self.ris_cols >= 1, "ris_cols >= 1"),
            ("ris_row_spacing", self.ris_row_spacing > 0, "ris_row_spacing > 0"),
            ("ris_col_spacing", self.ris_col_spacing > 0, "ris_col_spacing > 0"),
            ("uav_altitude", self.uav_altitude >= 0, "uav_altitude >= 0"),
            ("max_step_x", self.max_step_x >= 0, "max_step_x >= 0"),
            ("max_step_y", self.max_step_y >= 0, "max_step_y >= 0"),
            ("uav_tx_power", self.uav_tx_power > 0, "uav_tx_power > 0"),
            ("iotd_tx_power", self.iotd_tx_power > 0, "iotd_tx_power > 0"),
            ("noise_power", self.noise_power > 0, "noise_power > 0"),
            ("ref_gain", self.ref_gain > 0, "ref_gain > 0"),
            ("rician_direct", self.rician_direct >= 0, "rician_direct >= 0"),
            ("rician_ris_iotd", self.rician_ris_iotd >= 0, "rician_ris_iotd >= 0"),
            ("initial_buffer_fraction", 0 <= self.initial_buffer_fraction <= 1,
             "0 <= initial_buffer_fraction <= 1"),
            ("min_data", self.min_data >= 0, "min_data >= 0"),
            ("energy_scale", self.energy_scale > 0, "energy_scale > 0"),
            ("boundary_penalty", self.boundary_penalty <= 0,
             "boundary_penalty <= 0"),
            ("discount", 0 <= self.discount <= 1, "0 <= discount <= 1"),
            ("tip_speed", self.tip_speed > 0, "tip_speed > 0"),
            ("hover_induced_velocity", self.hover_induced_velocity > 0,
             "hover_induced_velocity > 0")
        )
        for name, ok, rule in checks:
            if not ok:
                raise ValueError(
                    f"Invalid ScenarioConfig.{name}={getattr(self, name)!r}: "
                    f"expected {rule}"
                )

    def _validate_layout(self) -> None:
        if len(self.iotd_positions) != self.n_iotds:
            raise ValueError(
                f"Invalid ScenarioConfig.iotd_positions: {len(self.iotd_positions)} "
                f"positions given for n_iotds={self.n_iotds}"
            )
        for idx, pos in enumerate(self.iotd_positions):
            if not self.contains(pos):
                raise ValueError(
                    f"Invalid ScenarioConfig.iotd_positions[{idx}]={pos}: "
                    f"outside the area {self.bbox}"
                )
        if not self.contains(self.uav_start):
            raise ValueError(
                f"Invalid ScenarioConfig.uav_start={self.uav_start}: "
                f"outside the area {self.bbox}"
            )

    @property
    def bbox(self) -> Tuple[float, float, float, float]:
        return self.x_min, self.y_min, self.x_max, self.y_max

    @property
    def n_elements(self) -> int:
        return self.ris_rows * self.ris_cols

    @property
    def phase_levels(self) -> int:
        return 2 ** self.phase_bits

    @property
    def obs_dim(self) -> int:
        return 2 + 2 * self.n_iotds

    @property
    def initial_buffer(self) -> float:
        return self.initial_buffer_fraction * self.buffer_capacity

    def contains(self, pos: Position3) -> bool:
        return (self.x_min <= pos.x <= self.x_max) and \
            (self.y_min <= pos.y <= self.y_max)

    def with_overrides(self, **overrides: Any) -> "ScenarioConfig":
        """
        Copy with some fields replaced; already resolved derived fields
        (spacing, layout, start) are carried over unchanged.
        """
        unknown = set(overrides) - {f.name for f in fields(self)}
        if unknown:
            raise ValueError(f"Unknown ScenarioConfig field(s): {sorted(unknown)}")
        return replace(self, **overrides)

    def to_dict(self) -> Dict[str, Any]:
        """
        JSON-friendly resolved mapping (positions as [x, y, z] lists).
        """
        resolved = asdict(self)
        resolved["ris_position"] = list(self.ris_position.as_array())
        resolved["uav_start"] = list(self.uav_start.as_array())
        resolved["iotd_positions"] = [
            list(p.as_array()) for p in self.iotd_positions
        ]
        return resolved

    def nadir_snr(self) -> float:
        """
        Direct-link SNR with the UAV hovering right above an IoTD (LoS power).
        """
        gain = self.ref_gain / self.uav_altitude ** self.pathloss_direct \
            if self.uav_altitude > 0 else np.inf
        return self.iotd_tx_power * gain / self.noise_power


def _as_position(key: str, value: Any) -> Position3:
    if isinstance(value, Position3):
        return value
    if not isinstance(value, (list, tuple)) or len(value) not in (2, 3):
        raise ValueError(f"Config key `{key}` expects [x, y, z], got {value!r}")
    return Position3(*value)


def _normalize_mapping(mapping: Dict[str, Any]) -> Dict[str, Any]:
    known = {f.name for f in fields(ScenarioConfig)}
    kwargs = dict()
    for key, value in mapping.items():
        if key in DBM_ALIASES:
            target = DBM_ALIASES[key]
            if target in mapping:
                raise ValueError(
                    f"Config keys `{key}` and `{target}` are mutually exclusive"
                )
            kwargs[target] = dbm_to_watt(float(value))
        elif key in POSITION_FIELDS:
            kwargs[key] = None if value is None else _as_position(key, value)
        elif key == "iotd_positions":
            kwargs[key] = None if value is None else tuple(
                _as_position(f"{key}[{i}]", p) for i, p in enumerate(value)
            )
        elif key in known:
            kwargs[key] = value
        else:
            raise ValueError(f"Unknown config key `{key}`")
    return kwargs


def load_profile(
        src_path: Union[str, Path],
        overrides: Optional[Dict[str, Any]] = None
) -> Tuple[ScenarioConfig, Dict[str, Any]]:
    """
    Load a YAML profile into a scenario config and a raw training mapping.

    Args:
        src_path (Union[str, Path]): YAML file; flat scenario keys plus an
            optional `training:` mapping.
        overrides (Optional[Dict[str, Any]]): Scenario keys applied on top of
            the file (same grammar, dBm aliases included).

    Returns:
        Tuple[ScenarioConfig, Dict[str, Any]]: The validated scenario and the
            unvalidated `training` section (empty when absent).
    """
    src_path = Path(src_path).expanduser().absolute()
    try:
        with open(src_path, mode="r", encoding="utf-8") as src:
            mapping = yaml.safe_load(src) or dict()
    except (OSError, yaml.YAMLError) as exc:
        raise RuntimeError(f"Unable to read config {src_path}: {exc}")
    if not isinstance(mapping, dict):
        raise ValueError(f"Config {src_path} must be a mapping at top level")
    training = mapping.pop("training", None) or dict()
    if overrides:
        mapping.update(overrides)
    cfg = ScenarioConfig(**_normalize_mapping(mapping))
    _warn_degenerate(cfg, src_path)
    return cfg, dict(training)


def load_config(
        src_path: Optional[Union[str, Path]] = None,
        overrides: Optional[Dict[str, Any]] = None
) -> ScenarioConfig:
    if src_path is None:
        return ScenarioConfig(**_normalize_mapping(overrides or dict()))
    return load_profile(src_path, overrides)[0]


def _warn_degenerate(cfg: ScenarioConfig, origin: Any) -> None:
    best_rate = cfg.slot_len * np.log2(1 + cfg.nadir_snr())
    if best_rate < cfg.min_data:
        warn(
            f"{origin}: even at nadir the direct link carries "
            f"{best_rate:.3g} < min_data={cfg.min_data} normalized bits per "
            "slot; uploads can only succeed through the RIS path"
        )


def resolve_seed(seed: Optional[int] = None) -> int:
    """
    Master seed: the environment variable wins, then `seed`, then the default.
    """
    env_value = os.environ.get(SEED_ENV_VAR, None)
    if env_value is not None and env_value.strip():
        try:
            return int(env_value)
        except ValueError:
            raise ValueError(f"{SEED_ENV_VAR}={env_value!r} is not an integer")
    return DEFAULT_SEED if seed is None else int(seed)
