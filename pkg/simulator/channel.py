import numpy as np
from numbers import Number
from dataclasses import dataclass
from typing import Optional, Sequence
from utils.geometry import Position3, euclidean_distance, link_angles
from .config import ScenarioConfig


__all__ = [
    "PhaseConfig",
    "ChannelRealization",
    "steering_vector",
    "sample_direct",
    "sample_uav_ris",
    "sample_ris_iotd",
    "sample_realization",
    "composite_channel",
    "achievable_rate"
]


@dataclass(frozen=True, eq=False)
class PhaseConfig:
    """
    Quantized RIS configuration: one phase index in [0, 2^bits) per element,
    row-major over the (rows, cols) array.
    """
    indices: np.ndarray
    bits: int

    def __post_init__(self):
        indices = np.asarray(self.indices, dtype=np.int64).copy()
        if indices.ndim != 1:
            raise ValueError(f"Phase indices must be 1-D, got shape {indices.shape}")
        levels = 2 ** self.bits
        if np.any(indices < 0) or np.any(indices >= levels):
            raise ValueError(
                f"Phase indices must lie in [0, {levels}) for bits={self.bits}"
            )
        indices.setflags(write=False)
        object.__setattr__(self, "indices", indices)

    @property
    def levels(self) -> int:
        return 2 ** self.bits

    @property
    def phases(self) -> np.ndarray:
        return 2 * np.pi * self.indices / self.levels

    @property
    def coefficients(self) -> np.ndarray:
        return np.exp(1j * self.phases)

    @classmethod
    def from_phases(cls, phases: Sequence[float], bits: int) -> "PhaseConfig":
        """
        Nearest grid point for every continuous phase.
        """
        levels = 2 ** bits
        step = 2 * np.pi / levels
        indices = np.mod(np.round(np.asarray(phases) / step), levels)
        return cls(indices=indices.astype(np.int64), bits=bits)

    @classmethod
    def uniform(cls, n_elements: int, index: int, bits: int) -> "PhaseConfig":
        return cls(indices=np.full(n_elements, index, dtype=np.int64), bits=bits)

    @classmethod
    def random(
            cls,
            n_elements: int,
            bits: int,
            rng: np.random.Generator
    ) -> "PhaseConfig":
        return cls(
            indices=rng.integers(0, 2 ** bits, size=n_elements),
            bits=bits
        )


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """
    One slot's channels.

    Attributes:
        h_ud (np.ndarray): (N,) direct UAV-IoTD coefficients.
        h_ur (np.ndarray): (M,) UAV-RIS coefficients.
        h_rd (np.ndarray): (N, M) RIS-IoTD coefficients.
    """
    h_ud: np.ndarray
    h_ur: np.ndarray
    h_rd: np.ndarray

    def __post_init__(self):
        h_ud = np.asarray(self.h_ud, dtype=np.complex128)
        h_ur = np.asarray(self.h_ur, dtype=np.complex128)
        h_rd = np.asarray(self.h_rd, dtype=np.complex128)
        if h_ud.ndim != 1 or h_ur.ndim != 1 or h_rd.ndim != 2:
            raise ValueError("Expected h_ud (N,), h_ur (M,), h_rd (N, M)")
        if h_rd.shape != (h_ud.shape[0], h_ur.shape[0]):
            raise ValueError(
                f"h_rd shape {h_rd.shape} inconsistent with "
                f"N={h_ud.shape[0]}, M={h_ur.shape[0]}"
            )
        if not (np.all(np.isfinite(h_ud)) and np.all(np.isfinite(h_ur))
                and np.all(np.isfinite(h_rd))):
            raise ValueError("Channel coefficients must be finite")
        object.__setattr__(self, "h_ud", h_ud)
        object.__setattr__(self, "h_ur", h_ur)
        object.__setattr__(self, "h_rd", h_rd)

    @property
    def n_iotds(self) -> int:
        return self.h_ud.shape[0]

    @property
    def n_elements(self) -> int:
        return self.h_ur.shape[0]

    def reflected_terms(self, iotd_index: int) -> np.ndarray:
        """
        Per-element products h_rd[n, m] * h_ur[m], before the phase rotation.
        """
        return self.h_rd[iotd_index] * self.h_ur


def steering_vector(
        theta: Number,
        xi: Number,
        rows: int,
        cols: int,
        row_spacing: Number,
        col_spacing: Number,
        wavelength: Number
) -> np.ndarray:
    """
    Planar-array response: Kronecker product of the row and column
    progressions exp(-j 2 pi m d sin(theta) cos(xi) / lambda) over rows and
    the same with sin(xi) over columns.

    Returns:
        np.ndarray: Unit-modulus complex vector of length rows * cols.
    """
    if rows < 1 or cols < 1:
        raise ValueError(f"Array sizes must be >= 1, got {rows}x{cols}")
    row_phase = 2 * np.pi * row_spacing * np.sin(theta) * np.cos(xi) / wavelength
    col_phase = 2 * np.pi * col_spacing * np.sin(theta) * np.sin(xi) / wavelength
    row_vec = np.exp(-1j * row_phase * np.arange(rows))
    col_vec = np.exp(-1j * col_phase * np.arange(cols))
    return np.kron(row_vec, col_vec)


def _complex_normal(rng: np.random.Generator, size=None) -> np.ndarray:
    # CN(0, 1): unit total variance split between the two quadratures.
    return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / np.sqrt(2)


def _rician_weights(factor: float):
    if np.isinf(factor):
        return 1.0, 0.0
    return np.sqrt(factor / (factor + 1)), np.sqrt(1 / (factor + 1))


def sample_direct(
        uav: Position3,
        iotd: Position3,
        cfg: ScenarioConfig,
        rng: np.random.Generator,
        rician_factor: Optional[float] = None
) -> complex:
    """
    Rician UAV-IoTD coefficient.

    Args:
        rician_factor (Optional[float]): Overrides `cfg.rician_direct`;
            `np.inf` gives the pure line-of-sight channel.
    """
    distance = euclidean_distance(uav, iotd)
    if distance == 0:
        raise ValueError("UAV and IoTD positions coincide")
    factor = cfg.rician_direct if rician_factor is None else rician_factor
    los_w, nlos_w = _rician_weights(factor)
    scale = np.sqrt(cfg.ref_gain / distance ** cfg.pathloss_direct)
    los = np.exp(-2j * np.pi * distance / cfg.wavelength)
    nlos = _complex_normal(rng) if nlos_w > 0 else 0.0
    return complex(scale * (los_w * los + nlos_w * nlos))


def sample_uav_ris(
        uav: Position3,
        ris: Position3,
        cfg: ScenarioConfig
) -> np.ndarray:
    """
    Deterministic line-of-sight UAV-RIS vector; angles of arrival at the RIS.
    """
    distance = euclidean_distance(uav, ris)
    if distance == 0:
        raise ValueError("UAV and RIS positions coincide")
    theta, xi = link_angles(ris, uav)
    scale = np.sqrt(cfg.ref_gain / distance ** cfg.pathloss_uav_ris)
    return scale * steering_vector(
        theta=theta,
        xi=xi,
        rows=cfg.ris_rows,
        cols=cfg.ris_cols,
        row_spacing=cfg.ris_row_spacing,
        col_spacing=cfg.ris_col_spacing,
        wavelength=cfg.wavelength
    )


def sample_ris_iotd(
        ris: Position3,
        iotd: Position3,
        cfg: ScenarioConfig,
        rng: np.random.Generator,
        rician_factor: Optional[float] = None
) -> np.ndarray:
    """
    Rician RIS-IoTD vector; angles of departure from the RIS and i.i.d.
    CN(0, 1) scattering per element.
    """
    distance = euclidean_distance(ris, iotd)
    if distance == 0:
        raise ValueError("RIS and IoTD positions coincide")
    factor = cfg.rician_ris_iotd if rician_factor is None else rician_factor
    los_w, nlos_w = _rician_weights(factor)
    theta, xi = link_angles(ris, iotd)
    scale = np.sqrt(cfg.ref_gain / distance ** cfg.pathloss_ris_iotd)
    los = steering_vector(
        theta=theta,
        xi=xi,
        rows=cfg.ris_rows,
        cols=cfg.ris_cols,
        row_spacing=cfg.ris_row_spacing,
        col_spacing=cfg.ris_col_spacing,
        wavelength=cfg.wavelength
    )
    if nlos_w > 0:
        nlos = _complex_normal(rng, size=cfg.n_elements)
    else:
        nlos = np.zeros(cfg.n_elements, dtype=np.complex128)
    return scale * (los_w * los + nlos_w * nlos)


def sample_realization(
        uav: Position3,
        cfg: ScenarioConfig,
        rng: np.random.Generator
) -> ChannelRealization:
    """
    Block-fading draw of every link for the current UAV position.
    """
    h_ud = np.array([
        sample_direct(uav=uav, iotd=iotd, cfg=cfg, rng=rng)
        for iotd in cfg.iotd_positions
    ])
    h_ur = sample_uav_ris(uav=uav, ris=cfg.ris_position, cfg=cfg)
    h_rd = np.stack([
        sample_ris_iotd(ris=cfg.ris_position, iotd=iotd, cfg=cfg, rng=rng)
        for iotd in cfg.iotd_positions
    ])
    return ChannelRealization(h_ud=h_ud, h_ur=h_ur, h_rd=h_rd)


def composite_channel(
        real: ChannelRealization,
        phases: PhaseConfig,
        iotd_index: int
) -> complex:
    """
    h_ud[n] + sum_m h_rd[n, m] exp(j phi_m) h_ur[m].
    """
    if phases.indices.shape[0] != real.n_elements:
        raise ValueError(
            f"PhaseConfig has {phases.indices.shape[0]} elements, "
            f"realization has {real.n_elements}"
        )
    reflected = np.sum(real.reflected_terms(iotd_index) * phases.coefficients)
    return complex(real.h_ud[iotd_index] + reflected)


def achievable_rate(
        composite: complex,
        tx_power: Number,
        noise: Number
) -> float:
    """
    log2(1 + P |H|^2 / sigma^2), in normalized bits.
    """
    if noise <= 0:
        raise ValueError(f"Noise power must be positive, got {noise}")
    return float(np.log2(1 + tx_power * abs(composite) ** 2 / noise))
