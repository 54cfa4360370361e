import numpy as np
from numbers import Number


__all__ = ["dbm_to_watt", "watt_to_dbm"]


def dbm_to_watt(p: Number) -> float:
    if not np.isfinite(p):
        raise ValueError(f"Power in dBm must be finite, got {p}")
    return float(10 ** (p / 10) / 1000)


def watt_to_dbm(p: Number) -> float:
    if p <= 0:
        raise ValueError(f"Power in watts must be positive, got {p}")
    return float(10 * np.log10(p * 1000))
