import json
import numpy as np
import pandas as pd
from pathlib import Path
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Iterable, Optional, Sequence, Tuple, Union
from utils.log import get_logger
from simulator.environment import EpisodeRecord, trace_frame


__all__ = [
    "EpisodeMetrics",
    "episodes_frame",
    "history_frame",
    "aggregate",
    "write_csv",
    "read_csv",
    "EPISODE_COLUMNS",
    "AGGREGATE_COLUMNS"
]


logger = get_logger(__name__)

EPISODE_COLUMNS = ["method", "episode", "avg_aoi", "avg_energy", "cum_reward", "success_count"]
AGGREGATE_COLUMNS = [
    "parameter", "value", "repetitions",
    "avg_aoi_mean", "avg_aoi_std", "avg_energy_mean", "avg_energy_std"
]


@dataclass(frozen=True)
class EpisodeMetrics:
    """
    Per-episode summary: AoI averaged over slots and IoTDs, UAV energy per
    slot, cumulative reward and the number of successful uploads.
    """
    avg_aoi: float
    avg_energy: float
    cum_reward: float
    success_count: int
    trace: Optional[pd.DataFrame] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not self.avg_aoi >= 1:
            raise ValueError(f"EpisodeMetrics.avg_aoi must be >= 1, got {self.avg_aoi}")
        if not self.avg_energy >= 0:
            raise ValueError(f"EpisodeMetrics.avg_energy must be >= 0, got {self.avg_energy}")

    @classmethod
    def from_record(cls, record: EpisodeRecord, episode: Optional[int] = 0) -> "EpisodeMetrics":
        return cls(
            avg_aoi=record.avg_aoi,
            avg_energy=record.avg_energy,
            cum_reward=record.cum_reward,
            success_count=record.success_count,
            trace=trace_frame(record, episode)
        )


def episodes_frame(metrics: Sequence[EpisodeMetrics], method: str) -> pd.DataFrame:
    rows = [
        [method, idx, m.avg_aoi, m.avg_energy, m.cum_reward, m.success_count]
        for idx, m in enumerate(metrics)
    ]
    return pd.DataFrame(rows, columns=EPISODE_COLUMNS)


def history_frame(history: Iterable[Any]) -> pd.DataFrame:
    """
    One row per generation from `GenerationMetrics` records.
    """
    rows = [asdict(h) for h in history]
    if not rows:
        return pd.DataFrame(columns=["generation"])
    return pd.DataFrame(rows)


def aggregate(
        raw: pd.DataFrame,
        by: Optional[Sequence[str]] = ("parameter", "value"),
        columns: Optional[Sequence[str]] = ("avg_aoi", "avg_energy")
) -> pd.DataFrame:
    """
    Mean and population standard deviation (ddof=0) of `columns` per group.
    """
    by, columns = list(by), list(columns)
    grouped = raw.groupby(by, sort=False)
    result = grouped.size().rename("repetitions").to_frame()
    for column in columns:
        result[f"{column}_mean"] = grouped[column].mean()
        result[f"{column}_std"] = grouped[column].std(ddof=0)
    return result.reset_index()


def write_csv(
        frame: pd.DataFrame,
        dst_path: Union[str, Path],
        kind: str,
        config: Optional[Dict[str, Any]] = None
) -> Path:
    """
    Write a CSV preceded by `# kind:` and `# config:` provenance lines.
    """
    dst_path = Path(dst_path).expanduser().absolute()
    try:
        dst_path.parent.mkdir(parents=True, exist_ok=True)
        with open(dst_path, mode="w", encoding="utf-8", newline="") as dst:
            dst.write(f"# kind: {kind}\n")
            dst.write(f"# config: {json.dumps(config or dict(), sort_keys=True, default=str)}\n")
            frame.to_csv(dst, index=False)
    except OSError as exc:
        raise RuntimeError(f"Unable to write {dst_path}: {exc}")
    logger.info(f"Wrote {len(frame)} row(s) to {dst_path}")
    return dst_path


def read_header(src_path: Union[str, Path]) -> Dict[str, Any]:
    header = dict()
    with open(src_path, mode="r", encoding="utf-8") as src:
        for line in src:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].strip().partition(":")
            value = value.strip()
            header[key.strip()] = json.loads(value) if key.strip() == "config" else value
    return header


def read_csv(
        src_path: Union[str, Path],
        numeric: Optional[Sequence[str]] = None,
        required: Optional[Sequence[str]] = None
) -> Tuple[pd.DataFrame, Dict[str, Any]]:
    """
    Re-parse a CSV written by `write_csv`.

    Args:
        src_path (Union[str, Path]): CSV path.
        numeric (Optional[Sequence[str]]): Columns that must parse as numbers.
        required (Optional[Sequence[str]]): Columns that must be present.

    Returns:
        Tuple[pd.DataFrame, Dict[str, Any]]: The table and its provenance
            header (`kind`, `config`).

    Raises:
        ValueError: On missing columns or a malformed row, naming the row.
    """
    src_path = Path(src_path).expanduser().absolute()
    try:
        header = read_header(src_path)
        frame = pd.read_csv(src_path, comment="#")
    except pd.errors.EmptyDataError:
        frame = pd.DataFrame(columns=list(required or list()))
    except (pd.errors.ParserError, json.JSONDecodeError) as exc:
        raise ValueError(f"Malformed CSV {src_path}: {exc}")
    except OSError as exc:
        raise RuntimeError(f"Unable to read {src_path}: {exc}")
    missing = [c for c in (required or list()) if c not in frame.columns]
    if missing:
        raise ValueError(f"{src_path}: missing column(s) {missing}")
    for column in (numeric or list()):
        if column not in frame.columns:
            continue
        parsed = pd.to_numeric(frame[column], errors="coerce")
        bad = parsed.isna() & frame[column].notna()
        if bad.any():
            row = int(np.flatnonzero(bad.to_numpy())[0])
            raise ValueError(
                f"{src_path}: malformed value {frame[column].iloc[row]!r} in "
                f"column `{column}` at data row {row + 1}"
            )
        frame[column] = parsed
    return frame, header
