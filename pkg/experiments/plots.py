import matplotlib
matplotlib.use("Agg")
import numpy as np
import pandas as pd
import matplotlib.pyplot as plt
from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple, Union
from utils.log import get_logger
from .metrics import EPISODE_COLUMNS, read_csv


__all__ = [
    "plot_training",
    "plot_methods",
    "plot_sweep",
    "plot_trace",
    "emit_plots",
    "PLOT_FORMAT"
]


logger = get_logger(__name__)

PLOT_FORMAT = "svg"

TRAINING_PANELS = (
    ("best_fitness", "Fitness (episode reward)"),
    ("avg_aoi", "Average AoI"),
    ("avg_energy", "UAV energy per slot (J)")
)
SWEEP_PANELS = (
    ("avg_aoi", "Average AoI"),
    ("avg_energy", "UAV energy per slot (J)")
)
TRACE_NUMERIC = ["slot", "x", "y", "delta", "scheduled", "rate"]
TRAINING_NUMERIC = [c for c, _ in TRAINING_PANELS] + ["generation"]
SWEEP_NUMERIC = ["value", "avg_aoi_mean", "avg_aoi_std", "avg_energy_mean", "avg_energy_std"]

Loaded = Tuple[pd.DataFrame, Dict[str, Any], Path]


def _label(header: Dict[str, Any], src_path: Path) -> str:
    training = header.get("config", dict()).get("training", dict())
    return training.get("variant", src_path.stem)


def plot_training(loaded: Sequence[Loaded]) -> plt.Figure:
    """
    Reward, AoI and energy against generation, one curve per training log.
    """
    fig, axes = plt.subplots(1, len(TRAINING_PANELS), figsize=(4 * len(TRAINING_PANELS), 3.2))
    for frame, header, src_path in loaded:
        if frame.empty:
            continue
        for ax, (column, _) in zip(axes, TRAINING_PANELS):
            ax.plot(frame["generation"], frame[column], label=_label(header, src_path))
    for ax, (_, title) in zip(axes, TRAINING_PANELS):
        ax.set_xlabel("Generation")
        ax.set_ylabel(title)
    if any(not frame.empty for frame, _, _ in loaded):
        axes[0].legend(loc="best", fontsize="small")
    fig.tight_layout()
    return fig


def plot_methods(loaded: Sequence[Loaded]) -> plt.Figure:
    """
    Bar chart of mean AoI and energy per method, with one standard deviation.
    """
    frames = [frame for frame, _, _ in loaded if not frame.empty]
    fig, axes = plt.subplots(1, len(SWEEP_PANELS), figsize=(8, 3.2))
    if frames:
        combined = pd.concat(frames, ignore_index=True)
        grouped = combined.groupby("method", sort=False)
        for ax, (column, title) in zip(axes, SWEEP_PANELS):
            means = grouped[column].mean()
            ax.bar(
                np.arange(len(means)),
                means.to_numpy(),
                yerr=grouped[column].std(ddof=0).reindex(means.index).to_numpy(),
                capsize=3,
                tick_label=[str(m) for m in means.index]
            )
            ax.set_ylabel(title)
    else:
        for ax, (_, title) in zip(axes, SWEEP_PANELS):
            ax.set_ylabel(title)
    fig.tight_layout()
    return fig


def plot_sweep(frame: pd.DataFrame, header: Dict[str, Any]) -> plt.Figure:
    parameter = header.get("config", dict()).get("sweep", dict()).get("parameter", "value")
    if not frame.empty and "parameter" in frame.columns:
        parameter = str(frame["parameter"].iloc[0])
    fig, axes = plt.subplots(1, len(SWEEP_PANELS), figsize=(8, 3.2))
    for ax, (column, title) in zip(axes, SWEEP_PANELS):
        if not frame.empty:
            ordered = frame.sort_values("value")
            ax.errorbar(
                ordered["value"],
                ordered[f"{column}_mean"],
                yerr=ordered[f"{column}_std"],
                marker="o",
                capsize=3
            )
        ax.set_xlabel(parameter)
        ax.set_ylabel(title)
    fig.tight_layout()
    return fig


def plot_trace(frame: pd.DataFrame, header: Dict[str, Any]) -> plt.Figure:
    """
    Top view of the UAV trajectory per episode over the IoTD layout and the
    RIS position taken from the provenance header.

    Raises:
        ValueError: If the header carries no scenario.
    """
    scenario = header.get("config", dict()).get("scenario")
    if scenario is None:
        raise ValueError("Trace CSV header carries no scenario config")
    iotds = np.asarray(scenario["iotd_positions"], dtype=float).reshape(-1, 3)
    ris = np.asarray(scenario["ris_position"], dtype=float)
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.scatter(iotds[:, 0], iotds[:, 1], marker="^", color="tab:green", label="IoTD")
    ax.scatter([ris[0]], [ris[1]], marker="s", color="tab:red", label="RIS")
    if not frame.empty:
        for episode, rows in frame.groupby("episode", sort=True):
            ax.plot(rows["x"], rows["y"], linewidth=1, label=f"UAV ep {episode}")
    ax.set_xlim(scenario["x_min"], scenario["x_max"])
    ax.set_ylim(scenario["y_min"], scenario["y_max"])
    ax.set_aspect("equal")
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    ax.legend(loc="best", fontsize="small")
    fig.tight_layout()
    return fig


def _save(fig: plt.Figure, dst_path: Path) -> Path:
    try:
        dst_path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(dst_path, format=PLOT_FORMAT)
    except OSError as exc:
        raise RuntimeError(f"Unable to write {dst_path}: {exc}")
    finally:
        plt.close(fig)
    logger.info(f"Plot written to {dst_path}")
    return dst_path


def emit_plots(
        src_paths: Sequence[Union[str, Path]],
        dst_dir: Union[str, Path]
) -> List[Path]:
    """
    Render every CSV according to its `# kind:` header. Training logs are
    overlaid in one figure, episode tables in one method comparison; sweep
    and trace files get one figure each.

    Args:
        src_paths (Sequence[Union[str, Path]]): CSVs written by the harness.
        dst_dir (Union[str, Path]): Output directory.

    Returns:
        List[Path]: Written plot files.

    Raises:
        ValueError: On a malformed CSV or an unknown kind.
    """
    dst_dir = Path(dst_dir).expanduser().absolute()
    by_kind = dict()
    for src_path in src_paths:
        src_path = Path(src_path).expanduser().absolute()
        _, header = read_csv(src_path)
        kind = header.get("kind")
        numeric, required = {
            "training": (TRAINING_NUMERIC, TRAINING_NUMERIC),
            "episodes": (EPISODE_COLUMNS[1:], EPISODE_COLUMNS),
            "sweep": (SWEEP_NUMERIC, SWEEP_NUMERIC),
            "trace": (TRACE_NUMERIC, ["episode"] + TRACE_NUMERIC)
        }.get(kind, (None, None))
        if numeric is None:
            raise ValueError(f"{src_path}: unknown CSV kind {kind!r}")
        frame, header = read_csv(src_path, numeric=numeric, required=required)
        by_kind.setdefault(kind, list()).append((frame, header, src_path))

    written = list()
    if "training" in by_kind:
        written.append(_save(plot_training(by_kind["training"]), dst_dir / f"training.{PLOT_FORMAT}"))
    if "episodes" in by_kind:
        written.append(_save(plot_methods(by_kind["episodes"]), dst_dir / f"methods.{PLOT_FORMAT}"))
    for frame, header, src_path in by_kind.get("sweep", list()):
        written.append(_save(plot_sweep(frame, header), dst_dir / f"{src_path.stem}.{PLOT_FORMAT}"))
    for frame, header, src_path in by_kind.get("trace", list()):
        written.append(_save(plot_trace(frame, header), dst_dir / f"{src_path.stem}.{PLOT_FORMAT}"))
    return written
