import pandas as pd
from pathlib import Path
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Tuple, Union
from rich.progress import Progress
from utils.rng import RngStream, substream
from utils.log import get_logger
from utils.progress import advance
from simulator.config import ScenarioConfig
from learners.trainer import Trainer, TrainerConfig, Variant
from .metrics import (
    EpisodeMetrics,
    aggregate,
    episodes_frame,
    history_frame,
    read_csv,
    write_csv
)


__all__ = [
    "SweepSpec",
    "SWEEP_ALIASES",
    "DEFAULT_GRIDS",
    "train",
    "evaluate",
    "evaluate_trainer",
    "SweepRunner",
    "sweep"
]


logger = get_logger(__name__)

# swept name -> (section, field)
SWEEP_ALIASES = {
    "Z_min": ("scenario", "min_data"),
    "E_max": ("scenario", "buffer_capacity"),
    "LR_p": ("training", "lr_policy"),
    "LR_v": ("training", "lr_value")
}
DEFAULT_GRIDS = {
    "Z_min": (1.5, 2.5, 3.5, 4.5),
    "E_max": (1e-6, 2.5e-6, 5e-6, 10e-6),
    "LR_p": (1e-5, 3e-5, 1e-4),
    "LR_v": (1e-4, 3e-4, 1e-3)
}


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    values: Tuple[float, ...] = field(default_factory=tuple)
    repetitions: int = 3
    seed_base: int = 0
    episodes: int = 3

    def __post_init__(self):
        if self.parameter not in SWEEP_ALIASES:
            raise ValueError(
                f"SweepSpec.parameter={self.parameter!r} not in {sorted(SWEEP_ALIASES)}"
            )
        values = tuple(float(v) for v in (self.values or DEFAULT_GRIDS[self.parameter]))
        if len(values) == 0:
            raise ValueError("SweepSpec.values must not be empty")
        object.__setattr__(self, "values", values)
        if self.repetitions < 1:
            raise ValueError(f"SweepSpec.repetitions must be >= 1, got {self.repetitions}")
        if self.episodes < 1:
            raise ValueError(f"SweepSpec.episodes must be >= 1, got {self.episodes}")

    @property
    def section(self) -> str:
        return SWEEP_ALIASES[self.parameter][0]

    @property
    def target(self) -> str:
        return SWEEP_ALIASES[self.parameter][1]

    def seed_for(self, repetition: int) -> int:
        return self.seed_base + repetition


def _provenance(
        scenario: ScenarioConfig,
        training: TrainerConfig,
        seed: int,
        **extra: Any
) -> Dict[str, Any]:
    provenance = {
        "scenario": scenario.to_dict(),
        "training": training.to_dict(),
        "seed": seed
    }
    provenance.update(extra)
    return provenance


def train(
        scenario: ScenarioConfig,
        training: TrainerConfig,
        seed: int,
        dst_dir: Union[str, Path],
        generations: Optional[int] = None,
        resume: Optional[Union[str, Path]] = None,
        progress_host: Optional[Progress] = None
) -> Tuple[Trainer, Path, Path]:
    """
    Train a variant and write `checkpoint.npz` and `training.csv`.

    Returns:
        Tuple[Trainer, Path, Path]: The trainer, checkpoint and log paths.
    """
    dst_dir = Path(dst_dir).expanduser().absolute()
    if generations is not None:
        training = training.with_overrides(generations=generations)
    rng = RngStream(seed)
    if resume is not None:
        trainer = Trainer.from_checkpoint(resume, scenario, training, rng)
        logger.info(f"Resuming {training.variant.value} at generation {trainer.generation}")
    else:
        trainer = Trainer(scenario, training, rng)
    logger.info(
        f"Training {training.variant.value} for {training.generations} generation(s), seed {seed}"
    )
    start = trainer.generation
    history = trainer.train(progress_host=progress_host)
    checkpoint = trainer.save_checkpoint(dst_dir / "checkpoint.npz")
    log = history_frame(history)
    if resume is not None:
        log = _continued_log(log, start, dst_dir, Path(resume).expanduser().absolute().parent)
    log_path = write_csv(
        log,
        dst_dir / "training.csv",
        kind="training",
        config=_provenance(scenario, training, seed)
    )
    return trainer, checkpoint, log_path


def _continued_log(log: pd.DataFrame, start: int, *search: Path) -> pd.DataFrame:
    """
    Prefix a resumed run's rows with the earlier rows of the first
    `training.csv` found, dropping anything from `start` on.
    """
    for directory in search:
        src_path = directory / "training.csv"
        if not src_path.exists():
            continue
        earlier, _ = read_csv(src_path, numeric=["generation"], required=["generation"])
        earlier = earlier[earlier["generation"] < start]
        logger.info(f"Continuing {len(earlier)} logged generation(s) from {src_path}")
        if earlier.empty:
            return log
        return pd.concat([earlier, log], ignore_index=True)
    return log


def evaluate_trainer(
        trainer: Trainer,
        episodes: int,
        seed: int
) -> List[EpisodeMetrics]:
    """
    Greedy rollouts of the highest-fitness policy.
    """
    policy = trainer.best_policy()
    rng = RngStream(seed)
    metrics = list()
    for episode in range(episodes):
        _, _, record = trainer.rollout(policy, substream(rng, f"eval/ep{episode}"), 0.0)
        metrics.append(EpisodeMetrics.from_record(record, episode))
    return metrics


def evaluate(
        checkpoint: Union[str, Path],
        scenario: ScenarioConfig,
        episodes: int,
        seed: int,
        dst_dir: Optional[Union[str, Path]] = None,
        training: Optional[TrainerConfig] = None
) -> Tuple[List[EpisodeMetrics], Optional[Path]]:
    """
    Evaluate a checkpoint greedily; with `dst_dir`, write `evaluation.csv`
    and the per-slot `trajectory.csv`.

    Raises:
        ValueError: If the checkpoint does not fit the scenario.
    """
    trainer = Trainer.from_checkpoint(checkpoint, scenario, training)
    metrics = evaluate_trainer(trainer, episodes, seed)
    if dst_dir is None:
        return metrics, None
    dst_dir = Path(dst_dir).expanduser().absolute()
    provenance = _provenance(
        scenario, trainer.config, seed, checkpoint=str(Path(checkpoint).absolute())
    )
    write_csv(
        episodes_frame(metrics, trainer.config.variant.value),
        dst_dir / "evaluation.csv",
        kind="episodes",
        config=provenance
    )
    trace_path = write_csv(
        pd.concat([m.trace for m in metrics], ignore_index=True),
        dst_dir / "trajectory.csv",
        kind="trace",
        config=provenance
    )
    return metrics, trace_path


class SweepRunner(object):
    """
    Sweep pipeline: cells -> trained cells -> evaluated rows, aggregated at
    the end. Each stage is a generator over cell dictionaries.
    """

    def __init__(
            self,
            spec: SweepSpec,
            scenario: ScenarioConfig,
            training: TrainerConfig,
            dst_dir: Union[str, Path],
            progress_host: Optional[Progress] = None
    ):
        self.spec = spec
        self.scenario = scenario
        self.training = training
        self.dst_dir = Path(dst_dir).expanduser().absolute()
        self.progress_host = progress_host
        self.task = None

    def cells(self) -> Iterable[Dict[str, Any]]:
        for value in self.spec.values:
            scenario, training = self.scenario, self.training
            if self.spec.section == "scenario":
                scenario = scenario.with_overrides(**{self.spec.target: value})
            else:
                training = training.with_overrides(**{self.spec.target: value})
            for repetition in range(self.spec.repetitions):
                yield {
                    "value": value,
                    "repetition": repetition,
                    "seed": self.spec.seed_for(repetition),
                    "scenario": scenario,
                    "training": training
                }

    def train(self, cells: Iterable[Dict[str, Any]]) -> Iterable[Dict[str, Any]]:
        for cell in cells:
            trainer = Trainer(cell["scenario"], cell["training"], RngStream(cell["seed"]))
            trainer.train()
            cell["trainer"] = trainer
            yield cell

    def evaluate(self, cells: Iterable[Dict[str, Any]]) -> Iterable[Dict[str, Any]]:
        for cell in cells:
            metrics = evaluate_trainer(cell["trainer"], self.spec.episodes, cell["seed"])
            for episode, m in enumerate(metrics):
                yield {
                    "parameter": self.spec.parameter,
                    "value": cell["value"],
                    "repetition": cell["repetition"],
                    "seed": cell["seed"],
                    "episode": episode,
                    "avg_aoi": m.avg_aoi,
                    "avg_energy": m.avg_energy,
                    "cum_reward": m.cum_reward
                }
            logger.debug(
                f"{self.spec.parameter}={cell['value']} rep {cell['repetition']} done"
            )
            advance(self.progress_host, self.task)

    def process(self) -> Tuple[Path, Path]:
        """
        Run every cell and write `sweep_<param>_raw.csv` and `sweep_<param>.csv`.
        """
        if self.progress_host is not None:
            self.task = self.progress_host.add_task(
                f"Sweep {self.spec.parameter}",
                total=len(self.spec.values) * self.spec.repetitions
            )
        raw = pd.DataFrame(list(self.evaluate(self.train(self.cells()))))
        # repetition means first, so each repetition weighs equally
        per_rep = raw.groupby(
            ["parameter", "value", "repetition"], sort=False
        )[["avg_aoi", "avg_energy"]].mean().reset_index()
        summary = aggregate(per_rep)
        provenance = _provenance(
            self.scenario,
            self.training,
            self.spec.seed_base,
            sweep={
                "parameter": self.spec.parameter,
                "values": list(self.spec.values),
                "repetitions": self.spec.repetitions,
                "episodes": self.spec.episodes
            }
        )
        stem = f"sweep_{self.spec.parameter}"
        raw_path = write_csv(raw, self.dst_dir / f"{stem}_raw.csv", "sweep_raw", provenance)
        summary_path = write_csv(summary, self.dst_dir / f"{stem}.csv", "sweep", provenance)
        return summary_path, raw_path


def sweep(
        spec: SweepSpec,
        base_cfg: ScenarioConfig,
        variant: Union[str, Variant],
        dst_dir: Union[str, Path],
        training: Optional[TrainerConfig] = None,
        progress_host: Optional[Progress] = None
) -> Path:
    """
    Train and evaluate the variant at every swept value and repetition;
    returns the aggregated CSV (mean and std of avg_aoi and avg_energy).
    """
    training = (training or TrainerConfig()).with_overrides(variant=Variant.parse(variant))
    runner = SweepRunner(spec, base_cfg, training, dst_dir, progress_host)
    return runner.process()[0]
