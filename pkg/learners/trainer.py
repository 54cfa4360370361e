import json
import numpy as np
from enum import Enum
from pathlib import Path
from warnings import warn
from dataclasses import asdict, dataclass, fields, replace
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union
from rich.progress import Progress
from utils.rng import RngStream, substream
from utils.log import get_logger
from utils.progress import advance
from simulator.config import ScenarioConfig
from simulator.environment import EpisodeRecord, RisEnvironment, run_episode
from optimizers.ao_ris import AoRisConfig, ao_ris_selector
from .neuralnet import NetworkParams, init_params, Activation
from .replay import Experience, PerConfig, PrioritizedReplayBuffer, collate
from .pdqn import AgentConfig, HybridAgent, PdqnAgent
from .pddpg import PddpgAgent
from .evolution import GaConfig, Population


__all__ = [
    "Variant",
    "TrainerConfig",
    "GenerationMetrics",
    "Trainer",
    "evaluate_fitness",
    "CHECKPOINT_VERSION"
]


logger = get_logger(__name__)

CHECKPOINT_VERSION = 1


class Variant(Enum):
    AO_IPDQN = "AO-IPDQN"
    AO_GAPDQN = "AO-GAPDQN"
    AO_PDQN = "AO-PDQN"
    AO_PDDPG = "AO-PDDPG"

    @classmethod
    def parse(cls, value: Union[str, "Variant"]) -> "Variant":
        if isinstance(value, cls):
            return value
        normalized = str(value).strip().upper().replace("_", "-")
        for variant in cls:
            if variant.value == normalized:
                return variant
        raise ValueError(
            f"Unknown variant {value!r}; expected one of {[v.value for v in cls]}"
        )


@dataclass(frozen=True)
class TrainerConfig:
    """
    Learner hyper-parameters. The variant reduces the configured values:
    AO-GAPDQN turns prioritization off, AO-PDQN additionally disables the
    GA, and AO-PDDPG swaps in the DDPG-style agent with uniform replay.
    """
    variant: Variant = Variant.AO_IPDQN
    generations: int = 2000
    population: int = 10
    mutation_rate: float = 0.9
    crossover: bool = True
    gradient_steps: int = 50
    single_update: bool = False
    batch_size: int = 128
    replay_capacity: int = 1_000_000
    alpha: float = 0.6
    mu_start: float = 0.4
    mu_end: float = 1.0
    per_epsilon: float = 1e-6
    gamma: float = 0.99
    tau: float = 0.01
    lr_policy: float = 3e-5
    lr_value: float = 3e-4
    hidden: Tuple[int, ...] = (400, 200)
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_decay_fraction: float = 0.5
    ao_iters: int = 3
    ao_tolerance: float = 0.0
    eval_every: int = 10
    frozen_eval_seeds: bool = False

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant.parse(self.variant))
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        checks = (
            ("generations", self.generations >= 1, "generations >= 1"),
            ("gradient_steps", self.gradient_steps >= 0, "gradient_steps >= 0"),
            ("batch_size", self.batch_size >= 1, "batch_size >= 1"),
            ("replay_capacity", self.replay_capacity >= self.batch_size,
             "replay_capacity >= batch_size"),
            ("epsilon_start", 0 <= self.epsilon_start <= 1, "0 <= epsilon_start <= 1"),
            ("epsilon_end", 0 <= self.epsilon_end <= 1, "0 <= epsilon_end <= 1"),
            ("epsilon_decay_fraction", 0 < self.epsilon_decay_fraction <= 1,
             "0 < epsilon_decay_fraction <= 1"),
            ("ao_iters", self.ao_iters >= 1, "ao_iters >= 1"),
            ("eval_every", self.eval_every >= 1, "eval_every >= 1")
        )
        for name, ok, rule in checks:
            if not ok:
                raise ValueError(
                    f"Invalid TrainerConfig.{name}={getattr(self, name)!r}: expected {rule}"
                )
        # component configs validate the remaining fields
        for component in ("ga_config", "per_config", "agent_config", "ao_config"):
            getattr(self, component)

    @classmethod
    def from_mapping(cls, mapping: Optional[Mapping[str, Any]] = None) -> "TrainerConfig":
        mapping = dict(mapping or dict())
        known = {f.name for f in fields(cls)}
        unknown = set(mapping) - known
        if unknown:
            raise ValueError(f"Unknown training key(s): {sorted(unknown)}")
        return cls(**mapping)

    def with_overrides(self, **overrides: Any) -> "TrainerConfig":
        unknown = set(overrides) - {f.name for f in fields(self)}
        if unknown:
            raise ValueError(f"Unknown TrainerConfig field(s): {sorted(unknown)}")
        return replace(self, **overrides)

    @property
    def uses_ga(self) -> bool:
        return self.variant in (Variant.AO_IPDQN, Variant.AO_GAPDQN)

    @property
    def uses_priorities(self) -> bool:
        return self.variant is Variant.AO_IPDQN

    @property
    def ga_config(self) -> GaConfig:
        if self.uses_ga:
            return GaConfig(
                population=self.population,
                mutation_rate=self.mutation_rate,
                crossover=self.crossover
            )
        return GaConfig(population=1, mutation_rate=0.0, crossover=False)

    @property
    def per_config(self) -> PerConfig:
        if self.uses_priorities:
            return PerConfig(
                capacity=self.replay_capacity,
                alpha=self.alpha,
                mu_start=self.mu_start,
                mu_end=self.mu_end,
                epsilon=self.per_epsilon
            )
        return PerConfig(
            capacity=self.replay_capacity,
            alpha=0.0,
            mu_start=0.0,
            mu_end=0.0,
            epsilon=self.per_epsilon
        )

    @property
    def agent_config(self) -> AgentConfig:
        return AgentConfig(
            hidden=self.hidden,
            gamma=self.gamma,
            tau=self.tau,
            lr_policy=self.lr_policy,
            lr_value=self.lr_value
        )

    @property
    def ao_config(self) -> AoRisConfig:
        return AoRisConfig(max_iters=self.ao_iters, tolerance=self.ao_tolerance)

    @property
    def updates_per_generation(self) -> int:
        return 1 if self.single_update else self.gradient_steps

    def epsilon_at(self, generation: int) -> float:
        """
        Linear decay from `epsilon_start` to `epsilon_end` over the first
        `epsilon_decay_fraction` of the generations, constant afterwards.
        """
        horizon = max(1.0, self.epsilon_decay_fraction * self.generations)
        progress = min(generation / horizon, 1.0)
        return self.epsilon_start + (self.epsilon_end - self.epsilon_start) * progress

    def progress_at(self, generation: int) -> float:
        return generation / max(1, self.generations - 1)

    def to_dict(self) -> Dict[str, Any]:
        resolved = asdict(self)
        resolved["variant"] = self.variant.value
        resolved["hidden"] = list(self.hidden)
        return resolved


@dataclass(frozen=True)
class GenerationMetrics:
    generation: int
    epsilon: float
    best_fitness: float
    mean_fitness: float
    rl_fitness: float
    value_loss: float
    policy_loss: float
    updates: int
    buffer_size: int
    avg_aoi: float
    avg_energy: float
    eval_avg_aoi: float = float("nan")
    eval_avg_energy: float = float("nan")


def evaluate_fitness(
        policy_params: NetworkParams,
        env: RisEnvironment,
        agent: HybridAgent,
        epsilon: float,
        rng: RngStream,
        ao_settings: Optional[AoRisConfig] = None
) -> Tuple[float, List[Experience], EpisodeRecord]:
    """
    Roll one full episode with a policy genome and the shared value network,
    configuring the RIS by AO-RIS in both sub-slots.

    Returns:
        Tuple[float, List[Experience], EpisodeRecord]: Cumulative reward,
            the T experiences in slot order and the rollout itself.
    """
    def decide(obs, act_rng):
        return agent.select_action(obs, epsilon, act_rng, policy=policy_params)

    record = run_episode(
        env,
        decide,
        ao_ris_selector(env.cfg, ao_settings),
        substream(rng, "act").generator,
        env_rng=substream(rng, "env")
    )
    experiences = [
        Experience(
            state_vec=obs,
            action=action,
            reward=reward,
            next_state_vec=next_obs,
            done=done
        )
        for obs, action, reward, next_obs, done in record.transitions()
    ]
    return record.cum_reward, experiences, record


class Trainer(object):
    """
    Evolutionary PDQN training loop.

    Every generation evaluates the population (filling the replay buffer),
    evolves it, takes gradient steps on the shared networks, scores the
    trained policy greedily and injects it over the weakest offspring. All
    randomness of generation `g` comes from substreams labelled `gen{g}/...`,
    so a run resumed from a checkpoint draws the same numbers.
    """

    def __init__(
            self,
            scenario: ScenarioConfig,
            config: TrainerConfig,
            rng: RngStream
    ):
        self.scenario = scenario
        self.config = config
        self.rng = rng
        agent_cls = PddpgAgent if config.variant is Variant.AO_PDDPG else PdqnAgent
        self.agent: HybridAgent = agent_cls(
            scenario, config.agent_config, substream(rng, "init/agent").generator
        )
        ga = config.ga_config
        if ga.population == 1:
            genomes = [self.agent.policy.copy()]
        else:
            genomes = [
                init_params(
                    self.agent.policy.layer_sizes,
                    substream(rng, f"init/genome{i}").generator,
                    output_activation=Activation.TANH
                )
                for i in range(ga.population)
            ]
        self.population = Population(genomes)
        self.buffer = PrioritizedReplayBuffer(config.per_config)
        self.env = RisEnvironment(scenario, substream(rng, "env"))
        self.generation = 0

    def _eval_stream(self, generation: int, label: str) -> RngStream:
        if self.config.frozen_eval_seeds:
            return substream(self.rng, "frozen")
        return substream(self.rng, f"gen{generation}/{label}")

    def best_policy(self) -> NetworkParams:
        """
        Highest-fitness genome, or the trained policy before any evaluation.
        """
        if self.population.scored:
            return self.population.best()
        return self.agent.policy

    def rollout(
            self,
            policy: NetworkParams,
            rng: RngStream,
            epsilon: Optional[float] = 0.0
    ) -> Tuple[float, List[Experience], EpisodeRecord]:
        return evaluate_fitness(
            policy, self.env, self.agent, epsilon, rng, self.config.ao_config
        )

    def _gradient_steps(self, generation: int) -> Tuple[float, float, int]:
        batch_size = self.config.batch_size
        steps = self.config.updates_per_generation
        if steps == 0:
            return float("nan"), float("nan"), 0
        if len(self.buffer) < batch_size:
            warn(
                f"Generation {generation}: replay buffer holds {len(self.buffer)} < "
                f"{batch_size} experiences; skipping gradient steps"
            )
            return float("nan"), float("nan"), 0
        mu = self.buffer.config.mu_at(self.config.progress_at(generation))
        replay_rng = substream(self.rng, f"gen{generation}/replay").generator
        value_losses, policy_losses = list(), list()
        for _ in range(steps):
            experiences, indices, weights = self.buffer.sample(batch_size, replay_rng, mu)
            stats = self.agent.train_step(collate(experiences), weights)
            self.buffer.update_priorities(indices, stats.td_errors)
            value_losses.append(stats.value_loss)
            policy_losses.append(stats.policy_loss)
        return float(np.mean(value_losses)), float(np.mean(policy_losses)), steps

    def _keeps_score(self, index: int) -> bool:
        # Under frozen seeds an elite's score is carried instead of re-rolled.
        return (
            self.config.frozen_eval_seeds
            and index < self.population.n_elites
            and bool(np.isfinite(self.population.fitness[index]))
        )

    def train_generation(self) -> GenerationMetrics:
        g = self.generation
        epsilon = self.config.epsilon_at(g)
        fitness_eps = 0.0 if self.config.frozen_eval_seeds else epsilon
        # Genomes are evaluated serially and merged by (genome, slot) order.
        for i, genome in enumerate(self.population.genomes):
            if self._keeps_score(i):
                continue
            fitness, experiences, _ = self.rollout(
                genome, self._eval_stream(g, f"genome{i}"), fitness_eps
            )
            self.population.fitness[i] = fitness
            self.buffer.extend(experiences)
        best_fitness = float(np.max(self.population.fitness))
        mean_fitness = float(np.mean(self.population.fitness))

        if len(self.population) > 1:
            self.population = self.population.evolve(
                self.config.ga_config, substream(self.rng, f"gen{g}/evolve").generator
            )
        value_loss, policy_loss, updates = self._gradient_steps(g)

        rl_fitness, experiences, record = self.rollout(
            self.agent.policy, self._eval_stream(g, "rl"), 0.0
        )
        self.buffer.extend(experiences)
        self.population.inject_rl(self.agent.policy, rl_fitness)

        eval_aoi, eval_energy = float("nan"), float("nan")
        if (g + 1) % self.config.eval_every == 0 or g + 1 == self.config.generations:
            _, _, evaluation = self.rollout(
                self.best_policy(), substream(self.rng, f"gen{g}/eval"), 0.0
            )
            eval_aoi, eval_energy = evaluation.avg_aoi, evaluation.avg_energy

        metrics = GenerationMetrics(
            generation=g,
            epsilon=epsilon,
            best_fitness=best_fitness,
            mean_fitness=mean_fitness,
            rl_fitness=rl_fitness,
            value_loss=value_loss,
            policy_loss=policy_loss,
            updates=updates,
            buffer_size=len(self.buffer),
            avg_aoi=record.avg_aoi,
            avg_energy=record.avg_energy,
            eval_avg_aoi=eval_aoi,
            eval_avg_energy=eval_energy
        )
        self.generation += 1
        logger.info(
            f"gen {g}: best={best_fitness:.3f} mean={mean_fitness:.3f} "
            f"rl={rl_fitness:.3f} aoi={record.avg_aoi:.3f} eps={epsilon:.3f}"
        )
        return metrics

    def train(
            self,
            generations: Optional[int] = None,
            progress_host: Optional[Progress] = None
    ) -> List[GenerationMetrics]:
        """
        Run generations up to `generations` total (the config value by
        default), continuing from the current generation counter.
        """
        target = self.config.generations if generations is None else generations
        task = None
        if progress_host is not None:
            task = progress_host.add_task(
                f"{self.config.variant.value}", total=max(0, target - self.generation)
            )
        history = list()
        while self.generation < target:
            metrics = self.train_generation()
            history.append(metrics)
            advance(progress_host, task, metrics.best_fitness)
        return history

    def save_checkpoint(self, dst_path: Union[str, Path]) -> Path:
        """
        Networks, optimizer states, population and generation counter; the
        replay buffer is not saved.
        """
        dst_path = Path(dst_path).expanduser().absolute()
        arrays = {
            "version": np.asarray(CHECKPOINT_VERSION),
            "generation": np.asarray(self.generation),
            "variant": np.asarray(self.config.variant.value),
            "seed": np.asarray(str(self.rng.master_seed)),
            "scenario": np.asarray(json.dumps(self.scenario.to_dict())),
            "trainer": np.asarray(json.dumps(self.config.to_dict()))
        }
        arrays.update(self.agent.to_arrays())
        arrays.update(self.population.to_arrays())
        try:
            dst_path.parent.mkdir(parents=True, exist_ok=True)
            with open(dst_path, mode="wb") as dst:
                np.savez(dst, **arrays)
        except OSError as exc:
            raise RuntimeError(f"Unable to write checkpoint {dst_path}: {exc}")
        logger.info(f"Checkpoint written to {dst_path}")
        return dst_path

    @classmethod
    def from_checkpoint(
            cls,
            src_path: Union[str, Path],
            scenario: ScenarioConfig,
            config: Optional[TrainerConfig] = None,
            rng: Optional[RngStream] = None
    ) -> "Trainer":
        """
        Rebuild a trainer from a checkpoint. The stored trainer settings and
        seed are used unless `config` / `rng` are given.

        Raises:
            ValueError: If the checkpoint does not fit the scenario dimensions.
        """
        src_path = Path(src_path).expanduser().absolute()
        try:
            with np.load(src_path, allow_pickle=False) as stored:
                arrays = dict(stored)
        except (OSError, ValueError) as exc:
            raise RuntimeError(f"Unable to read checkpoint {src_path}: {exc}")
        version = int(arrays["version"]) if "version" in arrays else None
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"Unsupported checkpoint version {version} in {src_path}")
        if config is None:
            config = TrainerConfig.from_mapping(json.loads(str(arrays["trainer"])))
        if rng is None:
            rng = RngStream(int(str(arrays["seed"])))
        trainer = cls(scenario, config, rng)
        trainer.agent.load_arrays(arrays)
        population = Population.from_arrays(arrays)
        expected = trainer.agent.policy.layer_sizes
        if any(g.layer_sizes != expected for g in population.genomes):
            raise ValueError(
                f"Checkpoint population does not match policy layers {expected}"
            )
        if len(population) != config.ga_config.population:
            raise ValueError(
                f"Checkpoint population has {len(population)} genomes, "
                f"config expects {config.ga_config.population}"
            )
        trainer.population = population
        trainer.generation = int(arrays["generation"])
        return trainer
