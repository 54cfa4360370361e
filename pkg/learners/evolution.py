import numpy as np
from dataclasses import dataclass
from typing import List, Optional, Sequence
from utils.log import get_logger
from .neuralnet import NetworkParams


__all__ = ["GaConfig", "Population", "crossover", "mutate", "tournament"]


logger = get_logger(__name__)


@dataclass(frozen=True)
class GaConfig:
    """
    Genetic operators of the policy population.

    Attributes:
        population (int): Population size psi; 1 disables evolution.
        mutation_rate (float): Per-individual mutation probability mu_p.
        crossover (bool): Neuron-level crossover with a random elite.
        mutation_fraction (float): Share of weights perturbed by a mutation.
        mutation_scale (float): Noise std relative to the layer weight std.
    """
    population: int = 10
    mutation_rate: float = 0.9
    crossover: bool = True
    mutation_fraction: float = 0.1
    mutation_scale: float = 0.1

    def __post_init__(self):
        if self.population < 1:
            raise ValueError(f"GaConfig.population must be >= 1, got {self.population}")
        if not 0 <= self.mutation_rate <= 1:
            raise ValueError(f"GaConfig.mutation_rate must lie in [0, 1], got {self.mutation_rate}")
        if not 0 < self.mutation_fraction <= 1:
            raise ValueError(
                f"GaConfig.mutation_fraction must lie in (0, 1], got {self.mutation_fraction}"
            )
        if self.mutation_scale < 0:
            raise ValueError(f"GaConfig.mutation_scale must be >= 0, got {self.mutation_scale}")

    @property
    def n_elites(self) -> int:
        return self.population // 2


def crossover(
        parent: NetworkParams,
        other: NetworkParams,
        rng: np.random.Generator
) -> NetworkParams:
    """
    Child whose every neuron (weight row plus bias) comes whole from one of
    the two parents, chosen uniformly.
    """
    if parent.layer_sizes != other.layer_sizes:
        raise ValueError(
            f"Cannot cross layers {parent.layer_sizes} with {other.layer_sizes}"
        )
    child = parent.copy()
    for (w_c, b_c), (w_o, b_o) in zip(child.layers(), other.layers()):
        take = rng.random(w_c.shape[0]) < 0.5
        w_c[take] = w_o[take]
        b_c[take] = b_o[take]
    return child


def mutate(
        genome: NetworkParams,
        rng: np.random.Generator,
        fraction: Optional[float] = 0.1,
        scale: Optional[float] = 0.1
) -> NetworkParams:
    """
    Gaussian noise on a random `fraction` of each layer's weights, with std
    `scale` times that layer's weight std. Biases are left alone.
    """
    child = genome.copy()
    for w, _ in child.layers():
        mask = rng.random(w.shape) < fraction
        noise = rng.normal(0.0, 1.0, size=w.shape) * scale * np.std(w)
        w[mask] += noise[mask]
    return child


def tournament(fitness: np.ndarray, rng: np.random.Generator, size: Optional[int] = 2) -> int:
    """
    Index of the fittest of `size` uniformly drawn contestants; ties go to
    the first drawn.
    """
    contestants = rng.integers(0, fitness.shape[0], size=size)
    best = contestants[0]
    for idx in contestants[1:]:
        if fitness[idx] > fitness[best]:
            best = idx
    return int(best)


class Population(object):
    """
    Policy genomes and their latest fitness values.

    After `evolve` the first `n_elites` slots hold the elites, which keep
    their scores; offspring are unscored (NaN) until evaluated.
    """

    def __init__(
            self,
            genomes: Sequence[NetworkParams],
            fitness: Optional[Sequence[float]] = None,
            n_elites: Optional[int] = 0
    ):
        if len(genomes) == 0:
            raise ValueError("A population needs at least one genome")
        self.genomes: List[NetworkParams] = list(genomes)
        if fitness is None:
            fitness = np.full(len(self.genomes), np.nan)
        self.fitness = np.array(fitness, dtype=np.float64)
        if self.fitness.shape != (len(self.genomes),):
            raise ValueError(
                f"{len(self.genomes)} genomes but {self.fitness.shape[0]} fitness values"
            )
        if not 0 <= n_elites <= len(self.genomes):
            raise ValueError(
                f"n_elites={n_elites} outside [0, {len(self.genomes)}]"
            )
        self.n_elites = int(n_elites)

    def __len__(self) -> int:
        return len(self.genomes)

    @property
    def evaluated(self) -> bool:
        return bool(np.all(np.isfinite(self.fitness)))

    @property
    def scored(self) -> bool:
        return bool(np.any(np.isfinite(self.fitness)))

    def best_index(self) -> int:
        """
        Index of the highest score among scored genomes.
        """
        if not self.scored:
            raise ValueError("Population has no fitness values yet")
        return int(np.nanargmax(self.fitness))

    def best(self) -> NetworkParams:
        return self.genomes[self.best_index()]

    def _require_fitness(self) -> None:
        if not self.evaluated:
            raise ValueError("Population fitness values are not current")

    def evolve(self, config: GaConfig, rng: np.random.Generator) -> "Population":
        """
        Next generation: the top floor(psi/2) genomes pass unchanged with
        their scores and tournament winners fill the rest, each crossed with
        a random elite and mutated with probability `mutation_rate`.
        """
        self._require_fitness()
        if len(self) != config.population:
            raise ValueError(
                f"Population holds {len(self)} genomes, config expects {config.population}"
            )
        if len(self) == 1:
            return Population([self.genomes[0].copy()], self.fitness.copy())
        order = np.argsort(-self.fitness, kind="stable")
        elites = [int(i) for i in order[:config.n_elites]]
        genomes = [self.genomes[i].copy() for i in elites]
        fitness = [self.fitness[i] for i in elites]
        for _ in range(len(self) - len(elites)):
            parent = tournament(self.fitness, rng)
            child = self.genomes[parent].copy()
            if config.crossover:
                mate = self.genomes[elites[int(rng.integers(0, len(elites)))]]
                child = crossover(child, mate, rng)
            if rng.random() < config.mutation_rate:
                child = mutate(
                    child, rng, config.mutation_fraction, config.mutation_scale
                )
            genomes.append(child)
            fitness.append(np.nan)
        logger.debug(f"Evolved population; elites {elites}")
        return Population(genomes, fitness, n_elites=len(elites))

    def inject_rl(self, rl_params: NetworkParams, rl_fitness: float) -> int:
        """
        Overwrite the weakest offspring with a copy of the gradient-trained
        policy; returns the replaced index. Unscored offspring count as
        weakest, ties go to the lowest index and elites are never replaced
        while an offspring slot exists.
        """
        first = self.n_elites if self.n_elites < len(self) else 0
        candidates = np.where(np.isnan(self.fitness[first:]), -np.inf, self.fitness[first:])
        weakest = first + int(np.argmin(candidates))
        self.genomes[weakest] = rl_params.copy()
        self.fitness[weakest] = rl_fitness
        return weakest

    def to_arrays(self):
        arrays = {
            "population.fitness": self.fitness,
            "population.elites": np.asarray(self.n_elites)
        }
        for idx, genome in enumerate(self.genomes):
            arrays.update(genome.to_arrays(f"population.genome{idx}"))
        return arrays

    @classmethod
    def from_arrays(cls, arrays) -> "Population":
        fitness = np.array(arrays["population.fitness"])
        genomes = [
            NetworkParams.from_arrays(arrays, f"population.genome{idx}")
            for idx in range(fitness.shape[0])
        ]
        n_elites = int(arrays["population.elites"]) if "population.elites" in arrays else 0
        return cls(genomes, fitness, n_elites)
