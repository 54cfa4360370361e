from .neuralnet import NetworkParams, OptimizerState, init_params, forward, backward
from .replay import Experience, PerConfig, PrioritizedReplayBuffer
from .pdqn import AgentConfig, PdqnAgent
from .pddpg import PddpgAgent
from .evolution import GaConfig, Population
from .trainer import Trainer, TrainerConfig, Variant, evaluate_fitness
