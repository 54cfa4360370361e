import time
import numpy as np
import pandas as pd
from pathlib import Path
from dataclasses import asdict, dataclass
from typing import Callable, Dict, List, Optional, Sequence, Union
from rich.table import Table
from utils.rng import RngStream, substream
from utils.log import console, get_logger
from utils.units import dbm_to_watt, watt_to_dbm
from simulator.config import ScenarioConfig
from simulator.channel import (
    ChannelRealization,
    sample_direct,
    sample_ris_iotd,
    sample_uav_ris
)
from simulator.energy import endurance_speed, propulsion_energy
from simulator.environment import Action, RisEnvironment, run_episode
from optimizers.ao_ris import (
    CoordinateUpdate,
    Objective,
    brute_force_phases,
    optimize_phases,
    random_selector
)
from learners.neuralnet import backward, forward, init_params, numeric_gradient
from learners.pdqn import AgentConfig, PdqnAgent
from learners.replay import Experience, PerConfig, PrioritizedReplayBuffer
from utils.geometry import euclidean_distance
from .baselines import RandomPolicy
from .metrics import write_csv


__all__ = [
    "OracleResult",
    "SUITES",
    "run_oracles",
    "oracle_frame",
    "render_results"
]


logger = get_logger(__name__)

HOVER_ENERGY = 168.48


@dataclass(frozen=True)
class OracleResult:
    suite: str
    check: str
    passed: bool
    measured: float
    threshold: float
    seconds: float = 0.0


def _reference_power(v: np.ndarray, cfg: ScenarioConfig) -> np.ndarray:
    v_h = cfg.hover_induced_velocity
    return (
        cfg.blade_profile_power * (1 + 3 * v ** 2 / cfg.tip_speed ** 2)
        + cfg.induced_power * np.sqrt(np.sqrt(1 + v ** 4 / (4 * v_h ** 4)) - v ** 2 / (2 * v_h ** 2))
        + 0.5 * cfg.drag_ratio * cfg.air_density * cfg.rotor_solidity * cfg.rotor_disc_area * v ** 3
    )


def physics_suite(rng: RngStream, draws: Optional[int] = 1000) -> List[OracleResult]:
    """
    Hover energy, propulsion model against an independent evaluator,
    endurance speed against a grid scan and dBm conversions.
    """
    cfg = ScenarioConfig()
    results = list()
    hover = propulsion_energy(0.0, cfg)
    error = abs(hover - HOVER_ENERGY) / HOVER_ENERGY
    results.append(OracleResult("physics", "hover energy", error <= 1e-9, error, 1e-9))

    speeds = rng.generator.uniform(0.0, 60.0, size=draws)
    ours = np.array([propulsion_energy(v, cfg) for v in speeds])
    reference = _reference_power(speeds, cfg) * cfg.slot_len
    error = float(np.max(np.abs(ours - reference) / reference))
    results.append(OracleResult("physics", "propulsion vs reference", error <= 1e-9, error, 1e-9))

    grid = np.arange(0.01, 100.0, 0.01)
    per_meter = _reference_power(grid, cfg) / grid
    gap = abs(endurance_speed(cfg) - grid[int(np.argmin(per_meter))])
    results.append(OracleResult("physics", "endurance speed vs grid", gap <= 0.01, gap, 0.01))

    conversions = [
        (dbm_to_watt(30.0), 1.0),
        (dbm_to_watt(0.0), 1e-3),
        (watt_to_dbm(1.0), 30.0),
        (watt_to_dbm(1e-3), 0.0)
    ]
    error = max(abs(a - b) for a, b in conversions)
    results.append(OracleResult("physics", "dBm conversions", error <= 1e-12, error, 1e-12))
    return results


def channel_suite(rng: RngStream, draws: Optional[int] = 100_000) -> List[OracleResult]:
    """
    Monte-Carlo mean |h|^2 of every link type against the path-loss gain.
    """
    cfg = ScenarioConfig()
    generator = rng.generator
    uav, iotd, ris = cfg.uav_start, cfg.iotd_positions[0], cfg.ris_position

    def expected(distance, exponent):
        return cfg.ref_gain / distance ** exponent

    direct = np.array([abs(sample_direct(uav, iotd, cfg, generator)) ** 2 for _ in range(draws)])
    # every element of the RIS-IoTD vector is one draw
    per_vector = max(1, draws // cfg.n_elements)
    ris_iotd = np.concatenate([
        np.abs(sample_ris_iotd(ris, iotd, cfg, generator)) ** 2 for _ in range(per_vector)
    ])
    uav_ris = np.abs(sample_uav_ris(uav, ris, cfg)) ** 2
    measured = {
        "UAV-IoTD": (direct.mean(), expected(euclidean_distance(uav, iotd), cfg.pathloss_direct)),
        "RIS-IoTD": (ris_iotd.mean(), expected(euclidean_distance(ris, iotd), cfg.pathloss_ris_iotd)),
        "UAV-RIS": (uav_ris.mean(), expected(euclidean_distance(uav, ris), cfg.pathloss_uav_ris))
    }
    results = list()
    for link, (mean, target) in measured.items():
        error = abs(mean - target) / target
        results.append(OracleResult("channel", f"{link} mean gain", error <= 0.02, error, 0.02))
    return results


def ao_ris_suite(rng: RngStream, instances: Optional[int] = 100) -> List[OracleResult]:
    """
    AO-RIS against exhaustive search on a 2x2 surface with 2-bit phases.
    """
    cfg = ScenarioConfig(ris_rows=2, ris_cols=2, phase_bits=2)
    generator = rng.generator

    def complex_normal(size):
        return (generator.standard_normal(size) + 1j * generator.standard_normal(size)) / np.sqrt(2)

    good, violations = 0, 0
    for _ in range(instances):
        real = ChannelRealization(
            h_ud=complex_normal(1) * 0.3,
            h_ur=complex_normal(cfg.n_elements),
            h_rd=complex_normal((1, cfg.n_elements))
        )
        trace: List[CoordinateUpdate] = list()
        try:
            phases = optimize_phases(real, 0, Objective.DATA_RATE, cfg, generator, trace=trace)
        except AssertionError:
            violations += 1
            continue
        violations += sum(u.after < u.before for u in trace)
        value = abs(real.h_ud[0] + np.sum(real.reflected_terms(0) * phases.coefficients)) ** 2
        _, optimum = brute_force_phases(real, 0, cfg)
        good += value >= 0.95 * optimum
    share = good / instances
    return [
        OracleResult("ao_ris", "instances within 95% of optimum", share >= 0.9, share, 0.9),
        OracleResult("ao_ris", "coordinate decreases", violations == 0, violations, 0)
    ]


def _relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    return float(np.linalg.norm(analytic - numeric) / max(np.linalg.norm(numeric), 1e-12))


def gradient_suite(rng: RngStream) -> List[OracleResult]:
    """
    Analytic against central-difference gradients: a plain 8-16-4 network
    and the policy gradient through a fixed critic.
    """
    generator = rng.generator
    params = init_params([8, 16, 4], generator)
    x = generator.standard_normal((5, 8))
    upstream = generator.standard_normal((5, 4))
    analytic, _ = backward(params, x, upstream)
    numeric = numeric_gradient(
        lambda v: float(np.sum(upstream * forward(params.with_vector(v), x))), params.vector
    )
    value_error = _relative_error(analytic, numeric)

    scenario = ScenarioConfig(n_iotds=2, horizon=5, ris_rows=2, ris_cols=2)
    agent = PdqnAgent(scenario, AgentConfig(hidden=(8,)), generator)
    obs = generator.uniform(0.0, 1.0, size=(4, scenario.obs_dim))
    _, analytic = agent.policy_loss(obs)
    policy = agent.policy

    def loss_at(vector):
        agent.policy = policy.with_vector(vector)
        return agent.policy_loss(obs)[0]

    numeric = numeric_gradient(loss_at, policy.vector)
    agent.policy = policy
    policy_error = _relative_error(analytic, numeric)
    return [
        OracleResult("gradients", "network backward", value_error < 1e-4, value_error, 1e-4),
        OracleResult("gradients", "policy through critic", policy_error < 1e-3, policy_error, 1e-3)
    ]


def _dummy_experience() -> Experience:
    action = Action(ax=0.0, ay=0.0, delta=0.0, schedule=0, params=np.zeros(3))
    return Experience(np.zeros(2), action, 0.0, np.zeros(2))


def per_suite(rng: RngStream, draws: Optional[int] = 100_000) -> List[OracleResult]:
    """
    Empirical sampling frequencies against p^alpha / sum p^alpha, and unit
    weights for uniform priorities at mu = 1.
    """
    generator = rng.generator
    buffer = PrioritizedReplayBuffer(PerConfig(capacity=8, alpha=0.6))
    buffer.extend([_dummy_experience() for _ in range(4)])
    buffer.update_priorities(np.arange(4), [0.5, 1.0, 2.0, 4.0])
    counts = np.zeros(4)
    for _ in range(draws // 4):
        _, ids, _ = buffer.sample(4, generator, mu=0.4)
        counts += np.bincount(ids, minlength=4)
    frequencies = counts / counts.sum()
    expected = buffer.probabilities()
    error = float(np.max(np.abs(frequencies - expected) / expected))

    uniform = PrioritizedReplayBuffer(PerConfig(capacity=8))
    uniform.extend([_dummy_experience() for _ in range(8)])
    _, _, weights = uniform.sample(8, generator, mu=1.0)
    spread = float(np.max(np.abs(weights - 1.0)))
    return [
        OracleResult("per", "sampling frequencies", error <= 0.05, error, 0.05),
        OracleResult("per", "uniform weights at mu=1", spread <= 1e-12, spread, 1e-12)
    ]


def telescoping_suite(rng: RngStream, episodes: Optional[int] = 100) -> List[OracleResult]:
    """
    Sum of AoI rewards over an episode equals the total initial minus total
    final AoI, on random rollouts.
    """
    cfg = ScenarioConfig(n_iotds=3, horizon=10, ris_rows=2, ris_cols=2, noise_power=1e-16)
    env = RisEnvironment(cfg, substream(rng, "env"))
    policy = RandomPolicy(cfg)
    selector = random_selector(cfg)
    mismatches = 0
    for episode in range(episodes):
        stream = substream(rng, f"ep{episode}")
        record = run_episode(
            env, policy, selector, substream(stream, "act").generator,
            env_rng=substream(stream, "env")
        )
        total = sum(o.reward_parts[0] for o in record.outcomes)
        initial = record.initial_state.aoi.sum()
        final = record.outcomes[-1].next_state.aoi.sum()
        mismatches += total != float(initial - final)
    return [
        OracleResult("telescoping", "AoI reward sum", mismatches == 0, mismatches, 0)
    ]


SUITES: Dict[str, Callable[[RngStream], List[OracleResult]]] = {
    "physics": physics_suite,
    "channel": channel_suite,
    "ao_ris": ao_ris_suite,
    "gradients": gradient_suite,
    "per": per_suite,
    "telescoping": telescoping_suite
}


def run_oracles(
        seed: int,
        suites: Optional[Sequence[str]] = None
) -> List[OracleResult]:
    """
    Run the named verification suites (all by default), timing each.

    Raises:
        ValueError: On an unknown suite name.
    """
    names = list(SUITES) if suites is None else list(suites)
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise ValueError(f"Unknown oracle suite(s) {unknown}; choose from {list(SUITES)}")
    rng = RngStream(seed)
    results = list()
    for name in names:
        start = time.perf_counter()
        suite_results = SUITES[name](substream(rng, f"oracle/{name}"))
        elapsed = time.perf_counter() - start
        results.extend(
            OracleResult(**{**asdict(r), "seconds": elapsed}) for r in suite_results
        )
        logger.info(f"Oracle suite `{name}` finished in {elapsed:.2f}s")
    return results


def oracle_frame(results: Sequence[OracleResult]) -> pd.DataFrame:
    return pd.DataFrame(
        [asdict(r) for r in results],
        columns=["suite", "check", "passed", "measured", "threshold", "seconds"]
    )


def render_results(
        results: Sequence[OracleResult],
        dst_path: Optional[Union[str, Path]] = None,
        seed: Optional[int] = None
) -> bool:
    """
    Print a pass/fail table and optionally write it as CSV.

    Returns:
        bool: Whether every check passed.
    """
    table = Table(title="Verification oracles")
    for column in ("suite", "check", "result", "measured", "threshold", "seconds"):
        table.add_column(column)
    for r in results:
        table.add_row(
            r.suite,
            r.check,
            "[green]pass" if r.passed else "[red]FAIL",
            f"{r.measured:.3e}",
            f"{r.threshold:.1e}",
            f"{r.seconds:.2f}"
        )
    console.print(table)
    if dst_path is not None:
        write_csv(oracle_frame(results), dst_path, kind="oracle", config={"seed": seed})
    return all(r.passed for r in results)
