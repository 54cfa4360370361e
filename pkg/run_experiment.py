import sys
import logging
import argparse
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple
from utils.log import configure_logging, get_logger
from utils.progress import make_progress
from utils.rng import RngStream
from simulator.config import ScenarioConfig, load_profile, resolve_seed
from learners.trainer import TrainerConfig, Variant
from experiments.metrics import episodes_frame, write_csv
from experiments.baselines import run_fixed_baseline, run_random_baseline
from experiments.runner import DEFAULT_GRIDS, SWEEP_ALIASES, SweepSpec, evaluate, sweep, train
from experiments.plots import emit_plots
from experiments.oracle import SUITES, render_results, run_oracles


logger = get_logger("run_experiment")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="YAML scenario profile")
    common.add_argument("--seed", type=int, default=None, help="master seed (RIS_UAV_SEED wins)")
    common.add_argument("--variant", default=None, choices=[v.value for v in Variant])
    common.add_argument("--out", type=Path, default=Path("runs"), help="output directory")
    common.add_argument("--generations", type=int, default=None)
    common.add_argument(
        "--reward-aoi-growth",
        action="store_true",
        help="reward AoI growth instead of AoI reduction"
    )
    common.add_argument(
        "--single-update",
        action="store_true",
        help="one gradient step per generation"
    )
    common.add_argument("--verbose", action="store_true", help="DEBUG logging")

    parser = argparse.ArgumentParser(
        description="RIS-assisted UAV wireless-powered data collection experiments"
    )
    commands = parser.add_subparsers(dest="command", required=True)

    cmd = commands.add_parser("train", parents=[common], help="train a learner variant")
    cmd.add_argument("--resume", type=Path, default=None, help="checkpoint to continue from")

    cmd = commands.add_parser("eval", parents=[common], help="greedy evaluation of a checkpoint")
    cmd.add_argument("checkpoint", type=Path)
    cmd.add_argument("--episodes", type=int, default=10)

    cmd = commands.add_parser("sweep", parents=[common], help="parameter sweep")
    cmd.add_argument("parameter", choices=sorted(SWEEP_ALIASES))
    cmd.add_argument("--values", type=float, nargs="+", default=None)
    cmd.add_argument("--repetitions", type=int, default=3)
    cmd.add_argument("--episodes", type=int, default=3)

    cmd = commands.add_parser("baseline", parents=[common], help="random and fixed baselines")
    cmd.add_argument("--method", choices=["random", "fixed", "both"], default="both")
    cmd.add_argument("--episodes", type=int, default=10)

    cmd = commands.add_parser("plot", parents=[common], help="render CSVs to SVG")
    cmd.add_argument("csv", type=Path, nargs="+")

    cmd = commands.add_parser("oracle", parents=[common], help="verification suites")
    cmd.add_argument("--suites", nargs="+", choices=list(SUITES), default=None)
    return parser


def load_settings(args: argparse.Namespace) -> Tuple[ScenarioConfig, TrainerConfig]:
    """
    Scenario and trainer settings from the profile, with CLI flags on top.
    """
    overrides: Dict[str, Any] = dict()
    if args.reward_aoi_growth:
        overrides["reward_aoi_growth"] = True
    if args.config is not None:
        scenario, training = load_profile(args.config, overrides)
    else:
        scenario, training = ScenarioConfig(**overrides), dict()
    trainer = TrainerConfig.from_mapping(training)
    trainer_overrides: Dict[str, Any] = dict()
    if args.variant is not None:
        trainer_overrides["variant"] = args.variant
    if args.generations is not None:
        trainer_overrides["generations"] = args.generations
    if args.single_update:
        trainer_overrides["single_update"] = True
    return scenario, trainer.with_overrides(**trainer_overrides)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(logging.DEBUG if args.verbose else logging.INFO)
    seed = resolve_seed(args.seed)
    out = args.out.expanduser().absolute()

    if args.command == "plot":
        emit_plots(args.csv, out)
        return 0
    if args.command == "oracle":
        passed = render_results(run_oracles(seed, args.suites), out / "oracle.csv", seed)
        return 0 if passed else 1

    scenario, trainer = load_settings(args)
    logger.info(f"Seed {seed}, {scenario.n_iotds} IoTDs, horizon {scenario.horizon}")
    if args.command == "train":
        with make_progress("best") as progress:
            train(scenario, trainer, seed, out, resume=args.resume, progress_host=progress)
    elif args.command == "eval":
        metrics, _ = evaluate(args.checkpoint, scenario, args.episodes, seed, out)
        for m in metrics:
            logger.info(
                f"avg_aoi={m.avg_aoi:.3f} avg_energy={m.avg_energy:.3f} "
                f"reward={m.cum_reward:.3f} uploads={m.success_count}"
            )
    elif args.command == "sweep":
        spec = SweepSpec(
            parameter=args.parameter,
            values=tuple(args.values or DEFAULT_GRIDS[args.parameter]),
            repetitions=args.repetitions,
            seed_base=seed,
            episodes=args.episodes
        )
        with make_progress("aoi") as progress:
            sweep(spec, scenario, trainer.variant, out, trainer, progress)
    elif args.command == "baseline":
        provenance = {"scenario": scenario.to_dict(), "seed": seed}
        with make_progress("aoi") as progress:
            if args.method in ("random", "both"):
                metrics = run_random_baseline(scenario, args.episodes, RngStream(seed), progress)
                write_csv(episodes_frame(metrics, "random"), out / "baseline_random.csv",
                          kind="episodes", config=provenance)
            if args.method in ("fixed", "both"):
                metrics = run_fixed_baseline(scenario, args.episodes, RngStream(seed), progress)
                write_csv(episodes_frame(metrics, "fixed"), out / "baseline_fixed.csv",
                          kind="episodes", config=provenance)
    return 0


if __name__ == "__main__":
    sys.exit(main())
