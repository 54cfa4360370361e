from .metrics import EpisodeMetrics, aggregate, read_csv, write_csv
from .baselines import run_fixed_baseline, run_random_baseline
from .runner import SweepSpec, evaluate, sweep, train
from .plots import emit_plots
from .oracle import run_oracles
