from .ao_ris import (
    AoRisConfig,
    Objective,
    ao_ris_selector,
    brute_force_phases,
    fixed_phases,
    optimize_phases
)
