from .coupling import coupling_grid, coupling_pct, dominance, run_experiment1
from .feasibility import beta_ceiling, beta_max, beta_min, run_experiment2
from .outflow import SimConfig, SimResult, SweepAxes, run_experiment3, run_sweep, simulate

__all__ = [
    "coupling_grid",
    "coupling_pct",
    "dominance",
    "run_experiment1",
    "beta_ceiling",
    "beta_max",
    "beta_min",
    "run_experiment2",
    "SimConfig",
    "SimResult",
    "SweepAxes",
    "run_experiment3",
    "run_sweep",
    "simulate",
]
