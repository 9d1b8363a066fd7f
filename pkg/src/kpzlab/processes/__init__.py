"""Stochastic simulators: exclusion processes, q-Boson, GT dynamics, O'Connell-Yor."""
from .ensemble import EnsembleResult, run_ensemble, summarize
from .exclusion import (ParticleConfig, asep_N, asep_Qtilde, light_cone_bound,
                        light_cone_particles, qtasep_positions_batch, simulate_asep, simulate_qtasep,
                        simulate_tasep)
from .gt import GTPattern, interlacing_violations, simulate_gt_dynamics
from .polymer import (oy_mean_exact, oy_simplex_sample, simulate_oy_sde,
                      simulate_oy_simplex)
from .qboson import occupation_to_ordered, ordered_to_occupation, simulate_qboson

__all__ = [
    "EnsembleResult", "run_ensemble", "summarize", "ParticleConfig", "asep_N",
    "asep_Qtilde", "light_cone_bound", "light_cone_particles", "simulate_asep",
    "simulate_qtasep", "simulate_tasep", "qtasep_positions_batch", "GTPattern", "interlacing_violations",
    "simulate_gt_dynamics", "oy_mean_exact", "oy_simplex_sample", "simulate_oy_sde",
    "simulate_oy_simplex", "occupation_to_ordered", "ordered_to_occupation",
    "simulate_qboson",
]
