"""Spectral solvers for the dispersion-modulated cubic NLS on the torus."""

__version__ = "0.1.0"

from ._kernels import BACKEND
from .integrators import (SCHEMES, BlowUpError, RandomSequence, SchemeSpec, TrajectoryResult,
                          run_trajectory, step_classical_exponential, step_randomized,
                          step_randomized_twisted, step_strang)
from .modulation import (ModulationPath, estimate_w_norm, evaluate, make_brownian_path,
                         make_rough_path, make_smooth_path)
from .propagators import apply_evolution, apply_free_propagator, from_twisted, to_twisted
from .spectral import (Grid, SpectralField, cubic_nonlinearity, h_sigma_norm, initial_datum,
                       make_grid, transform_forward, transform_inverse)

__all__ = [
    "BACKEND", "SCHEMES", "BlowUpError", "RandomSequence", "SchemeSpec", "TrajectoryResult",
    "run_trajectory", "step_classical_exponential", "step_randomized", "step_randomized_twisted",
    "step_strang", "ModulationPath", "estimate_w_norm", "evaluate", "make_brownian_path",
    "make_rough_path", "make_smooth_path", "apply_evolution", "apply_free_propagator",
    "from_twisted", "to_twisted", "Grid", "SpectralField", "cubic_nonlinearity", "h_sigma_norm",
    "initial_datum", "make_grid", "transform_forward", "transform_inverse",
]
