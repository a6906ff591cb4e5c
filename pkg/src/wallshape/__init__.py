"""Absorbing-wall shape optimization for a 2D Helmholtz channel."""
from .alpha_fit import FitConfig, alpha_sweep, fit_alpha
from .analytic import MaterialParams, ModeProblem, impedance_match, mode_error, mode_u0, mode_u2
from .energy import EnergyWeights, ProblemData, energy_J, multi_frequency_energy
from .fem import HelmholtzProblem, solve
from .geometry import ShapeParam, build_wall_mesh, domain_volume, project_shape, validate_shape
from .shape_opt import OptConfig, OptContext, optimize_shape

__version__ = "0.1.0"

__all__ = [
    "EnergyWeights", "FitConfig", "HelmholtzProblem", "MaterialParams", "ModeProblem",
    "OptConfig", "OptContext", "ProblemData", "ShapeParam", "alpha_sweep", "build_wall_mesh",
    "domain_volume", "energy_J", "fit_alpha", "impedance_match", "mode_error", "mode_u0",
    "mode_u2", "multi_frequency_energy", "optimize_shape", "project_shape", "solve",
    "validate_shape",
]
