"""Viscous-dispersive shocks of the KdV-Burgers equation.

Profile construction and certification, a CNAB2 finite-difference solver,
shift tracking and the L2 contraction diagnostics, with a batch CLI.
All computations work in the normalized frame ``u_minus = s = -u_plus``.
"""

__version__ = "0.1.0"

from .params import (ParameterError, Regime, RegimeError, ShockParams, galilean_normalize,
                     make_params, normalized_params, params_for_ratio)
from .profile import (LAMBDA_HIGH, LAMBDA_LOW, ShockProfile, build_profile, burgers_profile,
                      phase_plane_profile, solve_h)
from .shift import Convention
from .simulate import RunSettings, named_perturbation, run_simulation, simulate_family
from .solver import Grid

__all__ = [
    "LAMBDA_HIGH", "LAMBDA_LOW", "Convention", "Grid", "ParameterError", "Regime",
    "RegimeError", "RunSettings", "ShockParams", "ShockProfile", "build_profile",
    "burgers_profile", "galilean_normalize", "make_params", "named_perturbation",
    "normalized_params", "params_for_ratio", "phase_plane_profile", "run_simulation",
    "simulate_family", "solve_h",
]
