"""Viscous 2-shock profiles for the barotropic Navier-Stokes outflow problem.

Subpackages follow the build order: ``hugoniot`` (end states), ``profile``
(traveling wave and weight), ``solver`` (finite volumes on the half-line),
``shift`` (dynamical shift), ``diagnostics`` (relative entropy and lemma
checks), ``experiments`` (configs, sweeps, command line).
"""

from .hugoniot import (
    EndState,
    GasParams,
    HugoniotError,
    ShockConnection,
    classify_state,
    lax_check,
    rh_residual,
    solve_hugoniot,
    sound_speed,
)
from .profile import ShockProfile, Weight, evaluate_profile, integrate_profile, weight_at

__version__ = "0.1.0"

__all__ = [
    "EndState",
    "GasParams",
    "HugoniotError",
    "ShockConnection",
    "ShockProfile",
    "Weight",
    "classify_state",
    "evaluate_profile",
    "integrate_profile",
    "lax_check",
    "rh_residual",
    "solve_hugoniot",
    "sound_speed",
    "weight_at",
]
