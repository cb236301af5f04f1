"""Transition matrices for mode conversion at a simple crossing of pencil eigenvalues."""

__version__ = "0.1.0"

from .adiabatic import (
    ModeSpec,
    PhasePieces,
    berry_phase_integrand,
    beta_pr,
    canonical_mode_value,
    general_mode_value,
    mode_norm_factor,
)
from .degeneracy import DegeneracyData, analyze_crossing, extract_parameters, locate_degeneracy
from .errors import AssumptionViolation, NumericFailure, PencilTransitError, SpecError
from .inner import InnerState, inner_asymptote, inner_coefficients, inner_state_value
from .models import BUILTINS, EXAMPLES, problem_from_spec
from .oracle import convergence_study, extract_empirical_T, integrate
from .pcf import pcf_asymptotic, pcf_d, pcf_limit_forms
from .pencil import PencilProblem, smooth_branches, solve_pencil_at
from .transition import (
    TransitionMatrix2,
    canonical_T,
    check_T_properties,
    general_T,
    polar_T,
    reflection_transmission,
    renumber_T,
)

__all__ = [
    "AssumptionViolation", "BUILTINS", "DegeneracyData", "EXAMPLES", "InnerState", "ModeSpec",
    "NumericFailure", "PencilProblem", "PencilTransitError", "PhasePieces", "SpecError",
    "TransitionMatrix2", "analyze_crossing", "berry_phase_integrand", "beta_pr", "canonical_T",
    "canonical_mode_value", "check_T_properties", "convergence_study", "extract_empirical_T",
    "extract_parameters", "general_T", "general_mode_value", "inner_asymptote", "inner_coefficients",
    "inner_state_value", "integrate", "locate_degeneracy", "mode_norm_factor", "pcf_asymptotic",
    "pcf_d", "pcf_limit_forms", "polar_T", "problem_from_spec", "reflection_transmission",
    "renumber_T", "smooth_branches", "solve_pencil_at",
]
