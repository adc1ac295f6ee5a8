"""Solver suite for semilinear first-order hyperbolic systems on 0<x<1 with
nonlocal nonlinear boundary conditions."""

from .blowup import (BLOWUP_DETECTED, COMPLETED, INCONCLUSIVE, BlowupVerdict, GrowthFamily,
                     frontier_scan, run_until_blowup)
from .bounds import (AprioriReport, GrowthCertificate, LipschitzEstimate, apriori_bounds,
                     certify_growth, compute_phi_psi, continuous_dependence_check,
                     estimate_lipschitz, solve_Q, solve_R)
from .characteristics import CharacteristicTrace, entry_time, separation_width, trace_back
from .exprlang import differentiate, evaluate, parse, to_text
from .presets import PRESETS, preset, preset_problem
from .problem import (CompatibilityReport, HyperbolicProblem, TraceConvention, check_compat0,
                      check_compat1, trace_vector, validate)
from .solver import (SlabPlan, SolutionField, boundary_traces, derivative_t,
                     manufactured_problem, picard_slab, plan_slabs, sigma_form_residual, solve,
                     solve_derivative_x)

__version__ = "0.1.0"

__all__ = [
    "BLOWUP_DETECTED", "COMPLETED", "INCONCLUSIVE", "BlowupVerdict", "GrowthFamily",
    "frontier_scan", "run_until_blowup",
    "AprioriReport", "GrowthCertificate", "LipschitzEstimate", "apriori_bounds",
    "certify_growth", "compute_phi_psi", "continuous_dependence_check", "estimate_lipschitz",
    "solve_Q", "solve_R",
    "CharacteristicTrace", "entry_time", "separation_width", "trace_back",
    "differentiate", "evaluate", "parse", "to_text",
    "PRESETS", "preset", "preset_problem",
    "CompatibilityReport", "HyperbolicProblem", "TraceConvention", "check_compat0",
    "check_compat1", "trace_vector", "validate",
    "SlabPlan", "SolutionField", "boundary_traces", "derivative_t", "manufactured_problem",
    "picard_slab", "plan_slabs", "sigma_form_residual", "solve", "solve_derivative_x",
]
