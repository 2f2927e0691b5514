"""Optimal investment with an unhedgeable stochastic endowment via the reduced HJB equation."""

__version__ = "0.1.0"

from .asymptotics import check_asymptotic_equivalence, growth_constant, phi, phi_rk4, sandwich_bounds
from .estimator import EndowmentPolicyEstimator
from .hjb_solver import (GridConfig, SchemeConfig, SolutionSurface, SolverError, solve,
                         step_backward)
from .model import ConfigError, ModelParams, Schedule, merton_ratio, pension_params
from .montecarlo import McEstimate, SimConfig, homogeneity_check, policy_dominance_check, simulate_value
from .policy import (DomainError, PolicyFunction, asymptotic_policy_limit, evaluate_policy,
                     reconstruct_value)

__all__ = [
    "ConfigError", "DomainError", "EndowmentPolicyEstimator", "GridConfig", "McEstimate",
    "ModelParams", "PolicyFunction", "Schedule", "SchemeConfig", "SimConfig", "SolutionSurface",
    "SolverError", "asymptotic_policy_limit", "check_asymptotic_equivalence", "evaluate_policy",
    "growth_constant", "homogeneity_check", "merton_ratio", "pension_params", "phi", "phi_rk4",
    "policy_dominance_check", "reconstruct_value", "sandwich_bounds", "simulate_value", "solve",
    "step_backward",
]
