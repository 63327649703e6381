"""Approximation algorithms for Firefighter and RMFC on rooted trees."""
from .errors import (CertificateError, EnumerationBudgetExceeded, FiretreeError, InstanceError,
                     InstanceTooLarge, NonIntegralVertex, ResourceCapExceeded, TreeError)
from .ff_ptas import ptas_core, ptas_pipeline, reoptimize_tight
from .lp import RationalLP, build_lp_ff, build_lp_rmfc_ad, classify_tight_loose, solve_vertex
from .oracles import brute_force_ff, brute_force_rmfc, greedy_hartnell_li
from .rmfc import big_b_solve, bottom_cover, enum, enum_solve, rmfc_pipeline, slice_cover
from .transforms import (compress_ff, compress_rmfc, contract_zero_budget_levels,
                         general_to_unit_budget, lift, prune, weighted_to_unit_weight)
from .tree import (Instance, ProtectionPlan, RootedTree, build_tree, rmfc_feasible,
                   saved_weight, subtree_weights, validate_protection)

__version__ = "0.1.0"

__all__ = [
    "CertificateError", "EnumerationBudgetExceeded", "FiretreeError", "InstanceError",
    "InstanceTooLarge", "NonIntegralVertex", "ResourceCapExceeded", "TreeError",
    "ptas_core", "ptas_pipeline", "reoptimize_tight",
    "RationalLP", "build_lp_ff", "build_lp_rmfc_ad", "classify_tight_loose", "solve_vertex",
    "brute_force_ff", "brute_force_rmfc", "greedy_hartnell_li",
    "big_b_solve", "bottom_cover", "enum", "enum_solve", "rmfc_pipeline", "slice_cover",
    "compress_ff", "compress_rmfc", "contract_zero_budget_levels", "general_to_unit_budget",
    "lift", "prune", "weighted_to_unit_weight",
    "Instance", "ProtectionPlan", "RootedTree", "build_tree", "rmfc_feasible", "saved_weight",
    "subtree_weights", "validate_protection",
]
