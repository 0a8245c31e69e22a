"""Cuckoo search whose nests are Nelder-Mead simplexes, with baselines and a solar-cell model."""

from .objective import (
    BudgetExhausted,
    CountedObjective,
    DimensionMismatch,
    EvaluationBudget,
    ObjectiveSpec,
    OptimizationError,
    RunReport,
)
from .simplex import FlipCoefficients, Simplex, StoppingRule, flip, nms_minimize
from .cuckoo import CsParams, cs_minimize
from .hybrid import HybridParams, nmcs_minimize
from .baselines import GaParams, SaParams, ga_minimize, sa_minimize

__all__ = [
    "BudgetExhausted",
    "CountedObjective",
    "CsParams",
    "DimensionMismatch",
    "EvaluationBudget",
    "FlipCoefficients",
    "GaParams",
    "HybridParams",
    "ObjectiveSpec",
    "OptimizationError",
    "RunReport",
    "SaParams",
    "Simplex",
    "StoppingRule",
    "cs_minimize",
    "flip",
    "ga_minimize",
    "nmcs_minimize",
    "nms_minimize",
    "sa_minimize",
]
