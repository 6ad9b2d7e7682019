"""Executable finite-scale versions of the Stone, Daniell-Stone and Riesz
constructions, plus the outer-measure push-down check."""

from .daniell import ConstructionReport, DaniellInstance, daniell_model, daniell_theory
from .pushdown import PushdownReport, pushdown_check
from .riesz import DiniReport, Grid, compile_expression, riesz_model
from .stone import (
    FiniteProbabilityAlgebra,
    StoneReport,
    stone_isomorphism_check,
    stone_model,
    stone_theory,
)

__all__ = [
    "ConstructionReport",
    "DaniellInstance",
    "DiniReport",
    "Grid",
    "PushdownReport",
    "compile_expression",
    "pushdown_check",
    "riesz_model",
    "FiniteProbabilityAlgebra",
    "StoneReport",
    "daniell_model",
    "daniell_theory",
    "stone_isomorphism_check",
    "stone_model",
    "stone_theory",
]
