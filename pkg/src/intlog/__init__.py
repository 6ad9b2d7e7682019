"""Finite-scale integration logic: formulas, measures, structures and the
representation engines built on them."""

from .lattice import (
    ConvergenceError,
    Interval,
    LatticeFn,
    PositiveFunctional,
    check_special_pair,
    find_inessential,
    indicator_seq,
    is_inessential,
    refine_cover,
    stabilization_index,
    value_seq,
)
from .logic import (
    Abs,
    Add,
    Const,
    Integral,
    Language,
    Mul,
    ParseError,
    Real,
    Rel,
    Statement,
    Theory,
    Var,
    constant,
    derive_lattice,
    parse_formula,
    parse_statement,
    parse_theory,
    relation,
)
from .measure import (
    TAU,
    FiniteMeasureSpace,
    PremeasureTable,
    SetAlgebra,
    caratheodory_extend,
    generated_algebra,
    make_space,
    outer_measure,
    product_measure,
    subspace_measure,
)
from .structure import InterpretedStructure, check_statement, check_theory, encode_ae, eval_formula, interpret

__version__ = "0.1.0"
