"""Finite structures for integration logic and formula evaluation.

A structure is a finite probability space plus a value table for every
relation symbol and a point for every constant symbol.  Integrals are
weighted sums over the points.  ``exact=True`` evaluates with
``fractions.Fraction`` (every float converts exactly), which makes laws such
as finite Fubini hold with equality rather than up to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterable, Mapping, Sequence

import numpy as np

from .logic import (
    EQUALITY,
    Abs,
    Add,
    Formula,
    Integral,
    Language,
    Mul,
    Real,
    Rel,
    Statement,
    Symbol,
    Theory,
    Var,
    free_vars,
    sub,
    sub_const,
)
from .measure import TAU, FiniteMeasureSpace

__all__ = [
    "InterpretedStructure",
    "StatementResult",
    "CheckReport",
    "StructureError",
    "interpret",
    "eval_formula",
    "check_statement",
    "check_statement_approx",
    "check_theory",
    "encode_ae",
]


class StructureError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class InterpretedStructure:
    """A validated finite structure; build it with :func:`interpret`."""

    space: FiniteMeasureSpace
    language: Language
    tables: Mapping[str, np.ndarray]
    constants: Mapping[str, int]
    _lookup: Mapping[str, Any] = field(repr=False)

    @property
    def points(self) -> tuple[str, ...]:
        return self.space.points

    @property
    def weights(self) -> tuple[float, ...]:
        return self.space.weights

    def relation_value(self, name: str, args: Sequence[int]) -> float:
        return float(self.tables[name][tuple(args)])


def _table_array(
    space: FiniteMeasureSpace, sym: Symbol, spec: Any
) -> np.ndarray:
    n = space.size
    shape = (n,) * sym.arity
    if isinstance(spec, Mapping):
        arr = np.full(shape, np.nan)
        for key, value in spec.items():
            if sym.arity == 1 and not isinstance(key, tuple):
                key = (key,)
            if len(key) != sym.arity:
                raise StructureError(f"{sym.name}: entry {key!r} has wrong arity")
            idx = tuple(k if isinstance(k, (int, np.integer)) else space.index(k) for k in key)
            arr[idx] = float(value)
        if np.isnan(arr).any():
            missing = tuple(int(i) for i in np.argwhere(np.isnan(arr))[0])
            names = ",".join(space.points[i] for i in missing)
            raise StructureError(f"{sym.name}: missing table entry for ({names})")
        return arr
    arr = np.asarray(spec, dtype=float)
    if arr.shape != shape:
        raise StructureError(f"{sym.name}: table shape {arr.shape} != {shape}")
    if np.isnan(arr).any():
        raise StructureError(f"{sym.name}: table has NaN entries")
    return arr.copy()


def interpret(
    space: FiniteMeasureSpace,
    language: Language | Iterable[Symbol],
    tables: Mapping[str, Any],
    constants: Mapping[str, str | int] | None = None,
    *,
    probability: bool = True,
    tol: float = TAU,
) -> InterpretedStructure:
    """Validate and assemble a structure.

    ``tables`` maps relation names to either an array of shape
    ``(|M|,) * arity`` or a mapping from point ids (tuples of ids for arity
    above 1) to values.  The equality table is generated; a supplied one is
    checked against the diagonal.
    """
    lang = Language.coerce(language)
    constants = dict(constants or {})
    if probability and not space.is_probability(tol):
        raise StructureError(f"not a probability space: total weight {space.total!r}")
    if space.size == 0:
        raise StructureError("a structure needs at least one point")

    unknown = set(tables) - {s.name for s in lang.relations}
    if unknown:
        raise StructureError(f"tables for undeclared relations: {sorted(unknown)}")

    arrays: dict[str, np.ndarray] = {}
    for sym in lang.relations:
        if sym.name == EQUALITY.name:
            eye = np.eye(space.size)
            if "e" in tables:
                given = _table_array(space, sym, tables["e"])
                if not np.array_equal(given, eye):
                    raise StructureError("equality must be 1 on the diagonal and 0 off it")
            arrays["e"] = eye
            continue
        if sym.name not in tables:
            raise StructureError(f"no table for relation {sym.name!r}")
        arr = _table_array(space, sym, tables[sym.name])
        worst = float(np.max(np.abs(arr))) if arr.size else 0.0
        if worst > sym.bound:
            raise StructureError(
                f"{sym.name}: value {worst!r} exceeds universal bound {sym.bound!r}"
            )
        arrays[sym.name] = arr

    consts: dict[str, int] = {}
    for sym in lang.constants:
        if sym.name not in constants:
            raise StructureError(f"no interpretation for constant {sym.name!r}")
        p = constants[sym.name]
        consts[sym.name] = p if isinstance(p, int) else space.index(p)
        if not 0 <= consts[sym.name] < space.size:
            raise StructureError(f"constant {sym.name!r} is not a point")
    extra = set(constants) - set(consts)
    if extra:
        raise StructureError(f"interpretations for undeclared constants: {sorted(extra)}")

    lookup = {name: arr.tolist() for name, arr in arrays.items()}
    return InterpretedStructure(space, lang, arrays, consts, lookup)


# --------------------------------------------------------------------------
# evaluation


class _Compiler:
    """Turns a formula into nested closures over a mutable environment.

    Integrals sum ``value * weight`` over the points in index order, so the
    result does not depend on how the closures are arranged.
    """

    def __init__(self, M: InterpretedStructure, exact: bool) -> None:
        self.M = M
        if exact:
            self.weights = [Fraction(w) for w in M.space.weights]
            self.num: Any = Fraction
            self.tables = {k: _map_nested(v, Fraction) for k, v in M._lookup.items()}
        else:
            self.weights = [float(w) for w in M.space.weights]
            self.num = float
            self.tables = M._lookup

    def term(self, t: Any) -> Callable[[dict[str, int]], int]:
        if isinstance(t, Var):
            name = t.name

            def var(env: dict[str, int]) -> int:
                try:
                    return env[name]
                except KeyError:
                    raise StructureError(f"unassigned free variable {name!r}") from None

            return var
        idx = self.M.constants.get(t.name)
        if idx is None:
            raise StructureError(f"constant {t.name!r} is not interpreted")
        return lambda env: idx

    def __call__(self, f: Formula) -> Callable[[dict[str, int]], Any]:
        if isinstance(f, Rel):
            table = self.tables.get(f.name)
            if table is None:
                raise StructureError(f"relation {f.name!r} is not interpreted")
            args = [self.term(t) for t in f.args]
            if len(args) == 1:
                a0 = args[0]
                return lambda env: table[a0(env)]
            if len(args) == 2:
                a0, a1 = args
                return lambda env: table[a0(env)][a1(env)]

            def rel(env: dict[str, int]) -> Any:
                row = table
                for a in args:
                    row = row[a(env)]
                return row

            return rel
        if isinstance(f, Real):
            c = self.num(f.value)
            return lambda env: c
        if isinstance(f, Abs):
            g = self(f.arg)
            return lambda env: abs(g(env))
        if isinstance(f, Add):
            left, right = self(f.left), self(f.right)
            return lambda env: left(env) + right(env)
        if isinstance(f, Mul):
            left, right = self(f.left), self(f.right)
            return lambda env: left(env) * right(env)
        if isinstance(f, Integral):
            body, var, weights, zero = self(f.body), f.var, self.weights, self.num(0)

            def integral(env: dict[str, int]) -> Any:
                saved = env.get(var)
                acc = zero
                for p, w in enumerate(weights):
                    env[var] = p
                    acc += body(env) * w
                if saved is None:
                    env.pop(var, None)
                else:
                    env[var] = saved
                return acc

            return integral
        raise TypeError(f"not a formula: {f!r}")


def _map_nested(rows: Any, conv: Callable[[float], Any]) -> Any:
    if isinstance(rows, list):
        return [_map_nested(r, conv) for r in rows]
    return conv(rows)


def eval_formula(
    M: InterpretedStructure,
    f: Formula,
    assignment: Mapping[str, str | int] | None = None,
    *,
    exact: bool = False,
) -> float | Fraction:
    """Value of ``f`` in ``M`` under ``assignment`` (variable -> point id or index)."""
    env: dict[str, int] = {}
    for var, p in (assignment or {}).items():
        env[var] = p if isinstance(p, int) else M.space.index(p)
        if not 0 <= env[var] < M.space.size:
            raise StructureError(f"variable {var!r} is assigned to a non-point")
    return _Compiler(M, exact)(f)(env)


# --------------------------------------------------------------------------
# statements and theories


@dataclass(frozen=True)
class StatementResult:
    label: str | None
    value: float
    threshold: float
    relation: str
    residual: float
    passed: bool
    error: str | None = None

    @property
    def violation(self) -> float:
        """How far the statement is from holding exactly (0 when it holds)."""
        if self.error is not None:
            return math.inf
        if self.relation == "==":
            return self.residual
        return max(0.0, -self.residual)


def _residual(value: float, s: Statement) -> float:
    return abs(value - s.threshold) if s.relation == "==" else value - s.threshold


def _closed_value(M: InterpretedStructure, s: Statement) -> float:
    try:
        return float(eval_formula(M, s.formula))
    except StructureError as exc:
        if free_vars(s.formula):
            raise StructureError(f"statement has free variables {free_vars(s.formula)}") from exc
        raise


def check_statement(M: InterpretedStructure, s: Statement, tol: float = TAU) -> StatementResult:
    """``==`` passes iff ``|value - r| <= tol``; ``>=`` iff ``value >= r - tol``."""
    if tol < 0:
        raise ValueError("tol must be >= 0")
    value = _closed_value(M, s)
    res = _residual(value, s)
    ok = res <= tol if s.relation == "==" else res >= -tol
    return StatementResult(s.label, value, s.threshold, s.relation, res, ok)


def check_statement_approx(M: InterpretedStructure, s: Statement, epsilon: float) -> StatementResult:
    """epsilon-approximate satisfaction: ``|value - r| <= eps`` or ``value >= r - eps``."""
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    return check_statement(M, s, epsilon)


@dataclass(frozen=True)
class CheckReport:
    results: tuple[StatementResult, ...]
    epsilon: float
    tol: float

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def pass_count(self) -> int:
        return sum(r.passed for r in self.results)

    @property
    def residual_max(self) -> float:
        return max((r.violation for r in self.results), default=0.0)

    @property
    def failures(self) -> list[StatementResult]:
        return [r for r in self.results if not r.passed]


def check_theory(
    M: InterpretedStructure, T: Theory | Iterable[Statement], epsilon: float = 0.0, tol: float = TAU
) -> CheckReport:
    """Check every statement at slack ``epsilon + tol``; errors are recorded
    per statement instead of raised."""
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    out = []
    for i, s in enumerate(T):
        label = s.label or f"s{i + 1}"
        try:
            r = check_statement(M, s, epsilon + tol)
        except (StructureError, KeyError) as exc:
            out.append(StatementResult(label, math.nan, s.threshold, s.relation, math.nan, False, str(exc)))
            continue
        out.append(StatementResult(label, r.value, r.threshold, r.relation, r.residual, r.passed))
    return CheckReport(tuple(out), epsilon, tol)


# --------------------------------------------------------------------------
# almost-everywhere encodings


def encode_ae(
    kind: str,
    phi: Formula,
    psi: Formula | None = None,
    values: Sequence[float] | None = None,
    *,
    label: str | None = None,
) -> Statement:
    """Closed statement expressing an almost-everywhere property of ``phi``.

    * ``zero``:  ``int[x](|phi|) == 0``
    * ``equal``: ``int[x](|phi - psi|) == 0``
    * ``range``: ``int[x](|(phi - r1)*...*(phi - rn)|) == 0``

    ``phi`` (with ``psi``) must have exactly one free variable, which is
    integrated out.
    """
    names = free_vars(phi)
    if kind == "equal":
        if psi is None:
            raise ValueError("'equal' needs a second formula")
        extra = [v for v in free_vars(psi) if v not in names]
        if extra:
            raise ValueError(f"free-variable mismatch: {extra} not free in the first formula")
        body = Abs(sub(phi, psi))
    elif kind == "zero":
        body = Abs(phi)
    elif kind == "range":
        if not values:
            raise ValueError("'range' needs a nonempty finite set of values")
        factors = [sub_const(phi, r) for r in values]
        prod = factors[0]
        for fac in factors[1:]:
            prod = Mul(prod, fac)
        body = Abs(prod)
    else:
        raise ValueError(f"unknown kind {kind!r}")
    if len(names) != 1:
        raise ValueError(f"expected exactly one free variable, found {names}")
    return Statement(Integral(body, names[0]), "==", 0.0, label)


def describe(result: StatementResult) -> str:
    status = "pass" if result.passed else "FAIL"
    return f"{result.label}: {status} value={result.value!r} {result.relation} {result.threshold!r}"

