"""Daniell-Stone at finite scale: the axiom theory for a finite instance and
the epsilon-approximate model built from a positive functional.

The model construction follows the existence argument step by step:

1. normalize ``I`` so that ``I(1) = 1`` (or take the zero measure if
   ``I(1) = 0``);
2. shift each generator so it is strictly positive;
3. split ``J = [0, alpha)`` into pieces shorter than the internal epsilon
   whose endpoints are inessential for every generator;
4. take the atoms ``P_k`` of the algebra generated by the preimages of the
   pieces, and their open-piece cores ``P*_k``;
5. set ``lambda0(P_k) = lim I(xi_n)`` for the increasing sequence ``xi_n``
   tending to the indicator of ``P*_k`` (reached exactly at a finite index);
6. normalize ``lambda0`` and spread each atom's mass evenly over its points.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from ..lattice import (
    IndicatorSeq,
    Interval,
    LatticeFn,
    PositiveFunctional,
    find_inessential,
    indicator_seq,
    stabilization_index,
)
from ..logic import (
    Add,
    Const,
    Integral,
    Language,
    Mul,
    Real,
    Rel,
    Statement,
    Theory,
    Var,
    constant,
    derive_lattice,
    relation,
)
from ..measure import TAU, generated_algebra, make_space
from ..structure import InterpretedStructure, encode_ae, interpret

__all__ = [
    "DaniellInstance",
    "ConstructionReport",
    "daniell_catalogue",
    "daniell_language",
    "daniell_theory",
    "daniell_model",
    "SEPARATION_CAP",
    "STATEMENT_BUDGET",
    "MAX_PIECES",
]

#: emit pairwise "constants are distinct" axioms only up to this many points
SEPARATION_CAP = 64
#: refuse to build theories larger than this
STATEMENT_BUDGET = 100_000
#: refuse partitions of J with more pieces than this
MAX_PIECES = 2_000_000

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_POINT = re.compile(r"[A-Za-z0-9_]+\Z")


@dataclass(frozen=True)
class DaniellInstance:
    """Finite domain, named bounded generators, a positive functional and
    the target accuracy."""

    points: tuple[str, ...]
    generators: tuple[tuple[str, LatticeFn], ...]
    functional: PositiveFunctional
    epsilon: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "points", tuple(self.points))
        gens = self.generators.items() if isinstance(self.generators, Mapping) else self.generators
        gens = tuple((name, f if isinstance(f, LatticeFn) else LatticeFn(f)) for name, f in gens)
        object.__setattr__(self, "generators", gens)
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")
        if not self.points:
            raise ValueError("the domain must be nonempty")
        if len(set(self.points)) != len(self.points):
            raise ValueError("duplicate point ids")
        for p in self.points:
            if not _POINT.match(p):
                raise ValueError(f"point id {p!r} must consist of letters, digits and '_'")
        names = [name for name, _ in gens]
        if len(set(names)) != len(names):
            raise ValueError("duplicate generator names")
        for name, f in gens:
            if not _IDENT.match(name):
                raise ValueError(f"generator name {name!r} is not an identifier")
            if len(f) != len(self.points):
                raise ValueError(f"generator {name!r} has {len(f)} values for {len(self.points)} points")
        if self.functional.size != len(self.points):
            raise ValueError("functional and domain differ in size")

    @property
    def size(self) -> int:
        return len(self.points)

    def generator_map(self) -> dict[str, LatticeFn]:
        return dict(self.generators)


@dataclass(frozen=True)
class ConstructionReport:
    kind: str
    epsilon: float
    epsilon_internal: float
    endpoints: tuple[float, ...]
    atoms: tuple[int, ...]
    atoms_star: tuple[int, ...]
    lambda0: tuple[float, ...]
    lambda0_total: float
    weights: tuple[float, ...]
    shifts: dict[str, float]
    residuals: dict[str, float]
    bounds: dict[str, float]
    checks: dict[str, bool]
    info: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    @property
    def residual_max(self) -> float:
        return max(self.residuals.values(), default=0.0)


# --------------------------------------------------------------------------
# theory


def daniell_catalogue(instance: DaniellInstance, combos: bool = True) -> dict[str, LatticeFn]:
    """Relation name -> interpreting function, in emission order.

    Generators first, then the constants 0 and 1, then (with ``combos``)
    negations, pairwise sums and pairwise joins.
    """
    n = instance.size
    gens = instance.generators
    out: dict[str, LatticeFn] = {f"R_{name}": f for name, f in gens}
    out["R_0"] = LatticeFn.const(n, 0.0)
    out["R_1"] = LatticeFn.const(n, 1.0)
    if combos:
        for name, f in gens:
            out[f"R_neg_{name}"] = -f
        for (a, f), (b, g) in itertools.combinations(gens, 2):
            out[f"R_sum_{a}_{b}"] = f + g
        for (a, f), (b, g) in itertools.combinations(gens, 2):
            out[f"R_max_{a}_{b}"] = f.join(g)
    return out


def daniell_language(instance: DaniellInstance, combos: bool = True) -> Language:
    cat = daniell_catalogue(instance, combos)
    syms = [relation(name, 1, float(np.max(np.abs(f.values)))) for name, f in cat.items()]
    syms += [constant(f"c_{p}") for p in instance.points]
    return Language(syms)


def _normalized(I: PositiveFunctional) -> tuple[float, Any]:
    one = I.one
    if one <= TAU:
        return one, I
    return one, lambda f: I(f) / one


def daniell_theory(
    instance: DaniellInstance,
    *,
    combos: bool = True,
    separation_cap: int = SEPARATION_CAP,
    budget: int = STATEMENT_BUDGET,
) -> Theory:
    """Axiom instances for the instance's generators and their requested
    combinations.  Integral axioms use ``I(f) / I(1)`` (``I`` normalized)."""
    cat = daniell_catalogue(instance, combos)
    pts = instance.points
    n = len(pts)
    count = (n * (n - 1) // 2 if n <= separation_cap else 0) + n * len(cat) + 2 + len(cat)
    if combos:
        k = len(instance.generators)
        count += k + k * (k - 1)
    if count > budget:
        raise ValueError(f"theory would have {count} statements, budget is {budget}")

    x = Var("x")
    one, In = _normalized(instance.functional)
    out: list[Statement] = []
    if n <= separation_cap:
        for a, b in itertools.combinations(pts, 2):
            out.append(Statement(Rel("e", (Const(f"c_{a}"), Const(f"c_{b}"))), "==", 0.0, f"sep_{a}_{b}"))
    for name, f in cat.items():
        for i, p in enumerate(pts):
            out.append(Statement(Rel(name, (Const(f"c_{p}"),)), "==", f[i], f"at_{name[2:]}_{p}"))
    for r in (0.0, 1.0):
        name = f"R_{int(r)}"
        out.append(encode_ae("equal", Rel(name, (x,)), Real(r), label=f"const_{int(r)}"))
    if combos:
        gens = instance.generators
        for a, _ in gens:
            out.append(
                encode_ae("equal", Rel(f"R_neg_{a}", (x,)), Mul(Real(-1.0), Rel(f"R_{a}", (x,))), label=f"scale_neg_{a}")
            )
        for (a, _), (b, _) in itertools.combinations(gens, 2):
            rhs = Rel(f"R_{a}", (x,)), Rel(f"R_{b}", (x,))
            out.append(encode_ae("equal", Rel(f"R_sum_{a}_{b}", (x,)), Add(*rhs), label=f"sum_{a}_{b}"))
        for (a, _), (b, _) in itertools.combinations(gens, 2):
            rhs = Rel(f"R_{a}", (x,)), Rel(f"R_{b}", (x,))
            out.append(
                encode_ae("equal", Rel(f"R_max_{a}_{b}", (x,)), derive_lattice("max", *rhs), label=f"join_{a}_{b}")
            )
    for name, f in cat.items():
        out.append(Statement(Integral(Rel(name, (x,)), "x"), "==", In(f), f"int_{name[2:]}"))
    return Theory(tuple(out))


# --------------------------------------------------------------------------
# model


@dataclass(frozen=True)
class _Construction:
    structure: InterpretedStructure
    report: ConstructionReport
    sequences: tuple[IndicatorSeq, ...]
    normalized: Any


def _structure(instance: DaniellInstance, weights: Sequence[float], combos: bool, probability: bool) -> InterpretedStructure:
    space = make_space(instance.points, weights)
    cat = daniell_catalogue(instance, combos)
    tables = {name: f.values for name, f in cat.items()}
    consts = {f"c_{p}": p for p in instance.points}
    return interpret(space, daniell_language(instance, combos), tables, consts, probability=probability)


def _construct(instance: DaniellInstance, combos: bool = True, kind: str = "daniell") -> _Construction:
    eps = instance.epsilon
    n = instance.size
    I = instance.functional
    gens = instance.generator_map()
    one, In = _normalized(I)

    if one <= TAU:
        # zero functional: the zero measure represents it
        weights = (0.0,) * n
        residuals = {name: abs(I(f)) for name, f in gens.items()}
        bounds = {name: eps * (1 + float(np.max(np.abs(f.values)))) for name, f in gens.items()}
        report = ConstructionReport(
            kind, eps, eps, (), (), (), (), 0.0, weights, {}, residuals, bounds,
            {"residual_bound": all(residuals[k] <= bounds[k] for k in residuals)},
            {"zero_functional": True},
        )
        return _Construction(_structure(instance, weights, combos, False), report, (), I)

    # the constant function is always among the working generators
    work = dict(gens)
    if not any(np.all(f.values == 1.0) for f in work.values()):
        work["__one"] = LatticeFn.const(n, 1.0)
    shifts = {name: (1.0 - f.inf if f.inf <= 0 else 0.0) for name, f in work.items()}
    shifted = {name: f + shifts[name] for name, f in work.items()}
    fs = list(shifted.values())
    top = max(f.sup for f in fs)
    eps_int = eps / (2 * (1 + top))

    # partition of J = [0, alpha) with inessential endpoints
    d = eps_int / 2
    pieces = int(math.floor(top / d)) + 1
    # keep the right end of J well clear of the top value, or the last open
    # cell would need an astronomically late index to stabilize
    if pieces * d - top < d / 2:
        pieces += 1
    if pieces > MAX_PIECES:
        raise ValueError(
            f"the partition would need {pieces} pieces (limit {MAX_PIECES}); rescale the generators or raise epsilon"
        )
    alpha = pieces * d
    Ifn = PositiveFunctional(In, n)
    endpoints = [0.0]
    for j in range(1, pieces):
        endpoints.append(find_inessential(fs, (j * d - d / 4, j * d + d / 4), Ifn))
    endpoints.append(alpha)
    u = np.array(endpoints)

    # atoms of the algebra generated by f_i^-1([u_j, u_j+1))
    generators = []
    for f in fs:
        cell = np.searchsorted(u, f.values, side="right") - 1
        for j in np.unique(cell):
            generators.append(sum(1 << int(i) for i in np.flatnonzero(cell == j)))
    algebra = generated_algebra(make_space(instance.points, [0.0] * n), generators)
    atoms = algebra.atoms

    seqs, stars, lam0 = [], [], []
    for atom in atoms:
        x = (atom & -atom).bit_length() - 1
        constraints = []
        for f in fs:
            j = int(np.searchsorted(u, f.values[x], side="right") - 1)
            constraints.append((f, Interval.open(float(u[j]), float(u[j + 1]))))
        seq = indicator_seq(constraints, "open", "intersection")
        seqs.append(seq)
        stars.append(seq.target)
        lam0.append(Ifn(seq(stabilization_index(seq))))
    total0 = math.fsum(lam0)

    checks: dict[str, bool] = {}
    checks["lambda0_total"] = 1 - eps <= total0 <= 1 + eps
    if total0 <= 0:
        raise ArithmeticError("lambda0(X) = 0 although I(1) > 0: construction violated")

    weights = np.zeros(n)
    for atom, mass in zip(atoms, lam0):
        idx = [i for i in range(n) if atom >> i & 1]
        weights[idx] = mass / total0 / len(idx)
    weights_t = tuple(float(w) for w in weights)

    osc = 0.0
    for atom in atoms:
        idx = [i for i in range(n) if atom >> i & 1]
        for f in fs:
            vals = f.values[idx]
            osc = max(osc, float(vals.max() - vals.min()))
    checks["cell_oscillation"] = osc < eps_int
    checks["probability"] = bool((weights >= 0).all()) and abs(math.fsum(weights_t) - 1) <= TAU

    residuals, bounds = {}, {}
    for name, f in gens.items():
        integral = math.fsum((f.values * weights).tolist())
        residuals[name] = abs(In(f) - integral)
        bounds[name] = eps * (1 + float(np.max(np.abs(f.values))))
    checks["residual_bound"] = all(residuals[k] <= bounds[k] for k in residuals)

    report = ConstructionReport(
        kind,
        eps,
        eps_int,
        tuple(endpoints),
        tuple(atoms),
        tuple(stars),
        tuple(lam0),
        total0,
        weights_t,
        {k: v for k, v in shifts.items() if k in gens},
        residuals,
        bounds,
        checks,
        {"functional_one": one, "max_oscillation": osc, "pieces": pieces},
    )
    return _Construction(_structure(instance, weights_t, combos, True), report, tuple(seqs), Ifn)


def daniell_model(
    instance: DaniellInstance, *, combos: bool = True
) -> tuple[InterpretedStructure, ConstructionReport]:
    """Build the epsilon-approximate model of the instance's axioms.

    ``R_f`` is interpreted by ``f`` itself and ``c_a`` by ``a``; only the
    measure is constructed.
    """
    c = _construct(instance, combos)
    return c.structure, c.report
