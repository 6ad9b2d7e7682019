"""Integral transfer to a subset of full outer measure.

Given a finite ``N`` with an algebra and a premeasure, and a subset ``X``:
when ``X`` has full outer measure, every measurable function integrates to
the same value over ``N`` and over ``X`` with the subspace measure, and the
increasing indicator sequences of the positive sets ``U = f^-1(0, inf)``
satisfy ``int f_n dnu <= nu(U)``.  When ``X`` is not of full outer measure
the smallest algebra member containing it is the witness.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from ..lattice import LatticeFn, check_special_pair, indicator_seq, stabilization_index
from ..measure import TAU, PremeasureTable, outer_measure, subspace_measure

__all__ = ["PushdownReport", "pushdown_check"]


@dataclass(frozen=True)
class PushdownReport:
    outer: float
    total: float
    full: bool
    cover: int | None = None
    cover_measure: float | None = None
    transfers: dict[str, tuple[float, float]] = field(default_factory=dict)
    subclaim: dict[str, tuple[int, float, float]] = field(default_factory=dict)
    checks: dict[str, bool] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.full and all(self.checks.values())


def pushdown_check(
    premeasure: PremeasureTable,
    subset: int,
    functions: Mapping[str, Sequence[float] | LatticeFn],
    tol: float = TAU,
) -> PushdownReport:
    """Check the transfer for ``functions`` and their pairwise sums and joins.

    Every function must be constant on the atoms of the algebra.
    """
    space = premeasure.ambient
    total = premeasure.total
    outer = outer_measure(premeasure, subset)
    if abs(outer - total) > tol:
        cover = premeasure.algebra.cover(subset)
        return PushdownReport(outer, total, False, cover, premeasure.value(cover))

    fns = {name: f if isinstance(f, LatticeFn) else LatticeFn(f) for name, f in functions.items()}
    lattice = dict(fns)
    for (a, f), (b, g) in itertools.combinations(fns.items(), 2):
        lattice[f"{a}+{b}"] = f + g
        lattice[f"max({a},{b})"] = f.join(g)

    nu_x = subspace_measure(premeasure, subset)
    transfers = {}
    for name, f in lattice.items():
        vals = f.values.tolist()
        transfers[name] = (nu_x.integrate(vals), premeasure.integrate(vals))
    checks = {"transfer": all(abs(a - b) <= tol for a, b in transfers.values())}

    # Subclaim: f_n increases to 1_U with support in U, and (f_n, f) is special
    subclaim = {}
    special_ok = True
    bound_ok = True
    for name, f in fns.items():
        U = f.positive_set()
        nu_u = premeasure.value(U)
        seq = indicator_seq([(f, (0.0, math.inf))], "open")
        n_star = stabilization_index(seq)
        worst = -math.inf
        schedule = sorted({n_star} | {1 << k for k in range(n_star.bit_length()) if 1 << k < n_star})
        for n in schedule:
            fn = seq(n)
            special_ok &= check_special_pair(fn, f) == "exact"
            worst = max(worst, premeasure.integrate(fn.values.tolist()))
        subclaim[name] = (n_star, worst, nu_u)
        bound_ok &= worst <= nu_u + tol
    checks["special_pairs"] = special_ok
    checks["subclaim"] = bound_ok
    return PushdownReport(outer, total, True, None, None, transfers, subclaim, checks)
