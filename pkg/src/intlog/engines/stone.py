"""Stone representation at finite scale.

A finite probability algebra is represented by its atoms; elements are bit
masks over atom indices.  The axiom theory names one relation per element,
the model lives on the atoms, and the isomorphism check rebuilds the element
map ``a -> {x : R_a(x) = 1}`` from the model alone.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator

from ..logic import Integral, Language, Real, Rel, Statement, Theory, Var, derive_lattice, relation, sub
from ..measure import TAU, generated_algebra, make_space
from ..structure import InterpretedStructure, encode_ae, interpret

__all__ = [
    "FiniteProbabilityAlgebra",
    "StoneReport",
    "stone_language",
    "stone_theory",
    "stone_model",
    "stone_isomorphism_check",
]

#: elements are enumerated exhaustively, so keep the atom count modest
MAX_ATOMS = 12


@dataclass(frozen=True)
class FiniteProbabilityAlgebra:
    """The algebra of all subsets of ``atom_count`` atoms with a strictly
    positive measure of total mass 1."""

    atom_measures: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "atom_measures", tuple(float(m) for m in self.atom_measures))
        if not 1 <= len(self.atom_measures) <= MAX_ATOMS:
            raise ValueError(f"need between 1 and {MAX_ATOMS} atoms")
        if any(not (m > 0) or math.isinf(m) for m in self.atom_measures):
            raise ValueError("atom measures must be finite and strictly positive")
        if abs(math.fsum(self.atom_measures) - 1.0) > TAU:
            raise ValueError(f"atom measures sum to {math.fsum(self.atom_measures)!r}, not 1")

    @property
    def atom_count(self) -> int:
        return len(self.atom_measures)

    @property
    def top(self) -> int:
        return (1 << self.atom_count) - 1

    def elements(self) -> Iterator[int]:
        return iter(range(1 << self.atom_count))

    def measure(self, a: int) -> float:
        return math.fsum(m for i, m in enumerate(self.atom_measures) if a >> i & 1)

    def complement(self, a: int) -> int:
        return self.top & ~a

    def name(self, a: int) -> str:
        """``R_`` followed by one digit per atom, in atom order."""
        return "R_" + "".join("1" if a >> i & 1 else "0" for i in range(self.atom_count))


def stone_language(B: FiniteProbabilityAlgebra) -> Language:
    return Language(relation(B.name(a), 1, 1.0) for a in B.elements())


def _r(B: FiniteProbabilityAlgebra, a: int) -> Rel:
    return Rel(B.name(a), (Var("x"),))


def stone_theory(B: FiniteProbabilityAlgebra) -> Theory:
    """Range, integral and complement axioms per element, then one join
    axiom per unordered pair of distinct elements."""
    out: list[Statement] = []
    for a in B.elements():
        tag = B.name(a)[2:]
        out.append(encode_ae("range", _r(B, a), values=(0.0, 1.0), label=f"range_{tag}"))
        out.append(Statement(Integral(_r(B, a), "x"), "==", B.measure(a), f"int_{tag}"))
        out.append(
            encode_ae("equal", _r(B, B.complement(a)), sub(Real(1.0), _r(B, a)), label=f"compl_{tag}")
        )
    for a, b in itertools.combinations(B.elements(), 2):
        label = f"join_{B.name(a)[2:]}_{B.name(b)[2:]}"
        out.append(encode_ae("equal", _r(B, a | b), derive_lattice("max", _r(B, a), _r(B, b)), label=label))
    return Theory(tuple(out))


def stone_model(B: FiniteProbabilityAlgebra) -> InterpretedStructure:
    """Points are the atoms, weighted by their measures; ``R_a`` is the
    indicator of the atoms below ``a``."""
    k = B.atom_count
    space = make_space([f"a{i}" for i in range(k)], B.atom_measures)
    tables = {
        B.name(a): [1.0 if a >> i & 1 else 0.0 for i in range(k)] for a in B.elements()
    }
    return interpret(space, stone_language(B), tables)


@dataclass(frozen=True)
class StoneReport:
    checks: dict[str, bool]
    witnesses: dict[str, str] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


def stone_isomorphism_check(B: FiniteProbabilityAlgebra, M: InterpretedStructure, tol: float = TAU) -> StoneReport:
    """Verify that ``a -> [X_a]`` (classes modulo null sets) is a measure
    preserving Boolean isomorphism onto the algebra generated by the X_a."""
    space = M.space
    X: dict[int, int] = {}
    for a in B.elements():
        row = M.tables[B.name(a)]
        X[a] = sum(1 << i for i in range(space.size) if row[i] == 1.0)

    def null(mask: int) -> bool:
        return space.measure(mask) <= tol

    def same(m1: int, m2: int) -> bool:
        return null(m1 ^ m2)

    checks: dict[str, bool] = {}
    witnesses: dict[str, str] = {}

    def record(name: str, failure: str | None) -> None:
        checks[name] = failure is None
        if failure is not None:
            witnesses[name] = failure

    elems = list(B.elements())
    n = B.name

    failure = None
    for a, b in itertools.combinations(elems, 2):
        if same(X[a], X[b]):
            failure = f"{n(a)} and {n(b)} map to the same class"
            break
    record("injective", failure)

    # surjectivity: every member of the generated algebra is some [X_a]
    failure = None
    alg = generated_algebra(space, X.values())
    classes = list(X.values())
    for m in alg.members():
        if not any(same(m, c) for c in classes):
            failure = f"member {space.members(m)} has no preimage"
            break
    record("surjective", failure)

    failure = None
    for a in elems:
        if abs(space.measure(X[a]) - B.measure(a)) > tol:
            failure = f"{n(a)}: measure {space.measure(X[a])!r} != {B.measure(a)!r}"
            break
    record("measure_preserving", failure)

    failure = None
    for a in elems:
        if not same(X[B.complement(a)], space.full & ~X[a]):
            failure = f"complement of {n(a)}"
            break
    record("complements", failure)

    for name, op, setop in (
        ("joins", lambda a, b: a | b, lambda s, t: s | t),
        ("meets", lambda a, b: a & b, lambda s, t: s & t),
    ):
        failure = None
        for a, b in itertools.product(elems, repeat=2):
            if not same(X[op(a, b)], setop(X[a], X[b])):
                failure = f"{name[:-1]} of {n(a)} and {n(b)}"
                break
        record(name, failure)

    # finite chains: the image of the top of a chain is the union of the images
    failure = None
    for order in itertools.permutations(range(B.atom_count)) if B.atom_count <= 6 else [range(B.atom_count)]:
        acc, union = 0, 0
        for i in order:
            acc |= 1 << i
            union |= X[acc]
            if not same(X[acc], union):
                failure = f"chain ending at {n(acc)}"
                break
        if failure:
            break
    record("chains", failure)
    return StoneReport(checks, witnesses)

