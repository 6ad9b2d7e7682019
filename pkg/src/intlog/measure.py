"""Finite measure spaces, set algebras over them, and the classical
constructions (outer measure, subspace measure, Caratheodory extension,
product measure with diagonals) at finite scale.

Subsets of a space are Python ``int`` bit masks: bit ``i`` stands for the
point with index ``i``.  Python integers are unbounded, so there is no
width limit on a space.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

__all__ = [
    "TAU",
    "FiniteMeasureSpace",
    "SetAlgebra",
    "PremeasureTable",
    "SubspaceMeasure",
    "ExtendedMeasure",
    "ProductMeasure",
    "NonAdditiveError",
    "make_space",
    "generated_algebra",
    "atoms",
    "outer_measure",
    "subspace_measure",
    "caratheodory_extend",
    "product_measure",
    "bits",
    "popcount",
]

#: Tolerance for equality of measures.
TAU = 1e-9


def bits(mask: int) -> Iterator[int]:
    """Indices of the set bits of ``mask`` in increasing order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def popcount(mask: int) -> int:
    return bin(mask).count("1")


@dataclass(frozen=True)
class FiniteMeasureSpace:
    """Indexed points with nonnegative weights (full powerset measurable)."""

    points: tuple[str, ...]
    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.points) != len(self.weights):
            raise ValueError("points and weights differ in length")
        if len(set(self.points)) != len(self.points):
            dup = next(p for p in self.points if self.points.count(p) > 1)
            raise ValueError(f"duplicate point id {dup!r}")
        for p, w in zip(self.points, self.weights):
            if not w >= 0 or math.isinf(w):
                raise ValueError(f"weight of {p!r} must be finite and >= 0, got {w!r}")

    def __len__(self) -> int:
        return len(self.points)

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def full(self) -> int:
        return (1 << len(self.points)) - 1

    @property
    def total(self) -> float:
        return math.fsum(self.weights)

    def is_probability(self, tol: float = TAU) -> bool:
        return abs(self.total - 1.0) <= tol

    def index(self, point: str) -> int:
        try:
            return self.points.index(point)
        except ValueError:
            raise KeyError(f"unknown point {point!r}") from None

    def mask(self, points: Iterable[str | int]) -> int:
        m = 0
        for p in points:
            m |= 1 << (p if isinstance(p, int) else self.index(p))
        return m

    def members(self, mask: int) -> list[str]:
        return [self.points[i] for i in bits(mask)]

    def measure(self, mask: int) -> float:
        return math.fsum(self.weights[i] for i in bits(mask))

    def integrate(self, values: Sequence[float]) -> float:
        return math.fsum(v * w for v, w in zip(values, self.weights))


def make_space(
    points: Sequence[str] | int, weights: Sequence[float] | None = None
) -> FiniteMeasureSpace:
    """Build a validated space; ``points`` may be a count (ids ``p0, p1, ...``).

    Without ``weights`` the space is uniform with total mass 1.
    """
    if isinstance(points, int):
        points = [f"p{i}" for i in range(points)]
    points = tuple(str(p) for p in points)
    if weights is None:
        weights = [1.0 / len(points)] * len(points) if points else []
    return FiniteMeasureSpace(points, tuple(float(w) for w in weights))


# --------------------------------------------------------------------------
# set algebras


def _refine(partition: list[int], generator: int) -> list[int]:
    out = []
    for block in partition:
        inside = block & generator
        outside = block & ~generator
        if inside:
            out.append(inside)
        if outside:
            out.append(outside)
    return out


def _canonical(blocks: Iterable[int]) -> tuple[int, ...]:
    # order atoms by their lowest point index
    return tuple(sorted(blocks, key=lambda m: (m & -m).bit_length()))


class SetAlgebra:
    """A finite Boolean algebra of subsets of ``ambient``.

    A finite algebra is determined by its atoms, so only the atoms are
    stored; membership is "union of atoms" and ``members()`` enumerates.
    """

    __slots__ = ("ambient", "atoms")

    #: refuse to enumerate algebras with more atoms than this
    MAX_ENUMERATE_ATOMS = 20

    def __init__(self, ambient: FiniteMeasureSpace, atoms: Iterable[int]) -> None:
        atoms = _canonical(atoms)
        seen = 0
        for a in atoms:
            if a == 0:
                raise ValueError("atoms must be nonempty")
            if a & seen:
                raise ValueError("atoms overlap")
            seen |= a
        if seen != ambient.full:
            raise ValueError("atoms do not cover the ambient set")
        self.ambient = ambient
        self.atoms = atoms

    @classmethod
    def powerset(cls, ambient: FiniteMeasureSpace) -> "SetAlgebra":
        return cls(ambient, [1 << i for i in range(ambient.size)])

    @classmethod
    def from_members(cls, ambient: FiniteMeasureSpace, members: Iterable[int]) -> "SetAlgebra":
        """Validate an explicit member list (contains the empty and full
        sets, closed under complement and pairwise union)."""
        full = ambient.full
        family = set(members)
        if any(m & ~full for m in family):
            raise ValueError("member outside the ambient set")
        if 0 not in family or full not in family:
            raise ValueError("an algebra must contain the empty set and the ambient set")
        for m in family:
            if full & ~m not in family:
                raise ValueError(f"not closed under complement: {m:#b}")
        for a, b in itertools.combinations(family, 2):
            if a | b not in family:
                raise ValueError(f"not closed under union: {a:#b} | {b:#b}")
        nonempty = [m for m in family if m]
        minimal = [m for m in nonempty if not any(o != m and o & m == o for o in nonempty)]
        return cls(ambient, minimal)

    def __contains__(self, mask: object) -> bool:
        if not isinstance(mask, int) or mask & ~self.ambient.full:
            return False
        return all(mask & a in (0, a) for a in self.atoms)

    @property
    def size(self) -> int:
        """Number of members."""
        return 1 << len(self.atoms)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SetAlgebra):
            return NotImplemented
        return self.ambient == other.ambient and self.atoms == other.atoms

    def __hash__(self) -> int:
        return hash((self.ambient, self.atoms))

    def __repr__(self) -> str:
        return f"SetAlgebra(atoms={[bin(a) for a in self.atoms]})"

    def members(self) -> frozenset[int]:
        if len(self.atoms) > self.MAX_ENUMERATE_ATOMS:
            raise ValueError(f"refusing to enumerate 2**{len(self.atoms)} members")
        out = set()
        for r in range(len(self.atoms) + 1):
            for combo in itertools.combinations(self.atoms, r):
                m = 0
                for a in combo:
                    m |= a
                out.add(m)
        return frozenset(out)

    def cover(self, subset: int) -> int:
        """Smallest member containing ``subset``: the union of the atoms it meets."""
        m = 0
        for a in self.atoms:
            if a & subset:
                m |= a
        return m

    def atoms_of(self, member: int) -> list[int]:
        if member not in self:
            raise ValueError("not a member of the algebra")
        return [a for a in self.atoms if a & member]

    def trace(self, subset: int) -> tuple[int, ...]:
        """Atoms of the trace algebra ``{A & subset}``."""
        return _canonical(a & subset for a in self.atoms if a & subset)


def generated_algebra(ambient: FiniteMeasureSpace, generators: Iterable[int]) -> SetAlgebra:
    """Smallest algebra containing ``generators``.

    The atoms are reached as a fixpoint: every generator splits each current
    block into its part inside and its part outside the generator.
    """
    full = ambient.full
    partition = [full] if full else []
    for g in generators:
        if g & ~full:
            raise ValueError("generator outside the ambient set")
        partition = _refine(partition, g)
    return SetAlgebra(ambient, partition)


def atoms(algebra: SetAlgebra) -> list[int]:
    """Minimal nonempty members, ordered by lowest point index."""
    return list(algebra.atoms)


# --------------------------------------------------------------------------
# premeasures and derived measures


class NonAdditiveError(ValueError):
    pass


class PremeasureTable:
    """A finitely additive set function on a ``SetAlgebra``.

    Stored by its atom values; ``value(member)`` sums atoms.  When built from
    an explicit member table, every entry is checked against the atom sums.
    """

    __slots__ = ("algebra", "atom_values")

    def __init__(self, algebra: SetAlgebra, atom_values: Sequence[float]) -> None:
        if len(atom_values) != len(algebra.atoms):
            raise ValueError("one value per atom expected")
        for v in atom_values:
            if not v >= 0 or math.isinf(v):
                raise ValueError(f"premeasure values must be finite and >= 0, got {v!r}")
        self.algebra = algebra
        self.atom_values = tuple(float(v) for v in atom_values)

    @classmethod
    def from_weights(cls, algebra: SetAlgebra) -> "PremeasureTable":
        sp = algebra.ambient
        return cls(algebra, [sp.measure(a) for a in algebra.atoms])

    @classmethod
    def from_table(
        cls, algebra: SetAlgebra, table: Mapping[int, float], tol: float = TAU
    ) -> "PremeasureTable":
        for m in table:
            if m not in algebra:
                raise ValueError(f"{m:#b} is not a member of the algebra")
        missing = [a for a in algebra.atoms if a not in table]
        if missing:
            raise ValueError(f"no value given for atom {missing[0]:#b}")
        pm = cls(algebra, [table[a] for a in algebra.atoms])
        if abs(table.get(0, 0.0)) > tol:
            raise NonAdditiveError("value of the empty set must be 0")
        for m, v in table.items():
            if abs(pm.value(m) - v) > tol:
                raise NonAdditiveError(
                    f"not finitely additive: value {v!r} on {m:#b} but its atoms sum to {pm.value(m)!r}"
                )
        return pm

    @property
    def ambient(self) -> FiniteMeasureSpace:
        return self.algebra.ambient

    @property
    def total(self) -> float:
        return math.fsum(self.atom_values)

    def value(self, member: int) -> float:
        if member not in self.algebra:
            raise ValueError(f"{member:#b} is not a member of the algebra")
        return math.fsum(v for a, v in zip(self.algebra.atoms, self.atom_values) if a & member)

    def table(self) -> dict[int, float]:
        return {m: self.value(m) for m in self.algebra.members()}

    def integrate(self, values: Sequence[float]) -> float:
        """Integral of a point function that is constant on every atom."""
        return math.fsum(_atom_value(values, a) * v for a, v in zip(self.algebra.atoms, self.atom_values))


def _atom_value(values: Sequence[float], atom: int, tol: float = 0.0) -> float:
    idx = list(bits(atom))
    first = values[idx[0]]
    for i in idx[1:]:
        if abs(values[i] - first) > tol:
            raise ValueError("function is not measurable: not constant on an atom")
    return first


def outer_measure(premeasure: PremeasureTable, subset: int) -> float:
    """``inf {mu(A) : subset <= A, A in algebra}``.

    Monotonicity makes the union of atoms meeting ``subset`` the minimizer.
    """
    if subset & ~premeasure.ambient.full:
        raise ValueError("subset outside the ambient set")
    return premeasure.value(premeasure.algebra.cover(subset))


@dataclass(frozen=True)
class SubspaceMeasure:
    """Trace algebra on ``subset`` with the restricted outer measure."""

    premeasure: PremeasureTable
    subset: int
    atoms: tuple[int, ...]
    atom_values: tuple[float, ...]

    @property
    def total(self) -> float:
        return math.fsum(self.atom_values)

    def members(self) -> frozenset[int]:
        out = set()
        for r in range(len(self.atoms) + 1):
            for combo in itertools.combinations(self.atoms, r):
                out.add(sum(combo))
        return frozenset(out)

    def value(self, member: int) -> float:
        if member & ~self.subset:
            raise ValueError("set is not inside the subspace")
        out = []
        for a, v in zip(self.atoms, self.atom_values):
            inter = a & member
            if inter and inter != a:
                raise ValueError("set is not in the trace algebra")
            if inter:
                out.append(v)
        return math.fsum(out)

    def integrate(self, values: Sequence[float]) -> float:
        """Integral of ``values|_N``; ``values`` is indexed by ambient points."""
        return math.fsum(_atom_value(values, a) * v for a, v in zip(self.atoms, self.atom_values))


def subspace_measure(premeasure: PremeasureTable, subset: int) -> SubspaceMeasure:
    """Subspace measure on ``subset``: trace algebra ``{A & N}`` with ``mu*``."""
    if subset & ~premeasure.ambient.full:
        raise ValueError("subset outside the ambient set")
    trace = premeasure.algebra.trace(subset)
    return SubspaceMeasure(
        premeasure, subset, trace, tuple(outer_measure(premeasure, t) for t in trace)
    )


# --------------------------------------------------------------------------
# Caratheodory extension


@dataclass(frozen=True)
class ExtendedMeasure:
    """A measure on ``sigma(domain)`` given by its atom values."""

    algebra: SetAlgebra
    atom_values: tuple[float, ...]
    outer: Mapping[int, float]

    def value(self, member: int) -> float:
        return PremeasureTable(self.algebra, self.atom_values).value(member)

    def as_premeasure(self) -> PremeasureTable:
        return PremeasureTable(self.algebra, self.atom_values)


#: DP over subsets of the ambient set is exponential in its size
MAX_EXTEND_POINTS = 20


def _cover_costs(n: int, family: Mapping[int, float]) -> list[float]:
    """``best[S]`` = least total value of a finite cover of ``S`` by family sets."""
    best = [math.inf] * (1 << n)
    best[0] = 0.0
    sets = [(m, v) for m, v in family.items() if m]
    for s in range(1, 1 << n):
        low = s & -s
        b = math.inf
        # some set must cover the lowest point of s
        for m, v in sets:
            if m & low:
                c = v + best[s & ~m]
                if c < b:
                    b = c
        best[s] = b
    return best


def caratheodory_extend(
    ambient: FiniteMeasureSpace, table: Mapping[int, float], tol: float = TAU
) -> ExtendedMeasure:
    """Extend a premeasure given on a family of subsets to the generated
    sigma-algebra.

    ``mu*(E) = inf { sum mu(A_k) : E <= union A_k }`` is computed exactly over
    finite covers (the ambient set is finite).  The family may be an algebra
    or any semiring-like collection such as measurable rectangles.

    Raises ``NonAdditiveError`` when the input is not finitely additive or
    when it is undercut by covers of its own members.
    """
    n = ambient.size
    if n > MAX_EXTEND_POINTS:
        raise ValueError(f"extension is limited to {MAX_EXTEND_POINTS} points")
    full = ambient.full
    for m, v in table.items():
        if m & ~full:
            raise ValueError("family member outside the ambient set")
        if not v >= 0 or math.isinf(v):
            raise ValueError("premeasure values must be finite and >= 0")
    if abs(table.get(0, 0.0)) > tol:
        raise NonAdditiveError("value of the empty set must be 0")
    for (a, va), (b, vb) in itertools.combinations(table.items(), 2):
        if a & b == 0 and (a | b) in table and abs(table[a | b] - va - vb) > tol:
            raise NonAdditiveError(
                f"not additive: mu({a | b:#b}) = {table[a | b]!r} != {va!r} + {vb!r}"
            )
    covered = 0
    for m in table:
        covered |= m
    if covered != full:
        raise ValueError("family does not cover the ambient set")

    best = _cover_costs(n, table)
    for m, v in table.items():
        if best[m] < v - tol:
            raise NonAdditiveError(f"not countably subadditive on {m:#b}: cover of cost {best[m]!r} < {v!r}")
    algebra = generated_algebra(ambient, table.keys())
    outer = _LazyOuter(best)
    return ExtendedMeasure(algebra, tuple(best[a] for a in algebra.atoms), outer)


class _LazyOuter(Mapping[int, float]):
    __slots__ = ("_best",)

    def __init__(self, best: list[float]) -> None:
        self._best = best

    def __getitem__(self, mask: int) -> float:
        return self._best[mask]

    def __iter__(self) -> Iterator[int]:
        return iter(range(len(self._best)))

    def __len__(self) -> int:
        return len(self._best)


# --------------------------------------------------------------------------
# products


@dataclass(frozen=True)
class ProductMeasure:
    """``mu^n`` (rectangles) or ``mu^(n)`` (rectangles and diagonals) on ``M^n``.

    On a finite space with measurable singletons both live on the full
    powerset of ``M^n`` and are given by product weights; ``with_diagonals``
    records which sigma-algebra was requested.
    """

    space: FiniteMeasureSpace
    n: int
    with_diagonals: bool

    def weight(self, point: Sequence[int]) -> float:
        if len(point) != self.n:
            raise ValueError(f"expected a {self.n}-tuple")
        return math.prod(self.space.weights[i] for i in point)

    def tuples(self) -> Iterator[tuple[int, ...]]:
        return itertools.product(range(self.space.size), repeat=self.n)

    def measure(self, points: Iterable[Sequence[int]]) -> float:
        return math.fsum(self.weight(p) for p in set(map(tuple, points)))

    def rectangle(self, sides: Sequence[int]) -> float:
        """``mu(A_1) * ... * mu(A_n)`` for bit-mask sides."""
        if len(sides) != self.n:
            raise ValueError(f"expected {self.n} sides")
        return math.prod(self.space.measure(s) for s in sides)

    def diagonal(self, i: int, j: int) -> float:
        """``mu(D_ij) = sum_x mu({x})^2 * mu(M)^(n-2)``."""
        if not self.with_diagonals:
            raise ValueError("diagonals were not requested for this product")
        if i == j or not (0 <= i < self.n and 0 <= j < self.n):
            raise ValueError("diagonal needs two distinct coordinates")
        return math.fsum(w * w for w in self.space.weights) * self.space.total ** (self.n - 2)


def product_measure(space: FiniteMeasureSpace, n: int, with_diagonals: bool = True) -> ProductMeasure:
    if n < 1:
        raise ValueError("n must be >= 1")
    return ProductMeasure(space, n, with_diagonals)
