"""Vector-lattice functions on finite domains and the approximation
machinery built on them.

Everything here lives on a finite indexed domain, so each limit that a
continuous argument would take is reached exactly at some finite index.
The code finds that index and refuses to extrapolate.

The four base sequences for a threshold ``a`` are written in clamped form:

    g1_n = clip(n(f - a), 0, 1)       increases to 1{f > a}
    g2_n = clip(n(a - f), 0, 1)       increases to 1{f < a}
    h1_n = clip(n(f - a) + 1, 0, 1)   decreases to 1{f >= a}
    h2_n = clip(n(a - f) + 1, 0, 1)   decreases to 1{f <= a}

Each one is algebraically equal to the min/max difference form
``n(min(f, a + 1/n) - min(f, a))`` and its three siblings.  The clamped form
is exactly 0 or 1 away from the transition band, which the difference form
is not in floating point.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .measure import TAU, FiniteMeasureSpace, bits, generated_algebra

__all__ = [
    "LatticeFn",
    "PositiveFunctional",
    "Interval",
    "IndicatorSeq",
    "ConvergenceError",
    "MAX_INDEX",
    "indicator_seq",
    "stabilization_index",
    "value_seq",
    "is_inessential",
    "find_inessential",
    "star_combine",
    "check_special_pair",
    "Literal",
    "RefinedMember",
    "CoverRefinement",
    "refine_cover",
]

#: iteration cap for every limit computation
MAX_INDEX = 10**6


class ConvergenceError(RuntimeError):
    """A sequence did not reach its limit within ``MAX_INDEX`` steps."""


# --------------------------------------------------------------------------
# functions and functionals


class LatticeFn:
    """An immutable real function on a finite indexed domain."""

    __slots__ = ("values",)

    def __init__(self, values: Iterable[float] | np.ndarray) -> None:
        arr = np.array(values, dtype=float).reshape(-1)
        if not np.isfinite(arr).all():
            raise ValueError("lattice functions must be finite-valued")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __setattr__(self, name: str, value: object) -> None:
        raise AttributeError("LatticeFn is immutable")

    @classmethod
    def const(cls, size: int, c: float) -> "LatticeFn":
        return cls(np.full(size, float(c)))

    @classmethod
    def indicator(cls, size: int, mask: int) -> "LatticeFn":
        arr = np.zeros(size)
        for i in bits(mask):
            arr[i] = 1.0
        return cls(arr)

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values.tolist())

    def __getitem__(self, i: int) -> float:
        return float(self.values[i])

    def __repr__(self) -> str:
        return f"LatticeFn({self.values.tolist()})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LatticeFn):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    def __hash__(self) -> int:
        return hash(self.values.tobytes())

    def _other(self, other: "LatticeFn | float") -> np.ndarray | float:
        if isinstance(other, LatticeFn):
            if len(other) != len(self):
                raise ValueError("functions live on different domains")
            return other.values
        return float(other)

    def __add__(self, other: "LatticeFn | float") -> "LatticeFn":
        return LatticeFn(self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other: "LatticeFn | float") -> "LatticeFn":
        return LatticeFn(self.values - self._other(other))

    def __rsub__(self, other: float) -> "LatticeFn":
        return LatticeFn(float(other) - self.values)

    def __neg__(self) -> "LatticeFn":
        return LatticeFn(-self.values)

    def __mul__(self, c: float) -> "LatticeFn":
        if isinstance(c, LatticeFn):
            raise TypeError("lattice functions are closed under scalar, not pointwise, products")
        return LatticeFn(self.values * float(c))

    __rmul__ = __mul__

    def __abs__(self) -> "LatticeFn":
        return LatticeFn(np.abs(self.values))

    def join(self, other: "LatticeFn | float") -> "LatticeFn":
        """Pointwise max."""
        return LatticeFn(np.maximum(self.values, self._other(other)))

    def meet(self, other: "LatticeFn | float") -> "LatticeFn":
        """Pointwise min."""
        return LatticeFn(np.minimum(self.values, self._other(other)))

    __or__ = join
    __and__ = meet

    def positive_set(self) -> int:
        return _mask(self.values > 0)

    def zero_set(self) -> int:
        return _mask(self.values == 0)

    def preimage(self, lo: float, hi: float, *, left_closed: bool = True, right_closed: bool = False) -> int:
        v = self.values
        left = v >= lo if left_closed else v > lo
        right = v <= hi if right_closed else v < hi
        return _mask(left & right)

    @property
    def sup(self) -> float:
        return float(self.values.max()) if len(self) else 0.0

    @property
    def inf(self) -> float:
        return float(self.values.min()) if len(self) else 0.0

    def range_values(self) -> np.ndarray:
        return np.unique(self.values)


def _mask(flags: np.ndarray) -> int:
    m = 0
    for i in np.flatnonzero(flags):
        m |= 1 << int(i)
    return m


def _as_fn(f: "LatticeFn | Sequence[float]") -> LatticeFn:
    return f if isinstance(f, LatticeFn) else LatticeFn(f)


@dataclass(frozen=True)
class PositiveFunctional:
    """A positive linear functional on lattice functions over a fixed domain.

    ``weights`` is set only in the hidden-weights testing mode, where
    ``I(f) = sum w_x f(x)``.
    """

    evaluate: Callable[[LatticeFn], float]
    size: int
    weights: tuple[float, ...] | None = field(default=None, repr=False)

    def __call__(self, f: LatticeFn | Sequence[float]) -> float:
        f = _as_fn(f)
        if len(f) != self.size:
            raise ValueError(f"functional expects {self.size} points, got {len(f)}")
        return float(self.evaluate(f))

    @classmethod
    def from_weights(
        cls, weights: Sequence[float], *, spot_checks: int = 8, seed: int = 0
    ) -> "PositiveFunctional":
        w = np.array(weights, dtype=float)
        if (w < 0).any() or not np.isfinite(w).all():
            raise ValueError("hidden weights must be finite and >= 0")
        frozen = tuple(w.tolist())

        def evaluate(f: LatticeFn) -> float:
            return math.fsum((f.values * w).tolist())

        functional = cls(evaluate, len(w), frozen)
        functional.spot_check(spot_checks, seed)
        return functional

    @classmethod
    def from_table(
        cls, functions: Sequence[LatticeFn], values: Sequence[float], tol: float = 1e-7
    ) -> "PositiveFunctional":
        """Extend a table ``I(f_k) = v_k`` to all functions on the domain.

        A nonnegative weight vector reproducing the table is found by linear
        programming; it exists exactly when the table is the restriction of
        some positive functional.
        """
        from scipy.optimize import linprog

        if not functions:
            raise ValueError("empty functional table")
        A = np.vstack([f.values for f in functions])
        b = np.array(values, dtype=float)
        n = A.shape[1]
        res = linprog(np.zeros(n), A_eq=A, b_eq=b, bounds=[(0, None)] * n, method="highs")
        if res.status != 0:
            raise ValueError("functional table is not the restriction of any positive functional")
        w = np.clip(res.x, 0.0, None)
        if np.max(np.abs(A @ w - b)) > tol * max(1.0, float(np.max(np.abs(b)))):
            raise ValueError("functional table could not be matched by nonnegative weights")
        return cls.from_weights(w)

    @property
    def one(self) -> float:
        return self(LatticeFn.const(self.size, 1.0))

    def spot_check(self, count: int = 8, seed: int = 0, tol: float = TAU) -> None:
        """Randomized positivity and linearity checks; raises on failure."""
        rng = random.Random(seed)
        for _ in range(count):
            f = LatticeFn([rng.uniform(-1, 1) for _ in range(self.size)])
            g = LatticeFn([rng.uniform(-1, 1) for _ in range(self.size)])
            a, b = rng.uniform(-2, 2), rng.uniform(-2, 2)
            lhs = self(a * f + b * g)
            rhs = a * self(f) + b * self(g)
            if abs(lhs - rhs) > tol * max(1.0, abs(lhs), abs(rhs)):
                raise ValueError("functional failed a linearity spot check")
            if self(abs(f)) < -tol:
                raise ValueError("functional failed a positivity spot check")


# --------------------------------------------------------------------------
# indicator sequences


def _g1(v: np.ndarray, a: float, n: int) -> np.ndarray:
    return np.minimum(np.maximum(n * (v - a), 0.0), 1.0)


def _g2(v: np.ndarray, a: float, n: int) -> np.ndarray:
    return np.minimum(np.maximum(n * (a - v), 0.0), 1.0)


def _h1(v: np.ndarray, a: float, n: int) -> np.ndarray:
    return np.minimum(np.maximum(n * (v - a) + 1.0, 0.0), 1.0)


def _h2(v: np.ndarray, a: float, n: int) -> np.ndarray:
    return np.minimum(np.maximum(n * (a - v) + 1.0, 0.0), 1.0)


@dataclass(frozen=True)
class Interval:
    """An interval of reals; open bounds may be infinite."""

    lo: float
    hi: float
    left_closed: bool = False
    right_closed: bool = False

    def __post_init__(self) -> None:
        if math.isnan(self.lo) or math.isnan(self.hi):
            raise ValueError("interval bounds must not be NaN")
        if self.lo > self.hi:
            raise ValueError(f"empty interval: {self.lo} > {self.hi}")
        if self.left_closed and math.isinf(self.lo) or self.right_closed and math.isinf(self.hi):
            raise ValueError("an infinite end cannot be closed")

    @classmethod
    def open(cls, lo: float, hi: float) -> "Interval":
        return cls(lo, hi, False, False)

    @classmethod
    def closed(cls, lo: float, hi: float) -> "Interval":
        return cls(lo, hi, not math.isinf(lo), not math.isinf(hi))

    @classmethod
    def point(cls, a: float) -> "Interval":
        return cls(a, a, True, True)

    @property
    def is_open(self) -> bool:
        return not self.left_closed and not self.right_closed

    @property
    def is_closed(self) -> bool:
        return (self.left_closed or math.isinf(self.lo)) and (self.right_closed or math.isinf(self.hi))

    def contains(self, v: np.ndarray) -> np.ndarray:
        left = v >= self.lo if self.left_closed else v > self.lo
        right = v <= self.hi if self.right_closed else v < self.hi
        return left & right


@dataclass(frozen=True)
class IndicatorSeq:
    """``n -> seq(n)`` tending to the indicator of ``target``.

    Open mode increases with support inside the target; closed mode
    decreases and equals 1 on the target.
    """

    constraints: tuple[tuple[LatticeFn, Interval], ...]
    mode: str
    combine: str
    size: int

    @property
    def direction(self) -> str:
        return "increasing" if self.mode == "open" else "decreasing"

    @property
    def target(self) -> int:
        return _mask(self.target_flags())

    @cached_property
    def _target_values(self) -> np.ndarray:
        return self.target_flags().astype(float)

    def target_flags(self) -> np.ndarray:
        if not self.constraints:
            return np.full(self.size, self.combine == "intersection")
        flags = [iv.contains(f.values) for f, iv in self.constraints]
        op = np.logical_and if self.combine == "intersection" else np.logical_or
        out = flags[0]
        for fl in flags[1:]:
            out = op(out, fl)
        return out

    def values_at(self, n: int) -> np.ndarray:
        if n < 1:
            raise ValueError("sequence index starts at 1")
        if not self.constraints:
            return np.full(self.size, 1.0 if self.combine == "intersection" else 0.0)
        parts = [self._single(f.values, iv, n) for f, iv in self.constraints]
        op = np.minimum if self.combine == "intersection" else np.maximum
        out = parts[0]
        for p in parts[1:]:
            out = op(out, p)
        return out

    def _single(self, v: np.ndarray, iv: Interval, n: int) -> np.ndarray:
        if iv.lo == iv.hi:
            return np.minimum(_h1(v, iv.lo, n), _h2(v, iv.hi, n))
        out = np.ones_like(v)
        if self.mode == "open":
            if not math.isinf(iv.lo):
                out = np.minimum(out, _g1(v, iv.lo, n))
            if not math.isinf(iv.hi):
                out = np.minimum(out, _g2(v, iv.hi, n))
        else:
            if not math.isinf(iv.lo):
                out = np.minimum(out, _h1(v, iv.lo, n))
            if not math.isinf(iv.hi):
                out = np.minimum(out, _h2(v, iv.hi, n))
        return out

    def __call__(self, n: int) -> LatticeFn:
        return LatticeFn(self.values_at(n))

    def is_exact(self, n: int) -> bool:
        return bool(np.array_equal(self.values_at(n), self._target_values))

    def gap(self) -> float:
        """Smallest distance between a function value and a finite endpoint
        that the sequence must resolve (``inf`` when nothing needs resolving)."""
        best = math.inf
        for f, iv in self.constraints:
            v = f.values
            for end in (iv.lo, iv.hi):
                if math.isinf(end):
                    continue
                d = np.abs(v - end)
                d = d[d > 0]
                if d.size:
                    best = min(best, float(d.min()))
        return best


def indicator_seq(
    constraints: Sequence[tuple[LatticeFn | Sequence[float], Interval | tuple[float, float]]],
    mode: str = "open",
    combine: str = "intersection",
) -> IndicatorSeq:
    """Sequence tending to the indicator of ``cap`` (or ``cup``) of ``f^-1(U)``.

    A bare ``(lo, hi)`` pair is read as an open interval in open mode and a
    closed one in closed mode.
    """
    if mode not in ("open", "closed"):
        raise ValueError(f"mode must be 'open' or 'closed', got {mode!r}")
    if combine not in ("intersection", "union"):
        raise ValueError(f"combine must be 'intersection' or 'union', got {combine!r}")
    out = []
    size = None
    for f, iv in constraints:
        f = _as_fn(f)
        if size is None:
            size = len(f)
        elif len(f) != size:
            raise ValueError("constraint functions live on different domains")
        if not isinstance(iv, Interval):
            lo, hi = iv
            iv = Interval.open(lo, hi) if mode == "open" else Interval.closed(lo, hi)
        if mode == "open" and not iv.is_open:
            raise ValueError(f"open mode needs open intervals, got {iv}")
        if mode == "closed" and not iv.is_closed:
            raise ValueError(f"closed mode needs closed intervals or points, got {iv}")
        out.append((f, iv))
    if size is None:
        raise ValueError("at least one constraint is needed")
    return IndicatorSeq(tuple(out), mode, combine, size)


def stabilization_index(seq: IndicatorSeq, cap: int = MAX_INDEX) -> int:
    """Least ``n`` with ``seq(n)`` equal to the target indicator.

    Exactness is monotone in ``n`` (each base sequence is monotone and
    floating-point products with a growing integer are monotone), so the
    gap estimate ``1/gap`` is refined by a bracketing search.
    """
    g = seq.gap()
    guess = cap if math.isinf(g) else int(min(cap, max(1, math.ceil(1.0 / g))))
    if seq.is_exact(guess):
        if guess == 1:
            return 1
        if not seq.is_exact(guess - 1):
            return guess
        if seq.is_exact(1):
            return 1
        lo, hi = 1, guess - 1
    else:
        lo, hi = guess, guess
        while not seq.is_exact(hi):
            if hi >= cap:
                raise ConvergenceError(f"indicator sequence not exact by n={cap}")
            lo, hi = hi, min(cap, hi * 2)
    # invariant: seq(lo) inexact, seq(hi) exact
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if seq.is_exact(mid):
            hi = mid
        else:
            lo = mid
    return hi


def value_seq(f: LatticeFn | Sequence[float], alpha: float, n: int) -> LatticeFn:
    """``h_n`` for the point ``{alpha}``: decreases to ``1{f = alpha}``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    v = _as_fn(f).values
    return LatticeFn(np.minimum(_h1(v, alpha, n), _h2(v, alpha, n)))


def _point_seq(f: LatticeFn, alpha: float) -> IndicatorSeq:
    return IndicatorSeq(((f, Interval.point(alpha)),), "closed", "intersection", len(f))


def is_inessential(
    f: LatticeFn | Sequence[float], alpha: float, I: PositiveFunctional, tol: float = TAU
) -> tuple[bool, float]:
    """``(lim I(h_n) <= tol, lim I(h_n))`` for the point sequence at ``alpha``.

    On a finite domain ``h_n`` becomes the indicator of ``f^-1(alpha)`` at a
    finite index, after which ``I(h_n)`` is constant; that value is the limit.
    """
    f = _as_fn(f)
    n_star = stabilization_index(_point_seq(f, alpha))
    limit = I(value_seq(f, alpha, n_star))
    return limit <= tol, limit


def _dyadic_candidates(r: float, s: float) -> Iterable[float]:
    yield (r + s) / 2
    depth = 2
    while True:
        denom = 1 << depth
        for k in range(1, denom, 2):
            yield r + (s - r) * k / denom
        depth += 1


def find_inessential(
    fs: Sequence[LatticeFn | Sequence[float]],
    interval: tuple[float, float],
    I: PositiveFunctional,
    tol: float = TAU,
) -> float:
    """An ``alpha`` in ``(r, s)`` inessential for every function.

    Tries the midpoint, then dyadic points of increasing depth; candidates
    attained by some function are skipped before any limit is computed.  A
    window holding no function value returns its midpoint at once.
    """
    r, s = interval
    if not r < s:
        raise ValueError(f"need r < s, got ({r}, {s})")
    fns = [_as_fn(f) for f in fs]
    values = np.unique(np.concatenate([f.values for f in fns])) if fns else np.array([])
    if not np.any((values > r) & (values < s)):
        # every preimage of the midpoint is empty, so each limit is I(0) = 0
        return (r + s) / 2
    if abs(I.one) <= tol:
        return (r + s) / 2
    # at most len(values) distinct candidates can be attained
    budget = len(values) + 2
    tried = 0
    seen: set[float] = set()
    for generated, alpha in enumerate(_dyadic_candidates(r, s)):
        if tried >= budget or generated > 64 * budget:
            break
        if not r < alpha < s or alpha in seen:
            continue
        seen.add(alpha)
        tried += 1
        if np.any(values == alpha):
            continue
        try:
            if all(is_inessential(f, alpha, I, tol)[0] for f in fns):
                return alpha
        except ConvergenceError:
            continue
    raise AssertionError(f"no inessential value found in ({r}, {s}) within budget {budget}")


# --------------------------------------------------------------------------
# special pairs


def star_combine(f: LatticeFn | Sequence[float], g: LatticeFn | Sequence[float]) -> LatticeFn:
    """``f * g = (f v (-g v 0)) - f - (-g v 0)``."""
    f, g = _as_fn(f), _as_fn(g)
    m = (-g).join(0.0)
    return f.join(m) - f - m


def check_special_pair(
    f: LatticeFn | Sequence[float],
    g: LatticeFn | Sequence[float],
    weights: Sequence[float] | None = None,
    tol: float = TAU,
    *,
    query: str = "classify",
) -> str:
    """Classify ``(f, g)`` as ``exact``, ``almost`` or ``neither``.

    ``exact``: ``f*g == 0`` and ``0 <= f <= 1`` everywhere.  ``almost``:
    ``int|f*g| = int(f ^ 0) = int((f v 1) - 1) = 0`` against ``weights``.
    Asking about ``almost`` (``query="almost"``) without weights is an error.
    """
    f, g = _as_fn(f), _as_fn(g)
    if len(f) != len(g):
        raise ValueError("functions live on different domains")
    if query == "almost" and weights is None:
        raise ValueError("an 'almost' query needs a measure")
    star = star_combine(f, g).values
    if not star.any() and (f.values >= 0).all() and (f.values <= 1).all():
        return "exact"
    if weights is None:
        return "neither"
    w = np.asarray(weights, dtype=float)
    if len(w) != len(f):
        raise ValueError("weights and functions differ in length")
    checks = (
        np.abs(star),
        np.minimum(f.values, 0.0),
        np.maximum(f.values, 1.0) - 1.0,
    )
    if all(abs(math.fsum((c * w).tolist())) <= tol for c in checks):
        return "almost"
    return "neither"


# --------------------------------------------------------------------------
# cover refinement


@dataclass(frozen=True)
class Literal:
    """``(sign * f_index)^-1 (0, inf)`` when strict, else ``[0, inf)``."""

    index: int
    strict: bool = True
    negate: bool = False


@dataclass(frozen=True)
class RefinedMember:
    fn: LatticeFn
    mask: int
    source: int
    kind: str  # "unchanged" | "shifted" | "upper" | "band"


@dataclass(frozen=True)
class CoverRefinement:
    members: tuple[RefinedMember, ...]
    input_masks: tuple[int, ...]
    covered: int
    input_sum: float
    output_sum: float
    deltas: tuple[float, ...]
    epsilon: float
    checks: Mapping[str, bool]

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    @property
    def identity(self) -> bool:
        return all(m.kind == "unchanged" for m in self.members)


def _literal_values(lit: Literal, fns: Sequence[LatticeFn]) -> np.ndarray:
    v = fns[lit.index].values
    return -v if lit.negate else v


def _mask_to_dnf(mask: int, fns: Sequence[LatticeFn], space: FiniteMeasureSpace) -> list[list[Literal]]:
    gens = []
    for f in fns:
        gens += [f.positive_set(), _mask(f.values >= 0)]
    alg = generated_algebra(space, gens)
    if mask not in alg:
        raise ValueError(f"set {mask:#b} is not representable in the algebra generated by the functions")
    clauses = []
    for atom in alg.atoms_of(mask):
        x = next(iter(bits(atom)))
        clause = []
        for i, f in enumerate(fns):
            v = f.values[x]
            if v > 0:
                clause.append(Literal(i, True))
            elif v < 0:
                clause.append(Literal(i, True, negate=True))
            else:
                clause += [Literal(i, False), Literal(i, False, negate=True)]
        clauses.append(clause)
    return clauses


def _dnf_eval(clauses: Sequence[Sequence[Literal]], fns: Sequence[LatticeFn], size: int) -> np.ndarray:
    out = np.zeros(size, dtype=bool)
    for clause in clauses:
        acc = np.ones(size, dtype=bool)
        for lit in clause:
            v = _literal_values(lit, fns)
            acc &= v > 0 if lit.strict else v >= 0
        out |= acc
    return out


def _avoid(value: float, taken: np.ndarray) -> float:
    # shrink slightly until off the value set
    x = value
    while taken.size and np.any(taken == x):
        x *= 0.9
    return x


def _thresholds(F: np.ndarray, w: np.ndarray, budget: float) -> list[float]:
    pos = np.unique(F[F > 0])
    if pos.size == 0:
        return []
    # largest a1 with 2 mu(F^-1(0, a1)) <= budget and a1 off the value set
    k = 0
    for idx in range(1, pos.size + 1):
        below = math.fsum(w[(F > 0) & (F <= pos[idx - 1])].tolist())
        if 2 * below <= budget:
            k = idx
        else:
            break
    if k == 0:
        a1 = pos[0] / 2
    elif k < pos.size:
        a1 = (pos[k - 1] + pos[k]) / 2
    else:
        a1 = pos[-1] + 1.0
    a1 = _avoid(a1, pos)
    out = [a1]
    while out[-1] >= pos[0]:
        nxt = _avoid(out[-1] / 2, pos)
        out.append(nxt)
    # two more so every band (a_{j+2}, a_j) below pos[0] exists
    out.append(_avoid(out[-1] / 2, pos))
    return out


def refine_cover(
    space: FiniteMeasureSpace,
    fns: Sequence[LatticeFn | Sequence[float]],
    cover: Sequence[int | Sequence[Sequence[Literal]]],
    epsilon: float,
    covered: int | None = None,
) -> CoverRefinement:
    """Replace a cover by sets ``f^-1(0, inf)`` whose zero sets are null.

    Members are raw bit masks (converted to disjunctive normal form over
    the atoms generated by ``f > 0`` and ``f >= 0``) or explicit clause lists
    of :class:`Literal`.  ``covered`` defaults to the union of the cover.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    fns = [_as_fn(f) for f in fns]
    n = space.size
    w = np.array(space.weights)
    if any(len(f) != n for f in fns):
        raise ValueError("functions must be defined on the space")

    def mu(flags: np.ndarray) -> float:
        return math.fsum(w[flags].tolist())

    members: list[RefinedMember] = []
    input_masks: list[int] = []
    deltas: list[float] = []
    for pos_idx, member in enumerate(cover, start=1):
        clauses = _mask_to_dnf(member, fns, space) if isinstance(member, int) else [list(c) for c in member]
        in_flags = _dnf_eval(clauses, fns, n)
        input_masks.append(_mask(in_flags))

        # single strict literal: already of the required form
        if len(clauses) == 1 and len(clauses[0]) == 1 and clauses[0][0].strict:
            g = _literal_values(clauses[0][0], fns)
            if mu(g == 0) == 0:
                members.append(RefinedMember(LatticeFn(g), _mask(g > 0), pos_idx - 1, "unchanged"))
                deltas.append(0.0)
                continue

        negs = [
            -_literal_values(lit, fns)[_literal_values(lit, fns) < 0]
            for c in clauses
            for lit in c
            if not lit.strict
        ]
        negs = np.concatenate(negs) if negs else np.array([])
        delta = float(negs.min()) / 2 if negs.size else 1.0
        deltas.append(delta)

        if clauses:
            F = np.full(n, -np.inf)
            for c in clauses:
                acc = np.full(n, np.inf)
                for lit in c:
                    v = _literal_values(lit, fns)
                    acc = np.minimum(acc, v if lit.strict else v + delta)
                if not c:
                    acc = np.ones(n)
                F = np.maximum(F, acc)
        else:
            F = -np.ones(n)
        if mu(F == 0) == 0:
            members.append(RefinedMember(LatticeFn(F), _mask(F > 0), pos_idx - 1, "shifted"))
            continue

        a = _thresholds(F, w, epsilon / 4**pos_idx)
        if not a:
            # F > 0 nowhere: the member is empty, -1 describes it with no zero set
            members.append(RefinedMember(LatticeFn(-np.ones(n)), 0, pos_idx - 1, "upper"))
            continue
        upper = F - a[1]
        members.append(RefinedMember(LatticeFn(upper), _mask(upper > 0), pos_idx - 1, "upper"))
        for j in range(len(a) - 2):
            h = np.minimum(F - a[j + 2], a[j] - F)
            if (h > 0).any():
                members.append(RefinedMember(LatticeFn(h), _mask(h > 0), pos_idx - 1, "band"))

    in_sum = math.fsum(space.measure(m) for m in input_masks)
    out_sum = math.fsum(space.measure(m.mask) for m in members)
    union_out = 0
    for m in members:
        union_out |= m.mask
    union_in = 0
    for m in input_masks:
        union_in |= m
    target = union_in if covered is None else covered
    checks = {
        "nice_form": all(m.mask == m.fn.positive_set() for m in members),
        "null_zero_sets": all(space.measure(m.fn.zero_set()) == 0 for m in members),
        "covers": target & ~union_out == 0,
        "measure_sum": abs(out_sum - in_sum) <= epsilon,
    }
    return CoverRefinement(
        tuple(members), tuple(input_masks), target, in_sum, out_sum, tuple(deltas), epsilon, checks
    )
