"""Riesz representation on sampled compact domains.

The Daniell pipeline runs unchanged on a grid.  On top of it a Dini-style
check asks two things.  First, is every generator plausibly continuous at
grid resolution?  Second, do the constructed increasing sequences reach 1
uniformly before ``lim I(g_n) = I(1)`` is trusted?
"""

from __future__ import annotations

import ast
import itertools
import math
from dataclasses import dataclass, replace
from typing import Callable, Mapping, Sequence

import numpy as np

from ..lattice import LatticeFn, PositiveFunctional, stabilization_index
from ..measure import TAU
from ..structure import InterpretedStructure
from .daniell import ConstructionReport, DaniellInstance, _construct

__all__ = ["Grid", "compile_expression", "riesz_model", "dini_check", "DiniReport"]

_FUNCS: dict[str, Callable] = {
    "abs": np.abs,
    "sqrt": np.sqrt,
    "exp": np.exp,
    "log": np.log,
    "sin": np.sin,
    "cos": np.cos,
    "floor": np.floor,
    "sign": np.sign,
    "min": np.minimum,
    "max": np.maximum,
}
_CONSTS = {"pi": math.pi, "e": math.e}
_BINOPS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
    ast.Pow: np.power,
}
_CMPOPS = {
    ast.Lt: np.less,
    ast.LtE: np.less_equal,
    ast.Gt: np.greater,
    ast.GtE: np.greater_equal,
}


def compile_expression(text: str, variables: Sequence[str]) -> Callable[..., np.ndarray]:
    """Compile an arithmetic expression in ``variables`` to a numpy function.

    Only numbers, the named variables, ``pi``/``e``, ``+ - * / **``,
    comparisons (giving 0/1) and a few elementary functions are accepted.
    """
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise ValueError(f"bad expression {text!r}: {exc.msg}") from None
    names = tuple(variables)

    def build(node: ast.AST) -> Callable[[dict[str, np.ndarray]], np.ndarray]:
        if isinstance(node, ast.Expression):
            return build(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
            c = float(node.value)
            return lambda env: c
        if isinstance(node, ast.Name):
            if node.id in names:
                return lambda env, k=node.id: env[k]
            if node.id in _CONSTS:
                c = _CONSTS[node.id]
                return lambda env: c
            raise ValueError(f"unknown name {node.id!r} in {text!r}")
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            inner = build(node.operand)
            sign = -1.0 if isinstance(node.op, ast.USub) else 1.0
            return lambda env: sign * inner(env)
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            op, left, right = _BINOPS[type(node.op)], build(node.left), build(node.right)
            return lambda env: op(left(env), right(env))
        if isinstance(node, ast.Compare) and len(node.ops) == 1 and type(node.ops[0]) in _CMPOPS:
            op, left, right = _CMPOPS[type(node.ops[0])], build(node.left), build(node.comparators[0])
            return lambda env: op(left(env), right(env)).astype(float)
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS and not node.keywords:
            fn, args = _FUNCS[node.func.id], [build(a) for a in node.args]
            return lambda env: fn(*(a(env) for a in args))
        raise ValueError(f"unsupported syntax in expression {text!r}")

    body = build(tree)

    def evaluate(*coords: np.ndarray) -> np.ndarray:
        env = dict(zip(names, coords))
        shape = np.broadcast(*coords).shape if coords else ()
        return np.broadcast_to(np.asarray(body(env), dtype=float), shape).copy()

    return evaluate


@dataclass(frozen=True)
class Grid:
    """A product of uniformly sampled closed intervals."""

    axes: tuple[tuple[float, float, int], ...]

    def __post_init__(self) -> None:
        if not self.axes:
            raise ValueError("a grid needs at least one axis")
        for lo, hi, m in self.axes:
            if not lo < hi or m < 2:
                raise ValueError(f"bad axis ({lo}, {hi}, {m})")

    @property
    def variables(self) -> tuple[str, ...]:
        return ("x", "y", "z")[: len(self.axes)] if len(self.axes) <= 3 else tuple(
            f"x{i + 1}" for i in range(len(self.axes))
        )

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(m for _, _, m in self.axes)

    @property
    def size(self) -> int:
        return math.prod(self.shape)

    def coordinates(self) -> list[np.ndarray]:
        """Per-variable coordinate arrays flattened in C order."""
        lines = [np.linspace(lo, hi, m) for lo, hi, m in self.axes]
        mesh = np.meshgrid(*lines, indexing="ij")
        return [c.reshape(-1) for c in mesh]

    def point_ids(self) -> tuple[str, ...]:
        return tuple("g" + "_".join(str(i) for i in idx) for idx in itertools.product(*(range(m) for m in self.shape)))

    def sample(self, expr: str | Callable[..., np.ndarray]) -> LatticeFn:
        fn = compile_expression(expr, self.variables) if isinstance(expr, str) else expr
        return LatticeFn(fn(*self.coordinates()))

    def uniform_functional(self) -> PositiveFunctional:
        return PositiveFunctional.from_weights([1.0 / self.size] * self.size)


@dataclass(frozen=True)
class DiniReport:
    ok: bool
    continuity_ratio: dict[str, float]
    flagged: tuple[str, ...]
    deviations: tuple[tuple[int, float], ...]
    limit_gap: float


#: ratio omega(h) / omega(4h) above which a generator counts as discontinuous
PLATEAU_RATIO = 0.75


def _modulus(values: np.ndarray, shape: tuple[int, ...], stride: int) -> float:
    arr = values.reshape(shape)
    best = 0.0
    for axis, m in enumerate(shape):
        if m <= stride:
            continue
        a = np.take(arr, range(stride, m), axis=axis)
        b = np.take(arr, range(0, m - stride), axis=axis)
        best = max(best, float(np.max(np.abs(a - b))))
    return best


def dini_check(
    grid: Grid,
    generators: Mapping[str, LatticeFn],
    sequences: Sequence,
    functional: Callable[[LatticeFn], float],
    tol: float = TAU,
) -> DiniReport:
    """Continuity by modulus refinement, then uniform convergence of the
    join of the cell sequences to 1.

    A continuous sample has ``omega(h) / omega(4h)`` near 1/4 at fine
    resolution; a jump keeps ``omega`` on a plateau, ratio near 1.
    """
    ratios: dict[str, float] = {}
    flagged = []
    for name, f in generators.items():
        fine = _modulus(f.values, grid.shape, 1)
        coarse = _modulus(f.values, grid.shape, 4)
        scale = max(1.0, float(np.max(np.abs(f.values))))
        if fine <= 1e-9 * scale:
            ratios[name] = 0.0
            continue
        ratios[name] = fine / coarse if coarse > 0 else math.inf
        if ratios[name] > PLATEAU_RATIO:
            flagged.append(name)

    n_star = max((stabilization_index(s) for s in sequences), default=1)
    schedule = sorted({1, n_star} | {1 << k for k in range(64) if 1 << k < n_star})
    devs = []
    for n in schedule:
        g = np.zeros(grid.size)
        for s in sequences:
            g = np.maximum(g, s.values_at(n))
        devs.append((n, float(np.max(np.abs(1.0 - g)))))
    monotone = all(b[1] <= a[1] for a, b in zip(devs, devs[1:]))
    g_final = np.zeros(grid.size)
    for s in sequences:
        g_final = np.maximum(g_final, s.values_at(n_star))
    gap = abs(functional(LatticeFn(g_final)) - functional(LatticeFn.const(grid.size, 1.0)))
    ok = not flagged and monotone and devs[-1][1] == 0.0 and gap <= tol
    return DiniReport(ok, ratios, tuple(flagged), tuple(devs), gap)


def riesz_model(
    grid: Grid,
    generators: Mapping[str, str | LatticeFn],
    epsilon: float,
    functional: PositiveFunctional | None = None,
    *,
    combos: bool = True,
) -> tuple[InterpretedStructure, ConstructionReport]:
    """Daniell pipeline on the grid plus the Dini check.

    ``generators`` may be expressions in the grid variables.  The default
    functional is the uniform average over grid points.
    """
    sampled = {name: g if isinstance(g, LatticeFn) else grid.sample(g) for name, g in generators.items()}
    I = functional or grid.uniform_functional()
    instance = DaniellInstance(grid.point_ids(), tuple(sampled.items()), I, epsilon)
    c = _construct(instance, combos, kind="riesz")
    if not c.sequences:
        dini = DiniReport(True, {}, (), (), 0.0)
    else:
        dini = dini_check(grid, sampled, c.sequences, c.normalized)
    checks = dict(c.report.checks)
    checks["dini"] = dini.ok
    info = dict(c.report.info)
    info["dini"] = dini
    return c.structure, replace(c.report, checks=checks, info=info)
