"""Line-oriented text formats for structures, theories and instances.

Structure file::

    [space]
    point p 0.5
    point q 0.5
    [relations]
    rel R_f bound=3 p=1 q=3
    rel2 R_g bound=1 p,p=1 p,q=0 q,p=0 q,q=1
    [constants]
    const c_a = p

Theory file: one statement per line, ``label: formula == r`` or ``>=``.

Instance files start with ``kind = stone|daniell|riesz`` and may set
``epsilon = ...``; see the README for the per-kind sections.
``#`` starts a comment everywhere.  Numbers are read with ``float``, which
rounds decimal text to the nearest double.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .engines.daniell import DaniellInstance
from .engines.riesz import Grid
from .engines.stone import FiniteProbabilityAlgebra
from .lattice import LatticeFn, PositiveFunctional
from .logic import EQUALITY, Language, ParseError, Theory, constant, parse_theory, relation, render_real, render_statement
from .measure import make_space
from .structure import InterpretedStructure, StructureError, interpret

__all__ = [
    "InputError",
    "Instance",
    "load_structure",
    "parse_structure",
    "dump_structure",
    "load_theory",
    "dump_theory",
    "load_instance",
    "parse_instance",
]

KINDS = ("stone", "daniell", "riesz")


class InputError(ValueError):
    """A problem in an input file, located by file and line."""

    def __init__(self, message: str, path: str = "<input>", line: int | None = None) -> None:
        super().__init__(message)
        self.message = message
        self.path = path
        self.line = line

    def __str__(self) -> str:
        where = f"{self.path}:{self.line}" if self.line is not None else self.path
        return f"{where}: {self.message}"


@dataclass
class _Doc:
    path: str
    header: dict[str, tuple[str, int]] = field(default_factory=dict)
    sections: dict[str, list[tuple[int, str]]] = field(default_factory=dict)

    def error(self, message: str, line: int | None = None) -> InputError:
        return InputError(message, self.path, line)

    def lines(self, name: str) -> list[tuple[int, str]]:
        return self.sections.get(name, [])


_SECTION = re.compile(r"\[([a-z]+)\]\Z")


def _split(text: str, path: str, allowed: set[str]) -> _Doc:
    doc = _Doc(path)
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _SECTION.match(line)
        if m:
            current = m.group(1)
            if current not in allowed:
                raise doc.error(f"unexpected section [{current}]", lineno)
            if current in doc.sections:
                raise doc.error(f"duplicate section [{current}]", lineno)
            doc.sections[current] = []
            continue
        if current is None:
            key, sep, value = line.partition("=")
            if not sep:
                raise doc.error(f"expected 'key = value' or a section header, got {line!r}", lineno)
            doc.header[key.strip()] = (value.strip(), lineno)
            continue
        doc.sections[current].append((lineno, line))
    return doc


def _number(text: str, doc: _Doc, line: int) -> float:
    try:
        x = float(text)
    except ValueError:
        raise doc.error(f"not a number: {text!r}", line) from None
    if not math.isfinite(x):
        raise doc.error(f"number must be finite: {text!r}", line)
    return x


def _pairs(items: list[str], doc: _Doc, line: int) -> tuple[dict[str, str], list[tuple[str, float]]]:
    opts: dict[str, str] = {}
    entries: list[tuple[str, float]] = []
    for item in items:
        key, sep, value = item.partition("=")
        if not sep or not key or not value:
            raise doc.error(f"expected key=value, got {item!r}", line)
        if key in ("bound",):
            opts[key] = value
        else:
            entries.append((key, _number(value, doc, line)))
    return opts, entries


# --------------------------------------------------------------------------
# structures


def _space(doc: _Doc, weighted: bool = True):
    ids: list[str] = []
    weights: list[float] = []
    lines = doc.lines("space")
    if not lines:
        raise doc.error("missing or empty [space] section")
    for lineno, line in lines:
        parts = line.split()
        if parts[0] != "point" or len(parts) not in ((3,) if weighted else (2, 3)):
            form = "point <id> <weight>" if weighted else "point <id> [weight]"
            raise doc.error(f"expected '{form}', got {line!r}", lineno)
        if parts[1] in ids:
            raise doc.error(f"duplicate point id {parts[1]!r}", lineno)
        ids.append(parts[1])
        weights.append(_number(parts[2], doc, lineno) if len(parts) == 3 else 0.0)
        if weights[-1] < 0:
            raise doc.error(f"negative weight for {parts[1]!r}", lineno)
    return ids, weights


def parse_structure(text: str, path: str = "<structure>", max_points: int | None = None) -> InterpretedStructure:
    doc = _split(text, path, {"space", "relations", "constants"})
    if doc.header:
        key, (_, lineno) = next(iter(doc.header.items()))
        raise doc.error(f"unexpected header entry {key!r} in a structure file", lineno)
    ids, weights = _space(doc)
    if max_points is not None and len(ids) > max_points:
        raise doc.error(f"{len(ids)} points exceed the limit of {max_points}")
    index = {p: i for i, p in enumerate(ids)}
    symbols = []
    tables: dict[str, Any] = {}
    for lineno, line in doc.lines("relations"):
        parts = line.split()
        if parts[0] not in ("rel", "rel2") or len(parts) < 2:
            raise doc.error(f"expected 'rel <name> ...' or 'rel2 <name> ...', got {line!r}", lineno)
        arity = 1 if parts[0] == "rel" else 2
        name = parts[1]
        opts, entries = _pairs(parts[2:], doc, lineno)
        bound = _number(opts.get("bound", "1"), doc, lineno)
        try:
            sym = relation(name, arity, bound)
        except ValueError as exc:
            raise doc.error(str(exc), lineno) from None
        if name in tables:
            raise doc.error(f"relation {name!r} defined twice", lineno)
        arr = np.full((len(ids),) * arity, np.nan)
        for key, value in entries:
            pts = key.split(",")
            if len(pts) != arity:
                raise doc.error(f"entry {key!r} does not match arity {arity}", lineno)
            try:
                idx = tuple(index[p] for p in pts)
            except KeyError as exc:
                raise doc.error(f"unknown point {exc.args[0]!r}", lineno) from None
            arr[idx] = value
        if np.isnan(arr).any():
            missing = [ids[i] for i in np.argwhere(np.isnan(arr))[0]]
            raise doc.error(f"relation {name!r} has no value at ({','.join(missing)})", lineno)
        if name != EQUALITY.name:
            symbols.append(sym)
        tables[name] = arr
    consts = {}
    for lineno, line in doc.lines("constants"):
        m = re.fullmatch(r"const\s+(\S+)\s*=\s*(\S+)", line)
        if not m:
            raise doc.error(f"expected 'const <name> = <point>', got {line!r}", lineno)
        if m.group(2) not in index:
            raise doc.error(f"unknown point {m.group(2)!r}", lineno)
        try:
            symbols.append(constant(m.group(1)))
        except ValueError as exc:
            raise doc.error(str(exc), lineno) from None
        consts[m.group(1)] = m.group(2)
    try:
        space = make_space(ids, weights)
        return interpret(space, Language(symbols), tables, consts)
    except (StructureError, ValueError) as exc:
        raise doc.error(str(exc)) from None


def load_structure(path: str | Path, max_points: int | None = None) -> InterpretedStructure:
    return parse_structure(Path(path).read_text(encoding="utf-8"), str(path), max_points)


def dump_structure(M: InterpretedStructure) -> str:
    pts = M.space.points
    out = ["[space]"]
    out += [f"point {p} {render_real(w)}" for p, w in zip(pts, M.space.weights)]
    out.append("[relations]")
    for sym in M.language.relations:
        if sym.name == EQUALITY.name:
            continue
        table = M.tables[sym.name]
        if sym.arity == 1:
            cells = " ".join(f"{p}={render_real(float(v))}" for p, v in zip(pts, table))
            out.append(f"rel {sym.name} bound={render_real(sym.bound)} {cells}")
        elif sym.arity == 2:
            cells = " ".join(
                f"{pts[i]},{pts[j]}={render_real(float(table[i, j]))}"
                for i in range(len(pts))
                for j in range(len(pts))
            )
            out.append(f"rel2 {sym.name} bound={render_real(sym.bound)} {cells}")
        else:
            raise ValueError(f"cannot write relation {sym.name!r} of arity {sym.arity}")
    if M.constants:
        out.append("[constants]")
        out += [f"const {c} = {pts[i]}" for c, i in M.constants.items()]
    return "\n".join(out) + "\n"


# --------------------------------------------------------------------------
# theories


def load_theory(path: str | Path, language: Language) -> Theory:
    text = Path(path).read_text(encoding="utf-8")
    try:
        return parse_theory(text, language)
    except ParseError as exc:
        raise InputError(exc.message, str(path), exc.line) from None
    except ValueError as exc:
        raise InputError(str(exc), str(path)) from None


def dump_theory(T: Theory) -> str:
    return "".join(render_statement(s) + "\n" for s in T)


# --------------------------------------------------------------------------
# instances


@dataclass(frozen=True)
class Instance:
    kind: str
    epsilon: float
    payload: Any


def _functional(doc: _Doc, ids: list[str], gens: dict[str, LatticeFn], seed: int) -> PositiveFunctional:
    lines = doc.lines("functional")
    if not lines:
        raise doc.error("missing or empty [functional] section")
    first_line, first = lines[0]
    parts = first.split()
    if parts[0] == "uniform":
        if len(lines) > 1 or len(parts) > 1:
            raise doc.error("'uniform' stands alone", first_line)
        return PositiveFunctional.from_weights([1.0 / len(ids)] * len(ids), seed=seed)
    if parts[0] == "hidden-weights":
        if len(lines) > 1:
            raise doc.error("'hidden-weights' must be the only functional line", lines[1][0])
        items = parts[1:]
        if items and all("=" in it for it in items):
            _, entries = _pairs(items, doc, first_line)
            w = dict(entries)
            missing = [p for p in ids if p not in w]
            if missing or len(w) != len(ids) or set(w) - set(ids):
                raise doc.error("hidden weights must list every point exactly once", first_line)
            weights = [w[p] for p in ids]
        else:
            weights = [_number(t, doc, first_line) for t in items]
            if len(weights) != len(ids):
                raise doc.error(f"expected {len(ids)} hidden weights, got {len(weights)}", first_line)
        try:
            return PositiveFunctional.from_weights(weights, seed=seed)
        except ValueError as exc:
            raise doc.error(str(exc), first_line) from None
    fns, vals = [], []
    for lineno, line in lines:
        parts = line.split()
        if parts[0] != "table" or len(parts) != 2 or "=" not in parts[1]:
            raise doc.error(f"expected 'table <generator>=<value>', got {line!r}", lineno)
        name, _, value = parts[1].partition("=")
        if name == "one":
            fns.append(LatticeFn.const(len(ids), 1.0))
        elif name in gens:
            fns.append(gens[name])
        else:
            raise doc.error(f"unknown generator {name!r} in functional table", lineno)
        vals.append(_number(value, doc, lineno))
    try:
        return PositiveFunctional.from_table(fns, vals)
    except ValueError as exc:
        raise doc.error(str(exc), lines[0][0]) from None


def _epsilon(doc: _Doc, required: bool) -> float:
    if "epsilon" not in doc.header:
        if required:
            raise doc.error("missing 'epsilon = ...'")
        return 0.0
    text, lineno = doc.header["epsilon"]
    eps = _number(text, doc, lineno)
    if eps < 0 or (required and eps == 0):
        raise doc.error("epsilon must be positive", lineno)
    return eps


def parse_instance(
    text: str, path: str = "<instance>", *, expect: str | None = None, seed: int = 0, max_points: int | None = None
) -> Instance:
    doc = _split(text, path, {"space", "algebra", "generators", "functional", "grid"})
    if "kind" not in doc.header:
        raise doc.error("missing 'kind = ...' line")
    kind, kind_line = doc.header["kind"]
    if kind not in KINDS:
        raise doc.error(f"unknown kind {kind!r}", kind_line)
    if expect is not None and kind != expect:
        raise doc.error(f"file describes a {kind!r} instance, not {expect!r}", kind_line)
    extra = set(doc.header) - {"kind", "epsilon"}
    if extra:
        key = sorted(extra)[0]
        raise doc.error(f"unexpected header entry {key!r}", doc.header[key][1])
    allowed = {"stone": {"algebra"}, "daniell": {"space", "generators", "functional"}, "riesz": {"grid", "generators", "functional"}}[kind]
    stray = set(doc.sections) - allowed
    if stray:
        raise doc.error(f"section [{sorted(stray)[0]}] does not belong to a {kind} instance")

    if kind == "stone":
        lines = doc.lines("algebra")
        if len(lines) != 1 or not lines[0][1].startswith("atoms "):
            raise doc.error("a stone instance needs one 'atoms <m1> <m2> ...' line in [algebra]")
        lineno, line = lines[0]
        measures = [_number(t, doc, lineno) for t in line.split()[1:]]
        try:
            return Instance(kind, _epsilon(doc, False), FiniteProbabilityAlgebra(tuple(measures)))
        except ValueError as exc:
            raise doc.error(str(exc), lineno) from None

    eps = _epsilon(doc, True)
    if kind == "daniell":
        ids, _ = _space(doc, weighted=False)
        if max_points is not None and len(ids) > max_points:
            raise doc.error(f"{len(ids)} points exceed the limit of {max_points}")
        gens: dict[str, LatticeFn] = {}
        for lineno, line in doc.lines("generators"):
            parts = line.split()
            if parts[0] != "gen" or len(parts) < 2:
                raise doc.error(f"expected 'gen <name> <point>=<value> ...', got {line!r}", lineno)
            _, entries = _pairs(parts[2:], doc, lineno)
            vals = dict(entries)
            if set(vals) != set(ids) or len(entries) != len(ids):
                raise doc.error(f"generator {parts[1]!r} must give one value per point", lineno)
            if parts[1] in gens:
                raise doc.error(f"generator {parts[1]!r} defined twice", lineno)
            gens[parts[1]] = LatticeFn([vals[p] for p in ids])
        if not gens:
            raise doc.error("a daniell instance needs at least one generator")
        I = _functional(doc, ids, gens, seed)
        try:
            return Instance(kind, eps, DaniellInstance(tuple(ids), tuple(gens.items()), I, eps))
        except ValueError as exc:
            raise doc.error(str(exc)) from None

    axes = []
    for lineno, line in doc.lines("grid"):
        parts = line.split()
        if parts[0] != "interval" or len(parts) != 4:
            raise doc.error(f"expected 'interval <lo> <hi> <count>', got {line!r}", lineno)
        lo, hi = _number(parts[1], doc, lineno), _number(parts[2], doc, lineno)
        if not parts[3].isdigit():
            raise doc.error(f"sample count must be a positive integer, got {parts[3]!r}", lineno)
        axes.append((lo, hi, int(parts[3])))
    try:
        grid = Grid(tuple(axes))
    except ValueError as exc:
        raise doc.error(str(exc)) from None
    if max_points is not None and grid.size > max_points:
        raise doc.error(f"{grid.size} grid points exceed the limit of {max_points}")
    exprs: dict[str, LatticeFn] = {}
    for lineno, line in doc.lines("generators"):
        m = re.fullmatch(r"gen\s+([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.+)", line)
        if not m:
            raise doc.error(f"expected 'gen <name> = <expression>', got {line!r}", lineno)
        if m.group(1) in exprs:
            raise doc.error(f"generator {m.group(1)!r} defined twice", lineno)
        try:
            exprs[m.group(1)] = grid.sample(m.group(2))
        except (ValueError, ArithmeticError) as exc:
            raise doc.error(str(exc), lineno) from None
    if not exprs:
        raise doc.error("a riesz instance needs at least one generator")
    I = _functional(doc, list(grid.point_ids()), exprs, seed)
    return Instance(kind, eps, (grid, exprs, I))


def load_instance(path: str | Path, **kwargs: Any) -> Instance:
    return parse_instance(Path(path).read_text(encoding="utf-8"), str(path), **kwargs)
