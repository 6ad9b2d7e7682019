"""Formula language of integration logic.

Formulas are built from relation atoms, real constants, ``|.|``, ``+``,
``*`` and the integral quantifier ``int[y](...)``.  Subtraction, ``max``,
``min`` and division by a literal are accepted by the parser but expand
into the core constructors, so the evaluator only ever sees six node types.

Textual grammar (whitespace-insensitive)::

    formula   := term (('+' | '-') term)*
    term      := factor (('*' | '/') factor)*
    factor    := REAL | '-' factor | IDENT '(' args ')' | '|' formula '|'
               | '(' formula ')' | 'max(' formula ',' formula ')'
               | 'min(' formula ',' formula ')' | 'int[' IDENT '](' formula ')'
    statement := [LABEL ':'] formula ('==' | '>=') REAL
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Union

__all__ = [
    "EQUALITY",
    "Symbol",
    "Language",
    "Var",
    "Const",
    "Term",
    "Rel",
    "Real",
    "Abs",
    "Add",
    "Mul",
    "Integral",
    "Formula",
    "Statement",
    "Theory",
    "ParseError",
    "relation",
    "constant",
    "parse_formula",
    "parse_statement",
    "parse_theory",
    "render_formula",
    "render_statement",
    "free_vars",
    "is_closed",
    "derive_lattice",
    "formula_bound",
    "neg",
    "sub",
    "sub_const",
]


# --------------------------------------------------------------------------
# symbols and languages


@dataclass(frozen=True)
class Symbol:
    """A relation or constant symbol.

    Relations carry an arity and a universal bound; constants carry neither.
    """

    name: str
    kind: str = "relation"
    arity: int | None = 1
    bound: float | None = 1.0

    def __post_init__(self) -> None:
        if self.kind == "relation":
            if self.arity is None or self.arity < 1:
                raise ValueError(f"relation {self.name!r} needs arity >= 1")
            if self.bound is None or not self.bound >= 0 or math.isinf(self.bound):
                raise ValueError(f"relation {self.name!r} needs a finite bound >= 0")
        elif self.kind == "constant":
            object.__setattr__(self, "arity", None)
            object.__setattr__(self, "bound", None)
        else:
            raise ValueError(f"unknown symbol kind {self.kind!r}")

    @property
    def is_relation(self) -> bool:
        return self.kind == "relation"


def relation(name: str, arity: int = 1, bound: float = 1.0) -> Symbol:
    return Symbol(name, "relation", arity, float(bound))


def constant(name: str) -> Symbol:
    return Symbol(name, "constant", None, None)


EQUALITY = relation("e", 2, 1.0)

_KEYWORDS = frozenset({"int", "max", "min"})


class Language(Mapping[str, Symbol]):
    """An immutable name -> symbol table that always contains equality ``e``."""

    __slots__ = ("_symbols",)

    def __init__(self, symbols: Iterable[Symbol] = ()) -> None:
        table: dict[str, Symbol] = {"e": EQUALITY}
        for sym in symbols:
            if sym.name in _KEYWORDS:
                raise ValueError(f"{sym.name!r} is a reserved word")
            if sym.name == "e":
                if sym != EQUALITY:
                    raise ValueError("the equality symbol e must be binary with bound 1")
                continue
            old = table.get(sym.name)
            if old is not None and old != sym:
                raise ValueError(f"conflicting declarations for {sym.name!r}")
            table[sym.name] = sym
        self._symbols = table

    @classmethod
    def coerce(cls, language: "Language | Iterable[Symbol]") -> "Language":
        return language if isinstance(language, Language) else cls(language)

    def __getitem__(self, name: str) -> Symbol:
        return self._symbols[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._symbols)

    def __len__(self) -> int:
        return len(self._symbols)

    def __repr__(self) -> str:
        return f"Language({list(self._symbols.values())!r})"

    @property
    def relations(self) -> list[Symbol]:
        return [s for s in self._symbols.values() if s.is_relation]

    @property
    def constants(self) -> list[Symbol]:
        return [s for s in self._symbols.values() if not s.is_relation]

    def extend(self, symbols: Iterable[Symbol]) -> "Language":
        return Language([*self._symbols.values(), *symbols])


# --------------------------------------------------------------------------
# abstract syntax


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    name: str


Term = Union[Var, Const]


@dataclass(frozen=True)
class Rel:
    name: str
    args: tuple[Term, ...]


@dataclass(frozen=True)
class Real:
    value: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.value):
            raise ValueError(f"non-finite real literal {self.value!r}")


@dataclass(frozen=True)
class Abs:
    arg: "Formula"


@dataclass(frozen=True)
class Add:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Mul:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Integral:
    body: "Formula"
    var: str


Formula = Union[Rel, Real, Abs, Add, Mul, Integral]


@dataclass(frozen=True)
class Statement:
    """``formula == threshold`` or ``formula >= threshold``."""

    formula: Formula
    relation: str
    threshold: float
    label: str | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.relation not in ("==", ">="):
            raise ValueError(f"statement relation must be '==' or '>=', got {self.relation!r}")
        if not math.isfinite(self.threshold):
            raise ValueError("statement threshold must be finite")

    @property
    def is_closed(self) -> bool:
        return is_closed(self.formula)


@dataclass(frozen=True)
class Theory:
    """An ordered collection of closed statements."""

    statements: tuple[Statement, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "statements", tuple(self.statements))
        for s in self.statements:
            if not s.is_closed:
                raise ValueError(
                    f"theory member {s.label or render_statement(s)!r} has free variables"
                )

    def __len__(self) -> int:
        return len(self.statements)

    def __iter__(self) -> Iterator[Statement]:
        return iter(self.statements)

    def __add__(self, other: "Theory") -> "Theory":
        return Theory(self.statements + other.statements)

    @property
    def labels(self) -> list[str | None]:
        return [s.label for s in self.statements]


# --------------------------------------------------------------------------
# smart constructors shared by the parser and the theory builders


def neg(f: Formula) -> Formula:
    return Mul(Real(-1.0), f)


def sub(f: Formula, g: Formula) -> Formula:
    return Add(f, neg(g))


def sub_const(f: Formula, r: float) -> Formula:
    """``f - r`` as the parser would build it; ``f`` itself when ``r == 0``."""
    return f if r == 0 else sub(f, Real(float(r)))


def derive_lattice(kind: str, f: Formula, g: Formula) -> Formula:
    """Pointwise max (``kind='max'``) or min of two formulas as a core AST.

    ``max(f, g) = (f + g + |f - g|) / 2`` and ``min(f, g) = (f + g - |f - g|) / 2``.
    """
    spread = Abs(sub(f, g))
    if kind == "max":
        return Mul(Real(0.5), Add(Add(f, g), spread))
    if kind == "min":
        return Mul(Real(0.5), Add(Add(f, g), neg(spread)))
    raise ValueError(f"kind must be 'max' or 'min', got {kind!r}")


# --------------------------------------------------------------------------
# structural utilities


def _walk_free(f: Formula, bound: frozenset[str], out: dict[str, None]) -> None:
    if isinstance(f, Rel):
        for t in f.args:
            if isinstance(t, Var) and t.name not in bound:
                out.setdefault(t.name, None)
    elif isinstance(f, Real):
        return
    elif isinstance(f, Abs):
        _walk_free(f.arg, bound, out)
    elif isinstance(f, (Add, Mul)):
        _walk_free(f.left, bound, out)
        _walk_free(f.right, bound, out)
    elif isinstance(f, Integral):
        _walk_free(f.body, bound | {f.var}, out)
    else:
        raise TypeError(f"not a formula: {f!r}")


def free_vars(f: Formula) -> list[str]:
    """Free variables of ``f`` in order of first occurrence."""
    out: dict[str, None] = {}
    _walk_free(f, frozenset(), out)
    return list(out)


def is_closed(f: Formula) -> bool:
    return not free_vars(f)


def formula_bound(f: Formula, language: Language | Iterable[Symbol]) -> float:
    """A bound on ``|f|`` valid in every probability structure respecting the
    declared universal bounds."""
    lang = Language.coerce(language)

    def go(g: Formula) -> float:
        if isinstance(g, Rel):
            return float(lang[g.name].bound)
        if isinstance(g, Real):
            return abs(g.value)
        if isinstance(g, Abs):
            return go(g.arg)
        if isinstance(g, Add):
            return go(g.left) + go(g.right)
        if isinstance(g, Mul):
            return go(g.left) * go(g.right)
        if isinstance(g, Integral):
            # total measure is 1
            return go(g.body)
        raise TypeError(f"not a formula: {g!r}")

    return go(f)


def iter_subformulas(f: Formula) -> Iterator[Formula]:
    yield f
    if isinstance(f, Abs):
        yield from iter_subformulas(f.arg)
    elif isinstance(f, (Add, Mul)):
        yield from iter_subformulas(f.left)
        yield from iter_subformulas(f.right)
    elif isinstance(f, Integral):
        yield from iter_subformulas(f.body)


def relation_names(f: Formula) -> set[str]:
    return {g.name for g in iter_subformulas(f) if isinstance(g, Rel)}


# --------------------------------------------------------------------------
# rendering


def render_real(x: float) -> str:
    return repr(float(x))


def render_term(t: Term) -> str:
    return t.name


def _render(f: Formula, ctx: str) -> str:
    # ctx: "sum" (left operand of +, or top), "sum_r" (right of +),
    #      "prod" (left of *), "prod_r" (right of *)
    if isinstance(f, Rel):
        return f"{f.name}({','.join(render_term(t) for t in f.args)})"
    if isinstance(f, Real):
        return render_real(f.value)
    if isinstance(f, Abs):
        return f"|{_render(f.arg, 'sum')}|"
    if isinstance(f, Integral):
        return f"int[{f.var}]({_render(f.body, 'sum')})"
    if isinstance(f, Add):
        text = f"{_render(f.left, 'sum')} + {_render(f.right, 'sum_r')}"
        return text if ctx == "sum" else f"({text})"
    if isinstance(f, Mul):
        text = f"{_render(f.left, 'prod')}*{_render(f.right, 'prod_r')}"
        return f"({text})" if ctx == "prod_r" else text
    raise TypeError(f"not a formula: {f!r}")


def render_formula(f: Formula) -> str:
    """Canonical text for ``f``; ``parse_formula`` reads it back to ``f``."""
    return _render(f, "sum")


def render_statement(s: Statement) -> str:
    text = f"{render_formula(s.formula)} {s.relation} {render_real(s.threshold)}"
    return f"{s.label}: {text}" if s.label else text


# --------------------------------------------------------------------------
# parsing


class ParseError(ValueError):
    """Syntax or well-formedness error; ``pos`` is a 0-based character offset."""

    def __init__(self, message: str, pos: int | None = None, text: str | None = None) -> None:
        self.message = message
        self.pos = pos
        self.text = text
        self.line: int | None = None
        where = f" at position {pos}" if pos is not None else ""
        super().__init__(f"{message}{where}")


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>==|>=|[-+*/|(),\[\]:])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind, m.group(), pos))
        pos = m.end()
    toks.append(_Tok("eof", "", len(text)))
    return toks


_MAX_SIGNIFICANT = 17


def _number(tok: _Tok, text: str) -> float:
    mantissa = re.split(r"[eE]", tok.text)[0].replace(".", "").lstrip("0")
    if len(mantissa.rstrip("0")) > _MAX_SIGNIFICANT:
        raise ParseError(f"real literal {tok.text!r} has more than 17 significant digits", tok.pos, text)
    value = float(tok.text)
    if not math.isfinite(value):
        raise ParseError(f"real literal {tok.text!r} is not finite", tok.pos, text)
    return value


class _Parser:
    def __init__(self, text: str, language: Language) -> None:
        self.text = text
        self.lang = language
        self.toks = _tokenize(text)
        self.i = 0

    # token helpers
    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> _Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, message: str, tok: _Tok | None = None) -> ParseError:
        tok = tok or self.tok
        return ParseError(message, tok.pos, self.text)

    def accept(self, text: str) -> bool:
        if self.tok.kind in ("op",) and self.tok.text == text:
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> _Tok:
        tok = self.tok
        if tok.kind == "op" and tok.text == text:
            self.i += 1
            return tok
        found = tok.text or "end of input"
        raise self.error(f"expected {text!r}, found {found!r}")

    def expect_ident(self) -> _Tok:
        tok = self.tok
        if tok.kind != "ident":
            raise self.error(f"expected identifier, found {tok.text or 'end of input'!r}")
        self.i += 1
        return tok

    # grammar
    def formula(self, bound: tuple[str, ...]) -> Formula:
        f = self.term(bound)
        while True:
            if self.accept("+"):
                f = Add(f, self.term(bound))
            elif self.accept("-"):
                f = sub(f, self.term(bound))
            else:
                return f

    def term(self, bound: tuple[str, ...]) -> Formula:
        f = self.factor(bound)
        while True:
            if self.accept("*"):
                f = Mul(f, self.factor(bound))
            elif self.tok.kind == "op" and self.tok.text == "/":
                slash = self.tok
                self.i += 1
                divisor = self.factor(bound)
                if not isinstance(divisor, Real):
                    raise self.error("division is only allowed by a literal constant", slash)
                if divisor.value == 0:
                    raise self.error("division by zero", slash)
                if isinstance(f, Real):
                    f = Real(f.value / divisor.value)
                else:
                    f = Mul(f, Real(1.0 / divisor.value))
            else:
                return f

    def factor(self, bound: tuple[str, ...]) -> Formula:
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            return Real(_number(tok, self.text))
        if tok.kind == "op":
            if tok.text == "-":
                self.i += 1
                if self.tok.kind == "num":
                    num = self.tok
                    self.i += 1
                    return Real(-_number(num, self.text))
                return neg(self.factor(bound))
            if tok.text == "|":
                self.i += 1
                inner = self.formula(bound)
                self.expect("|")
                return Abs(inner)
            if tok.text == "(":
                self.i += 1
                inner = self.formula(bound)
                self.expect(")")
                return inner
            raise self.error(f"unexpected {tok.text!r}")
        if tok.kind == "ident":
            if tok.text in ("max", "min"):
                self.i += 1
                self.expect("(")
                a = self.formula(bound)
                self.expect(",")
                b = self.formula(bound)
                self.expect(")")
                return derive_lattice(tok.text, a, b)
            if tok.text == "int":
                self.i += 1
                self.expect("[")
                var = self.expect_ident()
                if var.text in _KEYWORDS:
                    raise self.error(f"{var.text!r} is a reserved word", var)
                sym = self.lang.get(var.text)
                if sym is not None:
                    raise self.error(f"cannot bind declared symbol {var.text!r}", var)
                if var.text in bound:
                    raise self.error(f"variable {var.text!r} is already bound (shadowing)", var)
                self.expect("]")
                self.expect("(")
                body = self.formula(bound + (var.text,))
                self.expect(")")
                return Integral(body, var.text)
            return self.atom(bound)
        raise self.error("unexpected end of input" if tok.kind == "eof" else f"unexpected {tok.text!r}")

    def atom(self, bound: tuple[str, ...]) -> Formula:
        name = self.expect_ident()
        sym = self.lang.get(name.text)
        if sym is None:
            raise self.error(f"unknown relation symbol {name.text!r}", name)
        if not sym.is_relation:
            raise self.error(f"{name.text!r} is a constant, not a relation", name)
        self.expect("(")
        args: list[Term] = []
        if not (self.tok.kind == "op" and self.tok.text == ")"):
            args.append(self.term_arg())
            while self.accept(","):
                args.append(self.term_arg())
        self.expect(")")
        if len(args) != sym.arity:
            raise self.error(
                f"relation {name.text!r} has arity {sym.arity}, got {len(args)} argument(s)", name
            )
        return Rel(name.text, tuple(args))

    def term_arg(self) -> Term:
        tok = self.expect_ident()
        if tok.text in _KEYWORDS:
            raise self.error(f"{tok.text!r} is a reserved word", tok)
        sym = self.lang.get(tok.text)
        if sym is None:
            return Var(tok.text)
        if sym.is_relation:
            raise self.error(f"relation symbol {tok.text!r} used as a term", tok)
        return Const(tok.text)

    def finish(self) -> None:
        if self.tok.kind != "eof":
            raise self.error(f"unexpected trailing input {self.tok.text!r}")


def parse_formula(text: str, language: Language | Iterable[Symbol] = ()) -> Formula:
    """Parse ``text`` into a core formula over ``language``."""
    p = _Parser(text, Language.coerce(language))
    f = p.formula(())
    p.finish()
    return f


def parse_statement(text: str, language: Language | Iterable[Symbol] = ()) -> Statement:
    """Parse ``[label:] formula (==|>=) REAL``."""
    p = _Parser(text, Language.coerce(language))
    label = None
    if p.tok.kind == "ident" and p.peek().kind == "op" and p.peek().text == ":":
        label = p.tok.text
        p.i += 2
    f = p.formula(())
    rel = p.tok
    if not (rel.kind == "op" and rel.text in ("==", ">=")):
        raise p.error(f"expected '==' or '>=', found {rel.text or 'end of input'!r}")
    p.i += 1
    sign = -1.0 if p.accept("-") else 1.0
    num = p.tok
    if num.kind != "num":
        raise p.error("expected a real threshold")
    p.i += 1
    p.finish()
    return Statement(f, rel.text, sign * _number(num, text), label)


def parse_theory(
    lines: Iterable[str] | str, language: Language | Iterable[Symbol] = ()
) -> Theory:
    """Parse a theory listing: one statement per line, ``#`` starts a comment.

    Errors carry the 1-based line number in ``ParseError.line``.
    """
    lang = Language.coerce(language)
    if isinstance(lines, str):
        lines = lines.splitlines()
    out = []
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            s = parse_statement(line, lang)
        except ParseError as exc:
            exc.line = lineno
            raise
        if not s.is_closed:
            err = ParseError(f"statement has free variables {free_vars(s.formula)}")
            err.line = lineno
            raise err
        out.append(s)
    return Theory(tuple(out))
