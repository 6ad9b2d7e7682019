"""Command-line front end: ``intlog check``, ``intlog construct``, ``intlog lemma``.

Reports are ``key = value`` lines followed by a ``[residuals]`` (or
``[sequence]``/``[members]``) section.  Exit codes: 0 pass, 1 check failure,
2 input error.
"""

from __future__ import annotations

import argparse
import math
import re
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from .engines.daniell import DaniellInstance, daniell_model, daniell_theory
from .engines.riesz import riesz_model
from .engines.stone import stone_isomorphism_check, stone_model, stone_theory
from .fileio import InputError, dump_structure, dump_theory, load_instance, load_structure, load_theory
from .lattice import (
    ConvergenceError,
    Interval,
    LatticeFn,
    Literal,
    PositiveFunctional,
    check_special_pair,
    find_inessential,
    indicator_seq,
    is_inessential,
    refine_cover,
    stabilization_index,
    star_combine,
)
from .measure import TAU, make_space
from .structure import check_theory

EXIT_PASS, EXIT_FAIL, EXIT_INPUT = 0, 1, 2
DEFAULT_MAX_POINTS = 5000
LEMMAS = ("tendtochar", "inessential", "refine_cover", "special_pair")


class UsageError(Exception):
    """Invalid command-line arguments (exit 2)."""


def fmt(x: float | int | bool) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    x = float(x)
    return "0" if x == 0 else repr(x)


def fmt_values(values: Sequence[float]) -> str:
    return ",".join(fmt(float(v)) for v in values)


def verdict(ok: bool) -> str:
    return "pass" if ok else "fail"


class Report:
    def __init__(self) -> None:
        self.lines: list[str] = []

    def kv(self, key: str, value: object) -> None:
        text = value if isinstance(value, str) else fmt(value)  # type: ignore[arg-type]
        self.lines.append(f"{key} = {text}")

    def section(self, name: str) -> None:
        self.lines.append(f"[{name}]")

    def text(self) -> str:
        return "\n".join(self.lines) + "\n"


# --------------------------------------------------------------------------
# check


def _theory_section(rep: Report, result) -> None:
    rep.section("residuals")
    for r in result.results:
        line = f"{verdict(r.passed)} residual={fmt(r.violation)}"
        if r.error is None:
            line += f" value={fmt(r.value)}"
        else:
            line += f" error={r.error}"
        rep.kv(r.label, line)


def cmd_check(args: argparse.Namespace) -> tuple[int, Report]:
    M = load_structure(args.structure, args.max_points)
    T = load_theory(args.theory, M.language)
    result = check_theory(M, T, epsilon=args.epsilon, tol=args.tol)
    rep = Report()
    rep.kv("command", "check")
    rep.kv("points", M.space.size)
    rep.kv("statements", len(result.results))
    rep.kv("passed", result.pass_count)
    rep.kv("failed", len(result.results) - result.pass_count)
    rep.kv("epsilon", args.epsilon)
    rep.kv("tol", args.tol)
    rep.kv("residual_max", result.residual_max)
    if not result.passed:
        rep.kv("failures", ",".join(r.label for r in result.failures))
    rep.kv("status", verdict(result.passed))
    _theory_section(rep, result)
    return (EXIT_PASS if result.passed else EXIT_FAIL), rep


# --------------------------------------------------------------------------
# construct


def _emit(args: argparse.Namespace, M, T) -> None:
    if args.emit_structure:
        Path(args.emit_structure).write_text(dump_structure(M), encoding="utf-8")
    if args.emit_theory:
        Path(args.emit_theory).write_text(dump_theory(T), encoding="utf-8")


def cmd_construct(args: argparse.Namespace) -> tuple[int, Report]:
    inst = load_instance(args.instance, expect=args.kind, seed=args.seed, max_points=args.max_points)
    eps = args.epsilon if args.epsilon is not None else inst.epsilon
    rep = Report()
    rep.kv("command", "construct")
    rep.kv("kind", inst.kind)

    if inst.kind == "stone":
        B = inst.payload
        M, T = stone_model(B), stone_theory(B)
        result = check_theory(M, T, epsilon=eps, tol=args.tol)
        iso = stone_isomorphism_check(B, M, args.tol)
        _emit(args, M, T)
        ok = result.passed and iso.passed
        rep.kv("atoms", B.atom_count)
        rep.kv("elements", 1 << B.atom_count)
        rep.kv("statements", len(result.results))
        rep.kv("residual_max", result.residual_max)
        rep.kv("theory", verdict(result.passed))
        for name, passed in iso.checks.items():
            rep.kv(f"check.{name}", verdict(passed))
        for name, witness in iso.witnesses.items():
            rep.kv(f"witness.{name}", witness)
        rep.kv("status", verdict(ok))
        _theory_section(rep, result)
        return (EXIT_PASS if ok else EXIT_FAIL), rep

    if inst.kind == "daniell":
        instance = inst.payload
        if eps != instance.epsilon:
            instance = DaniellInstance(instance.points, instance.generators, instance.functional, eps)
        M, report = daniell_model(instance)
        T = daniell_theory(instance)
        gens = instance.generator_map()
        points = instance.size
    else:
        grid, exprs, I = inst.payload
        M, report = riesz_model(grid, exprs, eps, I)
        T = daniell_theory(DaniellInstance(grid.point_ids(), tuple(exprs.items()), I, eps))
        gens = exprs
        points = grid.size
    result = check_theory(M, T, epsilon=eps, tol=args.tol)
    _emit(args, M, T)
    ok = report.passed and result.passed
    rep.kv("points", points)
    rep.kv("generators", len(gens))
    rep.kv("epsilon", eps)
    rep.kv("epsilon_internal", report.epsilon_internal)
    rep.kv("endpoints", len(report.endpoints))
    rep.kv("atoms", len(report.atoms))
    rep.kv("lambda0_total", report.lambda0_total)
    rep.kv("residual_max", report.residual_max)
    for name, passed in report.checks.items():
        rep.kv(f"check.{name}", verdict(passed))
    if "dini" in report.info:
        dini = report.info["dini"]
        rep.kv("dini.flagged", ",".join(dini.flagged) or "none")
        rep.kv("dini.limit_gap", dini.limit_gap)
    rep.kv("statements", len(result.results))
    rep.kv("theory_residual_max", result.residual_max)
    rep.kv("theory", verdict(result.passed))
    rep.kv("status", verdict(ok))
    rep.section("generators")
    for name in gens:
        r, b = report.residuals[name], report.bounds[name]
        rep.kv(name, f"{verdict(r <= b)} residual={fmt(r)} bound={fmt(b)}")
    rep.section("weights")
    for p, w in zip(M.space.points, M.space.weights):
        rep.kv(p, w)
    _theory_section(rep, result)
    return (EXIT_PASS if ok else EXIT_FAIL), rep


# --------------------------------------------------------------------------
# lemma


def _floats(text: str, what: str) -> list[float]:
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"{what}: expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise UsageError(f"{what}: no values given")
    if not all(math.isfinite(v) for v in vals):
        raise UsageError(f"{what}: values must be finite")
    return vals


_INTERVAL = re.compile(r"\s*([\(\[])\s*([^,\s]+)\s*,\s*([^,\s]+)\s*([\)\]])\s*\Z")


def parse_interval(text: str) -> Interval:
    """``(a,b)`` open, ``[a,b]`` closed, ``{a}`` a point; ``inf`` allowed."""
    m = re.fullmatch(r"\s*\{\s*([^\s}]+)\s*\}\s*", text)
    try:
        if m:
            return Interval.point(float(m.group(1)))
        m = _INTERVAL.match(text)
        if not m:
            raise UsageError(f"bad interval {text!r}; use (a,b), [a,b] or {{a}}")
        lo, hi = float(m.group(2)), float(m.group(3))
        # an infinite end is never closed, whatever bracket it carries
        left = m.group(1) == "[" and math.isfinite(lo)
        right = m.group(4) == "]" and math.isfinite(hi)
        return Interval(lo, hi, left, right)
    except ValueError as exc:
        raise UsageError(f"bad interval {text!r}: {exc}") from None


def _functions(args: argparse.Namespace, name: str = "f") -> list[LatticeFn]:
    fs = [LatticeFn(_floats(t, f"--{name}")) for t in getattr(args, name) or []]
    if not fs:
        raise UsageError(f"at least one --{name} is required")
    if len({len(f) for f in fs}) != 1:
        raise UsageError("all functions must have the same number of values")
    return fs


def _weights(args: argparse.Namespace, size: int) -> list[float]:
    if args.weights is None:
        return [1.0 / size] * size
    w = _floats(args.weights, "--weights")
    if len(w) != size:
        raise UsageError(f"--weights needs {size} values, got {len(w)}")
    if any(x < 0 for x in w):
        raise UsageError("--weights must be nonnegative")
    return w


def _lemma_tendtochar(args: argparse.Namespace, rep: Report) -> bool:
    fs = _functions(args)
    ivs = [parse_interval(t) for t in args.interval or []]
    if len(ivs) != len(fs):
        raise UsageError("give one --interval per --f")
    modes = {"open" if iv.is_open else "closed" if iv.is_closed else "mixed" for iv in ivs}
    if len(modes) != 1 or "mixed" in modes:
        raise UsageError("intervals must be all open or all closed")
    mode = modes.pop()
    try:
        seq = indicator_seq(list(zip(fs, ivs)), mode, args.combine)
        n_star = stabilization_index(seq)
    except (ValueError, ConvergenceError) as exc:
        raise UsageError(str(exc)) from None
    target = seq.target_flags().astype(float)
    schedule = sorted({n for n in range(1, min(n_star, 8) + 1)} | {n_star, n_star + 1, 2 * n_star})
    rows = [(n, seq.values_at(n)) for n in schedule]
    upward = mode == "open"
    monotone = all(
        bool(np.all(b >= a) if upward else np.all(b <= a)) for (_, a), (_, b) in zip(rows, rows[1:])
    )
    in_range = all(bool(np.all((v >= 0) & (v <= 1))) for _, v in rows)
    if upward:
        support = all(bool(np.all(v[target == 0] == 0)) for _, v in rows)
    else:
        support = all(bool(np.all(v[target == 1] == 1)) for _, v in rows)
    limit = all(bool(np.array_equal(v, target)) for n, v in rows if n >= n_star)
    minimal = n_star == 1 or not seq.is_exact(n_star - 1)
    rep.kv("mode", mode)
    rep.kv("combine", args.combine)
    rep.kv("n_star", n_star)
    rep.kv("indicator", fmt_values(target))
    invariants = {"monotone": monotone, "range": in_range, "support": support, "limit": limit, "minimal": minimal}
    for k, v in invariants.items():
        rep.kv(f"invariant.{k}", verdict(v))
    ok = all(invariants.values())
    rep.kv("status", verdict(ok))
    rep.section("sequence")
    for n, v in rows:
        rep.kv(str(n), fmt_values(v))
    return ok


def _lemma_inessential(args: argparse.Namespace, rep: Report) -> bool:
    fs = _functions(args)
    if not args.interval or len(args.interval) != 1:
        raise UsageError("inessential takes exactly one --interval (r,s)")
    iv = parse_interval(args.interval[0])
    if not math.isfinite(iv.lo) or not math.isfinite(iv.hi):
        raise UsageError("the interval must be bounded")
    I = PositiveFunctional.from_weights(_weights(args, len(fs[0])), seed=args.seed)
    try:
        alpha = find_inessential(fs, (iv.lo, iv.hi), I, args.tol)
    except (ValueError, ConvergenceError) as exc:
        raise UsageError(str(exc)) from None
    mid = (iv.lo + iv.hi) / 2
    rep.kv("alpha", alpha)
    rep.kv("midpoint", alpha == mid)
    inside = iv.lo < alpha < iv.hi
    limits = [is_inessential(f, alpha, I, args.tol) for f in fs]
    rep.kv("invariant.inside", verdict(inside))
    rep.kv("invariant.inessential", verdict(all(ok for ok, _ in limits)))
    ok = inside and all(ok for ok, _ in limits)
    rep.kv("status", verdict(ok))
    rep.section("limits")
    for i, (good, L) in enumerate(limits):
        rep.kv(f"f{i}", f"{verdict(good)} limit={fmt(L)}")
    return ok


_LITERAL = re.compile(r"\s*(-?)f(\d+)\s*(>=|>)\s*0\s*\Z")


def parse_member(text: str, count: int) -> int | list[list[Literal]]:
    """A bit mask (``5``, ``0b101``) or clauses like ``f0>0 & -f1>=0 | f2>0``."""
    try:
        return int(text, 0)
    except ValueError:
        pass
    clauses = []
    for clause in text.split("|"):
        lits = []
        for part in clause.split("&"):
            m = _LITERAL.match(part)
            if not m:
                raise UsageError(f"bad literal {part.strip()!r} in member {text!r}")
            idx = int(m.group(2))
            if idx >= count:
                raise UsageError(f"member {text!r} refers to f{idx}, but only {count} functions are given")
            lits.append(Literal(idx, strict=m.group(3) == ">", negate=m.group(1) == "-"))
        clauses.append(lits)
    return clauses


def _lemma_refine_cover(args: argparse.Namespace, rep: Report) -> bool:
    fs = _functions(args)
    if not args.member:
        raise UsageError("at least one --member is required")
    cover = [parse_member(t, len(fs)) for t in args.member]
    eps = args.epsilon if args.epsilon is not None else 0.1
    size = len(fs[0])
    space = make_space(list(range(size)), _weights(args, size))
    try:
        out = refine_cover(space, fs, cover, eps)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rep.kv("epsilon", eps)
    rep.kv("members_in", len(cover))
    rep.kv("members_out", len(out.members))
    rep.kv("identity", out.identity)
    rep.kv("input_sum", out.input_sum)
    rep.kv("output_sum", out.output_sum)
    for k, v in out.checks.items():
        rep.kv(f"invariant.{k}", verdict(v))
    rep.kv("status", verdict(out.ok))
    rep.section("members")
    for i, m in enumerate(out.members):
        rep.kv(f"m{i}", f"{m.kind} source={m.source} mask={m.mask:#b} fn={fmt_values(m.fn.values)}")
    return out.ok


def _lemma_special_pair(args: argparse.Namespace, rep: Report) -> bool:
    (f,) = _functions(args, "f")[:1]
    (g,) = _functions(args, "g")[:1]
    if len(f) != len(g):
        raise UsageError("--f and --g must have the same number of values")
    weights = _weights(args, len(f)) if args.weights is not None else None
    kind = check_special_pair(f, g, weights, args.tol)
    rep.kv("classification", kind)
    rep.kv("star", fmt_values(star_combine(f, g).values))
    ok = kind != "neither"
    rep.kv("status", verdict(ok))
    return ok


def cmd_lemma(args: argparse.Namespace) -> tuple[int, Report]:
    rep = Report()
    rep.kv("command", "lemma")
    rep.kv("lemma", args.name)
    handler = {
        "tendtochar": _lemma_tendtochar,
        "inessential": _lemma_inessential,
        "refine_cover": _lemma_refine_cover,
        "special_pair": _lemma_special_pair,
    }[args.name]
    ok = handler(args, rep)
    return (EXIT_PASS if ok else EXIT_FAIL), rep


# --------------------------------------------------------------------------
# entry point


def _positive(text: str) -> float:
    x = float(text)
    if not x > 0 or not math.isfinite(x):
        raise argparse.ArgumentTypeError(f"must be a positive number, got {text!r}")
    return x


def _nonnegative(text: str) -> float:
    x = float(text)
    if not x >= 0 or not math.isfinite(x):
        raise argparse.ArgumentTypeError(f"must be a nonnegative number, got {text!r}")
    return x


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=_positive, default=TAU, help="numerical tolerance (default 1e-9)")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized spot checks")
    common.add_argument("--max-points", type=int, default=DEFAULT_MAX_POINTS, help="largest accepted space")

    parser = argparse.ArgumentParser(prog="intlog", description="Finite-scale integration logic workbench.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", parents=[common], help="check a theory against a structure")
    p.add_argument("structure")
    p.add_argument("theory")
    p.add_argument("--epsilon", type=_nonnegative, default=0.0, help="approximate satisfaction slack")
    p.set_defaults(run=cmd_check)

    p = sub.add_parser("construct", parents=[common], help="run a representation engine")
    p.add_argument("kind", choices=("stone", "daniell", "riesz"))
    p.add_argument("instance")
    p.add_argument("--epsilon", type=_nonnegative, default=None, help="override the instance's epsilon")
    p.add_argument("--emit-structure", metavar="PATH")
    p.add_argument("--emit-theory", metavar="PATH")
    p.set_defaults(run=cmd_construct)

    p = sub.add_parser("lemma", parents=[common], help="trace one lattice lemma")
    p.add_argument("name", choices=LEMMAS)
    p.add_argument("--f", action="append", help="function values, comma separated (repeatable)")
    p.add_argument("--g", action="append", help="second function for special_pair")
    p.add_argument("--interval", action="append", help="(a,b), [a,b] or {a} (repeatable)")
    p.add_argument("--combine", choices=("intersection", "union"), default="intersection")
    p.add_argument("--member", action="append", help="cover member: bit mask or literal clauses")
    p.add_argument("--weights", help="point weights, comma separated (default uniform)")
    p.add_argument("--epsilon", type=_positive, default=None, help="refine_cover budget (default 0.1)")
    p.set_defaults(run=cmd_lemma)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        code, rep = args.run(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc.filename}: {exc.strerror}", file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, ArithmeticError, ConvergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    sys.stdout.write(rep.text())
    return code


if __name__ == "__main__":
    raise SystemExit(main())
