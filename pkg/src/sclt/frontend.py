"""Problem text format, result formatting and the command line interface.

A problem file holds declarations and clauses, one per line:

    # comment
    pred P/2
    sort S = {k1, k2}
    x = 0 || P(x, y) | ~Q(y)
    true || Q(x)
    x < 0, x != y || false

The left side is a comma-separated conjunction of linear constraints (or
`true`), the right side a `|`-separated disjunction of literals (or
`false`).  Lowercase identifiers that are not declared names are variables.
Variables suffixed with a declared sort name (like `u_S`) range over that
finite sort; the sort is compiled away with a membership predicate, and the
sort constants become the rationals 1..n.
"""

from __future__ import annotations

import argparse
import os
import re
import sys
from fractions import Fraction

from . import lra
from .clauses import abstract_clause, clause, is_pure
from .engine import Engine, RunConfig, SAT_GROUND, UNKNOWN, UNSAT
from .terms import Const, FgLit, LinForm, Var, bg_atom
from .verify import check_saturated, ground_unsat_check, SAT_OVER_B, UNSAT_OVER_B


class ParseError(Exception):
    pass


_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:/\d+)?)|(?P<id>[A-Za-z_][A-Za-z0-9_']*)"
    r"|(?P<op>\|\||<=|>=|!=|[<>=+\-*(),|~]))"
)

_RELS = {"<=", "<", "=", "!=", ">=", ">"}


def _tokenize(line):
    out = []
    pos = 0
    while pos < len(line):
        m = _TOKEN.match(line, pos)
        if not m:
            if line[pos:].strip():
                raise ParseError(f"cannot read {line[pos:].strip()!r}")
            break
        pos = m.end()
        if m.group("num"):
            out.append(("num", Fraction(m.group("num"))))
        elif m.group("id"):
            out.append(("id", m.group("id")))
        else:
            out.append(("op", m.group("op")))
    return out


class _Tokens:
    def __init__(self, toks):
        self.toks = toks
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None)

    def next(self):
        t = self.peek()
        self.i += 1
        return t

    def expect(self, kind, value=None):
        k, v = self.next()
        if k != kind or (value is not None and v != value):
            raise ParseError(f"expected {value or kind}, got {v!r}")
        return v

    @property
    def done(self):
        return self.i >= len(self.toks)


class Problem:
    def __init__(self):
        self.preds = {}
        self.sorts = {}
        self.clauses = []


def parse_problem(text):
    prob = Problem()
    sort_consts = {}
    pending = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            if line.startswith("pred "):
                m = re.fullmatch(r"pred\s+([A-Za-z_][A-Za-z0-9_']*)\s*/\s*(\d+)", line)
                if not m:
                    raise ParseError("bad predicate declaration")
                prob.preds[m.group(1)] = int(m.group(2))
            elif line.startswith("sort "):
                m = re.fullmatch(
                    r"sort\s+([A-Za-z_][A-Za-z0-9_']*)\s*=\s*\{\s*([^}]*)\}", line)
                if not m:
                    raise ParseError("bad sort declaration")
                name = m.group(1)
                members = [s.strip() for s in m.group(2).split(",") if s.strip()]
                if not members:
                    raise ParseError("empty sort")
                prob.sorts[name] = members
                for i, k in enumerate(members, 1):
                    sort_consts[k] = Fraction(i)
            else:
                pending.append((lineno, line))
        except ParseError as e:
            raise ParseError(f"line {lineno}: {e}") from None
    for name, members in prob.sorts.items():
        mem = _sort_pred(name)
        prob.preds[mem] = 1
        x = Var("x")
        for i in range(1, len(members) + 1):
            prob.clauses.append(clause(
                [bg_atom(LinForm.of(x) - LinForm.const(i), "=")],
                [FgLit(True, mem, (x,))]))
        prob.clauses.append(clause(
            [bg_atom(LinForm.of(x) - LinForm.const(i), "!=")
             for i in range(1, len(members) + 1)],
            [FgLit(False, mem, (x,))]))
    for lineno, line in pending:
        try:
            prob.clauses.append(_parse_clause(line, prob, sort_consts))
        except ParseError as e:
            raise ParseError(f"line {lineno}: {e}") from None
    return prob


def _sort_pred(name):
    return f"In{name}"


def _parse_clause(line, prob, sort_consts):
    if "||" not in line:
        raise ParseError("clause needs a '||' separator")
    left, right = line.split("||", 1)
    lt = _Tokens(_tokenize(left))
    constraint = _parse_constraint(lt, sort_consts)
    rt = _Tokens(_tokenize(right))
    body, guards = _parse_body(rt, prob, sort_consts)
    c = clause(constraint, guards + body)
    c = abstract_clause(c)
    if not is_pure([c]):
        raise ParseError("clause is not pure (foreground constants are not allowed)")
    return c


def _parse_constraint(toks, sort_consts):
    if toks.peek() == ("id", "true"):
        toks.next()
        if not toks.done:
            raise ParseError("junk after 'true'")
        return []
    out = []
    while True:
        lhs = _parse_expr(toks, sort_consts)
        k, rel = toks.next()
        if k != "op" or rel not in _RELS:
            raise ParseError(f"expected a relation, got {rel!r}")
        rhs = _parse_expr(toks, sort_consts)
        out.append(bg_atom(lhs - rhs, rel))
        if toks.done:
            return out
        toks.expect("op", ",")


def _parse_expr(toks, sort_consts):
    acc = _parse_term(toks, sort_consts)
    while toks.peek()[0] == "op" and toks.peek()[1] in "+-":
        _, op = toks.next()
        rhs = _parse_term(toks, sort_consts)
        acc = acc + rhs if op == "+" else acc - rhs
    return acc


def _parse_term(toks, sort_consts):
    k, v = toks.peek()
    if k == "op" and v == "-":
        toks.next()
        return -_parse_term(toks, sort_consts)
    if k == "op" and v == "(":
        toks.next()
        inner = _parse_expr(toks, sort_consts)
        toks.expect("op", ")")
        return inner
    if k == "num":
        toks.next()
        coeff = v
        nk, nv = toks.peek()
        if nk == "op" and nv == "*":
            toks.next()
            return _parse_term(toks, sort_consts).scale(coeff)
        if nk == "id":
            toks.next()
            return _atom_form(nv, sort_consts).scale(coeff)
        return LinForm.const(coeff)
    if k == "id":
        toks.next()
        form = _atom_form(v, sort_consts)
        nk, nv = toks.peek()
        if nk == "op" and nv == "*":
            toks.next()
            nk2, nv2 = toks.next()
            if nk2 != "num":
                raise ParseError("nonlinear term")
            return form.scale(nv2)
        return form
    raise ParseError(f"unexpected token {v!r} in arithmetic")


def _atom_form(name, sort_consts):
    if name in sort_consts:
        return LinForm.const(sort_consts[name])
    return LinForm.of(Var(name))


def _parse_body(toks, prob, sort_consts):
    if toks.peek() == ("id", "false"):
        toks.next()
        if not toks.done:
            raise ParseError("junk after 'false'")
        return [], []
    body = []
    sort_vars = {}
    while True:
        neg = False
        if toks.peek() == ("op", "~"):
            toks.next()
            neg = True
        k, name = toks.next()
        if k != "id":
            raise ParseError(f"expected a predicate, got {name!r}")
        args = []
        if toks.peek() == ("op", "("):
            toks.next()
            if toks.peek() != ("op", ")"):
                while True:
                    args.append(_parse_arg(toks, prob, sort_consts, sort_vars))
                    if toks.peek() == ("op", ","):
                        toks.next()
                        continue
                    break
            toks.expect("op", ")")
        arity = prob.preds.setdefault(name, len(args))
        if arity != len(args):
            raise ParseError(f"{name} used with {len(args)} arguments, declared /{arity}")
        body.append(FgLit(not neg, name, tuple(args)))
        if toks.done:
            guards = [FgLit(False, _sort_pred(s), (v,)) for v, s in sort_vars.items()]
            return body, guards
        toks.expect("op", "|")


def _parse_arg(toks, prob, sort_consts, sort_vars):
    form = _parse_expr(toks, sort_consts)
    if len(form.coeffs) == 1 and form.offset == 0 and form.coeffs[0][1] == 1:
        v = form.coeffs[0][0]
        if isinstance(v, Var):
            for s in prob.sorts:
                if v.name.endswith("_" + s):
                    sort_vars[v] = s
            return v
    return form


# ----------------------------------------------------------------- formatting

def format_verdict(verdict):
    lines = [f"STATUS {verdict.status}"]
    if verdict.status == UNSAT and verdict.final_conflict is not None:
        lines.append(f"FINAL {verdict.final_conflict!r}")
    if verdict.model is not None:
        lines.extend(format_model(verdict.model))
    return "\n".join(lines)


def format_model(model):
    lines = []
    for c, q in model.witness.items():
        lines.append(f"CONSTANT {c.name} = {q}")
    lines.append("TRAIL " + ", ".join(repr(l) for l in model.literals))
    for pred, disjuncts in sorted(model.candidates.items()):
        if not disjuncts:
            lines.append(f"CANDIDATE {pred}: false")
            continue
        parts = []
        for d in disjuncts:
            if d is None:
                parts.append("true")
            elif not d:
                parts.append("true")
            else:
                parts.append("(" + " & ".join(repr(a) for a in d) + ")")
        lines.append(f"CANDIDATE {pred}: " + " \\/ ".join(parts))
    return lines


def format_trace(trace):
    return "\n".join(f"TRACE\t{rule}\t{payload}" for rule, payload, _ in trace)


# ------------------------------------------------------------------------ CLI

def _pool(n):
    return [Const(f"_c{i+1}") for i in range(n)]


def _add_common(p):
    p.add_argument("file")
    p.add_argument("--constants", type=int, default=2)
    p.add_argument("--max-constants", type=int, default=None)
    p.add_argument("--restarts", type=int, default=64)
    p.add_argument("--steps", type=int, default=10000)
    p.add_argument("--trace", action="store_true")
    p.add_argument("--accept-stuck", dest="accept_stuck", action="store_true", default=True)
    p.add_argument("--no-accept-stuck", dest="accept_stuck", action="store_false")
    p.add_argument("--check-wf", action="store_true")
    p.add_argument("--measure", action="store_true")
    p.add_argument("--adiff", choices=["distinct", "ordered"], default="distinct")
    p.add_argument("--seed", type=int, default=None)


def main(argv=None):
    ap = argparse.ArgumentParser(prog="sclt")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("prove", "model", "saturate", "oracle"):
        _add_common(sub.add_parser(name))
    args = ap.parse_args(argv)

    try:
        with open(args.file) as fh:
            prob = parse_problem(fh.read())
    except (OSError, ParseError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1

    try:
        return _dispatch(args, prob)
    except Exception as e:  # internal invariant violations
        print(f"internal error: {e}", file=sys.stderr)
        return 2


def _dispatch(args, prob):
    pool = _pool(args.constants)
    trace_on = args.trace or os.environ.get("SCLT_TRACE") == "1"

    if args.command == "oracle":
        verdict, _ = ground_unsat_check(prob.clauses, pool, encoding=args.adiff)
        print(f"STATUS {verdict}")
        return 20 if verdict == UNSAT_OVER_B else 10

    if args.command == "saturate":
        maxvars = max((len(c.variables()) for c in prob.clauses), default=0)
        n = max(args.constants, 2 * maxvars)
        verdict, witness = check_saturated(prob.clauses, [], _pool(n), encoding=args.adiff)
        print(f"STATUS {verdict}")
        if witness:
            print(f"WITNESS {witness}")
        return 30 if verdict == "Saturated" else 0

    cfg = RunConfig(
        max_constants=args.max_constants if args.max_constants is not None
        else args.constants,
        restart_budget=args.restarts,
        step_budget=args.steps,
        accept_stuck=True if args.command == "model" else args.accept_stuck,
        adiff_encoding=args.adiff,
        check_wf=args.check_wf,
        check_measure=args.measure,
        seed=args.seed,
    )
    eng = Engine(prob.clauses, pool, cfg)
    verdict = eng.run()
    if trace_on:
        print(format_trace(verdict.trace))
    print(format_verdict(verdict))
    if args.check_wf and verdict.stats.wf_violations:
        for v in verdict.stats.wf_violations:
            print(f"WF-VIOLATION {v}", file=sys.stderr)
        return 2
    if args.measure and verdict.stats.measure_violations:
        for v in verdict.stats.measure_violations:
            print(f"MEASURE-VIOLATION {v}", file=sys.stderr)
        return 2
    if verdict.status == UNSAT:
        return 20
    if verdict.status == SAT_GROUND:
        return 10
    return 0


if __name__ == "__main__":
    sys.exit(main())
