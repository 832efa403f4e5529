"""Terms, literals and substitutions.

The clause language is two-sorted: foreground atoms are predicates applied
to variables or pool constants, background atoms are linear constraints over
the rationals.  After abstraction every foreground argument is a variable or
a pool constant, so terms stay flat and unification degenerates to binding
variables to variables or constants.

All arithmetic is exact (fractions.Fraction); no floats anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import count


class SortError(Exception):
    """A substitution or term construction violates the two-sorted discipline."""


@dataclass(frozen=True, order=True)
class Var:
    name: str

    def __repr__(self):
        return self.name


@dataclass(frozen=True, order=True)
class Const:
    """A foreground constant of the background sort (a pool constant)."""

    name: str

    def __repr__(self):
        return self.name


def _sym_key(s):
    return (0 if isinstance(s, Const) else 1, s.name)


ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass(frozen=True)
class LinForm:
    """A linear rational form: sum of coeff * symbol plus a constant offset.

    coeffs is sorted by symbol and contains no zero coefficients, so equal
    forms compare equal structurally.
    """

    coeffs: tuple = ()
    offset: Fraction = ZERO

    @staticmethod
    def make(mapping, offset=ZERO):
        items = tuple(
            (s, Fraction(c))
            for s, c in sorted(mapping.items(), key=lambda kv: _sym_key(kv[0]))
            if c != 0
        )
        return LinForm(items, Fraction(offset))

    @staticmethod
    def of(sym):
        return LinForm(((sym, ONE),), ZERO)

    @staticmethod
    def const(q):
        return LinForm((), Fraction(q))

    def as_dict(self):
        return dict(self.coeffs)

    def symbols(self):
        return [s for s, _ in self.coeffs]

    @property
    def is_constant(self):
        return not self.coeffs

    def __add__(self, other):
        d = self.as_dict()
        for s, c in other.coeffs:
            d[s] = d.get(s, ZERO) + c
        return LinForm.make(d, self.offset + other.offset)

    def __neg__(self):
        return self.scale(Fraction(-1))

    def __sub__(self, other):
        return self + (-other)

    def scale(self, q):
        q = Fraction(q)
        if q == 0:
            return LinForm((), ZERO)
        return LinForm(tuple((s, c * q) for s, c in self.coeffs), self.offset * q)

    def substitute(self, mapping):
        """Replace symbols by terms (Var, Const or LinForm)."""
        acc = LinForm.const(self.offset)
        for s, c in self.coeffs:
            t = mapping.get(s, s)
            if isinstance(t, (Var, Const)):
                t = LinForm.of(t)
            elif not isinstance(t, LinForm):
                t = LinForm.const(t)
            acc = acc + t.scale(c)
        return acc

    def evaluate(self, env):
        val = self.offset
        for s, c in self.coeffs:
            val += c * env[s]
        return val

    def __repr__(self):
        if not self.coeffs:
            return str(self.offset)
        parts = []
        for s, c in self.coeffs:
            if c == 1:
                parts.append(f"+ {s.name}")
            elif c == -1:
                parts.append(f"- {s.name}")
            elif c < 0:
                parts.append(f"- {-c}*{s.name}")
            else:
                parts.append(f"+ {c}*{s.name}")
        if self.offset != 0:
            sign = "+" if self.offset > 0 else "-"
            parts.append(f"{sign} {abs(self.offset)}")
        out = " ".join(parts)
        return out[2:] if out.startswith("+ ") else out


LE, LT, EQ, NE = "<=", "<", "=", "!="
_FLIP = {">=": LE, ">": LT}


@dataclass(frozen=True)
class BgAtom:
    """A normalized background literal: form rel 0 with rel in {<=, <, =, !=}.

    Negation stays inside the relation symbol, so a conjunction of BgAtoms
    can represent any constraint and its literal-level negations.
    """

    form: LinForm
    rel: str

    def key(self):
        return (
            self.rel,
            tuple((s.name, isinstance(s, Var), c) for s, c in self.form.coeffs),
            self.form.offset,
        )

    def negate(self):
        if self.rel == LE:
            return bg_atom(-self.form, LT)
        if self.rel == LT:
            return bg_atom(-self.form, LE)
        if self.rel == EQ:
            return bg_atom(self.form, NE)
        return bg_atom(self.form, EQ)

    def evaluate(self, env):
        v = self.form.evaluate(env)
        if self.rel == LE:
            return v <= 0
        if self.rel == LT:
            return v < 0
        if self.rel == EQ:
            return v == 0
        return v != 0

    def __repr__(self):
        return f"{self.form} {self.rel} 0"


def bg_atom(form, rel):
    """Build a canonical background atom from `form rel 0`.

    >= and > are turned into <= and < by negating the form; the leading
    coefficient is scaled to absolute value one, and equations and
    disequations get a positive leading coefficient.
    """
    if rel in _FLIP:
        form, rel = -form, _FLIP[rel]
    if rel not in (LE, LT, EQ, NE):
        raise ValueError(f"bad relation {rel!r}")
    if form.coeffs:
        lead = form.coeffs[0][1]
        if rel in (EQ, NE):
            form = form.scale(ONE / lead)
        else:
            form = form.scale(ONE / abs(lead))
    else:
        off = form.offset
        if rel in (EQ, NE):
            form = LinForm.const(0 if off == 0 else 1)
        elif off != 0:
            form = LinForm.const(1 if off > 0 else -1)
    return BgAtom(form, rel)


def bg_rel(lhs, rel, rhs):
    """Convenience builder for `lhs rel rhs` with LinForm or symbol sides."""
    if isinstance(lhs, (Var, Const)):
        lhs = LinForm.of(lhs)
    if isinstance(rhs, (Var, Const)):
        rhs = LinForm.of(rhs)
    if not isinstance(lhs, LinForm):
        lhs = LinForm.const(lhs)
    if not isinstance(rhs, LinForm):
        rhs = LinForm.const(rhs)
    return bg_atom(lhs - rhs, rel)


@dataclass(frozen=True)
class FgLit:
    """A foreground literal: possibly negated predicate over flat arguments."""

    pos: bool
    pred: str
    args: tuple = ()

    @property
    def atom(self):
        return FgLit(True, self.pred, self.args)

    def negate(self):
        return FgLit(not self.pos, self.pred, self.args)

    def key(self):
        return (self.pred, tuple((a.name, isinstance(a, Var)) for a in self.args), self.pos)

    def __repr__(self):
        s = self.pred
        if self.args:
            s += "(" + ",".join(a.name for a in self.args) + ")"
        return s if self.pos else "~" + s


def complement(lit):
    return lit.negate()


_fresh_counter = count(1)


def fresh_var(base="z"):
    return Var(f"{base}#{next(_fresh_counter)}")


class Subst:
    """A substitution from variables to variables, constants or linear forms.

    Built idempotent; applying it to foreground argument positions rejects
    bindings to proper linear forms (a sort error in that position).
    """

    def __init__(self, mapping=None):
        self.mapping = {}
        if mapping:
            for v, t in mapping.items():
                if not isinstance(v, Var):
                    raise SortError(f"substitution domain must be variables, got {v!r}")
                if not (isinstance(t, Var) and t == v):
                    self.mapping[v] = t

    def __bool__(self):
        return bool(self.mapping)

    def __eq__(self, other):
        return isinstance(other, Subst) and self.mapping == other.mapping

    def __repr__(self):
        inner = ", ".join(f"{v!r}->{t!r}" for v, t in sorted(self.mapping.items(), key=lambda kv: kv[0].name))
        return "{" + inner + "}"

    def sym(self, t):
        if isinstance(t, Var):
            return self.mapping.get(t, t)
        return t

    def arg(self, t):
        out = self.sym(t)
        if isinstance(out, LinForm):
            raise SortError(f"cannot place arithmetic term {out!r} in a predicate argument")
        return out

    def form(self, f):
        return f.substitute(self.mapping)

    def lit(self, lit):
        if isinstance(lit, FgLit):
            return FgLit(lit.pos, lit.pred, tuple(self.arg(a) for a in lit.args))
        return bg_atom(self.form(lit.form), lit.rel)

    def compose(self, other):
        """self then other: x -> other(self(x))."""
        out = {}
        for v, t in self.mapping.items():
            if isinstance(t, Var):
                t = other.sym(t)
            elif isinstance(t, LinForm):
                t = other.form(t)
            out[v] = t
        for v, t in other.mapping.items():
            if v not in out:
                out[v] = t
        return Subst(out)

    def restrict(self, variables):
        return Subst({v: t for v, t in self.mapping.items() if v in variables})

    def is_grounding(self):
        return all(isinstance(t, Const) for t in self.mapping.values())


def unify(lit1, lit2):
    """Most general unifier of two foreground atoms, or None.

    Polarity is ignored; arguments are flat, so unification just binds
    variables to variables or constants.
    """
    if lit1.pred != lit2.pred or len(lit1.args) != len(lit2.args):
        return None
    binding = {}

    def resolve(t):
        while isinstance(t, Var) and t in binding:
            t = binding[t]
        return t

    for a, b in zip(lit1.args, lit2.args):
        a, b = resolve(a), resolve(b)
        if a == b:
            continue
        if isinstance(a, Var):
            binding[a] = b
        elif isinstance(b, Var):
            binding[b] = a
        else:
            return None
    return Subst({v: resolve(t) for v, t in binding.items()})


def vars_of(obj):
    out = set()
    _walk(obj, out, Var)
    return out


def consts_of(obj):
    """Pool constants plus the rational constants occurring in normalized atoms."""
    out = set()
    _walk(obj, out, Const)
    _walk_rationals(obj, out)
    return out


def _walk(obj, out, cls):
    if isinstance(obj, cls):
        out.add(obj)
    elif isinstance(obj, FgLit):
        for a in obj.args:
            _walk(a, out, cls)
    elif isinstance(obj, BgAtom):
        for s, _ in obj.form.coeffs:
            _walk(s, out, cls)
    elif isinstance(obj, LinForm):
        for s, _ in obj.coeffs:
            _walk(s, out, cls)
    elif isinstance(obj, (tuple, list, set, frozenset)):
        for x in obj:
            _walk(x, out, cls)
    elif hasattr(obj, "constraint") and hasattr(obj, "body"):
        _walk(obj.constraint, out, cls)
        _walk(obj.body, out, cls)


def _walk_rationals(obj, out):
    if isinstance(obj, BgAtom):
        out.add(abs(obj.form.offset))
    elif isinstance(obj, (tuple, list, set, frozenset)):
        for x in obj:
            _walk_rationals(x, out)
    elif hasattr(obj, "constraint") and hasattr(obj, "body"):
        _walk_rationals(obj.constraint, out)
