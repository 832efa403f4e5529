"""Constrained clauses, closures, grounding, abstraction and redundancy.

A constrained clause is `constraint || body`: a conjunction of background
atoms guarding a disjunction of foreground literals.  The body is a
multiset, so duplicate literals are kept; the constraint is deduplicated
and sorted, since a conjunction is read as a set.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

from . import lra
from .terms import (
    BgAtom,
    Const,
    FgLit,
    LinForm,
    Subst,
    Var,
    bg_rel,
    complement,
    fresh_var,
    unify,
    vars_of,
    EQ,
)


@dataclass(frozen=True)
class ConstrainedClause:
    constraint: tuple = ()
    body: tuple = ()

    def __repr__(self):
        left = " , ".join(repr(a) for a in self.constraint) if self.constraint else "true"
        right = " | ".join(repr(l) for l in self.body) if self.body else "false"
        return f"{left} || {right}"

    @property
    def is_empty(self):
        return not self.body

    def variables(self):
        return vars_of(self.constraint) | vars_of(self.body)

    def apply(self, sub):
        return clause(
            [sub.lit(a) for a in self.constraint],
            [sub.lit(l) for l in self.body],
        )


def clause(constraint, body):
    """Canonicalizing constructor: dedup and sort the constraint part."""
    cset = {a.key(): a for a in constraint}
    return ConstrainedClause(
        tuple(cset[k] for k in sorted(cset)),
        tuple(body),
    )


@dataclass(frozen=True)
class Closure:
    """A clause paired with a grounding substitution over the pool."""

    clause: ConstrainedClause
    subst: Subst

    def ground(self):
        return self.clause.apply(self.subst)

    def ground_body(self):
        return tuple(self.subst.lit(l) for l in self.clause.body)

    def ground_constraint(self):
        return tuple(self.subst.lit(a) for a in self.clause.constraint)

    def __repr__(self):
        return f"({self.clause!r}) . {self.subst!r}"


def rename_apart(c, base="r"):
    """A variable-fresh copy of the clause plus the renaming used."""
    ren = Subst({v: fresh_var(v.name.split("#")[0]) for v in c.variables()})
    return c.apply(ren), ren


def abstract_clause(c):
    """Lift non-variable foreground arguments into the constraint.

    Every argument that is a linear form (a number or arithmetic term at the
    parser level) is replaced by a fresh variable z with a defining equation
    z = t.  Already-abstracted clauses come back unchanged.
    """
    extra = []
    new_body = []
    for lit in c.body:
        args = []
        for a in lit.args:
            if isinstance(a, Var):
                args.append(a)
            elif isinstance(a, Const):
                args.append(a)
            else:
                if isinstance(a, Fraction) or isinstance(a, int):
                    a = LinForm.const(a)
                z = fresh_var("z")
                extra.append(bg_rel(z, EQ, a))
                args.append(z)
        new_body.append(FgLit(lit.pos, lit.pred, tuple(args)))
    if not extra:
        return c
    return clause(list(c.constraint) + extra, new_body)


def is_pure(clauses_):
    """Pure clauses contain no foreground constants (only variables)."""
    for c in clauses_:
        for lit in c.body:
            if any(isinstance(a, Const) for a in lit.args):
                return False
        for a in c.constraint:
            if any(isinstance(s, Const) for s in a.form.symbols()):
                return False
    return True


def groundings(c, pool):
    """All grounding substitutions of the clause over the pool, sorted."""
    vs = sorted(c.variables(), key=lambda v: v.name)
    if not vs:
        return [Subst({})]
    return [Subst(dict(zip(vs, combo))) for combo in product(pool, repeat=len(vs))]


def gnd(c, pool):
    """The set of ground instances of a clause over the pool."""
    return {c.apply(s) for s in groundings(c, pool)}


def gnd_all(clauses_, pool):
    out = set()
    for c in clauses_:
        out |= gnd(c, pool)
    return out


def subsumes_ground(c1, c2):
    """Ground subsumption: constraint containment as sets, body as multisets."""
    if not set(c1.constraint) <= set(c2.constraint):
        return False
    need = Counter(c1.body)
    have = Counter(c2.body)
    return all(have[l] >= n for l, n in need.items())


def is_semantic_tautology(c):
    """Unsatisfiable constraint, or complementary foreground literals."""
    lits = set(c.body)
    if any(complement(l) in lits for l in lits):
        return True
    return lra.check_sat(c.constraint) is None


class HOrder:
    """The literal order induced by a trail.

    Background literals come first, then foreground literals by trail
    position of their atom, then literals whose atom is undefined; ties are
    broken syntactically so the order is total on ground literals.  Clauses
    compare by the multiset extension over all their literals.
    """

    def __init__(self, positions=None):
        self.positions = dict(positions or {})

    def lit_rank(self, lit):
        if isinstance(lit, BgAtom):
            return (0, 0, lit.key())
        pos = self.positions.get(lit.atom)
        if pos is not None:
            return (1, pos, lit.key())
        return (2, 0, lit.key())

    def clause_multiset(self, c):
        return Counter(self.lit_rank(l) for l in tuple(c.constraint) + tuple(c.body))

    def le(self, c1, c2):
        """Multiset-extension comparison c1 <= c2."""
        m1, m2 = self.clause_multiset(c1), self.clause_multiset(c2)
        if m1 == m2:
            return True
        keys = set(m1) | set(m2)
        for x in keys:
            if m1.get(x, 0) > m2.get(x, 0):
                if not any(y > x and m2.get(y, 0) > m1.get(y, 0) for y in keys):
                    return False
        return True


def is_redundant_subset(c, ground_set, order):
    """Ground clause c is redundant w.r.t. a set of ground clauses.

    Either a semantic tautology, or subsumed by a smaller-or-equal clause
    under the given trail-induced order.
    """
    if is_semantic_tautology(c):
        return True
    for d in ground_set:
        if d != c and subsumes_ground(d, c) and order.le(d, c):
            return True
    return False


def alpha_equal(c1, c2):
    """Equality of clauses up to variable renaming (brute-force bijection
    search; clause variable counts are small)."""
    v1 = sorted(c1.variables(), key=lambda v: v.name)
    v2 = sorted(c2.variables(), key=lambda v: v.name)
    if len(v1) != len(v2) or len(c1.body) != len(c2.body):
        return False
    from itertools import permutations

    target = clause(c2.constraint, c2.body)
    for perm in permutations(v2):
        sub = Subst(dict(zip(v1, perm)))
        if c1.apply(sub) == target:
            return True
    return False
