"""Random problem and constraint generators for differential testing."""

from __future__ import annotations

import random
from fractions import Fraction

from .clauses import clause
from .terms import FgLit, LinForm, Var, bg_atom


def random_lin_atom(rng, symbols, max_terms=3, coeff_range=5):
    """A random linear atom over the given symbols."""
    n = rng.randint(1, min(max_terms, len(symbols)))
    chosen = rng.sample(symbols, n)
    coeffs = {}
    for s in chosen:
        c = 0
        while c == 0:
            c = rng.randint(-coeff_range, coeff_range)
        coeffs[s] = Fraction(c)
    offset = Fraction(rng.randint(-coeff_range, coeff_range))
    rel = rng.choice(["<=", "<", "=", "!=", ">=", ">"])
    return bg_atom(LinForm.make(coeffs, offset), rel)


def random_conjunction(rng, symbols, max_atoms=8):
    return [random_lin_atom(rng, symbols) for _ in range(rng.randint(1, max_atoms))]


def random_problem(rng, max_clauses=4, max_vars=3, preds=("P", "Q"), max_arity=2,
                   max_body=3, constraint_chance=0.7):
    """A random pure, abstracted clause set.

    Constraints are simple relations between variables and small rationals,
    so conflicts and propagations both show up often.
    """
    arities = {p: rng.randint(0, max_arity) for p in preds}
    variables = [Var(f"x{i}") for i in range(1, max_vars + 1)]
    out = []
    for _ in range(rng.randint(1, max_clauses)):
        used = rng.sample(variables, rng.randint(1, max_vars))
        body = []
        for _ in range(rng.randint(0, max_body)):
            p = rng.choice(list(preds))
            args = tuple(rng.choice(used) for _ in range(arities[p]))
            body.append(FgLit(rng.random() < 0.5, p, args))
        constraint = []
        while rng.random() < constraint_chance and len(constraint) < 2:
            constraint.append(_simple_atom(rng, used))
        if not body and not constraint:
            body.append(FgLit(True, preds[0], tuple(used[0] for _ in range(arities[preds[0]]))))
        out.append(clause(constraint, body))
    return out


def _simple_atom(rng, variables):
    v = rng.choice(variables)
    q = Fraction(rng.randint(-2, 3))
    rel = rng.choice(["<=", "<", "=", "!=", ">=", ">"])
    if len(variables) > 1 and rng.random() < 0.4:
        w = rng.choice([x for x in variables if x != v])
        return bg_atom(LinForm.of(v) - LinForm.of(w) - LinForm.const(q), rel)
    return bg_atom(LinForm.of(v) - LinForm.const(q), rel)


def random_monadic_problem(rng, max_clauses=2, max_vars=2, preds=("P", "Q"), max_body=2):
    """Small monadic problems for exhaustive saturation checks."""
    return random_problem(rng, max_clauses=max_clauses, max_vars=max_vars,
                          preds=preds, max_arity=1, max_body=max_body)
