"""Independent verification oracles.

Three families: hierarchic resolution saturation on the non-ground level, a
Herbrand-style brute-force ground satisfiability check over a fixed pool,
and exhaustive saturation detection by exploring every regular trail prefix.
These share no search code with the engine and are used to cross-check its
verdicts and its learned clauses.
"""

from __future__ import annotations

from itertools import product

from . import lra
from .clauses import (
    ConstrainedClause,
    alpha_equal,
    clause,
    gnd_all,
    groundings,
    is_semantic_tautology,
    rename_apart,
)
from .terms import Subst, Var, complement, unify, vars_of

SAT_OVER_B = "SatisfiableOverB"
UNSAT_OVER_B = "UnsatisfiableOverB"


class OracleBudgetError(Exception):
    pass


# --------------------------------------------------------------- hierarchic resolution

def hres_resolve(c1, c2):
    """All binary resolvents of two constrained clauses (renamed apart)."""
    c1, _ = rename_apart(c1)
    c2, _ = rename_apart(c2)
    out = []
    for i, l1 in enumerate(c1.body):
        for j, l2 in enumerate(c2.body):
            if l1.pos == l2.pos:
                continue
            eta = unify(l1, l2)
            if eta is None:
                continue
            body = [eta.lit(l) for k, l in enumerate(c1.body) if k != i]
            body += [eta.lit(l) for k, l in enumerate(c2.body) if k != j]
            constraint = [eta.lit(a) for a in c1.constraint] + [eta.lit(a) for a in c2.constraint]
            out.append(clause(constraint, body))
    return out


def hres_factor(c):
    """All binary factors of a constrained clause."""
    out = []
    for i, l1 in enumerate(c.body):
        for j in range(i + 1, len(c.body)):
            l2 = c.body[j]
            if l1.pos != l2.pos:
                continue
            eta = unify(l1, l2)
            if eta is None:
                continue
            body = [eta.lit(l) for k, l in enumerate(c.body) if k != i]
            out.append(clause([eta.lit(a) for a in c.constraint], body))
    return out


def _subsumes(c1, c2):
    """Conservative non-ground subsumption: a body match that maps c1 into
    c2 with the constraint contained setwise.  Variables occurring only in
    the constraint are not matched, so this under-approximates."""
    if len(c1.body) > len(c2.body):
        return False

    c2_constraint = set(c2.constraint)

    def extend(i, used, binding):
        if i == len(c1.body):
            sub = Subst(dict(binding))
            for a in c1.constraint:
                if vars_of(a) - set(binding):
                    return False
                if sub.lit(a) not in c2_constraint:
                    return False
            return True
        l1 = c1.body[i]
        for j, l2 in enumerate(c2.body):
            if j in used or l1.pos != l2.pos or l1.pred != l2.pred:
                continue
            new_binding = dict(binding)
            ok = True
            for a, b in zip(l1.args, l2.args):
                if isinstance(a, Var):
                    if new_binding.get(a, b) != b:
                        ok = False
                        break
                    new_binding[a] = b
                elif a != b:
                    ok = False
                    break
            if ok and extend(i + 1, used | {j}, new_binding):
                return True
        return False

    return extend(0, frozenset(), {})


def hres_saturate(clauses_, limit=2000):
    """Saturate under hierarchic resolution and factoring.

    Returns ("Unsatisfiable", empty clause), ("Saturated", worked set) or
    ("Unknown", worked set) when the inference limit runs out.  Tautologies
    are deleted and forward subsumption keeps the set small.
    """
    worked = []
    queue = [c for c in clauses_]
    inferences = 0
    while queue:
        c = queue.pop(0)
        if is_semantic_tautology(c):
            continue
        if any(_subsumes(w, c) for w in worked):
            continue
        if not c.body and lra.check_sat(c.constraint) is not None:
            return ("Unsatisfiable", c)
        for other in list(worked):
            for r in hres_resolve(c, other) + (hres_resolve(other, c) if other is not c else []):
                inferences += 1
                queue.append(r)
                if inferences > limit:
                    return ("Unknown", worked)
        for r in hres_resolve(c, c) + hres_factor(c):
            inferences += 1
            queue.append(r)
            if inferences > limit:
                return ("Unknown", worked)
        worked.append(c)
    return ("Saturated", worked)


# ------------------------------------------------------------------- ground oracle

class _SatCache:
    """Memoized conjunction satisfiability, shared across many queries."""

    def __init__(self):
        self.memo = {}

    def sat(self, atoms):
        key = frozenset(atoms)
        if key not in self.memo:
            self.memo[key] = lra.check_sat(key) is not None
        return self.memo[key]


def ground_unsat_check(clauses_, pool, encoding="distinct", max_atoms=20, work_limit=500000):
    """Brute-force satisfiability of the ground instances over the pool.

    Enumerates truth assignments of the ground foreground atoms.  A literal
    made true may optionally carry the constraint of a clause that could
    have propagated it (all other body literals false), mirroring how trail
    constraints block conflicts.  An assignment survives when some such
    support selection is consistent and every falsified clause instance has
    a constraint inconsistent with it.

    Returns ("SatisfiableOverB", witness) or ("UnsatisfiableOverB", None).
    Refuses problems with more than max_atoms ground atoms.
    """
    pool = list(pool)
    ground = sorted(gnd_all(clauses_, pool), key=repr)
    atoms = sorted({l.atom for c in ground for l in c.body}, key=lambda a: a.key())
    if len(atoms) > max_atoms:
        raise OracleBudgetError(f"{len(atoms)} ground atoms exceed the oracle limit {max_atoms}")
    index = {a: i for i, a in enumerate(atoms)}
    base = tuple(lra.adiff(pool, encoding))
    instances = []
    for c in ground:
        distinct = []
        seen = set()
        for l in c.body:
            if l not in seen:
                seen.add(l)
                distinct.append((index[l.atom], l.pos))
        instances.append((distinct, tuple(c.constraint)))
    cache = _SatCache()
    searches = {}
    work = [0]

    for bits in range(1 << len(atoms)):
        violated = set()
        supports = set()
        for distinct, constraint in instances:
            true_count = 0
            for i, pos in distinct:
                if bool(bits >> i & 1) == pos:
                    true_count += 1
                    if true_count > 1:
                        break
            if true_count == 0:
                violated.add(constraint)
            elif true_count == 1 and constraint:
                supports.add(constraint)
        key = (frozenset(violated), frozenset(supports))
        if key not in searches:
            searches[key] = _support_search(
                base, sorted(violated, key=repr), sorted(supports, key=repr),
                cache, work, work_limit)
        if searches[key] is not None:
            assign = {a: bool(bits >> i & 1) for a, i in index.items()}
            return (SAT_OVER_B, {"assignment": assign, "constraints": searches[key]})
    return (UNSAT_OVER_B, None)


def _support_search(base, violated, supports, cache, work, work_limit):
    """Find a consistent set of support constraints blocking every violated
    constraint, or None.  Adding constraints is monotone, so depth-first
    search over support subsets (in canonical order) is complete."""

    def solve(current, start):
        work[0] += 1
        if work[0] > work_limit:
            raise OracleBudgetError("ground oracle work limit exceeded")
        if not cache.sat(base + current):
            return None
        if all(not cache.sat(base + current + v) for v in violated):
            return current
        for idx in range(start, len(supports)):
            s = supports[idx]
            if set(s) <= set(current):
                continue
            res = solve(current + tuple(a for a in s if a not in current), idx + 1)
            if res is not None:
                return res
        return None

    return solve((), 0)


def ground_sat_plain(ground_clauses, asserted=()):
    """Plain hierarchic ground satisfiability: one assignment of the ground
    atoms plus one rational valuation; each falsified clause instance must
    have its constraint false under the valuation.  Used to replay learned
    clause derivations step by step.  Returns a witness pair or None."""
    ground = list(ground_clauses)
    atoms = sorted({l.atom for c in ground for l in c.body}, key=lambda a: a.key())
    asserted = tuple(asserted)
    for bits in product((True, False), repeat=len(atoms)):
        assign = dict(zip(atoms, bits))
        violated = [c.constraint for c in ground
                    if all(assign[l.atom] != l.pos for l in c.body)]

        def branch(i, acc):
            if i == len(violated):
                return lra.check_sat(acc)
            for a in violated[i]:
                env = branch(i + 1, acc + (a.negate(),))
                if env is not None:
                    return env
            return None

        env = branch(0, asserted)
        if env is not None:
            return (assign, env)
    return None


def check_derivation_steps(derivation):
    """Soundness replay of one conflict resolution derivation.

    Every resolve and factorize step must have its ground conclusion
    entailed by its ground premises; this is a propositional fact, checked
    with the plain ground oracle.  Returns a list of violation strings.
    """
    out = []
    for step in derivation:
        kind = step[0]
        if kind == "conflict":
            continue
        if kind == "resolve":
            _, prev, just, result = step
            premises = [prev.ground(), just.ground()]
        else:
            _, prev, result = step
            premises = [prev.ground()]
        rg = result.ground()
        negation = [clause((), (complement(l),)) for l in rg.body]
        witness = ground_sat_plain(premises + negation, asserted=rg.constraint)
        if witness is not None:
            out.append(f"{kind} step not sound: {result!r}")
    return out


# --------------------------------------------------------------- saturation detection

def check_saturated(clauses_n, clauses_u, pool, encoding="distinct", state_limit=200000):
    """Is N union U saturated over the pool?

    Explores every regular trail prefix over the pool (no Grow, no
    learning): propagations and guarded decisions, conflicts checked first,
    memoized on the set of trail literals plus accumulated constraints.
    Requires the pool to hold at least twice the maximal number of
    variables per clause.

    Returns ("Saturated", None) or ("NotSaturated", witness string).
    """
    all_clauses = list(clauses_n) + list(clauses_u)
    pool = list(pool)
    maxvars = max((len(c.variables()) for c in all_clauses), default=0)
    if len(pool) < 2 * maxvars:
        raise ValueError(
            f"pool of {len(pool)} constants is below the bound {2 * maxvars} "
            "required for saturation detection")
    base = tuple(lra.adiff(pool, encoding))
    instances = []
    for c in all_clauses:
        for sigma in groundings(c, pool):
            instances.append((tuple(sigma.lit(l) for l in c.body),
                              tuple(sigma.lit(a) for a in c.constraint)))
    atoms = sorted({l.atom for body, _ in instances for l in body}, key=lambda a: a.key())
    visited = set()
    counter = [0]

    def conflict_at(lits, bg):
        for body, constraint in instances:
            if all(complement(l) in lits for l in body):
                if lra.check_sat(base + bg + constraint) is not None:
                    return f"conflict on {constraint} || {body}"
        return None

    def explore(lits, bg):
        counter[0] += 1
        if counter[0] > state_limit:
            raise OracleBudgetError("saturation search state limit exceeded")
        key = (lits, frozenset(bg))
        if key in visited:
            return None
        visited.add(key)
        hit = conflict_at(lits, bg)
        if hit:
            return hit
        # propagations
        for body, constraint in instances:
            undef = None
            ok = True
            for l in set(body):
                if l in lits:
                    ok = False
                    break
                if complement(l) not in lits:
                    if undef is None:
                        undef = l
                    elif l != undef:
                        ok = False
                        break
            if not ok or undef is None:
                continue
            if lra.check_sat(base + bg + constraint) is None:
                continue
            new_bg = bg + tuple(a for a in constraint if a not in bg)
            hit = explore(lits | {undef}, new_bg)
            if hit:
                return hit
        # decisions: any undefined atom, either polarity, not itself a conflict
        for atom in atoms:
            if atom in lits or complement(atom) in lits:
                continue
            for lit in (atom, complement(atom)):
                new_lits = lits | {lit}
                if conflict_at(new_lits, bg):
                    continue
                hit = explore(new_lits, bg)
                if hit:
                    return hit
        return None

    witness = explore(frozenset(), ())
    if witness:
        return ("NotSaturated", witness)
    return ("Saturated", None)
