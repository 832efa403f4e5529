"""The clause-learning engine.

States follow the six-tuple (trail; N; U; B; level; conflict).  Conflict
search runs Propagate / Decide / Conflict with Conflict at top priority and
a per-level propagation cap for fairness; conflict resolution runs Skip /
Factorize / Resolve / Backtrack on the conflict closure.  Restart and Grow
explore alternative decision prefixes and larger constant pools.

Runs are regular: Conflict is always preferred, Decide is never applied
when some pending propagation would produce a conflict, a decision never
itself falsifies a clause, and every conflict is resolved against at least
the rightmost trail literal before backtracking.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from . import lra
from .clauses import (
    Closure,
    ConstrainedClause,
    clause,
    gnd_all,
    groundings,
    is_pure,
    is_redundant_subset,
    rename_apart,
    subsumes_ground,
)
from .terms import (
    BgAtom,
    Const,
    FgLit,
    Subst,
    Var,
    bg_rel,
    complement,
    consts_of,
    fresh_var,
    unify,
    vars_of,
)
from .trail import FALSE, TRUE, UNDEF, Trail

UNSAT = "Unsatisfiable"
SAT_GROUND = "SatisfiableGround"
UNKNOWN = "Unknown"


@dataclass
class RunConfig:
    max_constants: int = 4
    restart_budget: int = 64
    step_budget: int = 10000
    propagation_cap: int = 1  # propagations per clause per decision level
    accept_stuck: bool = True
    adiff_encoding: str = "distinct"
    use_adiff: bool = True
    check_wf: bool = False
    check_measure: bool = False
    seed: int | None = None
    trace_hook: object = None


@dataclass
class Stats:
    steps: int = 0
    propagations: int = 0
    decisions: int = 0
    conflicts: int = 0
    restarts: int = 0
    grows: int = 0
    learned: list = field(default_factory=list)
    derivations: list = field(default_factory=list)
    measure_violations: list = field(default_factory=list)
    wf_violations: list = field(default_factory=list)
    redundancy_violations: list = field(default_factory=list)


@dataclass
class Model:
    literals: list
    witness: dict
    candidates: dict  # pred -> list of disjuncts; a disjunct is None (true) or a tuple of BgAtoms

    def holds(self, pred, values):
        """Does the symbolic candidate for pred accept the given rationals?"""
        disjuncts = self.candidates.get(pred, [])
        for d in disjuncts:
            if d is None:
                return True
            params = _params(len(values))
            eqs = [bg_rel(p, "=", Fraction(v)) for p, v in zip(params, values)]
            if lra.check_sat(list(d) + eqs) is not None:
                return True
        return False


def _params(n):
    return [Var(f"q{i+1}") for i in range(n)]


@dataclass
class Verdict:
    status: str
    model: Model | None = None
    final_conflict: Closure | None = None
    trail_repr: str = ""
    stats: Stats = field(default_factory=Stats)
    trace: list = field(default_factory=list)


class _TrieNode:
    __slots__ = ("children", "exhausted")

    def __init__(self):
        self.children = {}
        self.exhausted = False


class Engine:
    def __init__(self, clauses_, pool, config=None, initial_learned=()):
        self.cfg = config or RunConfig()
        self.N = list(clauses_)
        self.U = list(initial_learned)
        if not is_pure(self.N) or not is_pure(self.U):
            raise ValueError("input clauses must be pure (no foreground constants)")
        self.B = [Const(c) if isinstance(c, str) else c for c in pool]
        self.stats = Stats()
        self.trace = []
        self._universe_cache = None
        self._last_model = None
        self._last_trail = ""
        self._reset_search()

    # ------------------------------------------------------------------ state

    def _reset_search(self):
        self.trail = Trail(self.B, self.cfg.adiff_encoding, self.cfg.use_adiff)
        self.level = 0
        self.conflict = None
        self._resolved_once = False
        self._derivation = []
        self._prop_used = {}
        self._trie_root = getattr(self, "_trie_root", None) or _TrieNode()
        self._trie_node = self._trie_root

    def _clear_trie(self):
        self._trie_root = _TrieNode()
        self._trie_node = self._trie_root

    def _all_clauses(self):
        return self.N + self.U

    def _universe(self):
        key = (len(self.N), len(self.U), tuple(c.name for c in self.B))
        if self._universe_cache and self._universe_cache[0] == key:
            return self._universe_cache[1]
        fg = set()
        bg = set()
        for c in self._all_clauses():
            for sigma in groundings(c, self.B):
                for lit in c.body:
                    fg.add(sigma.lit(lit).atom)
                for a in c.constraint:
                    bg.add(sigma.lit(a))
        fg_sorted = sorted(fg, key=lambda a: a.key())
        data = (fg_sorted, bg)
        self._universe_cache = (key, data)
        return data

    def termination_measure(self):
        fg, bg = self._universe()
        l = len(fg) + len(bg)
        u = 3**l - len(gnd_all(self.U, self.B))
        m = len(self.trail)
        if self.conflict is None:
            return (u, 1 + l - m, m, 0, 0)
        body = self.conflict.ground_body()
        d = len(body)
        r = 0
        if self.trail.entries:
            target = complement(self.trail.entries[-1].lit)
            r = sum(1 for g in body if g == target)
        return (u, 0, m, r, d)

    # ------------------------------------------------------------- rule search

    def _find_conflict(self):
        for c in self._all_clauses():
            if not c.body and not c.constraint:
                return Closure(c, Subst({}))
            for sigma in groundings(c, self.B):
                ground_body = [sigma.lit(l) for l in c.body]
                if any(self.trail.value_of(g) != FALSE for g in ground_body):
                    continue
                if not self.trail.store.is_sat_with(sigma.lit(a) for a in c.constraint):
                    continue
                fresh_c, ren = rename_apart(c)
                sub = Subst({ren.sym(v): sigma.sym(v) for v in c.variables()})
                return Closure(fresh_c, sub)
        return None

    def _propagation_candidates(self, capped):
        cap = self.cfg.propagation_cap
        for idx, c in enumerate(self._all_clauses()):
            if capped and self._prop_used.get(idx, 0) >= cap:
                continue
            if not c.body:
                continue
            for sigma in groundings(c, self.B):
                ground_body = [sigma.lit(l) for l in c.body]
                target = None
                ok = True
                for g in ground_body:
                    v = self.trail.value_of(g)
                    if v == TRUE:
                        ok = False
                        break
                    if v == UNDEF:
                        if target is None:
                            target = g
                        elif g != target:
                            ok = False
                            break
                if not ok or target is None:
                    continue
                constraint = [sigma.lit(a) for a in c.constraint]
                if not self.trail.store.is_sat_with(constraint):
                    continue
                yield (idx, c, sigma, ground_body, target, constraint)

    def _build_propagation(self, cand):
        """Turn a candidate into (literal, justification closure, bg atoms)."""
        idx, c, sigma, ground_body, target, constraint = cand
        positions = [i for i, g in enumerate(ground_body) if g == target]
        delta = Subst({})
        base = c.body[positions[-1]]
        for i in positions[:-1]:
            eta = unify(delta.lit(c.body[i]), delta.lit(base))
            delta = delta.compose(eta)
        kept = [delta.lit(c.body[i]) for i in range(len(c.body)) if i not in positions[:-1]]
        # move the propagated literal to the last position
        last = delta.lit(base)
        kept.remove(last)
        kept.append(last)
        ann = clause([delta.lit(a) for a in c.constraint], kept)
        fresh_c, ren = rename_apart(ann)
        sub = {}
        for v in c.variables():
            w = delta.sym(v)
            if isinstance(w, Var):
                sub[ren.sym(w)] = sigma.sym(v)
        sub = Subst(sub).restrict(fresh_c.variables())
        return idx, target, Closure(fresh_c, sub), constraint

    def _apply_propagation(self, built):
        idx, target, closure, constraint = built
        ok = self.trail.append(target, self.level, closure, constraint)
        if not ok:
            raise RuntimeError("propagation contradicted the constraint stack")
        self._prop_used[idx] = self._prop_used.get(idx, 0) + 1
        self.stats.propagations += 1
        self._record("Propagate", f"{target!r} from {closure.clause!r}")

    def _generates_conflict(self, built):
        _, target, closure, constraint = built
        if not self.trail.append(target, self.level, closure, constraint):
            return False
        hit = self._find_conflict() is not None
        self.trail.pop()
        return hit

    def _decision_candidates(self):
        fg, _ = self._universe()
        out = []
        for atom in fg:
            if self.trail.is_defined(atom):
                continue
            for lit in (atom, complement(atom)):
                if not self._decision_creates_conflict(lit):
                    out.append(lit)
        return out

    def _decision_creates_conflict(self, lit):
        if not self.trail.append(lit, self.level + 1, None, ()):
            return True
        hit = self._find_conflict() is not None
        self.trail.pop()
        return hit

    def _choose_decision(self, candidates):
        node = self._trie_node
        for lit in candidates:
            child = node.children.get(lit.key())
            if child is None or not child.exhausted:
                return lit
        node.exhausted = True
        return candidates[0]

    def _apply_decision(self, lit):
        node = self._trie_node
        child = node.children.get(lit.key())
        if child is None:
            child = node.children.setdefault(lit.key(), _TrieNode())
        self._trie_node = child
        self.level += 1
        ok = self.trail.append(lit, self.level, None, ())
        assert ok
        self._prop_used = {}
        self.stats.decisions += 1
        self._record("Decide", f"{lit!r}^{self.level}")

    # ------------------------------------------------------------- resolution

    def _enter_conflict(self, closure):
        self.conflict = closure
        self._resolved_once = False
        self._derivation = [("conflict", closure)]
        self.stats.conflicts += 1
        self._record("Conflict", repr(closure))

    def _resolution_step(self):
        body = self.conflict.ground_body()
        if not body:
            gc = self.conflict.ground_constraint()
            if lra.check_sat(gc) is None:
                raise RuntimeError("refutation with unsatisfiable constraint")
            self._record("Final", repr(self.conflict))
            return Verdict(UNSAT, final_conflict=self.conflict,
                           trail_repr=repr(self.trail), stats=self.stats, trace=self.trace)
        if not self.trail.entries:
            raise RuntimeError("conflict literals undefined on an empty trail")
        entry = self.trail.entries[-1]
        comp_g = complement(entry.lit)
        if comp_g not in body:
            self._skip(entry)
            return None
        levels = {}
        for g in set(body):
            lv = self.trail.level_of(g)
            levels[g] = lv if lv is not None else 0
        at_k = {g for g in levels if levels[g] == self.level} if self.level > 0 else set()
        backtrackable = (
            self._resolved_once
            and self.level > 0
            and at_k == {comp_g}
            and all(lv < self.level for g, lv in levels.items() if g != comp_g)
        )
        if entry.is_decision or backtrackable:
            if body.count(comp_g) > 1:
                self._factorize(comp_g)
            else:
                self._backtrack(comp_g, levels)
            return None
        if body.count(comp_g) > 1:
            self._factorize(comp_g)
        else:
            self._resolve(entry, comp_g)
        return None

    def _skip(self, entry):
        self.trail.pop()
        if entry.is_decision:
            self.level -= 1
        self._record("Skip", repr(entry.lit))

    def _factorize(self, target):
        c = self.conflict.clause
        sigma = self.conflict.subst
        positions = [i for i, l in enumerate(c.body) if sigma.lit(l) == target]
        i, j = positions[0], positions[1]
        eta = unify(c.body[i], c.body[j])
        new_body = [eta.lit(l) for k, l in enumerate(c.body) if k != i]
        new_c = clause([eta.lit(a) for a in c.constraint], new_body)
        sub = {}
        for v in c.variables():
            w = eta.sym(v)
            if isinstance(w, Var):
                sub[w] = sigma.sym(v)
        prev = self.conflict
        self.conflict = Closure(new_c, Subst(sub).restrict(new_c.variables()))
        self._derivation.append(("factorize", prev, self.conflict))
        self._record("Factorize", repr(self.conflict))

    def _resolve(self, entry, comp_g):
        c = self.conflict.clause
        sigma = self.conflict.subst
        pos = next(i for i, l in enumerate(c.body) if sigma.lit(l) == comp_g)
        jc, ren = rename_apart(entry.justification.clause)
        jsub = Subst({ren.sym(v): entry.justification.subst.sym(v)
                      for v in entry.justification.clause.variables()})
        prop_lit = jc.body[-1]  # builders keep the propagated literal last
        eta = unify(c.body[pos], prop_lit)
        assert eta is not None
        merged = dict(sigma.mapping)
        merged.update(jsub.mapping)
        grounding = Subst(merged)
        new_body = [eta.lit(l) for i, l in enumerate(c.body) if i != pos]
        new_body += [eta.lit(l) for l in jc.body[:-1]]
        new_constraint = [eta.lit(a) for a in c.constraint] + [eta.lit(a) for a in jc.constraint]
        new_c = clause(new_constraint, new_body)
        sub = {}
        for v in list(c.variables()) + list(jc.variables()):
            w = eta.sym(v)
            if isinstance(w, Var):
                sub[w] = grounding.sym(v)
        prev = self.conflict
        self.conflict = Closure(new_c, Subst(sub).restrict(new_c.variables()))
        self._resolved_once = True
        self._derivation.append(("resolve", prev, Closure(jc, jsub), self.conflict))
        self._record("Resolve", repr(self.conflict))

    def _backtrack(self, target, levels):
        c = self.conflict.clause
        sigma = self.conflict.subst
        pos = next(i for i, l in enumerate(c.body) if sigma.lit(l) == target)
        rest_levels = [lv for g, lv in levels.items() if g != target]
        i = max(rest_levels, default=0)
        if i >= self.level:
            raise RuntimeError("irregular conflict: no backjump level below the current one")
        body = [l for k, l in enumerate(c.body) if k != pos] + [c.body[pos]]
        learned = clause(c.constraint, body)
        ground_learned = learned.apply(sigma)

        while self.trail.entries and self.trail.decision_count > i:
            self.trail.pop()
        self.level = i

        order = self.trail.induced_order()
        existing = gnd_all(self._all_clauses(), self.B)
        if is_redundant_subset(ground_learned, existing, order):
            self.stats.redundancy_violations.append(repr(ground_learned))

        self.U.append(learned)
        self._universe_cache = None
        self.stats.learned.append(learned)
        self.stats.derivations.append((learned, list(self._derivation)))
        closure = Closure(learned, sigma.restrict(learned.variables()))
        lit = sigma.lit(c.body[pos])
        constraint = [sigma.lit(a) for a in c.constraint]
        ok = self.trail.append(lit, self.level, closure, constraint)
        if not ok:
            raise RuntimeError("backtrack propagation contradicted the stack")
        self.conflict = None
        self._derivation = []
        self._prop_used = {}
        self._clear_trie()
        self._record("Backtrack", f"learned {learned!r}; jump to level {i}")

    # ------------------------------------------------------------------- runs

    def is_stuck(self):
        if self.conflict is not None:
            return False
        if self._find_conflict() is not None:
            return False
        for _ in self._propagation_candidates(capped=False):
            return False
        fg, _ = self._universe()
        return all(self.trail.is_defined(a) for a in fg)

    def extract_model(self):
        witness = dict(self.trail.store.witness or {})
        for b in self.B:
            witness.setdefault(b, Fraction(0))
        candidates = {}
        fg, _ = self._universe()
        for atom in fg:
            candidates.setdefault(atom.pred, [])
        for entry in self.trail.entries:
            if not entry.lit.pos:
                continue
            pred = entry.lit.pred
            if entry.is_decision:
                candidates.setdefault(pred, []).append(None)
                continue
            params = _params(len(entry.lit.args))
            mapping = {}
            for cst, p in zip(entry.lit.args, params):
                mapping.setdefault(cst, p)
            disjunct = []
            for a in entry.justification.ground_constraint():
                for s in a.form.symbols():
                    if isinstance(s, Const):
                        mapping.setdefault(s, fresh_var("w"))
                form = a.form.substitute(mapping)
                disjunct.append(BgAtom(form, a.rel))
            candidates.setdefault(pred, []).append(tuple(disjunct))
        literals = [e.lit for e in self.trail.entries]
        return Model(literals, {c: witness[c] for c in self.B}, candidates)

    def _record(self, rule, payload):
        self.stats.steps += 1
        entry = (rule, payload, self.termination_measure() if self.cfg.check_measure else None)
        self.trace.append(entry)
        if self.cfg.trace_hook:
            self.cfg.trace_hook(rule, payload)

    def _post_step_checks(self, prev_measure, rule):
        if self.cfg.check_measure and rule not in ("Restart", "Grow", "Final", "Stuck"):
            cur = self.termination_measure()
            if prev_measure is not None and not (cur < prev_measure):
                self.stats.measure_violations.append((rule, prev_measure, cur))
        if self.cfg.check_wf:
            for v in self.check_wellformed():
                self.stats.wf_violations.append((rule, v))

    def run(self):
        while self.stats.steps < self.cfg.step_budget:
            prev = self.termination_measure() if self.cfg.check_measure else None
            verdict = self._step()
            rule = self.trace[-1][0] if self.trace else ""
            self._post_step_checks(prev, rule)
            if verdict is not None:
                return verdict
        return Verdict(UNKNOWN, trail_repr=repr(self.trail), stats=self.stats, trace=self.trace)

    def _step(self):
        if self.conflict is not None:
            return self._resolution_step()
        cc = self._find_conflict()
        if cc is not None:
            self._enter_conflict(cc)
            return None
        for cand in self._propagation_candidates(capped=True):
            self._apply_propagation(self._build_propagation(cand))
            return None
        # fairness cap reached: a decision is only regular if no pending
        # propagation would produce a conflict
        for cand in self._propagation_candidates(capped=False):
            built = self._build_propagation(cand)
            if self._generates_conflict(built):
                self._apply_propagation(built)
                return None
        candidates = self._decision_candidates()
        if candidates:
            self._apply_decision(self._choose_decision(candidates))
            return None
        for cand in self._propagation_candidates(capped=False):
            self._apply_propagation(self._build_propagation(cand))
            return None
        return self._handle_stuck()

    def _handle_stuck(self):
        assert self.is_stuck()
        for c in gnd_all(self._all_clauses(), self.B):
            if self.trail.eval_clause(c) != TRUE:
                self.stats.wf_violations.append(("stuck", f"clause not satisfied: {c!r}"))
        model = self.extract_model()
        if self.cfg.accept_stuck:
            self._record("Stuck", repr(self.trail))
            return Verdict(SAT_GROUND, model=model, trail_repr=repr(self.trail),
                           stats=self.stats, trace=self.trace)
        self._trie_node.exhausted = True
        self._last_model = model
        self._last_trail = repr(self.trail)
        if self._trie_root.exhausted:
            if len(self.B) < self.cfg.max_constants:
                return self._grow()
            self._record("Stuck", repr(self.trail))
            return Verdict(SAT_GROUND, model=model, trail_repr=self._last_trail,
                           stats=self.stats, trace=self.trace)
        if self.stats.restarts >= self.cfg.restart_budget:
            if len(self.B) < self.cfg.max_constants:
                return self._grow()
            return Verdict(UNKNOWN, model=model, trail_repr=self._last_trail,
                           stats=self.stats, trace=self.trace)
        self.stats.restarts += 1
        self._record("Restart", "")
        self._reset_search()
        return None

    def _grow(self):
        used = {c.name for c in self.B}
        n = 1
        while f"_c{n}" in used:
            n += 1
        self.B.append(Const(f"_c{n}"))
        self.stats.grows += 1
        self._universe_cache = None
        self._clear_trie()
        self._record("Grow", f"pool now {[c.name for c in self.B]}")
        self._reset_search()
        return None

    # ---------------------------------------------------------- wellformedness

    def check_wellformed(self):
        """Items checked: constants confined to the pool and inputs, stack
        satisfiability, conflict and propagation closures genuinely false or
        propagating, and purity of N and U."""
        out = []
        allowed = {c for c in self.B}
        for c in self.N:
            allowed |= {s for s in consts_of(c) if isinstance(s, Const)}
        state_consts = set()
        for c in self.U:
            state_consts |= {s for s in consts_of(c) if isinstance(s, Const)}
        for e in self.trail.entries:
            state_consts |= {a for a in e.lit.args if isinstance(a, Const)}
            for a in e.bg:
                state_consts |= {s for s in a.form.symbols() if isinstance(s, Const)}
        if not state_consts <= allowed:
            out.append(f"item1: foreign constants {state_consts - allowed}")
        if lra.check_sat(self.trail.store.atoms()) is None:
            out.append("item2: trail constraints unsatisfiable")
        if self.conflict is not None and self.conflict.clause.body:
            for g in self.conflict.ground_body():
                if self.trail.value_of(g) != FALSE:
                    out.append(f"item4a: conflict literal {g!r} not false")
            if not self.trail.store.is_sat_with(self.conflict.ground_constraint()):
                out.append("item4a: conflict constraint inconsistent with trail")
        prefix_atoms = list(self.trail.store.base)
        prefix_vals = {}
        for e in self.trail.entries:
            if not e.is_decision:
                gb = e.justification.ground_body()
                if gb[-1] != e.lit:
                    out.append(f"item4b: annotation of {e.lit!r} has wrong propagated literal")
                for g in gb[:-1]:
                    if prefix_vals.get(g.atom) != complement(g):
                        out.append(f"item4b: {g!r} not false before {e.lit!r}")
                if e.lit.atom in prefix_vals:
                    out.append(f"item4b: {e.lit!r} already defined at its propagation")
                gc = list(e.justification.ground_constraint())
                if lra.check_sat(prefix_atoms + gc) is None:
                    out.append(f"item4b: constraint of {e.lit!r} inconsistent with prefix")
            prefix_vals[e.lit.atom] = e.lit
            prefix_atoms.extend(e.bg)
        if not is_pure(self.N) or not is_pure(self.U):
            out.append("item5: impure clause in N or U")
        return out


def run_regular(clauses_, pool, config=None, initial_learned=()):
    eng = Engine(clauses_, pool, config, initial_learned)
    return eng.run()
