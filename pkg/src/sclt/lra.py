"""Linear rational arithmetic: satisfiability of conjunctions of ground atoms.

The solver is Fourier-Motzkin elimination over exact rationals.  Equations
are removed first by Gaussian substitution, disequations are split into the
two strict alternatives, and witnesses are produced by back-substitution
(midpoints of open intervals, endpoints of closed ones).

A ConstraintStore keeps a stack of atom groups aligned with the trail and
answers incremental satisfiability queries; recomputation on pop is memoized
by the current atom set.
"""

from __future__ import annotations

from fractions import Fraction

from .terms import BgAtom, Const, LinForm, bg_atom, bg_rel, LE, LT, EQ, NE, _sym_key, ZERO, ONE


class LraError(Exception):
    pass


def _row(form, strict):
    return (dict(form.coeffs), form.offset, strict)


def _sub_row(row, sym, expr):
    """Replace sym by expr (a LinForm) inside an inequality row."""
    coeffs, off, strict = row
    c = coeffs.get(sym)
    if c is None:
        return row
    coeffs = dict(coeffs)
    del coeffs[sym]
    for s, k in expr.coeffs:
        coeffs[s] = coeffs.get(s, ZERO) + c * k
        if coeffs[s] == 0:
            del coeffs[s]
    return (coeffs, off + c * expr.offset, strict)


def _solve_conj(eqs, ineqs, order):
    """SAT check of a conjunction of equations (form = 0) and rows (<= / < 0).

    Returns a witness environment dict or None.
    """
    # Gaussian elimination of equations.
    eliminated = []  # (sym, LinForm expr), applied in order
    eqs = [LinForm(f.coeffs, f.offset) for f in eqs]
    rows = list(ineqs)
    pending = list(eqs)
    while pending:
        f = pending.pop(0)
        if not f.coeffs:
            if f.offset != 0:
                return None
            continue
        sym, c = f.coeffs[0]
        expr = (LinForm(f.coeffs[1:], f.offset)).scale(-ONE / c)
        eliminated.append((sym, expr))
        pending = [g.substitute({sym: expr}) for g in pending]
        rows = [_sub_row(r, sym, expr) for r in rows]

    # Fourier-Motzkin on the remaining inequalities.
    syms = []
    seen = set()
    for s in order:
        if s not in seen:
            seen.add(s)
            syms.append(s)
    for coeffs, _, _ in rows:
        for s in coeffs:
            if s not in seen:
                seen.add(s)
                syms.append(s)

    bound_stack = []  # (sym, rows mentioning sym) in elimination order
    for sym in syms:
        with_s = [r for r in rows if sym in r[0]]
        without = [r for r in rows if sym not in r[0]]
        if with_s:
            bound_stack.append((sym, with_s))
            uppers = [r for r in with_s if r[0][sym] > 0]
            lowers = [r for r in with_s if r[0][sym] < 0]
            for cu, ou, su in ((r[0], r[1], r[2]) for r in uppers):
                for cl, ol, sl in ((r[0], r[1], r[2]) for r in lowers):
                    a, b = cu[sym], cl[sym]
                    merged = {}
                    for s, k in cu.items():
                        if s != sym:
                            merged[s] = k * (-b)
                    for s, k in cl.items():
                        if s != sym:
                            merged[s] = merged.get(s, ZERO) + k * a
                    merged = {s: k for s, k in merged.items() if k != 0}
                    without.append((merged, ou * (-b) + ol * a, su or sl))
        else:
            bound_stack.append((sym, []))
        rows = without

    for coeffs, off, strict in rows:
        if off > 0 or (strict and off == 0):
            return None

    # Back-substitution for a witness.
    env = {}
    for sym, srows in reversed(bound_stack):
        lo = hi = None
        lo_strict = hi_strict = False
        for coeffs, off, strict in srows:
            c = coeffs[sym]
            rest = off
            for s, k in coeffs.items():
                if s != sym:
                    rest += k * env[s]
            bound = -rest / c
            if c > 0:
                if hi is None or bound < hi or (bound == hi and strict):
                    hi, hi_strict = bound, strict
            else:
                if lo is None or bound > lo or (bound == lo and strict):
                    lo, lo_strict = bound, strict
        env[sym] = _pick(lo, lo_strict, hi, hi_strict)
    for sym, expr in reversed(eliminated):
        env[sym] = expr.evaluate(env)
    return env


def _pick(lo, lo_strict, hi, hi_strict):
    if lo is None and hi is None:
        return ZERO
    if lo is None:
        return hi - 1 if hi_strict else hi
    if hi is None:
        return lo + 1 if lo_strict else lo
    if lo == hi:
        if lo_strict or hi_strict:
            raise LraError("empty interval slipped through elimination")
        return lo
    return (lo + hi) / 2


def check_sat(atoms, order=None):
    """Satisfiability of a conjunction of BgAtoms over the rationals.

    Returns a witness dict mapping every occurring symbol to a Fraction, or
    None when unsatisfiable.  `order` fixes the variable elimination order
    (a list of symbols); unconstrained symbols default to zero.
    """
    atoms = list(atoms)
    syms = []
    seen = set()
    for a in atoms:
        for s in a.form.symbols():
            if s not in seen:
                seen.add(s)
                syms.append(s)
    if order is None:
        order = sorted(syms, key=_sym_key)
    eqs = [a.form for a in atoms if a.rel == EQ]
    ineqs = [_row(a.form, a.rel == LT) for a in atoms if a.rel in (LE, LT)]
    nes = [a.form for a in atoms if a.rel == NE]

    def branch(i, extra):
        if i == len(nes):
            return _solve_conj(eqs, ineqs + extra, order)
        f = nes[i]
        env = branch(i + 1, extra + [_row(f, True)])
        if env is not None:
            return env
        return branch(i + 1, extra + [_row(-f, True)])

    env = branch(0, [])
    if env is None:
        return None
    for s in syms:
        env.setdefault(s, ZERO)
    env = {s: env[s] for s in syms}
    for a in atoms:
        if not a.evaluate(env):
            raise LraError(f"witness check failed for {a!r} under {env!r}")
    return env


def adiff(constants, encoding="ordered"):
    """Distinctness constraints for the constant pool.

    "ordered" yields the strict chain b1 < b2 < ... < bn; "distinct" yields
    all pairwise disequations.  Duplicate constants are rejected.
    """
    constants = list(constants)
    if len(set(constants)) != len(constants):
        raise ValueError("constant pool contains duplicates")
    out = []
    if encoding == "ordered":
        for a, b in zip(constants, constants[1:]):
            out.append(bg_rel(a, LT, b))
    elif encoding == "distinct":
        for i, a in enumerate(constants):
            for b in constants[i + 1 :]:
                out.append(bg_rel(a, NE, b))
    else:
        raise ValueError(f"unknown adiff encoding {encoding!r}")
    return out


class ConstraintStore:
    """Stack of background atom groups with memoized satisfiability checks.

    Each group corresponds to one trail entry; pop removes the youngest
    group.  The base atoms (the pool distinctness constraints) are always
    present.
    """

    def __init__(self, base=()):
        self.base = tuple(base)
        self.frames = []
        self._memo = {}
        self._witness = self._check(self._key(()))
        if self._witness is None:
            raise LraError("base constraints are unsatisfiable")

    def _key(self, extra):
        atoms = list(self.base)
        for fr in self.frames:
            atoms.extend(fr)
        atoms.extend(extra)
        return tuple(atoms)

    def _check(self, key):
        memo_key = frozenset(key)
        if memo_key not in self._memo:
            self._memo[memo_key] = check_sat(key)
        return self._memo[memo_key]

    def atoms(self):
        return self._key(())

    @property
    def witness(self):
        return self._witness

    def is_sat_with(self, extra):
        return self._check(self._key(tuple(extra))) is not None

    def push(self, group):
        """Push a group of atoms; returns False (and does not push) if the
        result would be unsatisfiable."""
        group = tuple(group)
        env = self._check(self._key(group))
        if env is None:
            return False
        self.frames.append(group)
        self._witness = env
        return True

    def pop(self):
        self.frames.pop()
        self._witness = self._check(self._key(()))
