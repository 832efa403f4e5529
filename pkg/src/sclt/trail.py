"""The trail: annotated ground literals plus an aligned constraint stack.

Each entry carries one foreground literal (a decision or a propagation with
its justification closure) together with the background atoms it introduced.
Grouping the background atoms with the foreground literal keeps the
constraint stack aligned with trail surgery: popping an entry pops its
atoms.  The trail literal sequence still interleaves both kinds.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import lra
from .clauses import Closure, HOrder
from .terms import BgAtom, FgLit, complement

TRUE, FALSE, UNDEF = "true", "false", "undef"


@dataclass
class TrailEntry:
    lit: FgLit
    level: int
    justification: Closure | None  # None marks a decision
    bg: tuple = ()

    @property
    def is_decision(self):
        return self.justification is None

    def __repr__(self):
        tag = f"^{self.level}" if self.is_decision else f"^[{self.justification.clause!r}]"
        parts = [f"{self.lit!r}{tag}"] + [repr(a) for a in self.bg]
        return ", ".join(parts)


class Trail:
    def __init__(self, pool, encoding="ordered", use_adiff=True):
        self.pool = list(pool)
        self.encoding = encoding
        self.use_adiff = use_adiff
        base = lra.adiff(self.pool, encoding) if use_adiff else ()
        self.store = lra.ConstraintStore(base)
        self.entries = []
        self._index = {}  # fg atom -> entry position
        self._bg_index = {}  # bg atom key -> True

    def __len__(self):
        """Number of literals on the trail, foreground and background."""
        return len(self.entries) + sum(len(e.bg) for e in self.entries)

    def __repr__(self):
        return "[" + "; ".join(repr(e) for e in self.entries) + "]"

    @property
    def decision_count(self):
        return sum(1 for e in self.entries if e.is_decision)

    def fgd(self):
        return [e.lit for e in self.entries]

    def bgd(self):
        out = []
        for e in self.entries:
            out.extend(e.bg)
        return out

    def value_of(self, lit):
        pos = self._index.get(lit.atom)
        if pos is None:
            return UNDEF
        return TRUE if self.entries[pos].lit == lit else FALSE

    def is_defined(self, lit):
        if isinstance(lit, BgAtom):
            return lit.key() in self._bg_index or lit.negate().key() in self._bg_index
        return lit.atom in self._index

    def level_of(self, lit):
        pos = self._index.get(lit.atom)
        if pos is None:
            return None
        return self.entries[pos].level

    def position_of(self, lit):
        return self._index.get(lit.atom)

    def missing_bg(self, atoms):
        """The subset of atoms not yet occurring on the trail, input order."""
        out = []
        seen = set()
        for a in atoms:
            k = a.key()
            if k not in self._bg_index and k not in seen:
                seen.add(k)
                out.append(a)
        return out

    def append(self, lit, level, justification, bg_atoms):
        """Push one entry; returns False without side effects when the new
        background atoms contradict the stack."""
        group = tuple(self.missing_bg(bg_atoms))
        if not self.store.push(group):
            return False
        self.entries.append(TrailEntry(lit, level, justification, group))
        self._index[lit.atom] = len(self.entries) - 1
        for a in group:
            self._bg_index[a.key()] = True
        return True

    def pop(self):
        e = self.entries.pop()
        del self._index[e.lit.atom]
        for a in e.bg:
            del self._bg_index[a.key()]
        self.store.pop()
        return e

    def eval_clause(self, c):
        """Truth value of a ground clause against the trail.

        True when some body literal is on the trail or the constraint is
        contradicted by the stack; false when every body literal's
        complement is on the trail and the constraint is consistent with the
        stack; undefined otherwise.
        """
        if not self.store.is_sat_with(c.constraint):
            return TRUE
        all_false = True
        for lit in c.body:
            v = self.value_of(lit)
            if v == TRUE:
                return TRUE
            if v != FALSE:
                all_false = False
        return FALSE if all_false else UNDEF

    def induced_order(self):
        positions = {}
        pos = 0
        for e in self.entries:
            positions[e.lit.atom] = pos
            pos += 1 + len(e.bg)
        return HOrder(positions)
