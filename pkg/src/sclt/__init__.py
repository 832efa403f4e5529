"""Clause learning for Bernays-Schoenfinkel clauses modulo linear rational
arithmetic: engine, verification oracles and a small text frontend."""

from .engine import Engine, RunConfig, Verdict, run_regular, SAT_GROUND, UNKNOWN, UNSAT

__all__ = [
    "Engine",
    "RunConfig",
    "Verdict",
    "run_regular",
    "SAT_GROUND",
    "UNKNOWN",
    "UNSAT",
]
