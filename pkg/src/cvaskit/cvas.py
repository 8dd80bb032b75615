"""Continuous vector addition systems: steps, runs, and exact word membership.

A system is a finite set of labelled integer vectors. A step fires a label t
with a rational fraction a in (0,1], moving x to x + a*t, and is only allowed
when the result stays componentwise nonnegative. A word w is a member of the
reachability language for (x, y) when some choice of fractions fires w from x
and lands exactly on y.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .linsolve import EQ, GE, GT, LE, LinearSystem, SolverBudget, con, solve_feasibility
from .rational import ONE, ZERO, Rational, rat


class CvasError(ValueError):
    """Malformed system, configuration, or run input."""


class RunError(CvasError):
    """A step sequence violates the firing rules; carries the step index."""

    def __init__(self, index: int, reason: str):
        super().__init__(f"step {index}: {reason}")
        self.index = index


@dataclass(frozen=True)
class Transition:
    """A labelled integer effect vector."""

    label: str
    effect: tuple

    @staticmethod
    def of(label: str, effect: Iterable[int]) -> "Transition":
        eff = tuple(int(v) for v in effect)
        if not label:
            raise CvasError("transition label must be nonempty")
        return Transition(label, eff)


@dataclass(frozen=True)
class Cvas:
    """A continuous vector addition system; declared order fixes the letter order."""

    dim: int
    transitions: tuple

    @staticmethod
    def of(dim: int, transitions) -> "Cvas":
        dim = int(dim)
        if dim < 0:
            raise CvasError("dimension must be nonnegative")
        trans = tuple(
            t if isinstance(t, Transition) else Transition.of(t[0], t[1]) for t in transitions
        )
        seen = set()
        for t in trans:
            if len(t.effect) != dim:
                raise CvasError(f"transition {t.label!r} has arity {len(t.effect)}, want {dim}")
            if t.label in seen:
                raise CvasError(f"duplicate transition label {t.label!r}")
            seen.add(t.label)
        return Cvas(dim, trans)

    @property
    def labels(self) -> tuple:
        return tuple(t.label for t in self.transitions)

    def effect(self, label: str) -> tuple:
        for t in self.transitions:
            if t.label == label:
                return t.effect
        raise CvasError(f"unknown transition label {label!r}")

    def effects(self) -> dict:
        return {t.label: t.effect for t in self.transitions}


def config(values) -> tuple:
    """Normalize a configuration to a tuple of exact rationals; must be nonnegative."""
    vec = tuple(rat(v) for v in values)
    for i, v in enumerate(vec):
        if v < 0:
            raise CvasError(f"configuration component {i} is negative: {v}")
    return vec


@dataclass(frozen=True)
class Step:
    fraction: object  # Rational in (0, 1]
    label: str


@dataclass(frozen=True)
class Run:
    """A validated step sequence with all intermediate configurations."""

    system: Cvas
    start: tuple
    steps: tuple
    configs: tuple  # len(steps) + 1 entries, configs[0] == start

    @property
    def end(self) -> tuple:
        return self.configs[-1]

    @property
    def word(self) -> tuple:
        return tuple(s.label for s in self.steps)


def fire(system: Cvas, x: Sequence, fraction, label: str) -> Optional[tuple]:
    """One step: x + fraction*effect(label), or None when a counter would go negative."""
    fraction = rat(fraction)
    if not (0 < fraction <= 1):
        raise CvasError(f"fraction {fraction} outside (0, 1]")
    eff = system.effect(label)
    y = tuple(v + fraction * e for v, e in zip(x, eff))
    if any(v < 0 for v in y):
        return None
    return y


def simulate(system: Cvas, start, steps) -> Run:
    """Replay steps exactly, raising RunError at the first violation."""
    x = config(start)
    if len(x) != system.dim:
        raise CvasError("start configuration arity mismatch")
    normalized = []
    configs = [x]
    for i, s in enumerate(steps):
        if not isinstance(s, Step):
            s = Step(rat(s[0]), s[1])
        else:
            s = Step(rat(s.fraction), s.label)
        if not (0 < s.fraction <= 1):
            raise RunError(i, f"fraction {s.fraction} outside (0, 1]")
        nxt = fire(system, x, s.fraction, s.label)
        if nxt is None:
            raise RunError(i, f"firing {s.label} at {s.fraction} drops a counter below zero")
        normalized.append(s)
        configs.append(nxt)
        x = nxt
    return Run(system, configs[0], tuple(normalized), tuple(configs))


def run_of(system: Cvas, start, pairs) -> Run:
    """Convenience constructor from (fraction, label) pairs."""
    return simulate(system, start, [Step(rat(f), l) for f, l in pairs])


def membership_system(system: Cvas, word, x, y) -> LinearSystem:
    """The exact feasibility system for firing word from x to exactly y.

    Variables are the per-step fractions. Prefix nonnegativity rows are only
    emitted after steps that decrease the counter; later prefixes dominate
    earlier ones otherwise.
    """
    n = len(word)
    effs = [system.effect(l) for l in word]
    rows = []
    for i in range(n):
        unit = tuple(ONE if j == i else ZERO for j in range(n))
        rows.append(con(unit, GT, ZERO))
        rows.append(con(unit, LE, ONE))
    for c in range(system.dim):
        for i in range(n):
            if effs[i][c] < 0:
                coeffs = tuple(rat(effs[j][c]) if j <= i else ZERO for j in range(n))
                rows.append(con(coeffs, GE, -x[c]))
        coeffs = tuple(rat(effs[j][c]) for j in range(n))
        rows.append(con(coeffs, EQ, y[c] - x[c]))
    return LinearSystem.of(n, rows)


def prefix_system(system: Cvas, word, x) -> LinearSystem:
    """Feasibility of firing word from x with no endpoint condition."""
    n = len(word)
    effs = [system.effect(l) for l in word]
    rows = []
    for i in range(n):
        unit = tuple(ONE if j == i else ZERO for j in range(n))
        rows.append(con(unit, GT, ZERO))
        rows.append(con(unit, LE, ONE))
    for c in range(system.dim):
        for i in range(n):
            if effs[i][c] < 0:
                coeffs = tuple(rat(effs[j][c]) if j <= i else ZERO for j in range(n))
                rows.append(con(coeffs, GE, -x[c]))
    return LinearSystem.of(n, rows)


def prefix_feasible(system: Cvas, word, x, budget: Optional[SolverBudget] = None) -> bool:
    """Can word fire from x for some fractions, ignoring where it lands?"""
    x = config(x)
    if len(x) != system.dim:
        raise CvasError("configuration arity mismatch")
    word = tuple(word)
    if not word:
        return True
    return solve_feasibility(prefix_system(system, word, x), budget) is not None


def witness_fractions(system: Cvas, word, x, y, budget: Optional[SolverBudget] = None):
    """Fractions firing word from x to y, or None; pinned by the solver's pivot rule."""
    x = config(x)
    y = config(y)
    if len(x) != system.dim or len(y) != system.dim:
        raise CvasError("configuration arity mismatch")
    word = tuple(word)
    for l in word:
        system.effect(l)  # validate labels
    if not word:
        return () if x == y else None
    point = solve_feasibility(membership_system(system, word, x, y), budget)
    if point is None:
        return None
    return tuple(point)


def member(system: Cvas, word, x, y, budget: Optional[SolverBudget] = None) -> bool:
    """Is word firable from x to exactly y for some fractions?"""
    return witness_fractions(system, word, x, y, budget) is not None


def witness_run(system: Cvas, word, x, y, budget: Optional[SolverBudget] = None) -> Optional[Run]:
    fractions = witness_fractions(system, word, x, y, budget)
    if fractions is None:
        return None
    return simulate(system, x, list(zip(fractions, word)))


def lift_duplication(run: Run) -> Run:
    """Halve every fraction and fire each letter twice; validity is preserved."""
    doubled = []
    for s in run.steps:
        half = s.fraction / 2
        doubled.append(Step(half, s.label))
        doubled.append(Step(half, s.label))
    return simulate(run.system, run.start, doubled)
