"""Exact linear constraint systems, a two-phase simplex, and a Fourier-Motzkin oracle.

All arithmetic is exact rational. Strict inequalities are decided by the
single-epsilon reduction: every strict row donates room to one shared slack
variable which is then maximized; the strict system is satisfiable exactly
when the optimum is positive (or unbounded).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .rational import ONE, ZERO, Rational, rat

LE = "<="
GE = ">="
EQ = "="
LT = "<"
GT = ">"
RELATIONS = (LE, GE, EQ, LT, GT)
STRICT_RELATIONS = (LT, GT)


class SolverBudgetExceeded(RuntimeError):
    """A solver run exhausted its cooperative pivot budget."""


@dataclass
class SolverBudget:
    """Pivot budget shared across nested solver calls; spend() raises at zero."""

    steps: int

    def spend(self, amount: int = 1) -> None:
        self.steps -= amount
        if self.steps < 0:
            raise SolverBudgetExceeded("simplex pivot budget exhausted")


@dataclass(frozen=True)
class Constraint:
    """coeffs . x  rel  rhs, with rel one of <=, >=, =, <, >."""

    coeffs: tuple
    rel: str
    rhs: object

    def holds(self, point: Sequence) -> bool:
        lhs = ZERO
        for c, x in zip(self.coeffs, point):
            lhs += c * x
        if self.rel == LE:
            return lhs <= self.rhs
        if self.rel == GE:
            return lhs >= self.rhs
        if self.rel == EQ:
            return lhs == self.rhs
        if self.rel == LT:
            return lhs < self.rhs
        return lhs > self.rhs


def con(coeffs, rel, rhs) -> Constraint:
    if rel not in RELATIONS:
        raise ValueError(f"unknown relation {rel!r}")
    return Constraint(tuple(rat(c) for c in coeffs), rel, rat(rhs))


@dataclass(frozen=True)
class LinearSystem:
    num_vars: int
    constraints: tuple

    @staticmethod
    def of(num_vars: int, rows) -> "LinearSystem":
        rows = tuple(rows)
        for row in rows:
            if len(row.coeffs) != num_vars:
                raise ValueError("constraint arity does not match num_vars")
        return LinearSystem(num_vars, rows)

    @property
    def has_strict(self) -> bool:
        return any(c.rel in STRICT_RELATIONS for c in self.constraints)

    def check(self, point: Sequence) -> bool:
        if len(point) != self.num_vars:
            return False
        return all(c.holds(point) for c in self.constraints)


@dataclass(frozen=True)
class LpResult:
    status: str  # "optimal" | "unbounded" | "infeasible"
    point: Optional[tuple]
    value: Optional[object]


def maximize(system: LinearSystem, objective, budget: Optional[SolverBudget] = None) -> LpResult:
    """Maximize objective . x over a system of non-strict constraints.

    Two-phase dense tableau simplex with Bland's rule (lowest index enters,
    ratio ties leave by lowest basis index), so runs are deterministic and
    never cycle. For "unbounded" the returned point is a feasible one.
    """
    objective = tuple(rat(c) for c in objective)
    if len(objective) != system.num_vars:
        raise ValueError("objective arity does not match num_vars")
    if system.has_strict:
        raise ValueError("maximize requires non-strict constraints only")
    tab = _Tableau(system)
    if not tab.phase_one(budget):
        return LpResult("infeasible", None, None)
    return tab.phase_two(objective, budget)


def solve_feasibility(system: LinearSystem, budget: Optional[SolverBudget] = None) -> Optional[tuple]:
    """Exact satisfiability for mixed strict/non-strict systems.

    Returns a witness assignment or None. Strict rows are relaxed by one
    shared epsilon variable which is then maximized; the pivot rule makes the
    witness deterministic.
    """
    n = system.num_vars
    if not system.has_strict:
        res = maximize(system, (ZERO,) * n, budget)
        if res.status == "infeasible":
            return None
        point = tuple(res.point)
        assert system.check(point)
        return point

    def widened(extra_rows=()):
        rows = []
        for c in system.constraints:
            if c.rel == LT:
                rows.append(con(c.coeffs + (ONE,), LE, c.rhs))
            elif c.rel == GT:
                rows.append(con(c.coeffs + (-ONE,), GE, c.rhs))
            else:
                rows.append(con(c.coeffs + (ZERO,), c.rel, c.rhs))
        rows.append(con((ZERO,) * n + (ONE,), GE, ZERO))
        rows.extend(extra_rows)
        return LinearSystem.of(n + 1, rows)

    eps_obj = (ZERO,) * n + (ONE,)
    res = maximize(widened(), eps_obj, budget)
    if res.status == "infeasible":
        return None
    if res.status == "unbounded":
        cap = con((ZERO,) * n + (ONE,), LE, ONE)
        res = maximize(widened((cap,)), eps_obj, budget)
    if res.value is None or res.value <= 0:
        return None
    point = tuple(res.point[:n])
    assert system.check(point)
    return point


class _Tableau:
    """Dense exact simplex tableau over split nonnegative variables."""

    def __init__(self, system: LinearSystem):
        self.n = system.num_vars
        nonneg = [False] * self.n
        kept = []
        for c in system.constraints:
            var = _single_var(c.coeffs)
            if var is not None:
                coef = c.coeffs[var]
                if c.rel == GE and coef > 0 and c.rhs >= 0:
                    nonneg[var] = True
                    if c.rhs == 0:
                        continue  # exactly x >= 0, subsumed by the split
                elif c.rel == LE and coef < 0 and c.rhs <= 0:
                    nonneg[var] = True
                    if c.rhs == 0:
                        continue
            kept.append(c)
        self.columns = []  # (var index, sign)
        for i in range(self.n):
            self.columns.append((i, 1))
            if not nonneg[i]:
                self.columns.append((i, -1))
        self.num_struct = len(self.columns)

        raw = []
        for c in kept:
            coeffs = [c.coeffs[v] * s for v, s in self.columns]
            rel, rhs = c.rel, c.rhs
            if rhs < 0:
                coeffs = [-a for a in coeffs]
                rhs = -rhs
                rel = {LE: GE, GE: LE, EQ: EQ}[rel]
            raw.append((coeffs, rel, rhs))

        num_slack = sum(1 for _, rel, _ in raw if rel != EQ)
        self.rows = []
        self.basis = []
        self.artificial_cols = []
        slack_at = self.num_struct
        art_at = self.num_struct + num_slack
        width = art_at  # artificials appended lazily
        pending = []
        s_i = 0
        for coeffs, rel, rhs in raw:
            row = coeffs + [ZERO] * num_slack
            basic = None
            if rel != EQ:
                sign = ONE if rel == LE else -ONE
                row[slack_at + s_i] = sign
                if rel == LE:
                    basic = slack_at + s_i
                s_i += 1
            pending.append((row, rhs, basic))
        for row, rhs, basic in pending:
            if basic is None:
                col = art_at + len(self.artificial_cols)
                self.artificial_cols.append(col)
                basic = col
            self.rows.append((row, rhs, basic))
        width = art_at + len(self.artificial_cols)
        self.width = width
        tableau = []
        basis = []
        for row, rhs, basic in self.rows:
            full = row + [ZERO] * (width - len(row)) + [rhs]
            if basic >= art_at:
                full[basic] = ONE
            tableau.append(full)
            basis.append(basic)
        self.t = tableau
        self.basis = basis
        self.art_at = art_at

    def phase_one(self, budget) -> bool:
        if not self.artificial_cols:
            return True
        cost = [ZERO] * (self.width + 1)
        for col in self.artificial_cols:
            cost[col] = -ONE
        # reduced costs relative to the artificial basis
        for r, b in enumerate(self.basis):
            if b >= self.art_at:
                row = self.t[r]
                for j in range(self.width + 1):
                    cost[j] += row[j]
                cost[b] = ZERO
        bounded = self._pivot_loop(cost, budget)
        assert bounded, "phase one objective is bounded by construction"
        if cost[self.width] != ZERO:  # cost row carries -value, 0 iff all artificials vanish
            return False
        self._expel_artificials(budget)
        return True

    def phase_two(self, objective, budget) -> LpResult:
        # drop artificial columns outright
        if self.artificial_cols:
            keep = self.art_at
            self.t = [row[:keep] + [row[self.width]] for row in self.t]
            self.width = keep
        cost = [ZERO] * (self.width + 1)
        for j, (var, sign) in enumerate(self.columns):
            cost[j] = objective[var] * (ONE if sign > 0 else -ONE)
        for r, b in enumerate(self.basis):
            cb = cost[b]
            if cb != ZERO:
                row = self.t[r]
                for j in range(self.width + 1):
                    cost[j] -= cb * row[j]
        bounded = self._pivot_loop(cost, budget)
        point = self._extract_point()
        if not bounded:
            return LpResult("unbounded", point, None)
        return LpResult("optimal", point, -cost[self.width])

    def _pivot_loop(self, cost, budget) -> bool:
        """Bland pivots until optimal (True) or unbounded (False).

        The cost row is reduced alongside the tableau; its last cell holds the
        negated objective value throughout.
        """
        width = self.width
        while True:
            enter = -1
            for j in range(width):
                if cost[j] > 0:
                    enter = j
                    break
            if enter < 0:
                return True
            leave = -1
            best = None
            for r, row in enumerate(self.t):
                a = row[enter]
                if a > 0:
                    ratio = row[width] / a
                    if best is None or ratio < best or (ratio == best and self.basis[r] < self.basis[leave]):
                        best = ratio
                        leave = r
            if leave < 0:
                return False
            if budget is not None:
                budget.spend()
            self._pivot(leave, enter, cost)

    def _pivot(self, r, j, cost) -> None:
        width = self.width
        prow = self.t[r]
        inv = ONE / prow[j]
        if inv != ONE:
            for k in range(width + 1):
                if prow[k] != ZERO:
                    prow[k] *= inv
        for other in self.t:
            if other is prow:
                continue
            f = other[j]
            if f != ZERO:
                for k in range(width + 1):
                    pv = prow[k]
                    if pv != ZERO:
                        other[k] -= f * pv
        f = cost[j]
        if f != ZERO:
            for k in range(width + 1):
                pv = prow[k]
                if pv != ZERO:
                    cost[k] -= f * pv
        self.basis[r] = j

    def _expel_artificials(self, budget) -> None:
        drop = []
        for r in range(len(self.t)):
            if self.basis[r] < self.art_at:
                continue
            row = self.t[r]
            pivot_col = -1
            for j in range(self.art_at):
                if row[j] != ZERO:
                    pivot_col = j
                    break
            if pivot_col < 0:
                drop.append(r)  # redundant equation
                continue
            if budget is not None:
                budget.spend()
            dummy = [ZERO] * (self.width + 1)
            self._pivot(r, pivot_col, dummy)
        for r in sorted(drop, reverse=True):
            del self.t[r]
            del self.basis[r]

    def _extract_point(self) -> tuple:
        col_val = {}
        for r, b in enumerate(self.basis):
            col_val[b] = self.t[r][self.width]
        values = [ZERO] * self.n
        for j, (var, sign) in enumerate(self.columns):
            v = col_val.get(j, ZERO)
            if v != ZERO:
                values[var] += v if sign > 0 else -v
        return tuple(values)


def _single_var(coeffs) -> Optional[int]:
    found = None
    for i, c in enumerate(coeffs):
        if c != ZERO:
            if found is not None:
                return None
            found = i
    return found


def fourier_motzkin_feasible(system: LinearSystem) -> bool:
    """Independent feasibility oracle by exact variable elimination.

    Handles strict rows natively (a combination is strict when either parent
    is). Exponential; intended for small differential-testing instances.
    """
    eqs = []  # (coeffs list, rhs)
    ineqs = []  # (coeffs list, strict, rhs) meaning coeffs . x <= / < rhs
    for c in system.constraints:
        coeffs = list(c.coeffs)
        if c.rel == EQ:
            eqs.append((coeffs, c.rhs))
        elif c.rel in (LE, LT):
            ineqs.append((coeffs, c.rel == LT, c.rhs))
        else:
            ineqs.append(([-a for a in coeffs], c.rel == GT, -c.rhs))

    for var in range(system.num_vars):
        pivot_eq = next((e for e in eqs if e[0][var] != ZERO), None)
        if pivot_eq is not None:
            eqs.remove(pivot_eq)
            eqs = [_sub_eq(e, pivot_eq, var) for e in eqs]
            ineqs = [_sub_ineq(i, pivot_eq, var) for i in ineqs]
            continue
        uppers = [i for i in ineqs if i[0][var] > ZERO]
        lowers = [i for i in ineqs if i[0][var] < ZERO]
        rest = [i for i in ineqs if i[0][var] == ZERO]
        for uc, ustrict, urhs in uppers:
            a_u = uc[var]
            for lc, lstrict, lrhs in lowers:
                a_l = lc[var]
                coeffs = [(-a_l) * u + a_u * l for u, l in zip(uc, lc)]
                rhs = (-a_l) * urhs + a_u * lrhs
                rest.append((coeffs, ustrict or lstrict, rhs))
        ineqs = rest

    for coeffs, rhs in eqs:
        if any(a != ZERO for a in coeffs):  # pragma: no cover - eliminated above
            raise AssertionError("unexpected live variable after elimination")
        if rhs != ZERO:
            return False
    for coeffs, strict, rhs in ineqs:
        if strict:
            if not ZERO < rhs:
                return False
        elif not ZERO <= rhs:
            return False
    return True


def _sub_eq(eq, pivot, var):
    coeffs, rhs = eq
    f = coeffs[var] / pivot[0][var]
    if f == ZERO:
        return eq
    new = [a - f * p for a, p in zip(coeffs, pivot[0])]
    return (new, rhs - f * pivot[1])


def _sub_ineq(ineq, pivot, var):
    coeffs, strict, rhs = ineq
    f = coeffs[var] / pivot[0][var]
    if f == ZERO:
        return ineq
    new = [a - f * p for a, p in zip(coeffs, pivot[0])]
    return (new, strict, rhs - f * pivot[1])
