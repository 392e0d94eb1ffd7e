"""Exact linear-arithmetic theory solver: simplex over delta-rationals
with Bland's rule, plus branch-and-bound for integer variables.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import floor


@dataclass(frozen=True)
class Delta:
    """a + b*delta for an infinitesimal delta > 0."""
    a: Fraction
    b: Fraction = Fraction(0)

    def __add__(self, o: "Delta") -> "Delta":
        return Delta(self.a + o.a, self.b + o.b)

    def __sub__(self, o: "Delta") -> "Delta":
        return Delta(self.a - o.a, self.b - o.b)

    def scale(self, c: Fraction) -> "Delta":
        return Delta(self.a * c, self.b * c)

    def __lt__(self, o: "Delta") -> bool:
        return (self.a, self.b) < (o.a, o.b)

    def __le__(self, o: "Delta") -> bool:
        return (self.a, self.b) <= (o.a, o.b)

    def concrete(self, eps: Fraction) -> Fraction:
        return self.a + self.b * eps


ZERO = Delta(Fraction(0))


@dataclass
class Constraint:
    """coeffs . vars <= / >= bound (strictness via the Delta bound)."""
    coeffs: dict[str, Fraction]
    lower: Delta | None
    upper: Delta | None
    tag: tuple  # ("lit", sat-literal) | ("branch",) | ("fixed",)


class Infeasible(Exception):
    def __init__(self, core: list[tuple]):
        super().__init__("infeasible")
        self.core = core


class BudgetExceeded(Exception):
    pass


class Simplex:
    """General simplex with variable bounds (Dutertre-de Moura style).

    Built fresh per theory check: rows define slack variables as linear
    combinations of problem variables; bounds carry the originating
    constraint tag so infeasibility cores can be reported.
    """

    def __init__(self) -> None:
        self.rows: dict[str, dict[str, Fraction]] = {}  # basic -> expansion
        self.lower: dict[str, tuple[Delta, int]] = {}
        self.upper: dict[str, tuple[Delta, int]] = {}
        self.val: dict[str, Delta] = {}
        self.all_vars: list[str] = []
        self._slacks: dict[tuple, str] = {}

    def _var(self, x: str) -> None:
        if x not in self.val:
            self.val[x] = ZERO
            self.all_vars.append(x)

    def add_constraint(self, c: Constraint) -> None:
        items = tuple(sorted((k, v) for k, v in c.coeffs.items() if v != 0))
        if not items:
            # constant row: 0 within bounds?
            if c.lower is not None and ZERO < c.lower:
                raise Infeasible([c.tag])
            if c.upper is not None and c.upper < ZERO:
                raise Infeasible([c.tag])
            return
        if len(items) == 1:
            x, k = items[0]
            self._var(x)
            lo, hi = c.lower, c.upper
            if k < 0:
                lo, hi = (hi.scale(Fraction(1, k)) if hi is not None else None,
                          lo.scale(Fraction(1, k)) if lo is not None else None)
            elif k != 1:
                lo = lo.scale(Fraction(1, k)) if lo is not None else None
                hi = hi.scale(Fraction(1, k)) if hi is not None else None
            self._tighten(x, lo, hi, c.tag)
            return
        key = items
        slack = self._slacks.get(key)
        if slack is None:
            slack = f"!s{len(self._slacks)}"
            self._slacks[key] = slack
            self._var(slack)
            row = {}
            for x, k in items:
                self._var(x)
                row[x] = k
            self.rows[slack] = row
            self.val[slack] = self._row_value(row)
        self._tighten(slack, c.lower, c.upper, c.tag)

    def _row_value(self, row: dict[str, Fraction]) -> Delta:
        v = ZERO
        for x, k in row.items():
            v = v + self.val[x].scale(k)
        return v

    def _tighten(self, x: str, lo: Delta | None, hi: Delta | None, tag: tuple) -> None:
        if lo is not None:
            cur = self.lower.get(x)
            if cur is None or cur[0] < lo:
                up = self.upper.get(x)
                if up is not None and up[0] < lo:
                    raise Infeasible([tag, up[1]])
                self.lower[x] = (lo, tag)
        if hi is not None:
            cur = self.upper.get(x)
            if cur is None or hi < cur[0]:
                low = self.lower.get(x)
                if low is not None and hi < low[0]:
                    raise Infeasible([tag, low[1]])
                self.upper[x] = (hi, tag)

    # -- solving --------------------------------------------------------------

    def check(self, budget: int = 100000) -> None:
        """Make the assignment satisfy all bounds, or raise Infeasible."""
        # start: nonbasic within bounds, basic recomputed
        for x in self.all_vars:
            if x in self.rows:
                continue
            v = self.val[x]
            lo = self.lower.get(x)
            hi = self.upper.get(x)
            if lo is not None and v < lo[0]:
                v = lo[0]
            if hi is not None and hi[0] < v:
                v = hi[0]
            self.val[x] = v
        for b, row in self.rows.items():
            self.val[b] = self._row_value(row)

        steps = 0
        while True:
            steps += 1
            if steps > budget:
                raise BudgetExceeded()
            # Heuristic pivoting at first; strict Bland order (sorted names,
            # first eligible) after a while to guarantee termination.
            bland = steps > 500
            basic = None
            need_raise = False
            for b in (sorted(self.rows) if bland else self.rows):
                v = self.val[b]
                lo = self.lower.get(b)
                hi = self.upper.get(b)
                if lo is not None and v < lo[0]:
                    basic, need_raise = b, True
                    break
                if hi is not None and hi[0] < v:
                    basic, need_raise = b, False
                    break
            if basic is None:
                return
            row = self.rows[basic]
            pivot = None
            best = None
            for x in (sorted(row) if bland else row):
                k = row[x]
                if need_raise:
                    can = (k > 0 and self._can_increase(x)) or \
                          (k < 0 and self._can_decrease(x))
                else:
                    can = (k > 0 and self._can_decrease(x)) or \
                          (k < 0 and self._can_increase(x))
                if can:
                    if bland:
                        pivot = x
                        break
                    mag = abs(k)
                    if best is None or mag > best:
                        pivot, best = x, mag
            if pivot is None:
                core = []
                bound = self.lower[basic] if need_raise else self.upper[basic]
                core.append(bound[1])
                for x in sorted(row):
                    k = row[x]
                    if need_raise:
                        lim = self.upper.get(x) if k > 0 else self.lower.get(x)
                    else:
                        lim = self.lower.get(x) if k > 0 else self.upper.get(x)
                    if lim is not None:
                        core.append(lim[1])
                raise Infeasible(sorted(set(core)))
            target = (self.lower[basic][0] if need_raise else self.upper[basic][0])
            self._pivot_update(basic, pivot, target)

    def _can_increase(self, x: str) -> bool:
        hi = self.upper.get(x)
        return hi is None or self.val[x] < hi[0]

    def _can_decrease(self, x: str) -> bool:
        lo = self.lower.get(x)
        return lo is None or lo[0] < self.val[x]

    def _pivot_update(self, basic: str, nonbasic: str, target: Delta) -> None:
        row = self.rows.pop(basic)
        a = row[nonbasic]
        # basic = sum(row) ; solve for nonbasic
        new_row: dict[str, Fraction] = {basic: Fraction(1, a)}
        for x, k in row.items():
            if x == nonbasic:
                continue
            new_row[x] = -k / a
        # update other rows substituting nonbasic
        delta_nb = (target - self.val[basic]).scale(Fraction(1, a))
        self.val[nonbasic] = self.val[nonbasic] + delta_nb
        self.val[basic] = target
        for b, r in self.rows.items():
            if nonbasic in r:
                coeff = r.pop(nonbasic)
                # substituting preserves the row's value; only the change in
                # the entering variable moves it
                self.val[b] = self.val[b] + delta_nb.scale(coeff)
                for x, k in new_row.items():
                    r[x] = r.get(x, Fraction(0)) + coeff * k
                    if r[x] == 0:
                        del r[x]
        self.rows[nonbasic] = new_row

    def assignment(self) -> dict[str, Delta]:
        return {x: self.val[x] for x in self.all_vars if not x.startswith("!s")}


def solve_constraints(constraints: list[Constraint], int_vars: set[str],
                      budget: int = 20000) -> dict[str, Delta]:
    """Feasibility of a constraint conjunction; Infeasible carries a core
    of constraint tags. Integer vars handled by branch-and-bound."""
    return _solve_bb(constraints, int_vars, [budget])


def _solve_bb(constraints: list[Constraint], int_vars: set[str],
              budget: list[int]) -> dict[str, Delta]:
    sx = Simplex()
    for c in constraints:
        sx.add_constraint(c)
    sx.check()
    model = sx.assignment()
    for x in sorted(int_vars):
        v = model.get(x, ZERO)
        if v.b != 0 or v.a.denominator != 1:
            budget[0] -= 1
            if budget[0] <= 0:
                raise BudgetExceeded()
            f = Fraction(floor(v.a))
            down = Constraint({x: Fraction(1)}, None, Delta(f), tag=("branch",))
            up = Constraint({x: Fraction(1)}, Delta(f + 1), None, tag=("branch",))
            try:
                return _solve_bb(constraints + [down], int_vars, budget)
            except Infeasible as e1:
                try:
                    return _solve_bb(constraints + [up], int_vars, budget)
                except Infeasible as e2:
                    core = sorted({t for t in e1.core + e2.core if t != ("branch",)})
                    raise Infeasible(core)
    return model


def concretize(model: dict[str, Delta], check) -> dict[str, Fraction]:
    """Pick a concrete epsilon: halve until `check` accepts the valuation."""
    eps = Fraction(1)
    for _ in range(5000):
        vals = {x: v.concrete(eps) for x, v in model.items()}
        if check(vals):
            return vals
        eps /= 2
    raise BudgetExceeded()
