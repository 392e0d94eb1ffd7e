"""CDCL SAT core with watched literals, 1UIP learning and restarts.

Literals are nonzero ints (DIMACS convention); variables are 1..nvars.
"""
from __future__ import annotations


class SatSolver:
    def __init__(self) -> None:
        self.nvars = 0
        self.clauses: list[list[int]] = []
        self.watches: dict[int, list[int]] = {}
        self.assign: dict[int, bool] = {}
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.reason: dict[int, int | None] = {}
        self.level: dict[int, int] = {}
        self.activity: dict[int, float] = {}
        self.var_inc = 1.0
        self.phase: dict[int, bool] = {}
        self.ok = True

    # -- problem construction ----------------------------------------------

    def new_var(self) -> int:
        self.nvars += 1
        v = self.nvars
        self.activity[v] = 0.0
        self.phase[v] = False
        return v

    def ensure_var(self, v: int) -> None:
        while self.nvars < v:
            self.new_var()

    def add_clause(self, lits: list[int]) -> None:
        lits = sorted(set(lits), key=abs)
        if any(-l in lits for l in lits):
            return  # tautology
        for l in lits:
            self.ensure_var(abs(l))
        if self.trail_lim:
            self._backtrack(0)
        # drop literals already falsified at level 0
        lits = [l for l in lits if self._value(l) is not False]
        if any(self._value(l) is True for l in lits):
            return
        if not lits:
            self.ok = False
            return
        if len(lits) == 1:
            if not self._enqueue(lits[0], None):
                self.ok = False
            elif self._propagate() is not None:
                self.ok = False
            return
        self._attach(lits)

    def _attach(self, lits: list[int]) -> int:
        idx = len(self.clauses)
        self.clauses.append(lits)
        self.watches.setdefault(lits[0], []).append(idx)
        self.watches.setdefault(lits[1], []).append(idx)
        return idx

    # -- assignment handling -----------------------------------------------

    def _value(self, lit: int):
        v = self.assign.get(abs(lit))
        if v is None:
            return None
        return v if lit > 0 else not v

    def _enqueue(self, lit: int, reason: int | None) -> bool:
        val = self._value(lit)
        if val is not None:
            return val
        v = abs(lit)
        self.assign[v] = lit > 0
        self.phase[v] = lit > 0
        self.reason[v] = reason
        self.level[v] = len(self.trail_lim)
        self.trail.append(lit)
        return True

    def _propagate(self) -> int | None:
        """Unit propagation; returns a conflicting clause index or None."""
        i = len(self.trail) - 1
        qi = getattr(self, "_qhead", 0)
        while qi < len(self.trail):
            lit = self.trail[qi]
            qi += 1
            falsified = -lit
            watchlist = self.watches.get(falsified, [])
            new_list: list[int] = []
            conflict = None
            for k, ci in enumerate(watchlist):
                cl = self.clauses[ci]
                if cl[0] == falsified:
                    cl[0], cl[1] = cl[1], cl[0]
                if self._value(cl[0]) is True:
                    new_list.append(ci)
                    continue
                moved = False
                for j in range(2, len(cl)):
                    if self._value(cl[j]) is not False:
                        cl[1], cl[j] = cl[j], cl[1]
                        self.watches.setdefault(cl[1], []).append(ci)
                        moved = True
                        break
                if moved:
                    continue
                new_list.append(ci)
                if self._value(cl[0]) is False:
                    new_list.extend(watchlist[k + 1:])
                    conflict = ci
                    break
                self._enqueue(cl[0], ci)
            self.watches[falsified] = new_list
            if conflict is not None:
                self._qhead = qi
                return conflict
        self._qhead = qi
        return None

    def _backtrack(self, lvl: int) -> None:
        while self.trail_lim and len(self.trail_lim) > lvl:
            bound = self.trail_lim.pop()
            while len(self.trail) > bound:
                lit = self.trail.pop()
                v = abs(lit)
                del self.assign[v]
                self.reason.pop(v, None)
                self.level.pop(v, None)
        self._qhead = min(getattr(self, "_qhead", 0), len(self.trail))

    # -- conflict analysis ---------------------------------------------------

    def _analyze(self, conflict: int) -> tuple[list[int], int]:
        learnt: list[int] = []
        seen: set[int] = set()
        counter = 0
        lit = 0
        cl = list(self.clauses[conflict])
        idx = len(self.trail) - 1
        cur_level = len(self.trail_lim)
        while True:
            for q in cl:
                v = abs(q)
                if v in seen:
                    continue
                if self.level.get(v, 0) == 0:
                    continue
                seen.add(v)
                self._bump(v)
                if self.level[v] == cur_level:
                    counter += 1
                else:
                    learnt.append(q)
            while abs(self.trail[idx]) not in seen:
                idx -= 1
            lit = self.trail[idx]
            idx -= 1
            seen.discard(abs(lit))
            counter -= 1
            if counter == 0:
                break
            r = self.reason.get(abs(lit))
            cl = [q for q in self.clauses[r] if q != lit] if r is not None else []
        learnt.insert(0, -lit)
        if len(learnt) == 1:
            return learnt, 0
        blevel = max(self.level[abs(q)] for q in learnt[1:])
        # move a literal of blevel into watch position 1
        for j in range(1, len(learnt)):
            if self.level[abs(learnt[j])] == blevel:
                learnt[1], learnt[j] = learnt[j], learnt[1]
                break
        return learnt, blevel

    def _bump(self, v: int) -> None:
        self.activity[v] = self.activity.get(v, 0.0) + self.var_inc
        if self.activity[v] > 1e100:
            for k in self.activity:
                self.activity[k] *= 1e-100
            self.var_inc *= 1e-100

    def _decide(self) -> int | None:
        best, best_act = None, -1.0
        for v in range(1, self.nvars + 1):
            if v not in self.assign and self.activity.get(v, 0.0) > best_act:
                best, best_act = v, self.activity.get(v, 0.0)
        if best is None:
            return None
        return best if self.phase.get(best, False) else -best

    # -- main search ----------------------------------------------------------

    def solve(self, max_conflicts: int | None = None) -> str:
        """Returns 'sat', 'unsat' or 'unknown' (conflict budget exhausted)."""
        if not self.ok:
            return "unsat"
        if self._propagate() is not None:
            self.ok = False
            return "unsat"
        conflicts = 0
        restart_limit = 100
        while True:
            conflict = self._propagate()
            if conflict is not None:
                conflicts += 1
                self.var_inc *= 1.05
                if not self.trail_lim:
                    self.ok = False
                    return "unsat"
                learnt, blevel = self._analyze(conflict)
                self._backtrack(blevel)
                if len(learnt) == 1:
                    if not self._enqueue(learnt[0], None):
                        self.ok = False
                        return "unsat"
                else:
                    ci = self._attach(learnt)
                    self._enqueue(learnt[0], ci)
                if max_conflicts is not None and conflicts >= max_conflicts:
                    self._backtrack(0)
                    return "unknown"
                if conflicts % restart_limit == 0:
                    restart_limit = int(restart_limit * 1.5)
                    self._backtrack(0)
                continue
            lit = self._decide()
            if lit is None:
                return "sat"
            self.trail_lim.append(len(self.trail))
            self._enqueue(lit, None)

    def model(self) -> dict[int, bool]:
        return dict(self.assign)
