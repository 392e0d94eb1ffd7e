"""SMT-LIB 2 driver: preprocessing, CNF conversion and the lazy
CDCL(T) loop combining the SAT core with the simplex theory solver.
"""
from __future__ import annotations

import sys
from fractions import Fraction

from .sexpr import Reader, SexprError, to_text
from .sat import SatSolver
from .theory import (BudgetExceeded, Constraint, Delta, Infeasible,
                     concretize, solve_constraints, ZERO)


class MiniSmtError(Exception):
    pass


BOOL, INT, REAL = "Bool", "Int", "Real"

# internal term forms:
#   bool | int | Fraction           literal
#   str                             variable
#   (op, arg...)                    application


def _unquote(sym: str) -> str:
    if sym.startswith("|") and sym.endswith("|"):
        return sym[1:-1]
    return sym


class Frame:
    def __init__(self) -> None:
        self.decls: dict[str, str] = {}
        self.defs: dict[str, object] = {}
        self.asserts: list = []


class Solver:
    def __init__(self, out=None) -> None:
        self.out = out or sys.stdout
        self.frames = [Frame()]
        self.model: dict[str, object] | None = None
        self.decl_order: list[str] = []
        self._elims: list[tuple[str, dict, Fraction]] = []

    # -- command dispatch ---------------------------------------------------

    def run_script(self, text: str) -> None:
        from .sexpr import parse_all
        for cmd in parse_all(text):
            self.execute(cmd)

    def interact(self, stream_in, stream_out) -> None:
        self.out = stream_out
        reader = Reader()
        while True:
            line = stream_in.readline()
            if not line:
                break
            try:
                cmds = reader.feed(line)
            except SexprError as exc:
                self._reply(f'(error "{exc}")')
                reader.buf = ""
                continue
            for cmd in cmds:
                try:
                    if self.execute(cmd) == "exit":
                        return
                except (MiniSmtError, SexprError) as exc:
                    self._reply(f'(error "{exc}")')

    def _reply(self, text: str) -> None:
        self.out.write(text + "\n")
        self.out.flush()

    def execute(self, cmd) -> str | None:
        if not isinstance(cmd, list) or not cmd:
            raise MiniSmtError(f"malformed command {to_text(cmd)!r}")
        op = cmd[0]
        if op in ("set-logic", "set-info", "set-option"):
            return None
        if op == "echo":
            self._reply(cmd[1].strip('"') if len(cmd) > 1 else "")
            return None
        if op == "exit":
            return "exit"
        if op == "reset":
            self.frames = [Frame()]
            self.model = None
            self.decl_order = []
            return None
        if op == "push":
            n = int(cmd[1]) if len(cmd) > 1 else 1
            for _ in range(n):
                self.frames.append(Frame())
            return None
        if op == "pop":
            n = int(cmd[1]) if len(cmd) > 1 else 1
            if n >= len(self.frames):
                raise MiniSmtError("pop below the bottom frame")
            for _ in range(n):
                dead = self.frames.pop()
                for name in dead.decls:
                    self.decl_order.remove(name)
                for name in dead.defs:
                    if name in self.decl_order:
                        self.decl_order.remove(name)
            self.model = None
            return None
        if op in ("declare-fun", "declare-const"):
            name = _unquote(cmd[1])
            if op == "declare-fun":
                if cmd[2] != []:
                    raise MiniSmtError("only 0-ary declare-fun is supported")
                sort = cmd[3]
            else:
                sort = cmd[2]
            if sort not in (BOOL, INT, REAL):
                raise MiniSmtError(f"unsupported sort {to_text(sort)}")
            if self._sort_of(name) is not None:
                raise MiniSmtError(f"symbol {name} already declared")
            self.frames[-1].decls[name] = sort
            self.decl_order.append(name)
            return None
        if op == "define-fun":
            name = _unquote(cmd[1])
            if cmd[2] != []:
                raise MiniSmtError("only 0-ary define-fun is supported")
            sort = cmd[3]
            body = self._term(cmd[4])
            self.frames[-1].decls[name] = sort
            self.frames[-1].defs[name] = body
            self.decl_order.append(name)
            return None
        if op == "assert":
            self.frames[-1].asserts.append(self._term(cmd[1]))
            return None
        if op == "check-sat":
            self._reply(self.check_sat())
            return None
        if op == "get-model":
            self._reply(self._format_model())
            return None
        if op == "get-value":
            self._reply(self._format_values(cmd[1]))
            return None
        raise MiniSmtError(f"unsupported command {op}")

    # -- term conversion ------------------------------------------------------

    def _sort_of(self, name: str) -> str | None:
        for fr in reversed(self.frames):
            if name in fr.decls:
                return fr.decls[name]
        return None

    def _def_of(self, name: str):
        for fr in reversed(self.frames):
            if name in fr.defs:
                return fr.defs[name]
        return None

    def _term(self, e):
        if isinstance(e, list):
            if not e:
                raise MiniSmtError("empty application")
            op = e[0]
            if op == "-" and len(e) == 2:
                arg = self._term(e[1])
                if isinstance(arg, (int, Fraction)) and not isinstance(arg, bool):
                    return -arg
                return ("neg", arg)
            args = [self._term(x) for x in e[1:]]
            if op in ("and", "or", "not", "=>", "xor", "ite", "=", "distinct",
                      "<", "<=", ">", ">=", "+", "*", "/", "-"):
                return tuple([op] + args)
            raise MiniSmtError(f"unsupported operator {to_text(op)}")
        # atom
        if e == "true":
            return True
        if e == "false":
            return False
        name = _unquote(e)
        if self._sort_of(name) is not None:
            return name
        try:
            if "." in e:
                return Fraction(e)
            return int(e)
        except ValueError:
            raise MiniSmtError(f"unknown symbol {e}")

    def sort_of_term(self, t) -> str:
        if isinstance(t, bool):
            return BOOL
        if isinstance(t, int):
            return INT
        if isinstance(t, Fraction):
            return REAL
        if isinstance(t, str):
            s = self._sort_of(t)
            if s is None:
                raise MiniSmtError(f"unknown symbol {t}")
            return s
        op = t[0]
        if op in ("and", "or", "not", "=>", "xor", "=", "distinct",
                  "<", "<=", ">", ">=") :
            return BOOL
        if op == "ite":
            return self.sort_of_term(t[2])
        if op == "/":
            return REAL
        if op == "neg":
            return self.sort_of_term(t[1])
        # +,-,*
        for a in t[1:]:
            s = self.sort_of_term(a)
            if s != INT:
                return s
        return INT

    # -- preprocessing ----------------------------------------------------------

    def _substitute(self, t, env):
        if isinstance(t, str):
            if t in env:
                return env[t]
            d = self._def_of(t)
            if d is not None:
                return self._substitute(d, env)
            return t
        if isinstance(t, tuple):
            return _fold(tuple([t[0]] + [self._substitute(a, env) for a in t[1:]]))
        return t

    def _preprocess(self):
        """Returns (formulas, env) or ('unsat', reasons)."""
        asserts = [g for fr in self.frames for a in fr.asserts
                   for g in _conjuncts(a)]
        env: dict[str, object] = {}
        pending = asserts
        while True:
            changed = False
            residue = []
            for a in pending:
                f = self._substitute(a, env)
                if f is True:
                    continue
                if f is False:
                    return "unsat", env
                for g in _conjuncts(f):
                    got = _unit_binding(g)
                    if got is not None:
                        x, v = got
                        if x not in env:
                            env[x] = v
                            changed = True
                            continue
                    residue.append(g)
            pending = residue
            if not changed:
                break
        return pending, env

    # -- check-sat ---------------------------------------------------------------

    def check_sat(self) -> str:
        self.model = None
        formulas, env = self._preprocess()
        if formulas == "unsat":
            return "unsat"
        # Presolve: pure linear equalities (variable definitions from BMC
        # unrollings, mostly) are Gauss-eliminated once instead of being
        # simplex rows in every theory check.
        fixed, residual = self._extract_fixed(formulas)
        got = _gauss_eliminate(fixed, lambda x: self._sort_of(x) == INT)
        if got == "unsat":
            return "unsat"
        self._elims, fixed_rows = got
        cnf = _CnfBuilder(self)
        for f in residual:
            cnf.add_formula(f)
        sat = cnf.sat
        base = [Constraint(c, Delta(k), Delta(k), tag=("fixed",))
                for c, k in fixed_rows]
        int_vars = {x for x in self._all_decls()
                    if self._sort_of(x) == INT and x not in env}
        for _ in range(200000):
            res = sat.solve(max_conflicts=2000000)
            if res == "unsat":
                return "unsat"
            if res == "unknown":
                return "unknown"
            bmodel = sat.model()
            constraints = list(base)
            for atom, var in cnf.atom_vars.items():
                val = bmodel.get(var)
                if val is None:
                    continue
                c = cnf.atoms[atom].assume(val, ("lit", var if val else -var))
                if c is not None:
                    constraints.append(c)
            try:
                tmodel = solve_constraints(constraints, int_vars)
            except Infeasible as exc:
                lits = [t[1] for t in exc.core if t[0] == "lit"]
                if lits:
                    sat.add_clause([-l for l in lits])
                    continue
                if exc.core and all(t == ("fixed",) for t in exc.core):
                    return "unsat"   # the fixed equalities alone conflict
                return "unknown"
            except BudgetExceeded:
                return "unknown"
            self._build_model(env, cnf, bmodel, tmodel, constraints)
            return "sat"
        return "unknown"

    def _extract_fixed(self, formulas):
        """Split top-level conjuncts into pure linear arithmetic equalities
        (as (coeffs, const) rows meaning coeffs . vars = const) and the
        remaining formulas."""
        fixed, residual = [], []
        for f in formulas:
            for g in _conjuncts(f):
                if (isinstance(g, tuple) and len(g) == 3 and g[0] == "="
                        and not _contains_ite(g)):
                    try:
                        s = self.sort_of_term(g[1])
                    except MiniSmtError:
                        s = None
                    if s in (INT, REAL):
                        try:
                            lc, lk = _linear(g[1], self)
                            rc, rk = _linear(g[2], self)
                        except MiniSmtError:
                            residual.append(g)
                            continue
                        coeffs = dict(lc)
                        for x, k in rc.items():
                            coeffs[x] = coeffs.get(x, Fraction(0)) - k
                            if coeffs[x] == 0:
                                del coeffs[x]
                        fixed.append((coeffs, rk - lk))
                        continue
                residual.append(g)
        return fixed, residual

    def _apply_elims(self, coeffs: dict, const: Fraction):
        """Substitute eliminated variables out of a linear atom."""
        for v, ec, ek in self._elims:
            a = coeffs.pop(v, None)
            if a:
                for x, k in ec.items():
                    coeffs[x] = coeffs.get(x, Fraction(0)) + a * k
                    if coeffs[x] == 0:
                        del coeffs[x]
                const = const - a * ek
        return coeffs, const

    def _all_decls(self) -> list[str]:
        return [n for n in self.decl_order if self._def_of(n) is None]

    def _build_model(self, env, cnf, bmodel, tmodel, constraints) -> None:
        # concrete epsilon for strict rational bounds
        def ok(vals: dict[str, Fraction]) -> bool:
            for c in constraints:
                s = sum((vals.get(x, Fraction(0)) * k for x, k in c.coeffs.items()),
                        Fraction(0))
                if c.lower is not None:
                    lo = c.lower
                    if s < lo.a or (s == lo.a and lo.b > 0):
                        return False
                if c.upper is not None:
                    hi = c.upper
                    if s > hi.a or (s == hi.a and hi.b < 0):
                        return False
            return True

        vals = concretize(tmodel, ok) if tmodel else {}
        # back-substitute eliminated variables (reverse order: an entry may
        # reference variables eliminated after it)
        for v, ec, ek in reversed(self._elims):
            vals[v] = sum((vals.get(x, Fraction(0)) * k for x, k in ec.items()),
                          Fraction(0)) + ek
        model: dict[str, object] = {}
        for name in self._all_decls():
            sort = self._sort_of(name)
            if name in env:
                model[name] = env[name]
            elif sort == BOOL:
                var = cnf.bool_vars.get(name)
                model[name] = bool(bmodel.get(var, False)) if var else False
            else:
                v = vals.get(name, Fraction(0))
                model[name] = int(v) if sort == INT else Fraction(v)
        self.model = model

    # -- model output ---------------------------------------------------------

    def _format_value(self, sort: str, v) -> str:
        if sort == BOOL:
            return "true" if v else "false"
        if sort == INT:
            n = int(v)
            return str(n) if n >= 0 else f"(- {-n})"
        f = Fraction(v)
        def nonneg(fr: Fraction) -> str:
            if fr.denominator == 1:
                return f"{fr.numerator}.0"
            return f"(/ {fr.numerator} {fr.denominator})"
        if f < 0:
            return f"(- {nonneg(-f)})"
        return nonneg(f)

    def _format_model(self) -> str:
        if self.model is None:
            raise MiniSmtError("no model available")
        lines = ["("]
        for name in self._all_decls():
            sort = self._sort_of(name)
            pname = name if _plain_symbol(name) else f"|{name}|"
            lines.append(f"  (define-fun {pname} () {sort} "
                         f"{self._format_value(sort, self.model[name])})")
        lines.append(")")
        return "\n".join(lines)

    def _format_values(self, targets) -> str:
        if self.model is None:
            raise MiniSmtError("no model available")
        parts = []
        for t in targets:
            name = _unquote(t if isinstance(t, str) else to_text(t))
            if name not in self.model:
                d = self._def_of(name)
                if d is None:
                    raise MiniSmtError(f"unknown symbol in get-value: {name}")
                v = _eval_term(d, self.model, self)
            else:
                v = self.model[name]
            sort = self._sort_of(name)
            pname = name if _plain_symbol(name) else f"|{name}|"
            parts.append(f"({pname} {self._format_value(sort, v)})")
        return "(" + " ".join(parts) + ")"


def _plain_symbol(name: str) -> bool:
    import re
    return re.fullmatch(r"[A-Za-z~!$%^&*_+=<>.?/-][A-Za-z0-9~!$%^&*_+=<>.?/-]*",
                        name) is not None


def _conjuncts(f) -> list:
    if isinstance(f, tuple) and f[0] == "and":
        out = []
        for a in f[1:]:
            out.extend(_conjuncts(a))
        return out
    return [f]


def _contains_ite(t) -> bool:
    if isinstance(t, tuple):
        if t[0] == "ite":
            return True
        return any(_contains_ite(a) for a in t[1:])
    return False


def _gauss_eliminate(rows, is_int):
    """Triangularize linear equality rows (coeffs . vars = const).

    Returns 'unsat' or (elims, residual) where elims is an ordered list of
    (v, coeffs, const) meaning v = coeffs . vars + const; each entry may
    reference only surviving variables and later-eliminated ones. Residual
    rows could not be solved for any variable (they stay as equality
    constraints). An integer variable is eliminated only when the solved
    form is guaranteed integral.
    """
    elims: list[tuple[str, dict, Fraction]] = []
    residual: list[tuple[dict, Fraction]] = []
    pending = [(dict(c), k) for c, k in rows]

    def eligible(v, coeffs, const):
        a = coeffs[v]
        if not is_int(v):
            return True
        if (const / a).denominator != 1:
            return False
        for x, k in coeffs.items():
            if x == v:
                continue
            if not is_int(x) or (k / a).denominator != 1:
                return False
        return True

    def subst(target, v, ec, ek):
        coeffs, const = target
        a = coeffs.pop(v, None)
        if not a:
            return target
        for x, k in ec.items():
            coeffs[x] = coeffs.get(x, Fraction(0)) + a * k
            if coeffs[x] == 0:
                del coeffs[x]
        return coeffs, const - a * ek

    while pending:
        coeffs, const = pending.pop(0)
        if not coeffs:
            if const != 0:
                return "unsat"
            continue
        cands = [v for v in coeffs if eligible(v, coeffs, const)]
        if not cands:
            residual.append((coeffs, const))
            continue
        v = min(cands, key=lambda x: (abs(coeffs[x]) != 1, x))
        a = coeffs.pop(v)
        ec = {x: -k / a for x, k in coeffs.items()}
        ek = const / a
        pending = [subst(t, v, ec, ek) for t in pending]
        residual = [subst(t, v, ec, ek) for t in residual]
        elims.append((v, ec, ek))
    residual = [(c, k) for c, k in residual if c or k != 0]
    for c, k in residual:
        if not c and k != 0:
            return "unsat"
    return elims, residual


def _unit_binding(f):
    """(= x literal) / bare bool var / (not var) -> (x, value)."""
    if isinstance(f, str):
        return f, True
    if isinstance(f, tuple) and f[0] == "not" and isinstance(f[1], str):
        return f[1], False
    if isinstance(f, tuple) and f[0] == "=" and len(f) == 3:
        a, b = f[1], f[2]
        if isinstance(b, str) and _is_lit(a):
            a, b = b, a
        if isinstance(a, str) and _is_lit(b):
            return a, b
    return None


def _is_lit(t) -> bool:
    return isinstance(t, (bool, int, Fraction))


# ---------------------------------------------------------------------------
# Constant folding
# ---------------------------------------------------------------------------

def _fold(t):
    if not isinstance(t, tuple):
        return t
    op = t[0]
    args = t[1:]
    if op == "and":
        out = []
        for a in args:
            if a is True:
                continue
            if a is False:
                return False
            if isinstance(a, tuple) and a[0] == "and":
                out.extend(a[1:])
            else:
                out.append(a)
        if not out:
            return True
        if len(out) == 1:
            return out[0]
        return tuple(["and"] + out)
    if op == "or":
        out = []
        for a in args:
            if a is False:
                continue
            if a is True:
                return True
            if isinstance(a, tuple) and a[0] == "or":
                out.extend(a[1:])
            else:
                out.append(a)
        if not out:
            return False
        if len(out) == 1:
            return out[0]
        return tuple(["or"] + out)
    if op == "not":
        a = args[0]
        if isinstance(a, bool):
            return not a
        if isinstance(a, tuple) and a[0] == "not":
            return a[1]
        return t
    if op == "=>":
        a, b = args
        if a is False or b is True:
            return True
        if a is True:
            return b
        if b is False:
            return _fold(("not", a))
        return t
    if op == "xor":
        a, b = args
        if isinstance(a, bool) and isinstance(b, bool):
            return a != b
        if a is False:
            return b
        if b is False:
            return a
        if a is True:
            return _fold(("not", b))
        if b is True:
            return _fold(("not", a))
        return t
    if op == "ite":
        c, x, y = args
        if c is True:
            return x
        if c is False:
            return y
        if x == y:
            return x
        return t
    if op == "neg":
        a = args[0]
        if _is_num(a):
            return -a
        return t
    if op in ("+", "*", "-"):
        if all(_is_num(a) for a in args):
            if op == "+":
                r = args[0]
                for a in args[1:]:
                    r = r + a
                return r
            if op == "*":
                r = args[0]
                for a in args[1:]:
                    r = r * a
                return r
            r = args[0]
            for a in args[1:]:
                r = r - a
            return r
        return t
    if op == "/":
        a, b = args
        if _is_num(a) and _is_num(b) and b != 0:
            return Fraction(a) / Fraction(b)
        return t
    if op in ("=", "<", "<=", ">", ">="):
        if len(args) == 2 and _is_lit(args[0]) and _is_lit(args[1]):
            a, b = args
            if op == "=":
                return a == b
            if op == "<":
                return a < b
            if op == "<=":
                return a <= b
            if op == ">":
                return a > b
            return a >= b
        if op == "=" and args[0] == args[1]:
            return True
        return t
    if op == "distinct":
        if len(args) == 2 and _is_lit(args[0]) and _is_lit(args[1]):
            return args[0] != args[1]
        return t
    return t


def _is_num(t) -> bool:
    return isinstance(t, (int, Fraction)) and not isinstance(t, bool)


def _eval_term(t, model, solver):
    if isinstance(t, str):
        if t in model:
            return model[t]
        d = solver._def_of(t)
        if d is None:
            raise MiniSmtError(f"cannot evaluate {t}")
        return _eval_term(d, model, solver)
    if isinstance(t, tuple):
        folded = _fold(tuple([t[0]] + [_eval_term(a, model, solver) for a in t[1:]]))
        if isinstance(folded, tuple):
            raise MiniSmtError(f"cannot evaluate term {folded}")
        return folded
    return t


# ---------------------------------------------------------------------------
# CNF conversion with theory atoms
# ---------------------------------------------------------------------------

class LinAtom:
    """Normalized linear atom: coeffs . vars `op` const, op in {<=, <}."""

    def __init__(self, coeffs: dict[str, Fraction], op: str, const: Fraction,
                 is_int: bool):
        self.coeffs = coeffs
        self.op = op
        self.const = const
        self.is_int = is_int

    def key(self):
        return (tuple(sorted(self.coeffs.items())), self.op, self.const)

    def assume(self, positive: bool, tag: tuple) -> Constraint | None:
        """Constraint for this atom asserted true (positive) or false."""
        coeffs, op, c = self.coeffs, self.op, self.const
        if positive:
            if op == "<=":
                return Constraint(coeffs, None, Delta(c), tag)
            return Constraint(coeffs, None, Delta(c, Fraction(-1)), tag)
        # negation: sum > c  (or >= for negated strict)
        if op == "<=":
            return Constraint(coeffs, Delta(c, Fraction(1)), None, tag)
        return Constraint(coeffs, Delta(c), None, tag)


class _CnfBuilder:
    def __init__(self, solver: Solver):
        self.solver = solver
        self.sat = SatSolver()
        self.bool_vars: dict[str, int] = {}   # bool symbol -> sat var
        self.atom_vars: dict[tuple, int] = {}  # atom key -> sat var
        self.atoms: dict[tuple, LinAtom] = {}
        self.subterm_vars: dict = {}

    def add_formula(self, f) -> None:
        lit = self._lit(f)
        self.sat.add_clause([lit])

    def _bool_var(self, name: str) -> int:
        v = self.bool_vars.get(name)
        if v is None:
            v = self.sat.new_var()
            self.bool_vars[name] = v
        return v

    def _atom_var(self, atom: LinAtom, negate: bool) -> int:
        key = atom.key()
        v = self.atom_vars.get(key)
        if v is None:
            v = self.sat.new_var()
            self.atom_vars[key] = v
            self.atoms[key] = atom
        return -v if negate else v

    def _fresh(self) -> int:
        return self.sat.new_var()

    def _lit(self, f) -> int:
        """Tseitin: returns a literal equisatisfiably equal to formula f."""
        f = _fold(f) if isinstance(f, tuple) else f
        if f is True:
            v = self._bool_var("!true")
            self.sat.add_clause([v])
            return v
        if f is False:
            return -self._lit(True)
        if isinstance(f, str):
            sort = self.solver._sort_of(f)
            if sort != BOOL:
                raise MiniSmtError(f"non-boolean symbol {f} in formula position")
            return self._bool_var(f)
        if not isinstance(f, tuple):
            raise MiniSmtError(f"unexpected formula {f!r}")
        op = f[0]
        if op == "not":
            return -self._lit(f[1])
        if op == "=>":
            return self._gate_or([-self._lit(f[1]), self._lit(f[2])])
        if op == "and":
            return -self._gate_or([-self._lit(a) for a in f[1:]])
        if op == "or":
            return self._gate_or([self._lit(a) for a in f[1:]])
        if op == "xor":
            a, b = self._lit(f[1]), self._lit(f[2])
            return self._gate_xor(a, b)
        if op == "ite":
            c = self._lit(f[1])
            a, b = self._lit(f[2]), self._lit(f[3])
            # (c -> a) and (!c -> b)
            return -self._gate_or([
                -self._gate_or([-c, a]),
                -self._gate_or([c, b]),
            ])
        if op in ("=", "distinct"):
            s = self.solver.sort_of_term(f[1])
            if s == BOOL:
                a, b = self._lit(f[1]), self._lit(f[2])
                x = self._gate_xor(a, b)
                return x if op == "distinct" else -x
            lit = self._arith(f[1], f[2], "=")
            return -lit if op == "distinct" else lit
        if op in ("<", "<=", ">", ">="):
            return self._arith(f[1], f[2], op)
        raise MiniSmtError(f"unsupported boolean operator {op}")

    def _gate_or(self, lits: list[int]) -> int:
        v = self._fresh()
        self.sat.add_clause([-v] + lits)
        for l in lits:
            self.sat.add_clause([v, -l])
        return v

    def _gate_xor(self, a: int, b: int) -> int:
        v = self._fresh()
        self.sat.add_clause([-v, a, b])
        self.sat.add_clause([-v, -a, -b])
        self.sat.add_clause([v, -a, b])
        self.sat.add_clause([v, a, -b])
        return v

    # -- arithmetic atoms -----------------------------------------------------

    def _arith(self, lhs, rhs, op: str) -> int:
        """Comparison over arithmetic terms; term-level ites are lifted."""
        cond = _find_ite(lhs) or _find_ite(rhs)
        if cond is not None:
            c, x, y = cond[1], cond[2], cond[3]
            then_f = (op, _replace(lhs, cond, x), _replace(rhs, cond, x))
            else_f = (op, _replace(lhs, cond, y), _replace(rhs, cond, y))
            return self._lit(("ite", c, then_f, else_f))
        lc, lk = _linear(lhs, self.solver)
        rc, rk = _linear(rhs, self.solver)
        coeffs = dict(lc)
        for x, k in rc.items():
            coeffs[x] = coeffs.get(x, Fraction(0)) - k
            if coeffs[x] == 0:
                del coeffs[x]
        const = rk - lk  # lhs - rhs `op` 0  ->  coeffs `op` const
        coeffs, const = self.solver._apply_elims(coeffs, const)
        is_int = all(self.solver._sort_of(x) == INT for x in coeffs)
        if op == "=":
            a = self._le(coeffs, const, False, is_int)
            b = self._le({x: -k for x, k in coeffs.items()}, -const, False, is_int)
            return -self._gate_or([-a, -b])
        if op == ">":
            return self._le(coeffs, const, True, is_int, flip=True)
        if op == ">=":
            return self._le(coeffs, const, False, is_int, flip=True)
        if op == "<":
            return self._le(coeffs, const, True, is_int)
        return self._le(coeffs, const, False, is_int)

    def _le(self, coeffs: dict[str, Fraction], const: Fraction, strict: bool,
            is_int: bool, flip: bool = False) -> int:
        if flip:
            coeffs = {x: -k for x, k in coeffs.items()}
            const = -const
        if not coeffs:
            val = (Fraction(0) < const) if strict else (Fraction(0) <= const)
            return self._lit(bool(val))
        if is_int:
            # scale to integer coefficients, then floor the bound
            from math import floor, lcm
            denoms = [k.denominator for k in coeffs.values()] + [1]
            m = 1
            for d in denoms:
                m = lcm(m, d)
            coeffs = {x: k * m for x, k in coeffs.items()}
            const = const * m
            if strict:
                # sum < c  <=>  sum <= ceil(c) - 1
                c = const.numerator // const.denominator  # floor
                if Fraction(c) == const:
                    const = Fraction(c - 1)
                else:
                    const = Fraction(c)
                strict = False
            else:
                const = Fraction(const.numerator // const.denominator)
        atom = LinAtom(coeffs, "<" if strict else "<=", const, is_int)
        return self._atom_var(atom, False)


def _find_ite(t):
    if isinstance(t, tuple):
        if t[0] == "ite":
            return t
        for a in t[1:]:
            got = _find_ite(a)
            if got is not None:
                return got
    return None


def _replace(t, target, repl):
    if t == target:
        return repl
    if isinstance(t, tuple):
        return tuple([t[0]] + [_replace(a, target, repl) for a in t[1:]])
    return t


def _linear(t, solver) -> tuple[dict[str, Fraction], Fraction]:
    """Decompose an arithmetic term into (coeffs, const)."""
    if _is_num(t):
        return {}, Fraction(t)
    if isinstance(t, str):
        if solver._sort_of(t) == BOOL:
            raise MiniSmtError(f"boolean symbol {t} in arithmetic position")
        return {t: Fraction(1)}, Fraction(0)
    if not isinstance(t, tuple):
        raise MiniSmtError(f"bad arithmetic term {t!r}")
    op = t[0]
    if op == "neg":
        c, k = _linear(t[1], solver)
        return {x: -v for x, v in c.items()}, -k
    if op == "+":
        coeffs: dict[str, Fraction] = {}
        const = Fraction(0)
        for a in t[1:]:
            c, k = _linear(a, solver)
            const += k
            for x, v in c.items():
                coeffs[x] = coeffs.get(x, Fraction(0)) + v
        return {x: v for x, v in coeffs.items() if v != 0}, const
    if op == "-":
        c0, k0 = _linear(t[1], solver)
        for a in t[2:]:
            c, k = _linear(a, solver)
            k0 -= k
            for x, v in c.items():
                c0[x] = c0.get(x, Fraction(0)) - v
        return {x: v for x, v in c0.items() if v != 0}, k0
    if op == "*":
        # at most one factor may be non-constant
        parts = [_linear(a, solver) for a in t[1:]]
        lin = None
        lin_const = Fraction(0)
        scalar = Fraction(1)
        for c, k in parts:
            if c:
                if lin is not None:
                    raise MiniSmtError("nonlinear multiplication")
                lin, lin_const = c, k
            else:
                scalar *= k
        if lin is None:
            return {}, scalar
        return {x: v * scalar for x, v in lin.items()}, lin_const * scalar
    if op == "/":
        c, k = _linear(t[1], solver)
        c2, k2 = _linear(t[2], solver)
        if c2:
            raise MiniSmtError("nonlinear division")
        if k2 == 0:
            raise MiniSmtError("division by zero constant")
        return {x: v / k2 for x, v in c.items()}, k / k2
    raise MiniSmtError(f"unsupported arithmetic operator {op}")
