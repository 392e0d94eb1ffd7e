"""SMT-LIB 2 encoding of bounded unrollings and external solver sessions.

The solver is an external process speaking SMT-LIB 2 over stdio. The
command comes from configuration (flag > SYNKIT_SMT_SOLVER env var >
default); the default is the bundled reference solver `synkit-smt`.
"""
from __future__ import annotations

import os
import re
import shlex
import subprocess
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction

from .ast import (Binop, Expr, Ite, Lit, Unop, Var, Value,
                  BOOL, INT, REAL)
from .errors import EncodingError, SolverError
from .node import Node
from .values import Valuation, Trace

_SORTS = {BOOL: "Bool", INT: "Int", REAL: "Real"}


@dataclass
class SmtConfig:
    command: list[str] = field(default_factory=lambda: _default_command())
    timeout: float = 60.0
    dump_dir: str | None = None
    logic: str = "QF_LIRA"


def _default_command() -> list[str]:
    env = os.environ.get("SYNKIT_SMT_SOLVER")
    if env:
        return shlex.split(env)
    return [sys.executable, "-m", "synkit.minismt"]


# ---------------------------------------------------------------------------
# Expression serialization
# ---------------------------------------------------------------------------

_PLAIN = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


def smt_symbol(name: str) -> str:
    if _PLAIN.fullmatch(name):
        return name
    return f"|{name}|"


def format_value_smt(v: Value) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v) if v >= 0 else f"(- {-v})"
    f = Fraction(v)
    def pos(fr: Fraction) -> str:
        if fr.denominator == 1:
            return f"{fr.numerator}.0"
        return f"(/ {fr.numerator} {fr.denominator})"
    return pos(f) if f >= 0 else f"(- {pos(-f)})"


_BINOPS = {"and": "and", "or": "or", "xor": "xor", "=>": "=>",
           "=": "=", "<": "<", "<=": "<=", ">": ">", ">=": ">=",
           "+": "+", "-": "-", "*": "*", "/": "/"}


def expr_to_smt(e: Expr, rename) -> str:
    """Serialize an elaborated expression; `rename` maps var names to SMT
    symbols. Emits `distinct` for <>; div/mod must have been lowered."""
    if isinstance(e, Lit):
        return format_value_smt(e.value)
    if isinstance(e, Var):
        return rename(e.name)
    if isinstance(e, Unop):
        if e.op == "not":
            return f"(not {expr_to_smt(e.arg, rename)})"
        if e.op == "-":
            return f"(- {expr_to_smt(e.arg, rename)})"
        raise EncodingError(f"cannot encode unary {e.op!r}")
    if isinstance(e, Binop):
        if e.op == "<>":
            return (f"(distinct {expr_to_smt(e.left, rename)} "
                    f"{expr_to_smt(e.right, rename)})")
        if e.op in ("div", "mod"):
            raise EncodingError("div/mod must be lowered before encoding")
        op = _BINOPS.get(e.op)
        if op is None:
            raise EncodingError(f"cannot encode operator {e.op!r}")
        return (f"({op} {expr_to_smt(e.left, rename)} "
                f"{expr_to_smt(e.right, rename)})")
    if isinstance(e, Ite):
        return (f"(ite {expr_to_smt(e.cond, rename)} "
                f"{expr_to_smt(e.then, rename)} {expr_to_smt(e.other, rename)})")
    raise EncodingError(f"cannot encode {e!r} (unelaborated form?)")


def check_linear(e: Expr) -> None:
    """Reject nonlinear multiplication (both factors non-constant).

    Rigid parameters count as non-constant: they are solver unknowns.
    """
    def ground(x: Expr) -> bool:
        return not x.free_vars()

    def walk(x: Expr) -> None:
        if isinstance(x, Binop):
            if x.op == "*" and not ground(x.left) and not ground(x.right):
                raise EncodingError(
                    f"nonlinear multiplication not supported: {x}")
            if x.op == "/" and not ground(x.right):
                # handled by caller via guards where possible
                pass
            walk(x.left)
            walk(x.right)
        elif isinstance(x, Unop):
            walk(x.arg)
        elif isinstance(x, Ite):
            walk(x.cond)
            walk(x.then)
            walk(x.other)

    walk(e)


def _division_guards(e: Expr) -> list[Expr]:
    """For each division with a non-literal divisor, a nonzero guard."""
    out: list[Expr] = []

    def walk(x: Expr) -> None:
        if isinstance(x, Binop):
            if x.op == "/" and not isinstance(x.right, Lit):
                out.append(Binop(op="<>", left=x.right,
                                 right=Lit(value=Fraction(0))))
            walk(x.left)
            walk(x.right)
        elif isinstance(x, Unop):
            walk(x.arg)
        elif isinstance(x, Ite):
            walk(x.cond)
            walk(x.then)
            walk(x.other)

    walk(e)
    return out


def lower_divmod(e: Expr, fresh) -> tuple[Expr, list[tuple[str, str]], list[Expr]]:
    """Replace integer div/mod by fresh quotient/remainder variables with
    the Euclidean side constraints. Returns (expr, new decls, constraints)."""
    decls: list[tuple[str, str]] = []
    constraints: list[Expr] = []

    def walk(x: Expr) -> Expr:
        if isinstance(x, Binop) and x.op in ("div", "mod"):
            lhs = walk(x.left)
            rhs = walk(x.right)
            if not isinstance(rhs, Lit) or rhs.value == 0:
                raise EncodingError(
                    "div/mod with a non-literal or zero divisor is not supported")
            d = rhs.value
            q = fresh("q")
            r = fresh("r")
            decls.extend([(q, INT), (r, INT)])
            qv, rv = Var(name=q, ty=INT), Var(name=r, ty=INT)
            constraints.append(Binop(op="=", left=lhs, right=Binop(
                op="+", left=Binop(op="*", left=rhs, right=qv), right=rv)))
            constraints.append(Binop(op=">=", left=rv, right=Lit(value=0)))
            constraints.append(Binop(op="<", left=rv, right=Lit(value=abs(d))))
            return qv if x.op == "div" else rv
        if isinstance(x, Binop):
            return Binop(op=x.op, left=walk(x.left), right=walk(x.right), ty=x.ty)
        if isinstance(x, Unop):
            return Unop(op=x.op, arg=walk(x.arg), ty=x.ty)
        if isinstance(x, Ite):
            return Ite(cond=walk(x.cond), then=walk(x.then),
                       other=walk(x.other), ty=x.ty)
        return x

    return walk(e), decls, constraints


# ---------------------------------------------------------------------------
# Unrolling
# ---------------------------------------------------------------------------

@dataclass
class Unrolling:
    node: Node
    k: int
    decls: list[tuple[str, str]] = field(default_factory=list)  # (symbol, sort)
    assertions: list[str] = field(default_factory=list)
    symtab: dict[str, tuple[str, int | None]] = field(default_factory=dict)
    _fresh: int = 0

    def declare(self, sym: str, ty: str, var: str | None = None,
                rnd: int | None = None) -> None:
        self.decls.append((sym, ty))
        if var is not None:
            self.symtab[sym] = (var, rnd)

    def var_at(self, name: str, rnd: int) -> str:
        """SMT symbol of a signal at a round (params have no round)."""
        if name in {p for p, _ in self.node.params}:
            return name
        return f"{name}@{rnd}"

    def plain_rename_for_round(self, rnd: int):
        """Unquoted symbol names for a reaction at `rnd`: state reads refer
        to the previous round's state instance."""
        states = set(self.node.state_names())
        params = {p for p, _ in self.node.params}

        def rn(name: str) -> str:
            if name in params:
                return name
            if name in states:
                return f"{name}@{rnd - 1}"
            return f"{name}@{rnd}"
        return rn

    def assert_expr_at(self, e: Expr, rnd: int) -> None:
        """Assert a predicate over signals at one round."""
        self.assertions.append(expr_to_smt(e, _signal_renamer(self, rnd)))

    def assert_param_expr(self, e: Expr) -> None:
        self.assertions.append(expr_to_smt(e, lambda n: smt_symbol(n)))

    def fresh_name(self, base: str) -> str:
        self._fresh += 1
        return f"_{base}{self._fresh}"

    def script(self, goal: str | None = None, logic: str = "QF_LIRA") -> str:
        lines = ["(set-option :produce-models true)", f"(set-logic {logic})"]
        for sym, ty in self.decls:
            lines.append(f"(declare-fun {smt_symbol(sym)} () {_SORTS[ty]})")
        for a in self.assertions:
            lines.append(f"(assert {a})")
        if goal is not None:
            lines.append(f"(assert {goal})")
        lines.append("(check-sat)")
        return "\n".join(lines) + "\n"


def _signal_renamer(u: Unrolling, rnd: int):
    """Rename for a predicate over the values of round `rnd` (a state name
    denotes the state after that round's reaction)."""
    params = {p for p, _ in u.node.params}

    def rn(name: str) -> str:
        if name in params:
            return smt_symbol(name)
        return smt_symbol(f"{name}@{rnd}")
    return rn


def start_unrolling(node: Node) -> Unrolling:
    """Declarations and assertions for rounds up to -1: rigid parameters
    and the Init constraint on the round -1 state instances."""
    u = Unrolling(node=node, k=-1)
    for p, ty in node.params:
        u.declare(p, ty, var=p, rnd=None)
    for name, ty in node.states:
        u.declare(f"{name}@-1", ty, var=name, rnd=-1)
    consts = {p for p, _ in node.params}
    _lower_and_assert(u, None, node.init,
                      lambda n: n if n in consts else f"{n}@-1")
    return u


def extend_unrolling(u: Unrolling) -> tuple[list[tuple[str, str]], list[str]]:
    """Add one more round to the unrolling; returns the newly added
    declarations and assertion texts (for incremental solver sessions)."""
    node = u.node
    r = u.k + 1
    d0, a0 = len(u.decls), len(u.assertions)
    for name, ty in node.inputs + node.outputs + node.wires:
        u.declare(f"{name}@{r}", ty, var=name, rnd=r)
    for name, ty in node.states:
        u.declare(f"{name}@{r}", ty, var=name, rnd=r)
    rn = u.plain_rename_for_round(r)
    for t in node.topo_order():
        _lower_and_assert(u, f"{t}@{r}", node.defs[t], rn)
    for s, _ in node.states:
        _lower_and_assert(u, f"{s}@{r}", node.nexts[s], rn)
    u.k = r
    return u.decls[d0:], u.assertions[a0:]


def _lower_and_assert(u: Unrolling, target_sym: str | None, e: Expr,
                      plain_rn) -> None:
    check_linear(e)
    rename = lambda n: smt_symbol(plain_rn(n))
    e2, decls, side = lower_divmod(e, lambda b: u.fresh_name(b))
    for d, ty in decls:
        u.declare(plain_rn(d), ty)
    for g in _division_guards(e2):
        u.assertions.append(expr_to_smt(g, rename))
    for s in side:
        u.assertions.append(expr_to_smt(s, rename))
    text = expr_to_smt(e2, rename)
    if target_sym is None:
        u.assertions.append(text)
    else:
        u.assertions.append(f"(= {smt_symbol(target_sym)} {text})")


def encode(node: Node, k: int, extra: list[str] | None = None) -> Unrolling:
    """Unroll `node` for rounds 0..k into declarations and assertions.

    State instances exist for rounds -1..k (value after that round's
    reaction; Init constrains round -1). Rigid parameters are declared
    once, unindexed.
    """
    if k < 0:
        raise EncodingError(f"bound must be >= 0, got {k}")
    u = start_unrolling(node)
    for _ in range(k + 1):
        extend_unrolling(u)
    for a in extra or []:
        u.assertions.append(a)
    return u


# ---------------------------------------------------------------------------
# Solver session
# ---------------------------------------------------------------------------

class SolverSession:
    """One external solver process, SMT-LIB 2 over stdio."""

    def __init__(self, config: SmtConfig | None = None, name: str = "obligation"):
        self.config = config or SmtConfig()
        self.name = name
        self._sent: list[str] = []
        self._rbuf = b""
        try:
            # Unbuffered binary pipes: reads go through select() on the raw
            # descriptor, which a buffered text wrapper would defeat.
            self.proc = subprocess.Popen(
                self.config.command, stdin=subprocess.PIPE,
                stdout=subprocess.PIPE, stderr=subprocess.DEVNULL, bufsize=0)
        except OSError as exc:
            raise SolverError(f"cannot start solver {self.config.command}: {exc}")
        self.send("(set-option :produce-models true)")
        self.send(f"(set-logic {self.config.logic})")

    def send(self, text: str) -> None:
        if self.proc.stdin is None:
            raise SolverError("solver stdin closed")
        self._sent.append(text)
        try:
            self.proc.stdin.write((text + "\n").encode())
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise SolverError(f"solver process died: {exc}")

    def _read_line(self, timeout: float) -> str | None:
        import select
        assert self.proc.stdout is not None
        deadline = time.monotonic() + timeout
        while True:
            if b"\n" in self._rbuf:
                line, self._rbuf = self._rbuf.split(b"\n", 1)
                text = line.decode().strip()
                if text:
                    return text
                continue
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                return None
            ready, _, _ = select.select([self.proc.stdout], [], [], remaining)
            if ready:
                chunk = self.proc.stdout.read(65536)
                if not chunk:
                    raise SolverError("solver closed its output")
                self._rbuf += chunk

    def check(self) -> str:
        """-> 'sat' | 'unsat' | 'unknown' | 'timeout'."""
        self.send("(check-sat)")
        line = self._read_line(self.config.timeout)
        if line is None:
            self.close(kill=True)
            return "timeout"
        if line in ("sat", "unsat", "unknown"):
            return line
        raise SolverError(f"unexpected solver answer: {line}")

    def get_model(self) -> str:
        self.send("(get-model)")
        return self._read_balanced()

    def get_values(self, symbols: list[str]) -> str:
        self.send(f"(get-value ({' '.join(symbols)}))")
        return self._read_balanced()

    def _read_balanced(self) -> str:
        buf = ""
        depth = 0
        started = False
        deadline = time.monotonic() + self.config.timeout
        while True:
            line = self._read_line(max(0.01, deadline - time.monotonic()))
            if line is None:
                self.close(kill=True)
                raise SolverError("timeout while reading solver output")
            if line.startswith("(error"):
                raise SolverError(f"solver error: {line}")
            buf += line + "\n"
            depth += line.count("(") - line.count(")")
            started = started or "(" in line
            if started and depth <= 0:
                return buf

    def push(self) -> None:
        self.send("(push 1)")

    def pop(self) -> None:
        self.send("(pop 1)")

    def dump(self, tag: str) -> None:
        if self.config.dump_dir:
            os.makedirs(self.config.dump_dir, exist_ok=True)
            path = os.path.join(self.config.dump_dir, f"{tag}.smt2")
            with open(path, "w", encoding="utf-8") as fh:
                fh.write("\n".join(self._sent) + "\n")

    def close(self, kill: bool = False) -> None:
        try:
            if not kill and self.proc.stdin is not None:
                self.proc.stdin.write(b"(exit)\n")
                self.proc.stdin.flush()
        except OSError:
            kill = True
        if kill:
            self.proc.kill()
        try:
            self.proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            self.proc.kill()

    def __enter__(self) -> "SolverSession":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


# ---------------------------------------------------------------------------
# Model decoding
# ---------------------------------------------------------------------------

def parse_smt_value(v) -> Value:
    if v == "true":
        return True
    if v == "false":
        return False
    if isinstance(v, str):
        if re.fullmatch(r"-?\d+", v):
            return int(v)
        if re.fullmatch(r"-?\d+\.\d+", v):
            return Fraction(v)
        raise SolverError(f"unparseable model value {v!r}")
    if isinstance(v, list) and v:
        if v[0] == "-" and len(v) == 2:
            inner = parse_smt_value(v[1])
            return -inner  # type: ignore[operator]
        if v[0] == "/" and len(v) == 3:
            num = parse_smt_value(v[1])
            den = parse_smt_value(v[2])
            return Fraction(num) / Fraction(den)  # type: ignore[arg-type]
    raise SolverError(f"unparseable model value {v!r}")


def parse_model_text(text: str) -> dict[str, Value]:
    from .minismt.sexpr import parse_all
    exprs = parse_all(text)
    out: dict[str, Value] = {}

    def visit(e) -> None:
        if isinstance(e, list):
            if len(e) >= 2 and e[0] == "define-fun":
                name = e[1]
                if name.startswith("|") and name.endswith("|"):
                    name = name[1:-1]
                out[name] = parse_smt_value(e[-1])
                return
            if len(e) == 2 and isinstance(e[0], str) and e[0] != "model":
                # (sym value) pair from get-value
                name = e[0]
                if name.startswith("|") and name.endswith("|"):
                    name = name[1:-1]
                try:
                    out[name] = parse_smt_value(e[1])
                    return
                except SolverError:
                    pass
            for x in e:
                visit(x)

    for e in exprs:
        visit(e)
    return out


def decode_model(u: Unrolling, model_text: str,
                 session: SolverSession | None = None
                 ) -> tuple[Trace, Valuation]:
    values = parse_model_text(model_text)

    def lookup(sym: str) -> Value:
        if sym in values:
            return values[sym]
        if session is not None:
            txt = session.get_values([smt_symbol(sym)])
            got = parse_model_text(txt)
            values.update(got)
            if sym in values:
                return values[sym]
        raise SolverError(f"model is missing symbol {sym!r}")

    params: Valuation = {p: lookup(p) for p, _ in u.node.params}
    trace = Trace(states=[])
    inames = u.node.input_names()
    onames = u.node.output_names()
    snames = u.node.state_names()
    trace.states.append({s: lookup(f"{s}@-1") for s in snames})
    for r in range(u.k + 1):
        trace.inputs.append({n: lookup(f"{n}@{r}") for n in inames})
        trace.outputs.append({n: lookup(f"{n}@{r}") for n in onames})
        trace.states.append({s: lookup(f"{s}@{r}") for s in snames})
    return trace, params


def check_agreement(u: Unrolling, trace: Trace, params: Valuation) -> None:
    """Replay the decoded trace on the simulator and demand exact equality.

    This cross-check runs after every satisfiable answer: the SMT model and
    the reference simulator must agree on every output and state, with zero
    tolerance. A mismatch means the encoding is wrong and is a hard error.
    """
    from .node import bind_params, simulate
    node = bind_params(u.node, params) if params else u.node
    assert trace.states is not None
    sim = simulate(node, trace.inputs, record_states=True,
                   initial_state=trace.states[0])
    assert sim.states is not None
    for r in range(len(trace)):
        for name, got in sim.outputs[r].items():
            want = trace.outputs[r][name]
            if got != want or isinstance(got, bool) != isinstance(want, bool):
                raise SolverError(
                    f"model/simulator disagreement at round {r}: "
                    f"{name} = {want!r} in model, {got!r} in simulation")
        for name, got in sim.states[r + 1].items():
            want = trace.states[r + 1][name]
            if got != want or isinstance(got, bool) != isinstance(want, bool):
                raise SolverError(
                    f"model/simulator state disagreement after round {r}: "
                    f"{name} = {want!r} in model, {got!r} in simulation")


# ---------------------------------------------------------------------------
# One-shot script solving (used for property implications)
# ---------------------------------------------------------------------------

@dataclass
class Script:
    decls: list[tuple[str, str]] = field(default_factory=list)
    assertions: list[Expr] = field(default_factory=list)

    def declare(self, name: str, ty: str) -> None:
        self.decls.append((name, ty))

    def assert_(self, e: Expr) -> None:
        self.assertions.append(e)

    def text(self) -> str:
        lines = ["(set-option :produce-models true)", "(set-logic QF_LIRA)"]
        for n, ty in self.decls:
            lines.append(f"(declare-fun {smt_symbol(n)} () {_SORTS[ty]})")
        for a in self.assertions:
            lines.append(f"(assert {expr_to_smt(a, smt_symbol)})")
        lines.append("(check-sat)")
        lines.append("(get-model)")
        return "\n".join(lines) + "\n"


@dataclass
class ScriptResult:
    status: str
    values: dict[str, Value] = field(default_factory=dict)


def solve_script(script: Script, config: SmtConfig | None = None) -> ScriptResult:
    config = config or SmtConfig()
    text = script.text()
    try:
        proc = subprocess.run(config.command, input=text, capture_output=True,
                              text=True, timeout=config.timeout)
    except subprocess.TimeoutExpired:
        return ScriptResult(status="timeout")
    except OSError as exc:
        raise SolverError(f"cannot start solver {config.command}: {exc}")
    out = proc.stdout.strip().splitlines()
    if not out:
        raise SolverError(f"no solver output (stderr: {proc.stderr.strip()!r})")
    status = out[0].strip()
    if status == "sat":
        return ScriptResult(status="sat",
                            values=parse_model_text("\n".join(out[1:])))
    if status in ("unsat", "unknown"):
        return ScriptResult(status=status)
    raise SolverError(f"unexpected solver output: {out[0]!r}")
