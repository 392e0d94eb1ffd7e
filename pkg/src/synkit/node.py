"""Synchronous nodes: elaboration of declarations and deterministic simulation.

A `Node` is the Mealy-machine form (I, O, S, Init, React): React is split
into `defs` (current-round values for outputs and internal wires, acyclic)
and `nexts` (one next-value expression per state variable). `params` hold
rigid symbolic constants; a node with unbound params cannot be simulated,
only encoded.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction

from .ast import (App, Arrow, Binop, Expr, Ite, Lit, NodeDecl, Param, Pre,
                  SourceProgram, Unop, Var, default_value, subst_vars,
                  BOOL, INT, REAL)
from .errors import ElaborationError, SimulationError
from .normalize import normalize_node
from .typecheck import typecheck_node
from .values import Trace, Valuation


@dataclass
class Node:
    name: str
    inputs: list[tuple[str, str]] = field(default_factory=list)
    outputs: list[tuple[str, str]] = field(default_factory=list)
    states: list[tuple[str, str]] = field(default_factory=list)
    params: list[tuple[str, str]] = field(default_factory=list)
    wires: list[tuple[str, str]] = field(default_factory=list)
    defs: dict[str, Expr] = field(default_factory=dict)
    nexts: dict[str, Expr] = field(default_factory=dict)
    init: Expr = field(default_factory=lambda: Lit(value=True))
    _topo: list[str] | None = field(default=None, repr=False, compare=False)

    # -- signature helpers ------------------------------------------------

    def input_names(self) -> list[str]:
        return [n for n, _ in self.inputs]

    def output_names(self) -> list[str]:
        return [n for n, _ in self.outputs]

    def state_names(self) -> list[str]:
        return [n for n, _ in self.states]

    def var_type(self, name: str) -> str:
        for group in (self.inputs, self.outputs, self.states, self.params, self.wires):
            for n, ty in group:
                if n == name:
                    return ty
        raise KeyError(name)

    def all_names(self) -> set[str]:
        return {n for group in (self.inputs, self.outputs, self.states,
                                self.params, self.wires) for n, _ in group}

    def is_closed(self) -> bool:
        return not self.inputs and not self.params

    # -- init handling ----------------------------------------------------

    def init_point(self) -> Valuation | None:
        """Extract a point valuation from Init when it is a conjunction of
        equalities `state = literal`; None when Init is a proper set."""
        point: Valuation = {}
        if not _collect_point(self.init, point):
            return None
        if set(point) != set(self.state_names()):
            return None
        return point

    def is_deterministic(self) -> bool:
        return self.init_point() is not None

    # -- structural updates -----------------------------------------------

    def topo_order(self) -> list[str]:
        if self._topo is None:
            self._topo = _topo_sort(self)
        return self._topo

    def check_causal(self) -> None:
        self.topo_order()


def _collect_point(e: Expr, point: Valuation) -> bool:
    if isinstance(e, Lit) and e.value is True:
        return True
    if isinstance(e, Binop) and e.op == "and":
        return _collect_point(e.left, point) and _collect_point(e.right, point)
    if isinstance(e, Binop) and e.op == "=":
        lhs, rhs = e.left, e.right
        if isinstance(rhs, Var) and isinstance(lhs, Lit):
            lhs, rhs = rhs, lhs
        if isinstance(lhs, Var) and isinstance(rhs, Lit):
            if lhs.name in point and point[lhs.name] != rhs.value:
                return False
            point[lhs.name] = rhs.value
            return True
    return False


def point_to_expr(point: Valuation, types: dict[str, str] | None = None) -> Expr:
    """Conjunction of equalities for a state point."""
    conj: Expr = Lit(value=True)
    first = True
    for name in sorted(point):
        v = point[name]
        eq = Binop(op="=", left=Var(name=name), right=Lit(value=v))
        conj = eq if first else Binop(op="and", left=conj, right=eq)
        first = False
    return conj


def _topo_sort(node: Node) -> list[str]:
    defined = set(node.defs)
    color: dict[str, int] = {}
    order: list[str] = []
    stack: list[str] = []

    def visit(name: str) -> None:
        c = color.get(name, 0)
        if c == 2:
            return
        if c == 1:
            cycle = stack[stack.index(name):] + [name]
            raise ElaborationError(
                f"{node.name}: causality cycle: {' -> '.join(cycle)}")
        color[name] = 1
        stack.append(name)
        for dep in sorted(node.defs[name].free_vars()):
            if dep in defined:
                visit(dep)
        stack.pop()
        color[name] = 2
        order.append(name)

    for name in sorted(defined):
        visit(name)
    return order


# ---------------------------------------------------------------------------
# Expression evaluation
# ---------------------------------------------------------------------------

def eval_expr(e: Expr, env: Valuation) -> "bool | int | Fraction":
    if isinstance(e, Lit):
        return e.value
    if isinstance(e, Var):
        try:
            return env[e.name]
        except KeyError:
            raise SimulationError(f"unbound variable {e.name!r} during evaluation")
    if isinstance(e, Unop):
        if e.op == "not":
            return not eval_expr(e.arg, env)
        if e.op == "-":
            return -eval_expr(e.arg, env)
        raise SimulationError(f"unknown unary {e.op!r}")
    if isinstance(e, Binop):
        op = e.op
        if op == "and":
            return bool(eval_expr(e.left, env)) and bool(eval_expr(e.right, env))
        if op == "or":
            return bool(eval_expr(e.left, env)) or bool(eval_expr(e.right, env))
        if op == "=>":
            return (not eval_expr(e.left, env)) or bool(eval_expr(e.right, env))
        l = eval_expr(e.left, env)
        r = eval_expr(e.right, env)
        if op == "xor":
            return bool(l) != bool(r)
        if op == "=":
            return l == r
        if op == "<>":
            return l != r
        if op == "<":
            return l < r
        if op == "<=":
            return l <= r
        if op == ">":
            return l > r
        if op == ">=":
            return l >= r
        if op == "+":
            return l + r
        if op == "-":
            return l - r
        if op == "*":
            return l * r
        if op == "/":
            if r == 0:
                raise SimulationError("division by zero")
            return Fraction(l) / Fraction(r)
        if op == "div":
            # Euclidean division, matching SMT-LIB Ints semantics.
            if r == 0:
                raise SimulationError("division by zero")
            return (l - l % abs(r)) // r
        if op == "mod":
            if r == 0:
                raise SimulationError("division by zero")
            return l % abs(r)
        raise SimulationError(f"unknown operator {op!r}")
    if isinstance(e, Ite):
        if eval_expr(e.cond, env):
            return eval_expr(e.then, env)
        return eval_expr(e.other, env)
    raise SimulationError(f"cannot evaluate {e!r} (unelaborated form?)")


# ---------------------------------------------------------------------------
# Elaboration
# ---------------------------------------------------------------------------

NodeEnv = dict[str, "Node | NodeDecl"]


def state_name(var: str) -> str:
    """Name of the state register holding `pre var`."""
    if "." in var:
        prefix, base = var.rsplit(".", 1)
        return f"{prefix}.pre_{base}"
    return f"pre_{var}"


_INIT_FLAG = "_init"


def elaborate(decl: NodeDecl, env: NodeEnv | None = None) -> Node:
    """Turn a typed, normalized declaration into a Node.

    Node applications are inlined with instance-prefixed internal names;
    `pre x` becomes a state register; `e1 -> e2` is folded into Init when
    it guards a single `pre` register with a literal, and otherwise uses a
    boolean first-round flag.
    """
    env = env or {}
    decl = normalize_node(decl)

    node = Node(name=decl.name)
    node.inputs = [(p.name, p.ty) for p in decl.inputs if not p.is_const]
    node.params = [(p.name, p.ty) for p in decl.inputs if p.is_const]
    node.outputs = [(p.name, p.ty) for p in decl.outputs]
    node.wires = [(p.name, p.ty) for p in decl.locals]

    counters: dict[str, int] = {}
    targets = {eq.target for eq in decl.equations}
    for p in decl.outputs + decl.locals:
        if p.name not in targets:
            raise ElaborationError(f"{decl.name}: missing equation for {p.name!r}")

    for eq in decl.equations:
        node.defs[eq.target] = _inline_apps(eq.rhs, node, env, counters)

    _introduce_registers(node)
    node.check_causal()
    return node


def elaborate_program(prog: SourceProgram, extra: NodeEnv | None = None,
                      typecheck_first: bool = True) -> dict[str, Node]:
    """Elaborate every node of a program, in declaration order."""
    from .templates import template_decls  # local import: avoid cycle

    env: NodeEnv = dict(template_decls())
    if extra:
        env.update(extra)
    decls = {n.name: n for n in prog.nodes}
    out: dict[str, Node] = {}
    for decl in prog.nodes:
        if typecheck_first:
            known = {k: v for k, v in env.items() if isinstance(v, NodeDecl)}
            known.update({k: v for k, v in decls.items()})
            typecheck_node(decl, known)
        node = elaborate(decl, env)
        env[decl.name] = node
        out[decl.name] = node
    return out


def _inline_apps(e: Expr, node: Node, env: NodeEnv, counters: dict[str, int]) -> Expr:
    if isinstance(e, (Lit, Var)):
        return e
    if isinstance(e, Unop):
        return Unop(op=e.op, arg=_inline_apps(e.arg, node, env, counters), ty=e.ty)
    if isinstance(e, Binop):
        return Binop(op=e.op, left=_inline_apps(e.left, node, env, counters),
                     right=_inline_apps(e.right, node, env, counters), ty=e.ty)
    if isinstance(e, Ite):
        return Ite(cond=_inline_apps(e.cond, node, env, counters),
                   then=_inline_apps(e.then, node, env, counters),
                   other=_inline_apps(e.other, node, env, counters), ty=e.ty)
    if isinstance(e, Pre):
        return Pre(arg=_inline_apps(e.arg, node, env, counters), ty=e.ty)
    if isinstance(e, Arrow):
        return Arrow(left=_inline_apps(e.left, node, env, counters),
                     right=_inline_apps(e.right, node, env, counters), ty=e.ty)
    if isinstance(e, App):
        args = [_inline_apps(a, node, env, counters) for a in e.args]
        return _inline_one(e, args, node, env, counters)
    raise ElaborationError(f"cannot elaborate {e!r}")


def _inline_one(app: App, args: list[Expr], node: Node, env: NodeEnv,
                counters: dict[str, int]) -> Expr:
    from .templates import delay_decl, instantiate_decl  # avoid import cycle

    if app.func == "Delay":
        ty = app.ty or args[1].ty or REAL
        callee = elaborate(delay_decl(app.static_args[0], ty), env)
        value_args = args
    else:
        target = env.get(app.func)
        if target is None:
            raise ElaborationError(f"{node.name}: unbound node {app.func!r}")
        if isinstance(target, NodeDecl):
            const_formals = [p for p in target.inputs if p.is_const]
            if const_formals or any(p.ty == "'a" for p in target.all_params() + target.outputs):
                const_args: list[Expr] = []
                value_args = []
                for formal, arg in zip(target.inputs, args):
                    (const_args if formal.is_const else value_args).append(arg)
                inst = instantiate_decl(target, const_args,
                                        [a.ty for a in value_args], app.ty)
                callee = elaborate(inst, env)
            else:
                callee = elaborate(target, env)
                value_args = args
        else:
            callee = target
            value_args = args
            if callee.params:
                raise ElaborationError(
                    f"{node.name}: node {app.func!r} has unbound const parameters")

    counters[app.func] = counters.get(app.func, 0) + 1
    prefix = f"{app.func}{counters[app.func]}."

    ren = {name: prefix + name for name in callee.all_names()}
    for name, ty in callee.inputs:
        node.wires.append((ren[name], ty))
    for name, ty in callee.outputs:
        node.wires.append((ren[name], ty))
    for name, ty in callee.wires:
        node.wires.append((ren[name], ty))
    for name, ty in callee.states:
        node.states.append((ren[name], ty))
    ren_exprs = {k: Var(name=v) for k, v in ren.items()}
    for (formal, _), arg in zip(callee.inputs, value_args):
        node.defs[ren[formal]] = arg
    for tgt, rhs in callee.defs.items():
        node.defs[ren[tgt]] = subst_vars(rhs, ren_exprs)
    for tgt, rhs in callee.nexts.items():
        node.nexts[ren[tgt]] = subst_vars(rhs, ren_exprs)
    node.init = _conj(node.init, subst_vars(callee.init, ren_exprs))

    out_name, out_ty = callee.outputs[0]
    return Var(name=ren[out_name], ty=out_ty)


def _conj(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Lit) and a.value is True:
        return b
    if isinstance(b, Lit) and b.value is True:
        return a
    return Binop(op="and", left=a, right=b)


def _introduce_registers(node: Node) -> None:
    """Replace `pre v` / `e1 -> e2` by state registers and the init flag."""
    # Scan occurrences of `pre v`: which are guarded as `lit -> pre v`?
    guarded: dict[str, set] = {}
    unguarded: set[str] = set()

    def scan(e: Expr) -> None:
        if isinstance(e, Arrow) and isinstance(e.left, Lit) and isinstance(e.right, Pre):
            v = e.right.arg.name  # type: ignore[union-attr]
            guarded.setdefault(v, set()).add(
                (e.left.value, type(e.left.value).__name__))
            return
        if isinstance(e, Pre):
            unguarded.add(e.arg.name)  # type: ignore[union-attr]
            return
        for child in _children(e):
            scan(child)

    for rhs in node.defs.values():
        scan(rhs)

    foldable: dict[str, Expr] = {}
    for v, lits in guarded.items():
        if v not in unguarded and len(lits) == 1:
            (val, _), = lits
            foldable[v] = Lit(value=val)

    pre_vars: dict[str, str] = {}  # source var -> register name
    uses_flag = [False]
    types = {n: ty for grp in (node.inputs, node.outputs, node.wires, node.params)
             for n, ty in grp}

    def register(v: str) -> str:
        if v not in pre_vars:
            reg = state_name(v)
            pre_vars[v] = reg
            node.states.append((reg, types[v]))
            node.nexts[reg] = Var(name=v, ty=types[v])
        return pre_vars[v]

    def rewrite(e: Expr) -> Expr:
        if isinstance(e, Lit):
            return e
        if isinstance(e, Var):
            return e
        if isinstance(e, Pre):
            assert isinstance(e.arg, Var), "normalization must flatten pre"
            return Var(name=register(e.arg.name), ty=e.ty)
        if isinstance(e, Arrow):
            if (isinstance(e.left, Lit) and isinstance(e.right, Pre)
                    and e.right.arg.name in foldable):  # type: ignore[union-attr]
                return rewrite(e.right)
            uses_flag[0] = True
            return Ite(cond=Var(name=_INIT_FLAG, ty=BOOL),
                       then=rewrite(e.left), other=rewrite(e.right), ty=e.ty)
        if isinstance(e, Unop):
            return Unop(op=e.op, arg=rewrite(e.arg), ty=e.ty)
        if isinstance(e, Binop):
            return Binop(op=e.op, left=rewrite(e.left), right=rewrite(e.right), ty=e.ty)
        if isinstance(e, Ite):
            return Ite(cond=rewrite(e.cond), then=rewrite(e.then),
                       other=rewrite(e.other), ty=e.ty)
        raise ElaborationError(f"unexpected form after inlining: {e!r}")

    node.defs = {k: rewrite(v) for k, v in node.defs.items()}

    inits: list[tuple[str, Expr]] = []
    for v, reg in pre_vars.items():
        val = foldable.get(v)
        if val is None:
            val = Lit(value=default_value(types[v]))
        inits.append((reg, val))
    if uses_flag[0]:
        node.states.append((_INIT_FLAG, BOOL))
        node.nexts[_INIT_FLAG] = Lit(value=False)
        inits.append((_INIT_FLAG, Lit(value=True)))

    init = node.init
    for reg, val in inits:
        init = _conj(init, Binop(op="=", left=Var(name=reg), right=val))
    node.init = init


def _children(e: Expr) -> list[Expr]:
    if isinstance(e, Unop):
        return [e.arg]
    if isinstance(e, Binop):
        return [e.left, e.right]
    if isinstance(e, Ite):
        return [e.cond, e.then, e.other]
    if isinstance(e, Arrow):
        return [e.left, e.right]
    if isinstance(e, Pre):
        return [e.arg]
    if isinstance(e, App):
        return list(e.args)
    return []


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------

def bind_params(node: Node, values: Valuation) -> Node:
    """Substitute rigid parameter symbols with literal values."""
    missing = [n for n, _ in node.params if n not in values]
    if missing:
        raise SimulationError(f"unbound parameters: {', '.join(missing)}")
    mapping = {n: Lit(value=values[n]) for n, _ in node.params}
    return replace(
        node,
        params=[],
        defs={k: subst_vars(v, mapping) for k, v in node.defs.items()},
        nexts={k: subst_vars(v, mapping) for k, v in node.nexts.items()},
        init=subst_vars(node.init, mapping),
        _topo=None,
    )


def step(node: Node, state: Valuation, inputs: Valuation) -> tuple[Valuation, Valuation]:
    env: Valuation = dict(state)
    env.update(inputs)
    for name in node.topo_order():
        env[name] = eval_expr(node.defs[name], env)
    out = {n: env[n] for n, _ in node.outputs}
    nxt = {n: eval_expr(node.nexts[n], env) for n, _ in node.states}
    return out, nxt


def simulate(node: Node, inputs: list[Valuation], record_states: bool = False,
             initial_state: Valuation | None = None) -> Trace:
    if node.params:
        raise SimulationError(
            f"{node.name}: cannot simulate with unbound parameters")
    state = dict(initial_state) if initial_state is not None else node.init_point()
    if state is None:
        raise SimulationError(
            f"{node.name}: nondeterministic Init; simulation needs a point")
    trace = Trace(states=[dict(state)] if record_states else None)
    for r, i in enumerate(inputs):
        try:
            out, state = step(node, state, i)
        except SimulationError as exc:
            raise SimulationError(str(exc), round_index=r) from exc
        trace.inputs.append(dict(i))
        trace.outputs.append(out)
        if record_states:
            trace.states.append(dict(state))
    return trace


def record_state_at(node: Node, inputs: list[Valuation], round_index: int) -> Valuation:
    """State after the reaction of `round_index` (s_round of the execution)."""
    if not 0 <= round_index < len(inputs):
        raise SimulationError(f"round {round_index} out of range (have {len(inputs)} inputs)")
    trace = simulate(node, inputs[: round_index + 1], record_states=True)
    assert trace.states is not None
    return trace.states[-1]
