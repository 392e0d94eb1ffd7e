"""Node-expression algebra: parallel composition, renaming, Init
replacement, and the combinational translation C(N, e).

`NodeExpr` is the algebraic term language used by proof scripts; it
evaluates to a `Node` given an environment of named nodes. Structural
equality on NodeExprs treats parallel composition as an unordered
multiset, which is what the proof checker needs to match rule shapes.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace as dc_replace
from fractions import Fraction

from .ast import Binop, Expr, Lit, Value, Var, rename_expr, subst_vars, BOOL
from .errors import ElaborationError, ParseError, TypeError_
from .lexer import tokenize
from .node import Node, state_name, _conj
from .parser import TokenStream, parse_expr
from .properties import (SafetyProperty, observer, parse_property_tokens,
                         prime_var)


# ---------------------------------------------------------------------------
# Core operations on Nodes
# ---------------------------------------------------------------------------

def compose(a: Node, b: Node) -> Node:
    """Parallel composition: wiring by name, auto-renamed internals.

    Shared names connect inputs of one side to same-named outputs of the
    other; output sets must be disjoint and the union reaction acyclic.
    """
    clash = set(a.output_names()) & set(b.output_names())
    if clash:
        raise ElaborationError(
            f"compose({a.name}, {b.name}): output clash on {sorted(clash)}")
    a = _freshen_internals(a, _interface_names(b) | _internal_names(b))
    b = _freshen_internals(b, a.all_names())

    for name in _interface_names(a) & _interface_names(b):
        ta, tb = a.var_type(name), b.var_type(name)
        if ta != tb:
            raise ElaborationError(
                f"compose({a.name}, {b.name}): shared wire {name!r} has "
                f"mismatched types {ta}/{tb}")

    out = Node(name=f"{a.name}||{b.name}")
    outs = set(a.output_names()) | set(b.output_names())
    seen: set[str] = set()
    for n, ty in a.inputs + b.inputs:
        if n not in outs and n not in seen:
            out.inputs.append((n, ty))
            seen.add(n)
    out.outputs = a.outputs + b.outputs
    out.states = a.states + b.states
    out.wires = a.wires + b.wires
    pseen: dict[str, str] = {}
    for n, ty in a.params + b.params:
        if n in pseen:
            if pseen[n] != ty:
                raise ElaborationError(
                    f"compose: shared parameter {n!r} has mismatched types")
            continue
        pseen[n] = ty
        out.params.append((n, ty))
    out.defs = {**a.defs, **b.defs}
    out.nexts = {**a.nexts, **b.nexts}
    out.init = _conj(a.init, b.init)
    out.check_causal()
    return out


def compose_all(nodes: list[Node]) -> Node:
    if not nodes:
        raise ElaborationError("empty composition")
    acc = nodes[0]
    for n in nodes[1:]:
        acc = compose(acc, n)
    return acc


def _interface_names(n: Node) -> set[str]:
    return {x for x, _ in n.inputs} | {x for x, _ in n.outputs}


def _internal_names(n: Node) -> set[str]:
    return {x for x, _ in n.states} | {x for x, _ in n.wires}


def _freshen_internals(n: Node, taken: set[str]) -> Node:
    """Rename states/wires that collide with `taken` (implicit renaming)."""
    mapping: dict[str, str] = {}
    used = set(taken) | n.all_names()
    for name in sorted(_internal_names(n)):
        if name in taken:
            k = 2
            while f"{name}.{k}" in used:
                k += 1
            mapping[name] = f"{name}.{k}"
            used.add(mapping[name])
    if not mapping:
        return n
    return _apply_renaming(n, mapping)


def _apply_renaming(n: Node, mapping: dict[str, str]) -> Node:
    def ren_list(group: list[tuple[str, str]]) -> list[tuple[str, str]]:
        return [(mapping.get(x, x), ty) for x, ty in group]

    return dc_replace(
        n,
        inputs=ren_list(n.inputs),
        outputs=ren_list(n.outputs),
        states=ren_list(n.states),
        params=ren_list(n.params),
        wires=ren_list(n.wires),
        defs={mapping.get(k, k): rename_expr(v, mapping) for k, v in n.defs.items()},
        nexts={mapping.get(k, k): rename_expr(v, mapping) for k, v in n.nexts.items()},
        init=rename_expr(n.init, mapping),
        _topo=None,
    )


def rename(n: Node, x: str, y: str) -> Node:
    """N[x := y]: rewrite a declared variable, preserving its kind."""
    if x not in n.all_names():
        raise ElaborationError(f"{n.name}: cannot rename unknown variable {x!r}")
    if y in n.all_names():
        raise ElaborationError(f"{n.name}: rename target {y!r} collides")
    return _apply_renaming(n, {x: y})


def with_init(n: Node, e: Expr) -> Node:
    """N[Init := e]: replace the initial-state predicate."""
    extra = e.free_vars() - set(n.state_names()) - {p for p, _ in n.params}
    if extra:
        raise ElaborationError(
            f"{n.name}: Init predicate mentions non-state variables {sorted(extra)}")
    return dc_replace(n, init=e, _topo=None)


def combinational(n: Node, e: Expr | None = None) -> tuple[Node, Node]:
    """C(N, e): split N into a combinational part and a register part.

    part1 computes outputs and primed next-states from inputs and
    (now free) current states; part2 holds the registers, initialized by
    the state predicate `e` (default: N's own Init) transported onto the
    double-primed register variables.
    """
    if e is None:
        e = n.init
    for s in n.state_names():
        if s not in n.nexts:
            raise ElaborationError(
                f"{n.name}: state {s!r} has no next-value definition")
    if not n.states:
        part2 = Node(name=f"{n.name}_c2")
        return dc_replace(n, name=f"{n.name}_c1"), part2

    extra = e.free_vars() - set(n.state_names()) - {p for p, _ in n.params}
    if extra:
        raise ElaborationError(
            f"{n.name}: state predicate mentions non-state variables {sorted(extra)}")

    part1 = Node(name=f"{n.name}_c1")
    part1.inputs = n.inputs + n.states
    part1.outputs = n.outputs + [(prime_var(x), ty) for x, ty in n.states]
    part1.wires = list(n.wires)
    part1.params = list(n.params)
    part1.defs = dict(n.defs)
    for x, _ in n.states:
        part1.defs[prime_var(x)] = n.nexts[x]
    part1.check_causal()

    part2 = Node(name=f"{n.name}_c2")
    part2.inputs = [(prime_var(x), ty) for x, ty in n.states]
    part2.outputs = list(n.states)
    part2.params = list(n.params)
    reg = {x: state_name(prime_var(x)) for x, _ in n.states}
    part2.states = [(reg[x], ty) for x, ty in n.states]
    for x, ty in n.states:
        part2.defs[x] = Var(name=reg[x], ty=ty)
        part2.nexts[reg[x]] = Var(name=prime_var(x), ty=ty)
    part2.init = subst_vars(e, {x: Var(name=r) for x, r in reg.items()})
    part2.check_causal()
    return part1, part2


def combi(n: Node, e: Expr | None = None) -> Node:
    """compose(*combinational(n, e)), named C(n)."""
    part1, part2 = combinational(n, e)
    if not n.states:
        return dc_replace(part1, name=f"C({n.name})")
    out = compose(part1, part2)
    out.name = f"C({n.name})"
    return out


# ---------------------------------------------------------------------------
# NodeExpr terms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NodeExpr:
    pass


@dataclass(frozen=True)
class NamedNode(NodeExpr):
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class RawNode(NodeExpr):
    """Programmatic escape hatch: wrap an already-built Node."""
    node: Node = field(compare=False)
    label: str = ""

    def __str__(self) -> str:
        return self.label or self.node.name


@dataclass(frozen=True)
class Par(NodeExpr):
    items: tuple[NodeExpr, ...]

    def __str__(self) -> str:
        return " || ".join(_paren(i) for i in self.items)


@dataclass(frozen=True)
class Rename(NodeExpr):
    inner: NodeExpr
    pairs: tuple[tuple[str, str], ...]

    def __str__(self) -> str:
        body = ", ".join(f"{x} := {y}" for x, y in self.pairs)
        return f"{_paren(self.inner)}[{body}]"


@dataclass(frozen=True)
class WithInit(NodeExpr):
    inner: NodeExpr
    pred: Expr = field(compare=False)

    def __str__(self) -> str:
        return f"{_paren(self.inner)}[init := {self.pred}]"


@dataclass(frozen=True)
class Combi(NodeExpr):
    inner: NodeExpr
    pred: Expr | None = field(compare=False, default=None)

    def __str__(self) -> str:
        if self.pred is None:
            return f"C({self.inner}, init)"
        return f"C({self.inner}, {self.pred})"


@dataclass(frozen=True)
class Observer(NodeExpr):
    prop: SafetyProperty

    def __str__(self) -> str:
        return f"obs({self.prop})"


@dataclass(frozen=True)
class TemplateInst(NodeExpr):
    template: str
    args: tuple = ()

    def __str__(self) -> str:
        parts = []
        for a in self.args:
            if isinstance(a, NodeExpr):
                parts.append(str(a))
            elif isinstance(a, Fraction):
                from .ast import format_real
                parts.append(format_real(a))
            elif isinstance(a, bool):
                parts.append("true" if a else "false")
            elif isinstance(a, str):
                parts.append(a)
            else:
                parts.append(str(a))
        return f"{self.template}({', '.join(parts)})"


def _paren(e: NodeExpr) -> str:
    if isinstance(e, Par):
        return f"({e})"
    return str(e)


# ---------------------------------------------------------------------------
# Evaluation of NodeExprs to Nodes
# ---------------------------------------------------------------------------

@dataclass
class EvalContext:
    """Environment for NodeExpr evaluation.

    `env` maps node names to elaborated Nodes; `signature` gives types of
    observable variables so observers can be typed; `_obs_count` numbers
    observer ok-wires apart.
    """
    env: dict[str, Node] = field(default_factory=dict)
    signature: dict[str, str] = field(default_factory=dict)
    _obs_count: int = 0

    def fresh_ok(self) -> str:
        self._obs_count += 1
        return "ok" if self._obs_count == 1 else f"ok{self._obs_count}"


def eval_nodeexpr(expr: NodeExpr, ctx: EvalContext) -> Node:
    if isinstance(expr, NamedNode):
        node = ctx.env.get(expr.name)
        if node is None:
            raise ElaborationError(f"unknown node {expr.name!r}")
        return node
    if isinstance(expr, RawNode):
        return expr.node
    if isinstance(expr, Par):
        return compose_all([eval_nodeexpr(i, ctx) for i in expr.items])
    if isinstance(expr, Rename):
        if isinstance(expr.inner, TemplateInst):
            # `Step(2,0,9)[Out := In]`: the wiring target's declared type
            # fixes the template's element type.
            hint = None
            for x, y in expr.pairs:
                if x == "Out" and y in ctx.signature:
                    hint = ctx.signature[y]
            node = _eval_template(expr.inner, ctx, hint=hint)
        else:
            node = eval_nodeexpr(expr.inner, ctx)
        for x, y in expr.pairs:
            node = rename(node, x, y)
        return node
    if isinstance(expr, WithInit):
        return with_init(eval_nodeexpr(expr.inner, ctx), expr.pred)
    if isinstance(expr, Combi):
        return combi(eval_nodeexpr(expr.inner, ctx), expr.pred)
    if isinstance(expr, Observer):
        return observer(expr.prop, ctx.signature, ok_name=ctx.fresh_ok())
    if isinstance(expr, TemplateInst):
        return _eval_template(expr, ctx)
    raise ElaborationError(f"cannot evaluate {expr!r}")


def _eval_template(expr: TemplateInst, ctx: EvalContext,
                   hint: str | None = None) -> Node:
    from .templates import template_decls
    from .node import elaborate
    from .ast import Equation, NodeDecl, Param
    from .typecheck import typecheck_node

    decls = template_decls()
    if hint is None:
        hint = _template_out_ty(expr, decls)
    app = _template_expr(expr, hint)
    free = sorted(app.free_vars())
    inputs = [Param(name=v, ty=ctx.signature.get(v, hint)) for v in free]
    wrapper = NodeDecl(
        name=f"{expr.template}Gen",
        inputs=inputs,
        outputs=[Param(name="Out", ty=hint)],
        locals=[],
        equations=[Equation(target="Out", rhs=app)],
    )
    typecheck_node(wrapper, decls)
    return elaborate(wrapper, dict(decls))


def _template_expr(expr: TemplateInst, hint: str | None = None):
    """Build the nested application expression for a template instance.

    `hint` is the resolved element type; int literals in 'a positions are
    coerced to rationals when the element type is real.
    """
    from .templates import template_decls
    from .ast import App, TVAR, REAL

    decls = template_decls()
    if expr.template == "Delay":
        if len(expr.args) < 1 or not isinstance(expr.args[0], int):
            raise ElaborationError("Delay needs a leading static int parameter")
        d = expr.args[0]
        args = [_arg_to_expr(a, TVAR, hint) for a in expr.args[1:]]
        return App(func="Delay", args=args, static_args=[d])
    if expr.template not in decls:
        raise ElaborationError(f"unknown template {expr.template!r}")
    decl = decls[expr.template]
    if len(expr.args) != len(decl.inputs):
        raise ElaborationError(
            f"{expr.template}: expected {len(decl.inputs)} arguments, "
            f"got {len(expr.args)}")
    args = [_arg_to_expr(a, p.ty, hint) for a, p in zip(expr.args, decl.inputs)]
    return App(func=expr.template, args=args)


def _arg_to_expr(a, formal_ty: str, hint: str | None):
    from .ast import TVAR, REAL
    if isinstance(a, TemplateInst):
        return _template_expr(a, hint if formal_ty == TVAR else None)
    if isinstance(a, str):
        return Var(name=a)
    if (formal_ty == TVAR and hint == REAL and isinstance(a, int)
            and not isinstance(a, bool)):
        a = Fraction(a)
    return Lit(value=a)


def _template_out_ty(expr: TemplateInst, decls) -> str:
    from .ast import TVAR, type_of_value
    decl = decls.get(expr.template)
    if decl is not None and decl.outputs[0].ty != TVAR:
        return decl.outputs[0].ty
    formals = decl.inputs if decl is not None else []
    for idx, a in enumerate(expr.args):
        formal_ty = formals[idx].ty if idx < len(formals) else TVAR
        if formal_ty != TVAR:
            continue
        if isinstance(a, TemplateInst):
            return _template_out_ty(a, decls)
        if not isinstance(a, str):
            return type_of_value(a)
    if expr.template == "Delay":
        for a in expr.args[1:]:
            if isinstance(a, TemplateInst):
                return _template_out_ty(a, decls)
            if not isinstance(a, str):
                return type_of_value(a)
    raise TypeError_(f"{expr.template}: cannot infer element type")


# ---------------------------------------------------------------------------
# Structural equality modulo Par flattening / commutativity
# ---------------------------------------------------------------------------

def flatten_par(expr: NodeExpr) -> list[NodeExpr]:
    if isinstance(expr, Par):
        out: list[NodeExpr] = []
        for i in expr.items:
            out.extend(flatten_par(i))
        return out
    return [expr]


def canon_key(expr: NodeExpr) -> tuple:
    if isinstance(expr, Par):
        return ("par", tuple(sorted(canon_key(i) for i in flatten_par(expr))))
    if isinstance(expr, NamedNode):
        return ("named", expr.name)
    if isinstance(expr, RawNode):
        return ("raw", expr.label or expr.node.name, id(expr.node))
    if isinstance(expr, Rename):
        return ("rename", canon_key(expr.inner), expr.pairs)
    if isinstance(expr, WithInit):
        return ("withinit", canon_key(expr.inner), str(expr.pred))
    if isinstance(expr, Combi):
        pred = "init" if expr.pred is None else str(expr.pred)
        return ("combi", canon_key(expr.inner), pred)
    if isinstance(expr, Observer):
        return ("obs", tuple(sorted(str(c) for c in expr.prop.conjuncts())))
    if isinstance(expr, TemplateInst):
        return ("tmpl", expr.template,
                tuple(canon_key(a) if isinstance(a, NodeExpr) else ("lit", repr(a))
                      for a in expr.args))
    raise TypeError_(f"unknown NodeExpr {expr!r}")


def exprs_equal(a: NodeExpr, b: NodeExpr) -> bool:
    return canon_key(a) == canon_key(b)


def par_of(items: list[NodeExpr]) -> NodeExpr:
    flat: list[NodeExpr] = []
    for i in items:
        flat.extend(flatten_par(i))
    if len(flat) == 1:
        return flat[0]
    return Par(items=tuple(flat))


def par_minus(whole: NodeExpr, part: NodeExpr) -> list[NodeExpr] | None:
    """Components of `whole` left over after removing `part`'s components
    (multiset difference); None when `part` is not a sub-multiset."""
    rest = flatten_par(whole)
    for p in flatten_par(part):
        for i, r in enumerate(rest):
            if canon_key(p) == canon_key(r):
                del rest[i]
                break
        else:
            return None
    return rest


# ---------------------------------------------------------------------------
# Bounded implementation checking
# ---------------------------------------------------------------------------

def _current_round_closure(node: Node, name: str) -> set[str]:
    """All variables the current-round value of `name` transitively
    depends on (through the reaction definitions, not across registers)."""
    seen: set[str] = set()
    work = [name]
    while work:
        v = work.pop()
        e = node.defs.get(v)
        if e is None:
            continue
        for w in e.free_vars():
            if w not in seen:
                seen.add(w)
                work.append(w)
    return seen


def check_impl_bounded(m, n, k: int, ctx: "EvalContext | None" = None,
                       config=None):
    """Bounded check of the implementation relation m |= n.

    Interface containment (outputs of n among m's outputs; inputs of n
    visible in m) and dependency preservation (every current-round
    input-to-output dependency of n also present, transitively, in m) are
    checked syntactically and definite mismatches reported; the trace
    inclusion itself is checked up to k rounds by the engine. An observer
    right-hand side is discharged as a bounded safety proof. Verdict
    `unsupported` is returned for nondeterministic right-hand sides.
    """
    from .engine import Verdict, prove_safety
    from .engine import check_impl_bounded as engine_check

    ctx = ctx or EvalContext()
    node_m = m if isinstance(m, Node) else eval_nodeexpr(m, ctx)
    if isinstance(n, Observer):
        return prove_safety(node_m, n.prop, k, config)
    node_n = n if isinstance(n, Node) else eval_nodeexpr(n, ctx)

    m_names = {x: ty for x, ty in node_m.inputs + node_m.outputs}
    for name, ty in node_n.outputs:
        if dict(node_m.outputs).get(name) != ty:
            return Verdict(
                status="counterexample",
                detail=f"output {name}:{ty} of {node_n.name} is not an "
                       f"output of {node_m.name}")
    for name, ty in node_n.inputs:
        if m_names.get(name) != ty:
            return Verdict(
                status="counterexample",
                detail=f"input {name}:{ty} of {node_n.name} is not visible "
                       f"in {node_m.name}")
    n_inputs = set(node_n.input_names())
    for out, _ in node_n.outputs:
        need = _current_round_closure(node_n, out) & n_inputs
        have = _current_round_closure(node_m, out)
        missing = need - have
        if missing:
            return Verdict(
                status="counterexample",
                detail=f"dependency of {out} on {sorted(missing)} is not "
                       f"preserved by {node_m.name}")
    return engine_check(node_m, node_n, k, config)


# ---------------------------------------------------------------------------
# Textual NodeExpr syntax (proof scripts)
# ---------------------------------------------------------------------------

def parse_nodeexpr(text: str) -> NodeExpr:
    ts = TokenStream(tokenize(text))
    e = parse_nodeexpr_tokens(ts)
    ts.eat("eof")
    return e


def parse_nodeexpr_tokens(ts: TokenStream) -> NodeExpr:
    items = [_parse_ne_postfix(ts)]
    while ts.try_eat("op", "||"):
        items.append(_parse_ne_postfix(ts))
    return par_of(items)


def _parse_ne_postfix(ts: TokenStream) -> NodeExpr:
    e = _parse_ne_atom(ts)
    while ts.try_eat("op", "["):
        if ts.at("kw", "init"):
            ts.next()
            ts.eat("op", ":=")
            pred = parse_expr(ts)
            ts.eat("op", "]")
            e = WithInit(inner=e, pred=pred)
            continue
        pairs: list[tuple[str, str]] = []
        while True:
            x = ts.eat("id").text
            ts.eat("op", ":=")
            y = ts.eat("id").text
            pairs.append((x, y))
            if not ts.try_eat("op", ","):
                break
        ts.eat("op", "]")
        e = Rename(inner=e, pairs=tuple(pairs))
    return e


def _parse_ne_atom(ts: TokenStream) -> NodeExpr:
    from .templates import TEMPLATE_NAMES

    if ts.try_eat("op", "("):
        e = parse_nodeexpr_tokens(ts)
        ts.eat("op", ")")
        return e
    if ts.at("kw", "obs"):
        ts.next()
        ts.eat("op", "(")
        prop = parse_property_tokens(ts)
        ts.eat("op", ")")
        return Observer(prop=prop)
    if ts.at("id") and ts.peek().text == "C" and ts.peek(1).text == "(":
        ts.next()
        ts.eat("op", "(")
        inner = parse_nodeexpr_tokens(ts)
        pred: Expr | None = None
        if ts.try_eat("op", ","):
            if ts.at("kw", "init"):
                ts.next()
            else:
                pred = parse_expr(ts)
        ts.eat("op", ")")
        return Combi(inner=inner, pred=pred)
    tok = ts.eat("id")
    name = tok.text
    if name in TEMPLATE_NAMES and ts.at("op", "("):
        return _parse_template_inst(ts, name)
    return NamedNode(name=name)


def _parse_template_inst(ts: TokenStream, name: str) -> TemplateInst:
    from .templates import TEMPLATE_NAMES
    ts.eat("op", "(")
    args: list = []
    if not ts.at("op", ")"):
        while True:
            args.append(_parse_template_arg(ts))
            if not ts.try_eat("op", ","):
                break
    ts.eat("op", ")")
    return TemplateInst(template=name, args=tuple(args))


def _parse_template_arg(ts: TokenStream):
    from .templates import TEMPLATE_NAMES
    neg = ts.try_eat("op", "-") is not None
    if ts.at("int"):
        v = int(ts.next().text)
        return -v if neg else v
    if ts.at("real"):
        v = Fraction(ts.next().text)
        return -v if neg else v
    if neg:
        raise ts.error("expected a numeric template argument after '-'")
    if ts.at("kw", "true") or ts.at("kw", "false"):
        return ts.next().text == "true"
    tok = ts.eat("id")
    if tok.text in TEMPLATE_NAMES and ts.at("op", "("):
        return _parse_template_inst(ts, tok.text)
    return tok.text
