"""Stream templates: Constant, Step, Square, RateTransition and Delay.

Templates are ordinary nodes in `stdlib.lus` plus registered parameter
domains. They serve both as concrete input generators and, with rigid
symbolic parameters, as synthesis targets.
"""
from __future__ import annotations

import functools
import importlib.resources
from dataclasses import dataclass

from .ast import (App, Arrow, Expr, Lit, NodeDecl, Param, Pre, SourceProgram,
                  Value, Var, subst_vars, TVAR)
from .errors import ElaborationError, TypeError_
from .node import Node, eval_expr
from .parser import parse_expression, parse_program
from .typecheck import typecheck_node

TEMPLATE_NAMES = ("Constant", "Step", "Square", "RateTransition", "Delay")

# Parameter domains; emitted as side constraints in symbolic synthesis.
TEMPLATE_DOMAINS = {
    "Constant": "true",
    "Step": "s > 0",
    "Square": "t >= 2 and 0 <= p and p < 4*t",
    "RateTransition": "s >= 1",
}


@functools.cache
def _stdlib() -> SourceProgram:
    text = importlib.resources.files("synkit").joinpath("stdlib.lus").read_text()
    return parse_program(text)


def template_decls() -> dict[str, NodeDecl]:
    return {n.name: n for n in _stdlib().nodes}


@dataclass
class Template:
    name: str
    const_params: list[Param]
    value_params: list[Param]
    out_ty: str
    domain: Expr


def get_template(name: str) -> Template:
    if name == "Delay":
        raise ElaborationError("Delay is static-parameter only; use delay_decl")
    decl = template_decls()[name]
    return Template(
        name=name,
        const_params=[p for p in decl.inputs if p.is_const],
        value_params=[p for p in decl.inputs if not p.is_const],
        out_ty=decl.outputs[0].ty,
        domain=parse_expression(TEMPLATE_DOMAINS[name]),
    )


def instantiate_decl(decl: NodeDecl, const_args: list[Expr],
                     value_tys: list[str | None], out_ty: str | None) -> NodeDecl:
    """Clone a (possibly polymorphic) declaration for one call site.

    Const parameters are substituted by the argument expressions; 'a is
    resolved from the value-argument or context types. Literal const
    arguments are checked against the template's domain.
    """
    const_formals = [p for p in decl.inputs if p.is_const]
    value_formals = [p for p in decl.inputs if not p.is_const]
    if len(const_args) != len(const_formals):
        raise ElaborationError(
            f"{decl.name}: expected {len(const_formals)} const arguments")

    elem: str | None = None
    for formal, ty in zip(value_formals, list(value_tys) + [None] * 9):
        if formal.ty == TVAR and ty not in (None, TVAR):
            elem = ty
            break
    if elem is None and decl.outputs[0].ty == TVAR and out_ty not in (None, TVAR):
        elem = out_ty
    for formal, arg in zip(const_formals, const_args):
        if formal.ty == TVAR and elem is None and arg.ty not in (None, TVAR):
            elem = arg.ty

    def res(ty: str) -> str:
        if ty == TVAR:
            if elem is None:
                raise TypeError_(f"{decl.name}: cannot resolve 'a at instantiation")
            return elem
        return ty

    mapping = dict(zip((p.name for p in const_formals), const_args))
    if all(isinstance(a, Lit) for a in const_args) and decl.name in TEMPLATE_DOMAINS:
        dom = parse_expression(TEMPLATE_DOMAINS[decl.name])
        env = {p.name: a.value for p, a in zip(const_formals, const_args)}  # type: ignore[union-attr]
        if not eval_expr(dom, env):
            raise ElaborationError(
                f"{decl.name}: parameters {env} violate the domain "
                f"{TEMPLATE_DOMAINS[decl.name]!r}")

    inst = NodeDecl(
        name=decl.name,
        inputs=[Param(name=p.name, ty=res(p.ty)) for p in value_formals],
        outputs=[Param(name=p.name, ty=res(p.ty)) for p in decl.outputs],
        locals=[Param(name=p.name, ty=res(p.ty)) for p in decl.locals],
        equations=[type(eq)(target=eq.target, rhs=subst_vars(eq.rhs, mapping),
                            line=eq.line) for eq in decl.equations],
    )
    return inst


def delay_decl(d: int, ty: str) -> NodeDecl:
    """Delay <<d>>: d chained unit registers."""
    if d < 1:
        raise ElaborationError(f"Delay requires d >= 1, got {d}")
    from .ast import Equation
    locals_: list[Param] = []
    eqs: list[Equation] = []
    prev = "x"
    for k in range(1, d + 1):
        reg = f"r{k}"
        locals_.append(Param(name=reg, ty=ty))
        eqs.append(Equation(target=reg,
                            rhs=Arrow(left=Var(name="i0"), right=Pre(arg=Var(name=prev)))))
        prev = reg
    eqs.append(Equation(target="Out", rhs=Var(name=prev)))
    return NodeDecl(
        name=f"Delay{d}",
        inputs=[Param(name="i0", ty=ty), Param(name="x", ty=ty)],
        outputs=[Param(name="Out", ty=ty)],
        locals=locals_,
        equations=eqs,
    )


def instantiate(name: str, const_args: list[Value],
                value_args: list["Value | Expr"], out_ty: str | None = None) -> Node:
    """Elaborate a template instance into a closed or open generator node.

    Value arguments may be constants, expressions over free input names,
    or nested template applications (`nest`).
    """
    from .node import elaborate  # local import: avoid cycle
    from .typecheck import typecheck_node

    expr = template_app(name, const_args, value_args)
    decls = template_decls()
    inputs: list[Param] = []
    free = sorted(expr.free_vars())
    target = decls.get(name)
    hint = out_ty
    if hint is None and target is not None and target.outputs[0].ty != TVAR:
        hint = target.outputs[0].ty
    if free and hint is None:
        raise TypeError_(f"{name}: need out_ty to type free inputs {free}")
    for v in free:
        inputs.append(Param(name=v, ty=hint))  # type: ignore[arg-type]
    from .ast import Equation
    wrapper = NodeDecl(
        name=f"{name}Gen",
        inputs=inputs,
        outputs=[Param(name="Out", ty=hint or _lit_ty(value_args, decls, name, out_ty))],
        locals=[],
        equations=[Equation(target="Out", rhs=expr)],
    )
    typecheck_node(wrapper, decls)
    return elaborate(wrapper, dict(decls))


def template_app(name: str, const_args: list[Value],
                 value_args: list["Value | Expr"]) -> App:
    decls = template_decls()
    if name == "Delay":
        if len(const_args) != 1:
            raise ElaborationError("Delay takes one static parameter")
        args = [_as_expr(a) for a in value_args]
        return App(func="Delay", args=args, static_args=[int(const_args[0])])
    if name not in decls:
        raise ElaborationError(f"unknown template {name!r}")
    decl = decls[name]
    args: list[Expr] = []
    it_const = iter(const_args)
    it_val = iter(value_args)
    for p in decl.inputs:
        args.append(Lit(value=next(it_const)) if p.is_const else _as_expr(next(it_val)))
    return App(func=name, args=args)


def nest(name: str, const_args: list[Value],
         value_args: list["Value | Expr"], out_ty: str | None = None) -> Node:
    """Instantiate with generator-valued arguments (nested templates)."""
    return instantiate(name, const_args, value_args, out_ty=out_ty)


def _as_expr(v: "Value | Expr") -> Expr:
    if isinstance(v, Expr):
        return v
    return Lit(value=v)


def _lit_ty(value_args, decls, name, out_ty):
    if out_ty:
        return out_ty
    for v in value_args:
        if isinstance(v, Lit):
            from .ast import type_of_value
            return type_of_value(v.value)
        if not isinstance(v, Expr):
            from .ast import type_of_value
            return type_of_value(v)
        if v.ty:
            return v.ty
    raise TypeError_(f"{name}: cannot infer element type")


def symbolic_params(name: str, elem_ty: str) -> tuple[list[tuple[str, str]], Expr]:
    """Fresh rigid parameter symbols and the domain constraint formula.

    Returns the template's const and value parameters in declaration
    order; value parameters become constant streams during synthesis.
    """
    t = get_template(name)
    params: list[tuple[str, str]] = []
    for p in t.const_params + t.value_params:
        params.append((p.name, elem_ty if p.ty == TVAR else p.ty))
    return params, t.domain


def symbolic_generator(name: str, elem_ty: str, prefix: str = "") -> tuple[Node, Expr]:
    """A generator node whose parameters are rigid symbols, plus its
    domain constraint (over the prefixed parameter names)."""
    from .node import elaborate

    decls = template_decls()
    decl = decls[name]
    params, domain = symbolic_params(name, elem_ty)
    renaming = {n: prefix + n for n, _ in params}

    from .ast import Equation
    wrapper = NodeDecl(
        name=f"{name}Sym",
        inputs=[Param(name=renaming[n], ty=ty, is_const=True) for n, ty in params],
        outputs=[Param(name="Out", ty=elem_ty)],
        locals=[],
        equations=[Equation(target="Out", rhs=App(
            func=name, args=[Var(name=renaming[p.name]) for p in decl.inputs]))],
    )
    typecheck_node(wrapper, decls)
    node = elaborate(wrapper, dict(decls))
    dom = subst_vars(domain, {k: Var(name=v) for k, v in renaming.items()})
    return node, dom
