"""Source-level normalization: flatten `pre` of compound expressions.

`pre E` with a non-variable E gets a fresh local `_pN = E`, so that after
the pass every `pre` is applied to a plain variable. Elaboration relies
on this shape. The pass is idempotent.
"""
from __future__ import annotations

from .ast import (App, Arrow, Binop, Equation, Expr, Ite, Lit, NodeDecl,
                  Param, Pre, SourceProgram, Unop, Var)


def normalize_program(prog: SourceProgram) -> SourceProgram:
    return SourceProgram(nodes=[normalize_node(n) for n in prog.nodes])


def normalize_node(decl: NodeDecl) -> NodeDecl:
    used = {p.name for p in decl.all_params()}
    fresh_locals: list[Param] = []
    fresh_eqs: list[Equation] = []
    counter = [0]

    def fresh(ty: str | None) -> str:
        while True:
            counter[0] += 1
            name = f"_p{counter[0]}"
            if name not in used:
                used.add(name)
                return name

    def walk(e: Expr) -> Expr:
        if isinstance(e, (Lit, Var)):
            return e
        if isinstance(e, Pre):
            arg = walk(e.arg)
            if isinstance(arg, Var):
                return Pre(arg=arg, ty=e.ty)
            name = fresh(arg.ty)
            fresh_locals.append(Param(name=name, ty=arg.ty or "int"))
            fresh_eqs.append(Equation(target=name, rhs=arg))
            return Pre(arg=Var(name=name, ty=arg.ty), ty=e.ty)
        if isinstance(e, Unop):
            return Unop(op=e.op, arg=walk(e.arg), ty=e.ty)
        if isinstance(e, Binop):
            return Binop(op=e.op, left=walk(e.left), right=walk(e.right), ty=e.ty)
        if isinstance(e, Ite):
            return Ite(cond=walk(e.cond), then=walk(e.then), other=walk(e.other), ty=e.ty)
        if isinstance(e, Arrow):
            return Arrow(left=walk(e.left), right=walk(e.right), ty=e.ty)
        if isinstance(e, App):
            return App(func=e.func, args=[walk(a) for a in e.args],
                       static_args=list(e.static_args), ty=e.ty)
        raise TypeError(f"unknown expr {e!r}")

    equations = [Equation(target=eq.target, rhs=walk(eq.rhs), line=eq.line)
                 for eq in decl.equations]
    if not fresh_locals:
        return NodeDecl(name=decl.name, inputs=decl.inputs, outputs=decl.outputs,
                        locals=decl.locals, equations=equations, line=decl.line)
    return NodeDecl(name=decl.name, inputs=decl.inputs, outputs=decl.outputs,
                    locals=decl.locals + fresh_locals,
                    equations=equations + fresh_eqs, line=decl.line)
