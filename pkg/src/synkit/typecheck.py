"""Name resolution and type checking over parsed programs."""
from __future__ import annotations

from .ast import (App, Arrow, Binop, Expr, Ite, Lit, NodeDecl, Pre,
                  SourceProgram, Unop, Var, BOOL, INT, REAL, TVAR,
                  type_of_value)
from .errors import TypeError_

_NUMERIC = (INT, REAL)


def typecheck(prog: SourceProgram, extra_nodes: dict[str, NodeDecl] | None = None) -> SourceProgram:
    """Check every node in-place and return the program.

    `extra_nodes` supplies callable declarations that live outside the
    program text (the template standard library).
    """
    env: dict[str, NodeDecl] = dict(extra_nodes or {})
    for decl in prog.nodes:
        typecheck_node(decl, env)
        env[decl.name] = decl
    return prog


def typecheck_node(decl: NodeDecl, nodes: dict[str, NodeDecl]) -> None:
    vars_: dict[str, str] = {}
    for p in decl.all_params():
        if p.name in vars_:
            raise TypeError_(f"{decl.name}: multiply-declared variable {p.name!r}")
        if p.name in nodes or p.name == decl.name:
            raise TypeError_(f"{decl.name}: variable {p.name!r} shadows a node name")
        vars_[p.name] = p.ty
    consts = {p.name for p in decl.inputs if p.is_const}

    defined: set[str] = set()
    for eq in decl.equations:
        if eq.target not in vars_:
            raise TypeError_(f"{decl.name}:{eq.line}: unbound identifier {eq.target!r}")
        if any(p.name == eq.target for p in decl.inputs):
            raise TypeError_(f"{decl.name}:{eq.line}: equation defines input {eq.target!r}")
        if eq.target in defined:
            raise TypeError_(f"{decl.name}:{eq.line}: multiply-defined variable {eq.target!r}")
        defined.add(eq.target)
        ty = typecheck_expr(eq.rhs, vars_, consts, nodes)
        want = vars_[eq.target]
        if ty != want:
            raise TypeError_(
                f"{decl.name}:{eq.line}: equation for {eq.target!r} has type {ty}, expected {want}")

    for p in decl.outputs + decl.locals:
        if p.name not in defined:
            raise TypeError_(f"{decl.name}: variable {p.name!r} has no defining equation")


def typecheck_expr(e: Expr, vars_: dict[str, str], consts: set[str],
                   nodes: dict[str, NodeDecl]) -> str:
    ty = _infer(e, vars_, consts, nodes)
    e.ty = ty
    return ty


def is_static(e: Expr, consts: set[str]) -> bool:
    """True when `e` is evaluable from literals and const parameters alone."""
    if isinstance(e, Lit):
        return True
    if isinstance(e, Var):
        return e.name in consts
    if isinstance(e, Unop):
        return is_static(e.arg, consts)
    if isinstance(e, Binop):
        return is_static(e.left, consts) and is_static(e.right, consts)
    if isinstance(e, Ite):
        return all(is_static(x, consts) for x in (e.cond, e.then, e.other))
    return False


def _infer(e: Expr, vars_: dict[str, str], consts: set[str],
           nodes: dict[str, NodeDecl]) -> str:
    if isinstance(e, Lit):
        ty = type_of_value(e.value)
        e.ty = ty
        return ty
    if isinstance(e, Var):
        if e.name not in vars_:
            raise TypeError_(f"unbound identifier {e.name!r}")
        e.ty = vars_[e.name]
        return e.ty
    if isinstance(e, Unop):
        at = typecheck_expr(e.arg, vars_, consts, nodes)
        if e.op == "not":
            _expect(at, (BOOL,), "not")
            return BOOL
        if e.op == "-":
            _expect(at, _NUMERIC + (TVAR,), "unary -")
            return at
        raise TypeError_(f"unknown unary operator {e.op!r}")
    if isinstance(e, Binop):
        lt = typecheck_expr(e.left, vars_, consts, nodes)
        rt = typecheck_expr(e.right, vars_, consts, nodes)
        op = e.op
        if op in ("and", "or", "xor", "=>"):
            _expect(lt, (BOOL,), op)
            _expect(rt, (BOOL,), op)
            return BOOL
        if op in ("=", "<>"):
            _same(lt, rt, op)
            return BOOL
        if op in ("<", "<=", ">", ">="):
            _same(lt, rt, op)
            _expect(lt, _NUMERIC + (TVAR,), op)
            return BOOL
        if op in ("+", "-", "*"):
            _same(lt, rt, op)
            _expect(lt, _NUMERIC + (TVAR,), op)
            return lt
        if op == "/":
            _same(lt, rt, op)
            _expect(lt, (REAL,), "/")
            return REAL
        if op in ("div", "mod"):
            _same(lt, rt, op)
            _expect(lt, (INT,), op)
            return INT
        raise TypeError_(f"unknown operator {op!r}")
    if isinstance(e, Ite):
        ct = typecheck_expr(e.cond, vars_, consts, nodes)
        _expect(ct, (BOOL,), "if")
        tt = typecheck_expr(e.then, vars_, consts, nodes)
        et = typecheck_expr(e.other, vars_, consts, nodes)
        _same(tt, et, "if/else")
        return tt
    if isinstance(e, Pre):
        return typecheck_expr(e.arg, vars_, consts, nodes)
    if isinstance(e, Arrow):
        lt = typecheck_expr(e.left, vars_, consts, nodes)
        rt = typecheck_expr(e.right, vars_, consts, nodes)
        _same(lt, rt, "->")
        return lt
    if isinstance(e, App):
        return _infer_app(e, vars_, consts, nodes)
    raise TypeError_(f"cannot type expression {e!r}")


def _infer_app(e: App, vars_: dict[str, str], consts: set[str],
               nodes: dict[str, NodeDecl]) -> str:
    if e.func == "Delay":
        # Static-parameter delay: Delay <<d>> (init, x).
        if len(e.static_args) != 1:
            raise TypeError_("Delay takes exactly one static parameter <<d>>")
        if e.static_args[0] < 1:
            raise TypeError_("Delay requires d >= 1")
        if len(e.args) != 2:
            raise TypeError_("Delay takes two arguments (init, x)")
        it = typecheck_expr(e.args[0], vars_, consts, nodes)
        xt = typecheck_expr(e.args[1], vars_, consts, nodes)
        _same(it, xt, "Delay")
        return xt
    if e.static_args:
        raise TypeError_(f"{e.func!r} does not take static parameters")
    if e.func not in nodes:
        raise TypeError_(f"unbound node {e.func!r}")
    decl = nodes[e.func]
    if len(e.args) != len(decl.inputs):
        raise TypeError_(
            f"{e.func} expects {len(decl.inputs)} arguments, got {len(e.args)}")
    binding: str | None = None
    for arg, formal in zip(e.args, decl.inputs):
        at = typecheck_expr(arg, vars_, consts, nodes)
        want = formal.ty
        if want == TVAR:
            if binding is None:
                if at == TVAR:
                    binding = TVAR
                else:
                    binding = at
            elif at != binding:
                raise TypeError_(
                    f"{e.func}: 'a bound to {binding} but argument "
                    f"{formal.name!r} has type {at}")
        elif at != want:
            raise TypeError_(
                f"{e.func}: argument {formal.name!r} has type {at}, expected {want}")
        if formal.is_const and not is_static(arg, consts):
            raise TypeError_(
                f"{e.func}: const parameter {formal.name!r} needs a static value")
    if len(decl.outputs) != 1:
        raise TypeError_(
            f"{e.func} returns {len(decl.outputs)} values; only single-output "
            "applications may appear in expressions")
    out = decl.outputs[0].ty
    if out == TVAR:
        if binding is None or binding == TVAR:
            raise TypeError_(f"{e.func}: cannot resolve polymorphic output type")
        return binding
    return out


def _expect(ty: str, allowed: tuple[str, ...], what: str) -> None:
    if ty not in allowed:
        raise TypeError_(f"operator {what!r} not applicable to {ty}")


def _same(lt: str, rt: str, what: str) -> None:
    if lt != rt:
        raise TypeError_(f"type mismatch on {what!r}: {lt} vs {rt}")
