"""Recursive-descent parser for the Lustre subset."""
from __future__ import annotations

from fractions import Fraction

from .ast import (App, Arrow, Binop, Equation, Expr, Ite, Lit, NodeDecl,
                  Param, Pre, SourceProgram, Unop, Var, BOOL, INT, REAL, TVAR)
from .errors import ParseError
from .lexer import Token, tokenize


class TokenStream:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        t = self.peek()
        self.pos += 1
        return t

    def at(self, kind: str, text: str | None = None) -> bool:
        t = self.peek()
        return t.kind == kind and (text is None or t.text == text)

    def eat(self, kind: str, text: str | None = None) -> Token:
        t = self.peek()
        if not self.at(kind, text):
            want = text or kind
            raise ParseError(f"expected {want!r}, found {t.text!r}", t.line, t.col)
        return self.next()

    def try_eat(self, kind: str, text: str | None = None) -> Token | None:
        if self.at(kind, text):
            return self.next()
        return None

    def error(self, msg: str) -> ParseError:
        t = self.peek()
        return ParseError(f"{msg} (found {t.text!r})", t.line, t.col)


def parse_program(text: str) -> SourceProgram:
    ts = TokenStream(tokenize(text))
    nodes: list[NodeDecl] = []
    seen: set[str] = set()
    while not ts.at("eof"):
        decl = _parse_node(ts)
        if decl.name in seen:
            raise ParseError(f"duplicate node name {decl.name!r}", decl.line)
        seen.add(decl.name)
        nodes.append(decl)
    return SourceProgram(nodes=nodes)


def parse_expression(text: str) -> Expr:
    """Parse a standalone expression (objectives, state predicates)."""
    ts = TokenStream(tokenize(text))
    e = parse_expr(ts)
    ts.eat("eof")
    return e


def _parse_node(ts: TokenStream) -> NodeDecl:
    kw = ts.eat("kw", "node")
    name = ts.eat("id").text
    ts.eat("op", "(")
    inputs = _parse_param_groups(ts)
    ts.eat("op", ")")
    ts.eat("kw", "returns")
    ts.eat("op", "(")
    outputs = _parse_param_groups(ts)
    ts.eat("op", ")")
    ts.try_eat("op", ";")
    locals_: list[Param] = []
    if ts.try_eat("kw", "var"):
        locals_ = _parse_param_groups(ts)
        ts.try_eat("op", ";")
    ts.eat("kw", "let")
    equations: list[Equation] = []
    while not ts.at("kw", "tel"):
        equations.append(_parse_equation(ts))
    ts.eat("kw", "tel")
    ts.try_eat("op", ";")
    return NodeDecl(name=name, inputs=inputs, outputs=outputs,
                    locals=locals_, equations=equations, line=kw.line)


def _parse_param_groups(ts: TokenStream) -> list[Param]:
    params: list[Param] = []
    if ts.at("op", ")"):
        return params
    while True:
        is_const = ts.try_eat("kw", "const") is not None
        names = [ts.eat("id").text]
        while ts.try_eat("op", ","):
            names.append(ts.eat("id").text)
        ts.eat("op", ":")
        ty = _parse_type(ts)
        params.extend(Param(name=n, ty=ty, is_const=is_const) for n in names)
        if not ts.try_eat("op", ";"):
            break
        # Tolerate a trailing ';' before ')' or before 'let' (var sections).
        if not (ts.at("id") or ts.at("kw", "const")):
            break
    return params


def _parse_type(ts: TokenStream) -> str:
    if ts.at("tyvar"):
        ts.next()
        return TVAR
    t = ts.peek()
    if t.kind == "kw" and t.text in (BOOL, INT, REAL):
        ts.next()
        return t.text
    raise ts.error("expected a type (bool, int, real or 'a)")


def _parse_equation(ts: TokenStream) -> Equation:
    t = ts.eat("id")
    ts.eat("op", "=")
    rhs = parse_expr(ts)
    ts.eat("op", ";")
    return Equation(target=t.text, rhs=rhs, line=t.line)


# Expression grammar, loosest to tightest:
#   arrow -> impl -> or/xor -> and -> not -> comparison -> additive
#   -> multiplicative -> unary -/pre -> primary

def parse_expr(ts: TokenStream) -> Expr:
    return _parse_arrow(ts)


def _parse_arrow(ts: TokenStream) -> Expr:
    left = _parse_impl(ts)
    if ts.try_eat("op", "->"):
        right = _parse_arrow(ts)
        return Arrow(left=left, right=right)
    return left


def _parse_impl(ts: TokenStream) -> Expr:
    left = _parse_or(ts)
    if ts.try_eat("op", "=>"):
        right = _parse_impl(ts)
        return Binop(op="=>", left=left, right=right)
    return left


def _parse_or(ts: TokenStream) -> Expr:
    e = _parse_and(ts)
    while True:
        if ts.try_eat("kw", "or"):
            e = Binop(op="or", left=e, right=_parse_and(ts))
        elif ts.try_eat("kw", "xor"):
            e = Binop(op="xor", left=e, right=_parse_and(ts))
        else:
            return e


def _parse_and(ts: TokenStream) -> Expr:
    e = _parse_not(ts)
    while ts.try_eat("kw", "and"):
        e = Binop(op="and", left=e, right=_parse_not(ts))
    return e


def _parse_not(ts: TokenStream) -> Expr:
    if ts.try_eat("kw", "not"):
        return Unop(op="not", arg=_parse_not(ts))
    return _parse_comparison(ts)


_CMP_OPS = ("=", "<>", "<", "<=", ">", ">=")


def _parse_comparison(ts: TokenStream) -> Expr:
    e = _parse_additive(ts)
    t = ts.peek()
    if t.kind == "op" and t.text in _CMP_OPS:
        ts.next()
        return Binop(op=t.text, left=e, right=_parse_additive(ts))
    return e


def _parse_additive(ts: TokenStream) -> Expr:
    e = _parse_multiplicative(ts)
    while True:
        t = ts.peek()
        if t.kind == "op" and t.text in ("+", "-"):
            ts.next()
            e = Binop(op=t.text, left=e, right=_parse_multiplicative(ts))
        else:
            return e


def _parse_multiplicative(ts: TokenStream) -> Expr:
    e = _parse_unary(ts)
    while True:
        t = ts.peek()
        if t.kind == "op" and t.text in ("*", "/"):
            ts.next()
            e = Binop(op=t.text, left=e, right=_parse_unary(ts))
        elif t.kind == "id" and t.text in ("div", "mod"):
            ts.next()
            e = Binop(op=t.text, left=e, right=_parse_unary(ts))
        else:
            return e


def _parse_unary(ts: TokenStream) -> Expr:
    if ts.try_eat("op", "-"):
        arg = _parse_unary(ts)
        if isinstance(arg, Lit) and not isinstance(arg.value, bool):
            return Lit(value=-arg.value)
        return Unop(op="-", arg=arg)
    if ts.try_eat("kw", "pre"):
        return Pre(arg=_parse_unary(ts))
    return _parse_primary(ts)


def _parse_primary(ts: TokenStream) -> Expr:
    t = ts.peek()
    if t.kind == "int":
        ts.next()
        return Lit(value=int(t.text))
    if t.kind == "real":
        ts.next()
        return Lit(value=Fraction(t.text))
    if ts.try_eat("kw", "true"):
        return Lit(value=True)
    if ts.try_eat("kw", "false"):
        return Lit(value=False)
    if ts.try_eat("op", "("):
        e = parse_expr(ts)
        ts.eat("op", ")")
        return e
    if ts.try_eat("kw", "if"):
        cond = parse_expr(ts)
        ts.eat("kw", "then")
        then = parse_expr(ts)
        ts.eat("kw", "else")
        other = parse_expr(ts)
        return Ite(cond=cond, then=then, other=other)
    if t.kind == "id":
        ts.next()
        static_args: list[int] = []
        if ts.try_eat("op", "<<"):
            static_args.append(_parse_static_int(ts))
            while ts.try_eat("op", ","):
                static_args.append(_parse_static_int(ts))
            ts.eat("op", ">>")
            ts.eat("op", "(")
        elif not ts.try_eat("op", "("):
            return Var(name=t.text)
        args: list[Expr] = []
        if not ts.at("op", ")"):
            args.append(parse_expr(ts))
            while ts.try_eat("op", ","):
                args.append(parse_expr(ts))
        ts.eat("op", ")")
        return App(func=t.text, args=args, static_args=static_args)
    raise ts.error("expected an expression")


def _parse_static_int(ts: TokenStream) -> int:
    neg = ts.try_eat("op", "-") is not None
    v = int(ts.eat("int").text)
    return -v if neg else v


def pretty_program(prog: SourceProgram) -> str:
    return "\n\n".join(pretty_node(n) for n in prog.nodes) + "\n"


def pretty_node(decl: NodeDecl) -> str:
    def group(params: list[Param]) -> str:
        return "; ".join(
            ("const " if p.is_const else "") + f"{p.name}: {p.ty}" for p in params)

    lines = [f"node {decl.name} ({group(decl.inputs)}) returns ({group(decl.outputs)})"]
    if decl.locals:
        lines.append(f"var {group(decl.locals)};")
    lines.append("let")
    for eq in decl.equations:
        lines.append(f"  {eq.target} = {eq.rhs};")
    lines.append("tel")
    return "\n".join(lines)
