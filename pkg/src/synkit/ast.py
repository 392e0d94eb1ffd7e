"""AST for the Lustre subset: declarations, expressions, base types.

Expressions are shared between the frontend and the elaborated node
representation; after elaboration `Pre` and `Arrow` no longer occur.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

BOOL = "bool"
INT = "int"
REAL = "real"
TVAR = "'a"

BASE_TYPES = (BOOL, INT, REAL)

Value = Union[bool, int, Fraction]


def type_of_value(v: Value) -> str:
    if isinstance(v, bool):
        return BOOL
    if isinstance(v, int):
        return INT
    if isinstance(v, Fraction):
        return REAL
    raise TypeError(f"not a value: {v!r}")


def default_value(ty: str) -> Value:
    """Initial value of an unguarded `pre`: false / 0 / 0.0."""
    if ty == BOOL:
        return False
    if ty == INT:
        return 0
    if ty == REAL:
        return Fraction(0)
    raise ValueError(f"no default for type {ty}")


@dataclass
class Expr:
    ty: Optional[str] = field(default=None, compare=False, kw_only=True)

    def free_vars(self) -> set[str]:
        out: set[str] = set()
        _collect_vars(self, out)
        return out


@dataclass
class Lit(Expr):
    value: Value = False

    def __str__(self) -> str:
        if isinstance(self.value, bool):
            return "true" if self.value else "false"
        if isinstance(self.value, Fraction):
            return format_real(self.value)
        return str(self.value)


@dataclass
class Var(Expr):
    name: str = ""

    def __str__(self) -> str:
        return self.name


@dataclass
class Unop(Expr):
    op: str = ""
    arg: Expr = None  # type: ignore[assignment]

    def __str__(self) -> str:
        sep = " " if self.op == "not" else ""
        return f"({self.op}{sep}{self.arg})"


@dataclass
class Binop(Expr):
    op: str = ""
    left: Expr = None  # type: ignore[assignment]
    right: Expr = None  # type: ignore[assignment]

    def __str__(self) -> str:
        return f"({self.left} {self.op} {self.right})"


@dataclass
class Ite(Expr):
    cond: Expr = None  # type: ignore[assignment]
    then: Expr = None  # type: ignore[assignment]
    other: Expr = None  # type: ignore[assignment]

    def __str__(self) -> str:
        return f"(if {self.cond} then {self.then} else {self.other})"


@dataclass
class Pre(Expr):
    arg: Expr = None  # type: ignore[assignment]

    def __str__(self) -> str:
        return f"(pre {self.arg})"


@dataclass
class Arrow(Expr):
    left: Expr = None  # type: ignore[assignment]
    right: Expr = None  # type: ignore[assignment]

    def __str__(self) -> str:
        return f"({self.left} -> {self.right})"


@dataclass
class App(Expr):
    func: str = ""
    args: list[Expr] = field(default_factory=list)
    static_args: list[int] = field(default_factory=list)

    def __str__(self) -> str:
        stat = f" <<{', '.join(map(str, self.static_args))}>>" if self.static_args else ""
        return f"{self.func}{stat}({', '.join(map(str, self.args))})"


def _collect_vars(e: Expr, out: set[str]) -> None:
    if isinstance(e, Var):
        out.add(e.name)
    elif isinstance(e, Unop):
        _collect_vars(e.arg, out)
    elif isinstance(e, Binop):
        _collect_vars(e.left, out)
        _collect_vars(e.right, out)
    elif isinstance(e, Ite):
        _collect_vars(e.cond, out)
        _collect_vars(e.then, out)
        _collect_vars(e.other, out)
    elif isinstance(e, Pre):
        _collect_vars(e.arg, out)
    elif isinstance(e, Arrow):
        _collect_vars(e.left, out)
        _collect_vars(e.right, out)
    elif isinstance(e, App):
        for a in e.args:
            _collect_vars(a, out)


def subst_vars(e: Expr, mapping: dict[str, Expr]) -> Expr:
    """Capture-free substitution of variables by expressions."""
    if isinstance(e, Lit):
        return e
    if isinstance(e, Var):
        return mapping.get(e.name, e)
    if isinstance(e, Unop):
        return Unop(op=e.op, arg=subst_vars(e.arg, mapping), ty=e.ty)
    if isinstance(e, Binop):
        return Binop(op=e.op, left=subst_vars(e.left, mapping),
                     right=subst_vars(e.right, mapping), ty=e.ty)
    if isinstance(e, Ite):
        return Ite(cond=subst_vars(e.cond, mapping), then=subst_vars(e.then, mapping),
                   other=subst_vars(e.other, mapping), ty=e.ty)
    if isinstance(e, Pre):
        return Pre(arg=subst_vars(e.arg, mapping), ty=e.ty)
    if isinstance(e, Arrow):
        return Arrow(left=subst_vars(e.left, mapping),
                     right=subst_vars(e.right, mapping), ty=e.ty)
    if isinstance(e, App):
        return App(func=e.func, args=[subst_vars(a, mapping) for a in e.args],
                   static_args=list(e.static_args), ty=e.ty)
    raise TypeError(f"unknown expr {e!r}")


def rename_expr(e: Expr, mapping: dict[str, str]) -> Expr:
    return subst_vars(e, {k: Var(name=v) for k, v in mapping.items()})


def format_real(x: Fraction) -> str:
    """Render a rational as a decimal literal when exact, else p/q."""
    num, den = x.numerator, x.denominator
    d = den
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        return f"{num}/{den}"
    digits = max(twos, fives, 1)
    scaled = num * 10**digits // den
    sign = "-" if scaled < 0 else ""
    s = str(abs(scaled)).rjust(digits + 1, "0")
    return f"{sign}{s[:-digits]}.{s[-digits:]}"


@dataclass
class Param:
    name: str
    ty: str
    is_const: bool = False


@dataclass
class Equation:
    target: str
    rhs: Expr
    line: int = 0


@dataclass
class NodeDecl:
    name: str
    inputs: list[Param]
    outputs: list[Param]
    locals: list[Param]
    equations: list[Equation]
    line: int = 0

    def all_params(self) -> list[Param]:
        return self.inputs + self.outputs + self.locals

    def lookup(self, name: str) -> Optional[Param]:
        for p in self.all_params():
            if p.name == name:
                return p
        return None


@dataclass
class SourceProgram:
    nodes: list[NodeDecl]

    def node(self, name: str) -> NodeDecl:
        for n in self.nodes:
            if n.name == name:
                return n
        raise KeyError(name)

    def has_node(self, name: str) -> bool:
        return any(n.name == name for n in self.nodes)
