"""Safety properties `e | e@s | phi /\\ phi` and their observer monitors.

Observers are built in monitor form: a node reading the observed outputs
and emitting a boolean `ok` which is invariantly true exactly when the
observed trace satisfies the property. The monitor for `e@s` carries a
round counter saturating at s+1.
"""
from __future__ import annotations

from dataclasses import dataclass

from .ast import Binop, Expr, Ite, Lit, Var, rename_expr, subst_vars, BOOL, INT
from .errors import TypeError_, ProofError
from .lexer import tokenize
from .node import Node
from .parser import TokenStream, parse_expr


@dataclass(frozen=True)
class SafetyProperty:
    def conjuncts(self) -> list["SafetyProperty"]:
        return [self]

    def obligations(self) -> list[tuple[Expr, int | None]]:
        """(predicate, round) pairs; round None means every round."""
        out = []
        for c in self.conjuncts():
            if isinstance(c, Always):
                out.append((c.pred, None))
            elif isinstance(c, At):
                out.append((c.pred, c.round))
        return out

    def max_round(self) -> int:
        rounds = [r for _, r in self.obligations() if r is not None]
        return max(rounds, default=0)

    def vars(self) -> set[str]:
        out: set[str] = set()
        for pred, _ in self.obligations():
            out |= pred.free_vars()
        return out


@dataclass(frozen=True)
class Always(SafetyProperty):
    pred: Expr

    def __str__(self) -> str:
        return f"always {self.pred}"


@dataclass(frozen=True)
class At(SafetyProperty):
    pred: Expr
    round: int

    def __post_init__(self):
        if self.round < 0:
            raise TypeError_(f"negative round index {self.round}")

    def __str__(self) -> str:
        return f"{self.pred} @ {self.round}"


@dataclass(frozen=True)
class PropAnd(SafetyProperty):
    left: SafetyProperty
    right: SafetyProperty

    def conjuncts(self) -> list[SafetyProperty]:
        return self.left.conjuncts() + self.right.conjuncts()

    def __str__(self) -> str:
        return f"{self.left} /\\ {self.right}"


def prop_and(parts: list[SafetyProperty]) -> SafetyProperty:
    if not parts:
        return Always(pred=Lit(value=True))
    p = parts[0]
    for q in parts[1:]:
        p = PropAnd(left=p, right=q)
    return p


def parse_property(text: str) -> SafetyProperty:
    ts = TokenStream(tokenize(text))
    p = parse_property_tokens(ts)
    ts.eat("eof")
    return p


def parse_property_tokens(ts: TokenStream) -> SafetyProperty:
    parts = [_parse_prop_atom(ts)]
    while ts.try_eat("op", "/\\"):
        parts.append(_parse_prop_atom(ts))
    return prop_and(parts)


def _parse_prop_atom(ts: TokenStream) -> SafetyProperty:
    if ts.try_eat("kw", "always"):
        return Always(pred=parse_expr(ts))
    pred = parse_expr(ts)
    if ts.try_eat("op", "@"):
        neg = ts.try_eat("op", "-")
        tok = ts.eat("int")
        if neg:
            raise ProofError(f"{tok.line}: negative round index")
        return At(pred=pred, round=int(tok.text))
    return Always(pred=pred)


# ---------------------------------------------------------------------------
# Observer construction (monitor form)
# ---------------------------------------------------------------------------

def observer(phi: SafetyProperty, signature: dict[str, str],
             ok_name: str = "ok") -> Node:
    """Monitor node: inputs are the observed outputs, single output `ok`."""
    for v in sorted(phi.vars()):
        if v not in signature:
            raise TypeError_(f"property references non-output variable {v!r}")
    node = Node(name="obs")
    node.inputs = [(v, signature[v]) for v in sorted(phi.vars())]
    node.outputs = [(ok_name, BOOL)]
    ok: Expr = Lit(value=True)
    first = True
    for idx, (pred, rnd) in enumerate(phi.obligations()):
        if rnd is None:
            this = pred
        else:
            c = f"_c{idx}" if idx else "_c"
            node.states.append((c, INT))
            node.init = _conj(node.init, Binop(op="=", left=Var(name=c), right=Lit(value=0)))
            # Saturate at rnd+1 to keep brute-force state spaces finite.
            node.nexts[c] = Ite(
                cond=Binop(op="<=", left=Var(name=c), right=Lit(value=rnd)),
                then=Binop(op="+", left=Var(name=c), right=Lit(value=1)),
                other=Var(name=c))
            this = Binop(op="=>",
                         left=Binop(op="=", left=Var(name=c), right=Lit(value=rnd)),
                         right=pred)
        ok = this if first else Binop(op="and", left=ok, right=this)
        first = False
    node.defs[ok_name] = ok
    node.check_causal()
    return node


def _conj(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Lit) and a.value is True:
        return b
    return Binop(op="and", left=a, right=b)


# ---------------------------------------------------------------------------
# Property transformations
# ---------------------------------------------------------------------------

def rescale(phi: SafetyProperty, r: int) -> SafetyProperty:
    """Multiply every round index by r (rule RT); `always` is unchanged."""
    if r < 1:
        raise TypeError_(f"rescale factor must be >= 1, got {r}")
    if isinstance(phi, Always):
        return phi
    if isinstance(phi, At):
        return At(pred=phi.pred, round=phi.round * r)
    if isinstance(phi, PropAnd):
        return PropAnd(left=rescale(phi.left, r), right=rescale(phi.right, r))
    raise TypeError_(f"unknown property {phi!r}")


PRIME = "'"


def prime_var(name: str) -> str:
    return name + PRIME


def prime(e: Expr) -> Expr:
    """x -> x' on every free variable of a state predicate."""
    for v in e.free_vars():
        if v.endswith(PRIME):
            raise TypeError_(f"variable {v!r} is already primed")
    return rename_expr(e, {v: prime_var(v) for v in e.free_vars()})


def props_equal(a: SafetyProperty, b: SafetyProperty) -> bool:
    """Equality up to conjunct reordering."""
    ca = sorted(map(str, a.conjuncts()))
    cb = sorted(map(str, b.conjuncts()))
    return ca == cb


# ---------------------------------------------------------------------------
# Round-wise implication (rule IP)
# ---------------------------------------------------------------------------

def implies(phi1: SafetyProperty, phi2: SafetyProperty,
            signature: dict[str, str], config=None):
    """Validity of the round-wise implication phi1 => phi2.

    Checked over a symbolic round counter and symbolic outputs: returns
    (True, None) or (False, countermodel dict).
    """
    from .smt import Script, solve_script  # local import: avoid cycle

    allvars = phi1.vars() | phi2.vars()
    for v in sorted(allvars):
        if v not in signature:
            raise TypeError_(f"property references unknown output {v!r}")

    sc = Script()
    t = "_round"
    sc.declare(t, INT)
    sc.assert_(Binop(op=">=", left=Var(name=t), right=Lit(value=0)))
    for v in sorted(allvars):
        sc.declare(v, signature[v])

    def active(pred: Expr, rnd: int | None) -> Expr:
        if rnd is None:
            return pred
        return Binop(op="=>",
                     left=Binop(op="=", left=Var(name=t), right=Lit(value=rnd)),
                     right=pred)

    lhs: Expr = Lit(value=True)
    for pred, rnd in phi1.obligations():
        lhs = _conj(lhs, active(pred, rnd))
    rhs: Expr = Lit(value=True)
    for pred, rnd in phi2.obligations():
        rhs = _conj(rhs, active(pred, rnd))
    sc.assert_(lhs)
    from .ast import Unop
    sc.assert_(Unop(op="not", arg=rhs))

    res = solve_script(sc, config)
    if res.status == "unsat":
        return True, None
    if res.status == "sat":
        return False, res.values
    from .errors import SolverError
    raise SolverError(f"implies check returned {res.status}")
