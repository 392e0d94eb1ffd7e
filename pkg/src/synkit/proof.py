"""Compositional proof trees over implementation judgments.

A proof tree derives judgments `lhs |= rhs` between node expressions with
the rules AG (assume-guarantee), Temp (temporal split), RT (rate
rescaling), Cons (consequence chaining), IP (property implication) and the
leaf rule V (discharged by bounded model checking). Rule applications are
validated structurally — sides are matched modulo reassociation and
reordering of parallel composition and modulo splitting of observers into
per-conjunct monitors; V leaves are discharged with the engine.
"""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .algebra import (Combi, EvalContext, NodeExpr, Observer, Rename,
                      TemplateInst, canon_key, compose_all, eval_nodeexpr,
                      flatten_par, par_of, parse_nodeexpr_tokens)
from .ast import Expr, Var
from .errors import ElaborationError, ProofError, SynkitError
from .lexer import tokenize
from .node import Node, Valuation, point_to_expr, record_state_at
from .parser import TokenStream, parse_expr
from .properties import (At, SafetyProperty, prime, prop_and, rescale)

RULES = {"AG": 2, "Temp": 2, "RT": 1, "Cons": 3, "IP": 0, "V": 0}


# ---------------------------------------------------------------------------
# Tree structure
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Judgment:
    lhs: NodeExpr
    rhs: NodeExpr

    def __str__(self) -> str:
        return f"{self.lhs} |= {self.rhs}"


@dataclass
class ProofNode:
    goal: Judgment
    rule: str
    premises: list["ProofNode"] = field(default_factory=list)
    # rule-specific attachments
    j: int | None = None            # Temp
    k: int | None = None            # Temp
    r: int | None = None            # RT: rescaling factor
    s: int | None = None            # RT: premise-side rate
    bound: int | None = None        # V: BMC bound
    state_pred: Expr | None = None  # Temp: e_Sn (also readable from premise 2)
    line: int = 0

    def __post_init__(self) -> None:
        if self.rule not in RULES:
            raise ProofError(f"unknown rule {self.rule!r}")
        if len(self.premises) != RULES[self.rule]:
            raise ProofError(
                f"rule {self.rule} takes {RULES[self.rule]} premises, "
                f"got {len(self.premises)}")


ProofTree = ProofNode


# ---------------------------------------------------------------------------
# Matching modulo Par reassociation and observer splitting
# ---------------------------------------------------------------------------

def split_components(e: NodeExpr) -> list[NodeExpr]:
    """Flattened Par components with every observer split per conjunct.

    obs(phi1 /\\ phi2) and obs(phi1) || obs(phi2) are interchangeable
    because monitor ok-wires are renamed apart on evaluation.
    """
    out: list[NodeExpr] = []
    for c in flatten_par(e):
        if isinstance(c, Observer):
            out.extend(Observer(prop=cc) for cc in c.prop.conjuncts())
        else:
            out.append(c)
    return out


def _mkey(e: NodeExpr) -> list:
    return sorted(canon_key(c) for c in split_components(e))


def sides_equal(a: NodeExpr, b: NodeExpr) -> bool:
    return _mkey(a) == _mkey(b)


def side_minus(whole: NodeExpr, part: list[NodeExpr]) -> list[NodeExpr] | None:
    """Components of `whole` left after removing `part` (None if absent)."""
    rest = split_components(whole)
    for p in part:
        for i, c in enumerate(rest):
            if canon_key(p) == canon_key(c):
                del rest[i]
                break
        else:
            return None
    return rest


def _observer_parts(e: NodeExpr) -> tuple[list[Observer], list[NodeExpr]]:
    obs = [c for c in split_components(e) if isinstance(c, Observer)]
    sys = [c for c in split_components(e) if not isinstance(c, Observer)]
    return obs, sys


def _merged_prop(obs: list[Observer]) -> SafetyProperty:
    parts: list[SafetyProperty] = []
    for o in obs:
        parts.extend(o.prop.conjuncts())
    return prop_and(parts)


# ---------------------------------------------------------------------------
# Checking context
# ---------------------------------------------------------------------------

@dataclass
class ProofContext:
    """Node environment and the observable-variable signature shared by
    every judgment of one proof script."""
    env: dict[str, Node] = field(default_factory=dict)
    signature: dict[str, str] = field(default_factory=dict)

    @classmethod
    def for_env(cls, env: dict[str, Node]) -> "ProofContext":
        sig: dict[str, str] = {}
        for node in env.values():
            for n, ty in node.inputs + node.outputs:
                sig[n] = ty
        return cls(env=env, signature=sig)

    def eval_ctx(self) -> EvalContext:
        return EvalContext(env=self.env, signature=self.signature)


def _eval_components(comps: list[NodeExpr], ectx: EvalContext
                     ) -> tuple[list[Node], list[Node]]:
    """Evaluate components, non-observers first; their interface types are
    merged into the context signature so observers over composition-local
    variables (e.g. primed states of a combinational split) can be typed.
    Returns (system nodes, observer monitors)."""
    sys_parts = [c for c in comps if not isinstance(c, Observer)]
    obs_parts = [c for c in comps if isinstance(c, Observer)]
    nodes = [eval_nodeexpr(c, ectx) for c in sys_parts]
    for nd in nodes:
        for x, ty in nd.inputs + nd.outputs + nd.wires:
            ectx.signature.setdefault(x, ty)
    monitors = [eval_nodeexpr(c, ectx) for c in obs_parts]
    return nodes, monitors


def _eval_side(e: NodeExpr, ectx: EvalContext) -> Node:
    nodes, monitors = _eval_components(split_components(e), ectx)
    return compose_all(nodes + monitors)


def _shape_err(msg: str):
    from .engine import Verdict
    return Verdict(status="shape_error", detail=msg)


def _shape_ok(label: str = ""):
    from .engine import Verdict
    return Verdict(status="shape_ok", label=label)


# ---------------------------------------------------------------------------
# Structural rule validation
# ---------------------------------------------------------------------------

def check_rule(node: ProofNode, ctx: ProofContext, config=None):
    """Structural validation of one rule application (see module doc).

    Returns a Verdict with status `shape_ok` or `shape_error`; the IP rule
    additionally decides the round-wise implication with the solver.
    """
    try:
        if node.rule == "AG":
            return _check_ag(node, ctx)
        if node.rule == "Temp":
            return _check_temp(node)
        if node.rule == "RT":
            return _check_rt(node)
        if node.rule == "Cons":
            return _check_cons(node)
        if node.rule == "IP":
            return _check_ip(node, ctx, config)
        return _shape_ok()  # V: discharge is separate
    except (SynkitError, ElaborationError) as exc:
        return _shape_err(str(exc))


def _check_ag(node: ProofNode, ctx: ProofContext):
    p1, p2 = node.premises
    na = split_components(p1.goal.rhs)
    nb = split_components(p2.goal.rhs)
    want_rhs = sorted(canon_key(c) for c in na + nb)
    if _mkey(node.goal.rhs) != want_rhs:
        return _shape_err(
            f"AG: goal rhs must be Na || Nb; expected "
            f"{par_of(na + nb)}, found {node.goal.rhs}")
    n1 = side_minus(p1.goal.lhs, nb)
    if n1 is None:
        return _shape_err(
            f"AG: premise 1 lhs {p1.goal.lhs} does not contain Nb "
            f"{par_of(nb)}")
    n2 = side_minus(p2.goal.lhs, na)
    if n2 is None:
        return _shape_err(
            f"AG: premise 2 lhs {p2.goal.lhs} does not contain Na "
            f"{par_of(na)}")
    if _mkey(node.goal.lhs) != sorted(canon_key(c) for c in n1 + n2):
        return _shape_err(
            f"AG: goal lhs must be N1 || N2; expected {par_of(n1 + n2)}, "
            f"found {node.goal.lhs}")
    # Compatibility: evaluate in one shared context so observer ok-wires
    # are renamed apart, then require disjoint output sets.
    ectx = ctx.eval_ctx()
    _eval_side(node.goal.lhs, ectx)
    node_a = _eval_side(par_of(na), ectx)
    node_b = _eval_side(par_of(nb), ectx)
    overlap = set(node_a.output_names()) & set(node_b.output_names())
    if overlap:
        return _shape_err(f"AG: Na and Nb share outputs {sorted(overlap)}")
    for side in (p1.goal.lhs, p2.goal.lhs):
        _eval_side(side, ctx.eval_ctx())  # compatibility of compositions
    return _shape_ok()


def _single_at(e: NodeExpr) -> At | None:
    parts = split_components(e)
    if len(parts) == 1 and isinstance(parts[0], Observer):
        c = parts[0].prop.conjuncts()
        if len(c) == 1 and isinstance(c[0], At):
            return c[0]
    return None


def _single_combi(e: NodeExpr) -> Combi | None:
    parts = flatten_par(e)
    if len(parts) == 1 and isinstance(parts[0], Combi):
        return parts[0]
    return None


def _check_temp(node: ProofNode):
    if node.j is None or node.k is None:
        return _shape_err("Temp: attachments j and k are required")
    j, k = node.j, node.k
    if j < 0 or k < 0:
        return _shape_err(f"Temp: j and k must be non-negative, got {j}, {k}")
    goal_at = _single_at(node.goal.rhs)
    if goal_at is None:
        return _shape_err(
            f"Temp: goal rhs must be obs(e @ n), found {node.goal.rhs}")
    if goal_at.round != j + k + 1:
        return _shape_err(
            f"Temp: goal round {goal_at.round} != j + k + 1 = {j + k + 1}")
    p1, p2 = node.premises
    c2 = _single_combi(p2.goal.lhs)
    if c2 is None or c2.pred is None:
        return _shape_err(
            f"Temp: premise 2 lhs must be C(N, e_Sn), found {p2.goal.lhs}")
    e_sn = c2.pred
    if node.state_pred is not None and str(node.state_pred) != str(e_sn):
        return _shape_err(
            f"Temp: attached state_pred {node.state_pred} differs from "
            f"premise 2's predicate {e_sn}")
    c1 = _single_combi(p1.goal.lhs)
    if c1 is None or c1.pred is not None:
        return _shape_err(
            f"Temp: premise 1 lhs must be C(N, init), found {p1.goal.lhs}")
    if canon_key(c1.inner) != canon_key(c2.inner):
        return _shape_err(
            f"Temp: premises split different nodes: {c1.inner} vs {c2.inner}")
    if canon_key(c1.inner) != canon_key(node.goal.lhs):
        return _shape_err(
            f"Temp: premises split {c1.inner}, goal lhs is {node.goal.lhs}")
    at1 = _single_at(p1.goal.rhs)
    if at1 is None or at1.round != j:
        return _shape_err(
            f"Temp: premise 1 rhs must be obs(e'_Sn @ {j}), "
            f"found {p1.goal.rhs}")
    if str(at1.pred) != str(prime(e_sn)):
        return _shape_err(
            f"Temp: premise 1 predicate {at1.pred} is not the primed "
            f"state predicate {prime(e_sn)}")
    at2 = _single_at(p2.goal.rhs)
    if at2 is None or at2.round != k:
        return _shape_err(
            f"Temp: premise 2 rhs must be obs(e @ {k}), found {p2.goal.rhs}")
    if str(at2.pred) != str(goal_at.pred):
        return _shape_err(
            f"Temp: premise 2 predicate {at2.pred} differs from the goal "
            f"predicate {goal_at.pred}")
    return _shape_ok(label=f"{j} + {k} + 1 = {j + k + 1}")


def _rt_rescale(c: NodeExpr, r: int, s: int, hits: list) -> NodeExpr:
    if isinstance(c, Observer):
        return Observer(prop=rescale(c.prop, r))
    if isinstance(c, Rename) and isinstance(c.inner, TemplateInst):
        inner = _rt_rescale(c.inner, r, s, hits)
        return Rename(inner=inner, pairs=c.pairs)
    if isinstance(c, TemplateInst) and c.template == "RateTransition":
        # stdlib signature: RateTransition(En_, const s) — the static rate
        # is the second argument.
        args = list(c.args)
        if len(args) == 2 and args[1] == s:
            args[1] = r * s
            hits.append(c)
        return TemplateInst(template=c.template, args=tuple(args))
    return c


def _check_rt(node: ProofNode):
    if node.r is None:
        return _shape_err("RT: attachment r is required")
    r = node.r
    s = node.s if node.s is not None else 1
    if r < 2:
        return _shape_err(f"RT: rescaling factor r must be >= 2, got {r}")
    if s < 1:
        return _shape_err(f"RT: premise-side rate s must be >= 1, got {s}")
    prem = node.premises[0]
    hits: list = []
    lhs = [_rt_rescale(c, r, s, hits) for c in split_components(prem.goal.lhs)]
    if not hits:
        return _shape_err(
            f"RT: premise lhs {prem.goal.lhs} contains no "
            f"RateTransition at rate {s}")
    if _mkey(node.goal.lhs) != sorted(canon_key(c) for c in lhs):
        return _shape_err(
            f"RT: goal lhs must be the premise lhs rescaled by {r}; "
            f"expected {par_of(lhs)}, found {node.goal.lhs}")
    rhs = [_rt_rescale(c, r, s, []) for c in split_components(prem.goal.rhs)]
    if not all(isinstance(c, Observer) for c in split_components(prem.goal.rhs)):
        return _shape_err(
            f"RT: premise rhs must be observers, found {prem.goal.rhs}")
    if _mkey(node.goal.rhs) != sorted(canon_key(c) for c in rhs):
        return _shape_err(
            f"RT: goal rhs must be the premise rhs rescaled by {r}; "
            f"expected {par_of(rhs)}, found {node.goal.rhs}")
    return _shape_ok(label=f"rounds scaled by {r}, rate {s} -> {r * s}")


def _check_cons(node: ProofNode):
    p1, p2, p3 = node.premises
    links = [
        (node.goal.lhs, p1.goal.lhs, "goal lhs", "premise 1 lhs"),
        (p1.goal.rhs, p2.goal.lhs, "premise 1 rhs", "premise 2 lhs"),
        (p2.goal.rhs, p3.goal.lhs, "premise 2 rhs", "premise 3 lhs"),
        (p3.goal.rhs, node.goal.rhs, "premise 3 rhs", "goal rhs"),
    ]
    for a, b, la, lb in links:
        if not sides_equal(a, b):
            return _shape_err(f"Cons: {la} ({a}) must match {lb} ({b})")
    return _shape_ok()


def _check_ip(node: ProofNode, ctx: ProofContext, config):
    from .properties import implies
    lobs, lsys = _observer_parts(node.goal.lhs)
    robs, rsys = _observer_parts(node.goal.rhs)
    if lsys or rsys or not robs:
        return _shape_err(
            f"IP: both sides must be observer compositions, "
            f"found {node.goal}")
    phi1 = _merged_prop(lobs)
    phi2 = _merged_prop(robs)
    smt_cfg = getattr(config, "smt", config)
    valid, model = implies(phi1, phi2, ctx.signature, smt_cfg)
    if not valid:
        return _shape_err(
            f"IP: implication {phi1} => {phi2} is invalid "
            f"(countermodel {model})")
    return _shape_ok(label=f"{phi1} => {phi2}")


# ---------------------------------------------------------------------------
# Leaf discharge (rule V)
# ---------------------------------------------------------------------------

def discharge_leaf(node: ProofNode, ctx: ProofContext, config=None):
    """Discharge a V leaf with the engine.

    Right-hand-side observers become a bounded safety obligation checked
    by BMC on the composed lhs, with lhs observers treated as assumptions
    (their ok outputs asserted at every round). A non-observer rhs that is
    a sub-composition of the lhs holds by trace projection; other node
    right-hand sides fall back to the bounded implementation check.
    """
    from .engine import EngineConfig, Verdict, check_impl_bounded, prove_safety
    config = config or EngineConfig()
    if node.rule != "V":
        raise ProofError(f"discharge_leaf on a {node.rule} node")
    robs, rsys = _observer_parts(node.goal.rhs)
    if rsys:
        rest = side_minus(node.goal.lhs, rsys)
        if rest is None:
            if robs:
                return Verdict(
                    status="unsupported",
                    detail="rhs mixes observers with nodes that are not "
                           "components of the lhs")
            if node.bound is None:
                return Verdict(status="unsupported",
                               detail="bounded implementation check needs "
                                      "an attached bound")
            ectx = ctx.eval_ctx()
            return check_impl_bounded(eval_nodeexpr(node.goal.lhs, ectx),
                                      eval_nodeexpr(node.goal.rhs, ectx),
                                      node.bound, config)
        if not robs:
            return Verdict(status="proved",
                           label="sub-composition (trace projection)")
    # Observer obligations, possibly under lhs-observer assumptions.
    phi = _merged_prop(robs)
    bound = node.bound if node.bound is not None else phi.max_round()
    ectx = ctx.eval_ctx()
    nodes, monitors = _eval_components(split_components(node.goal.lhs), ectx)
    assumes: list[Expr] = [Var(name=mon.output_names()[0])
                           for mon in monitors]
    sysm = compose_all(nodes + monitors)
    return prove_safety(sysm, phi, bound, config, assume_always=assumes)


# ---------------------------------------------------------------------------
# Tree validation
# ---------------------------------------------------------------------------

@dataclass
class ReportEntry:
    path: str
    rule: str
    goal: str
    verdict: object  # engine.Verdict

    @property
    def ok(self) -> bool:
        return self.verdict.status in ("shape_ok", "proved")


@dataclass
class Report:
    entries: list[ReportEntry] = field(default_factory=list)
    solver_time: float = 0.0

    @property
    def ok(self) -> bool:
        return all(e.ok for e in self.entries)

    def counterexamples(self) -> list[ReportEntry]:
        return [e for e in self.entries
                if e.verdict.status == "counterexample"]

    def render(self) -> str:
        lines = []
        for e in self.entries:
            mark = "ok " if e.ok else "FAIL"
            v = e.verdict
            extra = v.label or v.detail or v.status
            lines.append(f"[{mark}] {e.path:12s} {e.rule:4s} {e.goal}")
            if extra and extra not in ("shape_ok",):
                lines.append(f"       -> {extra}")
        lines.append(f"total solver time: {self.solver_time:.2f}s")
        lines.append("result: " + ("all obligations hold" if self.ok
                                   else "validation FAILED"))
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "solver_time": self.solver_time,
            "nodes": [
                {
                    "path": e.path,
                    "rule": e.rule,
                    "goal": e.goal,
                    "status": e.verdict.status,
                    "label": e.verdict.label,
                    "detail": e.verdict.detail,
                }
                for e in self.entries
            ],
        }


def _walk(node: ProofNode, path: str):
    yield path, node
    for i, p in enumerate(node.premises, start=1):
        yield from _walk(p, f"{path}.{i}")


def validate_tree(tree: ProofTree, ctx: ProofContext, config=None) -> Report:
    """Depth-first validation: structural checks on every node and BMC
    discharge on every V leaf (in parallel up to config.jobs sessions)."""
    from .engine import EngineConfig
    config = config or EngineConfig()
    report = Report()
    nodes = list(_walk(tree, "root"))
    structural = {path: check_rule(node, ctx, config)
                  for path, node in nodes}
    leaves = [(path, node) for path, node in nodes
              if node.rule == "V" and structural[path].status == "shape_ok"]
    t0 = time.monotonic()
    with ThreadPoolExecutor(max_workers=max(1, config.jobs)) as pool:
        futures = {path: pool.submit(discharge_leaf, node, ctx, config)
                   for path, node in leaves}
        discharged = {path: f.result() for path, f in futures.items()}
    wall = time.monotonic() - t0
    for path, node in nodes:
        verdict = discharged.get(path, structural[path])
        report.entries.append(ReportEntry(
            path=path, rule=node.rule, goal=str(node.goal), verdict=verdict))
        report.solver_time += getattr(verdict, "solver_time", 0.0)
    if config.jobs > 1:
        report.solver_time = min(report.solver_time, wall)
    return report


# ---------------------------------------------------------------------------
# Temp-split assistance
# ---------------------------------------------------------------------------

def temp_split_assist(n: Node, inputs: list[Valuation],
                      round_index: int) -> Expr:
    """The point state predicate e_Sn for a Temp split: each state variable
    equated to its simulated value after `round_index` reactions."""
    point = record_state_at(n, inputs, round_index)
    return point_to_expr(point, dict(n.states))


# ---------------------------------------------------------------------------
# Proof-script parsing and formatting
# ---------------------------------------------------------------------------

_INT_FIELDS = ("j", "k", "r", "s", "bound")


def parse_proof(text: str) -> ProofTree:
    ts = TokenStream(tokenize(text))
    node = _parse_block(ts, stop=("eof", ""))
    ts.eat("eof")
    return node


def _parse_block(ts: TokenStream, stop: tuple[str, str]) -> ProofNode:
    goal: Judgment | None = None
    rule: str | None = None
    premises: list[ProofNode] = []
    fields: dict[str, object] = {}
    line = ts.peek().line
    while not ts.at(*stop):
        tok = ts.peek()
        if ts.at("kw", "goal"):
            ts.next()
            ts.eat("op", ":")
            lhs = parse_nodeexpr_tokens(ts)
            ts.eat("op", "|=")
            rhs = parse_nodeexpr_tokens(ts)
            goal = Judgment(lhs=lhs, rhs=rhs)
        elif ts.at("kw", "rule"):
            ts.next()
            ts.eat("op", ":")
            rule = ts.next().text
        elif ts.at("kw", "premise"):
            ts.next()
            ts.eat("op", "{")
            premises.append(_parse_block(ts, stop=("op", "}")))
            ts.eat("op", "}")
        elif ts.at("kw", "bound") or (tok.kind == "id" and tok.text in _INT_FIELDS):
            name = ts.next().text
            ts.eat("op", ":")
            fields[name] = int(ts.eat("int").text)
        elif ts.at("kw", "state_pred"):
            ts.next()
            ts.eat("op", ":")
            fields["state_pred"] = parse_expr(ts)
        else:
            raise ProofError(
                f"{tok.line}: unexpected {tok.text!r} in proof block "
                f"(expected goal/rule/premise/j/k/r/s/bound/state_pred)")
    if goal is None:
        raise ProofError(f"{line}: proof block is missing a goal")
    if rule is None:
        raise ProofError(f"{line}: proof block is missing a rule")
    try:
        return ProofNode(goal=goal, rule=rule, premises=premises,
                         line=line, **fields)  # type: ignore[arg-type]
    except ProofError as exc:
        raise ProofError(f"{line}: {exc}") from exc


def format_proof(node: ProofNode, indent: int = 0) -> str:
    pad = "  " * indent
    lines = [f"{pad}goal: {node.goal}", f"{pad}rule: {node.rule}"]
    for name in _INT_FIELDS:
        v = getattr(node, name)
        if v is not None:
            lines.append(f"{pad}{name}: {v}")
    if node.state_pred is not None:
        lines.append(f"{pad}state_pred: {node.state_pred}")
    for p in node.premises:
        lines.append(f"{pad}premise {{")
        lines.append(format_proof(p, indent + 1))
        lines.append(f"{pad}}}")
    return "\n".join(lines)
