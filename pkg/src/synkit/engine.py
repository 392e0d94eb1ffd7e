"""Bounded model checking procedures: bounded safety proofs, objective
falsification (test-case generation) and template-parameter synthesis."""
from __future__ import annotations

import os
import time
from dataclasses import dataclass, field, replace

from .ast import (Binop, Equation, Expr, Ite, Lit, NodeDecl, Param, Unop,
                  Var, Value, BOOL)
from .algebra import (EvalContext, NodeExpr, Par, RawNode, Rename,
                      TemplateInst, compose, compose_all, eval_nodeexpr,
                      par_of, rename)
from .errors import EncodingError, SolverError, SynkitError
from .node import Node, elaborate, simulate, eval_expr
from .properties import Always, At, SafetyProperty, observer, parse_property
from .smt import (SmtConfig, SolverSession, Unrolling, _SORTS, decode_model,
                  check_agreement, expr_to_smt, extend_unrolling, smt_symbol,
                  start_unrolling)
from .values import Trace, Valuation, format_value, trace_to_csv


@dataclass
class EngineConfig:
    """Solver and search limits shared by all BMC procedures."""
    smt: SmtConfig = field(default_factory=SmtConfig)
    k_max: int = 50
    budget: float | None = None          # overall wall-clock budget, seconds
    dump_dir: str | None = None
    jobs: int = 1
    seed: int = 0

    def session(self, name: str = "obligation") -> SolverSession:
        cfg = replace(self.smt, dump_dir=self.dump_dir or self.smt.dump_dir)
        return SolverSession(cfg, name=name)


@dataclass
class Verdict:
    status: str                      # proved | counterexample | unknown | unsupported
    label: str = ""
    trace: Trace | None = None
    params: Valuation | None = None
    detail: str = ""
    solver_time: float = 0.0


@dataclass
class TestCase:
    """A generated test: a closed stream generator for the target's inputs,
    the unrolled input trace, and the round at which the objective holds."""
    generator: NodeExpr
    trace: Trace
    s: int
    objective: str = ""
    bound: int = 0
    params: Valuation = field(default_factory=dict)

    def to_csv(self) -> str:
        return trace_to_csv(self.trace)

    def metadata(self) -> str:
        lines = [
            f"generator: {self.generator}",
            f"objective: {self.objective}",
            f"witnessed_round: {self.s}",
            f"bound: {self.bound}",
            f"length: {len(self.trace)}",
        ]
        for name in sorted(self.params):
            lines.append(f"param {name}: {format_value(self.params[name])}")
        return "\n".join(lines) + "\n"

    def save(self, basename: str) -> tuple[str, str]:
        csv_path = basename + ".csv"
        meta_path = basename + ".meta"
        with open(csv_path, "w", encoding="utf-8") as fh:
            fh.write(self.to_csv())
        with open(meta_path, "w", encoding="utf-8") as fh:
            fh.write(self.metadata())
        return csv_path, meta_path


class BmcSession:
    """An incremental unrolling bound to one live solver session.

    Transition constraints are asserted permanently as rounds are added;
    goals are checked under push/pop so the session can be reused across
    bounds.
    """

    def __init__(self, node: Node, config: EngineConfig, name: str = "bmc"):
        self.node = node
        self.config = config
        self.session = config.session(name)
        self.u = start_unrolling(node)
        self._emit(self.u.decls, self.u.assertions)
        self.name = name
        self.solver_time = 0.0

    def _emit(self, decls, assertions) -> None:
        for sym, ty in decls:
            self.session.send(f"(declare-fun {smt_symbol(sym)} () {_SORTS[ty]})")
        for a in assertions:
            self.session.send(f"(assert {a})")

    @property
    def k(self) -> int:
        return self.u.k

    def extend_to(self, k: int) -> None:
        while self.u.k < k:
            decls, assertions = extend_unrolling(self.u)
            self._emit(decls, assertions)

    def assert_permanent(self, text: str) -> None:
        self.session.send(f"(assert {text})")

    def check_goal(self, goal: str) -> str:
        t0 = time.monotonic()
        self.session.push()
        self.session.send(f"(assert {goal})")
        status = self.session.check()
        self.solver_time += time.monotonic() - t0
        return status

    def model(self) -> tuple[Trace, Valuation]:
        trace, params = decode_model(self.u, self.session.get_model(),
                                     session=self.session)
        check_agreement(self.u, trace, params)
        return trace, params

    def pop_goal(self) -> None:
        self.session.pop()

    def close(self) -> None:
        self.session.dump(self.name)
        self.session.close()

    def __enter__(self) -> "BmcSession":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def _pred_at(u: Unrolling, pred: Expr, rnd: int) -> str:
    params = {p for p, _ in u.node.params}
    return expr_to_smt(pred, lambda n: smt_symbol(
        n if n in params else f"{n}@{rnd}"))


def _objective_goal(u: Unrolling, obj: SafetyProperty, k: int) -> str | None:
    """Conjunction asserting the objective is witnessed at round k; None
    when some fixed round index exceeds k (infeasible at this bound)."""
    parts: list[str] = []
    for pred, rnd in obj.obligations():
        if rnd is None:
            parts.append(_pred_at(u, pred, k))
        elif rnd > k:
            return None
        else:
            parts.append(_pred_at(u, pred, rnd))
    if not parts:
        return "true"
    if len(parts) == 1:
        return parts[0]
    return "(and " + " ".join(parts) + ")"


def _violation_goal(u: Unrolling, ok_names: list[str], k: int) -> str:
    parts = [f"(not {smt_symbol(f'{ok}@{r}')})"
             for ok in ok_names for r in range(k + 1)]
    if len(parts) == 1:
        return parts[0]
    return "(or " + " ".join(parts) + ")"


def _signature_of(node: Node) -> dict[str, str]:
    return {n: ty for n, ty in node.inputs + node.outputs + node.wires}


def _fresh_ok_name(node: Node) -> str:
    taken = node.all_names()
    i = 0
    while True:
        name = "ok" if i == 0 else f"ok{i + 1}"
        if name not in taken:
            return name
        i += 1


def prove_safety(n: Node, phi: SafetyProperty, k: int,
                 config: EngineConfig | None = None,
                 assume_always: list[Expr] | None = None) -> Verdict:
    """Bounded proof that every length-(k+1) execution of `n` satisfies phi.

    A monitor observer for phi is composed with `n` and the solver searches
    for a round <= k where the monitor's ok output is false; unsat means
    proved. `assume_always` predicates are asserted at every round (used to
    treat left-hand-side observers as environment assumptions).

    For properties with fixed round indices <= k the bounded proof is
    complete; for invariant (always) properties the verdict is explicitly
    labeled as bounded.
    """
    config = config or EngineConfig()
    if phi.max_round() > k:
        raise EncodingError(
            f"objective mentions round {phi.max_round()} but bound is {k}")
    sig = _signature_of(n)
    missing = phi.vars() - set(sig)
    if missing:
        raise EncodingError(
            f"objective mentions unknown signals {sorted(missing)}")
    ok = _fresh_ok_name(n)
    mon = observer(phi, sig, ok_name=ok)
    sysm = compose(n, mon)
    bounded = any(isinstance(c, Always) for c in phi.conjuncts())
    label = f"proved (bounded {k})" if bounded else "proved"
    with BmcSession(sysm, config, name="prove") as b:
        b.extend_to(k)
        for e in assume_always or []:
            for r in range(k + 1):
                b.assert_permanent(_pred_at(b.u, e, r))
        status = b.check_goal(_violation_goal(b.u, [ok], k))
        if status == "unsat":
            return Verdict(status="proved", label=label,
                           solver_time=b.solver_time)
        if status == "sat":
            trace, params = b.model()
            return Verdict(status="counterexample", trace=trace,
                           params=params, solver_time=b.solver_time)
        return Verdict(status="unknown", label=status,
                       solver_time=b.solver_time)


def _coerce_objective(obj) -> SafetyProperty:
    if isinstance(obj, SafetyProperty):
        return obj
    if isinstance(obj, Expr):
        return Always(pred=obj)
    if isinstance(obj, str):
        return parse_property(obj)
    raise SynkitError(f"cannot interpret objective {obj!r}")


def _player_node(name: str, ty: str, values: list[Value]) -> Node:
    """A closed generator node replaying a fixed finite stream (the last
    value repeats past the end)."""
    cases: Expr = Lit(value=values[-1])
    for r in range(len(values) - 2, -1, -1):
        cases = Ite(cond=Binop(op="=", left=Var(name="_r"), right=Lit(value=r)),
                    then=Lit(value=values[r]), other=cases)
    decl = NodeDecl(
        name=f"Play_{name}",
        inputs=[], outputs=[Param(name=name, ty=ty)],
        locals=[Param(name="_r", ty="int")],
        equations=[
            Equation(target="_r", rhs=_arrow_counter()),
            Equation(target=name, rhs=cases),
        ])
    return elaborate(decl, {})


def _arrow_counter() -> Expr:
    from .ast import Arrow, Pre
    return Arrow(left=Lit(value=0),
                 right=Binop(op="+", left=Pre(arg=Var(name="_r")),
                             right=Lit(value=1)))


def _generator_from_trace(node: Node, trace: Trace, k: int) -> NodeExpr:
    parts: list[NodeExpr] = []
    for name, ty in node.inputs:
        values = [trace.inputs[r][name] for r in range(k + 1)]
        gen = _player_node(name, ty, values)
        text = f"{name} := " + " ".join(format_value(v) for v in values)
        parts.append(RawNode(node=gen, label=f"Play({text})"))
    return par_of(parts)


def falsify(n: Node, obj, k_max: int,
            config: EngineConfig | None = None) -> TestCase | None:
    """Search k = 0..k_max for a shortest execution witnessing the
    objective; the witness round s is minimal by the iteration order."""
    config = config or EngineConfig()
    phi = _coerce_objective(obj)
    missing = phi.vars() - set(_signature_of(n))
    if missing:
        raise EncodingError(
            f"objective mentions unknown signals {sorted(missing)}")
    deadline = (time.monotonic() + config.budget) if config.budget else None
    with BmcSession(n, config, name="falsify") as b:
        for k in range(k_max + 1):
            if deadline and time.monotonic() > deadline:
                raise SolverError("overall budget exhausted during falsify")
            b.extend_to(k)
            goal = _objective_goal(b.u, phi, k)
            if goal is None:
                continue
            status = b.check_goal(goal)
            if status == "sat":
                trace, params = b.model()
                return TestCase(generator=_generator_from_trace(n, trace, k),
                                trace=trace, s=k, objective=str(phi), bound=k,
                                params=params)
            b.pop_goal()
            if status != "unsat":
                raise SolverError(f"solver returned {status} at bound {k}")
    return None


def _template_param_order(tname: str, elem_ty: str) -> list[str]:
    from .templates import symbolic_params
    params, _ = symbolic_params(tname, elem_ty)
    return [p for p, _ in params]


def synthesize(n: Node, templates: dict[str, str], obj, k_max: int,
               config: EngineConfig | None = None) -> TestCase | None:
    """Instantiate one stream template per free input of `n` so that the
    composed system witnesses the objective within k_max rounds.

    Template parameters become shared rigid constants constrained by the
    template's domain; a satisfying valuation is turned into a concrete
    generator and re-validated on the simulator before being returned.
    """
    from .templates import symbolic_generator
    config = config or EngineConfig()
    phi = _coerce_objective(obj)
    in_types = dict(n.inputs)
    free = set(in_types)
    if set(templates) != free:
        raise SynkitError(
            f"templates must cover exactly the free inputs {sorted(free)}, "
            f"got {sorted(templates)}")
    gens: list[tuple[str, str, Node]] = []
    domains: list[Expr] = []
    for inp in sorted(templates):
        tname = templates[inp]
        gen, dom = symbolic_generator(tname, in_types[inp], prefix=f"{inp}_")
        gens.append((inp, tname, rename(gen, "Out", inp)))
        domains.append(dom)
    sysm = compose_all([g for _, _, g in gens] + [n])
    deadline = (time.monotonic() + config.budget) if config.budget else None
    with BmcSession(sysm, config, name="synthesize") as b:
        for dom in domains:
            b.assert_permanent(expr_to_smt(dom, smt_symbol))
        for k in range(k_max + 1):
            if deadline and time.monotonic() > deadline:
                raise SolverError("overall budget exhausted during synthesize")
            b.extend_to(k)
            goal = _objective_goal(b.u, phi, k)
            if goal is None:
                continue
            status = b.check_goal(goal)
            if status == "sat":
                trace, params = b.model()
                return _build_synthesized(n, gens, phi, trace, params, k)
            b.pop_goal()
            if status != "unsat":
                raise SolverError(f"solver returned {status} at bound {k}")
    return None


def _build_synthesized(n: Node, gens: list[tuple[str, str, Node]],
                       phi: SafetyProperty, trace: Trace, params: Valuation,
                       k: int) -> TestCase:
    parts: list[NodeExpr] = []
    for inp, tname, _ in gens:
        order = _template_param_order(tname, dict(n.inputs)[inp])
        args = tuple(params[f"{inp}_{p}"] for p in order)
        parts.append(Rename(inner=TemplateInst(template=tname, args=args),
                            pairs=(("Out", inp),)))
    generator = par_of(parts)
    tc = TestCase(generator=generator,
                  trace=_project_inputs(n, trace, k), s=k,
                  objective=str(phi), bound=k, params=dict(params))
    _revalidate(n, tc, phi)
    return tc


def _project_inputs(n: Node, trace: Trace, k: int) -> Trace:
    """Restrict a composed-system trace to the target's own interface."""
    inames = n.input_names()
    onames = n.output_names()
    out = Trace(states=None)
    for r in range(k + 1):
        row = dict(trace.inputs[r])
        row.update(trace.outputs[r])
        out.inputs.append({x: row[x] for x in inames})
        out.outputs.append({x: row[x] for x in onames if x in row})
    return out


def _revalidate(n: Node, tc: TestCase, phi: SafetyProperty) -> None:
    """Re-simulate the target under the generated inputs and demand that
    the objective is indeed witnessed at round s (hard error otherwise)."""
    sim = simulate(n, tc.trace.inputs)
    for r in range(len(sim)):
        tc.trace.outputs[r] = dict(sim.outputs[r])
    env_rows = []
    for r in range(len(sim)):
        row = dict(sim.inputs[r])
        row.update(sim.outputs[r])
        env_rows.append(row)
    for pred, rnd in phi.obligations():
        at = tc.s if rnd is None else rnd
        if not eval_expr(pred, env_rows[at]):
            raise SolverError(
                f"re-validation failed: objective conjunct {pred} does not "
                f"hold at round {at} on the simulator (encoder/simulator "
                f"divergence)")


def falsify_with_monitor(n: Node, monitor_src: str, obj,
                         k_max: int, config: EngineConfig | None = None,
                         templates: dict[str, str] | None = None
                         ) -> TestCase | None:
    """Compose monitor equations (source text) with `n`, then falsify (or
    synthesize, when templates are given) the extended objective."""
    mon = monitor_node(monitor_src, _signature_of(n))
    sysm = compose(n, mon)
    if templates:
        return synthesize(sysm, templates, obj, k_max, config)
    return falsify(sysm, obj, k_max, config)


def monitor_node(src: str, signature: dict[str, str]) -> Node:
    """Build a node from bare monitor equations; free variables are typed
    by the target's signature and become the monitor's inputs.

    Equation targets are typed by inference in declaration order (an
    equation may only use targets defined above it).
    """
    from .lexer import tokenize
    from .parser import TokenStream, _parse_equation
    from .templates import template_decls
    from .typecheck import _infer
    ts = TokenStream(tokenize(src))
    equations = []
    while not ts.at("eof"):
        equations.append(_parse_equation(ts))
    if not equations:
        raise SynkitError("monitor source contains no equations")
    targets = [eq.target for eq in equations]
    free: set[str] = set()
    for eq in equations:
        free |= eq.rhs.free_vars()
    free -= set(targets)
    unknown = free - set(signature)
    if unknown:
        raise SynkitError(
            f"monitor references unknown signals {sorted(unknown)}")
    env = dict(template_decls())
    vars_: dict[str, str] = {v: signature[v] for v in free}
    out_params: list[Param] = []
    for eq in equations:
        ty = _infer(eq.rhs, vars_, set(), env)
        vars_[eq.target] = ty
        out_params.append(Param(name=eq.target, ty=ty))
    decl = NodeDecl(
        name="Monitor",
        inputs=[Param(name=v, ty=signature[v]) for v in sorted(free)],
        outputs=out_params,
        locals=[], equations=equations)
    return elaborate(decl, env)


def check_impl_bounded(m: Node, n: Node, k: int,
                       config: EngineConfig | None = None) -> Verdict:
    """Bounded check that `m` implements `n`: n's interface is contained
    in m's, and every length-(k+1) trace of m projects to a trace of n.

    Trace inclusion is checked by running a copy of `n` on m's streams and
    searching for a round where some shared output differs; this is exact
    when `n` is deterministic and a bounded approximation otherwise.
    """
    config = config or EngineConfig()
    m_out = dict(m.outputs)
    m_in = dict(m.inputs)
    for name, ty in n.outputs:
        if m_out.get(name) != ty:
            return Verdict(status="unsupported",
                           detail=f"output {name}:{ty} of the abstraction is "
                                  f"not an output of the implementation")
    for name, ty in n.inputs:
        if m_in.get(name) != ty and m_out.get(name) != ty:
            return Verdict(status="unsupported",
                           detail=f"input {name}:{ty} of the abstraction is "
                                  f"not visible in the implementation")
    if n.init_point() is None:
        return Verdict(status="unsupported",
                       detail="abstraction has a nondeterministic initial "
                              "state; bounded inclusion check unsupported")
    copy = n
    mapping = {}
    for name, _ in n.outputs:
        mapping[name] = f"{name}_chk"
    for name, _ in n.outputs:
        copy = rename(copy, name, mapping[name])
    sysm = compose(m, copy)
    with BmcSession(sysm, config, name="impl") as b:
        b.extend_to(k)
        parts = []
        for name, _ in n.outputs:
            for r in range(k + 1):
                parts.append(
                    f"(distinct {smt_symbol(f'{name}@{r}')} "
                    f"{smt_symbol(f'{mapping[name]}@{r}')})")
        goal = parts[0] if len(parts) == 1 else "(or " + " ".join(parts) + ")"
        status = b.check_goal(goal)
        if status == "unsat":
            return Verdict(status="proved", label=f"proved (bounded {k})",
                           solver_time=b.solver_time)
        if status == "sat":
            trace, params = b.model()
            return Verdict(status="counterexample", trace=trace,
                           params=params, solver_time=b.solver_time)
        return Verdict(status="unknown", label=status,
                       solver_time=b.solver_time)
