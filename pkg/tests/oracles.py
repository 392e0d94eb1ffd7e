"""Independent oracles used by the test suite.

Everything here deliberately avoids the solver and the node algebra's
clever paths: implementation judgments are decided by exhaustively
enumerating boolean input streams and simulating, and safety properties
are evaluated directly on trace rows. These act as ground truth against
which the engine and the proof checker are judged.
"""
from __future__ import annotations

import itertools
import random

from synkit.node import Node, elaborate_program, eval_expr, simulate
from synkit.parser import parse_program
from synkit.properties import Always, At, SafetyProperty
from synkit.templates import template_decls
from synkit.typecheck import typecheck


def load_nodes(text: str) -> dict[str, Node]:
    prog = typecheck(parse_program(text), extra_nodes=template_decls())
    return elaborate_program(prog)


def bool_streams(names: list[str], length: int):
    """All input streams of exactly `length` rounds over boolean vars."""
    if not names:
        yield [{} for _ in range(length)]
        return
    per_round = [dict(zip(names, bits))
                 for bits in itertools.product([False, True],
                                               repeat=len(names))]
    for rounds in itertools.product(per_round, repeat=length):
        yield [dict(r) for r in rounds]


def random_streams(types: dict[str, str], length: int, count: int,
                   rng: random.Random):
    """`count` random streams over int/real/bool inputs."""
    def draw(ty: str):
        if ty == "bool":
            return rng.random() < 0.5
        if ty == "int":
            return rng.randint(-10, 10)
        from fractions import Fraction
        return Fraction(rng.randint(-100, 100), rng.randint(1, 10))
    for _ in range(count):
        yield [{n: draw(ty) for n, ty in types.items()}
               for _ in range(length)]


def traces_equal(a, b, columns: list[str]) -> bool:
    if len(a) != len(b):
        return False
    for r in range(len(a)):
        ra = {**a.inputs[r], **a.outputs[r]}
        rb = {**b.inputs[r], **b.outputs[r]}
        if any(ra[c] != rb[c] for c in columns):
            return False
    return True


def rows_of(node: Node, inputs) -> list[dict]:
    """Simulate and merge inputs+outputs per round."""
    t = simulate(node, inputs)
    return [{**t.inputs[r], **t.outputs[r]} for r in range(len(t))]


def impl_holds(m: Node, n: Node, length: int) -> bool:
    """Ground-truth `m |= n` for boolean-input deterministic nodes: every
    trace of m, projected to n's interface, is a trace of n — decided by
    exhausting all input streams of `length` rounds."""
    n_inputs = [x for x, _ in n.inputs]
    n_outputs = [x for x, _ in n.outputs]
    for stream in bool_streams(m.input_names(), length):
        rows = rows_of(m, stream)
        n_stream = [{x: row[x] for x in n_inputs} for row in rows]
        n_rows = rows_of(n, n_stream)
        for r in range(length):
            if any(rows[r][x] != n_rows[r][x] for x in n_outputs):
                return False
    return True


def prop_holds_on(rows: list[dict], phi: SafetyProperty) -> bool:
    """Evaluate a safety property on merged trace rows."""
    for conj in phi.conjuncts():
        if isinstance(conj, At):
            if conj.round >= len(rows):
                return False
            if not eval_expr(conj.pred, rows[conj.round]):
                return False
        elif isinstance(conj, Always):
            if not all(eval_expr(conj.pred, row) for row in rows):
                return False
        else:
            raise AssertionError(f"unexpected property {conj!r}")
    return True


def first_witness_round(node: Node, pred, length: int) -> int | None:
    """Smallest round r such that some input stream makes `pred` true at
    round r; None when no stream of `length` rounds reaches it."""
    best: int | None = None
    for stream in bool_streams(node.input_names(), length):
        for r, row in enumerate(rows_of(node, stream)):
            if eval_expr(pred, row):
                if best is None or r < best:
                    best = r
                break
    return best


# ---------------------------------------------------------------------------
# Random tiny boolean nodes (<= 2 inputs, <= 2 state bits) and
# semantics-preserving syntactic rewrites, for rule-soundness testing.
# ---------------------------------------------------------------------------

def _rand_bexpr(rng: random.Random, atoms: list[str], depth: int) -> str:
    if depth == 0 or rng.random() < 0.3:
        return rng.choice(atoms + ["true", "false"])
    op = rng.choice(["and", "or", "not", "ite"])
    if op == "not":
        return f"not ({_rand_bexpr(rng, atoms, depth - 1)})"
    if op == "ite":
        return (f"(if {_rand_bexpr(rng, atoms, depth - 1)} "
                f"then {_rand_bexpr(rng, atoms, depth - 1)} "
                f"else {_rand_bexpr(rng, atoms, depth - 1)})")
    return (f"({_rand_bexpr(rng, atoms, depth - 1)} {op} "
            f"{_rand_bexpr(rng, atoms, depth - 1)})")


def random_bool_node_src(rng: random.Random, name: str, inputs: list[str],
                         output: str, n_state: int = 1,
                         state_free_update: bool = False) -> str:
    """Source text of a tiny Mealy machine: `n_state` boolean registers and
    one output, all defined by random boolean expressions. When
    `state_free_update` is set, register updates ignore the inputs (the
    reachable state at any round is then a single point)."""
    regs = [f"M{i}" for i in range(n_state)]
    reg_atoms = [f"(false -> pre {m})" for m in regs]
    atoms = inputs + reg_atoms
    header = (f"node {name} ({', '.join(inputs)}: bool)" if inputs
              else f"node {name} ()")
    lines = [header, f"returns ({output}: bool)"]
    if regs:
        lines.append(f"var {', '.join(regs)}: bool;")
    lines.append("let")
    for m in regs:
        upd_atoms = reg_atoms if state_free_update else atoms
        lines.append(f"  {m} = {_rand_bexpr(rng, upd_atoms, 2)};")
    lines.append(f"  {output} = {_rand_bexpr(rng, atoms, 2)};")
    lines.append("tel")
    return "\n".join(lines)


def rewrite_equiv(rng: random.Random, src: str) -> str:
    """A semantics-preserving syntactic variant of a node source: each
    equation right-hand side is wrapped in a randomly chosen identity."""
    out = []
    for line in src.splitlines():
        stripped = line.strip()
        if "=" in stripped and stripped.endswith(";") and not \
                stripped.startswith(("node", "returns", "var")):
            target, rhs = stripped[:-1].split("=", 1)
            rhs = rhs.strip()
            style = rng.randrange(3)
            if style == 0:
                rhs = f"not (not ({rhs}))"
            elif style == 1:
                rhs = f"(({rhs}) or false)"
            else:
                rhs = f"(if ({rhs}) then true else false)"
            out.append(f"  {target.strip()} = {rhs};")
        else:
            out.append(line)
    return "\n".join(out)


def rename_node_src(src: str, old: str, new: str) -> str:
    """Rename a node declaration (name only) in source text."""
    return src.replace(f"node {old} ", f"node {new} ", 1)
