"""Parsing, typechecking, normalization and proof-script parsing."""
import pytest
from hypothesis import given, settings, strategies as st

from synkit.errors import ParseError, ProofError, TypeError_
from synkit.normalize import normalize_program
from synkit.parser import parse_program, pretty_program
from synkit.proof import parse_proof
from synkit.templates import template_decls
from synkit.typecheck import typecheck

from conftest import read_corpus
from oracles import load_nodes, random_bool_node_src

CNT = """
node Cnt (En: bool) returns (C: int)
let
  C = if En then 1 + pre C else pre C;
tel
"""


def test_parse_cnt_listing():
    prog = parse_program(CNT)
    assert [d.name for d in prog.nodes] == ["Cnt"]
    decl = prog.nodes[0]
    assert [(p.name, p.ty) for p in decl.inputs] == [("En", "bool")]
    assert [(p.name, p.ty) for p in decl.outputs] == [("C", "int")]
    assert len(decl.equations) == 1


def test_parse_empty_file():
    assert parse_program("").nodes == []
    assert parse_program("-- only a comment\n").nodes == []


def test_parse_error_has_position():
    with pytest.raises(ParseError) as exc:
        parse_program("node A(x: int) returns (y: int) let y = ; tel")
    assert "syntax error" in str(exc.value)


def test_duplicate_node_name_rejected():
    with pytest.raises(ParseError):
        parse_program(CNT + CNT)


def test_nested_pre_normalized_to_fresh_local():
    prog = parse_program(
        "node A (x: int) returns (y: int) let y = pre pre x; tel")
    norm = normalize_program(prog)
    decl = norm.nodes[0]
    # one fresh local carrying the inner pre
    assert len(decl.locals) == 1
    assert len(decl.equations) == 2


def test_normalization_idempotent_on_corpus():
    prog = normalize_program(parse_program(read_corpus("sys1.lus")))
    again = normalize_program(prog)
    assert pretty_program(prog) == pretty_program(again)


def test_pretty_parse_roundtrip_on_corpus():
    for name in ("sys1.lus", "sys2.lus", "small_nodes.lus"):
        prog = parse_program(read_corpus(name))
        text = pretty_program(prog)
        assert pretty_program(parse_program(text)) == text


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**9))
def test_pretty_parse_roundtrip_random_nodes(seed):
    import random
    rng = random.Random(seed)
    src = random_bool_node_src(rng, "N", ["A", "B"], "X", n_state=2)
    prog = parse_program(src)
    text = pretty_program(prog)
    assert pretty_program(parse_program(text)) == text


def test_typecheck_cnt():
    prog = typecheck(parse_program(CNT))
    eq = prog.nodes[0].equations[0]
    assert eq.rhs.ty == "int"


def test_typecheck_step_unifies_element_type():
    src = ("node A (x: int) returns (y: int)\n"
           "let y = Step(2, 0, 9); tel")
    prog = typecheck(parse_program(src), extra_nodes=template_decls())
    assert prog.nodes[0].equations[0].rhs.ty == "int"


def test_typecheck_rejects_mixed_arrow_arms():
    with pytest.raises(TypeError_):
        typecheck(parse_program(
            "node A () returns (y: int) let y = 1 -> true; tel"))


def test_typecheck_rejects_unbound_identifier():
    with pytest.raises(TypeError_):
        typecheck(parse_program(
            "node A () returns (y: int) let y = z; tel"))


def test_parse_proof_fig3_shape():
    tree = parse_proof(read_corpus("fig3.proof"))
    assert tree.rule == "Cons"
    assert len(tree.premises) == 3
    rules = set()

    def walk(n):
        rules.add(n.rule)
        for p in n.premises:
            walk(p)
    walk(tree)
    assert rules == {"V", "RT", "AG", "Cons", "IP"}


def test_parse_proof_single_leaf():
    tree = parse_proof("goal: Cnt |= obs(C >= 0 @ 1)\nrule: V\nbound: 1\n")
    assert tree.rule == "V" and tree.premises == [] and tree.bound == 1


def test_parse_proof_unknown_rule():
    with pytest.raises(ProofError):
        parse_proof("goal: Cnt |= obs(C >= 0 @ 1)\nrule: XYZ\n")


def test_load_nodes_unbound_application():
    with pytest.raises(TypeError_):
        load_nodes("node A (x: bool) returns (y: bool)\n"
                   "let y = NoSuchNode(x); tel")
