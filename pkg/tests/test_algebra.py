"""Node-expression algebra: composition, renaming, Init replacement,
the combinational translation and bounded implementation checking."""
import pytest

from synkit.algebra import (combi, combinational, compose, check_impl_bounded,
                            eval_nodeexpr, EvalContext, parse_nodeexpr,
                            rename, with_init)
from synkit.errors import ElaborationError
from synkit.node import simulate
from synkit.properties import parse_property

from oracles import bool_streams, load_nodes, rows_of, traces_equal


def test_compose_wires_by_name(sys1_env):
    back = sys1_env["Back"]
    cnt = sys1_env["Cnt"]
    sysm = compose(cnt, rename(back, "FOut", "En2"))
    assert "Out" in sysm.output_names()


def test_compose_rejects_output_overlap(small_env):
    with pytest.raises(ElaborationError):
        compose(small_env["Latch"], rename(small_env["Toggle"], "T", "S"))


def test_compose_freshens_colliding_internals(small_env):
    a = small_env["Parity"]       # output Q, state register
    b = rename(rename(small_env["Parity"], "Q", "Q2"), "X", "X2")
    sysm = compose(a, b)
    # both registers survive under distinct names
    assert len(sysm.states) == 2
    assert len(set(x for x, _ in sysm.states)) == 2


def test_compose_rejects_combinational_cycle():
    env = load_nodes(
        "node A (x: bool) returns (y: bool) let y = x; tel\n"
        "node B (y: bool) returns (x: bool) let x = y; tel")
    with pytest.raises(ElaborationError):
        compose(env["A"], env["B"])


def test_rename_interface_variable(small_env):
    n = rename(small_env["Cnt"], "C", "Count")
    t = simulate(n, [{"En": True}, {"En": True}])
    assert [r["Count"] for r in t.outputs] == [1, 2]


def test_rename_rejects_collision(small_env):
    with pytest.raises(ElaborationError):
        rename(small_env["Cnt"], "C", "En")


def test_with_init_changes_initial_state(small_env):
    from synkit.ast import Binop, Lit, Var
    n = with_init(small_env["Cnt"],
                  Binop(op="=", left=Var(name="pre_C"), right=Lit(value=5)))
    t = simulate(n, [{"En": True}])
    assert t.outputs[0]["C"] == 6


def test_combinational_parts_shape(small_env):
    cnt = small_env["Cnt"]
    part1, part2 = combinational(cnt)
    assert part1.states == [] and "pre_C" in part1.input_names()
    assert "pre_C'" in part1.output_names()
    assert part2.input_names() == ["pre_C'"]
    assert part2.output_names() == ["pre_C"]


def test_combinational_lemma_cnt_matches_source_halves(small_env):
    """C(Cnt, Init) agrees with the hand-written Cnt_c1/Cnt_c2 pair."""
    ghost = compose(rename(small_env["Cnt_c1"], "pC", "pC_w"),
                    rename(small_env["Cnt_c2"], "pC", "pC_w"))
    auto = combi(small_env["Cnt"])
    for stream in bool_streams(["En"], 4):
        assert [r["C"] for r in rows_of(ghost, stream)] == \
               [r["C"] for r in rows_of(auto, stream)]


def test_combi_of_stateless_node(small_env):
    both = small_env["Both"]
    c = combi(both)
    for stream in bool_streams(["A", "B"], 2):
        assert rows_of(c, stream) == rows_of(both, stream)


def test_parse_nodeexpr_modulo_reassociation(sys1_env):
    from synkit.algebra import canon_key
    a = parse_nodeexpr("(Filter || Counter) || Back")
    b = parse_nodeexpr("Filter || (Counter || Back)")
    assert canon_key(a) == canon_key(b)


def test_eval_nodeexpr_template_and_rename(sys1_env):
    e = parse_nodeexpr("RateTransition(FOut, 2)[Out := En]")
    ctx = EvalContext(env=sys1_env, signature={"FOut": "bool"})
    n = eval_nodeexpr(e, ctx)
    t = simulate(n, [{"FOut": True}] * 4)
    assert [r["En"] for r in t.outputs] == [True, False, True, False]


def test_check_impl_bounded_equivalent_nodes(small_env):
    env = load_nodes(
        "node LatchB (S: bool) returns (Q: bool)\n"
        "let Q = (if S then true else (false -> pre Q)); tel")
    v = check_impl_bounded(small_env["Latch"], env["LatchB"], 6)
    assert v.status == "proved"


def test_check_impl_bounded_counterexample(small_env):
    v = check_impl_bounded(small_env["Latch"],
                           rename(small_env["Toggle"], "T", "S"), 4)
    assert v.status == "counterexample"
    assert v.trace is not None


def test_check_impl_bounded_missing_output(small_env):
    v = check_impl_bounded(small_env["Latch"],
                           small_env["Parity"], 4)
    assert v.status in ("counterexample", "unsupported")


def test_check_impl_observer_rhs(small_env):
    from synkit.algebra import Observer, NamedNode
    ctx = EvalContext(env=small_env,
                      signature={"En": "bool", "C": "int"})
    v = check_impl_bounded(NamedNode(name="Cnt"),
                           Observer(prop=parse_property("C >= 0 @ 3")),
                           3, ctx=ctx)
    assert v.status == "proved"
