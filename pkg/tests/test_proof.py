"""Proof trees: structural rule checking, leaf discharge, tree validation
and the proof-script round trip."""
import pytest

from synkit.engine import EngineConfig
from synkit.errors import ProofError
from synkit.proof import (ProofContext, ProofNode, Judgment, check_rule,
                          discharge_leaf, format_proof, parse_proof,
                          temp_split_assist, validate_tree)

from conftest import read_corpus


def ctx_for(env):
    return ProofContext.for_env(env)


def check(env, text):
    return check_rule(parse_proof(text), ctx_for(env), EngineConfig())


# -- structural checks -------------------------------------------------------

AG_OK = """
goal: Latch || Parity[X := Q2][Q := QP] |= LatchAbs || ParityAbs
rule: AG
premise {
  goal: Latch || ParityAbs |= LatchAbs
  rule: V
}
premise {
  goal: Parity[X := Q2][Q := QP] || LatchAbs |= ParityAbs
  rule: V
}
"""


@pytest.fixture(scope="module")
def ag_env(small_env):
    from oracles import load_nodes
    env = dict(small_env)
    env.update(load_nodes(
        "node LatchAbs (S: bool) returns (Q: bool)\n"
        "let Q = (S or (false -> pre Q)) or false; tel\n"
        "node ParityAbs (Q2: bool) returns (QP: bool)\n"
        "let QP = if Q2 then not (false -> pre QP)\n"
        "         else (false -> pre QP); tel"))
    return env


def test_ag_shape_accepted(ag_env):
    assert check(ag_env, AG_OK).status == "shape_ok"


def test_ag_rejects_wrong_premise_split(ag_env):
    bad = AG_OK.replace("goal: Latch || ParityAbs |= LatchAbs",
                        "goal: Latch |= LatchAbs")
    assert check(ag_env, bad).status == "shape_error"


def test_ag_rejects_overlapping_abstraction_outputs(ag_env):
    # both abstractions claiming the same output violates compatibility
    bad = AG_OK.replace("[Q := QP]", "[Q := Q3]").replace(
        "ParityAbs", "ParityAbs[QP := Q]")
    v = check(ag_env, bad)
    assert v.status == "shape_error"


TEMP_OK = """
goal: Cnt |= obs(C >= 0 @ 5)
rule: Temp
j: 2
k: 2
state_pred: pre_C >= 0
premise {
  goal: C(Cnt, init) |= obs(pre_C' >= 0 @ 2)
  rule: V
}
premise {
  goal: C(Cnt, pre_C >= 0) |= obs(C >= 0 @ 2)
  rule: V
}
"""


def test_temp_shape_accepted(small_env):
    assert check(small_env, TEMP_OK).status == "shape_ok"


def test_temp_rejects_index_arithmetic(small_env):
    bad = TEMP_OK.replace("@ 5", "@ 4")
    assert check(small_env, bad).status == "shape_error"


def test_temp_rejects_mismatched_primed_predicate(small_env):
    bad = TEMP_OK.replace("pre_C' >= 0", "pre_C' >= 1")
    assert check(small_env, bad).status == "shape_error"


RT_OK = """
goal: RateTransition(X, 6)[En := T] || Toggle || obs(Q @ 12)
      |= obs(Q @ 18)
rule: RT
r: 3
s: 2
premise {
  goal: RateTransition(X, 2)[En := T] || Toggle || obs(Q @ 4)
        |= obs(Q @ 6)
  rule: V
}
"""


def test_rt_shape_accepted(small_env):
    assert check(small_env, RT_OK).status == "shape_ok"


def test_rt_rejects_off_by_one(small_env):
    bad = RT_OK.replace("obs(Q @ 18)", "obs(Q @ 17)")
    assert check(small_env, bad).status == "shape_error"


def test_rt_requires_rate_at_least_two(small_env):
    bad = RT_OK.replace("r: 3", "r: 1").replace("6)", "2)").replace(
        "@ 12", "@ 4").replace("@ 18", "@ 6")
    assert check(small_env, bad).status == "shape_error"


CONS_OK = """
goal: obs(C >= 3 @ 2) |= obs(C >= 0 @ 2)
rule: Cons
premise {
  goal: obs(C >= 3 @ 2) |= obs(C >= 2 @ 2)
  rule: IP
}
premise {
  goal: obs(C >= 2 @ 2) |= obs(C >= 1 @ 2)
  rule: IP
}
premise {
  goal: obs(C >= 1 @ 2) |= obs(C >= 0 @ 2)
  rule: IP
}
"""


def test_cons_chain_accepted(small_env):
    assert check(small_env, CONS_OK).status == "shape_ok"


def test_cons_rejects_broken_chain(small_env):
    bad = CONS_OK.replace("goal: obs(C >= 2 @ 2) |= obs(C >= 1 @ 2)",
                          "goal: obs(C >= 9 @ 2) |= obs(C >= 1 @ 2)")
    assert check(small_env, bad).status == "shape_error"


def test_ip_valid_and_invalid(small_env):
    good = "goal: obs(C >= 2 @ 1) |= obs(C >= 0 @ 1)\nrule: IP\n"
    assert check(small_env, good).status == "shape_ok"
    bad = "goal: obs(C >= 0 @ 1) |= obs(C >= 2 @ 1)\nrule: IP\n"
    v = check(small_env, bad)
    assert v.status == "shape_error"


def test_rule_arity_enforced():
    from synkit.algebra import parse_nodeexpr
    goal = Judgment(lhs=parse_nodeexpr("Cnt"), rhs=parse_nodeexpr("Cnt"))
    with pytest.raises(ProofError):
        ProofNode(goal=goal, rule="AG", premises=[])
    with pytest.raises(ProofError):
        ProofNode(goal=goal, rule="NoSuchRule", premises=[])


# -- leaf discharge ----------------------------------------------------------

def test_discharge_observer_leaf(small_env):
    leaf = parse_proof("goal: Cnt |= obs(C >= 0 @ 2)\nrule: V\n")
    v = discharge_leaf(leaf, ctx_for(small_env), EngineConfig())
    assert v.status == "proved"


def test_discharge_trivial_true_leaf(small_env):
    leaf = parse_proof("goal: Cnt |= obs(true @ 0)\nrule: V\nbound: 0\n")
    v = discharge_leaf(leaf, ctx_for(small_env), EngineConfig())
    assert v.status == "proved"


def test_discharge_false_leaf_counterexample(small_env):
    leaf = parse_proof("goal: Cnt |= obs(C = 5 @ 1)\nrule: V\n")
    v = discharge_leaf(leaf, ctx_for(small_env), EngineConfig())
    assert v.status == "counterexample"
    assert v.trace is not None


def test_discharge_subcomposition_projection(small_env):
    leaf = parse_proof("goal: Latch || Toggle |= Toggle\nrule: V\n")
    v = discharge_leaf(leaf, ctx_for(small_env), EngineConfig())
    assert v.status == "proved"
    assert "projection" in v.label


def test_discharge_lhs_observers_are_assumptions(small_env):
    leaf = parse_proof(
        "goal: Cnt || obs(En @ 0 /\\ En @ 1) |= obs(C = 2 @ 1)\nrule: V\n")
    v = discharge_leaf(leaf, ctx_for(small_env), EngineConfig())
    assert v.status == "proved"


# -- tree validation ---------------------------------------------------------

def test_validate_fig3_all_green(sys1_env):
    tree = parse_proof(read_corpus("fig3.proof"))
    report = validate_tree(tree, ctx_for(sys1_env), EngineConfig())
    assert report.ok, report.render()
    assert len(report.entries) == 12


def test_validate_fig4_all_green(sys2_env):
    tree = parse_proof(read_corpus("fig4.proof"))
    report = validate_tree(tree, ctx_for(sys2_env), EngineConfig())
    assert report.ok, report.render()
    assert report.entries[0].rule == "Temp"


def test_validate_flags_exactly_the_bad_node(small_env):
    bad = CONS_OK.replace("goal: obs(C >= 1 @ 2) |= obs(C >= 0 @ 2)",
                          "goal: obs(C >= 1 @ 2) |= obs(C >= 5 @ 2)")
    # fix the chain so only the IP leaf itself is wrong
    bad = bad.replace("goal: obs(C >= 3 @ 2) |= obs(C >= 0 @ 2)",
                      "goal: obs(C >= 3 @ 2) |= obs(C >= 5 @ 2)")
    report = validate_tree(parse_proof(bad), ctx_for(small_env),
                           EngineConfig())
    failing = [e.path for e in report.entries if not e.ok]
    assert failing == ["root.3"]


def test_validate_deterministic(sys1_env):
    tree = parse_proof(read_corpus("fig3.proof"))
    r1 = validate_tree(tree, ctx_for(sys1_env), EngineConfig())
    r2 = validate_tree(tree, ctx_for(sys1_env), EngineConfig())
    assert [(e.path, e.verdict.status) for e in r1.entries] == \
           [(e.path, e.verdict.status) for e in r2.entries]


def test_report_dict_is_superset_of_text(sys1_env):
    tree = parse_proof(read_corpus("fig3.proof"))
    report = validate_tree(tree, ctx_for(sys1_env), EngineConfig())
    d = report.to_dict()
    assert d["ok"] is True
    assert len(d["nodes"]) == len(report.entries)
    for e, n in zip(report.entries, d["nodes"]):
        assert n["path"] == e.path and n["rule"] == e.rule
        assert n["goal"] == e.goal and n["status"] == e.verdict.status


# -- temp-split assistance ----------------------------------------------------

def test_temp_split_assist_cnt(small_env):
    e = temp_split_assist(small_env["Cnt"], [{"En": True}] * 3, 2)
    assert str(e) == "(pre_C = 3)"


def test_temp_split_assist_round0_is_init(small_env):
    e = temp_split_assist(small_env["Cnt"], [{"En": False}] * 1, 0)
    assert str(e) == "(pre_C = 0)"


# -- script round trip ---------------------------------------------------------

def test_format_parse_roundtrip():
    tree = parse_proof(read_corpus("fig3.proof"))
    text = format_proof(tree)
    again = parse_proof(text)
    assert format_proof(again) == text
