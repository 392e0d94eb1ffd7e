"""Transition-system unrolling, solver sessions and model decoding."""
import pytest

from synkit.errors import SolverError
from synkit.smt import (SmtConfig, SolverSession, check_agreement,
                        decode_model, extend_unrolling, smt_symbol,
                        start_unrolling, _SORTS)

from oracles import load_nodes


def unroll(node, k):
    u = start_unrolling(node)
    while u.k < k:
        extend_unrolling(u)
    return u


def emit(session, u):
    for sym, ty in u.decls:
        session.send(f"(declare-fun {smt_symbol(sym)} () {_SORTS[ty]})")
    for a in u.assertions:
        session.send(f"(assert {a})")


@pytest.fixture(scope="module")
def cnt():
    return load_nodes(
        "node Cnt (En: bool) returns (C: int)\n"
        "let C = (0 -> pre C) + (if En then 1 else 0); tel")["Cnt"]


def test_unrolling_symbols_per_round(cnt):
    u = unroll(cnt, 2)
    syms = {s for s, _ in u.decls}
    assert {"En@0", "C@0", "En@2", "C@2", "pre_C@-1"} <= syms


def test_unsat_unreachable_value(cnt):
    u = unroll(cnt, 2)
    with SolverSession(SmtConfig()) as s:
        emit(s, u)
        s.send(f"(assert (= {smt_symbol('C@2')} 5))")
        assert s.check() == "unsat"


def test_sat_model_decodes_and_replays(cnt):
    u = unroll(cnt, 3)
    with SolverSession(SmtConfig()) as s:
        emit(s, u)
        s.send(f"(assert (= {smt_symbol('C@3')} 3))")
        assert s.check() == "sat"
        trace, params = decode_model(u, s.get_model(), session=s)
    assert len(trace) == 4
    assert trace.outputs[3]["C"] == 3
    # agreement with the simulator is a hard assertion
    check_agreement(u, trace, params)


def test_agreement_rejects_corrupted_trace(cnt):
    u = unroll(cnt, 2)
    with SolverSession(SmtConfig()) as s:
        emit(s, u)
        s.send(f"(assert (= {smt_symbol('C@2')} 2))")
        assert s.check() == "sat"
        trace, params = decode_model(u, s.get_model(), session=s)
    trace.outputs[1]["C"] = 99
    with pytest.raises((AssertionError, SolverError)):
        check_agreement(u, trace, params)


def test_rigid_params_unindexed():
    gen = load_nodes(
        "node G (const v: int) returns (Out: int)\n"
        "let Out = v; tel")["G"]
    u = unroll(gen, 1)
    syms = {s for s, _ in u.decls}
    assert "v" in syms and "v@0" not in syms


def test_push_pop_isolates_goals(cnt):
    u = unroll(cnt, 1)
    with SolverSession(SmtConfig()) as s:
        emit(s, u)
        s.push()
        s.send(f"(assert (= {smt_symbol('C@1')} 9))")
        assert s.check() == "unsat"
        s.pop()
        s.send(f"(assert (= {smt_symbol('C@1')} 1))")
        assert s.check() == "sat"


def test_broken_solver_command_reported():
    cfg = SmtConfig(command=["/nonexistent/solver"])
    with pytest.raises(SolverError):
        SolverSession(cfg).send("(check-sat)")
