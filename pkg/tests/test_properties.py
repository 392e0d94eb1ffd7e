"""Safety properties: parsing, observer compilation, rescaling, priming
and implication checking."""
import pytest

from synkit.algebra import compose
from synkit.errors import SynkitError
from synkit.node import simulate
from synkit.properties import (At, PropAnd, implies, parse_property, prime,
                               props_equal, rescale)
from synkit.properties import observer

from oracles import bool_streams, prop_holds_on, rows_of


def test_parse_property_forms():
    phi = parse_property("FOut @ 10 /\\ FOut @ 20")
    assert isinstance(phi, PropAnd) and len(phi.conjuncts()) == 2
    at = parse_property("C >= 2 @ 5")
    assert isinstance(at, At) and at.round == 5
    bare = parse_property("C >= 0")
    assert bare.max_round() == 0  # invariant: no fixed round index


def test_at_rejects_negative_round():
    with pytest.raises(SynkitError):
        At(pred=parse_property("C >= 0").pred, round=-1)


def test_observer_monitor_tracks_violation(small_env):
    cnt = small_env["Cnt"]
    phi = parse_property("C = 1 @ 1")
    mon = observer(phi, {"En": "bool", "C": "int"})
    sysm = compose(cnt, mon)
    ok = mon.output_names()[0]
    good = rows_of(sysm, [{"En": b} for b in (False, True, False)])
    assert all(r[ok] for r in good)
    bad = rows_of(sysm, [{"En": b} for b in (True, True, False)])
    # C@1 = 2: the monitor flags exactly the violated round
    assert [r[ok] for r in bad] == [True, False, True]


def test_observer_always_form(small_env):
    mon = observer(parse_property("C >= 0"), {"En": "bool", "C": "int"})
    sysm = compose(small_env["Cnt"], mon)
    ok = mon.output_names()[0]
    assert all(r[ok] for s in bool_streams(["En"], 4)
               for r in rows_of(sysm, s))


def test_rescale_rounds():
    phi = parse_property("FOut @ 1 /\\ FOut @ 2")
    assert str(rescale(phi, 10)) == "FOut @ 10 /\\ FOut @ 20"
    with pytest.raises(SynkitError):
        rescale(phi, 0)


def test_rescale_identity():
    phi = parse_property("FOut @ 3")
    assert props_equal(rescale(phi, 1), phi)


def test_prime_state_predicate():
    e = parse_property("pre_C = 3").pred
    assert str(prime(e)) == "(pre_C' = 3)"


def test_props_equal_modulo_order():
    a = parse_property("X @ 1 /\\ Y @ 2")
    b = parse_property("Y @ 2 /\\ X @ 1")
    assert props_equal(a, b)
    assert not props_equal(a, parse_property("X @ 1"))


def test_implies_valid_and_countermodel():
    sig = {"FOut": "bool", "COut": "bool"}
    strong = parse_property("FOut @ 1 /\\ COut @ 2")
    weak = parse_property("COut @ 2")
    ok, model = implies(strong, weak, sig)
    assert ok and model is None
    ok, model = implies(weak, strong, sig)
    assert not ok and model is not None


def test_implies_arithmetic():
    sig = {"C": "int"}
    ok, _ = implies(parse_property("C >= 2 @ 1"), parse_property("C >= 0 @ 1"),
                    sig)
    assert ok


def test_prop_holds_on_oracle_agrees_with_observer(small_env):
    """The trace-row property oracle and the compiled monitor agree."""
    cnt = small_env["Cnt"]
    phi = parse_property("C >= 1 @ 2")
    mon = observer(phi, {"En": "bool", "C": "int"})
    sysm = compose(cnt, mon)
    ok = mon.output_names()[0]
    for stream in bool_streams(["En"], 4):
        rows = rows_of(sysm, stream)
        assert prop_holds_on(rows, phi) == all(r[ok] for r in rows)
