"""Stream templates: instantiation, nesting, symbolic parameters."""
from fractions import Fraction

import pytest

from synkit.errors import SynkitError
from synkit.node import simulate
from synkit.templates import (TEMPLATE_NAMES, instantiate, nest,
                              symbolic_generator, symbolic_params,
                              template_app)


def closed_stream(node, k):
    t = simulate(node, [{} for _ in range(k)])
    return [r["Out"] for r in t.outputs]


def test_template_names():
    assert {"Constant", "Step", "Square", "RateTransition",
            "Delay"} <= set(TEMPLATE_NAMES)


def test_constant_stream():
    n = instantiate("Constant", [7], [], out_ty="int")
    assert closed_stream(n, 3) == [7, 7, 7]


def test_step_stream():
    n = instantiate("Step", [2], [0, 9], out_ty="int")
    assert closed_stream(n, 5) == [0, 0, 9, 9, 9]


def test_square_stream():
    # period 2t = 4, phase 1: rounds 0.. give c = 1,2,3,0,1,...
    n = instantiate("Square", [2, 1], [True, False], out_ty="bool")
    assert closed_stream(n, 6) == [True, False, False, True, True, False]


def test_square_real_values():
    n = instantiate("Square", [5, 1], [Fraction(1), Fraction(-1)],
                    out_ty="real")
    vals = closed_stream(n, 12)
    assert vals[:4] == [Fraction(1)] * 4 and vals[4:9] == [Fraction(-1)] * 5


def test_rate_transition_gating():
    n = instantiate("RateTransition", [3], [True], out_ty="bool")
    assert closed_stream(n, 7) == [True, False, False, True, False, False,
                                   True]


def test_delay_static_parameter():
    n = instantiate("Delay", [2], [False, True], out_ty="bool")
    # two registers initialized false, then the constant true arrives
    assert closed_stream(n, 4) == [False, False, True, True]


def test_nested_templates():
    inner = template_app("Step", [2], [0, 5])
    n = nest("Step", [4], [inner, 9], out_ty="int")
    assert closed_stream(n, 6) == [0, 0, 5, 5, 9, 9]


def test_unknown_template_rejected():
    with pytest.raises(SynkitError):
        instantiate("NoSuch", [], [1], out_ty="int")


def test_delay_requires_positive_depth():
    with pytest.raises(SynkitError):
        instantiate("Delay", [0], [False, True], out_ty="bool")


def test_symbolic_params_square_domain():
    params, dom = symbolic_params("Square", "real")
    names = [p for p, _ in params]
    assert set(names) >= {"t", "p"}
    text = str(dom)
    assert "t" in text and "p" in text


def test_symbolic_generator_simulates_once_bound():
    gen, dom = symbolic_generator("Step", "int", prefix="In_")
    from synkit.node import bind_params
    closed = bind_params(gen, {"In_s": 2, "In_v1": 0, "In_v2": 9})
    assert closed_stream(closed, 4) == [0, 0, 9, 9]
