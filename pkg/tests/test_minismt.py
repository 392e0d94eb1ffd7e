"""The bundled SMT solver: linear real/int arithmetic with booleans."""
import io
import time

from synkit.minismt.solver import Solver


def run(script: str) -> list[str]:
    out = io.StringIO()
    s = Solver(out=out)
    s.run_script(script)
    return out.getvalue().split("\n")[:-1]


def test_trivial_sat_unsat():
    assert run("(check-sat)") == ["sat"]
    assert run("(assert false)(check-sat)") == ["unsat"]


def test_real_strict_bounds():
    assert run("""
        (declare-fun x () Real)
        (assert (< x 1.0)) (assert (> x 0.0))
        (check-sat)""") == ["sat"]
    assert run("""
        (declare-fun x () Real)
        (assert (< x 0.0)) (assert (> x 0.0))
        (check-sat)""") == ["unsat"]


def test_integer_cut():
    # 0 < 3x < 3 has no integer solution
    assert run("""
        (declare-fun x () Int)
        (assert (> (* 3 x) 0)) (assert (< (* 3 x) 3))
        (check-sat)""") == ["unsat"]


def test_model_values():
    out = run("""
        (declare-fun x () Int)
        (declare-fun b () Bool)
        (assert (= x 5)) (assert b)
        (check-sat)
        (get-value (x b))""")
    assert out[0] == "sat"
    assert "(x 5)" in out[1] and "(b true)" in out[1]


def test_push_pop():
    out = run("""
        (declare-fun x () Int)
        (assert (>= x 0))
        (push 1)
        (assert (< x 0))
        (check-sat)
        (pop 1)
        (check-sat)""")
    assert out == ["unsat", "sat"]


def test_ite_terms():
    assert run("""
        (declare-fun x () Int)
        (declare-fun b () Bool)
        (assert (= x (ite b 1 2)))
        (assert (= x 2)) (assert b)
        (check-sat)""") == ["unsat"]


def test_boolean_structure():
    assert run("""
        (declare-fun a () Bool)
        (declare-fun b () Bool)
        (assert (or a b)) (assert (not a)) (assert (not b))
        (check-sat)""") == ["unsat"]


def test_define_fun_inlined():
    out = run("""
        (declare-fun x () Int)
        (define-fun y () Int (+ x 1))
        (assert (= y 3))
        (check-sat)
        (get-value (x y))""")
    assert out[0] == "sat" and "(x 2)" in out[1]


def test_rational_model_exact():
    out = run("""
        (declare-fun x () Real)
        (assert (= (* 3.0 x) 1.0))
        (check-sat)
        (get-value (x))""")
    assert out[0] == "sat" and "(/ 1 3)" in out[1]


def test_deterministic_chain_presolved_fast():
    """A long unit-propagation chain (the shape BMC produces for closed
    deterministic systems) must be solved by preprocessing, not search."""
    n = 600
    lines = ["(declare-fun x0 () Int)", "(assert (= x0 0))"]
    for i in range(1, n):
        lines.append(f"(declare-fun x{i} () Int)")
        lines.append(f"(declare-fun b{i} () Bool)")
        lines.append(f"(assert (= b{i} (< x{i-1} {n})))")
        lines.append(f"(assert (= x{i} (ite b{i} (+ x{i-1} 1) x{i-1})))")
    lines.append(f"(assert (not (= x{n-1} {n-1})))")
    lines.append("(check-sat)")
    t0 = time.monotonic()
    assert run("\n".join(lines)) == ["unsat"]
    assert time.monotonic() - t0 < 5.0


def test_conjoined_unit_bindings_propagate():
    # one assert carrying many bindings (initial-state shape)
    assert run("""
        (declare-fun a () Int)
        (declare-fun b () Int)
        (assert (and (= a 1) (= b 2)))
        (assert (= (+ a b) 4))
        (check-sat)""") == ["unsat"]
