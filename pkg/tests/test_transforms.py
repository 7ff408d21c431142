import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sdpl.errors import ShapeMismatch
from sdpl.interp import denote
from sdpl.parser import parse_term
from sdpl.rdrc import evaluate
from sdpl.syntax import REAL, If, Prod
from sdpl.transforms import (check_equivalence, match_fd, rewrite, sugar_dagger, transform_if_rd,
                             transform_while_fd, transform_while_rd)
from sdpl.typecheck import typecheck

AV = [("a", REAL), ("v", REAL)]
ABS = "v.rd(x:real. if gt0(x) then x else neg(x))(a)"
P = Prod(REAL, REAL)
# three doublings of snd(p) when fst(p) = 2.5; the Jacobian there is diag(1, 8)
DOUBLING = "while gt0(fst(p)) do (fst(p) + -1, mul(snd(p), 2))"


def den(m, gamma, x):
    return evaluate(denote(m, gamma), x)


def test_fd_sugar_value():
    m = parse_term("fd(x: real. mul(x, x))(3).1")
    assert match_fd(m) is not None
    np.testing.assert_allclose(den(m, [], []), [6.0])


def test_dagger_sugar_linear():
    m = sugar_dagger("y", REAL, parse_term("mul(y, 2)"), y="w")
    np.testing.assert_allclose(den(m, [("w", REAL)], [5.0]), [10.0])


def test_if_rd_abs():
    m = parse_term(ABS)
    t = transform_if_rd(m)
    assert isinstance(t, If)
    assert typecheck([], AV, t) == REAL
    np.testing.assert_allclose(den(t, AV, [2.0, 1.0]), [1.0])
    np.testing.assert_allclose(den(t, AV, [-2.0, 1.0]), [-1.0])


def test_if_rd_true_guard():
    m = parse_term("v.rd(x:real. if true then sin(x) else x)(a)")
    rep = check_equivalence(m, transform_if_rd(m), AV)
    assert rep.passed and rep.compared == rep.points


def test_while_fd_doubling():
    gamma = [("a", P), ("v", P)]
    m = parse_term(f"fd(p: real * real. {DOUBLING})(a).v")
    t = transform_while_fd(m)
    # a = (2.5, 1): three iterations; tangent (0, 1) -> 8
    np.testing.assert_allclose(den(t, gamma, [2.5, 1.0, 0.0, 1.0]), [0.0, 8.0])
    np.testing.assert_allclose(den(m, gamma, [2.5, 1.0, 0.0, 1.0]), [0.0, 8.0])
    # zero iterations: the tangent passes through
    np.testing.assert_allclose(den(t, gamma, [-1.0, 1.0, 0.5, 3.0]), [0.5, 3.0])


def test_while_rd_doubling_and_zero_iterations():
    gamma = [("a", P), ("v", P)]
    m = parse_term(f"v.rd(p: real * real. {DOUBLING})(a)")
    t = transform_while_rd(m)
    assert typecheck([], gamma, t) == P
    np.testing.assert_allclose(den(t, gamma, [2.5, 1.0, 0.0, 1.0]), [0.0, 8.0])
    np.testing.assert_allclose(den(t, gamma, [-1.0, 1.0, 0.5, 3.0]), [0.5, 3.0])
    np.testing.assert_allclose(den(m, gamma, [2.5, 1.0, 0.0, 1.0]), [0.0, 8.0])


def test_shape_errors():
    with pytest.raises(ShapeMismatch):
        transform_if_rd(parse_term("v.rd(x:real. x)(a)"))
    with pytest.raises(ShapeMismatch):
        transform_while_rd(parse_term(ABS))
    with pytest.raises(ValueError):
        rewrite(parse_term(ABS), "nope")


def test_identical_terms_zero_deviation():
    m = parse_term(ABS)
    rep = check_equivalence(m, m, AV)
    assert rep.passed and rep.max_deviation == 0.0


def test_swapped_branches_detected():
    m = parse_term(ABS)
    t = transform_if_rd(m)
    broken = If(t.cond, t.orelse, t.then)
    rep = check_equivalence(m, broken, AV, samples=20)
    assert not rep.passed
    assert any(f["reason"] in ("value", "operational") for f in rep.failures)


def test_rewrite_counts_nested():
    m = parse_term("1.rd(x:real. if gt0(x) then 1.rd(y:real. if gt0(y) then y else 0)(x) else x)(a)")
    out, n = rewrite(m, "if-rd")
    assert n == 2
    assert check_equivalence(m, out, [("a", REAL)]).passed
    # one pass can expose new redexes; a second pass removes them
    again, k = rewrite(out, "if-rd")
    assert k >= 1 and rewrite(again, "if-rd")[1] == 0
    assert check_equivalence(m, again, [("a", REAL)]).passed


@settings(max_examples=15, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.sampled_from(["sin", "cos", "neg", "exp"]))
def test_if_rd_agrees_pointwise(a, v, op):
    m = parse_term(f"v.rd(x:real. if gt0(x + -0.3) then {op}(x) else mul(x, x))(a)")
    rep = check_equivalence(m, transform_if_rd(m), AV, points=[[a, v]], operational=1)
    assert rep.passed
