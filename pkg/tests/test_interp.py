import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sdpl import rdrc
from sdpl.interp import (decode, denote, denote_bool, denote_funenv, denote_program, denote_type,
                         encode, kleene_fix)
from sdpl.opsem import collect_funenv
from sdpl.parser import parse_program, parse_term
from sdpl.rdrc import evaluate
from sdpl.syntax import REAL, UNIT, FalseB, Prod, TrueB

R2 = [("x", REAL)]


def at(src, gamma, x, fuel=10_000):
    return evaluate(denote(parse_term(src), gamma, fuel=fuel), x)


def test_denote_type():
    assert denote_type(UNIT) == 0
    assert denote_type(REAL) == 1
    assert denote_type(Prod(REAL, Prod(REAL, UNIT))) == 2


def test_encode_decode():
    ty = Prod(REAL, Prod(UNIT, REAL))
    v = (1.5, ((), -2.0))
    np.testing.assert_array_equal(encode(v, ty), [1.5, -2.0])
    assert decode(encode(v, ty), ty) == v


def test_add():
    np.testing.assert_array_equal(at("x + x", R2, [3.0]), [6.0])


def test_while_countdown():
    np.testing.assert_allclose(at("while gt0(p) do p + -1", [("p", REAL)], [2.5], fuel=100), [-0.5])


def test_while_runs_out_of_fuel():
    assert at("while gt0(p) do p + -1", [("p", REAL)], [50.5], fuel=10) is None
    np.testing.assert_allclose(at("while gt0(p) do p + -1", [("p", REAL)], [50.5], fuel=60), [-0.5])


def test_rd_square():
    np.testing.assert_allclose(at("v.rd(x:real. mul(x,x))(a)", [("a", REAL), ("v", REAL)], [3.0, 1.0]), [6.0])


def test_if_glues_branches():
    src = "if gt0(x) then sin(x) else mul(x, x)"
    np.testing.assert_allclose(at(src, R2, [1.0]), [math.sin(1.0)])
    np.testing.assert_allclose(at(src, R2, [-2.0]), [4.0])
    assert at(src, R2, [0.0]) is None


def test_bool_denotations():
    t, f = denote_bool(TrueB(), R2)
    assert evaluate(t, [1.0]) is not None and evaluate(f, [1.0]) is None
    t, f = denote_bool(FalseB(), R2)
    assert evaluate(t, [1.0]) is None and evaluate(f, [1.0]) is not None


def test_kleene_fix_empty_functional():
    fix = kleene_fix(lambda h: h, 10, 1, 1)
    assert evaluate(fix, [1.0]) is None


def test_kleene_fix_constant_functional():
    c = rdrc.compose(rdrc.Bang(1), rdrc.ConstPoint([2.5]))
    fix = kleene_fix(lambda h: c, 3, 1, 1)
    np.testing.assert_array_equal(evaluate(fix, [9.0]), [2.5])


FACT = """input n: real;
letrec fact(k: real): real = if gt0(k + -0.5) then mul(k, fact(k + -1)) else 1 in fact(n)"""


def test_guard_boundary_is_undefined():
    # gt0 is neither true nor false at 0, so the unshifted guard gets stuck at fact(0)
    p = parse_program(FACT.replace("k + -0.5", "k"))
    assert evaluate(denote_program(p, fuel=20), [5.0]) is None


def test_factorial_fuel():
    p = parse_program(FACT)
    np.testing.assert_allclose(evaluate(denote_program(p, fuel=10), [5.0]), [120.0])
    np.testing.assert_allclose(evaluate(denote_program(p, fuel=6), [5.0]), [120.0])
    assert evaluate(denote_program(p, fuel=5), [5.0]) is None


def test_function_assignment():
    assert denote_funenv({}) == {}
    env, _ = collect_funenv(parse_term("letrec g(y: real): real = mul(y, y) in g(1)"))
    g, a, b = denote_funenv(env)["g"]
    assert a == REAL and b == REAL
    np.testing.assert_allclose(evaluate(g, [3.0]), [9.0])
    env, _ = collect_funenv(parse_program(FACT).term)
    np.testing.assert_allclose(evaluate(denote_funenv(env, fuel=6)["fact"][0], [5.0]), [120.0])


def test_unit_inputs():
    p = parse_program("input u: unit, x: real;\n(u, x + 1)")
    np.testing.assert_array_equal(evaluate(denote_program(p), [2.0]), [3.0])


def test_partial_ops():
    assert at("sqrtp(x)", R2, [-1.0]) is None
    assert at("recip(x)", R2, [0.0]) is None
    np.testing.assert_allclose(at("recip(x)", R2, [4.0]), [0.25])


@settings(max_examples=30, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5))
def test_rd_matches_chain_rule(a, v):
    out = at("v.rd(x:real. sin(mul(x, x)))(a)", [("a", REAL), ("v", REAL)], [a, v])
    assert out[0] == pytest.approx(2 * a * math.cos(a * a) * v, rel=1e-12, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3, allow_subnormal=False), st.integers(0, 8))
def test_fuel_monotone_while(x, k):
    f_small = denote(parse_term("while gt0(p + -1) do mul(p, 0.5)"), [("p", REAL)], fuel=k)
    f_big = denote(parse_term("while gt0(p + -1) do mul(p, 0.5)"), [("p", REAL)], fuel=k + 1)
    assert rdrc.leq(f_small, f_big, [[x * 10]])
