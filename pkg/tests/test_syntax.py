import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sdpl.errors import ParseError
from sdpl.gen import random_trace_term
from sdpl.interp import denote
from sdpl.parser import parse_program, parse_term, parse_type
from sdpl.rdrc import evaluate_batch
from sdpl.syntax import (REAL, UNIT, Add, Const, Fst, FunCall, If, Let, LetRec, Op, Pair,
                         Pred, Prod, Rd, Snd, Star, Var, free_fun_vars, free_vars,
                         from_json, is_trace_term, is_value, pretty, substitute, to_json)


def test_parse_let():
    assert parse_term("let x:real = 3 in x + x") == Let("x", REAL, Const(3.0), Add(Var("x"), Var("x")))


def test_parse_rd():
    m = parse_term("v.rd(x:real. mul(x,x))(a)")
    assert m == Rd(Var("v"), "x", REAL, Op("mul", Pair(Var("x"), Var("x"))), Var("a"))


def test_pair_pattern_desugars():
    m = parse_term("let (x:real, y:real) = p in x")
    assert isinstance(m, Let) and m.ty == Prod(REAL, REAL) and m.bound == Var("p")
    inner = m.body
    assert inner.var == "x" and isinstance(inner.bound, Fst)
    assert inner.body.var == "y" and isinstance(inner.body.bound, Snd)
    assert inner.body.body == Var("x")
    # same denotation as the hand-expanded form
    hand = parse_term("let z:real*real = p in let x:real = fst(z) in let y:real = snd(z) in x")
    gamma = [("p", Prod(REAL, REAL))]
    X = np.random.default_rng(0).uniform(-3, 3, (10, 2))
    Y1, _ = evaluate_batch(denote(m, gamma), X)
    Y2, _ = evaluate_batch(denote(hand, gamma), X)
    np.testing.assert_array_equal(Y1, Y2)
    np.testing.assert_array_equal(Y1[:, 0], X[:, 0])


def test_parse_types():
    assert parse_type("real * (real * unit)") == Prod(REAL, Prod(REAL, UNIT))


def test_parse_error_has_position():
    with pytest.raises(ParseError, match=r"^2:"):
        parse_program("input x: real;\nlet = 3 in x")


def test_free_vars():
    assert free_vars(Var("x")) == {"x"}
    m = Rd(Var("v"), "x", REAL, Add(Var("x"), Var("y")), Var("a"))
    assert free_vars(m) == {"v", "y", "a"}


def test_free_fun_vars_letrec():
    m = LetRec("f", "x", REAL, REAL, FunCall("f", Var("x")), FunCall("f", Const(1.0)))
    assert free_fun_vars(m) == set()
    assert free_fun_vars(FunCall("g", Const(1.0))) == {"g"}


def test_trace_and_value_predicates():
    assert not is_trace_term(If(Pred("gt0", Var("x")), Var("x"), Var("x")))
    assert is_value(Pair(Const(1.0), Star()))
    assert is_trace_term(Let("x", REAL, Op("sin", Var("y")), Var("x")))
    assert not is_value(Op("sin", Const(1.0)))


def test_substitute():
    assert substitute(Var("x"), "x", Const(2.0)) == Const(2.0)
    m = Let("x", None, Var("x"), Var("x"))
    assert substitute(m, "x", Const(2.0)) == Let("x", None, Const(2.0), Var("x"))


def test_substitute_avoids_capture():
    m = Rd(Var("v"), "x", REAL, Var("x"), Var("y"))
    out = substitute(m, "y", Var("x"))
    assert out.var != "x" and out.body == Var(out.var) and out.at == Var("x")
    # both denote the identity's reverse derivative: the value of v
    gamma = [("v", REAL), ("x", REAL), ("y", REAL)]
    X = np.random.default_rng(1).uniform(-2, 2, (10, 3))
    Y, ok = evaluate_batch(denote(out, gamma), X)
    assert ok.all()
    np.testing.assert_array_equal(Y[:, 0], X[:, 0])


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_pretty_round_trips(seed):
    m = random_trace_term(np.random.default_rng(seed), depth=5)
    assert parse_term(pretty(m)) == m


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_json_round_trips(seed):
    m = random_trace_term(np.random.default_rng(seed), depth=5)
    d = to_json(m)
    assert from_json(d) == m
    assert {"kind"} <= set(d)


def test_json_stable_fields():
    d = to_json(parse_term("let x:real = 3 in x"))
    assert d["kind"] == "Let" and d["var"] == "x" and "ty" in d and "children" in d
