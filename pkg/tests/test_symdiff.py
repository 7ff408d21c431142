import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sdpl.checks import let_chain, symdiff_suite, zero_lemma_suite
from sdpl.errors import NotATraceTerm
from sdpl.gen import random_trace_term
from sdpl.interp import denote
from sdpl.opsem import evaluate_term
from sdpl.parser import parse_term
from sdpl.rdrc import evaluate
from sdpl.symdiff import MODES, OPTIMIZED, STANDARD, count_rd, expand_rd_fully, has_rd, rd_symbolic
from sdpl.syntax import REAL, Const, Rd, Var, free_vars, is_trace_term

CTX = {"y": REAL, "w": REAL, "a": REAL}


def rd1(m):
    return rd_symbolic(Var("w"), "x", parse_term(m), Var("a"), ctx=CTX)[0]


def test_variable_clauses():
    assert rd1("x") == Var("w")
    assert rd1("y") == Const(0.0)
    assert rd1("7") == Const(0.0)


def test_sin_clause():
    out = rd1("sin(x)")
    assert count_rd(out) == 1
    for a, w in [(0.3, 1.0), (-1.2, 2.5)]:
        v = evaluate_term(out, {"a": a, "w": w})
        assert v == pytest.approx(math.cos(a) * w, rel=1e-12)


def test_not_a_trace_term():
    with pytest.raises(NotATraceTerm):
        rd1("if gt0(x) then x else 0")


def test_no_rd_unchanged():
    m = parse_term("let y:real = sin(x) in y + 1")
    assert not has_rd(m)
    assert expand_rd_fully(m)[0] is m


@pytest.mark.parametrize("mode", MODES)
def test_expansion_removes_rd(mode):
    m = parse_term("1.rd(x:real. 1.rd(y:real. mul(sin(x), mul(y, y)))(x))(0.4)")
    out, stats = expand_rd_fully(m, mode)
    assert count_rd(out) == 0 and is_trace_term(out)
    assert stats.output_node_count > 0
    got = evaluate_term(out)
    # d/dx [2x sin x] = 2 sin x + 2x cos x
    assert got == pytest.approx(2 * math.sin(0.4) + 0.8 * math.cos(0.4), rel=1e-12)


def test_chain_call_counts():
    m = Rd(Const(1.0), "x", REAL, let_chain(3), Const(0.7))
    std = expand_rd_fully(m, STANDARD)[1].recursive_call_count
    opt = expand_rd_fully(m, OPTIMIZED)[1].recursive_call_count
    assert std >= 2 ** 3 - 1
    assert opt <= 10 * 3
    calls = [expand_rd_fully(Rd(Const(1.0), "x", REAL, let_chain(n), Const(0.7)), OPTIMIZED)[1]
             .recursive_call_count for n in range(1, 7)]
    assert len(set(np.diff(calls))) == 1


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from(MODES))
def test_expansion_matches_denotation(seed, mode):
    rng = np.random.default_rng(seed)
    m = random_trace_term(rng, env=[("x", REAL), ("c", REAL)], depth=5)
    a, v, c = rng.uniform(-1.5, 1.5, 3)
    rd = Rd(Const(float(v)), "x", REAL, m, Const(float(a)))
    expected = evaluate(denote(rd, [("c", REAL)]), [c])
    out, _ = expand_rd_fully(rd, mode, ctx={"c": REAL})
    got = evaluate(denote(out, [("c", REAL)]), [c])
    assert (expected is None) == (got is None)
    if expected is not None and np.all(np.isfinite(expected)):
        np.testing.assert_allclose(got, expected, rtol=1e-9, atol=1e-9)


def test_suites_small():
    for r in symdiff_suite(n_terms=15, seed=3, points=4):
        assert r.ok and r.passed, r.to_json()
    (z,) = zero_lemma_suite(n_terms=15, seed=3)
    assert z.ok and z.passed == 15


def test_zero_lemma_generator_respects_x():
    from sdpl.gen import random_closed_term

    rng = np.random.default_rng(0)
    for _ in range(50):
        assert "x" not in free_vars(random_closed_term(rng, env=[("c", REAL)]))
