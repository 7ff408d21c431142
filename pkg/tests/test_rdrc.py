import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sdpl import rdrc
from sdpl.checks import check_forward_fd, check_reverse_fd, compare_maps, rd6, rd7
from sdpl.errors import DimensionMismatch, JoinConflict
from sdpl.gen import random_pmap
from sdpl.prims import DEFAULT_TABLE, default_table
from sdpl.rdrc import (Identity, Prim, Proj0, compose, const_point, coord, dagger_ctx, evaluate,
                       evaluate_batch, join, pair, restrict)
from sdpl.rdrc import D, R

T = DEFAULT_TABLE
sq = compose(pair(Identity(1), Identity(1)), Prim("mul", T))
sin_sq = compose(sq, Prim("sin", T))


def test_identity():
    np.testing.assert_array_equal(evaluate(Identity(3), [1, 2, 3]), [1, 2, 3])


def test_restrict_sqrtp_undefined():
    assert evaluate(restrict(Prim("sqrtp", T)), [-1.0]) is None
    np.testing.assert_array_equal(evaluate(restrict(Prim("sqrtp", T)), [4.0]), [4.0])


def test_join_case_split():
    pos = compose(restrict(Prim("gt0_T", T)), sq)
    neg = compose(restrict(Prim("gt0_F", T)), Prim("neg", T))
    j = join([pos, neg], 1, 1)
    np.testing.assert_allclose(evaluate(j, [2.0]), [4.0])
    np.testing.assert_allclose(evaluate(j, [-3.0]), [3.0])
    assert evaluate(j, [0.0]) is None


def test_join_conflict_detected():
    j = join([Identity(1), Prim("neg", T)], 1, 1)
    with pytest.raises(JoinConflict):
        evaluate(j, [1.0])


def test_restrict_total_is_identity():
    assert restrict(Identity(2)) == Identity(2)


def test_dimension_checks():
    with pytest.raises(DimensionMismatch):
        compose(Identity(2), Identity(1))
    with pytest.raises(DimensionMismatch):
        evaluate(Identity(2), [1.0])


def test_reverse_of_projection():
    np.testing.assert_array_equal(evaluate(R(Proj0(1, 1)), [0.3, 0.4, 2.0]), [2.0, 0.0])


def test_reverse_of_mul():
    np.testing.assert_allclose(evaluate(R(Prim("mul", T)), [3.0, 5.0, 2.0]), [10.0, 6.0])


def test_reverse_of_sin_sq():
    np.testing.assert_allclose(evaluate(R(sin_sq), [1.0, 1.0]), [2 * math.cos(1.0)], rtol=1e-12)
    assert abs(2 * math.cos(1.0) - 1.0806) < 1e-4


def test_forward_derivative():
    np.testing.assert_array_equal(evaluate(D(Identity(1)), [2.0, 7.0]), [7.0])
    np.testing.assert_allclose(evaluate(D(Prim("mul", T)), [2.0, 3.0, 0.5, -1.0]), [3 * 0.5 - 2.0])


def test_forward_derivative_of_restriction():
    f = restrict(Prim("sqrtp", T))
    np.testing.assert_array_equal(evaluate(D(f), [4.0, 0.25]), [0.25])
    assert evaluate(D(f), [-4.0, 0.25]) is None


def test_dagger_examples():
    snd = rdrc.Proj1(1, 1)
    np.testing.assert_array_equal(evaluate(dagger_ctx(snd, 1), [3.0, 5.0]), [5.0])
    np.testing.assert_allclose(evaluate(dagger_ctx(Prim("mul", T), 1), [3.0, 5.0]), [15.0])


def test_dagger_round_trip_sin_sq():
    X = np.random.default_rng(0).uniform(-2, 2, (50, 2))
    same, err, n, _ = compare_maps(dagger_ctx(D(sin_sq), 1), R(sin_sq), X)
    assert same and err <= 1e-12 and n == 50


def test_order_relations():
    X = np.random.default_rng(0).uniform(-2, 2, (40, 1))
    f = Prim("sin", T)
    assert rdrc.leq(compose(restrict(Prim("sqrtp", T)), f), f, X)
    assert not rdrc.leq(f, compose(restrict(Prim("sqrtp", T)), f), X)
    assert rdrc.disjoint(restrict(Prim("gt0_T", T)), restrict(Prim("gt0_F", T)), X)
    assert rdrc.compatible(f, f, X)


def test_constants():
    c = compose(rdrc.Bang(2), const_point([1.5]))
    np.testing.assert_array_equal(evaluate(c, [9.0, 9.0]), [1.5])
    np.testing.assert_array_equal(evaluate(R(c), [9.0, 9.0, 4.0]), [0.0, 0.0])


def test_hash_consing_shares_nodes():
    assert coord(3, 1) is coord(3, 1)
    assert compose(Prim("sin", T), Prim("cos", T)) is compose(Prim("sin", T), Prim("cos", T))


def test_batch_matches_pointwise():
    f = random_pmap(np.random.default_rng(3), 2, 2, depth=4)
    X = np.random.default_rng(4).uniform(-2, 2, (30, 2))
    Y, ok = evaluate_batch(f, X)
    for x, y, d in zip(X, Y, ok):
        v = evaluate(f, x)
        assert (v is not None) == d
        if d:
            np.testing.assert_array_equal(v, y)


def _bad_table():
    t = default_table()
    # cos replaced by sin: a wrong derivative for sin
    t.register("sin_R", 2, 1, lambda X: (np.sin(X[:, :1]) * X[:, 1:2], np.ones(len(X), bool)),
               True, t.definition("sin_R"))
    return t


def test_wrong_reverse_primitive_fails_fd():
    f = compose(Identity(1), Prim("sin", _bad_table()))
    X = np.random.default_rng(0).uniform(-2, 2, (100, 1))
    W = np.ones((100, 1))
    ok, err, used, _ = check_reverse_fd(f, X, W)
    assert not ok and used > 50 and err > 0.1
    ok, *_ = check_reverse_fd(Prim("sin", T), X, W)
    assert ok


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from([(1, 1), (2, 1), (1, 2), (2, 2)]))
def test_reverse_matches_finite_differences(seed, dims):
    rng = np.random.default_rng(seed)
    f = random_pmap(rng, *dims, depth=3)
    X = rng.uniform(-2, 2, (40, dims[0]))
    W = rng.uniform(-2, 2, (40, dims[1]))
    V = rng.uniform(-2, 2, (40, dims[0]))
    assert check_reverse_fd(f, X, W)[0]
    assert check_forward_fd(f, X, V)[0]


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_higher_axioms_hypothesis(seed):
    rng = np.random.default_rng(seed)
    f = random_pmap(rng, 1, 1, depth=2)
    X, W, W2, V3 = (rng.uniform(-2, 2, (30, 1)) for _ in range(4))
    s6, e6 = rd6(f, X, W, W2)
    s7, e7 = rd7(f, X, W, W2, V3)
    assert s6 and s7 and e6 <= 1e-9 and e7 <= 1e-9
