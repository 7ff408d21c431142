"""Random partial maps and trace terms for the property suites."""
from __future__ import annotations

import numpy as np

from . import rdrc
from .prims import DEFAULT_TABLE
from .rdrc import Inj0, Inj1, Proj0, Proj1, compose, coord, join, pair, restrict
from .syntax import (REAL, UNIT, Add, Const, Fst, Let, NameSupply, Op, Pair,
                     Prod, Snd, Star, Var)

UNARY = ("sin", "cos", "neg", "exp", "sqrtp", "recip")
# weights keep exp towers and poles rare enough that most samples are usable
UNARY_P = np.array([0.28, 0.28, 0.2, 0.08, 0.08, 0.08])


def _pick(rng, items, p=None):
    return items[rng.choice(len(items), p=p)]


# ---------------------------------------------------------------- partial maps


def _leaf(rng, dom, cod, table):
    if cod == 0:
        return rdrc.Bang(dom)
    if cod > 1:
        return pair(_leaf(rng, dom, 1, table), _leaf(rng, dom, cod - 1, table))
    roll = rng.random()
    if roll < 0.45 or dom == 0:
        if dom == 0:
            return rdrc.ConstPoint([round(float(rng.uniform(-2, 2)), 2)])
        return coord(dom, int(rng.integers(dom)))
    if roll < 0.8:
        op = _pick(rng, UNARY, UNARY_P)
        return compose(coord(dom, int(rng.integers(dom))), rdrc.Prim(op, table))
    if roll < 0.9:
        return compose(rdrc.Bang(dom), rdrc.ConstPoint([round(float(rng.uniform(-2, 2)), 2)]))
    i, j = rng.integers(dom, size=2)
    return compose(pair(coord(dom, int(i)), coord(dom, int(j))), rdrc.Prim("mul", table))


def random_pmap(rng, dom=1, cod=1, depth=4, table=None):
    """A random map R^dom -> R^cod built from the combinators, nesting <= depth."""
    table = table or DEFAULT_TABLE
    if depth <= 0:
        return _leaf(rng, dom, cod, table)
    sub = lambda d, c: random_pmap(rng, d, c, depth - 1, table)
    kind = _pick(rng, ("leaf", "compose", "pair", "add", "restrict", "join", "prim",
                       "proj", "inj"),
                 [0.1, 0.22, 0.1, 0.14, 0.1, 0.1, 0.14, 0.05, 0.05])
    if kind == "compose":
        mid = int(rng.integers(1, 3))
        return compose(sub(dom, mid), sub(mid, cod))
    if kind == "pair" and cod >= 2:
        k = int(rng.integers(1, cod))
        return pair(sub(dom, k), sub(dom, cod - k))
    if kind == "add":
        return rdrc.add(sub(dom, cod), sub(dom, cod))
    if kind == "restrict":
        return compose(restrict(sub(dom, int(rng.integers(1, 3)))), sub(dom, cod))
    if kind == "join" and dom >= 1:
        # gt0 on one coordinate splits the domain into two disjoint halves
        c = coord(dom, int(rng.integers(dom)))
        pos = restrict(compose(c, rdrc.Prim("gt0_T", table)))
        neg = restrict(compose(c, rdrc.Prim("gt0_F", table)))
        return join([compose(pos, sub(dom, cod)), compose(neg, sub(dom, cod))], dom, cod)
    if kind == "prim" and cod == 1:
        if rng.random() < 0.3:
            return compose(sub(dom, 2), rdrc.Prim("mul", table))
        return compose(sub(dom, 1), rdrc.Prim(_pick(rng, UNARY, UNARY_P), table))
    if kind == "proj":
        other = int(rng.integers(1, 3))
        return compose(sub(dom, cod + other), Proj0(cod, other) if rng.random() < 0.5
                       else compose(pair(Proj1(cod, other), Proj0(cod, other)), Proj1(other, cod)))
    if kind == "inj" and cod >= 2:
        k = int(rng.integers(1, cod))
        if rng.random() < 0.5:
            return rdrc.add(compose(sub(dom, k), Inj0(k, cod - k)), compose(sub(dom, cod - k), Inj1(k, cod - k)))
        return compose(sub(dom, k), Inj0(k, cod - k))
    return _leaf(rng, dom, cod, table)


def pmap_corpus(n, seed=0, depth=4, dims=((1, 1), (2, 1), (1, 2), (2, 2))):
    """n maps cycling through the given (dom, cod) shapes."""
    rng = np.random.default_rng(seed)
    return [random_pmap(rng, *dims[i % len(dims)], depth=depth) for i in range(n)]


def sample_points(rng, n, dim, low=-2.0, high=2.0):
    return rng.uniform(low, high, size=(n, dim))


# ---------------------------------------------------------------- trace terms


_TYPES = (REAL, REAL, REAL, Prod(REAL, REAL), UNIT)


class TraceGen:
    """Random well-typed trace terms.  ``env`` is a list of (name, type)."""

    def __init__(self, rng, partial=True, names=None, shadow_x=True):
        self.rng = rng
        self.partial = partial
        self.shadow_x = shadow_x
        self.names = names or NameSupply({"x", "a", "v"})

    def const(self):
        return Const(round(float(self.rng.uniform(-2, 2)), 2))

    def value(self, ty):
        if ty == REAL:
            return self.const()
        if ty == UNIT:
            return Star()
        return Pair(self.value(ty.left), self.value(ty.right))

    def term(self, env, ty, depth):
        rng = self.rng
        vars_ = [name for name, t in dict(env).items() if t == ty]
        if depth <= 0 or rng.random() < 0.12:
            if vars_ and rng.random() < 0.8:
                return Var(vars_[rng.integers(len(vars_))])
            return self.value(ty) if ty != REAL else self.const()
        if ty == UNIT:
            return Star() if rng.random() < 0.5 else self.let(env, ty, depth)
        if isinstance(ty, Prod):
            roll = rng.random()
            if roll < 0.6:
                return Pair(self.term(env, ty.left, depth - 1), self.term(env, ty.right, depth - 1))
            if roll < 0.85:
                return self.let(env, ty, depth)
            return Var(vars_[0]) if vars_ else self.value(ty)
        kind = _pick(rng, ("var", "add", "op", "mul", "let", "proj"),
                     [0.1, 0.18, 0.22, 0.15, 0.25, 0.1])
        if kind == "var" and vars_:
            return Var(vars_[rng.integers(len(vars_))])
        if kind == "add":
            return Add(self.term(env, REAL, depth - 1), self.term(env, REAL, depth - 1))
        if kind == "op":
            ops = UNARY if self.partial else UNARY[:4]
            p = UNARY_P if self.partial else UNARY_P[:4] / UNARY_P[:4].sum()
            return Op(_pick(rng, ops, p), self.term(env, REAL, depth - 1))
        if kind == "mul":
            return Op("mul", Pair(self.term(env, REAL, depth - 1), self.term(env, REAL, depth - 1)))
        if kind == "proj":
            other = REAL if rng.random() < 0.7 else UNIT
            if rng.random() < 0.5:
                return Fst(self.term(env, Prod(REAL, other), depth - 1))
            return Snd(self.term(env, Prod(other, REAL), depth - 1))
        return self.let(env, ty, depth)

    def let(self, env, ty, depth):
        bty = _pick(self.rng, _TYPES)
        # occasionally rebind x itself so the rules' renaming paths get exercised
        y = "x" if self.shadow_x and self.rng.random() < 0.2 else self.names.fresh("y")
        bound = self.term(env, bty, depth - 1)
        body = self.term(env + [(y, bty)], ty, depth - 1)
        return Let(y, bty if self.rng.random() < 0.7 else None, bound, body)


def random_trace_term(rng, env=(("x", REAL),), ty=REAL, depth=6, partial=True, names=None):
    return TraceGen(rng, partial, names).term(list(env), ty, depth)


def random_closed_term(rng, ty=REAL, depth=6, env=(), partial=True):
    """A trace term in which x does not occur free."""
    return TraceGen(rng, partial, shadow_x=False).term(list(env), ty, depth)
