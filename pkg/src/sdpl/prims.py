"""Primitive operations and their reverse derivatives.

Every primitive has a batched evaluator ``fn(X) -> (Y, ok)``.  The first
reverse level ``op_R`` has a hand-written evaluator and also a definition
as a map built from base primitives.  Deeper levels are never written by
hand: ``op_RR`` is the structural reverse derivative of the definition of
``op_R``, and so on, so the table is closed under reverse derivatives.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

_REV = re.compile(r"^(.*)_(R+)$")


def reverse_name(name: str) -> str:
    m = _REV.match(name)
    return name + "R" if m else name + "_R"


def reverse_base(name: str) -> Optional[str]:
    """``sin_RR -> sin_R -> sin -> None``"""
    m = _REV.match(name)
    if not m:
        return None
    base, rs = m.groups()
    return base if len(rs) == 1 else f"{base}_{rs[:-1]}"


@dataclass
class PrimDef:
    dom: int
    cod: int
    fn: Optional[Callable] = None
    total: bool = True
    definition: Optional[object] = None  # PMap, or a thunk producing one


class PrimTable:
    def __init__(self):
        self._defs = {}

    def register(self, name, dom, cod, fn=None, total=True, definition=None):
        self._defs[name] = PrimDef(dom, cod, fn, total, definition)

    def _lookup(self, name):
        d = self._defs.get(name)
        if d is not None:
            return d
        base = reverse_base(name)
        if base is None:
            raise KeyError(f"unknown primitive {name!r}")
        bd = self._lookup(base)
        base_def = self.definition(base)
        if base_def is None:
            raise KeyError(f"primitive {name!r} has no definition to differentiate")
        from .rdrc import reverse_derivative

        d = PrimDef(bd.dom + bd.cod, bd.dom, None, bd.total,
                    lambda: reverse_derivative(base_def))
        self._defs[name] = d
        return d

    def has(self, name):
        try:
            self._lookup(name)
        except KeyError:
            return False
        return True

    def dims(self, name):
        d = self._lookup(name)
        return d.dom, d.cod

    def is_total(self, name):
        return self._lookup(name).total

    def evaluator(self, name):
        return self._lookup(name).fn

    def definition(self, name):
        d = self._lookup(name)
        if callable(d.definition):
            d.definition = d.definition()
        return d.definition

    def reverse_of(self, name):
        """Name of the reverse primitive, or None when it cannot be provided."""
        rname = reverse_name(name)
        if rname in self._defs:
            return rname
        if reverse_base(name) is None and rname not in self._defs:
            return None
        return rname if self.has(rname) else None

    def apply(self, name, x):
        """Scalar convenience: value at one point, or None."""
        from .rdrc import Prim, evaluate

        return evaluate(Prim(name, self), x)


# ---------------------------------------------------------------- default table


def _ones(X):
    return np.ones(len(X), dtype=bool)


def _unary(f, domain=None):
    def fn(X):
        x = X[:, 0]
        ok = _ones(X) if domain is None else domain(x)
        return f(x)[:, None], ok
    return fn


def _rev_unary(df, domain=None):
    def fn(X):
        x, w = X[:, 0], X[:, 1]
        ok = _ones(X) if domain is None else domain(x)
        return (df(x) * w)[:, None], ok
    return fn


def _mul(X):
    return (X[:, 0] * X[:, 1])[:, None], _ones(X)


def _mul_r(X):
    x1, x2, w = X[:, 0], X[:, 1], X[:, 2]
    return np.stack([x2 * w, x1 * w], axis=1), _ones(X)


def _gt0_t(X):
    return np.zeros((len(X), 0)), X[:, 0] > 0


def _gt0_f(X):
    return np.zeros((len(X), 0)), X[:, 0] < 0


def _zero_on(domain):
    def fn(X):
        return np.zeros((len(X), 1)), domain(X[:, 0])
    return fn


_nonzero = lambda x: x != 0
_positive = lambda x: x > 0
_negative = lambda x: x < 0


def _definitions(table):
    """Level-one reverse primitives as maps built from base primitives."""
    from .rdrc import (Prim, Restrict, Zero, bang, compose, const_point, coord,
                       pair)

    p = lambda name: Prim(name, table)
    x2, w2 = coord(2, 0), coord(2, 1)
    times = lambda f, g: compose(pair(f, g), p("mul"))
    then = compose

    defs = {
        "mul_R": lambda: pair(times(coord(3, 1), coord(3, 2)), times(coord(3, 0), coord(3, 2))),
        "neg_R": lambda: then(w2, p("neg")),
        "sin_R": lambda: times(then(x2, p("cos")), w2),
        "cos_R": lambda: times(then(x2, p("sin"), p("neg")), w2),
        "exp_R": lambda: times(then(x2, p("exp")), w2),
        "recip_R": lambda: times(
            then(times(then(x2, p("recip")), then(x2, p("recip"))), p("neg")), w2),
        "sqrtp_R": lambda: times(
            times(then(bang(2), const_point(0.5)), then(x2, p("sqrtp"), p("recip"))), w2),
        "gt0_T_R": lambda: then(Restrict(p("gt0_T")), Zero(1, 1)),
        "gt0_F_R": lambda: then(Restrict(p("gt0_F")), Zero(1, 1)),
    }
    return defs


def default_table() -> PrimTable:
    t = PrimTable()
    t.register("mul", 2, 1, _mul)
    t.register("neg", 1, 1, _unary(np.negative))
    t.register("sin", 1, 1, _unary(np.sin))
    t.register("cos", 1, 1, _unary(np.cos))
    t.register("exp", 1, 1, _unary(np.exp))
    t.register("recip", 1, 1, _unary(np.reciprocal, _nonzero), total=False)
    t.register("sqrtp", 1, 1, _unary(np.sqrt, _positive), total=False)
    t.register("gt0_T", 1, 0, _gt0_t, total=False)
    t.register("gt0_F", 1, 0, _gt0_f, total=False)

    defs = _definitions(t)
    rev = {
        "mul_R": (3, 2, _mul_r, True),
        "neg_R": (2, 1, lambda X: (-X[:, 1:2], _ones(X)), True),
        "sin_R": (2, 1, _rev_unary(np.cos), True),
        "cos_R": (2, 1, _rev_unary(lambda x: -np.sin(x)), True),
        "exp_R": (2, 1, _rev_unary(np.exp), True),
        "recip_R": (2, 1, _rev_unary(lambda x: -1.0 / (x * x), _nonzero), False),
        "sqrtp_R": (2, 1, _rev_unary(lambda x: 0.5 / np.sqrt(x), _positive), False),
        "gt0_T_R": (1, 1, _zero_on(_positive), False),
        "gt0_F_R": (1, 1, _zero_on(_negative), False),
    }
    for name, (dom, cod, fn, total) in rev.items():
        t.register(name, dom, cod, fn, total, defs[name])
    return t


DEFAULT_TABLE = default_table()
