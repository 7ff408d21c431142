"""Source transformations for derivatives of control flow, and the
dagger / forward-derivative sugar they are stated with."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeMismatch, SdplError
from .syntax import (FalseB, Fst, If, Let, NameSupply, Pair, Pred, Prod, Rd,
                     Snd, TrueB, Var, While, all_names, map_children,
                     zero_of)

RULES = ("if-rd", "while-fd", "while-rd")


def _supply(*terms, names=None):
    if names is not None:
        for t in terms:
            names.reserve(all_names(t))
        return names
    used = set()
    for t in terms:
        used |= all_names(t)
    return NameSupply(used)


def sugar_dagger(x, a_ty, m, y="y", names=None):
    """m^dagger := y.rd(x:A. m)(0_A), the transpose of m (linear in x)."""
    return Rd(Var(y), x, a_ty, m, zero_of(a_ty))


def sugar_fd(x, a_ty, m, a, v, b_ty, names=None):
    """fd(x:A. m)(a).v := let z = v in z.rd(y:B. y.rd(x:A. m)(a))(0_B)."""
    names = _supply(m, a, v, names=names)
    y, z = names.fresh("y"), names.fresh("z")
    inner = Rd(Var(y), x, a_ty, m, a)
    return Let(z, a_ty, v, Rd(Var(z), y, b_ty, inner, zero_of(b_ty)))


def match_fd(m):
    """Recognise the expansion of ``fd``; returns (x, A, body, a, v, B) or None."""
    if not (isinstance(m, Let) and isinstance(m.body, Rd)):
        return None
    outer = m.body
    inner = outer.body
    if not (isinstance(inner, Rd) and outer.v == Var(m.var) and inner.v == Var(outer.var)
            and outer.at == zero_of(outer.ty)):
        return None
    return inner.var, inner.ty, inner.body, inner.at, m.bound, outer.ty


def _guard_at(b, x, a_ty, point):
    """The boolean ``let x = point in b``."""
    if isinstance(b, (TrueB, FalseB)):
        return b
    if isinstance(b, Pred):
        return Pred(b.pred, Let(x, a_ty, point, b.arg), span=b.span)
    raise ShapeMismatch(f"not a boolean term: {b!r}")


def transform_if_rd(m):
    """v.rd(x. if b then m else n)(a)  =>  if (let x=a in b) then v.rd(x.m)(a) else v.rd(x.n)(a)"""
    if not (isinstance(m, Rd) and isinstance(m.body, If)):
        raise ShapeMismatch("if-rd expects v.rd(x:T. if b then m else n)(a)")
    cond = m.body
    guard = _guard_at(cond.cond, m.var, m.ty, m.at)
    return If(guard,
              Rd(m.v, m.var, m.ty, cond.then, m.at),
              Rd(m.v, m.var, m.ty, cond.orelse, m.at), span=m.span)


def _forward_loop(x, a_ty, loop, a, v, names):
    """let p = (a, v) in snd(while b[fst p / x] do let x = fst p, y = snd p in (f, fd(x.f)(x).y))"""
    p, y = names.fresh("p"), names.fresh("y")
    pty = Prod(a_ty, a_ty)
    tys = (a_ty, a_ty)
    guard = _guard_at(loop.cond, x, a_ty, Fst(Var(p), tys))
    tangent = sugar_fd(x, a_ty, loop.body, Var(x), Var(y), a_ty, names)
    body = Let(x, a_ty, Fst(Var(p), tys),
               Let(y, a_ty, Snd(Var(p), tys), Pair(loop.body, tangent, tys)))
    return Let(p, pty, Pair(a, v, tys), Snd(While(guard, body), tys))


def transform_while_fd(m, names=None):
    """fd(x:A. while b do f)(a).v  =>  the paired tangent loop."""
    parts = match_fd(m)
    if parts is None or not isinstance(parts[2], While):
        raise ShapeMismatch("while-fd expects fd(x:A. while b do f)(a).v")
    x, a_ty, loop, a, v, _ = parts
    return _forward_loop(x, a_ty, loop, a, v, _supply(m, names=names))


def transform_while_rd(m, names=None):
    """v.rd(x:A. while b do f)(a)  =>  the dagger of the forward transform."""
    if not (isinstance(m, Rd) and isinstance(m.body, While)):
        raise ShapeMismatch("while-rd expects v.rd(x:A. while b do f)(a)")
    names = _supply(m, names=names)
    w, u = names.fresh("w"), names.fresh("u")
    fwd = _forward_loop(m.var, m.ty, m.body, m.at, Var(u), names)
    return Let(w, m.ty, m.v, Rd(Var(w), u, m.ty, fwd, zero_of(m.ty)), span=m.span)


_SINGLE = {
    "if-rd": lambda m, names: transform_if_rd(m),
    "while-fd": transform_while_fd,
    "while-rd": transform_while_rd,
}


def _matches(rule, m):
    if rule == "if-rd":
        return isinstance(m, Rd) and isinstance(m.body, If)
    if rule == "while-rd":
        return isinstance(m, Rd) and isinstance(m.body, While)
    parts = match_fd(m)
    return parts is not None and isinstance(parts[2], While)


def rewrite(m, rule, names=None):
    """Apply ``rule`` at every matching node, outside-in, in one pass.

    Returns (term, number of rewrites).
    """
    if rule not in _SINGLE:
        raise ValueError(f"unknown rule {rule!r}; expected one of {RULES}")
    names = _supply(m, names=names)
    count = 0

    def go(t):
        nonlocal count
        if _matches(rule, t):
            t = _SINGLE[rule](t, names)
            count += 1
            if rule != "if-rd":
                return t
        return map_children(t, go)

    return go(m), count


# ---------------------------------------------------------------- equivalence


@dataclass
class TransformReport:
    original: object
    transformed: object
    points: int = 0
    compared: int = 0
    max_deviation: float = 0.0
    definedness_agree: bool = True
    operational_checked: int = 0
    failures: list = field(default_factory=list)

    @property
    def passed(self):
        return self.definedness_agree and not self.failures

    def to_json(self):
        from .syntax import pretty

        return {
            "original": pretty(self.original),
            "transformed": pretty(self.transformed),
            "points": self.points,
            "compared": self.compared,
            "max_deviation": self.max_deviation,
            "definedness_agree": self.definedness_agree,
            "operational_checked": self.operational_checked,
            "passed": self.passed,
            "failures": self.failures[:10],
        }


def sample_inputs(gamma, n, rng, low=-3.0, high=3.0):
    from .interp import denote_type

    dim = sum(denote_type(ty) for _, ty in gamma)
    return rng.uniform(low, high, size=(n, dim))


def check_equivalence(m1, m2, gamma, samples=50, seed=0, tol=1e-9, fuel=10_000,
                      budget=5_000, points=None, operational=10):
    """Compare denotations of m1 and m2, and their evaluations on the first
    ``operational`` points where both terminate within ``budget`` steps."""
    from .interp import decode, denote
    from .opsem import evaluate_term, values_close
    from .rdrc import evaluate_batch

    gamma = list(gamma)
    rng = np.random.default_rng(seed)
    X = np.asarray(points, dtype=float) if points is not None else sample_inputs(gamma, samples, rng)
    rep = TransformReport(m1, m2, points=len(X))
    Y1, ok1 = evaluate_batch(denote(m1, gamma, fuel=fuel), X)
    Y2, ok2 = evaluate_batch(denote(m2, gamma, fuel=fuel), X)
    if np.any(ok1 != ok2):
        rep.definedness_agree = False
        for i in np.flatnonzero(ok1 != ok2)[:10]:
            rep.failures.append({"point": X[i].tolist(), "reason": "definedness",
                                 "left": bool(ok1[i]), "right": bool(ok2[i])})
    both = ok1 & ok2
    rep.compared = int(both.sum())
    if rep.compared:
        scale = np.maximum(1.0, np.maximum(np.abs(Y1[both]), np.abs(Y2[both])))
        dev = np.abs(Y1[both] - Y2[both]) / scale
        rep.max_deviation = float(dev.max()) if dev.size else 0.0
        bad = np.flatnonzero(both)[np.any(dev > tol, axis=1)] if dev.size else []
        for i in list(bad)[:10]:
            rep.failures.append({"point": X[i].tolist(), "reason": "value",
                                 "left": Y1[i].tolist(), "right": Y2[i].tolist()})
    if operational:
        for i in np.flatnonzero(both)[:int(operational)]:
            rho = _split(X[i], gamma, decode)
            try:
                v1 = evaluate_term(m1, rho, budget=budget)
                v2 = evaluate_term(m2, rho, budget=budget)
            except SdplError:
                continue
            rep.operational_checked += 1
            if not values_close(v1, v2, tol):
                rep.failures.append({"point": X[i].tolist(), "reason": "operational",
                                     "left": repr(v1), "right": repr(v2)})
    return rep


def _split(x, gamma, decode):
    from .interp import denote_type

    rho = []
    pos = 0
    for name, ty in gamma:
        d = denote_type(ty)
        rho.append((name, decode(x[pos:pos + d], ty)))
        pos += d
    return rho
