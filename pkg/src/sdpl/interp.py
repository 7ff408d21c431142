"""Denotational semantics: terms as partial maps.

A context x1:T1, ..., xk:Tk denotes the flat product of its types, so the
empty context contributes nothing and ``[[x:T]]`` is ``[[T]]`` itself.
Variables are read by projecting out their coordinates (rightmost binding
wins).  While-loops are the join of their unrollings truncated at ``fuel``;
letrec is the ``fuel``-th Kleene approximant of its functional.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import rdrc
from .errors import UnboundFunction, UnboundVariable, WhileContextViolation
from .prims import DEFAULT_TABLE, PrimTable
from .rdrc import (Bang, ConstPoint, Empty, Identity, Proj0, Proj1, Zero, add,
                   compose, join, pair, reverse_derivative)
from .syntax import (Add, Const, FalseB, Fst, FunCall, If, Let, LetRec, Op,
                     Pair, Pred, Prod, Rd, Real, Signature, Snd, Star, TrueB,
                     Unit, Var, While, default_signature)

DEFAULT_FUEL = 10_000


@dataclass
class InterpretationStructure:
    table: PrimTable = field(default_factory=lambda: DEFAULT_TABLE)
    sig: Signature = field(default_factory=default_signature)
    preds: dict = field(default_factory=lambda: {"gt0": ("gt0_T", "gt0_F")})
    carrier: int = 1

    def const(self, r, n):
        if r == 0:
            return Zero(n, self.carrier)
        return compose(Bang(n), ConstPoint([r] * self.carrier))

    def op(self, name):
        return rdrc.Prim(name, self.table)

    def pred(self, name):
        t, f = self.preds[name]
        return rdrc.Prim(t, self.table), rdrc.Prim(f, self.table)


DEFAULT_STRUCTURE = InterpretationStructure()


def denote_type(ty, carrier=1) -> int:
    if isinstance(ty, Real):
        return carrier
    if isinstance(ty, Unit):
        return 0
    return denote_type(ty.left, carrier) + denote_type(ty.right, carrier)


def slice_map(n, offset, width):
    """Coordinates [offset, offset+width) of R^n."""
    return compose(Proj1(offset, n - offset), Proj0(width, n - offset - width))


def kleene_fix(F, fuel, dom, cod, label="fix"):
    """F^fuel(empty), each approximant built only when first evaluated."""
    approx = Empty(dom, cod)
    for k in range(fuel):
        approx = rdrc.lazy(lambda prev=approx: F(prev), dom, cod, f"{label}[{k + 1}]")
    return approx


class _Ctx:
    """Context layout: name -> stack of (offset, width, type)."""

    def __init__(self, gamma, carrier):
        self.carrier = carrier
        self.dim = 0
        self.order = []
        self.slots = {}
        for name, ty in gamma:
            self.push(name, ty)

    def push(self, name, ty):
        w = denote_type(ty, self.carrier)
        self.slots.setdefault(name, []).append((self.dim, w, ty))
        self.order.append(name)
        self.dim += w

    def pop(self):
        name = self.order.pop()
        off, w, ty = self.slots[name].pop()
        if not self.slots[name]:
            del self.slots[name]
        self.dim -= w

    def lookup(self, name):
        stack = self.slots.get(name)
        return stack[-1] if stack else None

    def types(self):
        seen = {}
        out = []
        for name in self.order:
            seen[name] = seen.get(name, -1) + 1
            out.append((name, self.slots[name][seen[name]][2]))
        return out


class Denoter:
    def __init__(self, structure=None, fuel=DEFAULT_FUEL):
        self.I = structure or DEFAULT_STRUCTURE
        self.fuel = fuel

    def term(self, phi, ctx, m):
        """(map [[Gamma]] -> [[T]], T)"""
        n = ctx.dim
        I = self.I
        if isinstance(m, Var):
            slot = ctx.lookup(m.name)
            if slot is None:
                raise UnboundVariable(f"unbound variable {m.name!r}", m.span)
            off, w, ty = slot
            return slice_map(n, off, w), ty
        if isinstance(m, Const):
            return I.const(m.value, n), Real()
        if isinstance(m, Star):
            return Bang(n), Unit()
        if isinstance(m, Add):
            f, _ = self.term(phi, ctx, m.left)
            g, _ = self.term(phi, ctx, m.right)
            return add(f, g), Real()
        if isinstance(m, Op):
            f, _ = self.term(phi, ctx, m.arg)
            _, cod = I.sig.op_type(m.op)
            return compose(f, I.op(m.op)), cod
        if isinstance(m, Let):
            f, ty = self.term(phi, ctx, m.bound)
            ctx.push(m.var, ty)
            try:
                g, out = self.term(phi, ctx, m.body)
            finally:
                ctx.pop()
            return compose(pair(Identity(n), f), g), out
        if isinstance(m, Pair):
            f, t1 = self.term(phi, ctx, m.left)
            g, t2 = self.term(phi, ctx, m.right)
            return pair(f, g), Prod(t1, t2)
        if isinstance(m, (Fst, Snd)):
            f, ty = self.term(phi, ctx, m.arg)
            a, b = denote_type(ty.left, ctx.carrier), denote_type(ty.right, ctx.carrier)
            if isinstance(m, Fst):
                return compose(f, Proj0(a, b)), ty.left
            return compose(f, Proj1(a, b)), ty.right
        if isinstance(m, If):
            bt, bf = self.bool(phi, ctx, m.cond)
            f, ty = self.term(phi, ctx, m.then)
            g, _ = self.term(phi, ctx, m.orelse)
            out = join([compose(rdrc.restrict(bt), f), compose(rdrc.restrict(bf), g)],
                       n, denote_type(ty, ctx.carrier))
            return out, ty
        if isinstance(m, While):
            if not ctx.order:
                raise WhileContextViolation("while needs a loop variable in context", m.span)
            p = ctx.order[-1]
            off, w, u = ctx.lookup(p)
            loop = self.loop(phi, p, u, m)
            return compose(slice_map(n, off, w), loop), u
        if isinstance(m, Rd):
            a, _ = self.term(phi, ctx, m.at)
            v, _ = self.term(phi, ctx, m.v)
            ctx.push(m.var, m.ty)
            try:
                body, _ = self.term(phi, ctx, m.body)
            finally:
                ctx.pop()
            du = denote_type(m.ty, ctx.carrier)
            point = pair(pair(Identity(n), a), v)
            return compose(point, reverse_derivative(body), Proj1(n, du)), m.ty
        if isinstance(m, FunCall):
            if m.fun not in phi:
                raise UnboundFunction(f"unbound function {m.fun!r}", m.span)
            h, _, b = phi[m.fun]
            f, _ = self.term(phi, ctx, m.arg)
            return compose(f, h), b
        if isinstance(m, LetRec):
            fix = self.fixpoint(phi, m.fun, m.param, m.param_ty, m.ret_ty, m.body)
            phi2 = dict(phi)
            phi2[m.fun] = (fix, m.param_ty, m.ret_ty)
            return self.term(phi2, ctx, m.cont)
        raise TypeError(f"not a term: {m!r}")

    def bool(self, phi, ctx, b):
        n = ctx.dim
        if isinstance(b, TrueB):
            return Bang(n), Empty(n, 0)
        if isinstance(b, FalseB):
            return Empty(n, 0), Bang(n)
        if isinstance(b, Pred):
            f, _ = self.term(phi, ctx, b.arg)
            pt, pf = self.I.pred(b.pred)
            return compose(f, pt), compose(f, pf)
        raise TypeError(f"not a boolean term: {b!r}")

    def loop(self, phi, p, u, m):
        inner = _Ctx([(p, u)], self.I.carrier)
        bt, bf = self.bool(phi, inner, m.cond)
        body, _ = self.term(phi, inner, m.body)
        step = compose(rdrc.restrict(bt), body)
        stop = rdrc.restrict(bf)
        d = inner.dim
        return kleene_fix(lambda h: join([stop, compose(step, h)], d, d),
                          self.fuel + 1, d, d, "while")

    def fixpoint(self, phi, f, x, a_ty, b_ty, body):
        da, db = denote_type(a_ty, self.I.carrier), denote_type(b_ty, self.I.carrier)

        def functional(h):
            phi2 = dict(phi)
            phi2[f] = (h, a_ty, b_ty)
            out, _ = self.term(phi2, _Ctx([(x, a_ty)], self.I.carrier), body)
            return out

        return kleene_fix(functional, self.fuel, da, db, f)


def denote(m, gamma=(), phi=None, structure=None, fuel=DEFAULT_FUEL):
    """[[gamma |- m]] as a PMap.  ``phi`` maps names to (map, arg type, result type)."""
    d = Denoter(structure, fuel)
    out, _ = d.term(dict(phi or {}), _Ctx(gamma, d.I.carrier), m)
    return out


def denote_bool(b, gamma=(), phi=None, structure=None, fuel=DEFAULT_FUEL):
    d = Denoter(structure, fuel)
    return d.bool(dict(phi or {}), _Ctx(gamma, d.I.carrier), b)


def denote_program(prog, structure=None, fuel=DEFAULT_FUEL):
    return denote(prog.term, prog.inputs, structure=structure, fuel=fuel)


def denote_funenv(funenv, structure=None, fuel=DEFAULT_FUEL):
    """Function assignment for an operational function environment."""
    d = Denoter(structure, fuel)
    memo = {}

    def closure_map(c):
        key = id(c)
        if key not in memo:
            saved = {g: (closure_map(cl), cl.param_ty, cl.ret_ty) for g, cl in c.saved.items()}
            memo[key] = d.fixpoint(saved, c.fun, c.param, c.param_ty, c.ret_ty, c.body)
        return memo[key]

    return {name: (closure_map(c), c.param_ty, c.ret_ty) for name, c in funenv.items()}


# ---------------------------------------------------------------- value encoding


def encode(value, ty) -> np.ndarray:
    """Flatten a native value (float, (), nested 2-tuples) to a vector."""
    out = []

    def go(v, t):
        if isinstance(t, Real):
            out.append(float(v))
        elif isinstance(t, Prod):
            go(v[0], t.left)
            go(v[1], t.right)

    go(value, ty)
    return np.asarray(out, dtype=float)


def decode(vec, ty):
    vec = list(np.asarray(vec, dtype=float).ravel())
    pos = 0

    def go(t):
        nonlocal pos
        if isinstance(t, Real):
            pos += 1
            return vec[pos - 1]
        if isinstance(t, Unit):
            return ()
        return (go(t.left), go(t.right))

    out = go(ty)
    if pos != len(vec):
        raise ValueError(f"vector of length {len(vec)} does not match type {ty}")
    return out


def encode_inputs(values, gamma) -> np.ndarray:
    parts = [encode(v, ty) for v, (_, ty) in zip(values, gamma)]
    return np.concatenate(parts) if parts else np.zeros(0)
