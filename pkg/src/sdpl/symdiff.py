"""Symbolic reverse differentiation of trace terms.

``rd_symbolic`` applies one rule of Rd and leaves ``rd`` nodes on strictly
smaller bodies; ``expand_rd_fully`` iterates it until no ``rd`` remains.
In optimized mode a let whose body does not mention the differentiation
variable is handled with a single recursive call instead of two.
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import NotATraceTerm, TypeMismatch
from .syntax import (REAL, UNIT, Add, Const, Fst, Let, NameSupply, Op, Pair,
                     Prod, Rd, Snd, Star, Var, add_at, all_names, children,
                     default_signature, free_vars, is_trace_term, is_value,
                     lets, rename, term_size, zero_of)

STANDARD = "standard"
OPTIMIZED = "optimized"
MODES = (STANDARD, OPTIMIZED)


@dataclass
class RdStats:
    recursive_call_count: int = 0
    output_node_count: int = 0


def trace_type(m, env, sig=None):
    """Type of a trace term (rd nodes allowed) given variable types in ``env``."""
    sig = sig or default_signature()
    saved = []
    try:
        while isinstance(m, (Let, Rd)):
            if isinstance(m, Rd):
                return m.ty
            ty = m.ty if m.ty is not None else trace_type(m.bound, env, sig)
            saved.append((m.var, env.get(m.var)))
            env[m.var] = ty
            m = m.body
        if isinstance(m, Var):
            try:
                return env[m.name]
            except KeyError:
                raise NotATraceTerm(f"no type known for variable {m.name!r}") from None
        if isinstance(m, (Const, Add)):
            return REAL
        if isinstance(m, Star):
            return UNIT
        if isinstance(m, Op):
            return sig.op_type(m.op)[1]
        if isinstance(m, Pair):
            if m.tys is not None:
                return Prod(*m.tys)
            return Prod(trace_type(m.left, env, sig), trace_type(m.right, env, sig))
        if isinstance(m, (Fst, Snd)):
            if m.tys is not None:
                pty = Prod(*m.tys)
            else:
                pty = trace_type(m.arg, env, sig)
            if not isinstance(pty, Prod):
                raise TypeMismatch("product", pty, "projection")
            return pty.left if isinstance(m, Fst) else pty.right
        raise NotATraceTerm(f"{type(m).__name__} is not a trace term")
    finally:
        for name, old in reversed(saved):
            if old is None:
                env.pop(name, None)
            else:
                env[name] = old


class Differentiator:
    def __init__(self, mode=STANDARD, names=None, sig=None, tick=None):
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        self.mode = mode
        self.names = names or NameSupply()
        self.sig = sig or default_signature()
        self.stats = RdStats()
        self.tick = tick

    # one rule application
    def step(self, w, x, u, m, a, env):
        """w.Rd(x:u. m)(a) by one rule; w and a are values, env types the free variables."""
        self.stats.recursive_call_count += 1
        if self.tick is not None:
            self.tick()
        if not is_value(w) or not is_value(a):
            raise NotATraceTerm("direction and point of Rd must be values")
        if x in free_vars(w) | free_vars(a):
            # rename the bound variable so the lets below cannot capture it
            fresh = self.names.fresh(x)
            m, x = rename(m, x, fresh), fresh
        old = env.get(x)
        env[x] = u
        try:
            return self._rule(w, x, u, m, a, env)
        finally:
            if old is None:
                env.pop(x, None)
            else:
                env[x] = old

    def _rule(self, w, x, u, m, a, env):
        names = self.names
        rd = lambda w_, body, at: Rd(w_, x, u, body, at)

        if isinstance(m, Var):
            return w if m.name == x else zero_of(u)
        if isinstance(m, (Const, Star)):
            return zero_of(u)
        if isinstance(m, Add):
            return add_at(u, rd(w, m.left, a), rd(w, m.right, a), names)
        if isinstance(m, Op):
            t = names.fresh("t")
            dom = trace_type(m.arg, env, self.sig)
            rop = self.sig.reverse_map(m.op)
            return lets([(x, u, a), (t, dom, Op(rop, Pair(m.arg, w)))],
                        Rd(Var(t), x, u, m.arg, a))
        if isinstance(m, Let):
            y, d, e = m.var, m.bound, m.body
            if y == x or y in free_vars(w) | free_vars(a):
                fresh = names.fresh(y)
                e, y = rename(e, y, fresh), fresh
            dty = m.ty if m.ty is not None else trace_type(d, env, self.sig)
            t = names.fresh("t")
            through_y = Rd(w, y, dty, e, Var(y))
            back = Rd(Var(t), x, u, d, a)
            if self.mode == OPTIMIZED and x not in free_vars(e):
                return lets([(x, u, a), (y, dty, d), (t, dty, through_y)], back)
            direct = rd(w, e, a)
            return lets([(x, u, a), (y, dty, d)],
                        add_at(u, direct, Let(t, dty, through_y, back), names))
        if isinstance(m, Pair):
            t1 = trace_type(m.left, env, self.sig)
            t2 = trace_type(m.right, env, self.sig)
            y, z = names.fresh("y"), names.fresh("z")
            tys = (t1, t2)
            return lets([(y, t1, Fst(w, tys)), (z, t2, Snd(w, tys))],
                        add_at(u, Rd(Var(y), x, u, m.left, a), Rd(Var(z), x, u, m.right, a), names))
        if isinstance(m, (Fst, Snd)):
            pty = trace_type(m.arg, env, self.sig)
            tys = (pty.left, pty.right)
            if isinstance(m, Fst):
                direction = Pair(w, zero_of(pty.right), tys)
            else:
                direction = Pair(zero_of(pty.left), w, tys)
            return Let(x, u, a, Rd(direction, x, u, m.arg, a))
        raise NotATraceTerm(f"{type(m).__name__} is not a trace term")

    # full expansion
    def expand(self, m, env):
        """Remove every rd node from m (rd bodies must be trace terms)."""
        if not has_rd(m):
            return m
        if isinstance(m, Let):
            bindings = []
            saved = []
            while isinstance(m, Let):
                bound = self.expand(m.bound, env)
                ty = m.ty if m.ty is not None else trace_type(bound, env, self.sig)
                bindings.append((m.var, ty, bound))
                saved.append((m.var, env.get(m.var)))
                env[m.var] = ty
                m = m.body
            body = self.expand(m, env)
            for name, old in reversed(saved):
                if old is None:
                    env.pop(name, None)
                else:
                    env[name] = old
            return lets(bindings, body)
        if isinstance(m, Rd):
            v = self.expand(m.v, env)
            at = self.expand(m.at, env)
            old = env.get(m.var)
            env[m.var] = m.ty
            body = self.expand(m.body, env)
            tty = None if is_value(v) else trace_type(body, env, self.sig)
            if old is None:
                env.pop(m.var, None)
            else:
                env[m.var] = old
            hoist = []
            if not is_value(v):
                name = self.names.fresh("w")
                hoist.append((name, tty, v))
                v = Var(name)
            if not is_value(at):
                name = self.names.fresh("a")
                hoist.append((name, m.ty, at))
                at = Var(name)
            for name, ty, _ in hoist:
                env[name] = ty
            stepped = self.step(v, m.var, m.ty, body, at, env)
            out = self.expand(stepped, env)
            for name, _, _ in hoist:
                env.pop(name, None)
            return lets(hoist, out)
        if isinstance(m, (Var, Const, Star)):
            return m
        if isinstance(m, Add):
            return Add(self.expand(m.left, env), self.expand(m.right, env))
        if isinstance(m, Op):
            return Op(m.op, self.expand(m.arg, env))
        if isinstance(m, Pair):
            return Pair(self.expand(m.left, env), self.expand(m.right, env), m.tys)
        if isinstance(m, Fst):
            return Fst(self.expand(m.arg, env), m.tys)
        if isinstance(m, Snd):
            return Snd(self.expand(m.arg, env), m.tys)
        raise NotATraceTerm(f"{type(m).__name__} is not a trace term")


def has_rd(m) -> bool:
    """Whether m contains an rd node (cached on the node, terms are immutable)."""
    try:
        return m.__dict__["_has_rd"]
    except KeyError:
        pass
    out = isinstance(m, Rd) or any(has_rd(c) for c in children(m))
    object.__setattr__(m, "_has_rd", out)
    return out


def _names_for(*terms, names=None):
    if names is not None:
        for t in terms:
            names.reserve(all_names(t))
        return names
    used = set()
    for t in terms:
        used |= all_names(t)
    return NameSupply(used)


def rd_symbolic(w, x, m, a, mode=STANDARD, xty=REAL, ctx=None, names=None, sig=None):
    """One application of the Rd rules; returns (term, stats).

    The result may still contain ``rd`` nodes on smaller bodies.  ``ctx`` gives
    the types of free variables of m other than x.
    """
    if not is_trace_term(m):
        raise NotATraceTerm("rd_symbolic needs a trace term body")
    d = Differentiator(mode, _names_for(w, m, a, names=names), sig)
    env = dict(ctx or {})
    out = d.step(w, x, xty, m, a, env)
    d.stats.output_node_count = term_size(out)
    return out, d.stats


def expand_rd_fully(m, mode=STANDARD, ctx=None, names=None, sig=None):
    """Eliminate every rd node; returns (trace term, stats)."""
    d = Differentiator(mode, _names_for(m, names=names), sig)
    out = d.expand(m, dict(ctx or {}))
    d.stats.output_node_count = term_size(out)
    return out, d.stats


def count_rd(m) -> int:
    n = 0
    stack = [m]
    while stack:
        t = stack.pop()
        n += isinstance(t, Rd)
        stack.extend(children(t))
    return n
