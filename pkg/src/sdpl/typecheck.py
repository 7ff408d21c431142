"""Type checking for terms, including letrec and function calls.

Contexts are ordered lists of (name, type) with rightmost shadowing.  Function
contexts are lists of (name, argument type, result type).
"""
from __future__ import annotations

from .errors import (ArityMismatch, RecBodyFreeVarViolation, TypeMismatch,
                     UnboundFunction, UnboundVariable, WhileContextViolation)
from .syntax import (REAL, UNIT, Add, Const, FalseB, Fst, FunCall, If, Let,
                     LetRec, Op, Pair, Pred, Prod, Rd, Snd, Star, TrueB, Var,
                     While, default_signature, free_vars)


class Scope:
    """Mutable context with push/pop, so long let chains stay linear."""

    def __init__(self, items=()):
        self.order = []
        self.types = {}
        for name, ty in items:
            self.push(name, ty)

    def push(self, name, ty):
        self.order.append(name)
        self.types.setdefault(name, []).append(ty)

    def pop(self):
        name = self.order.pop()
        stack = self.types[name]
        stack.pop()
        if not stack:
            del self.types[name]

    def lookup(self, name):
        stack = self.types.get(name)
        return stack[-1] if stack else None

    def rightmost(self):
        if not self.order:
            return None
        name = self.order[-1]
        return name, self.types[name][-1]


def _mismatch(expected, actual, what, span):
    if isinstance(expected, Prod) != isinstance(actual, Prod):
        return ArityMismatch(f"{what}: expected {expected}, got {actual}", span)
    return TypeMismatch(expected, actual, what, span)


class Checker:
    def __init__(self, sig=None):
        self.sig = sig or default_signature()

    def check(self, phi, scope, m):
        sp = m.span
        if isinstance(m, Var):
            ty = scope.lookup(m.name)
            if ty is None:
                raise UnboundVariable(f"unbound variable {m.name!r}", sp)
            return ty
        if isinstance(m, Const):
            return REAL
        if isinstance(m, Star):
            return UNIT
        if isinstance(m, Add):
            for side in (m.left, m.right):
                ty = self.check(phi, scope, side)
                if ty != REAL:
                    raise TypeMismatch(REAL, ty, "operand of +", side.span or sp)
            return REAL
        if isinstance(m, Op):
            dom, cod = self.sig.op_type(m.op)
            ty = self.check(phi, scope, m.arg)
            if ty != dom:
                raise _mismatch(dom, ty, f"argument of {m.op}", sp)
            return cod
        if isinstance(m, Let):
            ty = self.check(phi, scope, m.bound)
            if m.ty is not None and m.ty != ty:
                raise TypeMismatch(m.ty, ty, f"binding of {m.var}", sp)
            scope.push(m.var, ty)
            try:
                return self.check(phi, scope, m.body)
            finally:
                scope.pop()
        if isinstance(m, Pair):
            left = self.check(phi, scope, m.left)
            right = self.check(phi, scope, m.right)
            if m.tys is not None and m.tys != (left, right):
                raise TypeMismatch(Prod(*m.tys), Prod(left, right), "pair", sp)
            return Prod(left, right)
        if isinstance(m, (Fst, Snd)):
            ty = self.check(phi, scope, m.arg)
            if not isinstance(ty, Prod):
                raise ArityMismatch(f"{type(m).__name__.lower()} of non-pair type {ty}", sp)
            if m.tys is not None and m.tys != (ty.left, ty.right):
                raise TypeMismatch(Prod(*m.tys), ty, "projection", sp)
            return ty.left if isinstance(m, Fst) else ty.right
        if isinstance(m, If):
            self.check_bool(phi, scope, m.cond)
            t1 = self.check(phi, scope, m.then)
            t2 = self.check(phi, scope, m.orelse)
            if t1 != t2:
                raise TypeMismatch(t1, t2, "else branch", m.orelse.span or sp)
            return t1
        if isinstance(m, While):
            last = scope.rightmost()
            if last is None:
                raise WhileContextViolation("while needs a loop variable in context", sp)
            p, u = last
            extra = (free_vars(m.cond) | free_vars(m.body)) - {p}
            if extra:
                raise WhileContextViolation(
                    f"while over {p} may only mention {p}; also uses {sorted(extra)}", sp)
            inner = Scope([(p, u)])
            self.check_bool(phi, inner, m.cond)
            ty = self.check(phi, inner, m.body)
            if ty != u:
                raise TypeMismatch(u, ty, "while body", sp)
            return u
        if isinstance(m, Rd):
            u = m.ty
            at = self.check(phi, scope, m.at)
            if at != u:
                raise TypeMismatch(u, at, "rd point", m.at.span or sp)
            scope.push(m.var, u)
            try:
                t = self.check(phi, scope, m.body)
            finally:
                scope.pop()
            v = self.check(phi, scope, m.v)
            if v != t:
                raise TypeMismatch(t, v, "rd direction", m.v.span or sp)
            return u
        if isinstance(m, FunCall):
            sig = _lookup_fun(phi, m.fun)
            if sig is None:
                raise UnboundFunction(f"unbound function {m.fun!r}", sp)
            a, b = sig
            ty = self.check(phi, scope, m.arg)
            if ty != a:
                raise _mismatch(a, ty, f"argument of {m.fun}", sp)
            return b
        if isinstance(m, LetRec):
            extra = free_vars(m.body) - {m.param}
            if extra:
                raise RecBodyFreeVarViolation(
                    f"body of {m.fun} may only mention {m.param}; also uses {sorted(extra)}", sp)
            phi2 = list(phi) + [(m.fun, m.param_ty, m.ret_ty)]
            ty = self.check(phi2, Scope([(m.param, m.param_ty)]), m.body)
            if ty != m.ret_ty:
                raise TypeMismatch(m.ret_ty, ty, f"body of {m.fun}", sp)
            return self.check(phi2, scope, m.cont)
        if isinstance(m, (TrueB, FalseB, Pred)):
            raise TypeMismatch("term", "boolean", "boolean used as a term", sp)
        raise TypeError(f"not a term: {m!r}")

    def check_bool(self, phi, scope, b):
        if isinstance(b, (TrueB, FalseB)):
            return True
        if isinstance(b, Pred):
            want = self.sig.pred_type(b.pred)
            ty = self.check(phi, scope, b.arg)
            if ty != want:
                raise _mismatch(want, ty, f"argument of {b.pred}", b.span)
            return True
        raise TypeMismatch("boolean", type(b).__name__, "guard", getattr(b, "span", None))


def _lookup_fun(phi, name):
    for f, a, b in reversed(list(phi)):
        if f == name:
            return a, b
    return None


def typecheck(phi, gamma, m, sig=None):
    """The type of m under function context phi and context gamma."""
    return Checker(sig).check(list(phi), Scope(gamma), m)


def typecheck_bool(phi, gamma, b, sig=None):
    return Checker(sig).check_bool(list(phi), Scope(gamma), b)


def typecheck_program(prog, sig=None):
    return typecheck([], prog.inputs, prog.term, sig)
