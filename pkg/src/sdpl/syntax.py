"""Abstract syntax of the language: types, terms, boolean terms, signatures.

Terms are immutable dataclasses.  Source spans ride along on every node but
never take part in equality.  Pair/Fst/Snd carry optional type annotations
which are likewise ignored by equality; the type checker recovers them.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Optional, Union

from .errors import UnknownOp, UnknownPred
from .prims import reverse_base, reverse_name


@dataclass(frozen=True)
class Span:
    line: int
    col: int

    def __str__(self):
        return f"{self.line}:{self.col}"


# ---------------------------------------------------------------- types


@dataclass(frozen=True)
class Real:
    def __str__(self):
        return "real"


@dataclass(frozen=True)
class Unit:
    def __str__(self):
        return "1"


@dataclass(frozen=True)
class Prod:
    left: "Ty"
    right: "Ty"

    def __str__(self):
        right = f"({self.right})" if isinstance(self.right, Prod) else str(self.right)
        return f"{self.left} * {right}"


Ty = Union[Real, Unit, Prod]
REAL = Real()
UNIT = Unit()


def real_power(n: int) -> Ty:
    """``real^n``, left associated; ``real^0`` is the unit type."""
    if n < 0:
        raise ValueError("negative power")
    if n == 0:
        return UNIT
    ty = REAL
    for _ in range(n - 1):
        ty = Prod(ty, REAL)
    return ty


def product(tys) -> Ty:
    """Left-nested product of a list of types (unit when empty)."""
    tys = list(tys)
    if not tys:
        return UNIT
    out = tys[0]
    for t in tys[1:]:
        out = Prod(out, t)
    return out


# ---------------------------------------------------------------- terms


@dataclass(frozen=True)
class Term:
    span: Optional[Span] = field(default=None, compare=False, repr=False, kw_only=True)

    def __str__(self):
        return pretty(self)


@dataclass(frozen=True)
class Var(Term):
    name: str


@dataclass(frozen=True)
class Const(Term):
    value: float


@dataclass(frozen=True)
class Add(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class Op(Term):
    op: str
    arg: Term


@dataclass(frozen=True)
class Let(Term):
    var: str
    ty: Optional[Ty]
    bound: Term
    body: Term


@dataclass(frozen=True)
class Star(Term):
    pass


@dataclass(frozen=True)
class Pair(Term):
    left: Term
    right: Term
    tys: Optional[tuple] = field(default=None, compare=False)


@dataclass(frozen=True)
class Fst(Term):
    arg: Term
    tys: Optional[tuple] = field(default=None, compare=False)


@dataclass(frozen=True)
class Snd(Term):
    arg: Term
    tys: Optional[tuple] = field(default=None, compare=False)


@dataclass(frozen=True)
class If(Term):
    cond: "BoolTerm"
    then: Term
    orelse: Term


@dataclass(frozen=True)
class While(Term):
    cond: "BoolTerm"
    body: Term


@dataclass(frozen=True)
class Rd(Term):
    """``v.rd(x:ty. body)(at)``: reverse derivative of body wrt x at ``at`` in direction v."""

    v: Term
    var: str
    ty: Ty
    body: Term
    at: Term


@dataclass(frozen=True)
class FunCall(Term):
    fun: str
    arg: Term


@dataclass(frozen=True)
class LetRec(Term):
    fun: str
    param: str
    param_ty: Ty
    ret_ty: Ty
    body: Term
    cont: Term


@dataclass(frozen=True)
class TrueB(Term):
    pass


@dataclass(frozen=True)
class FalseB(Term):
    pass


@dataclass(frozen=True)
class Pred(Term):
    pred: str
    arg: Term


BoolTerm = Union[TrueB, FalseB, Pred]


# ---------------------------------------------------------------- signature


@dataclass
class Signature:
    """Operation and predicate symbols with their types.

    Reverse symbols (``sin_R``, ``sin_RR``, ...) are not stored; their types
    follow from the base symbol: ``op_R : T * U -> T`` for ``op : T -> U``.
    """

    ops: dict = field(default_factory=dict)
    preds: dict = field(default_factory=dict)

    def op_type(self, name):
        if name in self.ops:
            return self.ops[name]
        base = reverse_base(name)
        if base is None:
            raise UnknownOp(f"unknown operation {name!r}")
        dom, cod = self.op_type(base)
        return Prod(dom, cod), dom

    def has_op(self, name):
        try:
            self.op_type(name)
        except UnknownOp:
            return False
        return True

    def pred_type(self, name):
        try:
            return self.preds[name]
        except KeyError:
            raise UnknownPred(f"unknown predicate {name!r}") from None

    def reverse_map(self, name):
        self.op_type(name)
        return reverse_name(name)


def default_signature() -> Signature:
    unary = ["neg", "sin", "cos", "exp", "recip", "sqrtp"]
    ops = {name: (REAL, REAL) for name in unary}
    ops["mul"] = (Prod(REAL, REAL), REAL)
    return Signature(ops=ops, preds={"gt0": REAL})


# ---------------------------------------------------------------- names


class NameSupply:
    """Monotone counter for fresh names that avoids every name in ``used``."""

    def __init__(self, used=(), start=0):
        self.used = set(used)
        self.counter = itertools.count(start)

    def fresh(self, base="t"):
        base = re.sub(r"#\d+$", "", base) or "t"
        while True:
            name = f"{base}#{next(self.counter)}"
            if name not in self.used:
                self.used.add(name)
                return name

    def reserve(self, names):
        self.used.update(names)


def children(m):
    """Immediate subterms (including boolean terms), in source order."""
    if isinstance(m, (Var, Const, Star, TrueB, FalseB)):
        return ()
    if isinstance(m, (Add, Pair)):
        return (m.left, m.right)
    if isinstance(m, (Op, Fst, Snd, FunCall, Pred)):
        return (m.arg,)
    if isinstance(m, Let):
        return (m.bound, m.body)
    if isinstance(m, If):
        return (m.cond, m.then, m.orelse)
    if isinstance(m, While):
        return (m.cond, m.body)
    if isinstance(m, Rd):
        return (m.v, m.body, m.at)
    if isinstance(m, LetRec):
        return (m.body, m.cont)
    raise TypeError(f"not a term: {m!r}")


def map_children(m, f):
    """Rebuild m with f applied to each immediate subterm."""
    if isinstance(m, (Var, Const, Star, TrueB, FalseB)):
        return m
    sp = m.span
    if isinstance(m, Add):
        return Add(f(m.left), f(m.right), span=sp)
    if isinstance(m, Pair):
        return Pair(f(m.left), f(m.right), m.tys, span=sp)
    if isinstance(m, Op):
        return Op(m.op, f(m.arg), span=sp)
    if isinstance(m, Pred):
        return Pred(m.pred, f(m.arg), span=sp)
    if isinstance(m, FunCall):
        return FunCall(m.fun, f(m.arg), span=sp)
    if isinstance(m, Fst):
        return Fst(f(m.arg), m.tys, span=sp)
    if isinstance(m, Snd):
        return Snd(f(m.arg), m.tys, span=sp)
    if isinstance(m, Let):
        return Let(m.var, m.ty, f(m.bound), f(m.body), span=sp)
    if isinstance(m, If):
        return If(f(m.cond), f(m.then), f(m.orelse), span=sp)
    if isinstance(m, While):
        return While(f(m.cond), f(m.body), span=sp)
    if isinstance(m, Rd):
        return Rd(f(m.v), m.var, m.ty, f(m.body), f(m.at), span=sp)
    if isinstance(m, LetRec):
        return LetRec(m.fun, m.param, m.param_ty, m.ret_ty, f(m.body), f(m.cont), span=sp)
    raise TypeError(f"not a term: {m!r}")


def all_names(m) -> set:
    """Every ordinary variable name occurring in m, bound or free."""
    out = set()
    stack = [m]
    while stack:
        t = stack.pop()
        if isinstance(t, Var):
            out.add(t.name)
        elif isinstance(t, (Let, Rd)):
            out.add(t.var)
        elif isinstance(t, LetRec):
            out.add(t.param)
        stack.extend(children(t))
    return out


def free_vars(m) -> frozenset:
    # terms are immutable, so the answer is cached on the node
    try:
        return m.__dict__["_fv"]
    except KeyError:
        pass
    if isinstance(m, Var):
        out = frozenset((m.name,))
    elif isinstance(m, Let):
        out = free_vars(m.bound) | (free_vars(m.body) - {m.var})
    elif isinstance(m, Rd):
        out = free_vars(m.v) | free_vars(m.at) | (free_vars(m.body) - {m.var})
    elif isinstance(m, LetRec):
        out = (free_vars(m.body) - {m.param}) | free_vars(m.cont)
    else:
        out = frozenset()
        for c in children(m):
            out |= free_vars(c)
    object.__setattr__(m, "_fv", out)
    return out


def free_fun_vars(m) -> frozenset:
    if isinstance(m, FunCall):
        return frozenset((m.fun,)) | free_fun_vars(m.arg)
    if isinstance(m, LetRec):
        return (free_fun_vars(m.body) | free_fun_vars(m.cont)) - {m.fun}
    out = frozenset()
    for c in children(m):
        out |= free_fun_vars(c)
    return out


_TRACE_KINDS = (Var, Const, Add, Op, Let, Star, Pair, Fst, Snd)


def is_trace_term(m) -> bool:
    stack = [m]
    while stack:
        t = stack.pop()
        if not isinstance(t, _TRACE_KINDS):
            return False
        stack.extend(children(t))
    return True


def is_value(m) -> bool:
    if isinstance(m, (Var, Const, Star)):
        return True
    if isinstance(m, Pair):
        return is_value(m.left) and is_value(m.right)
    return False


def term_size(m) -> int:
    n = 0
    stack = [m]
    while stack:
        t = stack.pop()
        n += 1
        stack.extend(children(t))
    return n


# ---------------------------------------------------------------- substitution


def substitute(m, x, v, names=None):
    """Capture-avoiding ``m[v/x]``."""
    if names is None:
        names = NameSupply(all_names(m) | all_names(v) | {x})
    return _subst(m, x, v, free_vars(v), names)


def rename(m, old, new):
    return substitute(m, old, Var(new))


def _under_binder(var, body, x, v, fv_v, names):
    """Substitute into ``body`` under binder ``var``; returns (var', body')."""
    if var == x:
        return var, body
    if var in fv_v:
        fresh = names.fresh(var)
        body = _subst(body, var, Var(fresh), frozenset((fresh,)), names)
        var = fresh
    return var, _subst(body, x, v, fv_v, names)


def _subst(m, x, v, fv_v, names):
    if x not in free_vars(m):
        return m
    sub = lambda t: _subst(t, x, v, fv_v, names)
    if isinstance(m, Var):
        return v if m.name == x else m
    if isinstance(m, (Const, Star, TrueB, FalseB)):
        return m
    if isinstance(m, Add):
        return Add(sub(m.left), sub(m.right), span=m.span)
    if isinstance(m, Op):
        return Op(m.op, sub(m.arg), span=m.span)
    if isinstance(m, Pred):
        return Pred(m.pred, sub(m.arg), span=m.span)
    if isinstance(m, FunCall):
        return FunCall(m.fun, sub(m.arg), span=m.span)
    if isinstance(m, Pair):
        return Pair(sub(m.left), sub(m.right), m.tys, span=m.span)
    if isinstance(m, Fst):
        return Fst(sub(m.arg), m.tys, span=m.span)
    if isinstance(m, Snd):
        return Snd(sub(m.arg), m.tys, span=m.span)
    if isinstance(m, If):
        return If(sub(m.cond), sub(m.then), sub(m.orelse), span=m.span)
    if isinstance(m, Let):
        var, body = _under_binder(m.var, m.body, x, v, fv_v, names)
        return Let(var, m.ty, sub(m.bound), body, span=m.span)
    if isinstance(m, Rd):
        var, body = _under_binder(m.var, m.body, x, v, fv_v, names)
        return Rd(sub(m.v), var, m.ty, body, sub(m.at), span=m.span)
    if isinstance(m, LetRec):
        param, body = _under_binder(m.param, m.body, x, v, fv_v, names)
        return LetRec(m.fun, param, m.param_ty, m.ret_ty, body, sub(m.cont), span=m.span)
    if isinstance(m, While):
        # the loop state is the variable itself: bind it instead of rewriting the loop
        if x in free_vars(m):
            return Let(x, None, v, m, span=m.span)
        return m
    raise TypeError(f"not a term: {m!r}")


# ---------------------------------------------------------------- term builders


def lets(bindings, body):
    """``let b1 in let b2 in ... body`` from (name, ty, term) triples."""
    for name, ty, bound in reversed(list(bindings)):
        body = Let(name, ty, bound, body)
    return body


def zero_of(ty) -> Term:
    if isinstance(ty, Real):
        return Const(0.0)
    if isinstance(ty, Unit):
        return Star()
    return Pair(zero_of(ty.left), zero_of(ty.right), (ty.left, ty.right))


def add_at(ty, m, n, names) -> Term:
    """Addition extended to every type; keeps the definedness of both summands."""
    if isinstance(ty, Real):
        return Add(m, n)
    if isinstance(ty, Unit):
        return Let(names.fresh("u"), UNIT, m, Let(names.fresh("u"), UNIT, n, Star()))
    p, q = names.fresh("p"), names.fresh("q")
    tys = (ty.left, ty.right)
    return Let(p, ty, m, Let(q, ty, n, Pair(
        add_at(ty.left, Fst(Var(p), tys), Fst(Var(q), tys), names),
        add_at(ty.right, Snd(Var(p), tys), Snd(Var(q), tys), names),
        tys,
    )))


# ---------------------------------------------------------------- printing


def _fmt_const(r):
    return repr(float(r))


def pretty(m) -> str:
    return _pp(m, 0)


_ATOMS = (Var, Const, Star, Pair, Fst, Snd, Op, FunCall)


def _pp(m, level):
    """level 0: anything; 1: left operand of +; 2: right operand; 3: receiver of .rd"""
    if level == 3 and not isinstance(m, _ATOMS):
        return f"({_pp(m, 0)})"
    if isinstance(m, Var):
        return m.name
    if isinstance(m, Const):
        return _fmt_const(m.value)
    if isinstance(m, Star):
        return "*"
    if isinstance(m, TrueB):
        return "true"
    if isinstance(m, FalseB):
        return "false"
    if isinstance(m, Pair):
        return f"({_pp(m.left, 0)}, {_pp(m.right, 0)})"
    if isinstance(m, Fst):
        return f"fst({_pp(m.arg, 0)})"
    if isinstance(m, Snd):
        return f"snd({_pp(m.arg, 0)})"
    if isinstance(m, (Op, FunCall, Pred)):
        name = {Op: "op", FunCall: "fun", Pred: "pred"}[type(m)]
        name = getattr(m, name)
        if isinstance(m.arg, Pair):
            return f"{name}({_pp(m.arg.left, 0)}, {_pp(m.arg.right, 0)})"
        return f"{name}({_pp(m.arg, 0)})"
    if isinstance(m, Add):
        s = f"{_pp(m.left, 1)} + {_pp(m.right, 2)}"
        return s if level <= 1 else f"({s})"
    if isinstance(m, Rd):
        s = f"{_pp(m.v, 3)}.rd({m.var}:{m.ty}. {_pp(m.body, 0)})({_pp(m.at, 0)})"
        return s
    if isinstance(m, Let):
        ann = f":{m.ty}" if m.ty is not None else ""
        s = f"let {m.var}{ann} = {_pp(m.bound, 0)} in {_pp(m.body, 0)}"
    elif isinstance(m, If):
        s = f"if {_pp(m.cond, 0)} then {_pp(m.then, 0)} else {_pp(m.orelse, 0)}"
    elif isinstance(m, While):
        s = f"while {_pp(m.cond, 0)} do {_pp(m.body, 0)}"
    elif isinstance(m, LetRec):
        s = (f"letrec {m.fun}({m.param}:{m.param_ty}):{m.ret_ty} = "
             f"{_pp(m.body, 0)} in {_pp(m.cont, 0)}")
    else:
        raise TypeError(f"not a term: {m!r}")
    return s if level == 0 else f"({s})"


# ---------------------------------------------------------------- JSON


def ty_to_json(ty):
    return None if ty is None else str(ty)


def to_json(m) -> dict:
    """Stable dump: ``kind``, ``var``, ``ty`` and a ``children`` array."""
    d = {"kind": type(m).__name__}
    if isinstance(m, Var):
        d["var"] = m.name
    elif isinstance(m, Const):
        d["value"] = m.value
    elif isinstance(m, Op):
        d["op"] = m.op
    elif isinstance(m, Pred):
        d["pred"] = m.pred
    elif isinstance(m, FunCall):
        d["fun"] = m.fun
    elif isinstance(m, (Let, Rd)):
        d["var"] = m.var
        d["ty"] = ty_to_json(m.ty)
    elif isinstance(m, LetRec):
        d["fun"] = m.fun
        d["var"] = m.param
        d["ty"] = ty_to_json(m.param_ty)
        d["ret"] = ty_to_json(m.ret_ty)
    d["children"] = [to_json(c) for c in children(m)]
    return d


def from_json(d) -> Term:
    from .parser import parse_type

    kind = d["kind"]
    kids = [from_json(c) for c in d.get("children", [])]
    ty = lambda key: None if d.get(key) is None else parse_type(d[key])
    if kind == "Var":
        return Var(d["var"])
    if kind == "Const":
        return Const(float(d["value"]))
    if kind in ("Star", "TrueB", "FalseB"):
        return {"Star": Star, "TrueB": TrueB, "FalseB": FalseB}[kind]()
    if kind in ("Add", "Pair"):
        return {"Add": Add, "Pair": Pair}[kind](*kids)
    if kind in ("Fst", "Snd"):
        return {"Fst": Fst, "Snd": Snd}[kind](kids[0])
    if kind == "Op":
        return Op(d["op"], kids[0])
    if kind == "Pred":
        return Pred(d["pred"], kids[0])
    if kind == "FunCall":
        return FunCall(d["fun"], kids[0])
    if kind == "Let":
        return Let(d["var"], ty("ty"), *kids)
    if kind == "If":
        return If(*kids)
    if kind == "While":
        return While(*kids)
    if kind == "Rd":
        v, body, at = kids
        return Rd(v, d["var"], ty("ty"), body, at)
    if kind == "LetRec":
        return LetRec(d["fun"], d["var"], ty("ty"), ty("ret"), *kids)
    raise ValueError(f"unknown term kind {kind!r}")
