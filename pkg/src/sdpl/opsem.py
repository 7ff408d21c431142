"""Operational semantics: evaluation to values and symbolic evaluation to traces.

One interpreter does both.  Every intermediate result is a pair
(value, trace atom); when tracing, each primitive step is bound to a fresh
let variable on a tape so the emitted trace term shares subcomputations.
Guards are always decided on concrete values, so the trace records the
path actually taken.  ``rd`` symbolically evaluates its body, expands the
symbolic derivative and then evaluates the resulting trace.

Native values are floats, ``()`` and nested 2-tuples.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import (OutOfFuel, StuckPredicate, UnboundFunction, UnboundName,
                     UndefinedPrimitive)
from .interp import DEFAULT_STRUCTURE, decode, encode
from .symdiff import OPTIMIZED, Differentiator
from .syntax import (REAL, UNIT, Add, Const, FalseB, Fst, FunCall, If, Let,
                     LetRec, NameSupply, Op, Pair, Prod, Rd, Snd, Star,
                     TrueB, Var, While, all_names, free_vars, lets)

DEFAULT_BUDGET = 1_000_000


@dataclass(eq=False)
class Closure:
    saved: dict
    fun: str
    param: str
    param_ty: object
    ret_ty: object
    body: object


def type_of_value(v):
    if isinstance(v, tuple):
        if len(v) == 0:
            return UNIT
        return Prod(type_of_value(v[0]), type_of_value(v[1]))
    return REAL


def value_term(v):
    if isinstance(v, tuple):
        if len(v) == 0:
            return Star()
        return Pair(value_term(v[0]), value_term(v[1]))
    return Const(float(v))


def term_value(m):
    """Inverse of value_term on closed values."""
    if isinstance(m, Const):
        return float(m.value)
    if isinstance(m, Star):
        return ()
    if isinstance(m, Pair):
        return (term_value(m.left), term_value(m.right))
    raise ValueError(f"not a closed value: {m}")


def values_close(u, v, tol=1e-9):
    if isinstance(u, tuple):
        return isinstance(v, tuple) and len(u) == len(v) and all(values_close(a, b, tol) for a, b in zip(u, v))
    return abs(u - v) <= tol * max(1.0, abs(u), abs(v))


_SCALAR = {
    "mul": lambda v: v[0] * v[1],
    "neg": lambda v: -v,
    "sin": math.sin,
    "cos": math.cos,
    "exp": lambda v: math.exp(v) if v < 709 else math.inf,
    "mul_R": lambda v: (v[0][1] * v[1], v[0][0] * v[1]),
    "neg_R": lambda v: -v[1],
    "sin_R": lambda v: math.cos(v[0]) * v[1],
    "cos_R": lambda v: -math.sin(v[0]) * v[1],
    "exp_R": lambda v: (math.exp(v[0]) if v[0] < 709 else math.inf) * v[1],
    # second level: argument ((x, w), u)
    "mul_RR": lambda v: ((v[0][1] * v[1][1], v[0][1] * v[1][0]),
                         v[0][0][1] * v[1][0] + v[0][0][0] * v[1][1]),
    "neg_RR": lambda v: (0.0, -v[1]),
    "sin_RR": lambda v: (-math.sin(v[0][0]) * v[0][1] * v[1], math.cos(v[0][0]) * v[1]),
    "cos_RR": lambda v: (-math.cos(v[0][0]) * v[0][1] * v[1], -math.sin(v[0][0]) * v[1]),
}
_SCALAR_DOMAIN = {
    "recip": (lambda v: v != 0, lambda v: 1.0 / v),
    "sqrtp": (lambda v: v > 0, math.sqrt),
    "recip_R": (lambda v: v[0] != 0, lambda v: -v[1] / (v[0] * v[0])),
    "sqrtp_R": (lambda v: v[0] > 0, lambda v: v[1] / (2.0 * math.sqrt(v[0]))),
}


class Tape:
    """Let bindings emitted by symbolic evaluation."""

    def __init__(self, machine):
        self.m = machine
        self.bindings = []

    def emit(self, term, value):
        name = self.m.names.fresh("t")
        ty = type_of_value(value)
        self.bindings.append((name, ty, term))
        self.m.types[name] = ty
        self.m.vals[name] = value
        return Var(name)


class Env:
    """Variables in scope: name -> stack of (value, trace atom or None)."""

    def __init__(self, items=()):
        self.order = []
        self.slots = {}
        for name, entry in items:
            self.push(name, entry)

    def push(self, name, entry):
        self.order.append(name)
        self.slots.setdefault(name, []).append(entry)

    def pop(self):
        name = self.order.pop()
        self.slots[name].pop()
        if not self.slots[name]:
            del self.slots[name]

    def lookup(self, name):
        stack = self.slots.get(name)
        if not stack:
            raise UnboundName(f"unbound variable {name!r}")
        return stack[-1]


@dataclass
class Machine:
    structure: object = None
    budget: int = DEFAULT_BUDGET
    mode: str = OPTIMIZED
    names: NameSupply = field(default_factory=NameSupply)
    steps: int = 0
    types: dict = field(default_factory=dict)
    vals: dict = field(default_factory=dict)
    rd_calls: int = 0

    def __post_init__(self):
        self.I = self.structure or DEFAULT_STRUCTURE

    def tick(self):
        self.steps += 1
        if self.steps > self.budget:
            raise OutOfFuel(f"step budget of {self.budget} exhausted")

    # primitives and predicates
    def apply_op(self, name, v):
        if name in _SCALAR:
            return _SCALAR[name](v)
        if name in _SCALAR_DOMAIN:
            ok, f = _SCALAR_DOMAIN[name]
            if not ok(v):
                raise UndefinedPrimitive(f"{name} undefined at {v}")
            return f(v)
        dom, cod = self.I.sig.op_type(name)
        out = self.I.table.apply(name, encode(v, dom))
        if out is None:
            raise UndefinedPrimitive(f"{name} undefined at {v}")
        return decode(out, cod)

    def bev(self, pred, v):
        from .rdrc import evaluate

        pt, pf = self.I.pred(pred)
        x = encode(v, self.I.sig.pred_type(pred))
        if evaluate(pt, x) is not None:
            return True
        if evaluate(pf, x) is not None:
            return False
        raise StuckPredicate(f"{pred} is undefined at {v}")

    def guard(self, b, env, funs):
        if isinstance(b, TrueB):
            return True
        if isinstance(b, FalseB):
            return False
        v, _ = self.run(b.arg, env, funs, None)
        return self.bev(b.pred, v)

    # the interpreter
    def run(self, m, env, funs, tape):
        """(value, trace atom); the atom is None when not tracing."""
        pushed = 0
        try:
            while isinstance(m, Let):
                self.tick()
                entry = self.run(m.bound, env, funs, tape)
                env.push(m.var, entry)
                pushed += 1
                m = m.body
            return self._run(m, env, funs, tape)
        finally:
            for _ in range(pushed):
                env.pop()

    def _run(self, m, env, funs, tape):
        self.tick()
        if isinstance(m, Var):
            v, t = env.lookup(m.name)
            if tape is not None and t is None:
                t = value_term(v)
            return v, t
        if isinstance(m, Const):
            return float(m.value), (m if tape is not None else None)
        if isinstance(m, Star):
            return (), (Star() if tape is not None else None)
        if isinstance(m, Add):
            a, ta = self.run(m.left, env, funs, tape)
            b, tb = self.run(m.right, env, funs, tape)
            v = a + b
            return v, (tape.emit(Add(ta, tb), v) if tape is not None else None)
        if isinstance(m, Op):
            a, ta = self.run(m.arg, env, funs, tape)
            v = self.apply_op(m.op, a)
            return v, (tape.emit(Op(m.op, ta), v) if tape is not None else None)
        if isinstance(m, Pair):
            a, ta = self.run(m.left, env, funs, tape)
            b, tb = self.run(m.right, env, funs, tape)
            return (a, b), (Pair(ta, tb) if tape is not None else None)
        if isinstance(m, (Fst, Snd)):
            a, ta = self.run(m.arg, env, funs, tape)
            i = 0 if isinstance(m, Fst) else 1
            v = a[i]
            if tape is None:
                return v, None
            if isinstance(ta, Pair):
                return v, (ta.left if i == 0 else ta.right)
            return v, tape.emit((Fst if i == 0 else Snd)(ta), v)
        if isinstance(m, If):
            branch = m.then if self.guard(m.cond, env, funs) else m.orelse
            return self.run(branch, env, funs, tape)
        if isinstance(m, While):
            p = env.order[-1]
            state = env.lookup(p)
            while True:
                self.tick()
                inner = Env([(p, state)])
                if not self.guard(m.cond, inner, funs):
                    return state
                state = self.run(m.body, inner, funs, tape)
        if isinstance(m, FunCall):
            c = funs.get(m.fun)
            if c is None:
                raise UnboundFunction(f"unbound function {m.fun!r}")
            arg = self.run(m.arg, env, funs, tape)
            inner_funs = dict(c.saved)
            inner_funs[c.fun] = c
            return self.run(c.body, Env([(c.param, arg)]), inner_funs, tape)
        if isinstance(m, LetRec):
            funs2 = dict(funs)
            funs2[m.fun] = Closure(dict(funs), m.fun, m.param, m.param_ty, m.ret_ty, m.body)
            return self.run(m.cont, env, funs2, tape)
        if isinstance(m, Rd):
            return self.rd(m, env, funs, tape)
        raise TypeError(f"cannot evaluate {m!r}")

    def rd(self, m, env, funs, tape):
        av, ta = self.run(m.at, env, funs, tape)
        vv, tv = self.run(m.v, env, funs, tape)
        if tape is None:
            ta, tv = value_term(av), value_term(vv)
        # symbolic pass over the body: x stays a variable, guards see its value
        x = self.names.fresh(m.var)
        self.types[x] = m.ty
        self.vals[x] = av
        sub = Tape(self)
        env.push(m.var, (av, Var(x)))
        try:
            _, tb = self.run(m.body, env, funs, sub)
        finally:
            env.pop()
        body = lets(sub.bindings, tb)
        d = Differentiator(self.mode, self.names, self.I.sig, self.tick)
        ctx = {name: self.types[name] for name in free_vars(body) if name != x}
        ctx.update({name: self.types[name] for name in free_vars(ta) | free_vars(tv)})
        trace = d.expand(Rd(tv, x, m.ty, body, ta), ctx)
        self.rd_calls += d.stats.recursive_call_count
        outer = Env([(name, (self.vals[name], None)) for name in free_vars(trace)])
        value, _ = self.run(trace, outer, {}, None)
        if tape is None:
            return value, None
        return value, tape.emit(trace, value)


def _machine(program_terms, structure, budget, mode, seed):
    used = set()
    for t in program_terms:
        used |= all_names(t)
    return Machine(structure, budget, mode, NameSupply(used, start=seed))


def _env(rho, symbolic=()):
    items = []
    for name, v in (rho.items() if isinstance(rho, dict) else rho):
        items.append((name, (v, Var(name) if name in symbolic else None)))
    return Env(items)


def evaluate_term(m, rho=None, funenv=None, structure=None, budget=DEFAULT_BUDGET,
                  mode=OPTIMIZED, seed=0):
    """Big-step evaluation to a native value.  ``rho`` maps names to native values."""
    mach = _machine([m], structure, budget, mode, seed)
    v, _ = mach.run(m, _env(rho or {}), dict(funenv or {}), None)
    return v


def symbolic_eval(m, rho=None, funenv=None, symbolic=(), structure=None,
                  budget=DEFAULT_BUDGET, mode=OPTIMIZED, seed=0):
    """Trace term recording the evaluation of m.

    Names in ``symbolic`` stay as variables in the trace (their values in
    ``rho`` only decide guards); every other variable becomes a constant.
    Returns (trace, value).
    """
    mach = _machine([m], structure, budget, mode, seed)
    env = _env(rho or {}, set(symbolic))
    for name in symbolic:
        value = env.lookup(name)[0]
        mach.types[name] = type_of_value(value)
        mach.vals[name] = value
    tape = Tape(mach)
    v, t = mach.run(m, env, dict(funenv or {}), tape)
    return lets(tape.bindings, t), v


def run_program(prog, inputs, structure=None, budget=DEFAULT_BUDGET, mode=OPTIMIZED, seed=0):
    rho = [(name, v) for (name, _), v in zip(prog.inputs, inputs)]
    mach = _machine([prog.term], structure, budget, mode, seed)
    v, _ = mach.run(prog.term, _env(rho), {}, None)
    return v


def trace_program(prog, inputs, structure=None, budget=DEFAULT_BUDGET, mode=OPTIMIZED, seed=0):
    """Symbolic evaluation with every program input kept symbolic."""
    rho = dict((name, v) for (name, _), v in zip(prog.inputs, inputs))
    return symbolic_eval(prog.term, rho, symbolic=[n for n, _ in prog.inputs],
                         structure=structure, budget=budget, mode=mode, seed=seed)


def collect_funenv(m):
    """FunEnv installed by the leading letrec chain of m; returns (funenv, rest)."""
    funs = {}
    while isinstance(m, LetRec):
        funs = dict(funs)
        funs[m.fun] = Closure(dict(funs), m.fun, m.param, m.param_ty, m.ret_ty, m.body)
        m = m.cont
    return funs, m
