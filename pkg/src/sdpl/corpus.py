"""The fixed program corpus used by the soundness checks.

Each entry carries an input sampler that stays away from guard boundaries
(integer-valued inputs are only used where guards are offset by 1/2).
The files under ``programs/`` are these sources verbatim.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .parser import parse_program

FACTORIAL = """\
// n! for integer n >= 0
input n: real;
letrec fact(k: real): real =
  if gt0(k + -0.5) then mul(k, fact(k + -1)) else 1
in fact(n)
"""

SOURCES = {
    "square": ("input x: real;\nmul(x, x)\n", [(-3, 3)]),
    "poly": ("input x: real;\nlet y = mul(x, x) in y + mul(3, x) + 1\n", [(-3, 3)]),
    "trig": ("input x: real, y: real;\nsin(mul(x, y)) + cos(x)\n", [(-2, 2), (-2, 2)]),
    "pairs": ("input p: real * real;\nlet (a, b) = p in (mul(a, b), a + neg(b))\n", [(-3, 3), (-3, 3)]),
    "unit": ("input x: real, u: unit;\nlet w = (u, x) in exp(snd(w))\n", [(-2, 2)]),
    "partial": ("input x: real;\nsqrtp(x) + recip(x)\n", [(-2, 2)]),
    "abs": ("input x: real;\nif gt0(x) then x else neg(x)\n", [(-3, 3)]),
    "piecewise": ("input x: real;\nif gt0(x) then sin(x) else mul(x, 0.1)\n", [(-3, 3)]),
    "nested-if": ("""\
input x: real;
if gt0(x) then (if gt0(x + -1) then mul(x, x) else sin(x))
else (if gt0(x + 1) then neg(x) else exp(x))
""", [(-3, 3)]),
    "halve": ("input x: real;\nwhile gt0(x + -1) do mul(x, 0.5)\n", [(-3, 40)]),
    "countdown": ("""\
input p: real * real;
while gt0(fst(p)) do (fst(p) + -1, mul(snd(p), 1.1))
""", [(-2, 8), (-2, 2)]),
    "nested-while": ("""\
input x: real;
while gt0(x + -1) do
  let y = x + -0.25 in while gt0(y + -3) do mul(y, 0.5)
""", [(-2, 30)]),
    "rd-square": ("input a: real;\n1.rd(x: real. mul(x, x))(a)\n", [(-3, 3)]),
    "rd-sin-sq": ("input a: real, v: real;\nv.rd(x: real. sin(mul(x, x)))(a)\n", [(-2, 2), (-2, 2)]),
    "rd-pair": ("input a: real * real;\n1.rd(p: real * real. mul(fst(p), sin(snd(p))))(a)\n",
                [(-2, 2), (-2, 2)]),
    "rd-if": ("input a: real;\n1.rd(x: real. if gt0(x) then sin(x) else mul(x, x))(a)\n", [(-3, 3)]),
    "rd-while": ("input a: real;\n1.rd(x: real. while gt0(x + -1) do mul(x, 0.5))(a)\n", [(-3, 40)]),
    "rd-nested": ("input a: real;\n1.rd(x: real. 1.rd(y: real. mul(sin(x), mul(y, y)))(x))(a)\n",
                  [(-2, 2)]),
    "fd-while": ("input a: real, v: real;\nfd(x: real. while gt0(x + -1) do mul(x, 0.5))(a).v\n",
                 [(-3, 12), (-2, 2)]),
    "fd-sugar": ("input a: real, v: real;\nfd(x: real. mul(x, sin(x)))(a).v\n", [(-2, 2), (-2, 2)]),
    "factorial": (FACTORIAL, [(0, 10)]),
    "mutual": ("""\
// f and g call each other: g is defined inside f's body
input n: real;
letrec f(x: real): real =
  letrec g(y: real): real = if gt0(y) then f(y + -1) + y else 0 in g(x)
in f(n)
""", [(-2, 12)]),
    "letrec-rd": ("""\
input a: real;
letrec sq(y: real): real = mul(y, y) in
1.rd(x: real. sq(sin(x)))(a)
""", [(-3, 3)]),
    "rd-recursion": ("""\
input a: real;
letrec shrink(y: real): real = if gt0(y + -1) then shrink(mul(y, 0.5)) else sin(y) in
1.rd(x: real. shrink(x))(a)
""", [(-3, 30)]),
}

# integer-valued inputs, for programs whose guards sit at half-integers
INTEGER = {"factorial"}

# programs whose denotation depends on the fuel
FUEL_PROGRAMS = ("halve", "countdown", "nested-while", "factorial", "mutual", "rd-while",
                 "fd-while", "rd-recursion")


@dataclass
class CorpusProgram:
    name: str
    source: str
    ranges: list
    integer: bool = False

    @cached_property
    def program(self):
        return parse_program(self.source)

    @property
    def term(self):
        return self.program.term

    @property
    def inputs(self):
        return self.program.inputs

    def sample(self, rng, n):
        lows = np.array([lo for lo, _ in self.ranges], dtype=float)
        highs = np.array([hi for _, hi in self.ranges], dtype=float)
        if self.integer:
            return rng.integers(lows, highs + 1, size=(n, len(self.ranges))).astype(float)
        return rng.uniform(lows, highs, size=(n, len(self.ranges)))


def load(name) -> CorpusProgram:
    source, ranges = SOURCES[name]
    return CorpusProgram(name, source, ranges, name in INTEGER)


def all_programs():
    return [load(name) for name in SOURCES]
