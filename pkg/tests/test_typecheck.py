from pathlib import Path

import pytest

from sdpl.corpus import SOURCES, load
from sdpl.errors import (ArityMismatch, RecBodyFreeVarViolation, StaticError, TypeMismatch,
                         UnboundFunction, UnboundVariable, UnknownOp, WhileContextViolation)
from sdpl.parser import parse_program, parse_term
from sdpl.syntax import REAL, UNIT, Prod, TrueB, pretty
from sdpl.typecheck import typecheck, typecheck_bool, typecheck_program

PROGRAMS = Path(__file__).resolve().parent.parent / "programs"


def ty(src, gamma=(("x", REAL),)):
    return typecheck([], list(gamma), parse_term(src))


def test_add_is_real():
    assert ty("x + x") == REAL


def test_while_type():
    assert ty("while gt0(p) do p + -1", [("p", REAL)]) == REAL


def test_rd_type():
    assert ty("v.rd(x:real. mul(x,x))(a)", [("v", REAL), ("a", REAL)]) == REAL


def test_bool_terms():
    typecheck_bool([], [], TrueB())
    typecheck_bool([], [("x", REAL)], parse_term("if gt0(x) then 1 else 0").cond)


def test_pred_on_unit_rejected():
    with pytest.raises(TypeMismatch):
        typecheck([], [("x", UNIT)], parse_term("if gt0(x) then 1 else 0"))


def test_pred_on_pair_is_shape_error():
    with pytest.raises(ArityMismatch):
        typecheck([], [("x", Prod(REAL, REAL))], parse_term("if gt0(x) then 1 else 0"))


@pytest.mark.parametrize("src, gamma, err", [
    ("y", [("x", REAL)], UnboundVariable),
    ("f(x)", [("x", REAL)], (UnboundFunction, UnknownOp)),
    ("mul(x)", [("x", REAL)], ArityMismatch),
    ("sin(*)", [], TypeMismatch),
    ("foo(x)", [("x", REAL)], UnknownOp),
    ("fst(x)", [("x", REAL)], ArityMismatch),
    ("while gt0(x) do x + y", [("x", REAL), ("y", REAL)], WhileContextViolation),
    ("letrec f(z: real): real = z + x in f(x)", [("x", REAL)], RecBodyFreeVarViolation),
    ("x.rd(y:real. y)(x) + (x, x)", [("x", REAL)], TypeMismatch),
])
def test_static_errors(src, gamma, err):
    with pytest.raises(err):
        typecheck([], gamma, parse_term(src))


def test_errors_carry_spans():
    with pytest.raises(StaticError, match=r"^2:\d+"):
        typecheck_program(parse_program("input x: real;\nx + y"))


def test_shadowing_rightmost():
    assert ty("let x:real*real = (x, x) in x") == Prod(REAL, REAL)


@pytest.mark.parametrize("name", sorted(SOURCES))
def test_corpus_typechecks_and_round_trips(name):
    p = load(name)
    out = typecheck_program(p.program)
    again = parse_term(pretty(p.term))
    assert again == p.term
    assert (PROGRAMS / f"{name}.sdpl").read_text() == p.source
    assert out is not None


def test_arity_of_declared_function():
    with pytest.raises((ArityMismatch, TypeMismatch)):
        ty("letrec f(z: real): real = z in f((x, x))")
