"""Recursive-descent parser for the concrete syntax.

    program ::= ['input' x:T, ... ';'] term
    term    ::= let b, ..., b in term | letrec f(x:T):T = term in term
              | if bool then term else term | while bool do term | sum
    b       ::= x[:T] = term | (x[:T], y[:T]) = term
    sum     ::= postfix ('+' postfix)*
    postfix ::= atom ('.rd' '(' x:T '.' term ')' '(' term ')')*
    atom    ::= number | -number | x | * | (term) | (term, term)
              | op(args) | f(args) | add(m, n) | fst(m) | snd(m)
              | fd(x:T. term [: T])(term).atom
    bool    ::= true | false | p(args)
    type    ::= tatom ('*' tatom)*      tatom ::= real | real^n | 1 | unit | (type)

``//`` starts a line comment.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import ParseError, UnknownOp, UnknownPred
from .syntax import (REAL, UNIT, Add, Const, FalseB, Fst, FunCall, If, Let,
                     LetRec, NameSupply, Op, Pair, Pred, Prod, Rd, Snd, Span,
                     Star, TrueB, Var, While, default_signature, real_power)

KEYWORDS = {"let", "in", "letrec", "if", "then", "else", "while", "do", "rd",
            "true", "false", "input", "fd", "fst", "snd", "add", "real", "unit"}

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\n]+|//[^\n]*)
  | (?P<num>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<id>[A-Za-z_][A-Za-z0-9_#']*)
  | (?P<sym>[(),.:=+*;^-])
""", re.VERBOSE)


@dataclass
class Tok:
    kind: str
    text: str
    span: Span


def tokenize(src):
    toks = []
    line, col, pos = 1, 1, 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if not m:
            raise ParseError(f"unexpected character {src[pos]!r}", Span(line, col))
        text = m.group()
        if m.lastgroup != "ws":
            kind = m.lastgroup
            if kind == "id" and text in KEYWORDS:
                kind = "kw"
            toks.append(Tok(kind, text, Span(line, col)))
        nl = text.count("\n")
        if nl:
            line += nl
            col = len(text) - text.rfind("\n")
        else:
            col += len(text)
        pos = m.end()
    toks.append(Tok("eof", "", Span(line, col)))
    return toks


@dataclass
class Program:
    inputs: list
    term: object
    diagnostics: list = field(default_factory=list)

    @property
    def context(self):
        return list(self.inputs)


class Parser:
    def __init__(self, src, sig=None, names=None):
        self.toks = tokenize(src)
        self.i = 0
        self.sig = sig or default_signature()
        self.names = names or NameSupply(t.text for t in self.toks if t.kind == "id")
        self.funs = []
        self.diagnostics = []

    # -- token helpers
    @property
    def tok(self):
        return self.toks[self.i]

    def at(self, text):
        return self.tok.text == text and self.tok.kind in ("kw", "sym")

    def accept(self, text):
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text):
        if not self.at(text):
            raise ParseError(f"expected {text!r}, found {self.tok.text or 'end of input'!r}", self.tok.span)
        t = self.tok
        self.i += 1
        return t

    def ident(self):
        t = self.tok
        if t.kind != "id":
            raise ParseError(f"expected identifier, found {t.text or 'end of input'!r}", t.span)
        self.i += 1
        return t.text

    # -- types
    def type(self):
        ty = self.tatom()
        while self.accept("*"):
            ty = Prod(ty, self.tatom())
        return ty

    def tatom(self):
        t = self.tok
        if self.accept("real"):
            if self.accept("^"):
                n = self.tok
                if n.kind != "num" or not n.text.isdigit() or int(n.text) < 1:
                    raise ParseError("expected a positive integer after '^'", n.span)
                self.i += 1
                return real_power(int(n.text))
            return REAL
        if self.accept("unit"):
            return UNIT
        if t.kind == "num" and t.text == "1":
            self.i += 1
            return UNIT
        if self.accept("("):
            ty = self.type()
            self.expect(")")
            return ty
        raise ParseError(f"expected a type, found {t.text or 'end of input'!r}", t.span)

    # -- programs and terms
    def program(self):
        inputs = []
        if self.accept("input"):
            if not self.at(";"):
                while True:
                    name = self.ident()
                    self.expect(":")
                    inputs.append((name, self.type()))
                    if not self.accept(","):
                        break
            self.expect(";")
        term = self.term()
        self.expect_eof()
        return Program(inputs, term, self.diagnostics)

    def expect_eof(self):
        if self.tok.kind != "eof":
            raise ParseError(f"unexpected {self.tok.text!r}", self.tok.span)

    def term(self):
        t = self.tok
        if self.accept("let"):
            binds = [self.binding()]
            while self.accept(","):
                binds.append(self.binding())
            self.expect("in")
            body = self.term()
            for bind in reversed(binds):
                body = bind(body)
            return body
        if self.accept("letrec"):
            f = self.ident()
            self.expect("(")
            x = self.ident()
            self.expect(":")
            a = self.type()
            self.expect(")")
            self.expect(":")
            b = self.type()
            self.expect("=")
            self.funs.append(f)
            body = self.term()
            self.expect("in")
            cont = self.term()
            self.funs.pop()
            return LetRec(f, x, a, b, body, cont, span=t.span)
        if self.accept("if"):
            b = self.bool()
            self.expect("then")
            m = self.term()
            self.expect("else")
            return If(b, m, self.term(), span=t.span)
        if self.accept("while"):
            b = self.bool()
            self.expect("do")
            return While(b, self.term(), span=t.span)
        return self.sum()

    def binding(self):
        t = self.tok
        if self.accept("("):
            x = self.ident()
            tx = self.type() if self.accept(":") else None
            self.expect(",")
            y = self.ident()
            ty = self.type() if self.accept(":") else None
            self.expect(")")
            self.expect("=")
            bound = self.term()
            z = self.names.fresh("z")
            pty = Prod(tx, ty) if tx is not None and ty is not None else None
            tys = (tx, ty) if pty is not None else None

            def build(body):
                inner = Let(y, ty, Snd(Var(z), tys), body, span=t.span)
                return Let(z, pty, bound, Let(x, tx, Fst(Var(z), tys), inner, span=t.span), span=t.span)
            return build
        x = self.ident()
        tx = self.type() if self.accept(":") else None
        self.expect("=")
        bound = self.term()
        return lambda body: Let(x, tx, bound, body, span=t.span)

    def sum(self):
        m = self.postfix()
        while self.at("+"):
            t = self.expect("+")
            m = Add(m, self.postfix(), span=t.span)
        return m

    def postfix(self):
        m = self.atom()
        while self.at(".") and self.toks[self.i + 1].text == "rd":
            t = self.expect(".")
            self.expect("rd")
            self.expect("(")
            x = self.ident()
            self.expect(":")
            ty = self.type()
            self.expect(".")
            body = self.term()
            self.expect(")")
            self.expect("(")
            a = self.term()
            self.expect(")")
            m = Rd(m, x, ty, body, a, span=t.span)
        return m

    def args(self):
        self.expect("(")
        items = [self.term()]
        while self.accept(","):
            items.append(self.term())
        self.expect(")")
        return items

    def _tuple(self, items):
        out = items[0]
        for it in items[1:]:
            out = Pair(out, it)
        return out

    def atom(self):
        t = self.tok
        if t.kind == "num":
            self.i += 1
            return Const(float(t.text), span=t.span)
        if self.at("-") and self.toks[self.i + 1].kind == "num":
            self.i += 1
            n = self.tok
            self.i += 1
            return Const(-float(n.text), span=t.span)
        if self.accept("*"):
            return Star(span=t.span)
        if self.accept("("):
            m = self.term()
            if self.accept(","):
                r = self.term()
                self.expect(")")
                return Pair(m, r, span=t.span)
            self.expect(")")
            return m
        if self.accept("add"):
            items = self.args()
            if len(items) != 2:
                raise ParseError("add takes two arguments", t.span)
            return Add(items[0], items[1], span=t.span)
        if self.at("fst") or self.at("snd"):
            self.i += 1
            items = self.args()
            if len(items) != 1:
                raise ParseError(f"{t.text} takes one argument", t.span)
            return (Fst if t.text == "fst" else Snd)(items[0], span=t.span)
        if self.accept("fd"):
            return self.fd(t)
        if t.kind == "id":
            self.i += 1
            if not self.at("("):
                return Var(t.text, span=t.span)
            arg = self._tuple(self.args())
            if t.text in self.funs:
                return FunCall(t.text, arg, span=t.span)
            if self.sig.has_op(t.text):
                return Op(t.text, arg, span=t.span)
            if t.text in self.sig.preds:
                raise ParseError(f"predicate {t.text!r} used as a term", t.span)
            raise UnknownOp(f"unknown operation or function {t.text!r}", t.span)
        raise ParseError(f"unexpected {t.text or 'end of input'!r}", t.span)

    def fd(self, t):
        from .transforms import sugar_fd

        self.expect("(")
        x = self.ident()
        self.expect(":")
        a_ty = self.type()
        self.expect(".")
        m = self.term()
        b_ty = self.type() if self.accept(":") else a_ty
        self.expect(")")
        self.expect("(")
        a = self.term()
        self.expect(")")
        self.expect(".")
        v = self.atom()
        return sugar_fd(x, a_ty, m, a, v, b_ty, names=self.names)

    def bool(self):
        t = self.tok
        if self.accept("true"):
            return TrueB(span=t.span)
        if self.accept("false"):
            return FalseB(span=t.span)
        if t.kind == "id":
            self.i += 1
            if t.text not in self.sig.preds:
                raise UnknownPred(f"unknown predicate {t.text!r}", t.span)
            return Pred(t.text, self._tuple(self.args()), span=t.span)
        raise ParseError(f"expected a boolean term, found {t.text or 'end of input'!r}", t.span)


def parse(source, sig=None):
    """Parse a term (no input header).  Returns (term, diagnostics)."""
    p = Parser(source, sig)
    m = p.term()
    p.expect_eof()
    return m, p.diagnostics


def parse_term(source, sig=None):
    return parse(source, sig)[0]


def parse_program(source, sig=None) -> Program:
    return Parser(source, sig).program()


def parse_type(source):
    p = Parser(source)
    ty = p.type()
    p.expect_eof()
    return ty
