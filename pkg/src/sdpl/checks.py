"""Oracles and property suites: the reverse-derivative axioms, finite
differences, symbolic differentiation, soundness and the let-chain blowup.

Every suite returns ``CheckResult`` rows so the CLI, the scripts and the
tests can share them.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import rdrc
from .errors import MissingReversePrimitive, OutOfFuel, SdplError
from .gen import pmap_corpus, random_closed_term, random_pmap, random_trace_term, sample_points
from .prims import DEFAULT_TABLE
from .interp import decode, denote, denote_funenv, denote_type, encode
from .rdrc import (AddMaps, Identity, Inj0, Proj0, Proj1, Zero, add, compose,
                   dagger_ctx, evaluate_batch, forward_derivative, join, pair,
                   prod, restrict)
from .rdrc import reverse_derivative as R
from .symdiff import MODES, OPTIMIZED, STANDARD, expand_rd_fully, rd_symbolic
from .syntax import REAL, Const, Let, Op, Rd, Var

FD_STEP = 1e-5
FD_TOL = 1e-4
ALG_TOL = 1e-9


@dataclass
class CheckResult:
    name: str
    passed: int = 0
    failed: int = 0
    skipped: int = 0
    points: int = 0
    abstained: int = 0
    max_error: float = 0.0
    seconds: float = 0.0
    failures: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def ok(self):
        return self.failed == 0

    @property
    def status(self):
        if self.failed:
            return "fail"
        return "pass" if self.passed else "skip"

    def record(self, good, err=0.0, detail=None):
        if good:
            self.passed += 1
        else:
            self.failed += 1
            if detail is not None and len(self.failures) < 10:
                self.failures.append(detail)
        if np.isfinite(err):
            self.max_error = max(self.max_error, float(err))

    def to_json(self):
        return {"name": self.name, "status": self.status, "passed": self.passed,
                "failed": self.failed, "skipped": self.skipped, "points": self.points,
                "abstained": self.abstained, "max_error": self.max_error,
                "seconds": round(self.seconds, 3), "failures": self.failures,
                "notes": self.notes}


def _rel(Y1, Y2):
    scale = np.maximum(1.0, np.maximum(np.abs(Y1), np.abs(Y2)))
    return np.abs(Y1 - Y2) / scale


def compare_maps(F, G, X, tol=ALG_TOL):
    """(definedness agrees everywhere, max relative error, compared, non-finite rows)."""
    Y1, ok1 = evaluate_batch(F, X)
    Y2, ok2 = evaluate_batch(G, X)
    same_def = bool(np.all(ok1 == ok2))
    both = ok1 & ok2
    finite = both & np.all(np.isfinite(Y1), axis=1) & np.all(np.isfinite(Y2), axis=1)
    err = 0.0
    if finite.any() and F.cod:
        err = float(_rel(Y1[finite], Y2[finite]).max())
    return same_def, err, int(finite.sum()), int(both.sum() - finite.sum())


# ---------------------------------------------------------------- finite differences


def _probe(f, X, dirs, h):
    """f at X +- h*dirs, central difference; None rows where undefined."""
    n = len(X)
    Yp, okp = evaluate_batch(f, X + h * dirs)
    Ym, okm = evaluate_batch(f, X - h * dirs)
    est = (Yp - Ym) / (2 * h)
    ok = okp & okm & np.all(np.isfinite(est), axis=1)
    return est.reshape(n, -1), ok


def fd_forward(f, X, V, h=FD_STEP, tol=FD_TOL):
    """Central-difference directional derivatives.

    Returns (estimate, usable-mask).  The oracle abstains at a row when a probe
    is undefined or when the h and h/2 estimates disagree beyond ``tol``, which
    flags kinks, poles and domain edges.
    """
    e1, ok1 = _probe(f, X, V, h)
    e2, ok2 = _probe(f, X, V, h / 2)
    ok = ok1 & ok2
    if f.cod:
        ok &= np.all(np.abs(e1 - e2) <= tol * (1 + np.abs(e2)), axis=1)
    return e2, ok


def fd_reverse(f, X, W, h=FD_STEP, tol=FD_TOL):
    """Jᵀw by central differences along each coordinate of the domain."""
    n, d = X.shape
    out = np.zeros((n, d))
    ok = np.ones(n, dtype=bool)
    for j in range(d):
        e = np.zeros((n, d))
        e[:, j] = 1.0
        col, okj = fd_forward(f, X, e, h, tol)
        out[:, j] = np.sum(col * W, axis=1)
        ok &= okj
    return out, ok


def _fd_compare(exact, est, usable, tol):
    """Per-row check |exact - est| <= tol (1 + |exact|) where the oracle is usable."""
    good = np.all(np.abs(exact - est) <= tol * (1 + np.abs(exact)), axis=1)
    err = np.max(np.abs(exact - est) / (1 + np.abs(exact)), axis=1) if exact.shape[1] else np.zeros(len(exact))
    return good | ~usable, float(err[usable].max()) if usable.any() else 0.0


def check_reverse_fd(f, X, W, h=FD_STEP, tol=FD_TOL):
    """R[f](x, w) against the finite-difference Jᵀw.  Returns (ok, err, used, abstained)."""
    Rf = R(f)
    Y, okR = evaluate_batch(Rf, np.hstack([X, W]))
    _, okf = evaluate_batch(f, X)
    est, usable = fd_reverse(f, X, W, h, tol)
    usable &= okR & okf & np.all(np.isfinite(Y), axis=1)
    good, err = _fd_compare(Y, est, usable, tol)
    return bool(good.all()), err, int(usable.sum()), int(len(X) - usable.sum())


def check_forward_fd(f, X, V, h=FD_STEP, tol=FD_TOL):
    Df = forward_derivative(f)
    Y, okD = evaluate_batch(Df, np.hstack([X, V]))
    est, usable = fd_forward(f, X, V, h, tol)
    usable &= okD & np.all(np.isfinite(Y), axis=1)
    good, err = _fd_compare(Y, est, usable, tol)
    return bool(good.all()), err, int(usable.sum()), int(len(X) - usable.sum())


# ---------------------------------------------------------------- axioms


def _split(n, parts):
    """Coordinate slices of R^n of the given widths."""
    out, off = [], 0
    for w in parts:
        out.append(compose(Proj1(off, n - off), Proj0(w, n - off - w)))
        off += w
    return out


def rd1(f, g, X, W):
    n, m = f.dom, f.cod
    pts = np.hstack([X, W])
    a = compare_maps(R(AddMaps(f, g)), add(R(f), R(g)), pts)
    b = compare_maps(R(Zero(n, m)), Zero(n + m, n), pts)
    return a[0] and b[0], max(a[1], b[1])


def rd2(f, g, X, W, W2):
    n, m = f.dom, f.cod
    x, b, c = _split(n + 2 * m, (n, m, m))
    Rf = R(f)
    lhs = compose(pair(x, add(b, c)), Rf)
    rhs = add(compose(pair(x, b), Rf), compose(pair(x, c), Rf))
    s1, e1, _, _ = compare_maps(lhs, rhs, np.hstack([X, W, W2]))
    # <a, 0> R[f] = (af)-bar 0, with a the identity
    zl = compose(pair(Identity(n), Zero(n, m)), Rf)
    zr = compose(restrict(f), Zero(n, n))
    s2, e2, _, _ = compare_maps(zl, zr, X)
    return s1 and s2, max(e1, e2)


def rd3(f, g, X, W):
    """R[pi_j] = pi1 iota_j for the projections out of dom(f) x cod(f)."""
    a, b = f.dom, f.cod
    pts = np.hstack([X, W, X])
    p0, p1 = Proj0(a, b), Proj1(a, b)
    s0, e0, _, _ = compare_maps(R(p0), compose(Proj1(a + b, a), Inj0(a, b)), pts)
    s1, e1, _, _ = compare_maps(R(p1), compose(Proj1(a + b, b), rdrc.Inj1(a, b)), np.hstack([X, W, W]))
    return s0 and s1, max(e0, e1)


def rd4(f, g, X, W):
    """R[<f,g>] = (1 x pi0) R[f] + (1 x pi1) R[g]."""
    a, b1, b2 = f.dom, f.cod, g.cod
    lhs = R(rdrc.Pair(f, g))
    rhs = add(compose(prod(Identity(a), Proj0(b1, b2)), R(f)),
              compose(prod(Identity(a), Proj1(b1, b2)), R(g)))
    s, e, _, _ = compare_maps(lhs, rhs, np.hstack([X, W]))
    return s, e


def rd5(f, h, X, W):
    """R[fh] = <pi0, <pi0 f, pi1> R[h]> R[f], with h : cod f -> R."""
    a, b = f.dom, h.cod
    p0, p1 = Proj0(a, b), Proj1(a, b)
    lhs = R(rdrc.Compose(f, h))
    rhs = compose(pair(p0, compose(pair(compose(p0, f), p1), R(h))), R(f))
    s, e, _, _ = compare_maps(lhs, rhs, np.hstack([X, W[:, :b]]))
    return s, e


def rd6(f, X, W, W2):
    n, m = f.dom, f.cod
    one_pi0 = prod(Identity(n), Proj0(m, m))
    zero_pi1 = prod(Zero(n, n), Proj1(m, m))
    lhs = compose(pair(one_pi0, zero_pi1), prod(Inj0(n + m, n), Identity(n + m)),
                  R(R(R(f))), Proj1(n + m, n))
    rhs = compose(prod(Identity(n), Proj1(m, m)), R(f))
    s, e, _, _ = compare_maps(lhs, rhs, np.hstack([X, W, W2]))
    return s, e


def rd7(f, X, V, V2, V3):
    n, m = f.dom, f.cod
    g = compose(prod(Inj0(n, m), Identity(n)), R(R(f)), Proj1(n, m))
    h = compose(prod(Inj0(2 * n, m), Identity(2 * n)), R(R(g)), Proj1(2 * n, m))
    P = np.hstack([X, V, V2, V3])
    Pex, ok_ex = evaluate_batch(rdrc.ex(n, n, n, n), P)
    # ex h at P is h at ex(P): one pass of h over both point sets, since the
    # cost of evaluating this graph is per node rather than per row
    Y, ok = evaluate_batch(h, np.vstack([P, Pex]))
    k = len(P)
    Y1, ok1, Y2, ok2 = Y[:k], ok[:k], Y[k:], ok[k:] & ok_ex
    same = bool(np.all(ok1 == ok2))
    both = ok1 & ok2 & np.all(np.isfinite(Y1), axis=1) & np.all(np.isfinite(Y2), axis=1)
    err = float(_rel(Y1[both], Y2[both]).max()) if both.any() and h.cod else 0.0
    return same and err <= ALG_TOL, err


def rd8(f, X, W):
    _, okf = evaluate_batch(f, X)
    _, okR = evaluate_batch(R(f), np.hstack([X, W]))
    return bool(np.all(okf == okR)), 0.0


def rd9(f, X, W):
    n = f.dom
    fb = restrict(f)
    s, e, _, _ = compare_maps(R(fb), compose(prod(fb, Identity(n)), Proj1(n, n)), np.hstack([X, X]))
    return s, e


def monotone(f, h, X, W):
    """f' = (h-bar) f <= f on the sample, and then R[f'] <= R[f]."""
    smaller = compose(restrict(h), f)
    pts = np.hstack([X, W])
    if not rdrc.leq(smaller, f, X):
        return False, 0.0
    return rdrc.leq(R(smaller), R(f), pts), 0.0


def join_rule(f, g, X, W):
    n, m = f.dom, f.cod
    c = rdrc.coord(n, 0)
    pos = compose(restrict(compose(c, rdrc.Prim("gt0_T", DEFAULT_TABLE))), f)
    neg = compose(restrict(compose(c, rdrc.Prim("gt0_F", DEFAULT_TABLE))), g)
    lhs = R(join([pos, neg], n, m))
    # evaluate the members' reverses separately and glue pointwise
    pts = np.hstack([X, W])
    Y, ok = evaluate_batch(lhs, pts)
    Yp, okp = evaluate_batch(R(pos), pts)
    Yn, okn = evaluate_batch(R(neg), pts)
    if np.any(okp & okn) or np.any(ok != (okp | okn)):
        return False, 0.0
    glued = np.where(okp[:, None], Yp, Yn)
    both = ok & np.all(np.isfinite(Y), axis=1)
    err = float(_rel(Y[both], glued[both]).max()) if both.any() and n else 0.0
    return err <= ALG_TOL, err


AXIOMS = ("RD.1", "RD.2", "RD.3", "RD.4", "RD.5", "RD.6", "RD.7", "RD.8", "RD.9",
          "R-fd", "monotone", "join")


def axiom_suite(maps=None, samples=200, seed=0, tol=ALG_TOL, fd_tol=FD_TOL, h=FD_STEP,
                n_maps=50, depth=4, only=None):
    """Run every axiom on every map; one CheckResult per axiom."""
    maps = maps if maps is not None else pmap_corpus(n_maps, seed=seed, depth=depth)
    rng = np.random.default_rng(seed + 1)
    results = {name: CheckResult(name) for name in AXIOMS if only is None or name in only}
    for f in maps:
        n, m = f.dom, f.cod
        X = sample_points(rng, samples, n)
        W, W2 = sample_points(rng, samples, m), sample_points(rng, samples, m)
        V, V2, V3 = (sample_points(rng, samples, n) for _ in range(3))
        g = random_pmap(rng, n, m, depth=2)
        scalar = random_pmap(rng, m, 1, depth=2)
        guard = random_pmap(rng, n, 1, depth=2)
        other = random_pmap(rng, n, 1, depth=2)
        cases = {
            "RD.1": lambda: rd1(f, g, X, W),
            "RD.2": lambda: rd2(f, g, X, W, W2),
            "RD.3": lambda: rd3(f, g, X, W),
            "RD.4": lambda: rd4(f, other, X, np.hstack([W, W2[:, :1]])),
            "RD.5": lambda: rd5(f, scalar, X, W),
            "RD.6": lambda: rd6(f, X, W, W2),
            "RD.7": lambda: rd7(f, X, V, V2, V3),
            "RD.8": lambda: rd8(f, X, W),
            "RD.9": lambda: rd9(f, X, W),
            "R-fd": None,
            "monotone": lambda: monotone(f, guard, X, W),
            "join": lambda: join_rule(f, g, X, W),
        }
        for name, res in results.items():
            t0 = time.perf_counter()
            try:
                if name == "R-fd":
                    good, err, used, abst = check_reverse_fd(f, X, W, h, fd_tol)
                    res.points += used
                    res.abstained += abst
                else:
                    good, err = cases[name]()
                    res.points += samples
                    good = good and err <= tol
            except MissingReversePrimitive as e:
                res.skipped += 1
                if len(res.notes) < 5:
                    res.notes.append(str(e))
                continue
            finally:
                res.seconds += time.perf_counter() - t0
            res.record(good, err, {"map": repr(f), "error": err})
    return list(results.values())


def derivative_suite(maps=None, samples=200, seed=0, tol=ALG_TOL, fd_tol=FD_TOL, h=FD_STEP,
                     n_maps=50, depth=4):
    """D from R against central differences, and the dagger round trip."""
    maps = maps if maps is not None else pmap_corpus(n_maps, seed=seed, depth=depth)
    rng = np.random.default_rng(seed + 2)
    fd = CheckResult("D-fd")
    rt = CheckResult("dagger-roundtrip")
    for f in maps:
        n, m = f.dom, f.cod
        X, V = sample_points(rng, samples, n), sample_points(rng, samples, n)
        W = sample_points(rng, samples, m)
        t0 = time.perf_counter()
        good, err, used, abst = check_forward_fd(f, X, V, h, fd_tol)
        fd.points += used
        fd.abstained += abst
        fd.record(good, err, {"map": repr(f), "error": err})
        t1 = time.perf_counter()
        same, err, used, _ = compare_maps(dagger_ctx(forward_derivative(f), n), R(f), np.hstack([X, W]))
        rt.points += used
        rt.record(same and err <= tol, err, {"map": repr(f), "error": err, "definedness": same})
        fd.seconds += t1 - t0
        rt.seconds += time.perf_counter() - t1
    return [fd, rt]


# ---------------------------------------------------------------- symbolic differentiation


def _denote_points(m, gamma, C, phi=None, fuel=10_000):
    F = denote(m, gamma, phi=phi, fuel=fuel)
    return evaluate_batch(F, C)


def _agree(Y1, ok1, Y2, ok2, tol):
    same = bool(np.all(ok1 == ok2))
    both = ok1 & ok2 & np.all(np.isfinite(Y1), axis=1) & np.all(np.isfinite(Y2), axis=1)
    err = float(_rel(Y1[both], Y2[both]).max()) if both.any() and Y1.shape[1] else 0.0
    return same, err


FUNCTIONS = """
letrec sq(y: real): real = mul(y, y) in
letrec bump(y: real): real = if gt0(y) then sin(y) else mul(y, 0.5) + 1 in
letrec half(y: real): real = while gt0(y + -1) do mul(y, 0.5) in
0
"""


def function_env():
    """A small operational function environment (closures for sq, bump, half)."""
    from .opsem import collect_funenv
    from .parser import parse_term

    return collect_funenv(parse_term(FUNCTIONS))[0]


def symdiff_suite(n_terms=100, seed=0, depth=6, points=8, tol=ALG_TOL, with_functions=True):
    """Denotation of v.rd(x.m)(a) against one rule step and the full expansion."""
    rng = np.random.default_rng(seed)
    gamma = [("c", REAL)]
    C = sample_points(rng, points, 1)
    results = {mode: CheckResult(f"symdiff-{mode}") for mode in MODES}
    if with_functions:
        results["functions"] = CheckResult("symdiff-functions")
        funenv = function_env()
        phi = denote_funenv(funenv)
    for _ in range(n_terms):
        m = random_trace_term(rng, env=(("c", REAL), ("x", REAL)), depth=depth)
        a, v = Const(round(float(rng.uniform(-2, 2)), 2)), Const(round(float(rng.uniform(-2, 2)), 2))
        lhs = Rd(v, "x", REAL, m, a)
        Y0, ok0 = _denote_points(lhs, gamma, C)
        for mode in MODES:
            res = results[mode]
            t0 = time.perf_counter()
            one, _ = rd_symbolic(v, "x", m, a, mode=mode, ctx={"c": REAL})
            full, _ = expand_rd_fully(lhs, mode=mode, ctx={"c": REAL})
            good, worst = True, 0.0
            for out in (one, full):
                Y, ok = _denote_points(out, gamma, C)
                same, err = _agree(Y0, ok0, Y, ok, tol)
                good &= same and err <= tol
                worst = max(worst, err)
            res.points += points
            res.seconds += time.perf_counter() - t0
            res.record(good, worst, {"term": str(m), "mode": mode, "error": worst})
        if with_functions:
            _symdiff_with_functions(rng, results["functions"], funenv, phi, gamma, C, depth, tol)
    return list(results.values())


def _symdiff_with_functions(rng, res, funenv, phi, gamma, C, depth, tol):
    """Rd applied to the trace of a term calling closures, against the denotation
    of the original term under the function assignment."""
    from .opsem import symbolic_eval
    from .syntax import FunCall

    fname = ("sq", "bump", "half")[rng.integers(3)]
    inner = random_trace_term(rng, env=(("c", REAL), ("x", REAL)), depth=max(1, depth - 3), partial=False)
    body = random_trace_term(rng, env=(("c", REAL), ("x", REAL), ("r", REAL)), depth=max(1, depth - 3),
                             partial=False)
    m = Let("r", REAL, FunCall(fname, inner), body)
    a = round(float(rng.uniform(-2, 2)), 2)
    v = round(float(rng.uniform(-2, 2)), 2)
    t0 = time.perf_counter()
    Y0, ok0 = _denote_points(Rd(Const(v), "x", REAL, m, Const(a)), gamma, C, phi=phi)
    good, worst = True, 0.0
    for i, c in enumerate(C[:, 0]):
        try:
            trace, _ = symbolic_eval(m, {"c": float(c), "x": a}, funenv, symbolic=("x",))
        except SdplError:
            # the call left a primitive domain or ran out of budget
            good &= not ok0[i]
            continue
        for mode in MODES:
            out, _ = expand_rd_fully(Rd(Const(v), "x", REAL, trace, Const(a)), mode=mode)
            y = rdrc.evaluate(denote(out, []), np.zeros(0))
            if (y is None) != (not ok0[i]):
                good = False
            elif y is not None:
                worst = max(worst, float(_rel(y, Y0[i]).max()))
    res.points += len(C)
    res.seconds += time.perf_counter() - t0
    res.record(good and worst <= tol, worst, {"term": str(m), "fun": fname, "a": a, "v": v, "error": worst})


def zero_lemma_suite(n_terms=50, seed=0, depth=6, points=8):
    """v.rd(x.m)(a) is exactly zero wherever defined when x is not free in m."""
    from .symdiff import trace_type

    rng = np.random.default_rng(seed)
    gamma = [("c", REAL)]
    C = sample_points(rng, points, 1)
    res = CheckResult("zero-lemma")
    for _ in range(n_terms):
        m = random_closed_term(rng, env=[("c", REAL)], depth=depth)
        ty = trace_type(m, {"c": REAL, "x": REAL})
        v = _value_of(rng, ty)
        term = Rd(v, "x", REAL, m, Const(round(float(rng.uniform(-2, 2)), 2)))
        Y, ok = _denote_points(term, gamma, C)
        vals = Y[ok]
        good = bool(np.all(vals == 0.0))
        res.points += int(ok.sum())
        res.record(good, float(np.abs(vals).max()) if vals.size else 0.0, {"term": str(m)})
    return [res]


def _value_of(rng, ty):
    from .gen import TraceGen

    return TraceGen(rng).value(ty)


# ---------------------------------------------------------------- blowup


def let_chain(n, op="sin"):
    """let y1 = op(x) in let y2 = op(y1) in ... in yn"""
    body = Var(f"y{n}")
    for k in range(n, 0, -1):
        prev = Var("x") if k == 1 else Var(f"y{k - 1}")
        body = Let(f"y{k}", REAL, Op(op, prev), body)
    return body


@dataclass
class BlowupRow:
    depth: int
    standard_calls: int
    optimized_calls: int
    standard_nodes: int = 0
    optimized_nodes: int = 0
    standard_value: float = math.nan
    optimized_value: float = math.nan

    def to_json(self):
        return dict(self.__dict__)


def blowup_bench(depths=(8, 12, 16), a=0.7, v=1.0):
    """Rd call counts of both modes on the let chain, with the values of the
    expanded traces (evaluated operationally: they are closed trace terms)."""
    from .opsem import evaluate_term

    rows = []
    for n in depths:
        term = Rd(Const(v), "x", REAL, let_chain(n), Const(a))
        row = BlowupRow(n, 0, 0)
        for mode in (STANDARD, OPTIMIZED):
            out, stats = expand_rd_fully(term, mode=mode)
            val = float(evaluate_term(out, budget=100 * stats.output_node_count + 1000))
            setattr(row, f"{mode}_calls", stats.recursive_call_count)
            setattr(row, f"{mode}_nodes", stats.output_node_count)
            setattr(row, f"{mode}_value", val)
        rows.append(row)
    return rows


def blowup_oracle(n, a=0.7, v=1.0):
    """d/dx sin^n(x) at a, times v, by the chain rule."""
    x, d = a, 1.0
    for _ in range(n):
        d *= math.cos(x)
        x = math.sin(x)
    return d * v


# ---------------------------------------------------------------- fixed points


def factorial_suite(fuel=12, inputs=range(11)):
    from .corpus import FACTORIAL
    from .parser import parse_program

    prog = parse_program(FACTORIAL)
    F = denote(prog.term, prog.inputs, fuel=fuel)
    res = CheckResult("factorial")
    for n in inputs:
        y = rdrc.evaluate(F, [float(n)])
        want = float(math.factorial(n))
        err = abs(y[0] - want) / max(1.0, want) if y is not None else math.inf
        res.points += 1
        res.record(y is not None and err <= ALG_TOL, err, {"n": n, "got": None if y is None else float(y[0])})
    return [res]


def fuel_monotonicity_suite(n_triples=50, seed=0, max_fuel=12):
    """Defined at fuel k implies defined and equal at fuel k+1."""
    from .corpus import FUEL_PROGRAMS, load

    rng = np.random.default_rng(seed)
    progs = [load(name) for name in FUEL_PROGRAMS]
    res = CheckResult("fuel-monotone")
    for _ in range(n_triples):
        prog = progs[rng.integers(len(progs))]
        x = prog.sample(rng, 1)[0]
        k = int(rng.integers(0, max_fuel))
        y0 = rdrc.evaluate(denote(prog.term, prog.inputs, fuel=k), x)
        y1 = rdrc.evaluate(denote(prog.term, prog.inputs, fuel=k + 1), x)
        good = y0 is None or (y1 is not None and np.allclose(y0, y1, rtol=0, atol=0))
        res.points += 1
        res.record(good, 0.0, {"program": prog.name, "x": x.tolist(), "fuel": k})
    return [res]


# ---------------------------------------------------------------- soundness


def soundness_suite(programs=None, samples=20, seed=0, tol=ALG_TOL, fuel=10_000,
                    budget=1_000_000, mode=OPTIMIZED):
    """Operational value = denotation = denotation of the trace, per program."""
    from .corpus import all_programs
    from .opsem import trace_program

    programs = programs if programs is not None else all_programs()
    rng = np.random.default_rng(seed)
    out = []
    for prog in programs:
        res = CheckResult(f"sound:{prog.name}")
        t0 = time.perf_counter()
        F = denote(prog.term, prog.inputs, fuel=fuel)
        X = prog.sample(rng, samples)
        Yd, okd = evaluate_batch(F, X)
        for x, yd, defined in zip(X, Yd, okd):
            rho = _decode_inputs(x, prog.inputs)
            try:
                trace, value = trace_program(prog, rho, budget=budget, mode=mode)
            except OutOfFuel:
                res.skipped += 1
                continue
            except SdplError as e:
                # stuck guard or primitive outside its domain: denotation must be undefined too
                res.points += 1
                res.record(not defined, 0.0, {"x": x.tolist(), "eval": type(e).__name__,
                                               "denotation": "defined" if defined else "undefined"})
                continue
            ty = _type_of(prog)
            v = encode(value, ty)
            yt = rdrc.evaluate(denote(trace, prog.inputs, fuel=fuel), x)
            errs = []
            good = bool(defined) and yt is not None
            if good and len(v):
                errs = [_rel(v, yd).max(), _rel(v, yt).max()]
            err = float(max(errs)) if errs else 0.0
            res.points += 1
            res.record(good and err <= tol, err,
                       {"x": x.tolist(), "value": v.tolist(), "denotation": yd.tolist() if defined else None,
                        "trace": None if yt is None else yt.tolist()})
        res.seconds = time.perf_counter() - t0
        out.append(res)
    return out


def _decode_inputs(x, inputs):
    vals, pos = [], 0
    for _, ty in inputs:
        d = denote_type(ty)
        vals.append(decode(x[pos:pos + d], ty))
        pos += d
    return vals


def _type_of(prog):
    from .typecheck import typecheck_program

    return typecheck_program(prog)
