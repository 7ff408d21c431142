"""Command-line entry point: ``sdpl <command> [options]``.

Exit status: 0 on success, 1 on a user error (bad file, parse or type
error, evaluation failure), 2 when a property check fails.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
import threading
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import SdplError
from .interp import DEFAULT_FUEL, decode, denote, denote_type
from .opsem import DEFAULT_BUDGET
from .symdiff import MODES, OPTIMIZED
from .transforms import RULES

EXIT_OK, EXIT_USER, EXIT_PROPERTY = 0, 1, 2


@dataclass
class Config:
    fuel: int = DEFAULT_FUEL
    budget: int = DEFAULT_BUDGET
    seed: int = 0
    samples: int = 200
    tol: float = 1e-9
    mode: str = OPTIMIZED
    json: bool = False

    def __post_init__(self):
        if self.fuel < 0 or self.budget <= 0 or self.samples <= 0:
            raise ValueError("fuel must be >= 0, budget and samples > 0")
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- helpers


def _load(path):
    from .parser import parse_program

    try:
        src = Path(path).read_text()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None
    try:
        return parse_program(src)
    except SdplError as e:
        raise UsageError(f"{path}:{e}") from None


def _point(text, prog):
    """Comma-separated floats matching the program's input types."""
    dim = sum(denote_type(ty) for _, ty in prog.inputs)
    if text is None or text.strip() == "":
        values = []
    else:
        try:
            values = [float(t) for t in text.split(",")]
        except ValueError:
            raise UsageError(f"point must be comma-separated numbers, got {text!r}") from None
    if len(values) != dim:
        raise UsageError(f"program takes {dim} number(s) of input, got {len(values)}")
    x = np.asarray(values, dtype=float)
    out, pos = [], 0
    for _, ty in prog.inputs:
        d = denote_type(ty)
        out.append(decode(x[pos:pos + d], ty))
        pos += d
    return x, out


def _fmt_value(v):
    if isinstance(v, tuple):
        if not v:
            return "*"
        return f"({_fmt_value(v[0])}, {_fmt_value(v[1])})"
    return repr(float(v))


def _json_value(v):
    if isinstance(v, tuple):
        return [_json_value(x) for x in v]
    return float(v)


def _emit(cfg, payload, text):
    if cfg.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(text)


def _signature(prog):
    from .typecheck import typecheck_program

    out = typecheck_program(prog)
    if not prog.inputs:
        dom = "1"
    else:
        dom = ", ".join(str(ty) for _, ty in prog.inputs)
    return dom, out


def _table(results):
    lines = [f"{'check':<20} {'status':<6} {'pass':>5} {'fail':>5} {'skip':>5} {'points':>7} "
             f"{'abstain':>7} {'max err':>9} {'secs':>7}"]
    for r in results:
        lines.append(f"{r.name:<20} {r.status:<6} {r.passed:>5} {r.failed:>5} {r.skipped:>5} "
                     f"{r.points:>7} {r.abstained:>7} {r.max_error:>9.2e} {r.seconds:>7.2f}")
    return "\n".join(lines)


# ---------------------------------------------------------------- commands


def cmd_check(args, cfg):
    prog = _load(args.file)
    try:
        dom, out = _signature(prog)
    except SdplError as e:
        raise UsageError(f"{args.file}:{e}") from None
    _emit(cfg, {"inputs": [[n, str(t)] for n, t in prog.inputs], "type": str(out)}, f"{dom} → {out}")
    return EXIT_OK


def cmd_run(args, cfg):
    from .opsem import run_program

    prog = _load(args.file)
    _signature_or_fail(prog, args.file)
    _, inputs = _point(args.point, prog)
    try:
        v = run_program(prog, inputs, budget=cfg.budget, mode=cfg.mode, seed=cfg.seed)
    except SdplError as e:
        _emit(cfg, {"error": e.kind, "message": str(e)}, f"{e.kind}: {e}")
        return EXIT_USER
    _emit(cfg, {"value": _json_value(v)}, _fmt_value(v))
    return EXIT_OK


def cmd_trace(args, cfg):
    from .opsem import trace_program
    from .syntax import pretty, to_json

    prog = _load(args.file)
    _signature_or_fail(prog, args.file)
    _, inputs = _point(args.point, prog)
    try:
        trace, v = trace_program(prog, inputs, budget=cfg.budget, mode=cfg.mode, seed=cfg.seed)
    except SdplError as e:
        _emit(cfg, {"error": e.kind, "message": str(e)}, f"{e.kind}: {e}")
        return EXIT_USER
    _emit(cfg, {"trace": to_json(trace), "value": _json_value(v)}, pretty(trace))
    return EXIT_OK


def cmd_diff(args, cfg):
    from .symdiff import count_rd, expand_rd_fully
    from .syntax import Rd, children, is_trace_term, pretty, to_json

    prog = _load(args.file)
    _signature_or_fail(prog, args.file)
    stack = [prog.term]
    while stack:
        t = stack.pop()
        if isinstance(t, Rd) and not is_trace_term(_strip_rd(t.body)):
            raise UsageError("diff needs rd bodies that are trace terms; "
                             "use `trace` to evaluate control flow first")
        stack.extend(children(t))
    try:
        out, stats = expand_rd_fully(prog.term, mode=cfg.mode, ctx=dict(prog.inputs))
    except SdplError as e:
        raise UsageError(str(e)) from None
    payload = {"term": to_json(out), "mode": cfg.mode, "stats": asdict(stats),
               "rd_nodes_before": count_rd(prog.term)}
    text = pretty(out)
    if args.stats:
        text += (f"\nrecursive_call_count={stats.recursive_call_count} "
                 f"output_node_count={stats.output_node_count}")
    _emit(cfg, payload, text)
    return EXIT_OK


def _strip_rd(m):
    """m with nested rd nodes replaced by their bodies (for the trace-term test)."""
    from .syntax import Rd, map_children

    if isinstance(m, Rd):
        return _strip_rd(m.body)
    return map_children(m, _strip_rd)


def cmd_denote(args, cfg):
    from .rdrc import evaluate

    prog = _load(args.file)
    _signature_or_fail(prog, args.file)
    x, _ = _point(args.point, prog)
    out_ty = _signature(prog)[1]
    y = evaluate(denote(prog.term, prog.inputs, fuel=cfg.fuel), x)
    if y is None:
        _emit(cfg, {"defined": False, "value": None}, "undefined")
    else:
        v = decode(y, out_ty)
        _emit(cfg, {"defined": True, "value": _json_value(v)}, _fmt_value(v))
    return EXIT_OK


def _transformed(args):
    from .transforms import rewrite

    prog = _load(args.file)
    _signature_or_fail(prog, args.file)
    out, count = rewrite(prog.term, args.rule)
    return prog, out, count


def _header(prog):
    if not prog.inputs:
        return ""
    return "input " + ", ".join(f"{n}: {t}" for n, t in prog.inputs) + ";\n"


def cmd_transform(args, cfg):
    from .syntax import pretty, to_json

    prog, out, count = _transformed(args)
    _emit(cfg, {"rule": args.rule, "rewrites": count, "term": to_json(out)},
          _header(prog) + pretty(out))
    return EXIT_OK


def cmd_verify_transform(args, cfg):
    from .transforms import check_equivalence
    from .typecheck import typecheck_program
    from .parser import Program

    prog, out, count = _transformed(args)
    if count == 0:
        raise UsageError(f"rule {args.rule} does not apply anywhere in {args.file}")
    same_type = typecheck_program(Program(prog.inputs, out)) == typecheck_program(prog)
    rep = check_equivalence(prog.term, out, prog.inputs, samples=cfg.samples, seed=cfg.seed,
                            tol=cfg.tol, fuel=cfg.fuel)
    payload = rep.to_json()
    payload.update({"rule": args.rule, "rewrites": count, "type_preserved": same_type})
    text = (f"rule {args.rule}: {count} rewrite(s); {rep.compared}/{rep.points} points compared, "
            f"max deviation {rep.max_deviation:.3e}, operational checks {rep.operational_checked}, "
            f"definedness {'agrees' if rep.definedness_agree else 'DIFFERS'}; "
            f"{'PASS' if rep.passed and same_type else 'FAIL'}")
    _emit(cfg, payload, text)
    return EXIT_OK if rep.passed and same_type else EXIT_PROPERTY


def cmd_axioms(args, cfg):
    from .checks import axiom_suite, derivative_suite

    results = axiom_suite(samples=cfg.samples, seed=cfg.seed, n_maps=args.maps, depth=args.depth)
    results += derivative_suite(samples=cfg.samples, seed=cfg.seed, n_maps=args.maps, depth=args.depth)
    ok = all(r.ok for r in results)
    _emit(cfg, {"passed": ok, "results": [r.to_json() for r in results]}, _table(results))
    return EXIT_OK if ok else EXIT_PROPERTY


def cmd_soundness(args, cfg):
    from .checks import soundness_suite
    from .corpus import SOURCES, all_programs, load

    if args.program:
        unknown = [p for p in args.program if p not in SOURCES]
        if unknown:
            raise UsageError(f"unknown corpus program(s) {unknown}; known: {sorted(SOURCES)}")
        progs = [load(p) for p in args.program]
    else:
        progs = all_programs()
    results = soundness_suite(progs, samples=cfg.samples, seed=cfg.seed, tol=cfg.tol,
                              fuel=cfg.fuel, budget=cfg.budget, mode=cfg.mode)
    ok = all(r.ok for r in results)
    _emit(cfg, {"passed": ok, "results": [r.to_json() for r in results]}, _table(results))
    return EXIT_OK if ok else EXIT_PROPERTY


BLOWUP_FIELDS = ("depth", "standard_calls", "optimized_calls", "standard_nodes", "optimized_nodes",
                 "standard_value", "optimized_value")


def cmd_bench_blowup(args, cfg):
    from .checks import blowup_bench

    try:
        depths = [int(d) for d in args.depths.split(",") if d.strip()]
    except ValueError:
        raise UsageError(f"--depths must be comma-separated integers, got {args.depths!r}") from None
    if not depths or min(depths) < 1:
        raise UsageError("--depths needs positive integers")
    rows = sorted(blowup_bench(depths), key=lambda r: r.depth)
    if cfg.json:
        print(json.dumps([r.to_json() for r in rows], indent=2, sort_keys=True))
    else:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(BLOWUP_FIELDS)
        for r in rows:
            w.writerow([getattr(r, f) for f in BLOWUP_FIELDS])
    return EXIT_OK


def _signature_or_fail(prog, path):
    try:
        return _signature(prog)
    except SdplError as e:
        raise UsageError(f"{path}:{e}") from None


# ---------------------------------------------------------------- parser


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--fuel", type=int, default=DEFAULT_FUEL,
                        help="unrollings of while / letrec approximants in denotations")
    common.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="operational step budget")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--samples", type=int, default=None)
    common.add_argument("--tol", type=float, default=1e-9)
    common.add_argument("--mode", choices=MODES, default=OPTIMIZED, help="rd expansion rule set")
    common.add_argument("--json", action="store_true", help="machine-readable output")

    p = argparse.ArgumentParser(prog="sdpl", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_, file=True, point=False, samples=200):
        sp = sub.add_parser(name, parents=[common], help=help_)
        if file:
            sp.add_argument("file")
        if point:
            sp.add_argument("point", nargs="?", default=None,
                            help="input values as comma-separated numbers")
        sp.set_defaults(fn=fn, default_samples=samples)
        return sp

    add("check", cmd_check, "typecheck a program and print its type")
    add("run", cmd_run, "evaluate a program at a point", point=True)
    add("trace", cmd_trace, "print the trace term of a run", point=True)
    sp = add("diff", cmd_diff, "expand every rd symbolically")
    sp.add_argument("--stats", action="store_true", help="print Rd call and node counts")
    add("denote", cmd_denote, "evaluate the denotation at a point", point=True)
    sp = add("transform", cmd_transform, "rewrite a program with a derivative transform")
    sp.add_argument("--rule", choices=RULES, required=True)
    sp = add("verify-transform", cmd_verify_transform,
             "check a transform against the original on random inputs", samples=50)
    sp.add_argument("--rule", choices=RULES, required=True)
    sp = add("axioms", cmd_axioms, "reverse-derivative axiom suite on generated maps", file=False)
    sp.add_argument("--maps", type=int, default=50)
    sp.add_argument("--depth", type=int, default=4)
    sp = add("soundness", cmd_soundness, "operational vs denotational semantics on the corpus",
             file=False, samples=20)
    sp.add_argument("--program", action="append", help="restrict to a corpus program (repeatable)")
    sp = add("bench-blowup", cmd_bench_blowup, "Rd call counts on the let-chain family", file=False)
    sp.add_argument("--depths", default="8,12,16")
    return p


def _run(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = Config(fuel=args.fuel, budget=args.budget, seed=args.seed,
                     samples=args.samples if args.samples is not None else args.default_samples,
                     tol=args.tol, mode=args.mode, json=args.json)
    except ValueError as e:
        parser.error(str(e))
    try:
        return args.fn(args, cfg)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USER


def main(argv=None):
    # deep terms (long traces, recursive programs) need a deep Python stack
    argv = sys.argv[1:] if argv is None else argv
    result = {}

    def target():
        try:
            result["code"] = _run(argv)
        except SystemExit as e:
            # argparse exits with 2 on bad usage; 2 is reserved for property failures
            result["code"] = EXIT_OK if e.code in (0, None) else EXIT_USER

    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, 200_000))
    old_size = threading.stack_size(512 * 1024 * 1024)
    try:
        t = threading.Thread(target=target)
        t.start()
        t.join()
    finally:
        threading.stack_size(old_size)
        sys.setrecursionlimit(old_limit)
    return result.get("code", EXIT_USER)


if __name__ == "__main__":
    sys.exit(main())
