"""Run the reverse-derivative axiom and forward-derivative suites and print a table.

    python scripts/run_axioms.py --samples 200 --seed 7 --maps 50
"""
import argparse
import json
import time

from sdpl.checks import axiom_suite, derivative_suite


def main():
    ap = argparse.ArgumentParser(description="RD axiom suite")
    ap.add_argument("--samples", type=int, default=200)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--maps", type=int, default=50)
    ap.add_argument("--depth", type=int, default=4)
    ap.add_argument("--json", action="store_true")
    args = ap.parse_args()

    t0 = time.perf_counter()
    results = axiom_suite(samples=args.samples, seed=args.seed, n_maps=args.maps, depth=args.depth)
    results += derivative_suite(samples=args.samples, seed=args.seed, n_maps=args.maps, depth=args.depth)
    if args.json:
        print(json.dumps([r.to_json() for r in results], indent=2))
    else:
        for r in results:
            print(f"{r.name:<18} {r.status:<5} pass={r.passed:<3} fail={r.failed:<3} skip={r.skipped:<3} "
                  f"points={r.points:<6} abstained={r.abstained:<5} max_err={r.max_error:.2e} "
                  f"{r.seconds:.1f}s")
        print(f"total {time.perf_counter() - t0:.1f}s")
    raise SystemExit(0 if all(r.ok for r in results) else 2)


if __name__ == "__main__":
    main()
