"""Standard vs optimized Rd call counts on the n-deep let-chain, as CSV,
with the chain-rule value for comparison."""
import argparse
import csv
import sys

from sdpl.checks import blowup_bench, blowup_oracle


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--depths", default="8,12,16")
    ap.add_argument("--a", type=float, default=0.7)
    ap.add_argument("--v", type=float, default=1.0)
    args = ap.parse_args()
    depths = [int(d) for d in args.depths.split(",")]
    rows = blowup_bench(depths, a=args.a, v=args.v)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["depth", "standard_calls", "optimized_calls", "standard_value", "optimized_value",
                "oracle"])
    for r in rows:
        w.writerow([r.depth, r.standard_calls, r.optimized_calls, r.standard_value,
                    r.optimized_value, blowup_oracle(r.depth, args.a, args.v)])


if __name__ == "__main__":
    main()
