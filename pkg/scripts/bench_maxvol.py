#!/usr/bin/env python3
"""Operation-count and wall-time scaling of the greedy row sampler.

Thin wrapper over `graft bench`; prints the CSV table and the fitted
exponent of the cost in R (expected near 2: the elimination is O(K R^2)).
"""

import argparse
import sys

from graft.cli import main as cli_main


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--k", type=int, default=256)
    ap.add_argument("--rset", default="4,8,16,32,64")
    ap.add_argument("--trials", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    return cli_main(["bench", "--k", str(args.k), "--rset", args.rset,
                     "--trials", str(args.trials), "--seed", str(args.seed)])


if __name__ == "__main__":
    sys.exit(main())
