#!/usr/bin/env python3
"""Systematic-error map: epsilon(b, N) over a (b, N) grid, as CSV.

epsilon = int[pi/arctan(b^-N)] - int[pi b^N] is 0 or 1 on the studied
domain; cells undecidable at the per-cell precision cap are written as -1.
The CSV renders directly as a heat map (dark 0 / light 1 bands, with the
structure densest as b approaches 1).
"""

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor

from galperin.base_repr import error_cell, grid_values
from galperin.numeric import parse_base


def _cell(args):
    b, N, cap = args
    c = error_cell(b, N, cap)
    return str(c.b), str(c.N), c.epsilon


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--b-min", default="1.02")
    parser.add_argument("--b-max", default="20")
    parser.add_argument("--b-steps", type=int, default=200)
    parser.add_argument("--n-min", default="0")
    parser.add_argument("--n-max", default="5")
    parser.add_argument("--n-steps", type=int, default=200)
    parser.add_argument("--workers", type=int, default=4)
    parser.add_argument("--precision-cap", type=int, default=4096)
    parser.add_argument("--out", default=None)
    args = parser.parse_args()

    bs = grid_values(parse_base(args.b_min), parse_base(args.b_max), args.b_steps)
    ns = grid_values(parse_base(args.n_min), parse_base(args.n_max), args.n_steps)
    jobs = [(b, N, args.precision_cap) for b in bs for N in ns]
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            rows = list(pool.map(_cell, jobs, chunksize=64))
    else:
        rows = [_cell(j) for j in jobs]

    out = open(args.out, "w") if args.out else sys.stdout
    out.write("b,N,epsilon\n")
    for b, N, eps in rows:
        out.write(f"{b},{N},{eps}\n")
    if args.out:
        out.close()
        undecided = sum(1 for _, _, e in rows if e < 0)
        print(f"{len(rows)} cells written to {args.out} ({undecided} undecided)")


if __name__ == "__main__":
    main()
