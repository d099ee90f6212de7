#!/usr/bin/env python3
"""Regenerate the six digit tables (b = 10, 2, 3, phi, e, pi; N = 0..10).

Each row: N | collisions (decimal) | collisions in base b | digits of pi in
base b | systematic error.  The golden base prints both representation types.
"""

import argparse

from gmpy2 import mpq

from galperin.base_repr import error_string, expand_count, golden_dual_forms
from galperin.closed_form import (
    SubmultipleDegeneracy,
    count_collisions_approx,
    count_collisions_exact,
)
from galperin.numeric import E, PHI, PI

BASES = [("10", mpq(10)), ("2", mpq(2)), ("3", mpq(3)),
         ("phi", PHI), ("e", E), ("pi", PI)]


def count_for(b, N):
    try:
        return count_collisions_exact(b, N), False
    except SubmultipleDegeneracy as exc:
        return exc.formula_count, True


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--max-mantissa", type=int, default=10)
    args = parser.parse_args()

    for name, b in BASES:
        integer_base = name in ("10", "2", "3")
        print(f"\n=== base {name} ===")
        for N in range(args.max_mantissa + 1):
            total, degenerate = count_for(b, N)
            exp = expand_count(total, b)
            in_base = exp.to_string(trailing_point=not integer_base)
            cells = [str(N), str(total), in_base]
            if name == "phi" and N > 0:
                one, two = golden_dual_forms(total, N, shift=N)
                cells += [one.to_string(), two.to_string()]
            else:
                cells.append(exp.shifted(N).to_string(
                    trailing_point=(not integer_base) and N == 0))
            eps = (total - count_collisions_approx(b, N)) if N else 1
            cells.append(error_string(b, N) + (f"  (eps={eps})" if eps else ""))
            if degenerate:
                cells.append("[degenerate: physical count is 3]")
            print(" | ".join(cells))


if __name__ == "__main__":
    main()
