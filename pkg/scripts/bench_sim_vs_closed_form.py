#!/usr/bin/env python3
"""Cost of counting by simulation (O(Pi) events) vs the closed form (O(1)).

Sweeps the mantissa at a fixed base, timing both routes and checking the
counts agree.  The closed-form column stays flat while the simulation grows
with Pi ~ pi b^N; per-collision cost in interval mode is roughly constant.
"""

import argparse
import json
import time

from galperin.closed_form import count_collisions_exact
from galperin.dynamics import count_collisions_simulated
from galperin.model import BilliardSpec, FieldMode
from galperin.numeric import parse_base


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--base", default="10")
    parser.add_argument("--max-mantissa", type=int, default=6)
    parser.add_argument("--field", choices=["auto", "rational", "interval"], default="auto")
    args = parser.parse_args()
    b = parse_base(args.base)

    rows = []
    for N in range(1, args.max_mantissa + 1):
        spec = BilliardSpec(base=b, mantissa=N, field_mode=FieldMode(args.field))
        t0 = time.perf_counter()
        sim_count, termination = count_collisions_simulated(spec)
        sim_s = time.perf_counter() - t0
        t0 = time.perf_counter()
        cf_count = count_collisions_exact(b, N)
        cf_s = time.perf_counter() - t0
        rows.append({
            "N": N,
            "collisions": sim_count,
            "match": sim_count == cf_count,
            "termination": termination.value,
            "simulate_seconds": round(sim_s, 6),
            "closed_form_seconds": round(cf_s, 6),
            "ns_per_collision": round(1e9 * sim_s / max(sim_count, 1)),
        })
        print(json.dumps(rows[-1]))
    assert all(r["match"] for r in rows), "count mismatch"


if __name__ == "__main__":
    main()
