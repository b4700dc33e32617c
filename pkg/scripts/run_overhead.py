#!/usr/bin/env python3
"""Gate-count overhead of locking and enhancement across circuit sizes.

Counts are taken after 2-input normalization on both sides so the ratio
reflects added logic, not decomposition artifacts.

Usage:
  python3 scripts/run_overhead.py --seed 7
  python3 scripts/run_overhead.py --key-size 16 --max-keys 16 --csv-out overhead.csv
"""

import argparse
import csv
import random
import sys
from pathlib import Path

from decorlock.circuitgen import benchmark_suite
from decorlock.decor import DecorConfig, decor_enhance
from decorlock.locking import SchemeParams, lock_sarlock, lock_xbi
from decorlock.metrics import gate_overhead
from decorlock.seeds import derive_seed, rng_for


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--key-size", type=int, default=8)
    ap.add_argument("--max-keys", type=int, default=8)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--csv-out", type=Path)
    args = ap.parse_args()

    rows = []
    for c in benchmark_suite(derive_seed(args.seed, "suite")):
        for scheme, locker in (("xbi", lock_xbi), ("sarlock", lock_sarlock)):
            lc, key = locker(c, SchemeParams(key_size=args.key_size),
                             rng_for(args.seed, "lock", c.name, scheme))
            res = decor_enhance(lc, key, DecorConfig(max_keys=args.max_keys, verify=False),
                                random.Random(derive_seed(args.seed, "enhance", c.name, scheme)))
            base = gate_overhead(c, lc.circuit, scheme=scheme)
            enh = gate_overhead(c, res.locked.circuit, scheme=f"decor-{scheme}")
            rows.append({"circuit": c.name, "scheme": scheme, "base_gates": base.base_gates,
                         "lock_percent": round(base.percent, 2),
                         "decor_percent": round(enh.percent, 2)})
            print(f"{c.name} {scheme}: base={base.base_gates} gates, "
                  f"lock +{base.percent:.2f}%, enhanced +{enh.percent:.2f}%")

    if args.csv_out:
        with open(args.csv_out, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)
        print(f"wrote {args.csv_out}", file=sys.stderr)


if __name__ == "__main__":
    main()
