#!/usr/bin/env python3
"""Project key-gate training features to 2D and score class separation.

Writes one point per training record (pc1, pc2, label) and prints the
best single-threshold accuracy along the first component: near 1.0 the
layout leaks key bits, near 0.5 it does not.

Usage:
  python3 scripts/run_pca.py --seed 7 --points-out baseline.csv
  python3 scripts/run_pca.py --max-keys 16 --seed 7 --points-out enhanced.csv
"""

import argparse
import csv
import random
from pathlib import Path

from decorlock.attack import FeatureParams, ReferenceParams, build_training_set, generate_references
from decorlock.circuitgen import GenParams, random_circuit
from decorlock.decor import DecorConfig, decor_enhance
from decorlock.locking import Scheme, SchemeParams, lock_xbi
from decorlock.metrics import best_threshold_accuracy, pca_top2
from decorlock.seeds import derive_seed, rng_for


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--inputs", type=int, default=24)
    ap.add_argument("--gates", type=int, default=400)
    ap.add_argument("--key-size", type=int, default=16)
    ap.add_argument("--max-keys", type=int, default=0,
                    help="0 attacks the plain lock; N>=2 enhances first")
    ap.add_argument("--count", type=int, default=1000)
    ap.add_argument("--depth", type=int, default=1)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--points-out", type=Path)
    args = ap.parse_args()

    c = random_circuit(f"syn{args.gates}", GenParams(args.inputs, 8, args.gates),
                       rng_for(args.seed, "circuit"))
    lc, key = lock_xbi(c, SchemeParams(key_size=args.key_size), rng_for(args.seed, "lock"))
    scheme = Scheme.XBI
    if args.max_keys >= 2:
        res = decor_enhance(lc, key, DecorConfig(max_keys=args.max_keys, verify=False),
                            random.Random(derive_seed(args.seed, "enhance")))
        lc, scheme = res.locked, Scheme.DECOR_XBI

    rp = ReferenceParams(scheme=scheme, key_size=args.key_size, count=args.count,
                         max_keys=args.max_keys, verify=False)
    recs = build_training_set(generate_references(lc, rp, master_seed=derive_seed(args.seed, "refs")),
                              FeatureParams(encoding="vector", depth=args.depth))
    proj = pca_top2([r.feature for r in recs], [r.label for r in recs])
    acc = best_threshold_accuracy([p[0] for p in proj.points], [p[2] for p in proj.points])
    print(f"{scheme.value} records={len(recs)} explained={proj.explained[0]:.3f}/"
          f"{proj.explained[1]:.3f} pc1 threshold accuracy={acc:.3f}")

    if args.points_out:
        with open(args.points_out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["pc1", "pc2", "label"])
            for x, y, lab in proj.points:
                w.writerow([f"{x:.6g}", f"{y:.6g}", lab])


if __name__ == "__main__":
    main()
