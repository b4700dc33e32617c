#!/usr/bin/env python3
"""Key-prediction accuracy of the re-lock attack, baseline vs enhanced.

For each circuit: lock it, attack the plain lock, then enhance with each
requested key-count cap N and attack again with identical settings. One
run record per (circuit, N) lands in the report; N=0 rows are the
baseline scheme.

Usage:
  python3 scripts/run_trend.py --gates 500 800 --seed 7 --csv-out trend.csv
  python3 scripts/run_trend.py --scheme sarlock --model mlp --feature subgraph \
      --count 200 --gates 500 800 --seed 7 --json-out trend.json
  python3 scripts/run_trend.py --bench benchmarks/syn800.bench --seed 7
"""

import argparse
import random
from pathlib import Path

from decorlock.attack import FeatureParams, ReferenceParams, run_attack
from decorlock.circuitgen import GenParams, random_circuit
from decorlock.decor import DecorConfig, decor_enhance
from decorlock.locking import Scheme, SchemeParams, lock_sarlock, lock_xbi
from decorlock.metrics import RunRecord, emit_report, gate_overhead
from decorlock.netlist import parse_bench_file
from decorlock.seeds import derive_seed, rng_for

ENHANCED = {Scheme.XBI: Scheme.DECOR_XBI, Scheme.SARLOCK: Scheme.DECOR_SARLOCK}


def load_circuits(args):
    if args.bench:
        return [parse_bench_file(p) for p in args.bench]
    out = []
    for ng in args.gates:
        name = f"syn{ng}"
        gp = GenParams(n_inputs=args.inputs, n_outputs=args.outputs, n_gates=ng)
        out.append(random_circuit(name, gp, rng_for(args.seed, "circuit", name)))
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--bench", type=Path, nargs="*", help="existing BENCH files to use")
    ap.add_argument("--gates", type=int, nargs="*", default=[500, 800])
    ap.add_argument("--inputs", type=int, default=32)
    ap.add_argument("--outputs", type=int, default=8)
    ap.add_argument("--scheme", choices=["xbi", "sarlock"], default="xbi")
    ap.add_argument("--key-size", type=int, default=32)
    ap.add_argument("--max-keys", type=int, nargs="*", default=[8, 16],
                    help="enhancement caps N to sweep (baseline always included)")
    ap.add_argument("--count", type=int, default=500, help="references per attack")
    ap.add_argument("--mode", choices=["srs", "gss"], default="srs")
    ap.add_argument("--model", choices=["freq", "mlp"], default="freq")
    ap.add_argument("--feature", choices=["vector", "subgraph"], default="vector")
    ap.add_argument("--depth", type=int, default=1)
    ap.add_argument("--hops", type=int, default=2)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--csv-out", type=Path)
    ap.add_argument("--json-out", type=Path)
    args = ap.parse_args()

    scheme = Scheme(args.scheme)
    locker = lock_xbi if scheme is Scheme.XBI else lock_sarlock
    fp = (FeatureParams(encoding="vector", depth=args.depth)
          if args.feature == "vector" else FeatureParams(encoding="subgraph", hops=args.hops))

    records = []
    for c in load_circuits(args):
        lc, key = locker(c, SchemeParams(key_size=args.key_size), rng_for(args.seed, "lock", c.name))
        rp = ReferenceParams(scheme=scheme, key_size=args.key_size, mode=args.mode,
                             count=args.count, verify=False)
        rep = run_attack(lc, rp, master_seed=derive_seed(args.seed, "attack", c.name, 0),
                         model_kind=args.model, feature=fp)
        base_oh = gate_overhead(c, lc.circuit, scheme=scheme.value).percent
        records.append(RunRecord(c.name, scheme.value, args.key_size, 0, args.mode,
                                 args.count, rep.kpa, rep.bkpa, base_oh, args.seed))
        print(f"{c.name} {scheme.value} baseline: kpa={rep.kpa:.1f} bkpa={rep.bkpa:.1f} "
              f"seen={rep.seen_rate:.2f} overhead={base_oh:.1f}%")

        for n_keys in args.max_keys:
            res = decor_enhance(lc, key, DecorConfig(max_keys=n_keys, verify=False),
                                random.Random(derive_seed(args.seed, "enhance", c.name, n_keys)))
            rpn = ReferenceParams(scheme=ENHANCED[scheme], key_size=args.key_size,
                                  mode=args.mode, count=args.count, max_keys=n_keys, verify=False)
            repn = run_attack(res.locked, rpn,
                              master_seed=derive_seed(args.seed, "attack", c.name, n_keys),
                              model_kind=args.model, feature=fp)
            oh = gate_overhead(c, res.locked.circuit, scheme=ENHANCED[scheme].value).percent
            records.append(RunRecord(c.name, ENHANCED[scheme].value, args.key_size, n_keys,
                                     args.mode, args.count, repn.kpa, repn.bkpa, oh, args.seed))
            print(f"{c.name} {ENHANCED[scheme].value} N={n_keys} (n={len(res.locked.correct_keys)}): "
                  f"kpa={repn.kpa:.1f} bkpa={repn.bkpa:.1f} seen={repn.seen_rate:.2f} "
                  f"overhead={oh:.1f}%")

    json_text, csv_text = emit_report(records, json_path=args.json_out, csv_path=args.csv_out)
    if not (args.csv_out or args.json_out):
        print(csv_text, end="")


if __name__ == "__main__":
    main()
