#!/usr/bin/env python3
"""Write the synthetic benchmark suite as BENCH files.

The suite is seeded, so the same command always regenerates identical
netlists; drop replacement circuits into the output directory to extend
the experiments to other benchmarks.

Usage:
  python3 scripts/gen_benchmarks.py --out-dir benchmarks --seed 424
  python3 scripts/gen_benchmarks.py --out-dir benchmarks --sizes syn1200:40:12:1200
"""

import argparse
from pathlib import Path

from decorlock.circuitgen import benchmark_suite
from decorlock.netlist import write_bench_file


def parse_size(spec: str):
    name, ni, no, ng = spec.split(":")
    return name, int(ni), int(no), int(ng)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out-dir", type=Path, default=Path("benchmarks"))
    ap.add_argument("--seed", type=int, default=424)
    ap.add_argument("--sizes", nargs="*", default=None,
                    help="name:inputs:outputs:gates specs; default suite if omitted")
    args = ap.parse_args()

    sizes = tuple(parse_size(s) for s in args.sizes) if args.sizes else None
    args.out_dir.mkdir(parents=True, exist_ok=True)
    for c in benchmark_suite(args.seed, sizes=sizes):
        path = args.out_dir / f"{c.name}.bench"
        write_bench_file(c, path)
        print(f"{path}  inputs={len(c.inputs)} outputs={len(c.outputs)} gates={len(c.gates)}")


if __name__ == "__main__":
    main()
