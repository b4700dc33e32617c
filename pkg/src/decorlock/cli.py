"""Command-line front end.

Exit codes: 0 success, 1 netlist/key parse errors, 2 infeasible or invalid
locking parameters, 3 key verification failure against the oracle.
"""
from __future__ import annotations

import argparse
import logging
import os
import random
import sys

import numpy as np

from . import __version__
from .netlist import NetlistError, parse_bench_file, write_bench_file
from .locking import (
    Key,
    KeyVerificationError,
    LockingError,
    OracleConfig,
    Scheme,
    SchemeParams,
    VerdictStatus,
    is_correct_key,
    lock_sarlock,
    lock_xbi,
)
from .decor import (
    DecorConfig,
    decor_enhance,
    mc_same_feature_given_label,
    mc_same_label_given_feature,
    same_feature_bound,
    same_label_exact,
)
from .attack import FeatureParams, ReferenceParams, generate_references, run_attack
from .keyio import (
    KeyFormatError,
    read_key_file,
    read_key_list_file,
    write_key_file,
    write_key_list_file,
)
from .metrics import RunRecord, emit_report, gate_overhead
from .seeds import derive_seed

log = logging.getLogger("decorlock")

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_INFEASIBLE = 2
EXIT_KEYFAIL = 3


def _scheme(name: str) -> Scheme:
    try:
        return Scheme(name)
    except ValueError:
        raise LockingError(f"unknown scheme {name!r}")


def cmd_lock(args) -> int:
    c = parse_bench_file(args.input)
    rng = random.Random(args.seed)
    sp = SchemeParams(key_size=args.key_size, sarlock_allow_reuse=args.allow_input_reuse)
    scheme = _scheme(args.scheme)
    if scheme is Scheme.XBI:
        lc, key = lock_xbi(c, sp, rng)
    elif scheme is Scheme.SARLOCK:
        lc, key = lock_sarlock(c, sp, rng)
    else:
        raise LockingError("lock handles base schemes only; use 'decor' to enhance")
    write_bench_file(lc.circuit, args.output)
    write_key_file(key, args.key_out)
    if args.keys_out:
        write_key_list_file(lc.correct_keys, args.keys_out)
    rec = gate_overhead(c, lc.circuit, scheme.value)
    log.info(
        "locked %s: %d key bits, %d -> %d gates (%.2f%%)",
        c.name,
        len(key),
        rec.base_gates,
        rec.locked_gates,
        rec.percent,
    )
    print(f"locked {args.input} -> {args.output} ({len(key)} key bits)")
    return EXIT_OK


def cmd_decor(args) -> int:
    locked = parse_bench_file(args.input)
    key = read_key_file(args.key)
    if tuple(key.port_names) != locked.key_inputs:
        # accept any order in the key file as long as the port set matches
        m = key.as_mapping()
        if set(key.port_names) != set(locked.key_inputs):
            raise KeyFormatError("key file ports do not match the netlist's key inputs")
        key = Key(bits=tuple(m[p] for p in locked.key_inputs), port_names=locked.key_inputs)
    from .locking import LockedCircuit

    lc = LockedCircuit(
        circuit=locked,
        scheme=_scheme(args.scheme),
        key_ports=locked.key_inputs,
        correct_keys=(key,),
    )
    original = None
    if args.original:
        original = parse_bench_file(args.original)
        v = is_correct_key(lc, original, key)
        if v.status is VerdictStatus.INEQUIVALENT:
            raise KeyVerificationError(f"supplied key fails the oracle at {v.witness}")
    cfg = DecorConfig(max_keys=args.max_keys, rewrite_passes=args.rewrite_passes)
    res = decor_enhance(lc, key, cfg, random.Random(args.seed), reference=original)
    write_bench_file(res.locked.circuit, args.output)
    if args.keys_out:
        write_key_list_file(res.correct_keys, args.keys_out)
    print(f"enhanced {args.input} -> {args.output} with {res.n} unlocking keys")
    return EXIT_OK


def cmd_gen_refs(args) -> int:
    target_c = parse_bench_file(args.target)
    if not target_c.key_inputs:
        raise LockingError("target has no key inputs; lock it first")
    from .locking import LockedCircuit

    reported = read_key_file(args.reported_key) if args.reported_key else None
    lc = LockedCircuit(
        circuit=target_c,
        scheme=_scheme(args.scheme),
        key_ports=target_c.key_inputs,
        correct_keys=(reported,) if reported else (),
    )
    pool = [parse_bench_file(p) for p in args.pool or []]
    rp = ReferenceParams(
        scheme=_scheme(args.scheme),
        key_size=args.key_size,
        mode=args.mode,
        count=args.count,
        max_keys=args.max_keys,
        sarlock_allow_reuse=args.allow_input_reuse,
    )
    refs = generate_references(lc, rp, args.seed, pool=pool or None)
    os.makedirs(args.out_dir, exist_ok=True)
    manifest = ["index,bench,key"]
    for i, (ref, key) in enumerate(refs):
        bench = os.path.join(args.out_dir, f"ref{i:04d}.bench")
        keyf = os.path.join(args.out_dir, f"ref{i:04d}.key")
        write_bench_file(ref.circuit, bench)
        write_key_file(key, keyf)
        manifest.append(f"{i},{os.path.basename(bench)},{os.path.basename(keyf)}")
    with open(os.path.join(args.out_dir, "manifest.csv"), "w", newline="\n") as fh:
        fh.write("\n".join(manifest) + "\n")
    print(f"wrote {len(refs)} references to {args.out_dir}")
    return EXIT_OK


def cmd_attack(args) -> int:
    target_c = parse_bench_file(args.target)
    reported = read_key_file(args.reported_key)
    correct = read_key_list_file(args.key_list) if args.key_list else (reported,)
    from .locking import LockedCircuit

    scheme = _scheme(args.scheme)
    lc = LockedCircuit(
        circuit=target_c,
        scheme=scheme,
        key_ports=target_c.key_inputs,
        correct_keys=tuple(correct),
    )
    if reported.port_names != lc.key_ports:
        if set(reported.port_names) != set(lc.key_ports):
            raise KeyFormatError("reported key ports do not match the target's key inputs")
        m = reported.as_mapping()
        reported = Key(bits=tuple(m[p] for p in lc.key_ports), port_names=lc.key_ports)
        lc = LockedCircuit(
            circuit=target_c, scheme=scheme, key_ports=lc.key_ports, correct_keys=tuple(correct)
        )
    pool = [parse_bench_file(p) for p in args.pool or []]
    rp = ReferenceParams(
        scheme=scheme,
        key_size=len(reported),
        mode=args.mode,
        count=args.count,
        max_keys=args.max_keys,
        sarlock_allow_reuse=args.allow_input_reuse,
    )
    feature = FeatureParams(encoding=args.feature, depth=args.depth, hops=args.hops)
    report = run_attack(lc, rp, args.seed, model_kind=args.model, feature=feature, pool=pool or None)
    print(f"kpa={report.kpa:.2f} bkpa={report.bkpa:.2f} refs={report.references} model={report.model}")
    if args.report_json or args.report_csv:
        overhead = 0.0
        if args.original:
            orig = parse_bench_file(args.original)
            overhead = gate_overhead(orig, target_c, scheme.value).percent
        rec = RunRecord(
            circuit=target_c.name,
            scheme=scheme.value,
            key_size=len(reported),
            max_keys=args.max_keys,
            mode=args.mode,
            references=args.count,
            kpa=report.kpa,
            bkpa=report.bkpa,
            overhead_percent=overhead,
            seed=args.seed,
        )
        try:
            emit_report([rec], json_path=args.report_json, csv_path=args.report_csv)
        except Exception:
            for p in (args.report_json, args.report_csv):
                if p and os.path.exists(p):
                    os.unlink(p)
            raise
    return EXIT_OK


def cmd_verify_bounds(args) -> int:
    rng = np.random.default_rng(args.seed)
    ok = True
    est_label = mc_same_label_given_feature(args.n, args.t, args.trials, rng)
    exact = same_label_exact(args.n, args.t)
    sigma = (exact * (1 - exact) / args.trials) ** 0.5
    line_ok = abs(est_label - exact) <= max(3 * sigma, 1e-12)
    ok &= line_ok
    print(
        f"same-label: estimate={est_label:.6f} exact={exact:.6f} "
        f"tol={3 * sigma:.6f} {'ok' if line_ok else 'FAIL'}"
    )
    est_feat = mc_same_feature_given_label(args.kappa, args.max_keys, args.t, args.trials, rng)
    bound = same_feature_bound(args.kappa, args.max_keys, args.t)
    sigma_f = (bound * (1 - bound) / args.trials) ** 0.5
    line_ok = est_feat <= bound + 3 * sigma_f
    ok &= line_ok
    print(
        f"same-feature: estimate={est_feat:.6f} bound={bound:.6f} "
        f"slack={3 * sigma_f:.6f} {'ok' if line_ok else 'FAIL'}"
    )
    return EXIT_OK if ok else EXIT_INFEASIBLE


def cmd_verify_key(args) -> int:
    locked = parse_bench_file(args.locked)
    original = parse_bench_file(args.original)
    key = read_key_file(args.key)
    from .locking import LockedCircuit

    lc = LockedCircuit(
        circuit=locked, scheme=Scheme.XBI, key_ports=locked.key_inputs, correct_keys=(key,)
    )
    v = is_correct_key(lc, original, key, OracleConfig(samples=args.samples))
    print(f"verdict={v.status.value} rows={v.rows_checked} exhaustive={v.exhaustive}")
    if v.status is VerdictStatus.INEQUIVALENT:
        print(f"witness: {v.witness}")
        return EXIT_KEYFAIL
    return EXIT_OK


def cmd_report(args) -> int:
    import csv as _csv

    records = []
    for path in args.csv_in:
        with open(path, newline="") as fh:
            for row in _csv.DictReader(fh):
                records.append(
                    RunRecord(
                        circuit=row["circuit"],
                        scheme=row["scheme"],
                        key_size=int(row["key_size"]),
                        max_keys=int(row["N"]),
                        mode=row["mode"],
                        references=int(row["references"]),
                        kpa=float(row["kpa"]),
                        bkpa=float(row["bkpa"]),
                        overhead_percent=float(row["overhead_percent"]),
                        seed=int(row["seed"]),
                    )
                )
    emit_report(records, json_path=args.json_out, csv_path=args.csv_out)
    print(f"merged {len(records)} runs")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="decorlock", description=__doc__)
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("lock", help="lock a netlist with a base scheme")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--scheme", choices=["xbi", "sarlock"], required=True)
    p.add_argument("--key-size", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--key-out", required=True)
    p.add_argument("--keys-out", help="also write the full correct-key list")
    p.add_argument("--allow-input-reuse", action="store_true")
    p.set_defaults(func=cmd_lock)

    p = sub.add_parser("decor", help="add a randomized set of extra unlocking keys")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--key", required=True, help="correct key of the base lock")
    p.add_argument("--scheme", choices=["xbi", "sarlock"], default="xbi")
    p.add_argument("--max-keys", type=int, required=True)
    p.add_argument("--rewrite-passes", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--keys-out", help="write the private unlocking-key list")
    p.add_argument("--original", help="pre-lock netlist; enables oracle verification")
    p.set_defaults(func=cmd_decor)

    p = sub.add_parser("gen-refs", help="generate reference locked circuits")
    p.add_argument("--target", required=True)
    p.add_argument("--reported-key")
    p.add_argument("--scheme", choices=[s.value for s in Scheme], required=True)
    p.add_argument("--key-size", type=int, required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--mode", choices=["srs", "gss"], default="srs")
    p.add_argument("--max-keys", type=int, default=0)
    p.add_argument("--pool", nargs="*")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--allow-input-reuse", action="store_true")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_gen_refs)

    p = sub.add_parser("attack", help="run the key-prediction attack on a locked netlist")
    p.add_argument("--target", required=True)
    p.add_argument("--reported-key", required=True)
    p.add_argument("--key-list")
    p.add_argument("--scheme", choices=[s.value for s in Scheme], required=True)
    p.add_argument("--count", type=int, default=200)
    p.add_argument("--mode", choices=["srs", "gss"], default="srs")
    p.add_argument("--max-keys", type=int, default=0)
    p.add_argument("--pool", nargs="*")
    p.add_argument("--model", choices=["freq", "mlp"], default="freq")
    p.add_argument("--feature", choices=["vector", "subgraph"], default="vector")
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--hops", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--original", help="pre-lock netlist for overhead reporting")
    p.add_argument("--allow-input-reuse", action="store_true")
    p.add_argument("--report-json")
    p.add_argument("--report-csv")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("verify-key", help="oracle-check a key against the original netlist")
    p.add_argument("--locked", required=True)
    p.add_argument("--original", required=True)
    p.add_argument("--key", required=True)
    p.add_argument("--samples", type=int, default=4096)
    p.set_defaults(func=cmd_verify_key)

    p = sub.add_parser("verify-bounds", help="Monte Carlo check of the collision bounds")
    p.add_argument("--kappa", type=int, default=8)
    p.add_argument("--max-keys", type=int, default=8)
    p.add_argument("--n", type=int, default=8, help="realized key count for the label check")
    p.add_argument("--t", type=int, default=2)
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify_bounds)

    p = sub.add_parser("report", help="merge run CSVs into canonical JSON/CSV")
    p.add_argument("csv_in", nargs="+")
    p.add_argument("--json-out")
    p.add_argument("--csv-out")
    p.set_defaults(func=cmd_report)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (NetlistError, KeyFormatError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except (LockingError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except KeyVerificationError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_KEYFAIL


if __name__ == "__main__":
    sys.exit(main())
