"""Feature extraction, key-recovery models, and reference generation."""

import os
import random

import pytest

from decorlock.attack import (
    GATE_CODES,
    FeatureParams,
    FeatureRecord,
    ReferenceParams,
    build_training_set,
    compute_bkpa,
    compute_kpa,
    extract_subgraph,
    extract_vector,
    generate_references,
    run_attack,
    train_frequency,
    train_mlp,
    vector_length,
)
from decorlock.locking import Key, Scheme, SchemeParams, lock_xbi
from decorlock.netlist import parse_bench

from conftest import make_synth

LADDER = """\
INPUT(a)
INPUT(b)
INPUT(keyinput0)
OUTPUT(y)
t = AND(a, b)
u = XOR(t, keyinput0)
v = NOR(u, a)
y = OR(v, b)
"""


class TestVector:
    def test_length_formula(self):
        # layout is [center, fanin levels, fanout levels] with geometric
        # level widths, so total slots are 1 + 2*(f + f^2 + ... + f^d)
        assert vector_length(1, 2) == 5
        assert vector_length(2, 2) == 13
        assert vector_length(1, 3) == 7
        c = parse_bench(LADDER)
        for d, f in [(1, 2), (2, 2), (1, 3)]:
            assert len(extract_vector(c, "keyinput0", d, f)) == vector_length(d, f)

    def test_exact_depth1_vector(self):
        c = parse_bench(LADDER)
        v = extract_vector(c, "keyinput0", 1, 2)
        # center: the port's first sink (the XOR); fanin: t and keyinput0
        # itself; fanout: the NOR sink, padded
        assert v == (
            GATE_CODES["XOR"],
            GATE_CODES["AND"],
            GATE_CODES["KEYINPUT"],
            GATE_CODES["NOR"],
            GATE_CODES["PAD"],
        )

    def test_po_marker_on_output_sink(self):
        c = parse_bench("INPUT(a)\nINPUT(keyinput0)\nOUTPUT(y)\ny = XNOR(a, keyinput0)\n")
        v = extract_vector(c, "keyinput0", 1, 2)
        assert v[0] == GATE_CODES["XNOR"]
        assert GATE_CODES["PO"] in v

    def test_depth2_reaches_grandparents(self):
        c = parse_bench(LADDER)
        v = extract_vector(c, "keyinput0", 2, 2)
        assert GATE_CODES["OR"] in v  # y is two sink hops away

    def test_deterministic(self):
        c = make_synth("f", 8, 3, 60, 90)
        lc, _ = lock_xbi(c, SchemeParams(key_size=4), random.Random(91))
        p = lc.key_ports[0]
        assert extract_vector(lc.circuit, p, 2, 2) == extract_vector(lc.circuit, p, 2, 2)


class TestSubgraph:
    def test_ring_histogram_shape_and_mass(self):
        c = parse_bench(LADDER)
        sg = extract_subgraph(c, "keyinput0", hops=2)
        h = sg.ring_histogram(2)
        assert len(h) == 3 * len(GATE_CODES)
        assert sum(h) > 0

    def test_canonical_invariant_under_renaming(self):
        c = parse_bench(LADDER)
        renamed = parse_bench(LADDER.replace("t =", "tt =").replace("(t,", "(tt,"))
        a = extract_subgraph(c, "keyinput0", hops=2)
        b = extract_subgraph(renamed, "keyinput0", hops=2)
        assert a.canonical() == b.canonical()
        assert a.ring_histogram(2) == b.ring_histogram(2)

    def test_canonical_detects_structure_change(self):
        c = parse_bench(LADDER)
        changed = parse_bench(LADDER.replace("v = NOR(u, a)", "v = NAND(u, a)"))
        a = extract_subgraph(c, "keyinput0", hops=2)
        b = extract_subgraph(changed, "keyinput0", hops=2)
        assert a.canonical() != b.canonical()


def rec(feature, label):
    return FeatureRecord(feature=tuple(feature), label=label, key_port="k", source="t")


def make_locked_ladder(c):
    from decorlock.locking import LockedCircuit

    return LockedCircuit(
        circuit=c,
        scheme=Scheme.XBI,
        key_ports=("keyinput0",),
        correct_keys=(Key((0,), ("keyinput0",)),),
    )


class TestFrequencyModel:
    def test_majority_and_prior(self):
        records = [rec((1, 2), 1)] * 3 + [rec((1, 2), 0)] + [rec((9, 9), 0)] * 4
        m = train_frequency(records)
        assert m.predict_proba((1, 2)) == pytest.approx(0.75)
        assert m.predict_proba((9, 9)) < 0.5
        # unseen feature backs off to the global prior, 3 ones of 8 records
        assert m.predict_proba((7, 7)) == pytest.approx(3 / 8)
        assert m.seen((1, 2)) and not m.seen((7, 7))

    def test_tie_breaks_to_zero(self):
        from decorlock.attack import predict_key

        c = parse_bench(LADDER)
        lc = make_locked_ladder(c)
        records = [rec(extract_vector(c, "keyinput0", 1, 2), 1),
                   rec(extract_vector(c, "keyinput0", 1, 2), 0)]
        m = train_frequency(records)
        key, probs = predict_key(m, lc, FeatureParams(encoding="vector", depth=1))
        assert probs == (0.5,)
        assert key.bits == (0,)  # the 0.5 threshold is strict


class TestMlp:
    def test_learns_separable_toy_data(self):
        rng = random.Random(0)
        records = []
        for _ in range(200):
            if rng.random() < 0.5:
                records.append(rec((6, 2, 2), 0))
            else:
                records.append(rec((7, 4, 4), 1))
        m = train_mlp(records, seed=1, hidden=8, epochs=40)
        assert m.predict_proba((6, 2, 2)) < 0.5 < m.predict_proba((7, 4, 4))

    def test_counts_embedding_handles_histograms(self):
        records = [rec((0, 3, 1, 0), 0)] * 50 + [rec((2, 0, 0, 2), 1)] * 50
        m = train_mlp(records, seed=2, hidden=8, epochs=40, embedding="counts")
        assert m.predict_proba((0, 3, 1, 0)) < 0.5 < m.predict_proba((2, 0, 0, 2))

    def test_deterministic(self):
        records = [rec((6, 2, 2), 0), rec((7, 4, 4), 1)] * 20
        a = train_mlp(records, seed=3, epochs=5)
        b = train_mlp(records, seed=3, epochs=5)
        assert a.predict_proba((6, 2, 2)) == b.predict_proba((6, 2, 2))


class TestAccuracy:
    def test_kpa_fraction(self):
        ports = tuple(f"keyinput{i}" for i in range(4))
        a = Key((1, 0, 1, 0), ports)
        b = Key((1, 0, 0, 0), ports)
        assert compute_kpa(a, a) == 100.0
        assert compute_kpa(a, b) == 75.0

    def test_bkpa_is_best_over_list(self):
        ports = tuple(f"keyinput{i}" for i in range(4))
        pred = Key((1, 0, 1, 0), ports)
        keys = (Key((0, 1, 0, 1), ports), Key((1, 0, 1, 1), ports))
        assert compute_bkpa(pred, keys) == 75.0
        assert compute_bkpa(pred, keys) >= compute_kpa(pred, keys[0])


class TestReferences:
    def test_srs_demotes_and_relocks(self):
        c = make_synth("r", 8, 3, 60, 95)
        lc, _ = lock_xbi(c, SchemeParams(key_size=4), random.Random(96))
        rp = ReferenceParams(scheme=Scheme.XBI, key_size=4, count=3, verify=False)
        refs = generate_references(lc, rp, master_seed=7)
        assert len(refs) == 3
        for ref, key in refs:
            assert any(p.startswith("exkey") for p in ref.circuit.inputs)
            assert len(ref.key_ports) == 4
            assert len(key.bits) == 4

    def test_prefix_stability(self):
        c = make_synth("r", 8, 3, 60, 97)
        lc, _ = lock_xbi(c, SchemeParams(key_size=4), random.Random(98))
        rp5 = ReferenceParams(scheme=Scheme.XBI, key_size=4, count=5, verify=False)
        rp3 = ReferenceParams(scheme=Scheme.XBI, key_size=4, count=3, verify=False)
        refs5 = generate_references(lc, rp5, master_seed=8)
        refs3 = generate_references(lc, rp3, master_seed=8)
        for (a, ka), (b, kb) in zip(refs3, refs5):
            assert a.circuit.gates == b.circuit.gates and ka == kb

    def test_thread_count_does_not_change_results(self):
        c = make_synth("r", 8, 3, 60, 99)
        lc, _ = lock_xbi(c, SchemeParams(key_size=4), random.Random(100))
        rp = ReferenceParams(scheme=Scheme.XBI, key_size=4, count=6, verify=False)
        old = os.environ.get("DECOR_THREADS")
        try:
            os.environ["DECOR_THREADS"] = "1"
            seq = generate_references(lc, rp, master_seed=9)
            os.environ["DECOR_THREADS"] = "4"
            par = generate_references(lc, rp, master_seed=9)
        finally:
            if old is None:
                os.environ.pop("DECOR_THREADS", None)
            else:
                os.environ["DECOR_THREADS"] = old
        for (a, ka), (b, kb) in zip(seq, par):
            assert a.circuit.gates == b.circuit.gates and ka == kb

    def test_gss_uses_pool(self):
        c = make_synth("r", 8, 3, 60, 101)
        pool = [make_synth(f"p{i}", 8, 3, 50, 200 + i) for i in range(2)]
        lc, _ = lock_xbi(c, SchemeParams(key_size=4), random.Random(102))
        rp = ReferenceParams(scheme=Scheme.XBI, key_size=4, mode="gss", count=4, verify=False)
        refs = generate_references(lc, rp, master_seed=10, pool=pool)
        names = [ref.circuit.name for ref, _ in refs]
        assert set(n.split("#")[0].split("_")[0] for n in names) <= {"p0", "p1"}


class TestRunAttack:
    def test_report_fields_and_determinism(self):
        c = make_synth("r", 8, 3, 80, 103)
        lc, key = lock_xbi(c, SchemeParams(key_size=8), random.Random(104))
        rp = ReferenceParams(scheme=Scheme.XBI, key_size=8, count=20, verify=False)
        fp = FeatureParams(encoding="vector", depth=1)
        a = run_attack(lc, rp, master_seed=11, model_kind="freq", feature=fp)
        b = run_attack(lc, rp, master_seed=11, model_kind="freq", feature=fp)
        assert a.kpa == b.kpa and a.predicted == b.predicted
        assert a.references == 20 and a.model == "freq"
        assert 0.0 <= a.kpa <= 100.0 and 0.0 <= a.seen_rate <= 1.0
        assert a.bkpa >= a.kpa or len(lc.correct_keys) == 1

    def test_single_key_bkpa_equals_kpa(self):
        c = make_synth("r", 8, 3, 80, 105)
        lc, key = lock_xbi(c, SchemeParams(key_size=8), random.Random(106))
        rp = ReferenceParams(scheme=Scheme.XBI, key_size=8, count=15, verify=False)
        rep = run_attack(lc, rp, master_seed=12, model_kind="freq",
                         feature=FeatureParams(encoding="vector", depth=1))
        assert rep.bkpa == rep.kpa
