"""Netlist model, BENCH round-trips, and structural normalization."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from decorlock.netlist import (
    BenchSyntaxError,
    Circuit,
    CircuitStructureError,
    Gate,
    check_well_formed,
    gate_count,
    normalize_fanin2,
    parse_bench,
    rename_ports,
    write_bench,
)
from decorlock.sim import evaluate, exhaustive_patterns, simulate, unpack_bits

from conftest import make_synth


def all_rows_equal(a: Circuit, b: Circuit) -> bool:
    assert a.inputs == b.inputs and a.outputs == b.outputs
    pats, rows = exhaustive_patterns(a.inputs)
    sa = simulate(a, pats)
    sb = simulate(b, pats)
    return all(
        (unpack_bits(sa[o], rows) == unpack_bits(sb[o], rows)).all() for o in a.outputs
    )


class TestParse:
    def test_c17_shape(self, c17):
        assert c17.inputs == ("G1", "G2", "G3", "G6", "G7")
        assert c17.outputs == ("G22", "G23")
        assert len(c17.gates) == 6
        assert all(g.kind == "NAND" for g in c17.gates)

    def test_case_and_synonyms(self):
        c = parse_bench(
            "input(a)\ninput(b)\noutput(y)\nt = And(a, b)\nu = INV(t)\ny = buff(u)\n"
        )
        kinds = {g.output: g.kind for g in c.gates}
        assert kinds == {"t": "AND", "u": "NOT", "y": "BUF"}

    def test_comments_and_blank_lines(self):
        c = parse_bench("# header\n\nINPUT(a)\nOUTPUT(y)\n# mid\ny = NOT(a)  # trailing\n")
        assert c.inputs == ("a",) and len(c.gates) == 1

    def test_keyinput_classification(self):
        c = parse_bench("INPUT(a)\nINPUT(keyinput0)\nOUTPUT(y)\ny = XOR(a, keyinput0)\n")
        assert c.key_inputs == ("keyinput0",)
        assert c.inputs == ("a",)
        assert c.free_ports == ("a", "keyinput0")

    def test_syntax_error_has_position(self):
        with pytest.raises(BenchSyntaxError) as ei:
            parse_bench("INPUT(a)\nOUTPUT(y)\ny = FROB(a)\n", filename="bad.bench")
        msg = str(ei.value)
        assert "bad.bench" in msg and "3" in msg

    def test_duplicate_driver_rejected(self):
        with pytest.raises((BenchSyntaxError, CircuitStructureError)):
            parse_bench("INPUT(a)\nOUTPUT(y)\ny = NOT(a)\ny = BUF(a)\n")

    def test_undriven_net_rejected(self):
        with pytest.raises(CircuitStructureError):
            parse_bench("INPUT(a)\nOUTPUT(y)\ny = AND(a, ghost)\n")

    def test_cycle_rejected(self):
        with pytest.raises(CircuitStructureError):
            parse_bench("INPUT(a)\nOUTPUT(y)\nt = AND(a, y)\ny = NOT(t)\n")


class TestWrite:
    def test_round_trip_exact_structure(self, c17):
        again = parse_bench(write_bench(c17), name="c17")
        assert again.inputs == c17.inputs
        assert again.outputs == c17.outputs
        assert set(again.gates) == set(c17.gates)

    def test_line_endings(self, c17):
        text = write_bench(c17)
        assert "\r" not in text and text.endswith("\n")

    def test_const_lowering_preserves_function(self):
        c = Circuit(
            name="k",
            inputs=("a",),
            outputs=("y", "z"),
            gates=(
                Gate("one", "CONST1", ()),
                Gate("zero", "CONST0", ()),
                Gate("y", "AND", ("a", "one")),
                Gate("z", "OR", ("a", "zero")),
            ),
        )
        lowered = parse_bench(write_bench(c), name="k")
        assert not any(g.kind.startswith("CONST") for g in lowered.gates)
        for a in (False, True):
            want = evaluate(c, {"a": a})
            got = evaluate(lowered, {"a": a})
            assert want["y"] == got["y"] and want["z"] == got["z"]

    @given(seed=st.integers(0, 10_000))
    @settings(max_examples=25, deadline=None)
    def test_round_trip_random(self, seed):
        c = make_synth("rt", 6, 3, 40, seed)
        again = parse_bench(write_bench(c), name="rt")
        assert all_rows_equal(c, again)


class TestNormalize:
    def test_wide_gate_function_preserved(self):
        c = parse_bench(
            "INPUT(a)\nINPUT(b)\nINPUT(c)\nINPUT(d)\nOUTPUT(y)\nOUTPUT(z)\n"
            "y = NAND(a, b, c, d)\nz = XNOR(a, b, c)\n"
        )
        n = normalize_fanin2(c)
        assert max(len(g.fanin) for g in n.gates) <= 2
        assert all_rows_equal(c, n)

    def test_inverting_kind_only_at_root(self):
        c = parse_bench(
            "INPUT(a)\nINPUT(b)\nINPUT(c)\nINPUT(d)\nINPUT(e)\nOUTPUT(y)\ny = NOR(a, b, c, d, e)\n"
        )
        n = normalize_fanin2(c)
        by_out = {g.output: g for g in n.gates}
        internal = [g for g in n.gates if g.output != "y"]
        assert by_out["y"].kind == "NOR"
        assert all(g.kind == "OR" for g in internal)

    @given(seed=st.integers(0, 10_000))
    @settings(max_examples=20, deadline=None)
    def test_random_preserved(self, seed):
        rng = random.Random(seed)
        # widen some gates by hand
        c = make_synth("wide", 5, 2, 30, seed)
        gates = []
        for g in c.gates:
            if g.kind in ("AND", "OR", "NAND", "NOR") and rng.random() < 0.3:
                extra = rng.choice(c.inputs)
                g = Gate(g.output, g.kind, g.fanin + (extra,))
            gates.append(g)
        c = Circuit(c.name, c.inputs, c.outputs, tuple(gates))
        n = normalize_fanin2(c)
        assert max(len(g.fanin) for g in n.gates) <= 2
        assert all_rows_equal(c, n)


class TestStructure:
    def test_topological_order(self, synth120):
        seen = set(synth120.inputs) | set(synth120.key_inputs)
        for g in synth120.topo_gates:
            assert all(f in seen for f in g.fanin)
            seen.add(g.output)

    def test_driver_and_sinks(self, tiny):
        assert tiny.driver["y"].kind == "XOR"
        assert sorted(s.output for s in tiny.sinks["t"]) == ["y", "z"]
        assert tiny.sinks.get("c", ()) == () or all(
            s.output == "y" for s in tiny.sinks["c"]
        )

    def test_gate_count_counts_const_as_two(self):
        c = Circuit("k", ("a",), ("y",), (Gate("one", "CONST1", ()), Gate("y", "AND", ("a", "one"))))
        assert gate_count(c) == 3  # lowered const is two gates plus the AND

    def test_gate_count_normalizes_wide_gates(self):
        c = parse_bench("INPUT(a)\nINPUT(b)\nINPUT(c)\nOUTPUT(y)\ny = AND(a, b, c)\n")
        assert gate_count(c) == 2

    def test_check_well_formed_reports_dangling_output(self):
        c = Circuit("d", ("a",), ("y",), (Gate("t", "NOT", ("a",)),))
        problems = check_well_formed(c)
        assert any("y" in p for p in problems)

    def test_rename_ports(self, tiny):
        r = rename_ports(tiny, {"a": "in0"})
        assert "in0" in r.inputs and "a" not in r.inputs
        assert evaluate(r, {"in0": True, "b": True, "c": False})["y"] == evaluate(
            tiny, {"a": True, "b": True, "c": False}
        )["y"]
