"""Shared fixtures: small hand-built circuits and seeded synthetic ones."""

import os
import random

import pytest

from decorlock.circuitgen import GenParams, random_circuit
from decorlock.netlist import Circuit, Gate, parse_bench

# The classic 6-NAND benchmark netlist, small enough to inline.
C17_BENCH = """\
INPUT(G1)
INPUT(G2)
INPUT(G3)
INPUT(G6)
INPUT(G7)
OUTPUT(G22)
OUTPUT(G23)
G10 = NAND(G1, G3)
G11 = NAND(G3, G6)
G16 = NAND(G2, G11)
G19 = NAND(G11, G7)
G22 = NAND(G10, G16)
G23 = NAND(G16, G19)
"""

ISCAS_DIR = os.path.join(os.path.dirname(__file__), "fixtures", "iscas")


@pytest.fixture
def c17() -> Circuit:
    return parse_bench(C17_BENCH, name="c17")


@pytest.fixture
def tiny() -> Circuit:
    # y = (a AND b) XOR c, z = NOT(a AND b)
    return Circuit(
        name="tiny",
        inputs=("a", "b", "c"),
        outputs=("y", "z"),
        gates=(
            Gate("t", "AND", ("a", "b")),
            Gate("y", "XOR", ("t", "c")),
            Gate("z", "NOT", ("t",)),
        ),
    )


def make_synth(name: str, n_inputs: int, n_outputs: int, n_gates: int, seed: int) -> Circuit:
    return random_circuit(
        name, GenParams(n_inputs=n_inputs, n_outputs=n_outputs, n_gates=n_gates), random.Random(seed)
    )


@pytest.fixture
def synth120() -> Circuit:
    return make_synth("synth120", 10, 4, 120, seed=424)


def iscas_or_skip(basename: str) -> Circuit:
    """Load an ISCAS fixture if the file was dropped in, else skip.

    The suite has no network access, so the classic benchmarks are
    optional: placing c1355.bench etc. under tests/fixtures/iscas enables
    the corresponding checks.
    """
    path = os.path.join(ISCAS_DIR, basename)
    if not os.path.exists(path):
        pytest.skip(f"{basename} fixture not present")
    from decorlock.netlist import parse_bench_file

    return parse_bench_file(path)
