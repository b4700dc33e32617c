"""Seeded synthetic benchmark generator.

Produces acyclic random netlists with a rough size/shape knob. These stand
in for tabulated benchmark suites in tests and experiments; anything that
needs a specific published circuit should load a BENCH file instead.
"""
from __future__ import annotations

import random
from dataclasses import dataclass

from .netlist import Circuit, Gate


@dataclass(frozen=True)
class GenParams:
    n_inputs: int
    n_outputs: int
    n_gates: int
    # kind -> relative weight for 2-input gate picks
    kind_weights: tuple[tuple[str, float], ...] = (
        ("AND", 3.0),
        ("NAND", 3.0),
        ("OR", 3.0),
        ("NOR", 2.0),
        ("XOR", 1.5),
        ("XNOR", 1.0),
    )
    not_prob: float = 0.08
    # fan-in locality: probability of drawing from the recent window rather
    # than uniformly over everything defined so far
    window: int = 24
    local_prob: float = 0.75


def random_circuit(name: str, params: GenParams, rng: random.Random) -> Circuit:
    """Generate a connected-ish random DAG circuit.

    Construction is topological so cycles are impossible. Outputs are the
    last ``n_outputs`` gate nets, which guarantees every output is driven
    by real logic. Inputs may end up with no sinks on small configurations;
    consumers that care filter for observability anyway.
    """
    if params.n_inputs < 2 or params.n_outputs < 1:
        raise ValueError("need at least 2 inputs and 1 output")
    if params.n_gates < params.n_outputs:
        raise ValueError("need at least one gate per output")
    inputs = [f"i{j}" for j in range(params.n_inputs)]
    kinds = [k for k, _ in params.kind_weights]
    weights = [w for _, w in params.kind_weights]
    nets = list(inputs)
    gates: list[Gate] = []

    def pick_net() -> str:
        if len(nets) > params.window and rng.random() < params.local_prob:
            return nets[-1 - rng.randrange(params.window)]
        return nets[rng.randrange(len(nets))]

    for g in range(params.n_gates):
        out = f"g{g}"
        if rng.random() < params.not_prob:
            gates.append(Gate(out, "NOT", (pick_net(),)))
        else:
            a = pick_net()
            b = pick_net()
            tries = 0
            while b == a and tries < 8:
                b = pick_net()
                tries += 1
            kind = rng.choices(kinds, weights=weights, k=1)[0]
            gates.append(Gate(out, kind, (a, b)))
        nets.append(out)
    outputs = tuple(f"g{params.n_gates - params.n_outputs + j}" for j in range(params.n_outputs))
    return Circuit(name=name, inputs=tuple(inputs), outputs=outputs, gates=tuple(gates)).validated()


def benchmark_suite(seed: int, sizes: tuple[tuple[str, int, int, int], ...] | None = None) -> list[Circuit]:
    """Fixed small suite used by the experiment scripts: (name, inputs,
    outputs, gates) tuples, each generated from a seed derived per name."""
    from .seeds import rng_for

    if sizes is None:
        sizes = (
            ("syn200", 16, 8, 200),
            ("syn400", 20, 10, 400),
            ("syn800", 24, 12, 800),
        )
    out = []
    for nm, ni, no, ng in sizes:
        out.append(random_circuit(nm, GenParams(ni, no, ng), rng_for(seed, "gen", nm)))
    return out
