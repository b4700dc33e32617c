"""Bit-parallel circuit evaluation: 64 input patterns per uint64 word.

Two evaluators live here on purpose. :func:`simulate` is the fast packed
engine used by everything at scale; :func:`evaluate` is a direct scalar
interpreter over Python bools used as an independent cross-check in tests
and for single-pattern witnesses. They share no evaluation code.
"""
from __future__ import annotations

from typing import Iterable, Mapping, Sequence

import numpy as np

from .netlist import Circuit, Gate

WORD = 64
ONES = np.uint64(0xFFFFFFFFFFFFFFFF)

# repeating patterns for exhaustive enumeration when a variable toggles
# faster than once per word (period 2**(s+1) bits, s < 6)
_STRIPES = (
    0xAAAAAAAAAAAAAAAA,
    0xCCCCCCCCCCCCCCCC,
    0xF0F0F0F0F0F0F0F0,
    0xFF00FF00FF00FF00,
    0xFFFF0000FFFF0000,
    0xFFFFFFFF00000000,
)


def n_words(rows: int) -> int:
    return (rows + WORD - 1) // WORD


def tail_mask(rows: int) -> np.ndarray:
    """Per-word mask clearing the unused bits of the last word."""
    w = n_words(rows)
    m = np.full(w, ONES, dtype=np.uint64)
    rem = rows % WORD
    if rem:
        m[-1] = np.uint64((1 << rem) - 1)
    return m


def exhaustive_patterns(ports: Sequence[str]) -> tuple[dict[str, np.ndarray], int]:
    """All 2**n assignments to ``ports``. Row r assigns bit ``(r >> (n-1-j)) & 1``
    to port j, i.e. the first port is the most significant counter bit."""
    n = len(ports)
    rows = 1 << n
    words = n_words(rows)
    pats: dict[str, np.ndarray] = {}
    for j, p in enumerate(ports):
        s = n - 1 - j
        if s < 6:
            pats[p] = np.full(words, np.uint64(_STRIPES[s]), dtype=np.uint64)
        else:
            block = 1 << (s - 6)
            unit = np.concatenate(
                [np.zeros(block, dtype=np.uint64), np.full(block, ONES, dtype=np.uint64)]
            )
            pats[p] = np.tile(unit, max(1, words // (2 * block)))[:words]
    return pats, rows


def random_patterns(
    ports: Sequence[str], rows: int, rng: np.random.Generator
) -> dict[str, np.ndarray]:
    words = n_words(rows)
    raw = rng.integers(0, 2**64, size=(len(ports), words), dtype=np.uint64)
    mask = tail_mask(rows)
    return {p: raw[j] & mask for j, p in enumerate(ports)}


def simulate(
    c: Circuit,
    patterns: Mapping[str, np.ndarray],
    keep: str = "outputs",
    extra_nets: Iterable[str] = (),
) -> dict[str, np.ndarray]:
    """Evaluate every gate over packed patterns.

    ``patterns`` must cover every free port. With ``keep='outputs'``
    intermediate arrays are freed as soon as their last reader has run,
    which keeps exhaustive sweeps on wide circuits inside a sane footprint;
    ``keep='all'`` returns every net (needed by fault-style analyses).
    ``extra_nets`` forces specific intermediates to be retained.
    """
    missing = [p for p in c.free_ports if p not in patterns]
    if missing:
        raise ValueError(f"patterns missing ports: {missing[:4]}")
    words = len(next(iter(patterns.values()))) if patterns else 1

    values: dict[str, np.ndarray] = {p: patterns[p] for p in c.free_ports}
    wanted = set(c.outputs) | set(extra_nets) | set(c.free_ports)
    remaining: dict[str, int] = {}
    if keep == "outputs":
        for g in c.gates:
            for f in g.fanin:
                remaining[f] = remaining.get(f, 0) + 1

    for g in c.topo_gates:
        ins = [values[f] for f in g.fanin]
        k = g.kind
        if k == "AND" or k == "NAND":
            v = ins[0] & ins[1]
            for a in ins[2:]:
                v = v & a
            if k == "NAND":
                v = ~v
        elif k == "OR" or k == "NOR":
            v = ins[0] | ins[1]
            for a in ins[2:]:
                v = v | a
            if k == "NOR":
                v = ~v
        elif k == "XOR" or k == "XNOR":
            v = ins[0] ^ ins[1]
            for a in ins[2:]:
                v = v ^ a
            if k == "XNOR":
                v = ~v
        elif k == "NOT":
            v = ~ins[0]
        elif k == "BUF":
            v = ins[0].copy()
        elif k == "CONST0":
            v = np.zeros(words, dtype=np.uint64)
        elif k == "CONST1":
            v = np.full(words, ONES, dtype=np.uint64)
        else:  # pragma: no cover - Gate constructor rejects unknown kinds
            raise ValueError(f"unknown kind {k}")
        values[g.output] = v
        if keep == "outputs":
            for f in g.fanin:
                remaining[f] -= 1
                if remaining[f] == 0 and f not in wanted:
                    del values[f]
    if keep == "outputs":
        return {n: values[n] for n in values if n in wanted}
    return values


def unpack_bits(arr: np.ndarray, rows: int) -> np.ndarray:
    """uint64 words -> uint8 array of 0/1, row i at index i."""
    bytes_ = arr.view(np.uint8)
    if not bytes_.flags["C_CONTIGUOUS"]:
        bytes_ = np.ascontiguousarray(bytes_)
    return np.unpackbits(bytes_, bitorder="little")[:rows]


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """uint8 array of 0/1 -> packed uint64 words (row i -> bit i)."""
    rows = len(bits)
    padded = np.zeros(n_words(rows) * WORD, dtype=np.uint8)
    padded[:rows] = bits
    return np.packbits(padded, bitorder="little").view(np.uint64)


def truth_table(c: Circuit, limit: int = 20) -> np.ndarray:
    """Complete truth table as a uint8 array of shape (2**n, n_outputs).

    Ports are enumerated in declared order, primary inputs first, then key
    inputs; the first port is the most significant row-index bit. Refuses
    circuits with more than ``limit`` free ports.
    """
    ports = c.free_ports
    if len(ports) > limit:
        raise ValueError(f"{len(ports)} free ports exceeds truth-table limit {limit}")
    pats, rows = exhaustive_patterns(ports)
    vals = simulate(c, pats)
    tt = np.empty((rows, len(c.outputs)), dtype=np.uint8)
    for j, o in enumerate(c.outputs):
        tt[:, j] = unpack_bits(vals[o], rows)
    return tt


def assignment_for_row(ports: Sequence[str], row: int) -> dict[str, bool]:
    """The scalar assignment that truth-table row ``row`` encodes."""
    n = len(ports)
    return {p: bool((row >> (n - 1 - j)) & 1) for j, p in enumerate(ports)}


def evaluate(c: Circuit, assignment: Mapping[str, bool]) -> dict[str, bool]:
    """Scalar reference evaluator. ``assignment`` must cover exactly the
    free ports. Returns output port values."""
    ports = set(c.free_ports)
    given = set(assignment)
    if given != ports:
        missing = sorted(ports - given)[:4]
        extra = sorted(given - ports)[:4]
        raise ValueError(f"assignment mismatch: missing={missing} unexpected={extra}")
    vals: dict[str, bool] = {p: bool(assignment[p]) for p in c.free_ports}
    for g in c.topo_gates:
        a = [vals[f] for f in g.fanin]
        k = g.kind
        if k == "AND":
            v = all(a)
        elif k == "NAND":
            v = not all(a)
        elif k == "OR":
            v = any(a)
        elif k == "NOR":
            v = not any(a)
        elif k == "XOR":
            v = bool(sum(a) % 2)
        elif k == "XNOR":
            v = not (sum(a) % 2)
        elif k == "NOT":
            v = not a[0]
        elif k == "BUF":
            v = a[0]
        elif k == "CONST0":
            v = False
        elif k == "CONST1":
            v = True
        else:  # pragma: no cover
            raise ValueError(f"unknown kind {k}")
        vals[g.output] = v
    return {o: vals[o] for o in c.outputs}


def count_mismatches(a: np.ndarray, b: np.ndarray, rows: int) -> int:
    """Number of rows where two packed columns differ."""
    d = (a ^ b) & tail_mask(rows)
    return int(np.bitwise_count(d).sum())


def first_mismatch_row(a: np.ndarray, b: np.ndarray, rows: int) -> int | None:
    d = (a ^ b) & tail_mask(rows)
    nz = np.nonzero(d)[0]
    if len(nz) == 0:
        return None
    w = int(nz[0])
    bit = (int(d[w]) & -int(d[w])).bit_length() - 1
    return w * WORD + bit


def outputs_agree(
    c1: Circuit,
    c2: Circuit,
    patterns: Mapping[str, np.ndarray],
    rows: int,
) -> int | None:
    """Simulate both circuits over shared patterns; return the first row
    index where any output pair differs, or None when all agree.

    Circuits must have identical output tuples; patterns must cover the
    union of both circuits' free ports.
    """
    if c1.outputs != c2.outputs:
        raise ValueError("output port lists differ")
    v1 = simulate(c1, patterns)
    v2 = simulate(c2, patterns)
    best: int | None = None
    for o in c1.outputs:
        r = first_mismatch_row(v1[o], v2[o], rows)
        if r is not None and (best is None or r < best):
            best = r
    return best


def toggle_observable(
    c: Circuit,
    net: str,
    patterns: Mapping[str, np.ndarray],
    rows: int,
    base: Mapping[str, np.ndarray] | None = None,
) -> bool:
    """True when forcing ``net`` to its complement changes some output for
    at least one supplied pattern. Used as the insertion-site filter."""
    if net in c.outputs:
        return True
    if base is None:
        base = simulate(c, patterns, keep="all")
    # downstream cone of the toggled net
    cone: set[str] = set()
    frontier = [net]
    while frontier:
        w = frontier.pop()
        for g in c.sinks.get(w, ()):
            if g.output not in cone:
                cone.add(g.output)
                frontier.append(g.output)
    if not cone & set(c.outputs):
        return False
    mask = tail_mask(rows)
    vals: dict[str, np.ndarray] = {net: (~base[net]) & mask}

    def val(n: str) -> np.ndarray:
        return vals[n] if n in vals else base[n]

    for g in c.topo_gates:
        if g.output not in cone:
            continue
        ins = [val(f) for f in g.fanin]
        k = g.kind
        if k in ("AND", "NAND"):
            v = ins[0] & ins[1] if len(ins) > 1 else ins[0]
            for a in ins[2:]:
                v = v & a
            if k == "NAND":
                v = ~v
        elif k in ("OR", "NOR"):
            v = ins[0] | ins[1] if len(ins) > 1 else ins[0]
            for a in ins[2:]:
                v = v | a
            if k == "NOR":
                v = ~v
        elif k in ("XOR", "XNOR"):
            v = ins[0] ^ ins[1] if len(ins) > 1 else ins[0]
            for a in ins[2:]:
                v = v ^ a
            if k == "XNOR":
                v = ~v
        elif k == "NOT":
            v = ~ins[0]
        elif k == "BUF":
            v = ins[0]
        else:  # constants have no fan-in, never in a cone
            continue
        vals[g.output] = v
    for o in c.outputs:
        if o in cone and count_mismatches(vals[o], base[o], rows):
            return True
    return False
