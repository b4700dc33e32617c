"""Gate-level combinational netlists: data model, BENCH I/O, validation.

The model is deliberately small. A circuit is an ordered tuple of primary
inputs, key inputs, outputs, and gates; gate fan-ins reference nets by
name. Key inputs are ordinary ports that happen to be named ``keyinput*``
(case-insensitive); the parser splits them out so locking and attack code
can treat them separately without a side table.

Gates may appear in any order in the file as long as the graph is acyclic.
Everything downstream (simulation, rewriting, locking) consumes the
canonical topological order exposed by :attr:`Circuit.topo_gates`.
"""
from __future__ import annotations

import heapq
import re
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterable, Mapping

GATE_KINDS = frozenset({"AND", "NAND", "OR", "NOR", "XOR", "XNOR", "NOT", "BUF"})
# Internal pseudo-kinds produced by constant propagation. They never appear
# in parsed circuits and are lowered to gate equivalents on write.
CONST_KINDS = frozenset({"CONST0", "CONST1"})

KEY_PORT_PREFIX = "keyinput"

_KIND_SYNONYMS = {"INV": "NOT", "BUFF": "BUF"}

_NAME_RE = re.compile(r"[A-Za-z0-9_\.\[\]\$]+")


class NetlistError(Exception):
    """Base class for structural and syntax problems."""


class BenchSyntaxError(NetlistError):
    """A line of BENCH text that does not scan."""

    def __init__(self, message: str, filename: str = "<string>", line: int = 0, column: int = 0):
        super().__init__(message)
        self.message = message
        self.filename = filename
        self.line = line
        self.column = column

    def __str__(self) -> str:
        return f"{self.filename}:{self.line}:{self.column}: {self.message}"


class CircuitStructureError(NetlistError):
    """Well-formedness violation: cycles, undefined or doubly-defined nets."""


@dataclass(frozen=True)
class Gate:
    """One named gate. ``output`` doubles as the name of the driven net."""

    output: str
    kind: str
    fanin: tuple[str, ...]

    def __post_init__(self):
        if self.kind not in GATE_KINDS and self.kind not in CONST_KINDS:
            raise CircuitStructureError(f"unknown gate kind {self.kind!r} for net {self.output!r}")
        n = len(self.fanin)
        if self.kind in ("NOT", "BUF") and n != 1:
            raise CircuitStructureError(f"{self.kind} gate {self.output!r} needs exactly 1 fan-in, got {n}")
        if self.kind in CONST_KINDS and n != 0:
            raise CircuitStructureError(f"{self.kind} gate {self.output!r} takes no fan-in")
        if self.kind not in ("NOT", "BUF") and self.kind not in CONST_KINDS and n < 2:
            raise CircuitStructureError(f"{self.kind} gate {self.output!r} needs at least 2 fan-ins, got {n}")


@dataclass(frozen=True)
class Circuit:
    """Immutable combinational circuit.

    ``inputs`` are primary inputs, ``key_inputs`` the ports recognized by
    the ``keyinput`` naming convention. Both are free ports as far as
    evaluation is concerned. Order is meaningful everywhere: it fixes
    truth-table row interpretation and key bit positions.
    """

    name: str
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    gates: tuple[Gate, ...]
    key_inputs: tuple[str, ...] = ()

    @property
    def free_ports(self) -> tuple[str, ...]:
        return self.inputs + self.key_inputs

    @cached_property
    def driver(self) -> dict[str, Gate]:
        return {g.output: g for g in self.gates}

    @cached_property
    def defined_nets(self) -> frozenset[str]:
        return frozenset(self.free_ports) | frozenset(g.output for g in self.gates)

    @cached_property
    def sinks(self) -> dict[str, tuple[Gate, ...]]:
        """Net name -> gates that read it, in declaration order."""
        acc: dict[str, list[Gate]] = {}
        for g in self.gates:
            for f in g.fanin:
                acc.setdefault(f, []).append(g)
        return {k: tuple(v) for k, v in acc.items()}

    @cached_property
    def topo_gates(self) -> tuple[Gate, ...]:
        """Gates in canonical topological order (stable: ties broken by
        declaration index). Raises on combinational cycles."""
        index = {g.output: i for i, g in enumerate(self.gates)}
        pending: dict[int, int] = {}  # gate index -> unresolved fan-in count
        waiters: dict[str, list[int]] = {}
        ready: list[int] = []
        free = frozenset(self.free_ports)
        for i, g in enumerate(self.gates):
            n = 0
            for f in g.fanin:
                if f in free:
                    continue
                if f in index:
                    n += 1
                    waiters.setdefault(f, []).append(i)
                # undefined fan-ins are check_well_formed's problem, not a
                # topology hazard; treat them as already available
            pending[i] = n
            if n == 0:
                heapq.heappush(ready, i)
        order: list[Gate] = []
        while ready:
            i = heapq.heappop(ready)
            g = self.gates[i]
            order.append(g)
            for j in waiters.get(g.output, ()):
                pending[j] -= 1
                if pending[j] == 0:
                    heapq.heappush(ready, j)
        if len(order) != len(self.gates):
            stuck = sorted(g.output for i, g in enumerate(self.gates) if pending[i] > 0)
            raise CircuitStructureError(f"combinational cycle through nets: {', '.join(stuck[:8])}")
        return tuple(order)

    def validated(self) -> "Circuit":
        """Return self after raising on the first well-formedness problem."""
        problems = check_well_formed(self)
        if problems:
            raise CircuitStructureError(problems[0])
        self.topo_gates  # raises on cycles
        return self


def check_well_formed(c: Circuit) -> list[str]:
    """Collect human-readable diagnostics; empty list means well-formed.

    Each diagnostic names the violated invariant and the offending net.
    Cycles are reported here as well so callers can get everything in one
    pass.
    """
    out: list[str] = []
    seen: dict[str, str] = {}
    for p in c.inputs:
        if p in seen:
            out.append(f"duplicate definition: port {p!r} declared more than once")
        seen[p] = "input"
    for p in c.key_inputs:
        if p in seen:
            out.append(f"duplicate definition: port {p!r} declared more than once")
        seen[p] = "key input"
    for g in c.gates:
        if g.output in seen:
            out.append(f"duplicate definition: net {g.output!r} already defined as {seen[g.output]}")
        seen[g.output] = "gate output"
    defined = set(seen)
    for g in c.gates:
        for f in g.fanin:
            if f not in defined:
                out.append(f"undefined net: {f!r} read by gate {g.output!r}")
    outset: set[str] = set()
    for o in c.outputs:
        if o not in defined:
            out.append(f"undefined net: output port {o!r} has no driver")
        if o in outset:
            out.append(f"duplicate definition: output port {o!r} declared more than once")
        outset.add(o)
    try:
        c.topo_gates
    except CircuitStructureError as e:
        out.append(str(e))
    return out


def is_key_port(name: str) -> bool:
    return name.lower().startswith(KEY_PORT_PREFIX)


def parse_bench(text: str, name: str = "circuit", filename: str = "<string>") -> Circuit:
    """Parse BENCH netlist text into a validated :class:`Circuit`.

    Accepted dialect: ``INPUT(x)`` / ``OUTPUT(x)`` declarations,
    ``net = KIND(a, b, ...)`` assignments, ``#`` comments (whole-line or
    trailing), blank lines. Keywords and gate kinds are case-insensitive;
    ``INV`` is a synonym for ``NOT``. Ports whose name starts with
    ``keyinput`` are classified as key inputs, keeping declaration order.
    """
    inputs: list[str] = []
    key_inputs: list[str] = []
    outputs: list[str] = []
    gates: list[Gate] = []

    def err(msg: str, lineno: int, col: int):
        raise BenchSyntaxError(msg, filename=filename, line=lineno, column=col)

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = re.fullmatch(r"(?i)(INPUT|OUTPUT)\s*\(\s*([^()\s]+)\s*\)", line)
        if m:
            port = m.group(2)
            if not _NAME_RE.fullmatch(port):
                err(f"bad port name {port!r}", lineno, raw.find(port) + 1)
            if m.group(1).upper() == "INPUT":
                (key_inputs if is_key_port(port) else inputs).append(port)
            else:
                outputs.append(port)
            continue
        m = re.fullmatch(r"([^=\s]+)\s*=\s*([A-Za-z0-9]+)\s*\(\s*(.*?)\s*\)", line)
        if m:
            out_net, kind_raw, args = m.group(1), m.group(2), m.group(3)
            if not _NAME_RE.fullmatch(out_net):
                err(f"bad net name {out_net!r}", lineno, 1)
            kind = kind_raw.upper()
            kind = _KIND_SYNONYMS.get(kind, kind)
            if kind not in GATE_KINDS:
                err(f"unknown gate kind {kind_raw!r}", lineno, raw.find(kind_raw) + 1)
            fanin = [a.strip() for a in args.split(",")] if args else []
            if any(not a for a in fanin):
                err("empty fan-in entry", lineno, raw.find("(") + 1)
            for a in fanin:
                if not _NAME_RE.fullmatch(a):
                    err(f"bad net name {a!r} in fan-in", lineno, raw.find(a) + 1)
            try:
                gates.append(Gate(output=out_net, kind=kind, fanin=tuple(fanin)))
            except CircuitStructureError as e:
                err(str(e), lineno, 1)
            continue
        err(f"cannot parse line: {line!r}", lineno, 1)

    c = Circuit(
        name=name,
        inputs=tuple(inputs),
        outputs=tuple(outputs),
        gates=tuple(gates),
        key_inputs=tuple(key_inputs),
    )
    problems = check_well_formed(c)
    if problems:
        raise CircuitStructureError(f"{filename}: " + "; ".join(problems[:6]))
    return c


def parse_bench_file(path, name: str | None = None) -> Circuit:
    import os

    with open(path, "r") as fh:
        text = fh.read()
    base = os.path.basename(str(path))
    return parse_bench(text, name=name or base.rsplit(".", 1)[0], filename=str(path))


def _fresh(base: str, used: set[str]) -> str:
    if base not in used:
        used.add(base)
        return base
    i = 0
    while f"{base}_{i}" in used:
        i += 1
    used.add(f"{base}_{i}")
    return f"{base}_{i}"


def write_bench(c: Circuit) -> str:
    """Serialize to BENCH text (LF line endings).

    Constant pseudo-gates are lowered onto the first free port:
    ``CONST0 -> AND(x, NOT x)``, ``CONST1 -> OR(x, NOT x)``. A circuit
    with constants but no ports at all cannot be expressed and raises.
    Re-parsing the output reproduces the circuit gate for gate whenever no
    constants were present.
    """
    lines: list[str] = [f"# {c.name}"]
    for p in c.inputs:
        lines.append(f"INPUT({p})")
    for p in c.key_inputs:
        lines.append(f"INPUT({p})")
    for o in c.outputs:
        lines.append(f"OUTPUT({o})")
    lines.append("")

    has_const = any(g.kind in CONST_KINDS for g in c.gates)
    inv_net = None
    carrier = None
    used = {g.output for g in c.gates} | set(c.free_ports)
    extra: list[str] = []
    if has_const:
        if not c.free_ports:
            raise CircuitStructureError("cannot serialize constant-only circuit with no ports")
        carrier = c.free_ports[0]
        inv_net = _fresh(f"{carrier}_bar", used)
        extra.append(f"{inv_net} = NOT({carrier})")
    for g in c.gates:
        if g.kind == "CONST0":
            lines.append(f"{g.output} = AND({carrier}, {inv_net})")
        elif g.kind == "CONST1":
            lines.append(f"{g.output} = OR({carrier}, {inv_net})")
        else:
            lines.append(f"{g.output} = {g.kind}({', '.join(g.fanin)})")
    lines.extend(extra)
    lines.append("")
    return "\n".join(lines)


def write_bench_file(c: Circuit, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(write_bench(c))


def normalize_fanin2(c: Circuit) -> Circuit:
    """Decompose gates with more than 2 fan-ins into balanced 2-input trees.

    AND/OR/XOR split into same-kind trees; NAND/NOR/XNOR keep the inverting
    kind only at the root. Function is preserved exactly; 1- and 2-input
    gates pass through untouched.
    """
    used = set(c.defined_nets)
    out_gates: list[Gate] = []
    inner_of = {"NAND": "AND", "NOR": "OR", "XNOR": "XOR"}
    for g in c.gates:
        if len(g.fanin) <= 2:
            out_gates.append(g)
            continue
        # reduce to a final pair with the non-inverting kind, invert at the root
        inner = inner_of.get(g.kind, g.kind)
        nets = list(g.fanin)
        while len(nets) > 2:
            nxt: list[str] = []
            for i in range(0, len(nets) - 1, 2):
                w = _fresh(f"{g.output}_n2", used)
                out_gates.append(Gate(w, inner, (nets[i], nets[i + 1])))
                nxt.append(w)
            if len(nets) % 2:
                nxt.append(nets[-1])
            nets = nxt
        out_gates.append(Gate(g.output, g.kind, tuple(nets)))
    return replace(c, gates=tuple(out_gates))


def rename_ports(c: Circuit, mapping: Mapping[str, str]) -> Circuit:
    """Rename ports (inputs or key inputs) everywhere they appear.

    New names must not collide with any existing net. Renamed key ports are
    re-classified by the ``keyinput`` convention, so this is also the way
    to demote key ports to ordinary inputs.
    """
    for old, new in mapping.items():
        if old not in c.free_ports:
            raise CircuitStructureError(f"cannot rename {old!r}: not a port")
        if new in c.defined_nets and new != old:
            raise CircuitStructureError(f"cannot rename {old!r} to {new!r}: name in use")
    if len(set(mapping.values())) != len(mapping):
        raise CircuitStructureError("port rename targets collide")

    def sub(n: str) -> str:
        return mapping.get(n, n)

    new_ports = [sub(p) for p in c.free_ports]
    gates = tuple(
        Gate(g.output, g.kind, tuple(sub(f) for f in g.fanin)) for g in c.gates
    )
    outputs = tuple(sub(o) for o in c.outputs)
    return Circuit(
        name=c.name,
        inputs=tuple(p for p in new_ports if not is_key_port(p)),
        outputs=outputs,
        gates=gates,
        key_inputs=tuple(p for p in new_ports if is_key_port(p)),
    )


def gate_count(c: Circuit) -> int:
    """Number of gates after 2-input normalization. NOT/BUF count as gates;
    constants count as the pair of gates they lower to, which keeps the
    metric consistent with what serialization would produce."""
    n = 0
    for g in normalize_fanin2(c).gates:
        n += 2 if g.kind in CONST_KINDS else 1
    return n
