"""Seeded, function-preserving netlist rewriting.

This is the stand-in for a synthesis tool's restructuring step: locked
netlists are passed through a few sweeps of randomized local rewrites so
that two locks of the same circuit with different keys stop being
byte-identical outside the key logic. Every rule preserves the boolean
function of every surviving net; ports are never touched.

Per sweep, each gate is visited once in creation order; with probability
1/2 one applicable rewrite (chosen uniformly) fires. Rules come in
growing/shrinking pairs (De Morgan in both directions, XOR/XNOR flips and
merges, double-negation insertion and elimination). Growth is held inside
a band above the starting size: once the circuit exceeds the band, growing
rules drop out of the menu until shrinking ones bring it back. A final
deterministic shrink-only cleanup grinds leftover inflation back down, the
way a synthesis pass would, so rewriting is roughly area-neutral.
"""
from __future__ import annotations

import random

from .netlist import Circuit, Gate

_DUAL = {"AND": "NOR", "NOR": "AND", "OR": "NAND", "NAND": "OR"}
_XDUAL = {"XOR": "XNOR", "XNOR": "XOR"}


class _Workspace:
    def __init__(self, c: Circuit):
        self.gates: dict[str, Gate] = {}
        self.uses: dict[str, int] = {}
        self.outputs = frozenset(c.outputs)
        self.names = set(c.defined_nets)
        self.counter = 0
        for g in c.gates:
            self.gates[g.output] = g
            for f in g.fanin:
                self.uses[f] = self.uses.get(f, 0) + 1
        for o in c.outputs:
            self.uses[o] = self.uses.get(o, 0) + 1

    def fresh(self) -> str:
        while True:
            name = f"rw{self.counter}"
            self.counter += 1
            if name not in self.names:
                self.names.add(name)
                return name

    def add(self, name: str, kind: str, fanin: tuple[str, ...]) -> None:
        self.gates[name] = Gate(name, kind, fanin)
        for f in fanin:
            self.uses[f] = self.uses.get(f, 0) + 1

    def set_gate(self, name: str, kind: str, fanin: tuple[str, ...]) -> None:
        for f in self.gates[name].fanin:
            self.uses[f] -= 1
        self.gates[name] = Gate(name, kind, fanin)
        for f in fanin:
            self.uses[f] = self.uses.get(f, 0) + 1

    def delete(self, name: str) -> None:
        g = self.gates.pop(name)
        for f in g.fanin:
            self.uses[f] -= 1

    def lone_driver(self, net: str) -> Gate | None:
        """The gate driving ``net`` when this reader is its only consumer
        and the net is not a port or output, else None."""
        if net in self.gates and self.uses.get(net, 0) == 1 and net not in self.outputs:
            return self.gates[net]
        return None


# gate-count delta of each growing rule; everything else is <= 0
_GROWTH = {"demorgan_fwd": 2, "xor_flip": 1, "dneg_insert": 2}
_SHRINK_ORDER = ("dneg_elim", "buf_collapse", "xor_merge", "demorgan_rev")


def _applicable(ws: _Workspace, g: Gate, budget: int) -> list[str]:
    size = len(ws.gates)
    rules = []
    if size + 2 <= budget:
        rules.append("dneg_insert")
    k = g.kind
    if k in _DUAL:
        if size + len(g.fanin) <= budget:
            rules.append("demorgan_fwd")
        drivers = [ws.lone_driver(f) for f in g.fanin]
        if all(d is not None and d.kind == "NOT" for d in drivers):
            rules.append("demorgan_rev")
    if k in _XDUAL and size + 1 <= budget:
        rules.append("xor_flip")
    if k == "NOT":
        d = ws.lone_driver(g.fanin[0])
        if d is not None and d.kind in _XDUAL:
            rules.append("xor_merge")
        if d is not None and d.kind == "NOT":
            rules.append("dneg_elim")
    if k == "BUF":
        if ws.lone_driver(g.fanin[0]) is not None:
            rules.append("buf_collapse")
    if k in ("AND", "OR", "XOR") and len(g.fanin) == 2:
        d = ws.lone_driver(g.fanin[0])
        if d is not None and d.kind == k and len(d.fanin) == 2:
            rules.append("assoc")
    return rules


def _shrink_applicable(ws: _Workspace, g: Gate) -> str | None:
    k = g.kind
    d0 = ws.lone_driver(g.fanin[0]) if g.fanin else None
    if k == "NOT" and d0 is not None:
        if d0.kind == "NOT":
            return "dneg_elim"
        if d0.kind in _XDUAL:
            return "xor_merge"
    if k == "BUF" and d0 is not None:
        return "buf_collapse"
    if k in _DUAL:
        drivers = [ws.lone_driver(f) for f in g.fanin]
        if all(d is not None and d.kind == "NOT" for d in drivers):
            return "demorgan_rev"
    return None


def _apply(ws: _Workspace, name: str, rule: str) -> None:
    g = ws.gates[name]
    if rule == "demorgan_fwd":
        nots = []
        for f in g.fanin:
            w = ws.fresh()
            ws.add(w, "NOT", (f,))
            nots.append(w)
        ws.set_gate(name, _DUAL[g.kind], tuple(nots))
    elif rule == "demorgan_rev":
        drivers = [ws.gates[f] for f in g.fanin]
        ws.set_gate(name, _DUAL[g.kind], tuple(d.fanin[0] for d in drivers))
        for d in drivers:
            ws.delete(d.output)
    elif rule == "xor_flip":
        w = ws.fresh()
        ws.add(w, _XDUAL[g.kind], g.fanin)
        ws.set_gate(name, "NOT", (w,))
    elif rule == "xor_merge":
        d = ws.gates[g.fanin[0]]
        ws.set_gate(name, _XDUAL[d.kind], d.fanin)
        ws.delete(d.output)
    elif rule == "dneg_insert":
        t0 = ws.fresh()
        t1 = ws.fresh()
        ws.add(t0, g.kind, g.fanin)
        ws.add(t1, "NOT", (t0,))
        ws.set_gate(name, "NOT", (t1,))
    elif rule == "dneg_elim":
        d = ws.gates[g.fanin[0]]
        ws.set_gate(name, "BUF", d.fanin)
        ws.delete(d.output)
    elif rule == "buf_collapse":
        d = ws.gates[g.fanin[0]]
        ws.set_gate(name, d.kind, d.fanin)
        ws.delete(d.output)
    elif rule == "assoc":
        # (a . b) . c  ->  a . (b . c); the inner gate is rebuilt under a
        # fresh name so no edge to an existing net is ever created
        d = ws.gates[g.fanin[0]]
        a, b = d.fanin
        e = ws.fresh()
        ws.add(e, g.kind, (b, g.fanin[1]))
        ws.set_gate(name, g.kind, (a, e))
        ws.delete(d.output)
    else:  # pragma: no cover
        raise ValueError(rule)


def rewrite_randomized(
    c: Circuit, rng: random.Random, passes: int = 2, growth_band: float = 0.15
) -> Circuit:
    """Run ``passes`` rewrite sweeps plus the cleanup. passes=0 returns the
    circuit untouched. Deterministic given (circuit, rng state, passes)."""
    if passes < 0:
        raise ValueError("passes must be >= 0")
    if passes == 0:
        return c
    ws = _Workspace(c)
    budget = int(len(ws.gates) * (1.0 + growth_band)) + 2
    for _ in range(passes):
        for name in list(ws.gates.keys()):
            if name not in ws.gates:
                continue
            if rng.random() >= 0.5:
                continue
            rules = _applicable(ws, ws.gates[name], budget)
            if not rules:
                continue
            _apply(ws, name, rules[rng.randrange(len(rules))])
    # deterministic cleanup: shrink until fixpoint (bounded), so inflation
    # from the randomized phase does not show up as area overhead
    for _ in range(8):
        fired = False
        for name in list(ws.gates.keys()):
            if name not in ws.gates:
                continue
            rule = _shrink_applicable(ws, ws.gates[name])
            if rule is not None:
                _apply(ws, name, rule)
                fired = True
        if not fired:
            break
    return Circuit(
        name=c.name,
        inputs=c.inputs,
        outputs=c.outputs,
        gates=tuple(ws.gates.values()),
        key_inputs=c.key_inputs,
    ).validated()
