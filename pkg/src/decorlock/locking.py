"""Base locking schemes and the unlock oracle.

Two schemes are implemented:

* XOR/XNOR insertion: cut a wire, interpose an XOR (key bit 0) or XNOR
  (key bit 1) fed by a fresh key port. With the right bit the gate is a
  buffer; with the wrong bit it inverts the wire.
* point-function flipping (SARLock-style): compare a subset of primary
  inputs against the key, mask out the one pattern that would betray the
  correct key, and XOR the comparison into a high-observability output.
  A wrong key then corrupts exactly the input patterns whose projection
  onto the selected subset equals that wrong key.

``is_correct_key`` is the ground-truth check used everywhere: exhaustive
when the input space is small enough, sampled (with an explicitly
inconclusive verdict) otherwise.
"""
from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field, replace

import numpy as np

from .netlist import (
    Circuit,
    CircuitStructureError,
    Gate,
    _fresh,
    is_key_port,
    normalize_fanin2,
    rename_ports,
)
from . import sim
from .seeds import np_rng_from


class LockingError(Exception):
    """Requested lock cannot be built (bad parameters, no usable sites)."""


class KeyVerificationError(Exception):
    """A key that was required to verify did not."""


class Scheme(str, enum.Enum):
    XBI = "xbi"
    SARLOCK = "sarlock"
    DECOR_XBI = "decor-xbi"
    DECOR_SARLOCK = "decor-sarlock"


@dataclass(frozen=True)
class Key:
    """An assignment to named key ports, one bit per port, in port order."""

    bits: tuple[int, ...]
    port_names: tuple[str, ...]

    def __post_init__(self):
        if len(self.bits) != len(self.port_names):
            raise ValueError("bit/port length mismatch")
        if any(b not in (0, 1) for b in self.bits):
            raise ValueError("key bits must be 0 or 1")

    def __len__(self) -> int:
        return len(self.bits)

    def as_mapping(self) -> dict[str, int]:
        return dict(zip(self.port_names, self.bits))

    def bitstring(self) -> str:
        return "".join(str(b) for b in self.bits)

    def to_int(self) -> int:
        v = 0
        for b in self.bits:
            v = (v << 1) | b
        return v

    @staticmethod
    def from_int(value: int, port_names: tuple[str, ...]) -> "Key":
        n = len(port_names)
        bits = tuple((value >> (n - 1 - i)) & 1 for i in range(n))
        return Key(bits=bits, port_names=port_names)

    def flipped(self, i: int) -> "Key":
        bits = list(self.bits)
        bits[i] ^= 1
        return Key(bits=tuple(bits), port_names=self.port_names)


@dataclass(frozen=True)
class OracleConfig:
    """How hard is_correct_key tries. Exhaustive up to ``exhaustive_limit``
    free inputs; beyond that, ``samples`` random patterns from a fixed
    seed, and agreement is only ever 'inconclusive'."""

    exhaustive_limit: int = 14
    samples: int = 4096
    seed: int = 0x0E5EED


class VerdictStatus(str, enum.Enum):
    EQUIVALENT = "equivalent"
    INEQUIVALENT = "inequivalent"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class Verdict:
    status: VerdictStatus
    rows_checked: int
    exhaustive: bool
    witness: dict[str, bool] | None = None

    def __bool__(self) -> bool:
        return self.status is not VerdictStatus.INEQUIVALENT


@dataclass(frozen=True)
class SchemeParams:
    key_size: int
    # SARLock: explicit input subset (in order); default is a seeded sample
    sarlock_input_subset: tuple[str, ...] | None = None
    # permit key sizes beyond the primary input count by reusing select
    # lines round-robin; off by default because it changes key semantics
    sarlock_allow_reuse: bool = False


@dataclass(frozen=True)
class LockedCircuit:
    """A locked netlist plus the locker's private records: which ports are
    key ports and every key verified to unlock the design."""

    circuit: Circuit
    scheme: Scheme
    key_ports: tuple[str, ...]
    correct_keys: tuple[Key, ...]

    def reported_key(self) -> Key:
        return self.correct_keys[0]


def demote_key_ports(c: Circuit) -> Circuit:
    """Turn key ports into ordinary primary inputs (``keyinputN`` ->
    ``exkeyN``), i.e. the attacker's view when re-locking a target."""
    if not c.key_inputs:
        return c
    used = set(c.defined_nets)
    mapping = {}
    for p in c.key_inputs:
        base = "exkey" + (p[len("keyinput"):] if p.lower().startswith("keyinput") else p)
        mapping[p] = _fresh(base, used)
    return rename_ports(c, mapping)


def _next_key_ports(c: Circuit, count: int) -> tuple[str, ...]:
    used = set(c.defined_nets)
    ports = []
    i = 0
    while len(ports) < count:
        name = f"keyinput{i}"
        if name not in used:
            ports.append(name)
            used.add(name)
        i += 1
    return tuple(ports)


def _observability_patterns(c: Circuit, rng: random.Random, exhaustive_limit: int = 12, samples: int = 1024):
    free = c.free_ports
    if len(free) <= exhaustive_limit:
        pats, rows = sim.exhaustive_patterns(free)
    else:
        rows = samples
        pats = sim.random_patterns(free, rows, np_rng_from(rng))
    return pats, rows


def lock_xbi(original: Circuit, params: SchemeParams, rng: random.Random) -> tuple[LockedCircuit, Key]:
    """Insert ``key_size`` XOR/XNOR key gates on observable wires.

    Candidate sites are every gate-output net and every primary-input stem,
    minus wires already feeding a key gate. Sites are drawn in seeded
    random order and kept only if toggling the wire provably reaches an
    output over the probe patterns, so no key bit is trivially dead.
    """
    if params.key_size < 1:
        raise LockingError("key_size must be >= 1")
    c = normalize_fanin2(original)

    key_ports = set(c.key_inputs)
    feeds_key_gate = set()
    for g in c.gates:
        if any(f in key_ports for f in g.fanin):
            feeds_key_gate.update(f for f in g.fanin if f not in key_ports)
            feeds_key_gate.add(g.output)
    candidates = [g.output for g in c.gates if g.output not in feeds_key_gate]
    candidates += [p for p in c.inputs if c.sinks.get(p) and p not in feeds_key_gate]
    if len(candidates) < params.key_size:
        raise LockingError(
            f"{len(candidates)} candidate wires for key size {params.key_size}"
        )
    order = rng.sample(candidates, len(candidates))

    pats, rows = _observability_patterns(c, rng)
    base = sim.simulate(c, pats, keep="all")
    chosen: list[str] = []
    for w in order:
        if len(chosen) == params.key_size:
            break
        if sim.toggle_observable(c, w, pats, rows, base):
            chosen.append(w)
    if len(chosen) < params.key_size:
        raise LockingError(
            f"only {len(chosen)} observable wires out of {len(candidates)} candidates; "
            f"cannot place {params.key_size} key gates"
        )

    bits = tuple(rng.getrandbits(1) for _ in range(params.key_size))
    ports = _next_key_ports(c, params.key_size)
    used = set(c.defined_nets) | set(ports)
    gates = list(c.gates)
    index = {g.output: i for i, g in enumerate(gates)}
    input_set = set(c.inputs)
    for j, w in enumerate(chosen):
        kind = "XNOR" if bits[j] else "XOR"
        if w in input_set:
            keyed = _fresh(f"{w}_k", used)
            for i, g in enumerate(gates):
                if w in g.fanin:
                    gates[i] = Gate(g.output, g.kind, tuple(keyed if f == w else f for f in g.fanin))
            gates.append(Gate(keyed, kind, (w, ports[j])))
        else:
            stem = _fresh(f"{w}_pre", used)
            old = gates[index[w]]
            gates[index[w]] = Gate(stem, old.kind, old.fanin)
            index[stem] = index[w]
            gates.append(Gate(w, kind, (stem, ports[j])))
            index[w] = len(gates) - 1

    locked = Circuit(
        name=c.name,
        inputs=c.inputs,
        outputs=c.outputs,
        gates=tuple(gates),
        key_inputs=c.key_inputs + ports,
    ).validated()
    key = Key(bits=bits, port_names=ports)
    lc = LockedCircuit(circuit=locked, scheme=Scheme.XBI, key_ports=ports, correct_keys=(key,))
    v = is_correct_key(lc, original)
    if v.status is VerdictStatus.INEQUIVALENT:
        raise KeyVerificationError(f"freshly locked circuit fails its own key at {v.witness}")
    return lc, key


def _and_tree(nets: list[str], base: str, used: set[str], gates: list[Gate], kind: str = "AND") -> str:
    while len(nets) > 1:
        nxt = []
        for i in range(0, len(nets) - 1, 2):
            w = _fresh(f"{base}{len(gates)}", used)
            gates.append(Gate(w, kind, (nets[i], nets[i + 1])))
            nxt.append(w)
        if len(nets) % 2:
            nxt.append(nets[-1])
        nets = nxt
    return nets[0]


def _cone_sizes(c: Circuit) -> dict[str, int]:
    """Net -> number of gates in its transitive fan-in (inclusive)."""
    cones: dict[str, frozenset[str]] = {}
    for p in c.free_ports:
        cones[p] = frozenset()
    for g in c.topo_gates:
        s: set[str] = {g.output}
        for f in g.fanin:
            s |= cones[f]
        cones[g.output] = frozenset(s)
    return {n: len(s) for n, s in cones.items()}


def lock_sarlock(original: Circuit, params: SchemeParams, rng: random.Random) -> tuple[LockedCircuit, Key]:
    """Attach a masked point-function flip driven by ``key_size`` key bits.

    The flip is XORed into the output with the largest fan-in cone (ties
    broken by declaration order). With key sizes above the primary input
    count, select lines can be reused round-robin when explicitly allowed;
    reuse makes some additional keys unlock the design (any key that is
    inconsistent on a reused line can never fire the flip), and every such
    key found by a small seeded search is recorded in ``correct_keys``.
    """
    if params.key_size < 1:
        raise LockingError("key_size must be >= 1")
    c = normalize_fanin2(original)
    pins = c.inputs
    kappa = params.key_size
    if params.sarlock_input_subset is not None:
        subset = tuple(params.sarlock_input_subset)
        if len(subset) != kappa:
            raise LockingError("explicit input subset length must equal key_size")
        bad = [s for s in subset if s not in set(pins)]
        if bad:
            raise LockingError(f"subset nets are not primary inputs: {bad[:4]}")
    elif kappa <= len(pins):
        subset = tuple(rng.sample(pins, kappa))
    elif params.sarlock_allow_reuse:
        subset = tuple(pins[j % len(pins)] for j in range(kappa))
    else:
        raise LockingError(
            f"key_size {kappa} exceeds {len(pins)} primary inputs; "
            "set sarlock_allow_reuse to permit select-line reuse"
        )

    cone = _cone_sizes(c)
    driven = [o for o in c.outputs if o in c.driver]
    if not driven:
        raise LockingError("no gate-driven output to protect")
    target = max(driven, key=lambda o: (cone[o], -c.outputs.index(o)))

    bits = tuple(rng.getrandbits(1) for _ in range(kappa))
    ports = _next_key_ports(c, kappa)
    used = set(c.defined_nets) | set(ports)
    pf = "sar"
    i = 0
    while any(n.startswith(f"{pf}{i}_") for n in used):
        i += 1
    pf = f"{pf}{i}_"

    gates = list(c.gates)
    comp = []
    for j in range(kappa):
        w = _fresh(f"{pf}m{j}", used)
        gates.append(Gate(w, "XNOR", (subset[j], ports[j])))
        comp.append(w)
    eq_key = _and_tree(comp, f"{pf}ek", used, gates)

    notmap: dict[str, str] = {}
    lits = []
    for j in range(kappa):
        if bits[j]:
            lits.append(subset[j])
        else:
            if subset[j] not in notmap:
                w = _fresh(f"{pf}nl{len(notmap)}", used)
                gates.append(Gate(w, "NOT", (subset[j],)))
                notmap[subset[j]] = w
            lits.append(notmap[subset[j]])
    eq_mask = _and_tree(lits, f"{pf}em", used, gates)
    nmask = _fresh(f"{pf}nm", used)
    gates.append(Gate(nmask, "NOT", (eq_mask,)))
    flip = _fresh(f"{pf}flip", used)
    gates.append(Gate(flip, "AND", (eq_key, nmask)))

    stem = _fresh(f"{target}_pre", used)
    idx = next(i for i, g in enumerate(gates) if g.output == target)
    old = gates[idx]
    gates[idx] = Gate(stem, old.kind, old.fanin)
    gates.append(Gate(target, "XOR", (stem, flip)))

    locked = Circuit(
        name=c.name,
        inputs=c.inputs,
        outputs=c.outputs,
        gates=tuple(gates),
        key_inputs=c.key_inputs + ports,
    ).validated()
    key = Key(bits=bits, port_names=ports)
    lc = LockedCircuit(circuit=locked, scheme=Scheme.SARLOCK, key_ports=ports, correct_keys=(key,))
    v = is_correct_key(lc, original)
    if v.status is VerdictStatus.INEQUIVALENT:
        raise KeyVerificationError(f"freshly locked circuit fails its own key at {v.witness}")

    correct = [key]
    if len(set(subset)) < kappa:
        # reused select lines: flipping one bit of a duplicated position
        # makes the comparison unsatisfiable, so the flip never fires
        by_net: dict[str, list[int]] = {}
        for j, s in enumerate(subset):
            by_net.setdefault(s, []).append(j)
        for s, js in by_net.items():
            if len(js) < 2 or len(correct) >= 8:
                continue
            cand = key.flipped(js[0])
            if any(cand.bits == k.bits for k in correct):
                continue
            vv = is_correct_key(replace(lc, correct_keys=(cand,)), original)
            if vv.status is not VerdictStatus.INEQUIVALENT:
                correct.append(cand)
        lc = replace(lc, correct_keys=tuple(correct))
    return lc, key


def apply_key(locked: Circuit, key: Key) -> Circuit:
    """Specialize a locked circuit to one key: constant-propagate the key
    bits, fold gates, drop dead logic. The result has no key ports and
    never more gates than the input."""
    if set(key.port_names) != set(locked.key_inputs):
        missing = set(locked.key_inputs) - set(key.port_names)
        extra = set(key.port_names) - set(locked.key_inputs)
        raise ValueError(f"key/port mismatch: missing={sorted(missing)[:4]} extra={sorted(extra)[:4]}")
    const: dict[str, int] = dict(zip(key.port_names, key.bits))
    alias: dict[str, str] = {}
    folded: dict[str, Gate] = {}
    order: list[str] = []

    for g in locked.topo_gates:
        vals: list[int] = []
        rest: list[str] = []
        for f in g.fanin:
            f = alias.get(f, f)
            if f in const:
                vals.append(const[f])
            else:
                rest.append(f)
        k = g.kind
        res_const: int | None = None
        res_alias: str | None = None
        res_gate: Gate | None = None
        if k == "CONST0":
            res_const = 0
        elif k == "CONST1":
            res_const = 1
        elif k in ("AND", "NAND"):
            neg = k == "NAND"
            if any(v == 0 for v in vals):
                res_const = 1 if neg else 0
            elif not rest:
                res_const = 0 if neg else 1
            elif len(rest) == 1:
                if neg:
                    res_gate = Gate(g.output, "NOT", (rest[0],))
                else:
                    res_alias = rest[0]
            else:
                res_gate = Gate(g.output, k, tuple(rest))
        elif k in ("OR", "NOR"):
            neg = k == "NOR"
            if any(v == 1 for v in vals):
                res_const = 0 if neg else 1
            elif not rest:
                res_const = 1 if neg else 0
            elif len(rest) == 1:
                if neg:
                    res_gate = Gate(g.output, "NOT", (rest[0],))
                else:
                    res_alias = rest[0]
            else:
                res_gate = Gate(g.output, k, tuple(rest))
        elif k in ("XOR", "XNOR"):
            p = sum(vals) % 2
            if k == "XNOR":
                p ^= 1  # fold the inversion into the parity
            if not rest:
                res_const = p
            elif len(rest) == 1:
                if p:
                    res_gate = Gate(g.output, "NOT", (rest[0],))
                else:
                    res_alias = rest[0]
            else:
                res_gate = Gate(g.output, "XNOR" if p else "XOR", tuple(rest))
        elif k == "NOT":
            if vals:
                res_const = 1 - vals[0]
            else:
                res_gate = Gate(g.output, "NOT", (rest[0],))
        elif k == "BUF":
            if vals:
                res_const = vals[0]
            else:
                res_alias = rest[0]
        else:  # pragma: no cover
            raise ValueError(f"unknown kind {k}")

        if res_const is not None:
            const[g.output] = res_const
        elif res_alias is not None:
            alias[g.output] = res_alias
        else:
            folded[g.output] = res_gate
            order.append(g.output)

    for o in locked.outputs:
        if o in folded or o in locked.inputs:
            continue
        if o in const:
            folded[o] = Gate(o, "CONST1" if const[o] else "CONST0", ())
            order.append(o)
        elif o in alias:
            folded[o] = Gate(o, "BUF", (alias[o],))
            order.append(o)

    live: set[str] = set()
    frontier = [o for o in locked.outputs if o in folded]
    while frontier:
        n = frontier.pop()
        if n in live:
            continue
        live.add(n)
        g = folded.get(n)
        if g:
            frontier.extend(f for f in g.fanin if f not in live)

    gates = tuple(folded[n] for n in order if n in live)
    return Circuit(
        name=locked.name,
        inputs=locked.inputs,
        outputs=locked.outputs,
        gates=gates,
        key_inputs=(),
    ).validated()


def is_correct_key(
    lc: LockedCircuit | Circuit,
    reference: Circuit,
    key: Key | None = None,
    oracle: OracleConfig = OracleConfig(),
) -> Verdict:
    """Does the locked circuit under ``key`` compute ``reference``?

    Exhaustive over the reference's free ports when they fit under the
    oracle's limit, otherwise sampled: sampled agreement yields
    INCONCLUSIVE, any mismatch yields INEQUIVALENT plus the offending
    assignment as a witness. Key ports are driven with constant columns;
    apply_key is deliberately not involved so the two can cross-check each
    other in tests.
    """
    locked = lc.circuit if isinstance(lc, LockedCircuit) else lc
    if key is None:
        if not isinstance(lc, LockedCircuit) or not lc.correct_keys:
            raise ValueError("key required when not implied by the locked circuit")
        key = lc.correct_keys[0]
    keyset = set(key.port_names)
    if not keyset <= set(locked.free_ports):
        raise ValueError("key names ports the locked circuit does not have")
    remaining = tuple(p for p in locked.free_ports if p not in keyset)
    if remaining != reference.free_ports:
        raise ValueError("locked circuit ports (minus key ports) do not match reference ports")
    if locked.outputs != reference.outputs:
        raise ValueError("output lists differ between locked circuit and reference")

    ports = reference.free_ports
    exhaustive = len(ports) <= oracle.exhaustive_limit
    if exhaustive:
        pats, rows = sim.exhaustive_patterns(ports)
    else:
        rows = oracle.samples
        pats = sim.random_patterns(ports, rows, np.random.default_rng(oracle.seed))
    words = sim.n_words(rows)
    kpats = dict(pats)
    for p, b in zip(key.port_names, key.bits):
        kpats[p] = np.full(words, sim.ONES if b else np.uint64(0), dtype=np.uint64)

    v_lock = sim.simulate(locked, kpats)
    v_ref = sim.simulate(reference, pats)
    worst: int | None = None
    for o in locked.outputs:
        r = sim.first_mismatch_row(v_lock[o], v_ref[o], rows)
        if r is not None and (worst is None or r < worst):
            worst = r
    if worst is None:
        status = VerdictStatus.EQUIVALENT if exhaustive else VerdictStatus.INCONCLUSIVE
        return Verdict(status=status, rows_checked=rows, exhaustive=exhaustive)
    if exhaustive:
        witness = sim.assignment_for_row(ports, worst)
    else:
        witness = {p: bool(sim.unpack_bits(pats[p], rows)[worst]) for p in ports}
    return Verdict(
        status=VerdictStatus.INEQUIVALENT,
        rows_checked=rows,
        exhaustive=exhaustive,
        witness=witness,
    )
