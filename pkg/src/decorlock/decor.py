"""Multi-correct-key enhancement of a locked circuit.

The enhancement takes a base-locked circuit whose single correct key k*
is known and makes a randomized set of additional keys unlock it too: a
key-remap block compares the incoming key against each extra key and, on
a match, substitutes k* before the key reaches the base lock. Every key
in the recorded list then unlocks the design; all other keys pass through
untouched and behave exactly as in the base lock.

The remap block is built from a deliberately uniform gate pattern (the
per-bit mux never specializes on k* bits), and the result is run through
randomized rewriting so reference circuits locked with different keys do
not advertise their key in local structure. The point, quantified by the
estimators at the bottom, is to decorrelate structural features from key
bit labels in attack training data.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, replace

import numpy as np

from .netlist import Circuit, Gate, _fresh
from .locking import (
    Key,
    KeyVerificationError,
    LockedCircuit,
    LockingError,
    OracleConfig,
    Scheme,
    VerdictStatus,
    apply_key,
    is_correct_key,
)
from .rewrite import rewrite_randomized


@dataclass(frozen=True)
class DecorConfig:
    """N is the cap on the unlocking-key count; the realized count n is
    drawn uniformly from {2, ..., N} per design."""

    max_keys: int
    rewrite_passes: int = 2
    oracle: OracleConfig = OracleConfig()
    verify: bool = True


@dataclass(frozen=True)
class DecorResult:
    locked: LockedCircuit
    reported_key: Key
    n: int

    @property
    def correct_keys(self) -> tuple[Key, ...]:
        return self.locked.correct_keys


def sample_correct_key_set(key: Key, max_keys: int, rng: random.Random) -> tuple[Key, ...]:
    """Draw the unlocking-key list: k* plus n-1 distinct uniform keys,
    n uniform on {2..N}. Rejection sampling is bounded by 10*N draws."""
    if max_keys < 2:
        raise LockingError("max_keys must be >= 2")
    kappa = len(key.bits)
    n = rng.randint(2, max_keys)
    if n > 2**kappa:
        raise LockingError(f"cannot pick {n} distinct {kappa}-bit keys")
    keys = [key]
    seen = {key.bits}
    draws = 0
    while len(keys) < n:
        draws += 1
        if draws > 10 * max_keys:
            raise LockingError(f"rejection sampling failed to find {n} distinct keys in {draws} draws")
        cand = tuple(rng.getrandbits(1) for _ in range(kappa))
        if cand in seen:
            continue
        seen.add(cand)
        keys.append(Key(bits=cand, port_names=key.port_names))
    return tuple(keys)


def _or_tree(nets: list[str], base: str, used: set[str], gates: list[Gate]) -> str:
    while len(nets) > 1:
        nxt = []
        for i in range(0, len(nets) - 1, 2):
            w = _fresh(f"{base}{len(gates)}", used)
            gates.append(Gate(w, "OR", (nets[i], nets[i + 1])))
            nxt.append(w)
        if len(nets) % 2:
            nxt.append(nets[-1])
        nets = nxt
    return nets[0]


def build_key_remap(c: Circuit, key: Key, extras: tuple[Key, ...]) -> Circuit:
    """Rewire the key ports of ``c`` through a remap block: if the applied
    key equals any of ``extras`` the base lock sees ``key`` instead.

    The per-bit structure is identical regardless of k* bit values: the
    substituted constant enters through one of two shared constant nets,
    so no gate adjacent to a key port encodes k*.
    """
    ports = key.port_names
    kappa = len(ports)
    if not c.inputs:
        raise LockingError("remap block needs at least one primary input for constant nets")
    used = set(c.defined_nets)
    pf = "dk"
    i = 0
    while any(n.startswith(f"{pf}{i}_") for n in used):
        i += 1
    pf = f"{pf}{i}_"

    remap_net = {p: f"{pf}r{j}" for j, p in enumerate(ports)}
    portset = set(ports)
    body = [
        Gate(g.output, g.kind, tuple(remap_net.get(f, f) for f in g.fanin))
        if any(f in portset for f in g.fanin)
        else g
        for g in c.gates
    ]

    gates: list[Gate] = []
    carrier = c.inputs[0]
    cbar = _fresh(f"{pf}cb", used)
    gates.append(Gate(cbar, "NOT", (carrier,)))
    czero = _fresh(f"{pf}c0", used)
    gates.append(Gate(czero, "AND", (carrier, cbar)))
    cone = _fresh(f"{pf}c1", used)
    gates.append(Gate(cone, "OR", (carrier, cbar)))

    notk: dict[int, str] = {}

    def notk_net(j: int) -> str:
        if j not in notk:
            w = _fresh(f"{pf}nk{j}", used)
            gates.append(Gate(w, "NOT", (ports[j],)))
            notk[j] = w
        return notk[j]

    eqs = []
    for t, e in enumerate(extras):
        lits = [ports[j] if e.bits[j] else notk_net(j) for j in range(kappa)]
        if len(lits) == 1:
            eqs.append(lits[0])
        else:
            nets = list(lits)
            while len(nets) > 1:
                nxt = []
                for a in range(0, len(nets) - 1, 2):
                    w = _fresh(f"{pf}e{t}_{len(gates)}", used)
                    gates.append(Gate(w, "AND", (nets[a], nets[a + 1])))
                    nxt.append(w)
                if len(nets) % 2:
                    nxt.append(nets[-1])
                nets = nxt
            eqs.append(nets[0])
    sel = _or_tree(eqs, f"{pf}s", used, gates)
    nsel = _fresh(f"{pf}ns", used)
    gates.append(Gate(nsel, "NOT", (sel,)))

    for j, p in enumerate(ports):
        a = _fresh(f"{pf}a{j}", used)
        gates.append(Gate(a, "AND", (nsel, p)))
        b = _fresh(f"{pf}b{j}", used)
        gates.append(Gate(b, "AND", (sel, cone if key.bits[j] else czero)))
        used.add(remap_net[p])
        gates.append(Gate(remap_net[p], "OR", (a, b)))

    return Circuit(
        name=c.name,
        inputs=c.inputs,
        outputs=c.outputs,
        gates=tuple(body) + tuple(gates),
        key_inputs=c.key_inputs,
    ).validated()


def decor_enhance(
    lc: LockedCircuit,
    key: Key,
    cfg: DecorConfig,
    rng: random.Random,
    reference: Circuit | None = None,
) -> DecorResult:
    """Enhance a base lock so a randomized set of keys (k* included)
    unlocks it, then rewrite the netlist to bury the added structure.

    ``key`` must be one of the locked circuit's verified correct keys.
    When ``reference`` (the pre-lock circuit) is supplied and ``cfg.verify``
    is set, every listed key is checked against it through the oracle;
    otherwise the check runs against the key-applied base lock, which
    validates the remap block itself.
    """
    if key.port_names != lc.key_ports:
        raise KeyVerificationError("key does not name this circuit's key ports")
    if not any(key.bits == k.bits for k in lc.correct_keys):
        raise KeyVerificationError("key is not among the verified correct keys of the base lock")
    keys = sample_correct_key_set(key, cfg.max_keys, rng)
    remapped = build_key_remap(lc.circuit, key, keys[1:])
    rewritten = rewrite_randomized(remapped, rng, passes=cfg.rewrite_passes)

    scheme = {
        Scheme.XBI: Scheme.DECOR_XBI,
        Scheme.SARLOCK: Scheme.DECOR_SARLOCK,
    }.get(lc.scheme, lc.scheme)
    out = LockedCircuit(
        circuit=rewritten,
        scheme=scheme,
        key_ports=lc.key_ports,
        correct_keys=keys,
    )
    if cfg.verify:
        ref = reference if reference is not None else apply_key(lc.circuit, key)
        for k in keys:
            v = is_correct_key(out, ref, k, cfg.oracle)
            if v.status is VerdictStatus.INEQUIVALENT:
                raise KeyVerificationError(
                    f"listed key {k.bitstring()} fails the oracle at {v.witness}"
                )
    return DecorResult(locked=out, reported_key=key, n=len(keys))


# ---------------------------------------------------------------------------
# collision-probability estimators and their closed-form bounds

def same_label_exact(n: int, t: int) -> float:
    """Probability that t samples drawn uniformly from n labels coincide."""
    return float(n) ** -(t - 1)


def same_label_bound(t: int) -> float:
    """Upper bound over any n >= 2."""
    return 2.0 ** -(t - 1)


def same_feature_bound(kappa: int, max_keys: int, t: int) -> float:
    """Upper bound on t enhanced locks (same label) drawing identical
    extra-key sets, hence identical remap structure."""
    return (float((2**kappa - 1) * (max_keys - 1))) ** -(t - 1)


def mc_same_label_given_feature(n: int, t: int, trials: int, rng: np.random.Generator) -> float:
    """Estimate Pr[t netlists sharing a feature also share its label] under
    the enhanced model: each assigns the feature a label drawn uniformly
    from its n unlocking keys."""
    if n < 1 or t < 1:
        raise ValueError("need n >= 1 and t >= 1")
    draws = rng.integers(0, n, size=(trials, t))
    same = np.all(draws == draws[:, :1], axis=1)
    return float(same.mean())


def mc_same_feature_given_label(
    kappa: int, max_keys: int, t: int, trials: int, rng: np.random.Generator
) -> float:
    """Estimate Pr[t enhanced locks reporting the same key draw identical
    extra-key sets]. Key-set draws are deferred to the trials where all t
    realized counts agree, which is the only way a collision can happen;
    the estimate is distributionally identical to the direct simulation.
    """
    if max_keys < 2:
        raise ValueError("max_keys must be >= 2")
    if 2**kappa - 1 < max_keys - 1:
        raise ValueError("key space too small for the requested max_keys")
    ns = rng.integers(2, max_keys + 1, size=(trials, t))
    candidates = np.nonzero(np.all(ns == ns[:, :1], axis=1))[0]
    space = 2**kappa - 1  # keys distinct from k*, encoded 1..space
    hits = 0
    py = random.Random(int(rng.integers(0, 2**63)))
    for idx in candidates:
        n = int(ns[idx, 0])
        first = frozenset(py.sample(range(1, space + 1), n - 1))
        ok = True
        for _ in range(t - 1):
            if frozenset(py.sample(range(1, space + 1), n - 1)) != first:
                ok = False
                break
        if ok:
            hits += 1
    return hits / trials
