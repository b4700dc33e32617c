"""Key-prediction attack harness.

Learning-based key recovery treated as per-bit binary classification:

1. build reference locked circuits with known keys (self-referencing: the
   attacker re-locks the target netlist itself after demoting its key
   ports to plain inputs; or generalized: a pool of unrelated circuits),
2. extract a structural feature around each reference key port, labeled
   with that port's key bit,
3. fit a classifier and read the target's key off its own port features.

Two feature encodings are supported: a fixed-length positional vector of
gate-type codes over the fan-in/fan-out trees of the gate consuming the
key port, and a canonicalized h-hop subgraph of the undirected gate
graph. Two classifiers: an exact-match frequency table (transparent,
deterministic, surprisingly strong when features repeat) and a small
numpy MLP over one-hot vectors.

Accuracy is reported as KPA (percent of key bits matching the locker's
reported key) and, for multi-correct-key locks, BKPA (best KPA over the
full recorded list of unlocking keys).
"""
from __future__ import annotations

import hashlib
import os
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .netlist import Circuit, Gate, is_key_port
from .locking import (
    Key,
    LockedCircuit,
    LockingError,
    OracleConfig,
    Scheme,
    SchemeParams,
    demote_key_ports,
    lock_sarlock,
    lock_xbi,
)
from .decor import DecorConfig, decor_enhance
from .seeds import derive_seed

GATE_CODES = {
    "PAD": 0,
    "PI": 1,
    "AND": 2,
    "NAND": 3,
    "OR": 4,
    "NOR": 5,
    "XOR": 6,
    "XNOR": 7,
    "NOT": 8,
    "BUF": 9,
    "PO": 10,
    "KEYINPUT": 11,
}
N_CODES = 12

# constants never survive into locked netlists; coded as BUF defensively
_KIND_TO_CODE = {k: GATE_CODES[k] for k in ("AND", "NAND", "OR", "NOR", "XOR", "XNOR", "NOT", "BUF")}
_KIND_TO_CODE["CONST0"] = GATE_CODES["BUF"]
_KIND_TO_CODE["CONST1"] = GATE_CODES["BUF"]


class AttackError(Exception):
    pass


@dataclass(frozen=True)
class FeatureParams:
    encoding: str = "vector"  # "vector" | "subgraph"
    depth: int = 3
    branch: int = 2
    hops: int = 2

    def __post_init__(self):
        if self.encoding not in ("vector", "subgraph"):
            raise ValueError(f"unknown encoding {self.encoding!r}")
        if self.depth < 1 or self.branch < 1 or self.hops < 1:
            raise ValueError("depth, branch and hops must be >= 1")


def vector_length(depth: int, branch: int) -> int:
    side = sum(branch**i for i in range(1, depth + 1))
    return 1 + 2 * side


def _level_offsets(depth: int, branch: int) -> list[int]:
    offs = [0]
    for i in range(1, depth):
        offs.append(offs[-1] + branch**i)
    return offs


def _key_gate(c: Circuit, key_port: str) -> Gate:
    sinks = c.sinks.get(key_port)
    if key_port not in c.key_inputs:
        raise AttackError(f"{key_port!r} is not a key port of this circuit")
    if not sinks:
        raise AttackError(f"key port {key_port!r} drives nothing")
    return sinks[0]


def extract_vector(c: Circuit, key_port: str, depth: int = 3, branch: int = 2) -> tuple[int, ...]:
    """Positional gate-code vector around the key port's consuming gate.

    Layout: [center, fan-in tree level 1..depth, fan-out tree level
    1..depth], each level contiguous, missing positions padded with 0.
    Fan-in children follow gate fan-in order; fan-out children follow gate
    declaration order with an output-port marker appended last. Both trees
    truncate at ``branch`` children per node.
    """
    center = _key_gate(c, key_port)
    side = sum(branch**i for i in range(1, depth + 1))
    offs = _level_offsets(depth, branch)
    fanin = [0] * side
    fanout = [0] * side
    inputs = set(c.inputs)
    keys = set(c.key_inputs)
    outs = set(c.outputs)

    def code_of(node) -> int:
        if isinstance(node, Gate):
            return _KIND_TO_CODE[node.kind]
        kind, _ = node
        return GATE_CODES[kind]

    def fanin_children(node) -> list:
        if not isinstance(node, Gate):
            return []
        ch = []
        for f in node.fanin[:branch]:
            if f in keys:
                ch.append(("KEYINPUT", f))
            elif f in inputs:
                ch.append(("PI", f))
            else:
                ch.append(c.driver[f])
        return ch

    def fanout_children(node) -> list:
        if not isinstance(node, Gate):
            return []
        ch = list(c.sinks.get(node.output, ()))
        if node.output in outs:
            ch.append(("PO", node.output))
        return ch[:branch]

    def fill(slots: list[int], children_of, node, level: int, pos: int) -> None:
        if level > depth:
            return
        for i, ch in enumerate(children_of(node)):
            p = pos * branch + i
            slots[offs[level - 1] + p] = code_of(ch)
            fill(slots, children_of, ch, level + 1, p)

    fill(fanin, fanin_children, center, 1, 0)
    fill(fanout, fanout_children, center, 1, 0)
    return (code_of(center),) + tuple(fanin) + tuple(fanout)


@dataclass(frozen=True)
class Subgraph:
    """Induced undirected neighborhood of a key port's consuming gate.
    Node 0 is the center; codes/edges use local indices."""

    codes: tuple[int, ...]
    edges: tuple[tuple[int, int], ...]

    def ring_histogram(self, hops: int) -> tuple[int, ...]:
        """Per-distance gate-code counts, flattened to a fixed-length tuple
        of (hops+1)*N_CODES entries. Isomorphism-invariant like
        ``canonical`` but deliberately coarse: small structural edits move
        single counts instead of changing an opaque hash, which is what
        lets a classifier transfer between circuits that are similar
        rather than identical around the key port."""
        n = len(self.codes)
        adj: list[list[int]] = [[] for _ in range(n)]
        for a, b in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        dist = [-1] * n
        dist[0] = 0
        queue = [0]
        while queue:
            u = queue.pop(0)
            for v in adj[u]:
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    queue.append(v)
        hist = [0] * ((hops + 1) * N_CODES)
        for i in range(n):
            if 0 <= dist[i] <= hops:
                hist[dist[i] * N_CODES + self.codes[i]] += 1
        return tuple(hist)

    def canonical(self) -> tuple[int, ...]:
        """Isomorphism-invariant signature via iterated neighborhood color
        refinement, center distinguished. Isomorphic neighborhoods always
        collide; distinct ones separate except for pathological regular
        graphs that never arise from these constructions."""
        n = len(self.codes)
        adj: list[list[int]] = [[] for _ in range(n)]
        for a, b in self.edges:
            adj[a].append(b)
            adj[b].append(a)

        def h(x) -> int:
            return int.from_bytes(hashlib.sha256(repr(x).encode()).digest()[:8], "big")

        colors = [h((self.codes[i], 1 if i == 0 else 0)) for i in range(n)]
        for _ in range(max(2, n.bit_length())):
            colors = [h((colors[i], tuple(sorted(colors[j] for j in adj[i])))) for i in range(n)]
        return tuple(sorted(colors))


def extract_subgraph(c: Circuit, key_port: str, hops: int = 2) -> Subgraph:
    """Breadth-first induced subgraph within ``hops`` of the consuming
    gate, over the undirected gate graph (gates, port pseudo-nodes, and
    output-port markers)."""
    center = _key_gate(c, key_port)
    inputs = set(c.inputs)
    keys = set(c.key_inputs)
    outs = set(c.outputs)

    def node_id(node) -> str:
        if isinstance(node, Gate):
            return node.output
        kind, name = node
        return f"{name}#{kind.lower()}" if kind == "PO" else name

    def neighbors(node) -> list:
        if not isinstance(node, Gate):
            kind, name = node
            if kind == "PO":
                return [c.driver[name]] if name in c.driver else []
            return list(c.sinks.get(name, ()))
        ch = []
        for f in node.fanin:
            if f in keys:
                ch.append(("KEYINPUT", f))
            elif f in inputs:
                ch.append(("PI", f))
            else:
                ch.append(c.driver[f])
        ch.extend(c.sinks.get(node.output, ()))
        if node.output in outs:
            ch.append(("PO", node.output))
        return ch

    def code_of(node) -> int:
        if isinstance(node, Gate):
            return _KIND_TO_CODE[node.kind]
        return GATE_CODES[node[0]]

    index: dict[str, int] = {node_id(center): 0}
    nodes = [center]
    dist = {node_id(center): 0}
    queue = [center]
    while queue:
        cur = queue.pop(0)
        d = dist[node_id(cur)]
        if d == hops:
            continue
        for nb in neighbors(cur):
            nid = node_id(nb)
            if nid not in index:
                index[nid] = len(nodes)
                nodes.append(nb)
                dist[nid] = d + 1
                queue.append(nb)
    edges: set[tuple[int, int]] = set()
    for node in nodes:
        a = index[node_id(node)]
        for nb in neighbors(node):
            b = index.get(node_id(nb))
            if b is not None and a != b:
                edges.add((min(a, b), max(a, b)))
    return Subgraph(codes=tuple(code_of(n) for n in nodes), edges=tuple(sorted(edges)))


def extract_feature(c: Circuit, key_port: str, params: FeatureParams):
    """Hashable feature key for one key port under the chosen encoding:
    the positional code vector, or the subgraph's ring histogram."""
    if params.encoding == "vector":
        return extract_vector(c, key_port, params.depth, params.branch)
    return extract_subgraph(c, key_port, params.hops).ring_histogram(params.hops)


@dataclass(frozen=True)
class FeatureRecord:
    feature: tuple[int, ...]
    label: int
    key_port: str
    source: str


def label_records(lc: LockedCircuit, key: Key, params: FeatureParams, source: str) -> list[FeatureRecord]:
    bits = key.as_mapping()
    out = []
    for p in lc.key_ports:
        out.append(
            FeatureRecord(
                feature=extract_feature(lc.circuit, p, params),
                label=bits[p],
                key_port=p,
                source=source,
            )
        )
    return out


# ---------------------------------------------------------------------------
# reference generation


@dataclass(frozen=True)
class ReferenceParams:
    scheme: Scheme
    key_size: int
    mode: str = "srs"  # "srs" | "gss"
    count: int = 100
    max_keys: int = 0  # 0: base scheme only; >=2: enhanced
    rewrite_passes: int = 2
    sarlock_allow_reuse: bool = False
    verify: bool = True


def _lock_one(base: Circuit, rp: ReferenceParams, seed: int) -> tuple[LockedCircuit, Key]:
    rng = random.Random(seed)
    sp = SchemeParams(key_size=rp.key_size, sarlock_allow_reuse=rp.sarlock_allow_reuse)
    if rp.scheme in (Scheme.XBI, Scheme.DECOR_XBI):
        lc, key = lock_xbi(base, sp, rng)
    elif rp.scheme in (Scheme.SARLOCK, Scheme.DECOR_SARLOCK):
        lc, key = lock_sarlock(base, sp, rng)
    else:  # pragma: no cover
        raise AttackError(f"unsupported scheme {rp.scheme}")
    if rp.scheme in (Scheme.DECOR_XBI, Scheme.DECOR_SARLOCK):
        if rp.max_keys < 2:
            raise AttackError("enhanced schemes need max_keys >= 2")
        cfg = DecorConfig(max_keys=rp.max_keys, rewrite_passes=rp.rewrite_passes, verify=rp.verify)
        res = decor_enhance(lc, key, cfg, rng, reference=base)
        return res.locked, res.reported_key
    return lc, key


def generate_references(
    target: LockedCircuit,
    rp: ReferenceParams,
    master_seed: int,
    pool: list[Circuit] | None = None,
) -> list[tuple[LockedCircuit, Key]]:
    """Locked reference circuits with known keys.

    srs re-locks the target itself, key ports demoted to plain inputs;
    gss walks ``pool`` round-robin. Each reference gets a seed derived
    from (master_seed, 'ref', index) so the set is reproducible and any
    prefix of it is stable under a count change. Honors DECOR_THREADS.
    """
    if rp.count < 1:
        raise AttackError("reference count must be >= 1")
    if rp.mode == "srs":
        bases = [demote_key_ports(target.circuit)]
        pick = lambda i: bases[0]
    elif rp.mode == "gss":
        if not pool:
            raise AttackError("gss mode needs a non-empty benchmark pool")
        pick = lambda i: pool[i % len(pool)]
    else:
        raise AttackError(f"unknown reference mode {rp.mode!r}")

    def make(i: int) -> tuple[LockedCircuit, Key]:
        return _lock_one(pick(i), rp, derive_seed(master_seed, "ref", i))

    threads = int(os.environ.get("DECOR_THREADS", "1") or "1")
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(make, range(rp.count)))
    return [make(i) for i in range(rp.count)]


def build_training_set(
    refs: list[tuple[LockedCircuit, Key]], params: FeatureParams
) -> list[FeatureRecord]:
    records: list[FeatureRecord] = []
    for i, (lc, key) in enumerate(refs):
        records.extend(label_records(lc, key, params, source=f"ref{i}"))
    return records


# ---------------------------------------------------------------------------
# classifiers


@dataclass
class FrequencyModel:
    """Exact-match lookup: feature -> per-label counts, global-prior
    backoff for unseen features, ties predicting 0 at confidence 0.5."""

    table: dict[tuple[int, ...], list[int]]
    totals: tuple[int, int]

    def predict_proba(self, feature) -> float:
        c = self.table.get(feature)
        if c is None or (c[0] == 0 and c[1] == 0):
            t0, t1 = self.totals
            return t1 / (t0 + t1)
        return c[1] / (c[0] + c[1])

    def seen(self, feature) -> bool:
        return feature in self.table


def train_frequency(records: list[FeatureRecord]) -> FrequencyModel:
    if not records:
        raise AttackError("no training records")
    table: dict[tuple[int, ...], list[int]] = {}
    t0 = t1 = 0
    for r in records:
        cell = table.setdefault(r.feature, [0, 0])
        cell[r.label] += 1
        if r.label:
            t1 += 1
        else:
            t0 += 1
    return FrequencyModel(table=table, totals=(t0, t1))


def _one_hot(features: list, n_codes: int = N_CODES) -> np.ndarray:
    L = len(features[0])
    X = np.zeros((len(features), L * n_codes), dtype=np.float64)
    for i, f in enumerate(features):
        if len(f) != L:
            raise AttackError("mixed feature lengths; one-hot encoding needs fixed-length vectors")
        for j, code in enumerate(f):
            X[i, j * n_codes + code] = 1.0
    return X


@dataclass
class MlpModel:
    """One hidden layer, tanh, logistic output; trained with plain SGD.
    Small on purpose: training sets here are thousands of rows.

    ``embedding`` is how a feature tuple becomes the input vector: one-hot
    per position for code vectors, raw counts for ring histograms."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: float
    embedding: str = "onehot"
    n_codes: int = N_CODES

    def _embed(self, feature) -> np.ndarray:
        if self.embedding == "counts":
            return np.asarray(feature, dtype=np.float64)
        x = np.zeros(self.w1.shape[0], dtype=np.float64)
        for j, code in enumerate(feature):
            x[j * self.n_codes + code] = 1.0
        return x

    def predict_proba(self, feature) -> float:
        x = self._embed(feature)
        h = np.tanh(x @ self.w1 + self.b1)
        z = float(h @ self.w2 + self.b2)
        return 1.0 / (1.0 + np.exp(-z))


def train_mlp(
    records: list[FeatureRecord],
    seed: int,
    hidden: int = 16,
    epochs: int = 20,
    lr: float = 0.05,
    embedding: str = "onehot",
) -> MlpModel:
    if not records:
        raise AttackError("no training records")
    if embedding == "counts":
        X = np.asarray([r.feature for r in records], dtype=np.float64)
    else:
        X = _one_hot([r.feature for r in records])
    y = np.array([r.label for r in records], dtype=np.float64)
    rng = np.random.default_rng(seed)
    n, d = X.shape
    w1 = rng.normal(0.0, 0.2, size=(d, hidden))
    b1 = np.zeros(hidden)
    w2 = rng.normal(0.0, 0.2, size=hidden)
    b2 = 0.0
    for _ in range(epochs):
        for i in rng.permutation(n):
            x = X[i]
            h = np.tanh(x @ w1 + b1)
            z = h @ w2 + b2
            p = 1.0 / (1.0 + np.exp(-z))
            dz = p - y[i]
            dh = dz * w2 * (1.0 - h * h)
            w2 -= lr * dz * h
            b2 -= lr * dz
            w1 -= lr * np.outer(x, dh)
            b1 -= lr * dh
    return MlpModel(w1=w1, b1=b1, w2=w2, b2=b2, embedding=embedding)


def predict_key(model, target: LockedCircuit, params: FeatureParams) -> tuple[Key, tuple[float, ...]]:
    """Per-port probabilities of bit 1; bits thresholded at 0.5 with ties
    going to 0."""
    bits = []
    probs = []
    for p in target.key_ports:
        f = extract_feature(target.circuit, p, params)
        p1 = float(model.predict_proba(f))
        probs.append(p1)
        bits.append(1 if p1 > 0.5 else 0)
    return Key(bits=tuple(bits), port_names=target.key_ports), tuple(probs)


def compute_kpa(predicted: Key, reported: Key) -> float:
    """Percent of predicted bits matching the reported key."""
    if len(predicted.bits) != len(reported.bits):
        raise ValueError("key widths differ")
    match = sum(1 for a, b in zip(predicted.bits, reported.bits) if a == b)
    return 100.0 * match / len(predicted.bits)


def compute_bkpa(predicted: Key, correct_keys) -> float:
    """Best KPA over every recorded unlocking key."""
    keys = list(correct_keys)
    if not keys:
        raise ValueError("empty correct-key list")
    return max(compute_kpa(predicted, k) for k in keys)


@dataclass(frozen=True)
class AttackReport:
    circuit: str
    scheme: str
    key_size: int
    max_keys: int
    mode: str
    references: int
    model: str
    kpa: float
    bkpa: float
    seed: int
    predicted: Key
    confidences: tuple[float, ...]
    seen_rate: float  # fraction of target features the model saw in training


def run_attack(
    target: LockedCircuit,
    rp: ReferenceParams,
    master_seed: int,
    model_kind: str = "freq",
    feature: FeatureParams = FeatureParams(),
    pool: list[Circuit] | None = None,
) -> AttackReport:
    """End-to-end: references -> features -> model -> prediction -> KPA."""
    refs = generate_references(target, rp, master_seed, pool=pool)
    records = build_training_set(refs, feature)
    if model_kind == "freq":
        model = train_frequency(records)
    elif model_kind == "mlp":
        embedding = "counts" if feature.encoding == "subgraph" else "onehot"
        model = train_mlp(records, seed=derive_seed(master_seed, "mlp"), embedding=embedding)
    else:
        raise AttackError(f"unknown model {model_kind!r}")
    predicted, probs = predict_key(model, target, feature)
    reported = target.reported_key()
    seen = 0.0
    if isinstance(model, FrequencyModel):
        feats = [extract_feature(target.circuit, p, feature) for p in target.key_ports]
        seen = sum(1 for f in feats if model.seen(f)) / len(feats)
    return AttackReport(
        circuit=target.circuit.name,
        scheme=target.scheme.value,
        key_size=len(reported.bits),
        max_keys=rp.max_keys,
        mode=rp.mode,
        references=rp.count,
        model=model_kind,
        kpa=compute_kpa(predicted, reported),
        bkpa=compute_bkpa(predicted, target.correct_keys),
        seed=master_seed,
        predicted=predicted,
        confidences=probs,
        seen_rate=seen,
    )
