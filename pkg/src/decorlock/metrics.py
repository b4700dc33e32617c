"""Overhead accounting, PCA projection of feature sets, report emission.

Report files are byte-stable for fixed inputs: nothing here reads the
clock; callers that want a timestamp pass one in explicitly.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from .netlist import Circuit, gate_count

CSV_COLUMNS = (
    "circuit",
    "scheme",
    "key_size",
    "N",
    "mode",
    "references",
    "kpa",
    "bkpa",
    "overhead_percent",
    "seed",
)


@dataclass(frozen=True)
class OverheadRecord:
    circuit: str
    scheme: str
    base_gates: int
    locked_gates: int

    @property
    def percent(self) -> float:
        return 100.0 * (self.locked_gates - self.base_gates) / self.base_gates


def gate_overhead(original: Circuit, locked: Circuit, scheme: str = "") -> OverheadRecord:
    """Relative gate-count increase, both sides counted after 2-input
    normalization so tree decompositions do not skew the ratio."""
    base = gate_count(original)
    if base == 0:
        raise ValueError("original circuit has no gates")
    return OverheadRecord(
        circuit=original.name,
        scheme=scheme,
        base_gates=base,
        locked_gates=gate_count(locked),
    )


@dataclass(frozen=True)
class PcaProjection:
    """2-D projection of one-hot feature rows. ``explained`` holds the
    variance share of each component; ``degenerate`` flags rank < 2 input
    (second coordinate zeroed)."""

    points: tuple[tuple[float, float, int], ...]
    explained: tuple[float, float]
    degenerate: bool = False


def _power_iteration(cov: np.ndarray, tol: float = 1e-9, max_iter: int = 10_000) -> tuple[np.ndarray, float]:
    d = cov.shape[0]
    v = np.ones(d) + 1e-3 * np.arange(d)  # fixed start, never orthogonal by accident
    v /= np.linalg.norm(v)
    for _ in range(max_iter):
        w = cov @ v
        nw = np.linalg.norm(w)
        if nw < tol:
            return v, 0.0
        w /= nw
        if np.linalg.norm(w - v) < tol or np.linalg.norm(w + v) < tol:
            v = w
            break
        v = w
    lam = float(v @ cov @ v)
    return v, lam


def pca_top2(features: list[tuple[int, ...]], labels: list[int], n_codes: int = 12) -> PcaProjection:
    """Project one-hot expanded feature vectors onto the top two principal
    components (power iteration with deflation, tolerance 1e-9).

    Sign convention: each component's largest-magnitude coordinate is made
    positive, so projections are reproducible across runs and platforms.
    """
    if len(features) != len(labels):
        raise ValueError("features/labels length mismatch")
    if len(features) < 2:
        raise ValueError("need at least 2 rows")
    L = len(features[0])
    X = np.zeros((len(features), L * n_codes), dtype=np.float64)
    for i, f in enumerate(features):
        if len(f) != L:
            raise ValueError("mixed feature lengths")
        for j, code in enumerate(f):
            X[i, j * n_codes + code] = 1.0
    X -= X.mean(axis=0)
    cov = (X.T @ X) / (len(features) - 1)
    total = float(np.trace(cov))
    if total <= 0.0:
        # all rows identical: fully degenerate, project to origin
        pts = tuple((0.0, 0.0, int(l)) for l in labels)
        return PcaProjection(points=pts, explained=(0.0, 0.0), degenerate=True)

    v1, lam1 = _power_iteration(cov)
    cov2 = cov - lam1 * np.outer(v1, v1)
    v2, lam2 = _power_iteration(cov2)
    v2 -= (v2 @ v1) * v1  # re-orthogonalize against drift
    n2 = np.linalg.norm(v2)
    degenerate = lam2 <= 1e-9 or n2 < 1e-9
    if degenerate:
        v2 = np.zeros_like(v1)
        lam2 = 0.0
    else:
        v2 /= n2

    def fix_sign(v: np.ndarray) -> np.ndarray:
        if len(v) and v[np.argmax(np.abs(v))] < 0:
            return -v
        return v

    v1 = fix_sign(v1)
    v2 = fix_sign(v2)
    p1 = X @ v1
    p2 = X @ v2
    pts = tuple((float(a), float(b), int(l)) for a, b, l in zip(p1, p2, labels))
    return PcaProjection(
        points=pts,
        explained=(lam1 / total, lam2 / total),
        degenerate=degenerate,
    )


def best_threshold_accuracy(values, labels) -> float:
    """Best accuracy of a single threshold on a 1-D projection, either
    polarity. 0.5 means unseparable, 1.0 clean split."""
    pairs = sorted(zip(values, labels))
    n = len(pairs)
    if n == 0:
        raise ValueError("empty input")
    ones = sum(l for _, l in pairs)
    best = max(ones, n - ones)  # degenerate thresholds at +-inf
    left_ones = 0
    for i in range(1, n):
        left_ones += pairs[i - 1][1]
        if pairs[i][0] == pairs[i - 1][0]:
            continue  # a cut can only fall between distinct values
        # threshold between i-1 and i: left predicted 0 / right 1, and flip
        acc_a = (i - left_ones) + (ones - left_ones)
        acc_b = left_ones + ((n - i) - (ones - left_ones))
        best = max(best, acc_a, acc_b)
    return best / n


@dataclass(frozen=True)
class RunRecord:
    circuit: str
    scheme: str
    key_size: int
    max_keys: int  # 0 for base schemes, N for enhanced ones
    mode: str
    references: int
    kpa: float
    bkpa: float
    overhead_percent: float
    seed: int


def _fmt(x: float) -> str:
    return format(x, ".6g")


def emit_report(
    records: list[RunRecord],
    json_path=None,
    csv_path=None,
    tool: dict | None = None,
    timestamp: str | None = None,
) -> tuple[str, str]:
    """Render records to canonical JSON and CSV strings (and optionally
    files). Output bytes depend only on the arguments."""
    rows = []
    for r in records:
        rows.append(
            {
                "circuit": r.circuit,
                "scheme": r.scheme,
                "key_size": r.key_size,
                "N": r.max_keys,
                "mode": r.mode,
                "references": r.references,
                "kpa": round(r.kpa, 6),
                "bkpa": round(r.bkpa, 6),
                "overhead_percent": round(r.overhead_percent, 6),
                "seed": r.seed,
            }
        )
    doc: dict = {"schema_version": 1, "tool": tool or {"name": "decorlock"}, "runs": rows}
    if timestamp is not None:
        doc["generated_at"] = timestamp
    json_text = json.dumps(doc, indent=2, sort_keys=True) + "\n"

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in rows:
        w.writerow(
            [
                row["circuit"],
                row["scheme"],
                row["key_size"],
                row["N"],
                row["mode"],
                row["references"],
                _fmt(row["kpa"]),
                _fmt(row["bkpa"]),
                _fmt(row["overhead_percent"]),
                row["seed"],
            ]
        )
    csv_text = buf.getvalue()

    if json_path:
        with open(json_path, "w", newline="\n") as fh:
            fh.write(json_text)
    if csv_path:
        with open(csv_path, "w", newline="\n") as fh:
            fh.write(csv_text)
    return json_text, csv_text
