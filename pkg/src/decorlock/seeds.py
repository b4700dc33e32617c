"""Deterministic seed derivation.

Every randomized stage gets its own seed derived by hashing the master
seed with stage labels, so runs are reproducible end to end and adding a
stage never perturbs the streams of existing ones.
"""
from __future__ import annotations

import hashlib
import random

import numpy as np


def derive_seed(master: int, *labels: int | str) -> int:
    """Stable 64-bit seed from a master seed and a label path."""
    h = hashlib.sha256()
    h.update(str(int(master)).encode())
    for lab in labels:
        h.update(b"/")
        h.update(str(lab).encode())
    return int.from_bytes(h.digest()[:8], "big")


def rng_for(master: int, *labels: int | str) -> random.Random:
    return random.Random(derive_seed(master, *labels))


def np_rng_for(master: int, *labels: int | str) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master, *labels))


def np_rng_from(rng: random.Random) -> np.random.Generator:
    """Split a numpy generator off a Python one without disturbing callers
    that keep drawing from ``rng`` afterwards (one draw is consumed)."""
    return np.random.default_rng(rng.getrandbits(64))
