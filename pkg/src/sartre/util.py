"""Seed derivation, canonical JSON, and small shared helpers."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _splitmix64(z: int) -> int:
    z = (z + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(master: int, *path: int) -> int:
    """Mix a master seed with an index path into a new 64-bit seed.

    This is the published derivation rule for every sub-stream in the
    package (per-trial, per-variable, per-tree). It is a pure function of
    (master, path), so adding trials or variables never perturbs the
    streams of earlier ones. The state is hashed before each combine, so
    (master, k) and (master ^ k ^ k', k') cannot collide the way a bare
    xor-then-hash would.
    """
    s = master & _MASK64
    for k in path:
        s = _splitmix64(_splitmix64(s) ^ (k & _MASK64))
    return s


def as_rng(seed: int | np.random.Generator) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def canonical_json(obj: Any) -> str:
    """Serialize deterministically: sorted keys, fixed indent, repr floats."""
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False)


def canonical_json_line(obj: Any) -> str:
    """Single-line deterministic serialization (for JSONL rows)."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path: str | Path) -> str:
    return sha256_bytes(Path(path).read_bytes())
