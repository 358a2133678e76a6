"""Stable seed derivation for deterministic, worker-count-independent runs.

Python's builtin hash() is salted per process, so per-record seeds are
derived with blake2b over length-prefixed parts. The same (base seed,
workbook, sheet, ordinal) tuple yields the same rng stream on any machine
and under any degree of parallelism.
"""

from __future__ import annotations

import hashlib
import random
from typing import Union

Part = Union[int, str, bytes]


def _encode(part: Part) -> bytes:
    if isinstance(part, bytes):
        data = part
    elif isinstance(part, int):
        data = str(part).encode("ascii")
    else:
        data = part.encode("utf-8")
    return len(data).to_bytes(4, "little") + data


def derive_seed(*parts: Part) -> int:
    """Mix parts into a 63-bit seed, stable across processes and platforms."""
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        h.update(_encode(part))
    return int.from_bytes(h.digest(), "little") >> 1


def derive_rng(*parts: Part) -> random.Random:
    return random.Random(derive_seed(*parts))
