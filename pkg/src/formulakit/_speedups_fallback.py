"""Pure-Python twin of the compiled kernels in _speedups.pyx.

Selected at import time by formulakit.similarity when the extension is
missing (or FORMULAKIT_PURE=1). Same signatures, same results, slower.
"""

from __future__ import annotations

from typing import Sequence


def levenshtein_ids(a: Sequence[int], b: Sequence[int]) -> int:
    """Edit distance between two sequences of integer token ids."""
    la, lb = len(a), len(b)
    if la == 0:
        return lb
    if lb == 0:
        return la
    prev = list(range(lb + 1))
    for i in range(la):
        ai = a[i]
        cur = [i + 1] + [0] * lb
        for j in range(lb):
            sub = prev[j] + (0 if ai == b[j] else 1)
            dele = prev[j + 1] + 1
            ins = cur[j] + 1
            best = sub if sub < dele else dele
            if ins < best:
                best = ins
            cur[j + 1] = best
        prev = cur
    return prev[lb]


def similarities_to_many(query: Sequence[int], corpus: Sequence[Sequence[int]]) -> list[float]:
    """1 - normalized edit distance from one query to each corpus sequence.

    Two empty sequences count as identical (similarity 1.0).
    """
    lq = len(query)
    out = []
    for seq in corpus:
        denom = max(lq, len(seq))
        if denom == 0:
            out.append(1.0)
        else:
            out.append(1.0 - levenshtein_ids(query, seq) / denom)
    return out
