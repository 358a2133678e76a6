"""Token-level edit similarity with a compiled kernel when available.

At import time the Cython extension (formulakit._speedups) is preferred;
the pure-Python fallback is used when the extension was not built or when
FORMULAKIT_PURE=1 is set (useful for benchmarking the two back to back).
"""

from __future__ import annotations

import os
from typing import Sequence

from . import lexer

if os.environ.get("FORMULAKIT_PURE") == "1":
    from . import _speedups_fallback as _impl
    KERNEL_BACKEND = "python"
else:
    try:
        from . import _speedups as _impl  # type: ignore[attr-defined]
        KERNEL_BACKEND = "c"
    except ImportError:
        from . import _speedups_fallback as _impl
        KERNEL_BACKEND = "python"

levenshtein_ids = _impl.levenshtein_ids
similarities_to_many = _impl.similarities_to_many


def formula_token_ids(formula: str, intern: dict[str, int]) -> tuple[int, ...]:
    """Non-whitespace lexer token texts interned to ids via a shared dict."""
    ids = []
    for tok in lexer.lex(formula):
        if tok.kind is lexer.TokenKind.WHITESPACE:
            continue
        tok_id = intern.get(tok.text)
        if tok_id is None:
            tok_id = len(intern)
            intern[tok.text] = tok_id
        ids.append(tok_id)
    return tuple(ids)


def formula_token_ids_frozen(formula: str, intern: dict[str, int]) -> tuple[int, ...]:
    """Like formula_token_ids but read-only: unseen texts get overlay ids
    past the shared table instead of mutating it (keeps queries pure)."""
    overlay: dict[str, int] = {}
    ids = []
    for tok in lexer.lex(formula):
        if tok.kind is lexer.TokenKind.WHITESPACE:
            continue
        tok_id = intern.get(tok.text)
        if tok_id is None:
            tok_id = overlay.get(tok.text)
            if tok_id is None:
                tok_id = len(intern) + len(overlay)
                overlay[tok.text] = tok_id
        ids.append(tok_id)
    return tuple(ids)


def token_edit_similarity(a: str, b: str) -> float:
    """Levenshtein similarity over non-whitespace lexer tokens, in [0, 1].

    1 - distance / max(len_a, len_b); two empty token sequences give 1.0.
    Symmetric, and 1.0 exactly when the token sequences are equal.
    """
    intern: dict[str, int] = {}
    ids_a = formula_token_ids(a, intern)
    ids_b = formula_token_ids(b, intern)
    denom = max(len(ids_a), len(ids_b))
    if denom == 0:
        return 1.0
    return 1.0 - levenshtein_ids(ids_a, ids_b) / denom


def similarity_ids(a: Sequence[int], b: Sequence[int]) -> float:
    """Similarity over pre-interned id sequences (hot path for full scans)."""
    denom = max(len(a), len(b))
    if denom == 0:
        return 1.0
    return 1.0 - levenshtein_ids(a, b) / denom
