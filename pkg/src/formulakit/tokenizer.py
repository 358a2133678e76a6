"""Formula-aware pre-tokenization and BPE with a hard vocabulary budget.

Pre-tokenization lowercases everything and splits punctuation, whitespace
(one visible marker per space), built-in function names, and digits into
atomic units that BPE may never merge into or through. BPE then runs only
over the residual letter runs: string contents, identifiers, sheet names,
column letters. This is what keeps pathologies like a fused `sum(` token
out of the vocabulary by construction.

The trainer recounts pair frequencies from scratch each round. That is
deliberate: it is the direct transcription of the merge rule (most frequent
pair, ties by merged string) and stays auditable against a brute-force
oracle; desk-scale corpora do not need the incremental bookkeeping.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .catalog import FunctionCatalog, default_catalog
from .jsonl import write_json_atomic
from .lexer import TokenKind, lex

SPACE_MARKER = "␣"  # open box, the visible stand-in for one space
MASK_TOKEN = "<mask>"
PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"

DEFAULT_VOCAB_BUDGET = 16_000


class BudgetTooSmall(ValueError):
    pass


@dataclass(frozen=True)
class PreToken:
    text: str
    atomic: bool


def _explode(text: str, catalog: FunctionCatalog, out: list[PreToken]) -> None:
    """Split lowercased residual text into atomic chars and letter runs."""
    run: list[str] = []

    def flush() -> None:
        if run:
            word = "".join(run)
            out.append(PreToken(word, word in catalog))
            run.clear()

    for ch in text:
        if ch.isalpha() or ch == "_":
            run.append(ch)
        else:
            flush()
            if ch.isspace():
                out.append(PreToken(SPACE_MARKER, True))
            else:
                out.append(PreToken(ch, True))
    flush()


def pretokenize(formula: str, catalog: Optional[FunctionCatalog] = None) -> list[PreToken]:
    """Lowercased pretokens; atomic ones are off-limits to BPE merges.

    Built-in function names stay whole; digits, punctuation, operators and
    whitespace markers are single atomic units; letter runs are the only
    non-atomic (mergeable) segments.
    """
    if catalog is None:
        catalog = default_catalog()
    out: list[PreToken] = []
    for tok in lex(formula, catalog):
        text = tok.text.lower()
        if tok.kind is TokenKind.WHITESPACE:
            out.extend(PreToken(SPACE_MARKER, True) for _ in text)
        elif tok.kind is TokenKind.FUNC_NAME:
            out.append(PreToken(text, True))
        elif tok.kind is TokenKind.OPERATOR:
            out.append(PreToken(text, True))
        elif tok.kind in (TokenKind.PUNCT, TokenKind.ERROR):
            out.extend(PreToken(ch, True) for ch in text)
        else:
            # Number, CellRef, StringLit, Identifier, SheetName: split by
            # character class so digits/punctuation inside stay atomic.
            _explode(text, catalog, out)
    return out


@dataclass
class TokenizerModel:
    vocab: list[str]
    merges: list[tuple[str, str]]
    specials: dict[str, str]
    budget: int
    _token_to_id: dict[str, int] = field(repr=False, default_factory=dict)
    _merge_rank: dict[tuple[str, str], int] = field(repr=False, default_factory=dict)

    def __post_init__(self) -> None:
        self._token_to_id = {tok: i for i, tok in enumerate(self.vocab)}
        self._merge_rank = {pair: i for i, pair in enumerate(self.merges)}

    @property
    def unk_id(self) -> int:
        return self._token_to_id[self.specials["unknown"]]

    @property
    def mask_id(self) -> int:
        return self._token_to_id[self.specials["mask_token"]]

    def id_of(self, token: str) -> Optional[int]:
        return self._token_to_id.get(token)

    def to_json(self) -> dict:
        return {
            "vocab": list(self.vocab),
            "merges": [list(pair) for pair in self.merges],
            "specials": {
                "mask_token": self.specials["mask_token"],
                "pad": self.specials["pad"],
                "unknown": self.specials["unknown"],
                "space_marker": self.specials["space_marker"],
            },
            "budget": self.budget,
        }

    def save(self, path: str | Path) -> None:
        write_json_atomic(path, self.to_json())

    @classmethod
    def from_json(cls, obj: dict) -> "TokenizerModel":
        return cls(
            vocab=list(obj["vocab"]),
            merges=[(left, right) for left, right in obj["merges"]],
            specials=dict(obj["specials"]),
            budget=int(obj["budget"]),
        )

    @classmethod
    def load(cls, path: str | Path) -> "TokenizerModel":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


def _default_specials() -> dict[str, str]:
    return {"mask_token": MASK_TOKEN, "pad": PAD_TOKEN, "unknown": UNK_TOKEN,
            "space_marker": SPACE_MARKER}


def _merge_word(word: tuple[str, ...], left: str, right: str) -> tuple[str, ...]:
    """One greedy left-to-right application of a single merge."""
    out: list[str] = []
    i = 0
    n = len(word)
    merged = left + right
    while i < n:
        if i + 1 < n and word[i] == left and word[i + 1] == right:
            out.append(merged)
            i += 2
        else:
            out.append(word[i])
            i += 1
    return tuple(out)


def train_bpe(
    corpus: Iterable[str],
    budget: int = DEFAULT_VOCAB_BUDGET,
    catalog: Optional[FunctionCatalog] = None,
) -> TokenizerModel:
    """Learn a merge table over the corpus's residual segments.

    Repeatedly merges the most frequent adjacent pair inside non-atomic
    segments until the vocabulary reaches the budget or no pair occurs
    twice. Ties break by the lexicographic order of the merged string, then
    of the pair, so a fixed corpus yields a bit-identical model.
    """
    if catalog is None:
        catalog = default_catalog()
    specials = _default_specials()

    atomic_inventory: set[str] = {SPACE_MARKER}
    words: dict[tuple[str, ...], int] = {}
    for formula in corpus:
        for pre in pretokenize(formula, catalog):
            if pre.atomic:
                atomic_inventory.add(pre.text)
            else:
                word = tuple(pre.text)
                words[word] = words.get(word, 0) + 1

    alphabet = {ch for word in words for ch in word}
    base = sorted(atomic_inventory | alphabet)
    num_special_rows = 3  # pad, unknown, mask; the space marker lives in base
    floor = num_special_rows + len(base)
    if budget < floor:
        raise BudgetTooSmall(
            f"vocab budget {budget} is below the minimum floor {floor} "
            f"(= {num_special_rows} specials + {len(base)} atomic/alphabet entries "
            f"observed in the corpus)")

    vocab: list[str] = [specials["pad"], specials["unknown"], specials["mask_token"]]
    vocab.extend(base)
    in_vocab = set(vocab)
    merges: list[tuple[str, str]] = []

    while len(vocab) < budget:
        counts: dict[tuple[str, str], int] = {}
        for word, freq in words.items():
            for pair in zip(word, word[1:]):
                counts[pair] = counts.get(pair, 0) + freq
        if not counts:
            break
        best_count = max(counts.values())
        if best_count < 2:
            break
        best = min(
            (pair for pair, c in counts.items() if c == best_count),
            key=lambda p: (p[0] + p[1], p),
        )
        merges.append(best)
        merged = best[0] + best[1]
        if merged not in in_vocab:
            vocab.append(merged)
            in_vocab.add(merged)
        new_words: dict[tuple[str, ...], int] = {}
        for word, freq in words.items():
            new_word = _merge_word(word, best[0], best[1])
            new_words[new_word] = new_words.get(new_word, 0) + freq
        words = new_words

    return TokenizerModel(vocab=vocab, merges=merges, specials=specials, budget=budget)


def _bpe_apply(chars: Sequence[str], rank: dict[tuple[str, str], int]) -> list[str]:
    """Apply learned merges in rank order to one segment."""
    word = list(chars)
    while len(word) >= 2:
        best_rank: Optional[int] = None
        best_pair: Optional[tuple[str, str]] = None
        for pair in zip(word, word[1:]):
            r = rank.get(pair)
            if r is not None and (best_rank is None or r < best_rank):
                best_rank = r
                best_pair = pair
        if best_pair is None:
            break
        word = list(_merge_word(tuple(word), best_pair[0], best_pair[1]))
    return word


def _split_on_specials(text: str, specials: Iterable[str]) -> list[tuple[str, bool]]:
    """Chunk text around special-token literals like <mask>."""
    markers = sorted({s for s in specials if s}, key=len, reverse=True)
    chunks: list[tuple[str, bool]] = []
    i = 0
    plain_start = 0
    n = len(text)
    while i < n:
        hit = next((m for m in markers if text.startswith(m, i)), None)
        if hit is None:
            i += 1
            continue
        if plain_start < i:
            chunks.append((text[plain_start:i], False))
        chunks.append((hit, True))
        i += len(hit)
        plain_start = i
    if plain_start < n:
        chunks.append((text[plain_start:], False))
    return chunks


def encode(
    model: TokenizerModel,
    formula: str,
    catalog: Optional[FunctionCatalog] = None,
) -> list[int]:
    """Token ids for a formula; out-of-vocabulary pieces map to <unk>.

    Occurrences of the special-token literals (e.g. a <mask> inserted by an
    objective generator) map to their special ids instead of being shredded
    into characters.
    """
    if catalog is None:
        catalog = default_catalog()
    unk = model.unk_id
    ids: list[int] = []
    special_literals = (model.specials["mask_token"], model.specials["pad"],
                        model.specials["unknown"])
    for chunk, is_special in _split_on_specials(formula, special_literals):
        if is_special:
            ids.append(model.id_of(chunk))  # type: ignore[arg-type]
            continue
        for pre in pretokenize(chunk, catalog):
            if pre.atomic:
                tok_id = model.id_of(pre.text)
                ids.append(tok_id if tok_id is not None else unk)
            else:
                for piece in _bpe_apply(tuple(pre.text), model._merge_rank):
                    tok_id = model.id_of(piece)
                    ids.append(tok_id if tok_id is not None else unk)
    return ids


def decode(model: TokenizerModel, ids: Sequence[int]) -> str:
    """Token ids back to text; space markers render as single spaces.

    Lossy where encoding was: case is gone and every whitespace character
    came back as a plain space. Raises ValueError on an out-of-range id,
    naming the offending position.
    """
    marker = model.specials["space_marker"]
    size = len(model.vocab)
    parts: list[str] = []
    for pos, token_id in enumerate(ids):
        if not isinstance(token_id, int) or token_id < 0 or token_id >= size:
            raise ValueError(f"token id {token_id!r} out of range [0, {size}) at position {pos}")
        text = model.vocab[token_id]
        parts.append(" " if text == marker else text)
    return "".join(parts)
