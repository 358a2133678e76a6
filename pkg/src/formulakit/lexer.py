"""Excel-formula lexer plus the derived views: sketch, normalize, check.

The lexer is total: every input produces a token list whose concatenated
texts reproduce the input byte-for-byte. Characters that fit no rule become
single-character Error tokens instead of aborting, so corpus ingestion never
trips over one bad formula. Spans are byte offsets into the UTF-8 encoding
of the source.

Out of scope: array formulas, structured references, R1C1 notation, lambda,
formula evaluation, locale-specific separators.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .catalog import FunctionCatalog, default_catalog


class TokenKind(Enum):
    CELL_REF = "CellRef"
    NUMBER = "Number"
    STRING_LIT = "StringLit"
    FUNC_NAME = "FuncName"
    IDENTIFIER = "Identifier"
    SHEET_NAME = "SheetName"
    PUNCT = "Punct"
    OPERATOR = "Operator"
    WHITESPACE = "Whitespace"
    ERROR = "Error"


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    text: str
    start: int  # byte offset, inclusive
    end: int  # byte offset, exclusive

    @property
    def span(self) -> tuple[int, int]:
        return (self.start, self.end)


class DiagnosticCode(Enum):
    UNBALANCED_PARENS = "UnbalancedParens"
    BAD_ARITY = "BadArity"
    UNTERMINATED_STRING = "UnterminatedString"
    INVALID_OPERATOR_SEQUENCE = "InvalidOperatorSequence"
    LEX_ERROR = "LexError"


@dataclass(frozen=True)
class Diagnostic:
    code: DiagnosticCode
    start: int
    end: int
    message: str


# One master pattern, alternatives ordered so the longest sensible match wins.
# CELLREF carries a lookahead so `A1B2` falls through to NAME, and NUMBER is
# tried before CELLREF so `1E5` reads as a number, not a cell reference.
_MASTER = re.compile(
    r"""
    (?P<WS>[ \t\r\n]+)
  | (?P<STRING>"(?:[^"]|"")*")
  | (?P<SHEETQ>'(?:[^']|'')*')
  | (?P<NUMBER>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?|\.\d+)
  | (?P<CELLREF>\$?[A-Za-z]{1,3}\$?\d+(?![A-Za-z0-9_.]))
  | (?P<NAME>[A-Za-z_][A-Za-z0-9_.]*)
  | (?P<OP2><=|>=|<>)
  | (?P<OP1>[=<>+\-*/^&%])
  | (?P<PUNCT>[(),:!{}])
  | (?P<BADSTRING>"(?:[^"]|"")*\Z)
  | (?P<BADSHEET>'(?:[^']|'')*\Z)
    """,
    re.VERBOSE,
)

_GROUP_KIND = {
    "WS": TokenKind.WHITESPACE,
    "STRING": TokenKind.STRING_LIT,
    "SHEETQ": TokenKind.SHEET_NAME,
    "NUMBER": TokenKind.NUMBER,
    "CELLREF": TokenKind.CELL_REF,
    "NAME": TokenKind.IDENTIFIER,
    "OP2": TokenKind.OPERATOR,
    "OP1": TokenKind.OPERATOR,
    "PUNCT": TokenKind.PUNCT,
    "BADSTRING": TokenKind.STRING_LIT,  # unterminated; check() reports it
    "BADSHEET": TokenKind.SHEET_NAME,
}

# Operators that cannot act as a prefix (unary) operator. `+`/`-` can, and
# `%` is postfix, so only these make an operator pair ill-formed.
_BINARY_ONLY_OPS = frozenset({"*", "/", "^", "&", "<", ">", "=", "<=", ">=", "<>"})

# Two operands with nothing between them means a dropped operator or range
# colon. FuncName is excluded: a space between a function name and `(` is
# tolerated, and SheetName is handled by the `!` rule.
_OPERAND_KINDS = frozenset({
    TokenKind.CELL_REF, TokenKind.NUMBER, TokenKind.STRING_LIT, TokenKind.IDENTIFIER,
})

# An identifier that reads as two cell references fused together, e.g. the
# `A1A10` left behind by a deleted range colon.
_GLUED_REFS = re.compile(r"^\$?[A-Za-z]{1,3}\$?\d+\$?[A-Za-z]{1,3}\$?\d+$")


def lex(formula: str, catalog: Optional[FunctionCatalog] = None) -> list[Token]:
    """Split a formula into tokens. Total: never raises on malformed input.

    A leading `=` lexes as Operator. Unknown characters become 1-char Error
    tokens. FuncName is assigned to identifiers that appear in the catalog
    and are followed (ignoring whitespace) by `(`.
    """
    if catalog is None:
        catalog = default_catalog()
    raw: list[tuple[TokenKind, str]] = []
    pos = 0
    n = len(formula)
    while pos < n:
        m = _MASTER.match(formula, pos)
        if m is None:
            raw.append((TokenKind.ERROR, formula[pos]))
            pos += 1
            continue
        kind = _GROUP_KIND[m.lastgroup]  # type: ignore[index]
        raw.append((kind, m.group()))
        pos = m.end()

    # Second pass: contextual classification of identifier-like tokens.
    count = len(raw)
    next_solid: list[Optional[str]] = [None] * count
    following: Optional[str] = None
    for i in range(count - 1, -1, -1):
        next_solid[i] = following
        if raw[i][0] is not TokenKind.WHITESPACE:
            following = raw[i][1]

    tokens: list[Token] = []
    byte_pos = 0
    for i, (kind, text) in enumerate(raw):
        if kind is TokenKind.IDENTIFIER:
            if i + 1 < count and raw[i + 1][1] == "!":
                kind = TokenKind.SHEET_NAME
            elif next_solid[i] == "(" and text.lower() in catalog:
                kind = TokenKind.FUNC_NAME
        elif kind is TokenKind.CELL_REF and i + 1 < count and raw[i + 1][1] == "!":
            # A ref-shaped name directly before `!` is a sheet reference.
            kind = TokenKind.SHEET_NAME
        end = byte_pos + len(text.encode("utf-8"))
        tokens.append(Token(kind, text, byte_pos, end))
        byte_pos = end
    return tokens


_SKETCH_PLACEHOLDER = {
    TokenKind.NUMBER: "number",
    TokenKind.STRING_LIT: "string",
    TokenKind.CELL_REF: "cell",
}


def sketch(formula: str) -> str:
    """Structural fingerprint: constants and cell refs by token type.

    Numbers map to `number`, string literals to `string`, cell references
    to `cell`; whitespace is dropped; everything else stays verbatim.
    Sheet-qualified refs keep their sheet tokens and sketch only the ref.
    """
    parts = []
    for tok in lex(formula):
        if tok.kind is TokenKind.WHITESPACE:
            continue
        parts.append(_SKETCH_PLACEHOLDER.get(tok.kind, tok.text))
    return "".join(parts)


_UPPERCASED_KINDS = frozenset({
    TokenKind.CELL_REF,
    TokenKind.FUNC_NAME,
    TokenKind.IDENTIFIER,
    TokenKind.SHEET_NAME,
})


def normalize(formula: str) -> str:
    """Comparison form: whitespace removed, refs and identifiers upper-cased.

    String literal contents are left untouched. Idempotent.
    """
    parts = []
    for tok in lex(formula):
        if tok.kind is TokenKind.WHITESPACE:
            continue
        if tok.kind in _UPPERCASED_KINDS:
            parts.append(tok.text.upper())
        else:
            parts.append(tok.text)
    return "".join(parts)


def check(formula: str, catalog: Optional[FunctionCatalog] = None) -> list[Diagnostic]:
    """Lightweight well-formedness scan; empty list means no issue found.

    Reports unbalanced parentheses, unterminated strings, arity violations
    for catalog functions, ill-formed operator adjacency, and leftover lex
    errors, ordered by span start. Not a full parser: a clean result is a
    necessary, not sufficient, validity condition.
    """
    if catalog is None:
        catalog = default_catalog()
    tokens = lex(formula, catalog)
    diags: list[Diagnostic] = []

    solid = [t for t in tokens if t.kind is not TokenKind.WHITESPACE]

    # Parens.
    depth = 0
    open_stack: list[Token] = []
    for tok in solid:
        if tok.kind is TokenKind.PUNCT and tok.text == "(":
            open_stack.append(tok)
            depth += 1
        elif tok.kind is TokenKind.PUNCT and tok.text == ")":
            if depth == 0:
                diags.append(Diagnostic(
                    DiagnosticCode.UNBALANCED_PARENS, tok.start, tok.end,
                    "closing parenthesis with no matching opener"))
            else:
                depth -= 1
                open_stack.pop()
    for tok in open_stack:
        diags.append(Diagnostic(
            DiagnosticCode.UNBALANCED_PARENS, tok.start, tok.end,
            "unclosed parenthesis"))

    # Strings and sheet quotes that never close.
    for tok in tokens:
        if tok.kind is TokenKind.STRING_LIT and not _closed(tok.text, '"'):
            diags.append(Diagnostic(
                DiagnosticCode.UNTERMINATED_STRING, tok.start, tok.end,
                "string literal is not terminated"))
        elif tok.kind is TokenKind.SHEET_NAME and tok.text.startswith("'") and not _closed(tok.text, "'"):
            diags.append(Diagnostic(
                DiagnosticCode.UNTERMINATED_STRING, tok.start, tok.end,
                "quoted sheet name is not terminated"))

    # Arity of known functions.
    for idx, tok in enumerate(solid):
        if tok.kind is not TokenKind.FUNC_NAME:
            continue
        limits = catalog.get(tok.text)
        if limits is None:
            continue
        argc = _count_args(solid, idx)
        if argc is None:
            continue  # unmatched parens already reported
        lo, hi = limits
        if argc < lo or (hi is not None and argc > hi):
            bound = "unbounded" if hi is None else str(hi)
            diags.append(Diagnostic(
                DiagnosticCode.BAD_ARITY, tok.start, tok.end,
                f"{tok.text.upper()} takes {lo}..{bound} arguments, got {argc}"))

    # Operator adjacency. The second operator of a pair must be able to act
    # as a prefix operator; `%` is postfix so it never invalidates a pair.
    for a, b in zip(solid, solid[1:]):
        if a.kind is TokenKind.OPERATOR and b.kind is TokenKind.OPERATOR:
            if b.text in _BINARY_ONLY_OPS and a.text != "%":
                diags.append(Diagnostic(
                    DiagnosticCode.INVALID_OPERATOR_SEQUENCE, a.start, b.end,
                    f"operator {a.text!r} directly followed by {b.text!r}"))
        elif a.kind is TokenKind.OPERATOR and a.text != "%" \
                and b.kind is TokenKind.PUNCT and b.text in "),":
            diags.append(Diagnostic(
                DiagnosticCode.INVALID_OPERATOR_SEQUENCE, a.start, b.end,
                f"operator {a.text!r} has no right operand"))
        elif a.kind in _OPERAND_KINDS and (b.kind in _OPERAND_KINDS
                                           or b.kind is TokenKind.SHEET_NAME):
            diags.append(Diagnostic(
                DiagnosticCode.INVALID_OPERATOR_SEQUENCE, a.start, b.end,
                "operands with no operator between them"))
        # A comma flush against `)` has a missing operand (e.g. `SUM(A1,)`).
        if a.kind is TokenKind.PUNCT and a.text == "," and b.kind is TokenKind.PUNCT and b.text == ")":
            diags.append(Diagnostic(
                DiagnosticCode.INVALID_OPERATOR_SEQUENCE, a.start, b.end,
                "argument separator directly before closing parenthesis"))

    if solid:
        last = solid[-1]
        if last.kind is TokenKind.OPERATOR and last.text != "%":
            diags.append(Diagnostic(
                DiagnosticCode.INVALID_OPERATOR_SEQUENCE, last.start, last.end,
                f"formula ends with operator {last.text!r}"))

    # Range shape: `:` is only the range operator between two cell refs here
    # (row/column ranges like `1:1` or `A:A` are outside the modeled grammar).
    depth = 0
    for pos, tok in enumerate(solid):
        if tok.kind is TokenKind.PUNCT:
            if tok.text == "(":
                depth += 1
            elif tok.text == ")":
                depth = max(0, depth - 1)
            elif tok.text == ",":
                if depth == 0:
                    diags.append(Diagnostic(
                        DiagnosticCode.INVALID_OPERATOR_SEQUENCE, tok.start, tok.end,
                        "argument separator outside any function call"))
            elif tok.text == ":":
                prev_ok = pos > 0 and solid[pos - 1].kind is TokenKind.CELL_REF
                next_ok = pos + 1 < len(solid) and solid[pos + 1].kind is TokenKind.CELL_REF
                if not (prev_ok and next_ok):
                    diags.append(Diagnostic(
                        DiagnosticCode.INVALID_OPERATOR_SEQUENCE, tok.start, tok.end,
                        "range colon not between two cell references"))
        elif tok.kind is TokenKind.IDENTIFIER and _GLUED_REFS.match(tok.text):
            diags.append(Diagnostic(
                DiagnosticCode.INVALID_OPERATOR_SEQUENCE, tok.start, tok.end,
                "two cell references fused together"))
        elif tok.kind is TokenKind.SHEET_NAME and tok.text.startswith("'"):
            nxt = solid[pos + 1] if pos + 1 < len(solid) else None
            if nxt is None or nxt.text != "!":
                diags.append(Diagnostic(
                    DiagnosticCode.INVALID_OPERATOR_SEQUENCE, tok.start, tok.end,
                    "quoted sheet name not followed by '!'"))

    for tok in tokens:
        if tok.kind is TokenKind.ERROR:
            diags.append(Diagnostic(
                DiagnosticCode.LEX_ERROR, tok.start, tok.end,
                f"unrecognized character {tok.text!r}"))

    diags.sort(key=lambda d: (d.start, d.end, d.code.value))
    return diags


def _closed(text: str, quote: str) -> bool:
    """True if a quote-delimited token text has a proper closing quote."""
    if len(text) < 2 or not text.startswith(quote):
        return False
    i = 1
    while i < len(text):
        if text[i] == quote:
            if i + 1 < len(text) and text[i + 1] == quote:
                i += 2  # doubled quote = escaped
                continue
            return i == len(text) - 1
        i += 1
    return False


def _count_args(solid: list[Token], func_idx: int) -> Optional[int]:
    """Number of top-level arguments of the call starting at solid[func_idx].

    Returns None when the opening paren is missing or never closes.
    """
    i = func_idx + 1
    if i >= len(solid) or solid[i].text != "(":
        return None
    depth = 1
    commas = 0
    saw_content = False
    i += 1
    while i < len(solid):
        t = solid[i]
        if t.kind is TokenKind.PUNCT and t.text == "(":
            depth += 1
            saw_content = True
        elif t.kind is TokenKind.PUNCT and t.text == ")":
            depth -= 1
            if depth == 0:
                if commas == 0 and not saw_content:
                    return 0
                return commas + 1
        elif t.kind is TokenKind.PUNCT and t.text == "," and depth == 1:
            commas += 1
        else:
            saw_content = True
        i += 1
    return None
