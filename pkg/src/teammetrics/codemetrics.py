"""Code-based metrics for one file version: size, structure, and Halstead.

The tokenizer is a lightweight lexer, not a parser: it strips comments and
whitespace, recognises strings, numbers, identifiers, and operator symbols,
and classifies every token as operand, operator, or other. That is exactly
the granularity the metrics need.

Classification rules (fixed by the profile):
  * punctuation, operator symbols, and flow keywords (``return``, ``if``)
    are operators;
  * identifiers, numeric and string literals, and value keywords are
    operands;
  * definition keywords (``def``, ``class``) and the name being defined
    are "other" -- they belong to neither Halstead class.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import log2

from .profiles import OPERAND, OPERATOR, OTHER, LanguageProfile


@dataclass(frozen=True)
class Token:
    text: str
    cls: str  # operand | operator | other
    line: int


@dataclass(frozen=True)
class FileMetricVector:
    """Metric vector for one file version (or a componentwise |delta|)."""

    nloc: int = 0
    token_count: int = 0
    function_count: int = 0
    cyclomatic: int = 0
    eta1: int = 0  # distinct operators
    eta2: int = 0  # distinct operands
    n1: int = 0  # total operators
    n2: int = 0  # total operands
    effort: float = 0.0

    def __add__(self, other: "FileMetricVector") -> "FileMetricVector":
        return FileMetricVector(
            nloc=self.nloc + other.nloc,
            token_count=self.token_count + other.token_count,
            function_count=self.function_count + other.function_count,
            cyclomatic=self.cyclomatic + other.cyclomatic,
            eta1=self.eta1 + other.eta1,
            eta2=self.eta2 + other.eta2,
            n1=self.n1 + other.n1,
            n2=self.n2 + other.n2,
            effort=self.effort + other.effort,
        )


ZERO_VECTOR = FileMetricVector()

METRIC_FIELDS = (
    "nloc", "token_count", "function_count", "cyclomatic",
    "eta1", "eta2", "n1", "n2", "effort",
)


def halstead_effort(eta1: int, eta2: int, n1: int, n2: int) -> float:
    """Halstead effort E = (N1+N2) * log2(eta1+eta2) * (eta1/2) * (N2/eta2).

    Degenerate inputs (no operands, or an empty vocabulary) yield 0.
    """
    if eta2 == 0 or eta1 + eta2 == 0:
        return 0.0
    return (n1 + n2) * log2(eta1 + eta2) * (eta1 / 2.0) * (n2 / eta2)


# -- lexing -------------------------------------------------------------------

_IDENT_START = frozenset("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_")
_IDENT_CONT = _IDENT_START | frozenset("0123456789")
_DIGITS = frozenset("0123456789")


@dataclass(frozen=True)
class _RawToken:
    text: str
    kind: str  # ident | number | string | symbol
    line: int


def _scan(text: str, profile: LanguageProfile) -> tuple[list[_RawToken], list[str]]:
    tokens: list[_RawToken] = []
    warnings: list[str] = []
    i, line = 0, 1
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            i += 1
            continue
        if ch in " \t\r\f\v":
            i += 1
            continue
        if ch == "\\" and i + 1 < n and text[i + 1] == "\n":
            line += 1
            i += 2  # explicit line continuation
            continue

        matched = False
        for marker in profile.line_comments:
            if text.startswith(marker, i):
                end = text.find("\n", i)
                i = n if end < 0 else end
                matched = True
                break
        if matched:
            continue

        for opener, closer in profile.block_comments:
            if text.startswith(opener, i):
                end = text.find(closer, i + len(opener))
                if end < 0:
                    warnings.append(f"line {line}: unterminated block comment")
                    line += text.count("\n", i)
                    i = n
                else:
                    line += text.count("\n", i, end)
                    i = end + len(closer)
                matched = True
                break
        if matched:
            continue

        for delim in profile.string_delims:
            if text.startswith(delim, i):
                tok, i, line, warn = _scan_string(text, i, line, delim, profile)
                tokens.append(tok)
                if warn:
                    warnings.append(warn)
                matched = True
                break
        if matched:
            continue

        if ch in _IDENT_START:
            j = i + 1
            while j < n and text[j] in _IDENT_CONT:
                j += 1
            tokens.append(_RawToken(text[i:j], "ident", line))
            i = j
            continue

        if ch in _DIGITS:
            j = i + 1
            while j < n:
                c = text[j]
                if c in _IDENT_CONT or c == ".":
                    j += 1
                elif c in "+-" and text[j - 1] in "eE" and text[i] in _DIGITS:
                    j += 1
                else:
                    break
            tokens.append(_RawToken(text[i:j], "number", line))
            i = j
            continue

        for sym in profile.operator_symbols:
            if text.startswith(sym, i):
                tokens.append(_RawToken(sym, "symbol", line))
                i += len(sym)
                matched = True
                break
        if matched:
            continue

        tokens.append(_RawToken(ch, "symbol", line))
        i += 1
    return tokens, warnings


def _scan_string(text, i, line, delim, profile):
    multiline = delim in profile.multiline_strings
    start, start_line = i, line
    j = i + len(delim)
    n = len(text)
    while j < n:
        ch = text[j]
        if ch == "\\" and j + 1 < n:
            if text[j + 1] == "\n":
                line += 1
            j += 2
            continue
        if ch == "\n":
            if not multiline:
                # tolerant recovery: close the literal at end of line
                return (
                    _RawToken(text[start:j], "string", start_line),
                    j, line,
                    f"line {start_line}: unterminated string literal",
                )
            line += 1
            j += 1
            continue
        if text.startswith(delim, j):
            j += len(delim)
            return _RawToken(text[start:j], "string", start_line), j, line, None
        j += 1
    return (
        _RawToken(text[start:], "string", start_line),
        n, line,
        f"line {start_line}: unterminated string literal",
    )


# -- function structure -------------------------------------------------------

@dataclass(frozen=True)
class _Span:
    start: int  # token index of the definition keyword / name
    end: int  # exclusive token index
    name_idx: int | None


_OPEN = {"(": ")", "[": "]", "{": "}"}
_CLOSE = {")", "]", "}"}


def _line_indents(text: str) -> dict[int, int]:
    indents = {}
    for num, raw in enumerate(text.split("\n"), 1):
        stripped = raw.lstrip(" \t")
        if stripped:
            indents[num] = len(raw) - len(stripped)
    return indents


def _indent_spans(tokens, text, profile) -> list[_Span]:
    indents = _line_indents(text)
    spans = []
    for k, tok in enumerate(tokens):
        if tok.kind != "ident" or tok.text not in profile.function_keywords:
            continue
        def_line = tok.line
        def_indent = indents.get(def_line, 0)
        name_idx = next(
            (m for m in range(k + 1, len(tokens)) if tokens[m].kind == "ident"),
            None,
        )
        depth = 0
        end = len(tokens)
        for m in range(k, len(tokens)):
            t = tokens[m]
            if t.line > def_line and depth == 0 and indents.get(t.line, 0) <= def_indent:
                end = m
                break
            if t.kind == "symbol":
                if t.text in _OPEN:
                    depth += 1
                elif t.text in _CLOSE:
                    depth -= 1
        spans.append(_Span(start=k, end=end, name_idx=name_idx))
    return spans


def _match_paren(tokens, start) -> int | None:
    """Index just past the ')' matching the '(' at ``start``; None if unmatched."""
    depth = 0
    for m in range(start, len(tokens)):
        t = tokens[m]
        if t.kind != "symbol":
            continue
        if t.text == "(":
            depth += 1
        elif t.text == ")":
            depth -= 1
            if depth == 0:
                return m + 1
    return None


def _braces_spans(tokens, profile) -> list[_Span]:
    spans = []
    stops = {";", "=", ",", ")", "]", "}"}
    for k, tok in enumerate(tokens):
        if tok.kind != "ident" or tok.text in profile.keywords:
            continue
        if k + 1 >= len(tokens) or tokens[k + 1].text != "(":
            continue
        after = _match_paren(tokens, k + 1)
        if after is None:
            continue
        body = None
        for m in range(after, len(tokens)):
            t = tokens[m]
            if t.kind != "symbol":
                continue
            if t.text == "{":
                body = m
                break
            if t.text in stops:
                break
        if body is None:
            continue
        depth = 0
        end = len(tokens)
        for m in range(body, len(tokens)):
            t = tokens[m]
            if t.kind != "symbol":
                continue
            if t.text == "{":
                depth += 1
            elif t.text == "}":
                depth -= 1
                if depth == 0:
                    end = m + 1
                    break
        # pull the declaration prefix (return type, qualifiers) into the span
        start = k
        boundary = {";", "}", "{", "(", ")", ">"}
        while start > 0 and tokens[start - 1].text not in boundary:
            start -= 1
        spans.append(_Span(start=start, end=end, name_idx=k))
    return spans


def _analyze(text: str, profile: LanguageProfile):
    raw, warnings = _scan(text, profile)
    if profile.function_style == "indent":
        spans = _indent_spans(raw, text, profile)
    else:
        spans = _braces_spans(raw, profile)

    other_idx = {s.name_idx for s in spans if s.name_idx is not None}
    defining = profile.definition_keywords | profile.function_keywords
    for k, tok in enumerate(raw):
        if tok.kind == "ident" and tok.text in defining:
            other_idx.add(k)
            for m in range(k + 1, len(raw)):
                if raw[m].kind == "ident":
                    if raw[m].text not in profile.keywords:
                        other_idx.add(m)
                    break

    tokens = []
    for k, tok in enumerate(raw):
        if k in other_idx:
            cls = OTHER
        elif tok.kind in ("number", "string"):
            cls = OPERAND
        elif tok.kind == "symbol":
            cls = OPERATOR
        elif tok.text in profile.literal_keywords:
            cls = OPERAND
        elif tok.text in profile.keywords:
            cls = OPERATOR
        else:
            cls = OPERAND
        tokens.append(Token(text=tok.text, cls=cls, line=tok.line))
    return raw, tokens, spans, warnings


def tokenize(text: str, profile: LanguageProfile) -> list[Token]:
    """Lex a source file into classified tokens (comments/whitespace dropped)."""
    _, tokens, _, _ = _analyze(text, profile)
    return tokens


def tokenize_ex(text: str, profile: LanguageProfile):
    """Like tokenize, but also returns recovery warnings from the lexer."""
    _, tokens, _, warnings = _analyze(text, profile)
    return tokens, warnings


def _innermost_span(spans: list[_Span], idx: int) -> int | None:
    best = None
    best_start = -1
    for s_i, span in enumerate(spans):
        if span.start <= idx < span.end and span.start > best_start:
            best, best_start = s_i, span.start
    return best


def file_metrics(text: str, profile: LanguageProfile) -> FileMetricVector:
    """Compute the full metric vector for one file version.

    NLOC counts lines carrying at least one token, so blank and
    comment-only lines are excluded. Cyclomatic complexity is one per
    function plus its decision tokens, summed over functions, with
    top-level code (tokens outside every function) contributing one more
    block when present.
    """
    raw, tokens, spans, _ = _analyze(text, profile)
    if not tokens:
        return ZERO_VECTOR

    nloc = len({t.line for t in tokens})
    decisions_words = profile.decision_keywords
    decisions_syms = profile.decision_symbols
    per_span = [0] * len(spans)
    top_decisions = 0
    has_top = False
    for k, tok in enumerate(raw):
        is_decision = (tok.kind == "ident" and tok.text in decisions_words) or (
            tok.kind == "symbol" and tok.text in decisions_syms
        )
        where = _innermost_span(spans, k)
        if where is None:
            has_top = True
            if is_decision:
                top_decisions += 1
        elif is_decision:
            per_span[where] += 1

    cyclomatic = sum(1 + d for d in per_span)
    if has_top:
        cyclomatic += 1 + top_decisions

    operators = [t.text for t in tokens if t.cls == OPERATOR]
    operands = [t.text for t in tokens if t.cls == OPERAND]
    eta1, eta2 = len(set(operators)), len(set(operands))
    n1, n2 = len(operators), len(operands)
    return FileMetricVector(
        nloc=nloc,
        token_count=len(tokens),
        function_count=len(spans),
        cyclomatic=cyclomatic,
        eta1=eta1,
        eta2=eta2,
        n1=n1,
        n2=n2,
        effort=halstead_effort(eta1, eta2, n1, n2),
    )


def commit_code_delta(pre: FileMetricVector, post: FileMetricVector) -> FileMetricVector:
    """Componentwise |post - pre|: size of the change, counting reductions
    (refactorings that shrink the code) as productive output too."""
    return FileMetricVector(
        nloc=abs(post.nloc - pre.nloc),
        token_count=abs(post.token_count - pre.token_count),
        function_count=abs(post.function_count - pre.function_count),
        cyclomatic=abs(post.cyclomatic - pre.cyclomatic),
        eta1=abs(post.eta1 - pre.eta1),
        eta2=abs(post.eta2 - pre.eta2),
        n1=abs(post.n1 - pre.n1),
        n2=abs(post.n2 - pre.n2),
        effort=abs(post.effort - pre.effort),
    )
