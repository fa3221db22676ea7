"""Language profiles driving the tokenizer and metric extraction.

A profile is declarative: comment markers, string syntax, keyword sets,
operator symbols, and the function-definition style. Two profiles ship
built in (Python-like and C-like braces languages); additional ones can be
loaded from plain key-value files, see ``load_profile``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from ._util import parse_kv_file

OPERAND = "operand"
OPERATOR = "operator"
OTHER = "other"


@dataclass(frozen=True)
class LanguageProfile:
    """Token classification and structure rules for one language family."""

    name: str
    line_comments: tuple[str, ...]
    block_comments: tuple[tuple[str, str], ...]
    string_delims: tuple[str, ...]  # longest first
    multiline_strings: frozenset[str]
    keywords: frozenset[str]
    definition_keywords: frozenset[str]  # introduce a named definition
    function_keywords: frozenset[str]  # definition keywords that open a function
    literal_keywords: frozenset[str]  # value-like keywords -> operand
    decision_keywords: frozenset[str]
    decision_symbols: frozenset[str]
    operator_symbols: tuple[str, ...]  # longest first
    function_style: str  # "indent" or "braces"

    def __post_init__(self):
        if self.function_style not in ("indent", "braces"):
            raise ValueError(f"unknown function_style {self.function_style!r}")


_PY_KEYWORDS = frozenset(
    """False None True and as assert async await break class continue def del
    elif else except finally for from global if import in is lambda match case
    nonlocal not or pass raise return try while with yield""".split()
)

_PY_OPERATORS = (
    "**=", "//=", ">>=", "<<=", "!=", ">=", "<=", "==", "->", ":=", "+=",
    "-=", "*=", "/=", "%=", "&=", "|=", "^=", "@=", "**", "//", ">>", "<<",
    "(", ")", "[", "]", "{", "}", ",", ":", ".", ";", "@", "=", "+", "-",
    "*", "/", "%", "&", "|", "^", "~", "<", ">",
)

PYTHON_PROFILE = LanguageProfile(
    name="python",
    line_comments=("#",),
    block_comments=(),
    string_delims=('"""', "'''", '"', "'"),
    multiline_strings=frozenset({'"""', "'''"}),
    keywords=_PY_KEYWORDS,
    definition_keywords=frozenset({"def", "class"}),
    function_keywords=frozenset({"def"}),
    literal_keywords=frozenset({"True", "False", "None"}),
    decision_keywords=frozenset({"if", "elif", "for", "while", "and", "or", "except", "case"}),
    decision_symbols=frozenset(),
    operator_symbols=_PY_OPERATORS,
    function_style="indent",
)

_C_KEYWORDS = frozenset(
    """auto break case catch char class const continue default delete do
    double else enum extern float for goto if inline int long namespace new
    nullptr operator private protected public register return short signed
    sizeof static struct switch template this throw try typedef union
    unsigned using virtual void volatile while true false NULL""".split()
)

_C_OPERATORS = (
    "<<=", ">>=", "...", "->*", "::", "->", "++", "--", "<<", ">>", "<=",
    ">=", "==", "!=", "&&", "||", "+=", "-=", "*=", "/=", "%=", "&=", "|=",
    "^=", "(", ")", "[", "]", "{", "}", ",", ";", ":", ".", "?", "=", "+",
    "-", "*", "/", "%", "&", "|", "^", "~", "!", "<", ">", "#",
)

CLIKE_PROFILE = LanguageProfile(
    name="clike",
    line_comments=("//",),
    block_comments=(("/*", "*/"),),
    string_delims=('"', "'"),
    multiline_strings=frozenset(),
    keywords=_C_KEYWORDS,
    definition_keywords=frozenset({"class", "struct", "enum", "union", "namespace"}),
    function_keywords=frozenset(),
    literal_keywords=frozenset({"true", "false", "NULL", "nullptr", "this"}),
    decision_keywords=frozenset({"if", "for", "while", "case", "catch"}),
    decision_symbols=frozenset({"&&", "||", "?"}),
    operator_symbols=_C_OPERATORS,
    function_style="braces",
)

BUILTIN_PROFILES = {"python": PYTHON_PROFILE, "clike": CLIKE_PROFILE}

# Extensions routed to a built-in profile; files with other extensions get
# no code-based metrics (commit-based measures still apply to them).
EXTENSION_MAP = {
    ".py": "python", ".pyi": "python",
    ".c": "clike", ".h": "clike", ".cc": "clike", ".hh": "clike",
    ".cpp": "clike", ".hpp": "clike", ".cxx": "clike", ".hxx": "clike",
    ".java": "clike", ".js": "clike", ".jsx": "clike", ".ts": "clike",
    ".tsx": "clike", ".cs": "clike", ".go": "clike", ".rs": "clike",
    ".scala": "clike", ".kt": "clike", ".swift": "clike", ".php": "clike",
}


def profile_for_path(path: str, extra: dict[str, LanguageProfile] | None = None):
    """Pick a profile by file extension; None when the language is unknown."""
    suffix = Path(path).suffix.lower()
    name = EXTENSION_MAP.get(suffix)
    if name is None:
        return None
    if extra and name in extra:
        return extra[name]
    return BUILTIN_PROFILES[name]


def load_profile(path) -> LanguageProfile:
    """Load a profile from a key-value file.

    Multi-valued keys are whitespace-separated (no marker may contain a
    space). ``block_comments`` pairs openers and closers positionally:
    ``block_comments = /* */``. Example::

        name = shell
        function_style = braces
        line_comments = #
        string_delims = " '
        keywords = if then else fi for while do done case esac function
        definition_keywords = function
        decision_keywords = if for while case
        operators = ( ) { } [ ] ; = $ | & < >
    """
    raw = parse_kv_file(path)

    def words(key, default=()):
        return tuple(raw[key].split()) if key in raw else tuple(default)

    blocks = words("block_comments")
    if len(blocks) % 2:
        raise ValueError(f"{path}: block_comments must pair open/close markers")
    delims = tuple(sorted(words("string_delims"), key=len, reverse=True))
    return LanguageProfile(
        name=raw.get("name", Path(path).stem),
        line_comments=words("line_comments"),
        block_comments=tuple(zip(blocks[::2], blocks[1::2])),
        string_delims=delims,
        multiline_strings=frozenset(words("multiline_strings")),
        keywords=frozenset(words("keywords")),
        definition_keywords=frozenset(words("definition_keywords")),
        function_keywords=frozenset(words("function_keywords")),
        literal_keywords=frozenset(words("literal_keywords")),
        decision_keywords=frozenset(words("decision_keywords")),
        decision_symbols=frozenset(words("decision_symbols")),
        operator_symbols=tuple(sorted(words("operators"), key=len, reverse=True)),
        function_style=raw.get("function_style", "braces"),
    )
