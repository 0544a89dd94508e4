from __future__ import annotations

import re
from dataclasses import dataclass
from typing import List

from ..diagnostics import ParseError, Span

KEYWORDS = frozenset(
    """
    interface module bimodule imports meth class boundary public private ghost invariant
    coupling predicate requires ensures effects rd rw var in if then else end while do done
    skip new assert assume forall exists iin old Both not true false null nil
    """.split()
)

# longest first
SYMBOLS = (
    "=:=", "*<|", "*<]", "<->",
    ":=", "|_", "_|", "[>", "|>", "<>", "<=", ">=", "<<", "^^", "++", "--", "->", "/\\", "\\/",
    "(", ")", "{", "}", ",", ";", ":", ".", "`", "|", "=", "<", ">", "+", "-", "*", "/", "%",
)

# identifiers never end with '_' so that `g_|` lexes as `g` `_|`
_IDENT = r"[A-Za-z](?:[A-Za-z0-9_]*[A-Za-z0-9])?"
_TOKEN_RE = re.compile(
    r"(?P<ws>\s+)|(?P<comment>/\*.*?\*/)|(?P<int>\d+)|(?P<ident>" + _IDENT + r")|(?P<sym>"
    + "|".join(re.escape(s) for s in SYMBOLS)
    + r")",
    re.DOTALL,
)


@dataclass(frozen=True)
class Token:
    kind: str  # "int" | "ident" | "kw" | "sym" | "eof"
    text: str
    span: Span
    space_before: bool
    space_after: bool = False

    def is_(self, text: str) -> bool:
        return self.kind in ("kw", "sym") and self.text == text


def tokenize(text: str, path: str = "<input>") -> List[Token]:
    out: List[Token] = []
    pos = 0
    line, col = 1, 1
    space = True
    n = len(text)
    while pos < n:
        if text.startswith("/*", pos) and text.find("*/", pos + 2) < 0:
            raise ParseError("unterminated comment", Span(path, line, col))
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", Span(path, line, col))
        chunk = m.group(0)
        kind = m.lastgroup
        if kind in ("ws", "comment"):
            space = True
            if out:
                out[-1] = _with_space_after(out[-1])
        else:
            if kind == "ident" and chunk in KEYWORDS:
                kind = "kw"
            out.append(Token(kind, chunk, Span(path, line, col), space))  # type: ignore[arg-type]
            space = False
        nl = chunk.count("\n")
        if nl:
            line += nl
            col = len(chunk) - chunk.rfind("\n")
        else:
            col += len(chunk)
        pos = m.end()
    out.append(Token("eof", "<eof>", Span(path, line, col), True, True))
    return out


def _with_space_after(t: Token) -> Token:
    if t.space_after:
        return t
    return Token(t.kind, t.text, t.span, t.space_before, True)


__all__ = ["Token", "tokenize", "KEYWORDS", "SYMBOLS"]
