"""Tokenizer for `.lus` sources, proof scripts and predicate strings."""
from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import LexError

KEYWORDS = {
    "node", "returns", "var", "let", "tel", "const",
    "if", "then", "else", "pre", "not", "and", "or", "xor",
    "true", "false", "bool", "int", "real",
    # proof-script keywords (harmless as reserved words in .lus)
    "goal", "rule", "premise", "bound", "state_pred", "obs", "init", "always",
}

# Multi-char operators first so the scanner is greedy.
_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>--[^\n]*)
  | (?P<real>\d+\.\d+)
  | (?P<int>\d+)
  | (?P<id>[A-Za-z_][A-Za-z0-9_.]*'*)
  | (?P<tyvar>'a)
  | (?P<op><<|>>|->|\|\||/\\|=>|<>|<=|>=|:=|\|=|[()\[\]{},;:=<>+\-*/@&])
    """,
    re.VERBOSE,
)


@dataclass
class Token:
    kind: str  # 'id' | 'int' | 'real' | 'op' | 'kw' | 'eof'
    text: str
    line: int
    col: int

    def __repr__(self) -> str:
        return f"Token({self.kind},{self.text!r}@{self.line}:{self.col})"


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    pos, line, line_start = 0, 1, 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise LexError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        tok = m.group()
        col = pos - line_start + 1
        if kind == "ws" or kind == "comment":
            pass
        elif kind == "id":
            tokens.append(Token("kw" if tok in KEYWORDS else "id", tok, line, col))
        elif kind == "tyvar":
            tokens.append(Token("tyvar", tok, line, col))
        else:
            tokens.append(Token(kind, tok, line, col))
        nl = tok.count("\n")
        if nl:
            line += nl
            line_start = pos + tok.rfind("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, n - line_start + 1))
    return tokens
