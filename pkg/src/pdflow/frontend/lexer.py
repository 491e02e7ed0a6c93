"""Tokenizer for AL source text."""
from __future__ import annotations

import re
from bisect import bisect_right
from dataclasses import dataclass
from enum import Enum, auto

from pdflow.frontend.ast import Position, SourceFile

KEYWORDS = frozenset({
    "module", "class", "extends", "void", "new", "return",
    "if", "else", "while", "true", "false", "null",
})


class TokenKind(Enum):
    IDENT = auto()
    KEYWORD = auto()
    INT = auto()
    STRING = auto()
    AT = auto()
    ANNOT_ARGS = auto()  # raw balanced text captured after '@Name('
    LBRACE = auto()
    RBRACE = auto()
    LPAREN = auto()
    RPAREN = auto()
    LBRACKET = auto()
    RBRACKET = auto()
    LT = auto()
    GT = auto()
    COMMA = auto()
    SEMI = auto()
    DOT = auto()
    ASSIGN = auto()
    OP = auto()
    EOF = auto()


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    text: str
    line: int
    column: int

    def position(self, path: str) -> Position:
        return Position(path, self.line, self.column)


class LexError(Exception):
    def __init__(self, position: Position, message: str):
        super().__init__(f"{position}: {message}")
        self.position = position
        self.message = message


_PUNCT = {
    "{": TokenKind.LBRACE, "}": TokenKind.RBRACE,
    "(": TokenKind.LPAREN, ")": TokenKind.RPAREN,
    "[": TokenKind.LBRACKET, "]": TokenKind.RBRACKET,
    "<": TokenKind.LT, ">": TokenKind.GT,
    ",": TokenKind.COMMA, ";": TokenKind.SEMI,
    ".": TokenKind.DOT, "=": TokenKind.ASSIGN,
    "@": TokenKind.AT,
}

_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t\r\n]+)"
    r"|(?P<comment>//[^\n]*)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<int>[0-9]+)"
    r'|(?P<string>"(?:\\"|[^"\n])*")'
    r"|(?P<op><=|>=|==|!=|&&|\|\||[+\-*/%])"
    r"|(?P<punct>[@{}()\[\]<>,;.=])"
)


class _LineIndex:
    def __init__(self, text: str):
        self.starts = [0]
        for i, ch in enumerate(text):
            if ch == "\n":
                self.starts.append(i + 1)

    def linecol(self, offset: int) -> tuple[int, int]:
        i = bisect_right(self.starts, offset) - 1
        return i + 1, offset - self.starts[i] + 1


def tokenize(source: SourceFile) -> list[Token]:
    """Turn source text into tokens, or raise LexError on a foreign character.

    Whitespace and // comments are discarded. After '@Name(' the lexer
    captures everything up to the balancing ')' verbatim as one ANNOT_ARGS
    token; annotation arguments are never interpreted any further.
    """
    text = source.text
    lines = _LineIndex(text)
    tokens: list[Token] = []
    i = 0
    n = len(text)
    annot_state = 0  # 0 idle, 1 saw '@', 2 saw '@' plus name

    def tok(kind: TokenKind, value: str, offset: int) -> None:
        line, col = lines.linecol(offset)
        tokens.append(Token(kind, value, line, col))

    while i < n:
        if annot_state == 2 and text[i] == "(":
            depth = 1
            j = i + 1
            while j < n and depth:
                if text[j] == "(":
                    depth += 1
                elif text[j] == ")":
                    depth -= 1
                j += 1
            if depth:
                line, col = lines.linecol(i)
                raise LexError(Position(source.path, line, col),
                               "unterminated annotation argument list")
            tok(TokenKind.ANNOT_ARGS, text[i + 1:j - 1], i)
            i = j
            annot_state = 0
            continue
        m = _TOKEN_RE.match(text, i)
        if m is None:
            line, col = lines.linecol(i)
            pos = Position(source.path, line, col)
            if text[i] == '"':
                raise LexError(pos, "unterminated string literal")
            raise LexError(pos, f"unexpected character {text[i]!r}")
        group = m.lastgroup
        value = m.group()
        if group in ("ws", "comment"):
            i = m.end()
            continue
        if group == "ident":
            kind = TokenKind.KEYWORD if value in KEYWORDS else TokenKind.IDENT
            tok(kind, value, i)
            annot_state = 2 if (annot_state == 1 and kind == TokenKind.IDENT) else 0
        elif group == "int":
            tok(TokenKind.INT, value, i)
            annot_state = 0
        elif group == "string":
            tok(TokenKind.STRING, value, i)
            annot_state = 0
        elif group == "op":
            tok(TokenKind.OP, value, i)
            annot_state = 0
        else:
            kind = _PUNCT[value]
            tok(kind, value, i)
            annot_state = 1 if kind == TokenKind.AT else 0
        i = m.end()
    return tokens


def decode_string(raw: str) -> str:
    """Literal text -> value; the only escape is a backslash-quote pair."""
    return raw[1:-1].replace('\\"', '"')
