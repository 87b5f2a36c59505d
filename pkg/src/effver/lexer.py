"""Hand-written lexer for `.eff` source files.

Plain comments `(* ... *)` nest and are skipped.  Specification comments
`(*@ ... *)` are not skipped: their contents are re-lexed in place so the
parser sees a SPEC_OPEN token, the clause tokens, and a SPEC_CLOSE token,
with spans that point into the original file.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import SyntaxParseError
from .syntax import Span

KEYWORDS = {
    "let", "rec", "in", "if", "then", "else", "match", "with", "try", "fun",
    "effect", "type", "of", "perform", "continue", "begin", "end", "true",
    "false", "not", "ref", "mod",
    # spec-only keywords
    "requires", "ensures", "modifies", "performs", "variant", "protocol",
    "try_ensures", "returns", "old", "forall", "exists", "result", "reply",
}

# multi-character operators, longest first
OPERATORS = [
    "<->", "->", "<-", ":=", "::", "<=", ">=", "<>", "&&", "||", ".(",
    "(", ")", "[", "]", "{", "}", ",", ";", ":", "|", "=", "<", ">", "+",
    "-", "*", "/", "!", ".",
]


@dataclass(frozen=True)
class Token:
    kind: str  # INT IDENT UIDENT KW OP SPEC_OPEN SPEC_CLOSE GHOST EOF
    text: str
    span: Span


def _span(src: str, start: int, end: int, line: int, col: int) -> Span:
    return Span(start, end, line, col)


def tokenize(src: str) -> list[Token]:
    toks: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(src)

    def here(start: int, end: int, l: int, c: int) -> Span:
        return Span(start, end, l, c)

    def advance(text: str):
        nonlocal line, col
        for ch in text:
            if ch == "\n":
                line += 1
                col = 1
            else:
                col += 1

    spec_depth = 0
    while i < n:
        ch = src[i]
        if ch in " \t\r\n":
            advance(ch)
            i += 1
            continue
        # comments and spec blocks
        if src.startswith("(*@", i):
            if spec_depth:
                raise SyntaxParseError("nested spec comment", here(i, i + 3, line, col))
            toks.append(Token("SPEC_OPEN", "(*@", here(i, i + 3, line, col)))
            advance("(*@")
            i += 3
            spec_depth = 1
            continue
        if spec_depth and src.startswith("*)", i):
            toks.append(Token("SPEC_CLOSE", "*)", here(i, i + 2, line, col)))
            advance("*)")
            i += 2
            spec_depth = 0
            continue
        if src.startswith("(*", i):
            depth = 1
            j = i + 2
            l, c = line, col
            advance("(*")
            while j < n and depth:
                if src.startswith("(*", j):
                    depth += 1
                    advance("(*")
                    j += 2
                elif src.startswith("*)", j):
                    depth -= 1
                    advance("*)")
                    j += 2
                else:
                    advance(src[j])
                    j += 1
            if depth:
                raise SyntaxParseError("unterminated comment", here(i, j, l, c))
            i = j
            continue
        if src.startswith("[@ghost]", i):
            toks.append(Token("GHOST", "[@ghost]", here(i, i + 8, line, col)))
            advance("[@ghost]")
            i += 8
            continue
        if ch.isdigit():
            j = i
            while j < n and src[j].isdigit():
                j += 1
            toks.append(Token("INT", src[i:j], here(i, j, line, col)))
            advance(src[i:j])
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] in "_'"):
                j += 1
            word = src[i:j]
            if word in KEYWORDS:
                kind = "KW"
            elif word[0].isupper():
                kind = "UIDENT"
            else:
                kind = "IDENT"
            toks.append(Token(kind, word, here(i, j, line, col)))
            advance(word)
            i = j
            continue
        for op in OPERATORS:
            if src.startswith(op, i):
                # `.(` is array access; a lone `.` only follows a module name
                toks.append(Token("OP", op, here(i, i + len(op), line, col)))
                advance(op)
                i += len(op)
                break
        else:
            raise SyntaxParseError(f"unexpected character {ch!r}", here(i, i + 1, line, col))
    if spec_depth:
        raise SyntaxParseError("unterminated spec comment", Span(n, n, line, col))
    toks.append(Token("EOF", "", Span(n, n, line, col)))
    return toks
