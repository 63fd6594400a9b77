"""Line tokenizer shared by the tree, domain and profile file formats."""

import re

from .errors import ParseError

_TOKEN = re.compile(r'"(?:[^"\\\n]|\\.)*"|[^\s#"]+|"')


class Token(str):
    """A string that remembers its 1-based column."""

    column: int

    def __new__(cls, text, column):
        tok = super().__new__(cls, text)
        tok.column = column
        return tok


def tokenize_lines(text, source=None):
    """Yield ``(lineno, indent, tokens)`` for each non-blank line.

    ``#`` starts a comment unless it sits inside a double-quoted token.
    Quoted tokens keep their quotes; use :func:`unquote` to strip them.
    """
    for lineno, raw in enumerate(text.splitlines(), start=1):
        tokens = []
        pos = 0
        while pos < len(raw):
            ch = raw[pos]
            if ch.isspace():
                pos += 1
                continue
            if ch == "#":
                break
            m = _TOKEN.match(raw, pos)
            if m.group() == '"':
                raise ParseError("unterminated string", lineno, pos + 1, source)
            tokens.append(Token(m.group(), pos + 1))
            pos = m.end()
        if tokens:
            indent = len(raw) - len(raw.lstrip())
            yield lineno, indent, tokens


def unquote(token):
    if len(token) >= 2 and token.startswith('"') and token.endswith('"'):
        return re.sub(r"\\(.)", r"\1", token[1:-1])
    return str(token)


def quote(text):
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


_IDENT = re.compile(r"^[A-Za-z_][A-Za-z0-9_.\-]*$")


def is_identifier(token):
    return bool(_IDENT.match(token))
