"""S-expression reader/writer for SMT-LIB 2 scripts."""
from __future__ import annotations


class SexprError(Exception):
    pass


def tokenize(text: str):
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c in " \t\r\n":
            i += 1
        elif c == ";":
            j = text.find("\n", i)
            i = n if j < 0 else j + 1
        elif c in "()":
            yield c
            i += 1
        elif c == "|":
            j = text.find("|", i + 1)
            if j < 0:
                raise SexprError("unterminated quoted symbol")
            yield text[i:j + 1]
            i = j + 1
        elif c == '"':
            j = i + 1
            while j < n:
                if text[j] == '"':
                    if j + 1 < n and text[j + 1] == '"':
                        j += 2
                        continue
                    break
                j += 1
            if j >= n:
                raise SexprError("unterminated string literal")
            yield text[i:j + 1]
            i = j + 1
        else:
            j = i
            while j < n and text[j] not in " \t\r\n();\"|":
                j += 1
            yield text[i:j]
            i = j


def parse_all(text: str) -> list:
    """Parse every toplevel s-expression in `text`."""
    out: list = []
    stack: list[list] = []
    for tok in tokenize(text):
        if tok == "(":
            stack.append([])
        elif tok == ")":
            if not stack:
                raise SexprError("unbalanced ')'")
            done = stack.pop()
            (stack[-1] if stack else out).append(done)
        else:
            (stack[-1] if stack else out).append(tok)
    if stack:
        raise SexprError("unbalanced '('")
    return out


class Reader:
    """Incremental reader: feed lines, pop complete toplevel expressions."""

    def __init__(self) -> None:
        self.buf = ""

    def feed(self, chunk: str) -> list:
        self.buf += chunk
        out: list = []
        while True:
            expr, rest = self._try_read(self.buf)
            if expr is None:
                break
            out.append(expr)
            self.buf = rest
        return out

    def _try_read(self, text: str):
        depth = 0
        started = False
        i, n = 0, len(text)
        while i < n:
            c = text[i]
            if c == ";":
                j = text.find("\n", i)
                if j < 0:
                    return None, text
                i = j + 1
                continue
            if c in "|\"":
                close = c
                j = i + 1
                while j < n and text[j] != close:
                    j += 1
                if j >= n:
                    return None, text
                i = j + 1
                started = True
                if depth == 0:
                    exprs = parse_all(text[:i])
                    return exprs[0], text[i:]
                continue
            if c == "(":
                depth += 1
                started = True
            elif c == ")":
                depth -= 1
                if depth == 0:
                    exprs = parse_all(text[:i + 1])
                    return exprs[0], text[i + 1:]
                if depth < 0:
                    raise SexprError("unbalanced ')'")
            elif c not in " \t\r\n" and depth == 0:
                # bare atom at toplevel: read to whitespace
                j = i
                while j < n and text[j] not in " \t\r\n(;":
                    j += 1
                if j < n:
                    return text[i:j], text[j:]
                return None, text
            i += 1
        return None, text


def to_text(e) -> str:
    if isinstance(e, list):
        return "(" + " ".join(to_text(x) for x in e) + ")"
    return str(e)
