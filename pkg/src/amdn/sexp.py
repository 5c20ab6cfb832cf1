"""Minimal S-expression reader used by the PDDL and trace parsers.

Atoms are returned as :class:`Atom` (a ``str`` subclass that remembers its
source position) and lists as :class:`SList`.  Comments start with ``;``.
"""

from __future__ import annotations

from .errors import AmdnSyntaxError


class Atom(str):
    line: int
    column: int

    def __new__(cls, text, line=0, column=0):
        obj = super().__new__(cls, text)
        obj.line = line
        obj.column = column
        return obj


class SList(list):
    line: int
    column: int

    def __init__(self, items=(), line=0, column=0):
        super().__init__(items)
        self.line = line
        self.column = column


def _tokens(text):
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line, col = line + 1, 1
            i += 1
        elif ch.isspace():
            i += 1
            col += 1
        elif ch == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif ch in "()":
            yield ch, line, col
            i += 1
            col += 1
        else:
            start = i
            while i < n and not text[i].isspace() and text[i] not in "();":
                i += 1
            yield text[start:i], line, col
            col += i - start


def parse_many(text: str) -> list:
    """Parse every top-level form in ``text``."""
    stack: list[SList] = []
    forms: list = []
    last = (1, 1)
    for tok, line, col in _tokens(text):
        last = (line, col)
        if tok == "(":
            stack.append(SList(line=line, column=col))
        elif tok == ")":
            if not stack:
                raise AmdnSyntaxError("unbalanced ')'", line, col)
            done = stack.pop()
            (stack[-1] if stack else forms).append(done)
        else:
            atom = Atom(tok, line, col)
            if stack:
                stack[-1].append(atom)
            else:
                forms.append(atom)
    if stack:
        open_ = stack[-1]
        raise AmdnSyntaxError(
            f"unterminated list opened at line {open_.line}, column {open_.column}",
            *last,
            expected="')'",
        )
    return forms


def parse_one(text: str):
    forms = parse_many(text)
    if len(forms) != 1:
        raise AmdnSyntaxError(f"expected exactly one top-level form, found {len(forms)}")
    return forms[0]


def position(node) -> tuple[int, int]:
    return getattr(node, "line", 0), getattr(node, "column", 0)
