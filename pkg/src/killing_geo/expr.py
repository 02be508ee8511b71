"""Small arithmetic expression language for scalar fields in ``x`` and ``y``.

Grammar (``^`` and ``**`` both mean power, right associative)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('+' | '-') unary | power
    power  := atom (('^' | '**') unary)?
    atom   := NUMBER | 'x' | 'y' | 'pi' | FUNC '(' expr ')' | '(' expr ')'

The parser builds a sympy expression so fields can be differentiated
symbolically; nothing else from sympy is exposed to the input text.
"""

import re

import sympy as sp

from .errors import ParseError

X, Y = sp.symbols("x y", real=True)

FUNCTIONS = {
    "sin": sp.sin,
    "cos": sp.cos,
    "exp": sp.exp,
    "log": sp.log,
    "sqrt": sp.sqrt,
}
CONSTANTS = {"pi": sp.pi}
VARIABLES = {"x": X, "y": Y}

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/^()]))"
)


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None:
            bad = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ParseError(f"unexpected character {text[bad]!r}", position=bad)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, pos = self.take()
        if val != value:
            found = "end of input" if kind == "end" else repr(val)
            raise ParseError(f"expected {value!r}, found {found}", position=pos)

    def parse(self):
        if self.peek()[0] == "end":
            raise ParseError("empty expression", position=0)
        node = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {val!r}", position=pos)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            rhs = self.term()
            node = node + rhs if op == "+" else node - rhs
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            rhs = self.unary()
            node = node * rhs if op == "*" else node / rhs
        return node

    def unary(self):
        if self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            operand = self.unary()
            return -operand if op == "-" else operand
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[1] in ("^", "**"):
            self.take()
            return base ** self.unary()
        return base

    def atom(self):
        kind, val, pos = self.take()
        if kind == "num":
            return sp.Float(val) if any(c in val for c in ".eE") else sp.Integer(val)
        if kind == "name":
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return FUNCTIONS[val](arg)
            if val in VARIABLES:
                return VARIABLES[val]
            if val in CONSTANTS:
                return CONSTANTS[val]
            raise ParseError(f"unknown name {val!r}", position=pos)
        if val == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(val)
        raise ParseError(f"unexpected {found}", position=pos)


def parse_expression(text):
    """Parse ``text`` into a sympy expression in the symbols ``x`` and ``y``.

    Raises ParseError with the 0-based offset of the offending token.
    """
    if not isinstance(text, str):
        raise ParseError(f"expression must be a string, got {type(text).__name__}")
    return _Parser(text).parse()
