"""A small expression language for test functions of ``t``.

Grammar (loosest first)::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := "-" unary | power
    power  := atom ("^" unary)?          # right-associative
    atom   := number | "t" | name "(" expr ")" | "(" expr ")"

``^`` binds tighter than unary minus, so ``-t^2`` is ``-(t^2)``.  There is
no unary plus.  Functions: exp, sin, cos, sqrt, abs.

Errors are :class:`ExprSyntaxError` with a byte offset into the UTF-8 source
and the set of tokens the parser would have accepted there.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ValidationError

__all__ = [
    "Num",
    "Var",
    "Neg",
    "BinOp",
    "Call",
    "ExprSyntaxError",
    "UnknownIdentifier",
    "FunctionSpec",
    "parse",
    "pretty",
    "evaluate",
    "parse_function",
]

FUNCTIONS = {"exp": np.exp, "sin": np.sin, "cos": np.cos, "sqrt": np.sqrt, "abs": np.abs}


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    name: str
    arg: "Node"


Node = Union[Num, Var, Neg, BinOp, Call]


class ExprSyntaxError(ValidationError):
    def __init__(self, message, offset, expected=()):
        self.offset = offset
        self.expected = frozenset(expected)
        exp = ", ".join(sorted(self.expected))
        super().__init__(f"{message} at offset {offset}" + (f" (expected one of: {exp})" if exp else ""))


class UnknownIdentifier(ExprSyntaxError):
    pass


# -- lexer -----------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Tok:
    kind: str  # num, name, op, end, bad
    text: str
    offset: int


def _tokens(src: str):
    out = []
    i = 0
    byte = 0
    while i < len(src):
        m = _TOKEN.match(src, i)
        if m is None:
            out.append(_Tok("bad", src[i], byte))
            text = src[i]
        else:
            text = m.group()
            if m.lastgroup != "ws":
                out.append(_Tok(m.lastgroup, text, byte))
        i += len(text)
        byte += len(text.encode("utf-8"))
    out.append(_Tok("end", "", byte))
    return out


# -- parser ----------------------------------------------------------------

_OPERAND = {"number", "t", "function", "(", "-"}


class _Parser:
    def __init__(self, src):
        self.toks = _tokens(src)
        self.pos = 0

    @property
    def tok(self):
        return self.toks[self.pos]

    def fail(self, expected, what=None):
        tok = self.tok
        if what is None:
            what = "unexpected end of input" if tok.kind == "end" else f"unexpected {tok.text!r}"
        raise ExprSyntaxError(what, tok.offset, expected)

    def is_op(self, *ops):
        return self.tok.kind == "op" and self.tok.text in ops

    def expect_op(self, op, expected):
        if not self.is_op(op):
            self.fail(expected)
        self.pos += 1

    def parse(self):
        node = self.expr()
        if self.tok.kind != "end":
            self.fail({"+", "-", "*", "/", "^", "end of input"})
        return node

    def expr(self):
        node = self.term()
        while self.is_op("+", "-"):
            op = self.tok.text
            self.pos += 1
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.is_op("*", "/"):
            op = self.tok.text
            self.pos += 1
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.is_op("-"):
            self.pos += 1
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.is_op("^"):
            self.pos += 1
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        tok = self.tok
        if tok.kind == "num":
            value = float(tok.text)
            if not math.isfinite(value):
                self.fail(_OPERAND, f"numeric literal {tok.text!r} overflows")
            self.pos += 1
            return Num(value)
        if tok.kind == "name":
            if tok.text == "t":
                self.pos += 1
                return Var()
            if tok.text not in FUNCTIONS:
                raise UnknownIdentifier(f"unknown identifier {tok.text!r}", tok.offset, {"t", *FUNCTIONS})
            self.pos += 1
            self.expect_op("(", {"("})
            arg = self.expr()
            self.expect_op(")", {")", "+", "-", "*", "/", "^"})
            return Call(tok.text, arg)
        if self.is_op("("):
            self.pos += 1
            node = self.expr()
            self.expect_op(")", {")", "+", "-", "*", "/", "^"})
            return node
        self.fail(_OPERAND)


def parse(src: str) -> Node:
    return _Parser(src).parse()


# -- printing --------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}
_NEG, _POW, _ATOM = 3, 4, 5


def _prec(node):
    if isinstance(node, BinOp):
        return _POW if node.op == "^" else _PREC[node.op]
    if isinstance(node, Neg):
        return _NEG
    return _ATOM


def _wrap(node, min_prec):
    text = pretty(node)
    return text if _prec(node) >= min_prec else f"({text})"


def pretty(node: Node) -> str:
    """Canonical text with the fewest parentheses that reparse to ``node``."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return "t"
    if isinstance(node, Call):
        return f"{node.name}({pretty(node.arg)})"
    if isinstance(node, Neg):
        return "-" + _wrap(node.operand, _NEG)
    if node.op == "^":
        return f"{_wrap(node.left, _ATOM)}^{_wrap(node.right, _NEG)}"
    p = _PREC[node.op]
    # left-associative: an equal-precedence right child needs parentheses
    return f"{_wrap(node.left, p)} {node.op} {_wrap(node.right, p + 1)}"


# -- evaluation ------------------------------------------------------------


def evaluate(node: Node, t):
    """Evaluate elementwise; non-finite results are left to the caller."""
    if isinstance(node, Num):
        return node.value + 0.0 * np.asarray(t, dtype=float)
    if isinstance(node, Var):
        return np.asarray(t, dtype=float)
    with np.errstate(all="ignore"):
        if isinstance(node, Neg):
            return -evaluate(node.operand, t)
        if isinstance(node, Call):
            return FUNCTIONS[node.name](evaluate(node.arg, t))
        a, b = evaluate(node.left, t), evaluate(node.right, t)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            return a / b
        return np.power(a, b)


@dataclass(frozen=True)
class FunctionSpec:
    source: str
    ast: Node
    d1: Node | None = None
    d2: Node | None = None

    def __call__(self, t):
        return evaluate(self.ast, t)

    def derivative(self, order):
        node = self.d1 if order == 1 else self.d2
        if node is None:
            raise ValidationError(f"derivative of order {order} was not supplied for {self.source!r}")
        return lambda t: evaluate(node, t)


def parse_function(expr: str, d1: str | None = None, d2: str | None = None) -> FunctionSpec:
    return FunctionSpec(
        expr,
        parse(expr),
        parse(d1) if d1 is not None else None,
        parse(d2) if d2 is not None else None,
    )
