"""Component-wise arithmetic expressions over the state vector.

Grammar (EBNF)::

    expr    = term , { ("+" | "-") , term } ;
    term    = unary , { ("*" | "/") , unary } ;
    unary   = ("-" | "+") , unary | power ;
    power   = atom , [ "^" , unary ] ;              (* right-associative *)
    atom    = number | variable | call | "(" , expr , ")" ;
    call    = func , "(" , expr , { "," , expr } , ")" ;
    func    = "exp" | "log" | "sqrt" | "abs" | "tanh" | "min" | "max" ;
    variable= "x" , digits | "x" , "[" , digits , "]" ;
    number  = digits , [ "." , [digits] ] , [ ("e"|"E") , ["+"|"-"] , digits ]
            | "." , digits , [ exponent ] ;

So ``^`` binds tighter than unary minus (``-x0^2 == -(x0^2)``), and a unary
minus may appear in an exponent (``2^-1 == 0.5``).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import ExpressionSyntaxError, VariableIndexError

UNARY_FUNCS = {
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "abs": np.abs,
    "tanh": np.tanh,
}
VARIADIC_FUNCS = {"min": np.minimum, "max": np.maximum}
FUNCTIONS = set(UNARY_FUNCS) | set(VARIADIC_FUNCS)
NONSMOOTH_FUNCS = {"abs", "min", "max"}

_BINARY = {
    "+": np.add,
    "-": np.subtract,
    "*": np.multiply,
    "/": np.divide,
    "^": np.power,
}


# -- tree -----------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: float

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError(f"non-finite constant {self.value!r}")


@dataclass(frozen=True)
class Var:
    index: int


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"

    def __post_init__(self):
        if self.op not in _BINARY:
            raise ValueError(f"unknown binary operator {self.op!r}")


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple

    def __post_init__(self):
        if self.name in UNARY_FUNCS:
            if len(self.args) != 1:
                raise ValueError(f"{self.name} takes exactly one argument")
        elif self.name in VARIADIC_FUNCS:
            if len(self.args) < 2:
                raise ValueError(f"{self.name} takes at least two arguments")
        else:
            raise ValueError(f"unknown function {self.name!r}")


Node = Const | Var | Neg | BinOp | Call


# -- tokenizer --------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<var>x(?:\d+|\[\s*\d+\s*\]))
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Tok:
    kind: str  # number | var | name | op | end
    text: str
    offset: int


def _tokenize(text):
    data = text.encode("utf-8")
    pos = 0
    out = []
    # offsets are reported in bytes; tokens are ASCII so char/byte agree
    # up to the first non-ASCII character, which is itself an error
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            boff = len(text[:pos].encode("utf-8"))
            raise ExpressionSyntaxError(
                f"unexpected character {text[pos]!r}", text, boff,
                ("number", "variable", "function", "(", "+", "-"),
            )
        kind = m.lastgroup
        if kind != "ws":
            out.append(_Tok(kind, m.group(), len(text[:pos].encode("utf-8"))))
        pos = m.end()
    out.append(_Tok("end", "", len(data)))
    return out


class _Parser:
    def __init__(self, text, dimension):
        self.text = text
        self.dimension = dimension
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.toks[self.i]

    def advance(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def fail(self, expected):
        t = self.tok
        what = "end of input" if t.kind == "end" else repr(t.text)
        raise ExpressionSyntaxError(f"unexpected {what}", self.text, t.offset, expected)

    def expect(self, text):
        if self.tok.kind == "op" and self.tok.text == text:
            return self.advance()
        self.fail((text,))

    def parse(self):
        node = self.expr()
        if self.tok.kind != "end":
            self.fail(("+", "-", "*", "/", "^", "end of input"))
        return node

    def expr(self):
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.advance().text
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.advance().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.tok.kind == "op" and self.tok.text == "-":
            self.advance()
            return Neg(self.unary())
        if self.tok.kind == "op" and self.tok.text == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        t = self.tok
        if t.kind == "number":
            self.advance()
            return Const(float(t.text))
        if t.kind == "var":
            self.advance()
            idx = int(t.text[1:].strip("[] \t"))
            if idx >= self.dimension:
                raise VariableIndexError(
                    f"variable {t.text} at offset {t.offset} out of range for dimension {self.dimension}"
                )
            return Var(idx)
        if t.kind == "name":
            if t.text not in FUNCTIONS:
                raise ExpressionSyntaxError(
                    f"unknown function {t.text!r}", self.text, t.offset, sorted(FUNCTIONS)
                )
            self.advance()
            self.expect("(")
            args = [self.expr()]
            while self.tok.kind == "op" and self.tok.text == ",":
                self.advance()
                args.append(self.expr())
            self.expect(")")
            try:
                return Call(t.text, tuple(args))
            except ValueError as exc:
                raise ExpressionSyntaxError(str(exc), self.text, t.offset) from None
        if t.kind == "op" and t.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        self.fail(("number", "variable", "function", "("))


def parse_expression(text: str, dimension: int) -> Node:
    """Parse ``text`` into an expression tree over ``x0 .. x{dimension-1}``."""
    if not text or not text.strip():
        raise ExpressionSyntaxError("empty expression", text or "", 0, ("expression",))
    return _Parser(text, dimension).parse()


# -- printing -------------------------------------------------------------


def to_text(node: Node) -> str:
    """Fully parenthesised source text; re-parses to an equivalent tree."""
    if isinstance(node, Const):
        return repr(float(node.value)) if node.value >= 0 else f"(-{repr(-float(node.value))})"
    if isinstance(node, Var):
        return f"x{node.index}"
    if isinstance(node, Neg):
        return f"(-{to_text(node.operand)})"
    if isinstance(node, BinOp):
        return f"({to_text(node.left)} {node.op} {to_text(node.right)})"
    return f"{node.name}({', '.join(to_text(a) for a in node.args)})"


def max_variable(node: Node) -> int:
    """Largest variable index referenced, or -1 for constant trees."""
    if isinstance(node, Var):
        return node.index
    if isinstance(node, Const):
        return -1
    if isinstance(node, Neg):
        return max_variable(node.operand)
    if isinstance(node, BinOp):
        return max(max_variable(node.left), max_variable(node.right))
    return max(max_variable(a) for a in node.args)


# -- evaluation -----------------------------------------------------------


def evaluate(node: Node, X: np.ndarray, kinks: list | None = None) -> np.ndarray:
    """Evaluate over the rows of ``X`` (shape ``(m, n)``); returns shape ``(m,)``.

    Non-finite results (log of a non-positive number, division by zero, ...)
    come back as nan/inf; callers decide how to report them. When ``kinks``
    is a list, a flag is appended for each abs/min/max node whose branch
    choice is not uniform across the rows, or is tied on some row.
    """
    with np.errstate(all="ignore"):
        return _eval(node, X, kinks)


def _eval(node, X, kinks):
    if isinstance(node, Const):
        return np.full(X.shape[0], node.value)
    if isinstance(node, Var):
        return X[:, node.index]
    if isinstance(node, Neg):
        return -_eval(node.operand, X, kinks)
    if isinstance(node, BinOp):
        return _BINARY[node.op](_eval(node.left, X, kinks), _eval(node.right, X, kinks))
    args = [_eval(a, X, kinks) for a in node.args]
    if node.name in UNARY_FUNCS:
        if kinks is not None and node.name == "abs":
            a = args[0]
            kinks.append(bool(np.any(a == 0) or (np.any(a > 0) and np.any(a < 0))))
        return UNARY_FUNCS[node.name](args[0])
    fn = VARIADIC_FUNCS[node.name]
    out = args[0]
    for a in args[1:]:
        if kinks is not None:
            pick = out <= a
            kinks.append(bool(np.any(out == a) or (np.any(pick) and not np.all(pick))))
        out = fn(out, a)
    return out
