"""Arithmetic expressions in one free variable, used to define rate functions.

Grammar (binary ``^`` is right-associative, unary minus binds tighter):

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := unary ('^' factor)?
    unary  := '-' unary | atom
    atom   := number | var | func '(' expr {',' expr} ')' | '(' expr ')'

Functions: exp, log, sqrt, abs (unary); pow, min, max (binary);
if (condition, then, else).  Comparison operators ==, <, <=, >, >= are
accepted only as the top level of an ``if`` condition.

Expressions are immutable and evaluation is pure: the same input always
produces the same float.  Evaluation accepts a scalar or a numpy array and
either returns finite values or raises :class:`EvalDomainError` naming the
offending input (log of a nonpositive number, division by zero, overflow).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Union

import numpy as np

__all__ = [
    "ExprSyntaxError",
    "EvalDomainError",
    "RateExpression",
    "parse_expr",
]


class ExprSyntaxError(ValueError):
    """Malformed expression text; carries the character position."""

    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} (at position {pos})")
        self.pos = pos


class EvalDomainError(ArithmeticError):
    """Evaluation left the real domain or the representable float range."""


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class Bin:
    op: str  # + - * / ^
    lhs: "Node"
    rhs: "Node"


@dataclass(frozen=True)
class Cmp:
    op: str  # == < <= > >=
    lhs: "Node"
    rhs: "Node"


@dataclass(frozen=True)
class Call:
    fn: str
    args: tuple["Node", ...]


Node = Union[Num, Var, Neg, Bin, Cmp, Call]

_FUNCTIONS = {"exp": 1, "log": 1, "sqrt": 1, "abs": 1, "pow": 2, "min": 2, "max": 2, "if": 3}

_CMP_OPS = ("==", "<=", ">=", "<", ">")


# ---------------------------------------------------------------------------
# Tokenizer
# ---------------------------------------------------------------------------


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    toks: list[tuple[str, str, int]] = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c.isdigit() or (c == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            seen_exp = False
            while j < n and (text[j].isdigit() or text[j] == "." or
                             (text[j] in "eE" and not seen_exp and j + 1 < n and
                              (text[j + 1].isdigit() or text[j + 1] in "+-")) or
                             (text[j] in "+-" and j > i and text[j - 1] in "eE")):
                if text[j] in "eE":
                    seen_exp = True
                j += 1
            try:
                float(text[i:j])
            except ValueError:
                raise ExprSyntaxError(f"bad number {text[i:j]!r}", i) from None
            toks.append(("num", text[i:j], i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            toks.append(("name", text[i:j], i))
            i = j
            continue
        for op in _CMP_OPS:
            if text.startswith(op, i):
                toks.append(("cmp", op, i))
                i += len(op)
                break
        else:
            if c in "+-*/^(),":
                toks.append((c, c, i))
                i += 1
            else:
                raise ExprSyntaxError(f"unexpected character {c!r}", i)
    toks.append(("end", "", n))
    return toks


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


class _Parser:
    def __init__(self, text: str, var: str):
        self.toks = _tokenize(text)
        self.pos = 0
        self.var = var

    def peek(self) -> tuple[str, str, int]:
        return self.toks[self.pos]

    def take(self, kind: str | None = None) -> tuple[str, str, int]:
        tok = self.toks[self.pos]
        if kind is not None and tok[0] != kind:
            raise ExprSyntaxError(f"expected {kind!r}, found {tok[1] or 'end of input'!r}", tok[2])
        self.pos += 1
        return tok

    def parse(self) -> Node:
        node = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ExprSyntaxError(f"unexpected {tok[1]!r}", tok[2])
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[0] in ("+", "-"):
            op = self.take()[0]
            node = Bin(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.factor()
        while self.peek()[0] in ("*", "/"):
            op = self.take()[0]
            node = Bin(op, node, self.factor())
        return node

    def factor(self) -> Node:
        node = self.unary()
        if self.peek()[0] == "^":
            self.take()
            node = Bin("^", node, self.factor())  # right-associative
        return node

    def unary(self) -> Node:
        if self.peek()[0] == "-":
            self.take()
            return Neg(self.unary())
        return self.atom()

    def atom(self) -> Node:
        kind, text, pos = self.take()
        if kind == "num":
            return Num(float(text))
        if kind == "name":
            if self.peek()[0] == "(":
                if text not in _FUNCTIONS:
                    raise ExprSyntaxError(f"unknown function {text!r}", pos)
                self.take("(")
                args = [self.condition() if text == "if" else self.expr()]
                while self.peek()[0] == ",":
                    self.take()
                    args.append(self.expr())
                self.take(")")
                if len(args) != _FUNCTIONS[text]:
                    raise ExprSyntaxError(
                        f"{text} takes {_FUNCTIONS[text]} argument(s), got {len(args)}", pos)
                return Call(text, tuple(args))
            if text == self.var:
                return Var(text)
            raise ExprSyntaxError(f"unknown identifier {text!r}", pos)
        if kind == "(":
            node = self.expr()
            self.take(")")
            return node
        raise ExprSyntaxError(f"unexpected {text or 'end of input'!r}", pos)

    def condition(self) -> Node:
        # Comparisons are legal only here, as the first argument of if().
        node = self.expr()
        if self.peek()[0] == "cmp":
            op = self.take()[1]
            node = Cmp(op, node, self.expr())
        return node


# ---------------------------------------------------------------------------
# Evaluation (scalar or numpy array; numpy semantics throughout)
# ---------------------------------------------------------------------------


def _eval(node: Node, x):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return x
    if isinstance(node, Neg):
        return -_eval(node.arg, x)
    if isinstance(node, Bin):
        a = _eval(node.lhs, x)
        b = _eval(node.rhs, x)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            return np.divide(a, b)
        return np.power(a, b)
    if isinstance(node, Cmp):
        a = _eval(node.lhs, x)
        b = _eval(node.rhs, x)
        if node.op == "==":
            return a == b
        if node.op == "<":
            return a < b
        if node.op == "<=":
            return a <= b
        if node.op == ">":
            return a > b
        return a >= b
    if isinstance(node, Call):
        if node.fn == "if":
            cond = _eval(node.args[0], x)
            if not isinstance(cond, (bool, np.bool_, np.ndarray)):
                cond = np.not_equal(cond, 0.0)
            return np.where(cond, _eval(node.args[1], x), _eval(node.args[2], x))
        vals = [_eval(a, x) for a in node.args]
        fn = {"exp": np.exp, "log": np.log, "sqrt": np.sqrt, "abs": np.abs,
              "pow": np.power, "min": np.minimum, "max": np.maximum}[node.fn]
        return fn(*vals)
    raise TypeError(f"bad node {node!r}")


# ---------------------------------------------------------------------------
# Compiled scalar evaluation: a closure tree over plain floats, an order of
# magnitude faster than the numpy path for the one-point calls the adaptive
# quadrature makes.  Only the branch an `if` selects is evaluated.
# ---------------------------------------------------------------------------


def _compile_scalar(node: Node):
    if isinstance(node, Num):
        v = node.value
        return lambda x: v
    if isinstance(node, Var):
        return lambda x: x
    if isinstance(node, Neg):
        f = _compile_scalar(node.arg)
        return lambda x: -f(x)
    if isinstance(node, Bin):
        fa = _compile_scalar(node.lhs)
        fb = _compile_scalar(node.rhs)
        op = node.op
        if op == "+":
            return lambda x: fa(x) + fb(x)
        if op == "-":
            return lambda x: fa(x) - fb(x)
        if op == "*":
            return lambda x: fa(x) * fb(x)
        if op == "/":
            return lambda x: fa(x) / fb(x)
        return lambda x: math.pow(fa(x), fb(x))
    if isinstance(node, Cmp):
        fa = _compile_scalar(node.lhs)
        fb = _compile_scalar(node.rhs)
        op = node.op
        if op == "==":
            return lambda x: fa(x) == fb(x)
        if op == "<":
            return lambda x: fa(x) < fb(x)
        if op == "<=":
            return lambda x: fa(x) <= fb(x)
        if op == ">":
            return lambda x: fa(x) > fb(x)
        return lambda x: fa(x) >= fb(x)
    if isinstance(node, Call):
        if node.fn == "if":
            fc = _compile_scalar(node.args[0])
            ft = _compile_scalar(node.args[1])
            ff = _compile_scalar(node.args[2])
            return lambda x: ft(x) if fc(x) else ff(x)
        fns = [_compile_scalar(a) for a in node.args]
        if node.fn == "exp":
            g = fns[0]
            return lambda x: math.exp(g(x))
        if node.fn == "log":
            g = fns[0]
            return lambda x: math.log(g(x))
        if node.fn == "sqrt":
            g = fns[0]
            return lambda x: math.sqrt(g(x))
        if node.fn == "abs":
            g = fns[0]
            return lambda x: abs(g(x))
        if node.fn == "pow":
            g, h = fns
            return lambda x: math.pow(g(x), h(x))
        if node.fn == "min":
            g, h = fns
            return lambda x: min(g(x), h(x))
        g, h = fns
        return lambda x: max(g(x), h(x))
    raise TypeError(f"bad node {node!r}")


# ---------------------------------------------------------------------------
# Printer (round-trip stable: reparsing the printed source yields an
# identical tree)
# ---------------------------------------------------------------------------


def _print(node: Node) -> str:
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"-({_print(node.arg)})"
    if isinstance(node, Bin):
        return f"({_print(node.lhs)} {node.op} {_print(node.rhs)})"
    if isinstance(node, Cmp):
        return f"{_print(node.lhs)} {node.op} {_print(node.rhs)}"
    if isinstance(node, Call):
        return f"{node.fn}({', '.join(_print(a) for a in node.args)})"
    raise TypeError(f"bad node {node!r}")


@dataclass(frozen=True, eq=False)
class RateExpression:
    """A parsed expression in one free variable.

    Immutable; safe to share across threads.  Call it with a float or a
    numpy array.  Structural equality of two expressions is tested with
    :meth:`same_tree`.
    """

    ast: Node
    source: str
    var: str

    @cached_property
    def _scalar_fn(self):
        return _compile_scalar(self.ast)

    def __call__(self, x):
        if isinstance(x, float) or isinstance(x, int):
            try:
                out = self._scalar_fn(float(x))
            except (ValueError, ZeroDivisionError, OverflowError) as exc:
                raise EvalDomainError(
                    f"expression {self.source!r} is not finite at {self.var}={float(x)!r}: {exc}"
                ) from None
            if not math.isfinite(out):
                raise EvalDomainError(
                    f"expression {self.source!r} is not finite at {self.var}={float(x)!r}")
            return float(out)
        scalar = np.isscalar(x) or (isinstance(x, np.ndarray) and x.ndim == 0)
        arr = np.asarray(x, dtype=float)
        with np.errstate(all="ignore"):
            out = np.asarray(_eval(self.ast, arr), dtype=float)
        if out.shape != arr.shape:  # constant subexpressions do not broadcast
            out = np.broadcast_to(out, arr.shape).copy()
        bad = ~np.isfinite(out)
        if bad.any():
            where = arr if scalar else arr[np.argmax(bad)]
            raise EvalDomainError(
                f"expression {self.source!r} is not finite at {self.var}={float(np.ravel(where)[0])!r}")
        if scalar:
            return float(out)
        return out

    def to_source(self) -> str:
        return _print(self.ast)

    def same_tree(self, other: "RateExpression") -> bool:
        return self.ast == other.ast


def parse_expr(text: str, var: str = "n") -> RateExpression:
    """Parse ``text`` into a :class:`RateExpression` over the variable ``var``."""
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", 0)
    ast = _Parser(text, var).parse()
    return RateExpression(ast=ast, source=text, var=var)
