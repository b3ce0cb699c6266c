"""A small arithmetic language for user-supplied Christoffel and metric fields.

Grammar (``^`` is right associative and binds tighter than unary minus
only on its right-hand side)::

    expr    := term (('+' | '-') term)*
    term    := factor (('*' | '/') factor)*
    factor  := unary ('^' factor)?
    unary   := '-' unary | primary
    primary := number | var | func '(' expr ')' | '(' expr ')'

Variables are ``x1 .. xd``; ``pi`` is accepted as a constant.  Evaluation
works on floats or numpy arrays (one array per coordinate), so a whole batch
of chart points is evaluated in one pass.

>>> e = parse("x1^2^3", 1)
>>> float(evaluate(e, [2.0]))
256.0
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import ExprDomainError, ExprSyntaxError

FUNCTIONS = ("sin", "cos", "tan", "sinh", "cosh", "tanh", "exp", "log", "sqrt")
CONSTANTS = {"pi": math.pi}


class Expr:
    """Base class of AST nodes.  Nodes are immutable and compare structurally."""

    def __add__(self, other):
        return add(self, _lift(other))

    def __radd__(self, other):
        return add(_lift(other), self)

    def __sub__(self, other):
        return sub(self, _lift(other))

    def __rsub__(self, other):
        return sub(_lift(other), self)

    def __mul__(self, other):
        return mul(self, _lift(other))

    def __rmul__(self, other):
        return mul(_lift(other), self)

    def __truediv__(self, other):
        return div(self, _lift(other))

    def __neg__(self):
        return neg(self)

    def __str__(self):
        return to_source(self)


@dataclass(frozen=True, eq=True)
class Num(Expr):
    value: float
    pos: int = field(default=-1, compare=False)


@dataclass(frozen=True, eq=True)
class Var(Expr):
    index: int  # 1-based
    pos: int = field(default=-1, compare=False)


@dataclass(frozen=True, eq=True)
class Neg(Expr):
    arg: Expr
    pos: int = field(default=-1, compare=False)


@dataclass(frozen=True, eq=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr
    pos: int = field(default=-1, compare=False)


@dataclass(frozen=True, eq=True)
class Call(Expr):
    func: str
    arg: Expr
    pos: int = field(default=-1, compare=False)


def _lift(x):
    return x if isinstance(x, Expr) else Num(float(x))


# ---------------------------------------------------------------- parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(src):
    tokens = []
    pos = 0
    n = len(src)
    while pos < n:
        if src[pos:].strip() == "":
            break
        m = _TOKEN.match(src, pos)
        if m is None or m.end() == pos:
            bad = pos + (len(src[pos:]) - len(src[pos:].lstrip()))
            raise ExprSyntaxError(f"unexpected character {src[bad]!r}", len(src[:bad].encode()), src)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), len(src[:start].encode())))
        pos = m.end()
    tokens.append(("end", "", len(src.encode())))
    return tokens


class _Parser:
    def __init__(self, src, d):
        self.src = src
        self.d = d
        self.tokens = _tokenize(src)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, off = self.take()
        if text != value:
            found = "end of input" if kind == "end" else repr(text)
            raise ExprSyntaxError(f"expected {value!r}, found {found}", off, self.src)

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            _, op, off = self.take()
            node = BinOp(op, node, self.term(), off)
        return node

    def term(self):
        node = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            _, op, off = self.take()
            node = BinOp(op, node, self.factor(), off)
        return node

    def factor(self):
        base = self.unary()
        if self.peek()[1] == "^":
            _, _, off = self.take()
            return BinOp("^", base, self.factor(), off)
        return base

    def unary(self):
        if self.peek()[1] == "-":
            _, _, off = self.take()
            arg = self.unary()
            if isinstance(arg, Num):
                return Num(-arg.value, off)
            return Neg(arg, off)
        return self.primary()

    def primary(self):
        kind, text, off = self.take()
        if kind == "num":
            return Num(float(text), off)
        if kind == "name":
            m = re.fullmatch(r"x(\d+)", text)
            if m:
                k = int(m.group(1))
                if k < 1 or k > self.d:
                    raise ExprSyntaxError(
                        f"variable {text} out of range for dimension {self.d}", off, self.src)
                return Var(k, off)
            if text in CONSTANTS:
                return Num(CONSTANTS[text], off)
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(text, arg, off)
            raise ExprSyntaxError(f"unknown identifier {text!r}", off, self.src)
        if text == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(text)
        raise ExprSyntaxError(f"unexpected {found}", off, self.src)


def parse(src: str, d: int) -> Expr:
    """Parse ``src`` into an AST over variables ``x1 .. xd``."""
    if not isinstance(src, str) or not src.strip():
        raise ExprSyntaxError("empty expression", 0, src)
    p = _Parser(src, d)
    node = p.expr()
    kind, text, off = p.peek()
    if kind != "end":
        raise ExprSyntaxError(f"unexpected trailing {text!r}", off, src)
    return node


def to_source(e: Expr) -> str:
    """Fully parenthesized source text; ``parse(to_source(e))`` reproduces ``e``."""
    if isinstance(e, Num):
        text = repr(float(e.value))
        if text in ("inf", "-inf", "nan"):
            raise ValueError("non-finite literal cannot be printed")
        return f"({text})" if e.value < 0 or text.startswith("-") else text
    if isinstance(e, Var):
        return f"x{e.index}"
    if isinstance(e, Neg):
        return f"(-{to_source(e.arg)})"
    if isinstance(e, BinOp):
        return f"({to_source(e.left)}{e.op}{to_source(e.right)})"
    if isinstance(e, Call):
        return f"{e.func}({to_source(e.arg)})"
    raise TypeError(f"not an expression node: {e!r}")


# ---------------------------------------------------------------- evaluation

def _bad(mask):
    return bool(np.any(mask))


def _eval(e, x):
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        return x[e.index - 1]
    if isinstance(e, Neg):
        return -_eval(e.arg, x)
    if isinstance(e, BinOp):
        a = _eval(e.left, x)
        b = _eval(e.right, x)
        op = e.op
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            if _bad(np.asarray(b) == 0):
                raise ExprDomainError("division by zero", e.pos)
            return a / b
        return _power(a, b, e.pos)
    if isinstance(e, Call):
        a = _eval(e.arg, x)
        f = e.func
        if f == "log" and _bad(np.asarray(a) <= 0):
            raise ExprDomainError("log of a nonpositive value", e.pos)
        if f == "sqrt" and _bad(np.asarray(a) < 0):
            raise ExprDomainError("sqrt of a negative value", e.pos)
        return getattr(np, f)(a)
    raise TypeError(f"not an expression node: {e!r}")


def _power(a, b, pos):
    a_arr = np.asarray(a, dtype=float)
    b_arr = np.asarray(b, dtype=float)
    integral = np.equal(np.mod(b_arr, 1.0), 0.0)
    if _bad(~integral & (a_arr < 0)):
        raise ExprDomainError("fractional power of a negative base", pos)
    if _bad((a_arr == 0) & (b_arr < 0)):
        raise ExprDomainError("zero raised to a negative power", pos)
    return np.power(a_arr, b_arr) if (a_arr.ndim or b_arr.ndim) else float(a_arr ** b_arr)


def evaluate(e: Expr, x):
    """Evaluate ``e`` at ``x``.

    ``x`` is a sequence of coordinates, or an array whose *last* axis holds
    the coordinates (a batch of points).  Returns a float or an array with
    the batch shape.
    """
    arr = np.asarray(x, dtype=float)
    coords = np.moveaxis(arr, -1, 0) if arr.ndim > 1 else arr
    with np.errstate(all="ignore"):
        value = _eval(e, coords)
    if arr.ndim > 1:
        value = np.broadcast_to(np.asarray(value, dtype=float), arr.shape[:-1])
        if not np.all(np.isfinite(value)):
            raise ExprDomainError("non-finite value", getattr(e, "pos", None))
        return value
    value = float(value)
    if not math.isfinite(value):
        raise ExprDomainError("non-finite value", getattr(e, "pos", None))
    return value


# short alias; ``evaluate`` is the primary name so the builtin eval is not shadowed
eval = evaluate  # noqa: A001


# ---------------------------------------------------------------- construction with constant folding

ZERO = Num(0.0)
ONE = Num(1.0)


def _is(e, v):
    return isinstance(e, Num) and e.value == v


def add(a, b):
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value + b.value)
    if _is(a, 0):
        return b
    if _is(b, 0):
        return a
    return BinOp("+", a, b)


def sub(a, b):
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value - b.value)
    if _is(b, 0):
        return a
    if _is(a, 0):
        return neg(b)
    return BinOp("-", a, b)


def mul(a, b):
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value * b.value)
    if _is(a, 0) or _is(b, 0):
        return ZERO
    if _is(a, 1):
        return b
    if _is(b, 1):
        return a
    return BinOp("*", a, b)


def div(a, b):
    if isinstance(a, Num) and isinstance(b, Num) and b.value != 0:
        return Num(a.value / b.value)
    if _is(a, 0) and not _is(b, 0):
        return ZERO
    if _is(b, 1):
        return a
    return BinOp("/", a, b)


def power(a, b):
    if isinstance(a, Num) and isinstance(b, Num):
        try:
            return Num(float(_power(a.value, b.value, None)))
        except ExprDomainError:
            pass
    if _is(b, 1):
        return a
    if _is(b, 0):
        return ONE
    return BinOp("^", a, b)


def neg(a):
    if isinstance(a, Num):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def call(f, a):
    if isinstance(a, Num):
        try:
            return Num(evaluate(Call(f, a), []))
        except ExprDomainError:
            pass
    return Call(f, a)


def depends_on(e: Expr, k: int | None = None) -> bool:
    """True when ``e`` mentions variable ``k`` (or any variable if ``k`` is None)."""
    if isinstance(e, Num):
        return False
    if isinstance(e, Var):
        return k is None or e.index == k
    if isinstance(e, (Neg, Call)):
        return depends_on(e.arg, k)
    return depends_on(e.left, k) or depends_on(e.right, k)


# ---------------------------------------------------------------- differentiation

def _dcall(f, a):
    """Outer derivative f'(a) as an expression."""
    if f == "sin":
        return call("cos", a)
    if f == "cos":
        return neg(call("sin", a))
    if f == "tan":
        return div(ONE, power(call("cos", a), Num(2.0)))
    if f == "sinh":
        return call("cosh", a)
    if f == "cosh":
        return call("sinh", a)
    if f == "tanh":
        return div(ONE, power(call("cosh", a), Num(2.0)))
    if f == "exp":
        return call("exp", a)
    if f == "log":
        return div(ONE, a)
    if f == "sqrt":
        return div(Num(0.5), call("sqrt", a))
    raise ValueError(f"unknown function {f}")


def diff(e: Expr, k: int) -> Expr:
    """Symbolic partial derivative of ``e`` with respect to ``x_k`` (1-based)."""
    if k < 1:
        raise ValueError("variable index is 1-based")
    if isinstance(e, Num):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.index == k else ZERO
    if isinstance(e, Neg):
        return neg(diff(e.arg, k))
    if isinstance(e, Call):
        return mul(_dcall(e.func, e.arg), diff(e.arg, k))
    a, b = e.left, e.right
    if e.op == "+":
        return add(diff(a, k), diff(b, k))
    if e.op == "-":
        return sub(diff(a, k), diff(b, k))
    if e.op == "*":
        return add(mul(diff(a, k), b), mul(a, diff(b, k)))
    if e.op == "/":
        return div(sub(mul(diff(a, k), b), mul(a, diff(b, k))), power(b, Num(2.0)))
    # power
    if not depends_on(b):
        return mul(mul(b, power(a, sub(b, ONE))), diff(a, k))
    # general a^b = exp(b log a)
    return mul(e, add(mul(diff(b, k), call("log", a)), mul(b, div(diff(a, k), a))))
