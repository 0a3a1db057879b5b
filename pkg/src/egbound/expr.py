"""Real-arithmetic expression trees, their s-expression syntax, and a
high-precision reference evaluator.

The evaluator is only ever used as a testing oracle: it computes the
real value of an expression at a point with ~128 significant bits, which
is enough to judge containment of binary64 interval enclosures.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Mapping, Union

import mpmath
from mpmath.ctx_iv import MPIntervalContext

UNARY_OPS = ("neg", "sqrt", "ln", "exp")
BINARY_OPS = ("add", "sub", "mul", "div")

# surface symbol -> op tag
_SYMBOLS = {"+": "add", "-": "sub", "*": "mul", "/": "div",
            "neg": "neg", "sqrt": "sqrt", "ln": "ln", "exp": "exp"}
_OP_SYMBOL = {"add": "+", "sub": "-", "mul": "*", "div": "/",
              "neg": "neg", "sqrt": "sqrt", "ln": "ln", "exp": "exp"}

MAX_POW_EXPONENT = 32

_DECIMAL_RE = re.compile(r"[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?\Z")
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_.']*\Z")
_PVAR_RE = re.compile(r"\?[A-Za-z_][A-Za-z0-9_]*\Z")
_INT_RE = re.compile(r"[+-]?\d+\Z")


class ParseError(ValueError):
    """Malformed s-expression text.  Carries a 1-based line/column."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        where = f"{line}:{column}: " if line else ""
        super().__init__(f"{where}{message}")


class DomainViolation(ArithmeticError):
    """The real-valued expression is undefined at the evaluation point."""


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    literal: str

    @property
    def value(self) -> Fraction:
        return Fraction(self.literal)


@dataclass(frozen=True)
class Unary:
    op: str
    child: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: int


Expr = Union[Var, Const, Unary, Binary, Pow]


def is_decimal_literal(text: str) -> bool:
    return _DECIMAL_RE.match(text) is not None


# --------------------------------------------------------------------------
# reader

@dataclass(frozen=True)
class Token:
    text: str
    line: int
    column: int


@dataclass
class SList:
    """A parenthesised list read from text, remembering where it opened."""
    items: list
    line: int
    column: int


def tokenize(text: str) -> Iterator[Token]:
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            line, col = line + 1, 1
            i += 1
        elif c.isspace():
            i += 1
            col += 1
        elif c == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif c in "()":
            yield Token(c, line, col)
            i += 1
            col += 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in "();":
                j += 1
            yield Token(text[i:j], line, col)
            col += j - i
            i = j


def read_sexprs(text: str) -> list:
    """Read every top-level datum in ``text``.

    Atoms come back as :class:`Token`, lists as :class:`SList`.
    """
    stack: list[SList] = []
    out: list = []
    last = Token("", 1, 1)
    for tok in tokenize(text):
        last = tok
        if tok.text == "(":
            stack.append(SList([], tok.line, tok.column))
        elif tok.text == ")":
            if not stack:
                raise ParseError("unexpected ')'", tok.line, tok.column)
            done = stack.pop()
            (stack[-1].items if stack else out).append(done)
        else:
            (stack[-1].items if stack else out).append(tok)
    if stack:
        raise ParseError("unclosed '('", stack[-1].line, stack[-1].column)
    if not out:
        raise ParseError("empty input", last.line, last.column)
    return out


def read_one(text: str):
    data = read_sexprs(text)
    if len(data) != 1:
        extra = data[1]
        raise ParseError("trailing input after expression", *_where(extra))
    return data[0]


def _where(datum) -> tuple[int, int]:
    return datum.line, datum.column


def build_expr(datum, *, pattern_vars: bool = False) -> Expr:
    """Turn a datum from :func:`read_sexprs` into an :data:`Expr`.

    With ``pattern_vars`` set, symbols like ``?a`` are accepted as
    variables; rewrite patterns are ordinary expressions over them.
    """
    if isinstance(datum, Token):
        text = datum.text
        if is_decimal_literal(text):
            return Const(text)
        if _IDENT_RE.match(text) and text not in _SYMBOLS and text != "pow":
            return Var(text)
        if pattern_vars and _PVAR_RE.match(text):
            return Var(text)
        raise ParseError(f"bad atom {text!r}", datum.line, datum.column)

    items = datum.items
    if not items:
        raise ParseError("empty list", datum.line, datum.column)
    head = items[0]
    if not isinstance(head, Token):
        raise ParseError("operator expected", *_where(head))
    args = items[1:]
    if not args:
        raise ParseError(f"{head.text!r} needs arguments", head.line, head.column)

    if head.text == "pow":
        if len(args) != 2:
            raise ParseError("pow takes a base and an integer exponent",
                             head.line, head.column)
        exp_tok = args[1]
        if not isinstance(exp_tok, Token) or not _INT_RE.match(exp_tok.text):
            raise ParseError("pow exponent must be an integer literal",
                             *_where(exp_tok))
        k = int(exp_tok.text)
        if abs(k) > MAX_POW_EXPONENT:
            raise ParseError(f"pow exponent {k} out of range "
                             f"[-{MAX_POW_EXPONENT}, {MAX_POW_EXPONENT}]",
                             *_where(exp_tok))
        return Pow(build_expr(args[0], pattern_vars=pattern_vars), k)

    op = _SYMBOLS.get(head.text)
    if op is None:
        raise ParseError(f"unknown operator {head.text!r}", head.line, head.column)
    children = [build_expr(a, pattern_vars=pattern_vars) for a in args]

    if op == "sub" and len(children) == 1:
        return Unary("neg", children[0])
    if op in UNARY_OPS:
        if len(children) != 1:
            raise ParseError(f"{head.text} takes one argument", head.line, head.column)
        return Unary(op, children[0])
    if len(children) == 1:
        raise ParseError(f"{head.text} takes at least two arguments",
                         head.line, head.column)
    # n-ary forms fold to the left: (+ a b c) = (+ (+ a b) c)
    acc = children[0]
    for c in children[1:]:
        acc = Binary(op, acc, c)
    return acc


def parse_expr(text: str) -> Expr:
    """Parse one expression, e.g. ``"(- 1 (/ (* 2 y) (+ x y)))"``."""
    return build_expr(read_one(text))


def format_expr(e: Expr) -> str:
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Const):
        return e.literal
    if isinstance(e, Unary):
        return f"({_OP_SYMBOL[e.op]} {format_expr(e.child)})"
    if isinstance(e, Binary):
        return f"({_OP_SYMBOL[e.op]} {format_expr(e.left)} {format_expr(e.right)})"
    if isinstance(e, Pow):
        return f"(pow {format_expr(e.base)} {e.exponent})"
    raise TypeError(f"not an expression: {e!r}")


def free_vars(e: Expr) -> set[str]:
    out: set[str] = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if isinstance(node, Var):
            out.add(node.name)
        elif isinstance(node, Unary):
            stack.append(node.child)
        elif isinstance(node, Binary):
            stack.extend((node.left, node.right))
        elif isinstance(node, Pow):
            stack.append(node.base)
    return out


def expr_size(e: Expr) -> int:
    if isinstance(e, Unary):
        return 1 + expr_size(e.child)
    if isinstance(e, Binary):
        return 1 + expr_size(e.left) + expr_size(e.right)
    if isinstance(e, Pow):
        return 1 + expr_size(e.base)
    return 1


# --------------------------------------------------------------------------
# reference semantics

ORACLE_PREC = 128

_mp = mpmath.MPContext()
_mp.prec = ORACLE_PREC
_iv = MPIntervalContext()
_iv.prec = ORACLE_PREC


def oracle_value(x) -> mpmath.mpf:
    """Oracle number for a float / int / decimal string / Fraction (floats and ints exactly)."""
    if isinstance(x, Fraction):
        return _mp.mpf(x.numerator) / x.denominator
    if isinstance(x, str):
        return oracle_value(Fraction(x))
    return _mp.mpf(x)


def concrete_eval(e: Expr, rho: Mapping[str, object]):
    """Evaluate ``e`` at the point ``rho`` with 128-bit working precision.

    Returns an mpmath ``mpf`` (possibly infinite).  Raises
    :class:`DomainViolation` where the real function is undefined and
    ``KeyError`` for an unbound variable.
    """
    if isinstance(e, Var):
        return oracle_value(rho[e.name])
    if isinstance(e, Const):
        return oracle_value(e.value)
    if isinstance(e, Unary):
        v = concrete_eval(e.child, rho)
        if e.op == "neg":
            return -v
        if e.op == "sqrt":
            if v < 0:
                raise DomainViolation(f"sqrt of negative value {v}")
            return _mp.sqrt(v)
        if e.op == "ln":
            if v <= 0:
                raise DomainViolation(f"ln of nonpositive value {v}")
            return _mp.log(v)
        if e.op == "exp":
            return _mp.exp(v)
        raise ValueError(f"unknown unary op {e.op!r}")
    if isinstance(e, Binary):
        a = concrete_eval(e.left, rho)
        b = concrete_eval(e.right, rho)
        if e.op == "add":
            r = a + b
        elif e.op == "sub":
            r = a - b
        elif e.op == "mul":
            if (_mp.isinf(a) and b == 0) or (_mp.isinf(b) and a == 0):
                raise DomainViolation("0 * inf")
            r = a * b
        elif e.op == "div":
            if b == 0:
                raise DomainViolation("division by zero")
            if _mp.isinf(a) and _mp.isinf(b):
                raise DomainViolation("inf / inf")
            r = a / b
        else:
            raise ValueError(f"unknown binary op {e.op!r}")
        if _mp.isnan(r):
            raise DomainViolation(f"undefined {e.op} of {a} and {b}")
        return r
    if isinstance(e, Pow):
        v = concrete_eval(e.base, rho)
        if v == 0 and e.exponent < 0:
            raise DomainViolation("zero to a negative power")
        if e.exponent == 0:
            return _mp.mpf(1)
        return v ** e.exponent
    raise TypeError(f"not an expression: {e!r}")


def concrete_enclosure(e: Expr, rho: Mapping[str, object]) -> tuple:
    """Rigorous bounds ``(lo, hi)`` on the real value of ``e`` at ``rho``.

    Interval evaluation at oracle precision; it accounts for the
    oracle's own rounding, which matters when the true value is zero
    but the point evaluation is not (``ln(exp(x)) - x``).  Raises
    :class:`DomainViolation` if some subterm may leave its domain.
    """
    v = _enclose(e, rho)
    return _mp.mpf(v.a), _mp.mpf(v.b)


def _enclose(e: Expr, rho):
    if isinstance(e, Var):
        return _iv.mpf(_iv_point(rho[e.name]))
    if isinstance(e, Const):
        q = e.value
        return _iv.mpf(q.numerator) / q.denominator
    if isinstance(e, Unary):
        v = _enclose(e.child, rho)
        if e.op == "neg":
            return -v
        if e.op == "sqrt":
            if v.a < 0:
                raise DomainViolation("sqrt argument may be negative")
            return _iv.sqrt(v)
        if e.op == "ln":
            if v.a <= 0:
                raise DomainViolation("ln argument may be nonpositive")
            return _iv.log(v)
        return _iv.exp(v)
    if isinstance(e, Binary):
        a, b = _enclose(e.left, rho), _enclose(e.right, rho)
        if e.op == "add":
            return a + b
        if e.op == "sub":
            return a - b
        if e.op == "mul":
            return a * b
        if b.a <= 0 <= b.b:
            raise DomainViolation("divisor may be zero")
        return a / b
    if isinstance(e, Pow):
        v = _enclose(e.base, rho)
        if e.exponent < 0 and v.a <= 0 <= v.b:
            raise DomainViolation("zero to a negative power")
        return v ** e.exponent if e.exponent else _iv.mpf(1)
    raise TypeError(f"not an expression: {e!r}")


def _iv_point(x):
    if isinstance(x, Fraction):
        return _iv.mpf(x.numerator) / x.denominator
    if isinstance(x, str):
        return _iv_point(Fraction(x))
    return x
