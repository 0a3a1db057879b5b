"""Binary64 interval domain with outward rounding.

Directed rounding is emulated: endpoints are computed in the default
round-to-nearest mode and then pushed one representable step outward,
except where an error-free transformation proves the endpoint exact
(add, sub, mul) or an exact rational computation is cheap (constants,
integer powers).  Infinite endpoints are never widened.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

INF = math.inf
MAX_FLOAT = 1.7976931348623157e308

# Veltkamp splitting overflows above this magnitude.
_SPLIT_LIMIT = 2.0 ** 995
# Below this, the rounding error of a product may itself be subnormal.
_TINY = 2.0 ** -969
_SPLITTER = 134217729.0  # 2**27 + 1


@dataclass(frozen=True, slots=True)
class Interval:
    """Closed interval ``[lo, hi]`` over the extended reals."""

    lo: float
    hi: float

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if math.isnan(lo) or math.isnan(hi):
            raise ValueError("NaN interval endpoint")
        if lo > hi:
            raise ValueError(f"reversed interval [{lo}, {hi}]")
        if lo == INF or hi == -INF:
            raise ValueError(f"interval [{lo}, {hi}] has no finite part")
        # normalise -0.0 so equal intervals are bit-identical
        object.__setattr__(self, "lo", lo + 0.0)
        object.__setattr__(self, "hi", hi + 0.0)

    is_empty = False

    def __contains__(self, x) -> bool:
        return self.lo <= x <= self.hi

    def __repr__(self) -> str:
        return f"[{self.lo!r}, {self.hi!r}]"


class EmptyInterval:
    """The empty set; a singleton distinct from every ``Interval``."""

    __slots__ = ()
    is_empty = True
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __contains__(self, x) -> bool:
        return False

    def __repr__(self) -> str:
        return "Empty"

    def __reduce__(self):
        return (EmptyInterval, ())


EMPTY = EmptyInterval()
IntervalLike = Union[Interval, EmptyInterval]

ENTIRE = Interval(-INF, INF)


def point(x: float) -> Interval:
    return Interval(x, x)


def next_up(x: float) -> float:
    return math.nextafter(x, INF)


def next_down(x: float) -> float:
    return math.nextafter(x, -INF)


# Widening is only applied to inexact results, so an infinite value seen
# here came from overflow and rounds back to the largest finite float.
def _up(x: float) -> float:
    return x if x == INF else next_up(x)


def _down(x: float) -> float:
    return x if x == -INF else next_down(x)


# --------------------------------------------------------------------------
# exact rational rounding

def round_down(q: Fraction) -> float:
    """Largest binary64 (or -inf) not above the rational ``q``."""
    try:
        d = float(q)
    except OverflowError:
        return MAX_FLOAT if q > 0 else -INF
    if math.isinf(d):
        return MAX_FLOAT if q > 0 else -INF
    if Fraction(d) > q:
        d = next_down(d)
    return d


def round_up(q: Fraction) -> float:
    """Smallest binary64 (or +inf) not below the rational ``q``."""
    return -round_down(-q)


def make_const(literal: Union[str, Fraction, int]) -> Interval:
    """Tightest interval around the exact value of a decimal literal."""
    q = Fraction(literal) if not isinstance(literal, Fraction) else literal
    return Interval(round_down(q), round_up(q))


# --------------------------------------------------------------------------
# lattice structure

def meet(a: IntervalLike, b: IntervalLike) -> IntervalLike:
    if a.is_empty or b.is_empty:
        return EMPTY
    lo = max(a.lo, b.lo)
    hi = min(a.hi, b.hi)
    if lo > hi:
        return EMPTY
    if lo == a.lo and hi == a.hi:
        return a
    if lo == b.lo and hi == b.hi:
        return b
    return Interval(lo, hi)


def leq(a: IntervalLike, b: IntervalLike) -> bool:
    """Inclusion order: ``a`` is a subset of ``b``."""
    if a.is_empty:
        return True
    if b.is_empty:
        return False
    return b.lo <= a.lo and a.hi <= b.hi


def hull(a: IntervalLike, b: IntervalLike) -> IntervalLike:
    if a.is_empty:
        return b
    if b.is_empty:
        return a
    return Interval(min(a.lo, b.lo), max(a.hi, b.hi))


def excludes_zero(a: IntervalLike) -> bool:
    return not a.is_empty and (a.lo > 0 or a.hi < 0)


def is_nonnegative(a: IntervalLike) -> bool:
    return not a.is_empty and a.lo >= 0


def width(a: IntervalLike) -> float:
    if a.is_empty:
        return 0.0
    if math.isinf(a.lo) or math.isinf(a.hi):
        return INF
    return a.hi - a.lo


def midpoint(a: Interval) -> float:
    return a.lo + (a.hi - a.lo) / 2


# --------------------------------------------------------------------------
# error-free transformations

def two_sum(a: float, b: float) -> tuple[float, float]:
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


def _split(a: float) -> tuple[float, float]:
    t = _SPLITTER * a
    hi = t - (t - a)
    return hi, a - hi


def two_prod(a: float, b: float) -> tuple[float, float]:
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    err = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, err


def _sum_exact(a: float, b: float, s: float) -> bool:
    if math.isinf(a) or math.isinf(b):
        return True
    if math.isinf(s):
        return False
    return two_sum(a, b)[1] == 0.0


def _prod_exact(a: float, b: float, p: float) -> bool:
    if math.isinf(a) or math.isinf(b):
        return True
    if math.isinf(p):
        return False
    if a == 0.0 or b == 0.0:
        return True
    if abs(a) < _SPLIT_LIMIT and abs(b) < _SPLIT_LIMIT and abs(p) >= _TINY:
        return two_prod(a, b)[1] == 0.0
    return Fraction(a) * Fraction(b) == Fraction(p)


def _mul_ext(a: float, b: float) -> tuple[float, bool]:
    # 0 * inf = 0: the infinite endpoint is a limit, not a value
    if a == 0.0 or b == 0.0:
        return 0.0, True
    p = a * b
    return p, _prod_exact(a, b, p)


def _endpoints(cands: list[tuple[float, bool]]) -> Interval:
    """Outward hull of candidate endpoint values.

    A tie only counts as exact when every tied candidate is exact.
    """
    lo = min(v for v, _ in cands)
    hi = max(v for v, _ in cands)
    if not all(ok for v, ok in cands if v == lo):
        lo = _down(lo)
    if not all(ok for v, ok in cands if v == hi):
        hi = _up(hi)
    return Interval(lo, hi)


# --------------------------------------------------------------------------
# transfer functions

def _add(x: Interval, y: Interval) -> Interval:
    lo = x.lo + y.lo
    hi = x.hi + y.hi
    if not _sum_exact(x.lo, y.lo, lo):
        lo = _down(lo)
    if not _sum_exact(x.hi, y.hi, hi):
        hi = _up(hi)
    return Interval(lo, hi)


def _neg(x: Interval) -> Interval:
    return Interval(-x.hi, -x.lo)


def _sub(x: Interval, y: Interval) -> Interval:
    return _add(x, _neg(y))


def _mul(x: Interval, y: Interval) -> Interval:
    return _endpoints([_mul_ext(a, b) for a in (x.lo, x.hi) for b in (y.lo, y.hi)])


def _div_ext(a: float, b: float) -> tuple[float, bool] | None:
    """One endpoint quotient and whether it is exact; None for inf/inf."""
    if math.isinf(a) and math.isinf(b):
        return None
    if a == 0.0:
        return 0.0, True
    if math.isinf(a) or math.isinf(b):
        return a / b, True
    return a / b, False


def _quot(a: float, b: float, lower: bool) -> float:
    v, exact = _div_ext(a, b)
    if exact:
        return v
    return _down(v) if lower else _up(v)


def _div(x: Interval, y: Interval) -> Interval:
    if y.lo > 0 or y.hi < 0:
        cands = [_div_ext(a, b) for a in (x.lo, x.hi) for b in (y.lo, y.hi)]
        return _endpoints([c for c in cands if c is not None])
    if x.lo == 0.0 and x.hi == 0.0 and (y.lo != 0.0 or y.hi != 0.0):
        return Interval(0.0, 0.0)
    if y.lo == 0.0 and y.hi > 0:
        # divisor ranges over (0, d]
        if x.lo >= 0:
            return Interval(_quot(x.lo, y.hi, True), INF)
        if x.hi <= 0:
            return Interval(-INF, _quot(x.hi, y.hi, False))
        return ENTIRE
    if y.hi == 0.0 and y.lo < 0:
        # divisor ranges over [c, 0)
        if x.lo >= 0:
            return Interval(-INF, _quot(x.lo, y.lo, False))
        if x.hi <= 0:
            return Interval(_quot(x.hi, y.lo, True), INF)
        return ENTIRE
    return ENTIRE


def _frac(x: float) -> Fraction:
    return Fraction(x)


def _pow_point(x: float, k: int) -> tuple[float, float]:
    """Outward-rounded enclosure of x**k for a single endpoint."""
    if math.isinf(x):
        if k > 0:
            v = INF if (x > 0 or k % 2 == 0) else -INF
        else:
            v = 0.0
        return v, v
    if k < 0:
        q = 1 / (_frac(x) ** -k)
    else:
        q = _frac(x) ** k
    return round_down(q), round_up(q)


def _pow(x: Interval, k: int) -> Interval:
    if k == 0:
        return Interval(1.0, 1.0)
    if k < 0 and x.lo <= 0 <= x.hi:
        return ENTIRE
    lo_lo, lo_hi = _pow_point(x.lo, k)
    hi_lo, hi_hi = _pow_point(x.hi, k)
    if k % 2 == 0 and x.lo < 0 < x.hi:
        return Interval(0.0, max(lo_hi, hi_hi))
    return Interval(min(lo_lo, hi_lo), max(lo_hi, hi_hi))


def _sqrt(x: Interval) -> IntervalLike:
    if x.hi < 0:
        return EMPTY
    lo = max(x.lo, 0.0)
    return Interval(max(_down(math.sqrt(lo)), 0.0), _up(math.sqrt(x.hi)))


def _safe_log(x: float) -> float:
    if x == 0.0:
        return -INF
    return math.log(x)


def _ln(x: Interval) -> IntervalLike:
    if x.hi <= 0:
        return EMPTY
    lo = -INF if x.lo <= 0 else _down(_safe_log(x.lo))
    return Interval(lo, _up(_safe_log(x.hi)))


def _safe_exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return INF


def _exp(x: Interval) -> Interval:
    lo = 0.0 if x.lo == -INF else max(_down(_safe_exp(x.lo)), 0.0)
    return Interval(lo, _up(_safe_exp(x.hi)))


_ARITY = {"add": 2, "sub": 2, "mul": 2, "div": 2,
          "neg": 1, "sqrt": 1, "ln": 1, "exp": 1, "pow": 1}


def iv_apply(op: str, args: Sequence[IntervalLike], exponent: int | None = None) -> IntervalLike:
    """Sound interval extension of the operator ``op``.

    ``pow`` takes one interval argument plus the integer ``exponent``.
    Domain problems never raise: they yield ``EMPTY`` or infinite
    endpoints.
    """
    try:
        arity = _ARITY[op]
    except KeyError:
        raise ValueError(f"unknown operator {op!r}") from None
    if len(args) != arity:
        raise ValueError(f"{op} expects {arity} argument(s), got {len(args)}")
    if any(a.is_empty for a in args):
        return EMPTY
    if op == "add":
        return _add(*args)
    if op == "sub":
        return _sub(*args)
    if op == "mul":
        return _mul(*args)
    if op == "div":
        return _div(*args)
    if op == "neg":
        return _neg(args[0])
    if op == "sqrt":
        return _sqrt(args[0])
    if op == "ln":
        return _ln(args[0])
    if op == "exp":
        return _exp(args[0])
    if exponent is None:
        raise ValueError("pow needs an integer exponent")
    return _pow(args[0], exponent)


# --------------------------------------------------------------------------
# serialisation

def to_json(a: IntervalLike):
    """``{"lo": "...", "hi": "..."}`` with shortest round-trip decimals; Empty is None."""
    if a.is_empty:
        return None
    return {"lo": repr(a.lo), "hi": repr(a.hi)}


def from_json(obj) -> IntervalLike:
    if obj is None:
        return EMPTY
    return Interval(float(obj["lo"]), float(obj["hi"]))
