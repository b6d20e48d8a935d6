"""Exact dyadic numbers and outward-rounded dyadic intervals.

A :class:`Dyadic` is ``man * 2**exp`` with an arbitrary-precision integer
mantissa.  Sums, differences and products of dyadics are exact.  An
:class:`Interval` has dyadic endpoints; the ``Interval`` operators ``+ - *``
are exact, while the precision-taking functions (:func:`arith`,
:func:`sqrt`, :func:`ln`, :func:`div`) round every endpoint outward to a
multiple of ``2**-p``.  Each rounded primitive adds at most ``2**(1-p)`` of
width on top of the exact image.
"""
from __future__ import annotations

import math
import re
from fractions import Fraction
from functools import lru_cache
from typing import Union

from .errors import PreconditionError

__all__ = [
    "Dyadic",
    "Interval",
    "DomainError",
    "arith",
    "add",
    "sub",
    "mul",
    "neg",
    "imin",
    "imax",
    "div",
    "sqrt",
    "ln",
    "round_down",
    "round_up",
    "check_precision",
    "fraction_floor",
    "fraction_ceil",
    "enclose_fractions",
    "pow34",
    "root4",
]

Number = Union[int, "Dyadic"]


class DomainError(PreconditionError):
    """Raised when an argument lies outside the domain of a primitive."""


class Dyadic:
    """Exact binary rational ``man * 2**exp`` in canonical form.

    The mantissa is odd, or zero with exponent zero.
    """

    __slots__ = ("man", "exp")

    def __init__(self, man: int, exp: int = 0):
        if man == 0:
            exp = 0
        else:
            tz = (man & -man).bit_length() - 1
            if tz:
                man >>= tz
                exp += tz
        self.man = man
        self.exp = exp

    # -- construction -------------------------------------------------
    @classmethod
    def coerce(cls, value) -> "Dyadic":
        if isinstance(value, Dyadic):
            return value
        if isinstance(value, int):
            return cls(value)
        if isinstance(value, float):
            if not math.isfinite(value):
                raise ValueError(f"non-finite float {value!r}")
            num, den = value.as_integer_ratio()
            return cls(num, -(den.bit_length() - 1))
        if isinstance(value, Fraction):
            return cls.from_fraction(value)
        if isinstance(value, str):
            return cls.parse(value)
        raise TypeError(f"cannot convert {type(value).__name__} to Dyadic")

    @classmethod
    def from_fraction(cls, value: Fraction) -> "Dyadic":
        den = value.denominator
        if den & (den - 1):
            raise ValueError(f"{value} is not a dyadic rational")
        return cls(value.numerator, -(den.bit_length() - 1))

    _MANT_EXP = re.compile(r"^\s*([+-]?\d+)\s*\*\s*2\^\(?\s*([+-]?\d+)\s*\)?\s*$")

    @classmethod
    def parse(cls, text: str) -> "Dyadic":
        """Parse ``"m*2^e"`` or an exactly dyadic decimal string."""
        match = cls._MANT_EXP.match(text)
        if match:
            return cls(int(match.group(1)), int(match.group(2)))
        return cls.from_fraction(Fraction(text.strip()))

    # -- conversion ---------------------------------------------------
    def to_fraction(self) -> Fraction:
        if self.exp >= 0:
            return Fraction(self.man << self.exp)
        return Fraction(self.man, 1 << -self.exp)

    def __float__(self) -> float:
        return math.ldexp(self.man, self.exp) if abs(self.man) < (1 << 53) else float(self.to_fraction())

    def __str__(self) -> str:
        return f"{self.man}*2^{self.exp}"

    def __repr__(self) -> str:
        return f"Dyadic({self.man}, {self.exp})"

    def to_decimal(self) -> str:
        """Exact decimal expansion (always finite for a dyadic)."""
        if self.exp >= 0:
            return str(self.man << self.exp)
        k = -self.exp
        digits = str(abs(self.man) * 5**k).rjust(k + 1, "0")
        head, tail = digits[:-k], digits[-k:].rstrip("0")
        sign = "-" if self.man < 0 else ""
        return f"{sign}{head}.{tail}" if tail else f"{sign}{head}"

    # -- arithmetic (exact) -------------------------------------------
    def __add__(self, other):
        other = _as_dyadic(other)
        if other is NotImplemented:
            return other
        if self.exp <= other.exp:
            return Dyadic(self.man + (other.man << (other.exp - self.exp)), self.exp)
        return Dyadic((self.man << (self.exp - other.exp)) + other.man, other.exp)

    __radd__ = __add__

    def __neg__(self) -> "Dyadic":
        return Dyadic(-self.man, self.exp)

    def __sub__(self, other):
        other = _as_dyadic(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = _as_dyadic(other)
        if other is NotImplemented:
            return other
        return Dyadic(self.man * other.man, self.exp + other.exp)

    __rmul__ = __mul__

    def __abs__(self) -> "Dyadic":
        return self if self.man >= 0 else -self

    def shift(self, k: int) -> "Dyadic":
        """Multiply by ``2**k`` exactly."""
        return Dyadic(self.man, self.exp + k)

    def sign(self) -> int:
        return (self.man > 0) - (self.man < 0)

    # -- comparison ---------------------------------------------------
    def _cmp(self, other) -> int:
        if not isinstance(other, Dyadic):
            other = Dyadic.coerce(other)
        a, b = self.man, other.man
        d = self.exp - other.exp
        if d > 0:
            a <<= d
        elif d < 0:
            b <<= -d
        return (a > b) - (a < b)

    def __eq__(self, other):
        other = _as_dyadic(other)
        if other is NotImplemented:
            return other
        return self.man == other.man and self.exp == other.exp

    def __hash__(self):
        return hash((self.man, self.exp))

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def floor_int(self) -> int:
        return self.man << self.exp if self.exp >= 0 else self.man >> -self.exp

    def ceil_int(self) -> int:
        return -((-self).floor_int())


def _as_dyadic(value):
    if isinstance(value, Dyadic):
        return value
    if isinstance(value, int):
        return Dyadic(value)
    return NotImplemented


ZERO = Dyadic(0)
ONE = Dyadic(1)


def check_precision(p: int) -> int:
    if not isinstance(p, int) or p < 2:
        raise ValueError(f"precision must be an integer >= 2, got {p!r}")
    return p


def round_down(d: Dyadic, p: int) -> Dyadic:
    """Largest multiple of ``2**-p`` that is ``<= d``."""
    if d.exp >= -p:
        return d
    return Dyadic(d.man >> (-p - d.exp), -p)


def round_up(d: Dyadic, p: int) -> Dyadic:
    """Smallest multiple of ``2**-p`` that is ``>= d``."""
    if d.exp >= -p:
        return d
    return Dyadic(-((-d.man) >> (-p - d.exp)), -p)


def _fraction_floor(value: Fraction, p: int) -> Dyadic:
    return Dyadic(math.floor(value * (1 << p)) if p >= 0 else math.floor(value / (1 << -p)), -p)


def _fraction_ceil(value: Fraction, p: int) -> Dyadic:
    return Dyadic(math.ceil(value * (1 << p)) if p >= 0 else math.ceil(value / (1 << -p)), -p)


class Interval:
    """Closed interval ``[lo, hi]`` with dyadic endpoints."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi=None):
        lo = Dyadic.coerce(lo)
        hi = lo if hi is None else Dyadic.coerce(hi)
        if hi < lo:
            raise ValueError(f"empty interval [{lo}, {hi}]")
        self.lo = lo
        self.hi = hi

    @classmethod
    def point(cls, value) -> "Interval":
        d = Dyadic.coerce(value)
        return cls(d, d)

    @classmethod
    def enclose(cls, value, p: int) -> "Interval":
        """Tightest ``2**-p`` grid interval containing an exact rational."""
        if isinstance(value, (Dyadic, int)):
            return cls.point(value)
        if isinstance(value, str):
            value = Fraction(value)
        if isinstance(value, float):
            return cls.point(value)
        value = Fraction(value)
        if value.denominator & (value.denominator - 1) == 0:
            return cls.point(Dyadic.from_fraction(value))
        return cls(_fraction_floor(value, p), _fraction_ceil(value, p))

    # -- queries ------------------------------------------------------
    def width(self) -> Dyadic:
        return self.hi - self.lo

    def mid(self) -> Dyadic:
        return (self.lo + self.hi).shift(-1)

    def contains(self, x) -> bool:
        if isinstance(x, Interval):
            return self.lo <= x.lo and x.hi <= self.hi
        if isinstance(x, Fraction):
            return self.lo.to_fraction() <= x <= self.hi.to_fraction()
        x = Dyadic.coerce(x)
        return self.lo <= x <= self.hi

    __contains__ = contains

    def intersects(self, other: "Interval") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def hull(self, other: "Interval") -> "Interval":
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    def is_point(self) -> bool:
        return self.lo == self.hi

    def __eq__(self, other):
        if not isinstance(other, Interval):
            return NotImplemented
        return self.lo == other.lo and self.hi == other.hi

    def __hash__(self):
        return hash((self.lo, self.hi))

    def __repr__(self) -> str:
        return f"Interval({self.lo}, {self.hi})"

    def __str__(self) -> str:
        return f"[{float(self.lo):.17g}, {float(self.hi):.17g}]"

    def to_json(self) -> dict:
        return {"lo": str(self.lo), "hi": str(self.hi), "lo_dec": self.lo.to_decimal(), "hi_dec": self.hi.to_decimal()}

    # -- exact arithmetic ---------------------------------------------
    def __neg__(self) -> "Interval":
        return Interval(-self.hi, -self.lo)

    def __add__(self, other):
        other = _as_interval(other)
        return Interval(self.lo + other.lo, self.hi + other.hi)

    __radd__ = __add__

    def __sub__(self, other):
        other = _as_interval(other)
        return Interval(self.lo - other.hi, self.hi - other.lo)

    def __rsub__(self, other):
        return _as_interval(other) - self

    def __mul__(self, other):
        other = _as_interval(other)
        if self.lo.man >= 0 and other.lo.man >= 0:
            return Interval(self.lo * other.lo, self.hi * other.hi)
        prods = (self.lo * other.lo, self.lo * other.hi, self.hi * other.lo, self.hi * other.hi)
        return Interval(min(prods), max(prods))

    __rmul__ = __mul__

    def shift(self, k: int) -> "Interval":
        return Interval(self.lo.shift(k), self.hi.shift(k))

    def round(self, p: int) -> "Interval":
        return Interval(round_down(self.lo, p), round_up(self.hi, p))


def _as_interval(value) -> Interval:
    if isinstance(value, Interval):
        return value
    return Interval.point(value)


# -- rounded primitives -------------------------------------------------

def add(a: Interval, b: Interval, p: int) -> Interval:
    return (a + b).round(p)


def sub(a: Interval, b: Interval, p: int) -> Interval:
    return (a - b).round(p)


def mul(a: Interval, b: Interval, p: int) -> Interval:
    return (a * b).round(p)


def neg(a: Interval, p: int | None = None) -> Interval:
    return -a


def imin(a: Interval, b: Interval, p: int | None = None) -> Interval:
    return Interval(min(a.lo, b.lo), min(a.hi, b.hi))


def imax(a: Interval, b: Interval, p: int | None = None) -> Interval:
    return Interval(max(a.lo, b.lo), max(a.hi, b.hi))


_OPS = {"add": add, "sub": sub, "mul": mul, "min": imin, "max": imax}


def arith(op: str, a: Interval, b: Interval | None, p: int) -> Interval:
    """Outward-rounded binary operation (``neg`` ignores ``b``)."""
    check_precision(p)
    if op == "neg":
        return -a
    try:
        fn = _OPS[op]
    except KeyError:
        raise ValueError(f"unknown operation {op!r}") from None
    return fn(a, b, p)


def _div_floor(x: Dyadic, y: Dyadic, p: int) -> Dyadic:
    # floor(x / y * 2**p) * 2**-p, y > 0
    shift = x.exp - y.exp + p
    num, den = x.man, y.man
    if shift >= 0:
        num <<= shift
    else:
        den <<= -shift
    return Dyadic(num // den, -p)


def div(a: Interval, b: Interval, p: int) -> Interval:
    """Outward-rounded quotient; ``b`` must not contain zero."""
    check_precision(p)
    if b.lo.man <= 0 <= b.hi.man:
        raise DomainError(f"division by interval containing zero: {b!r}")
    if b.hi.man < 0:
        return -div(a, -b, p)
    quots_lo = [_div_floor(a.lo, b.lo, p), _div_floor(a.lo, b.hi, p), _div_floor(a.hi, b.lo, p), _div_floor(a.hi, b.hi, p)]
    quots_hi = [-_div_floor(-a.lo, b.lo, p), -_div_floor(-a.lo, b.hi, p), -_div_floor(-a.hi, b.lo, p), -_div_floor(-a.hi, b.hi, p)]
    return Interval(min(quots_lo), max(quots_hi))


def _sqrt_floor(d: Dyadic, p: int) -> Dyadic:
    s = d.exp + 2 * p
    n = d.man << s if s >= 0 else d.man >> -s
    return Dyadic(math.isqrt(n), -p)


def _sqrt_ceil(d: Dyadic, p: int) -> Dyadic:
    s = d.exp + 2 * p
    n = d.man << s if s >= 0 else -((-d.man) >> -s)
    if n == 0:
        return ZERO
    return Dyadic(math.isqrt(n - 1) + 1, -p)


def sqrt(a: Interval, p: int) -> Interval:
    """Outward-rounded square root, exact floor/ceil on the ``2**-p`` grid."""
    check_precision(p)
    if a.lo.man < 0:
        raise DomainError(f"sqrt of interval with negative part: {a!r}")
    return Interval(_sqrt_floor(a.lo, p), _sqrt_ceil(a.hi, p))


def _ln_ratio(a: int, b: int, w: int) -> tuple[int, int]:
    """Bounds on ``ln((b + a) / (b - a)) * 2**w`` for ``0 <= a/b <= 1/3``.

    Uses ``2 * atanh(z)`` with ``z = a/b``; every term is positive, so
    truncating downward gives a lower bound and the tail after the last
    term is at most ``t / (1 - z**2) <= 9t/8``.
    """
    if a == 0:
        return 0, 0
    zl = (a << w) // b
    zh = -((-a << w) // b)
    z2l = (zl * zl) >> w
    z2h = -((-(zh * zh)) >> w)
    tl, th = zl, zh
    sl = sh = 0
    j = 1
    while th > 0:
        sl += tl // j
        sh += -(-th // j)
        j += 2
        tl = (tl * z2l) >> w
        th = -((-(th * z2h)) >> w)
        if th <= 1:
            sh += 2
            break
    # tail bound: remaining terms sum to at most 9/8 of the next one
    sh += 2 * th + 1
    return 2 * sl, 2 * sh


@lru_cache(maxsize=64)
def _ln2(w: int) -> tuple[int, int]:
    return _ln_ratio(1, 3, w)


def _ln_point(d: Dyadic, p: int) -> Interval:
    if d == ONE:
        return Interval.point(0)
    m = d.man
    bl = m.bit_length()
    k = bl - 1 + d.exp  # floor(log2 d)
    den = 1 << (bl - 1)  # d / 2**k = m / den in [1, 2)
    w = p + 40 + abs(k).bit_length()
    lo_u, hi_u = _ln_ratio(m - den, m + den, w)
    l2lo, l2hi = _ln2(w)
    if k >= 0:
        lo, hi = lo_u + k * l2lo, hi_u + k * l2hi
    else:
        lo, hi = lo_u + k * l2hi, hi_u + k * l2lo
    return Interval(round_down(Dyadic(lo, -w), p + 1), round_up(Dyadic(hi, -w), p + 1))


def ln(a: Interval, p: int) -> Interval:
    """Outward enclosure of the natural logarithm on ``a`` (``a.lo > 0``)."""
    check_precision(p)
    if a.lo.man <= 0:
        raise DomainError(f"ln of interval reaching non-positive values: {a!r}")
    lo = _ln_point(a.lo, p)
    if a.is_point():
        return lo
    hi = _ln_point(a.hi, p)
    return Interval(lo.lo, hi.hi)


def fraction_floor(value: Fraction, p: int) -> Dyadic:
    """Largest multiple of ``2**-p`` below the rational ``value``."""
    return _fraction_floor(Fraction(value), p)


def fraction_ceil(value: Fraction, p: int) -> Dyadic:
    """Smallest multiple of ``2**-p`` above the rational ``value``."""
    return _fraction_ceil(Fraction(value), p)


def enclose_fractions(lo: Fraction, hi: Fraction, p: int) -> Interval:
    return Interval(_fraction_floor(Fraction(lo), p), _fraction_ceil(Fraction(hi), p))


def _root4_bounds(d: Dyadic, power: int, p: int) -> tuple[Dyadic, Dyadic]:
    # floor/ceil of (d**power)**(1/4) on the 2**-p grid, exactly.
    # isqrt(isqrt(N)) == floor(N ** (1/4)) for integers N >= 0.
    if d.man < 0:
        raise DomainError("fourth root of a negative number")
    if d.man == 0:
        return ZERO, ZERO
    man = d.man**power
    e = d.exp * power + 4 * p
    if e >= 0:
        n = man << e
        exact = True
    else:
        n = man >> -e
        exact = (n << -e) == man
    r = math.isqrt(math.isqrt(n))
    lo = Dyadic(r, -p)
    hi = lo if exact and r**4 == n else Dyadic(r + 1, -p)
    return lo, hi


def pow34(a: Interval, p: int) -> Interval:
    """Outward enclosure of ``x**(3/4)`` for ``a`` in ``[0, inf)``."""
    check_precision(p)
    if a.lo.man < 0:
        raise DomainError(f"x**(3/4) of interval reaching negative values: {a!r}")
    lo, _ = _root4_bounds(a.lo, 3, p)
    _, hi = _root4_bounds(a.hi, 3, p)
    return Interval(lo, hi)


def root4(a: Interval, p: int) -> Interval:
    """Outward enclosure of ``x**(1/4)`` for ``a`` in ``[0, inf)``."""
    check_precision(p)
    if a.lo.man < 0:
        raise DomainError(f"fourth root of interval reaching negative values: {a!r}")
    lo, _ = _root4_bounds(a.lo, 1, p)
    _, hi = _root4_bounds(a.hi, 1, p)
    return Interval(lo, hi)
