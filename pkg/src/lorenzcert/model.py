"""Concrete geometric Lorenz return map, its roof function and a validator.

The section is ``V = [-1, 1] x [-Y, Y]`` with ``Y = y_half``.  On ``x > 0``

    f(x)    = b * x**(3/4) - 1
    g(x, y) = t + c / (2Y + 1) * x * (y + Y + 1)

and the ``x < 0`` half is obtained by the odd symmetry ``F(-x,-y) = -F(x,y)``.
Both halves extend continuously to the singular line ``x = 0`` with the
stored values ``rho_plus = (-1, t)`` and ``rho_minus = (1, -t)``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import cached_property
from pathlib import Path

from .errors import ConfigError, PreconditionError
from .interval import (
    Dyadic,
    Interval,
    DomainError,
    check_precision,
    enclose_fractions,
    fraction_ceil,
    fraction_floor,
    ln,
    pow34,
    root4,
)
from .interval import _root4_bounds

DEFAULT_PRECISION = 64
A_EXP = Fraction(3, 4)


class Side(str, Enum):
    PLUS = "plus"
    MINUS = "minus"

    @classmethod
    def of(cls, value) -> "Side":
        if isinstance(value, Side):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ConfigError(f"side must be 'plus' or 'minus', got {value!r}") from None


def _frac(value, name: str) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, Dyadic):
        return value.to_fraction()
    if isinstance(value, bool):
        raise ConfigError(f"{name}: expected a number, got {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        # floats are accepted only when they are exactly what they look like
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except ValueError:
            raise ConfigError(f"{name}: cannot parse {value!r} as a decimal") from None
    raise ConfigError(f"{name}: unsupported type {type(value).__name__}")


def _fraction_to_text(value: Fraction) -> str:
    """Decimal string when finite, otherwise ``num/den``."""
    den = value.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return f"{value.numerator}/{value.denominator}"
    k = max(twos, fives)
    scaled = value * 10**k
    digits = str(abs(scaled.numerator)).rjust(k + 1, "0")
    sign = "-" if value < 0 else ""
    if k == 0:
        return sign + digits
    head, tail = digits[:-k], digits[-k:].rstrip("0")
    return f"{sign}{head}.{tail}" if tail else f"{sign}{head}"


@dataclass(frozen=True)
class ModelParams:
    """Model constants, held as exact rationals.

    ``b_slope`` and ``c`` default to decimal values that are not dyadic; they
    are enclosed at the working precision whenever they enter a computation.
    """

    r_plus: Fraction = Fraction(1)
    y_half: Fraction = Fraction(27)
    b_slope: Fraction = Fraction("1.95")
    c: Fraction = Fraction("0.6")
    t_minus: Fraction = Fraction(2)
    roof_base: Fraction = Fraction(1)
    roof_coeff: Fraction = Fraction(1)

    FIELDS = ("r_plus", "y_half", "b_slope", "c", "t_minus", "roof_base", "roof_coeff")

    def __post_init__(self):
        for name in self.FIELDS:
            object.__setattr__(self, name, _frac(getattr(self, name), name))
        if self.r_plus != 1:
            raise ConfigError("r_plus is normalised to 1; rescale x instead")
        if self.y_half.denominator != 1 or not 1 <= self.y_half <= 1024:
            raise ConfigError("y_half must be an integer in [1, 1024]")
        if self.b_slope <= 0 or self.c <= 0:
            raise ConfigError("b_slope and c must be positive")
        if self.roof_base <= 0 or self.roof_coeff <= 0:
            raise ConfigError("roof_base and roof_coeff must be positive")
        if abs(self.t_minus) > self.y_half:
            raise ConfigError("|t_minus| must not exceed y_half")

    a_exp = A_EXP

    @property
    def r_minus(self) -> Fraction:
        return -self.r_plus

    @property
    def t_plus(self) -> Fraction:
        return -self.t_minus

    @property
    def kappa(self) -> Fraction:
        """Coefficient ``c / (2Y + 1)`` of the bilinear term of g."""
        return self.c / (2 * self.y_half + 1)

    @property
    def rho_plus(self) -> tuple[Fraction, Fraction]:
        return (self.r_minus, self.t_minus)

    @property
    def rho_minus(self) -> tuple[Fraction, Fraction]:
        return (self.r_plus, self.t_plus)

    @property
    def fiber_lipschitz(self) -> Fraction:
        """Supremum of dg/dy over V, i.e. ``kappa * r_plus``."""
        return self.kappa * self.r_plus

    def replace(self, **changes) -> "ModelParams":
        data = {name: getattr(self, name) for name in self.FIELDS}
        data.update(changes)
        return ModelParams(**data)

    @classmethod
    def from_dict(cls, data: dict) -> "ModelParams":
        if not isinstance(data, dict):
            raise ConfigError("model parameters must be a JSON object")
        unknown = set(data) - set(cls.FIELDS) - {"a_exp"}
        if unknown:
            raise ConfigError(f"unknown model parameter(s): {sorted(unknown)}")
        if "a_exp" in data and _frac(data["a_exp"], "a_exp") != A_EXP:
            raise ConfigError("a_exp is fixed at 3/4")
        return cls(**{k: v for k, v in data.items() if k != "a_exp"})

    @classmethod
    def from_json(cls, path) -> "ModelParams":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read model file {path}: {exc}") from None
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        out = {name: _fraction_to_text(getattr(self, name)) for name in self.FIELDS}
        out["a_exp"] = "3/4"
        return out


@dataclass(frozen=True)
class Box:
    """Rectangle ``x times y`` in the section plane."""

    x: Interval
    y: Interval

    def __neg__(self) -> "Box":
        return Box(-self.x, -self.y)

    def contains(self, x, y) -> bool:
        return self.x.contains(x) and self.y.contains(y)

    def mid(self) -> tuple[Dyadic, Dyadic]:
        return self.x.mid(), self.y.mid()

    def to_json(self) -> dict:
        return {"x": self.x.to_json(), "y": self.y.to_json()}


def _point_interval(value) -> Interval:
    if isinstance(value, Interval):
        return value
    return Interval.point(Dyadic.coerce(value))


class LorenzModel:
    """Interval evaluation of the return map branches and the roof."""

    def __init__(self, params: ModelParams | None = None, precision: int = DEFAULT_PRECISION):
        self.params = params if params is not None else ModelParams()
        self.precision = check_precision(precision)

    def __repr__(self) -> str:
        return f"LorenzModel({self.params!r}, precision={self.precision})"

    def __eq__(self, other):
        return isinstance(other, LorenzModel) and (self.params, self.precision) == (other.params, other.precision)

    def __hash__(self):
        return hash((self.params, self.precision))

    # -- convenience ---------------------------------------------------
    @cached_property
    def Y(self) -> int:
        return int(self.params.y_half)

    @cached_property
    def rho_plus(self) -> tuple[Dyadic, Dyadic]:
        return tuple(Dyadic.from_fraction(v) for v in self.params.rho_plus)

    @cached_property
    def rho_minus(self) -> tuple[Dyadic, Dyadic]:
        return tuple(Dyadic.from_fraction(v) for v in self.params.rho_minus)

    @cached_property
    def rho_dyadic(self) -> bool:
        return all(v.denominator & (v.denominator - 1) == 0 for v in self.params.rho_plus)

    def _p(self, p):
        return self.precision if p is None else check_precision(p)

    # -- plus-branch point evaluations (exact rationals, one rounding) --
    def _f_plus_bound(self, x: Dyadic, p: int, upper: bool) -> Dyadic:
        # b * x**(3/4) - 1 rounded to the 2**-p grid, from an exact bracket
        # of x**(3/4) on the 2**-q grid.
        if x.man == 0:
            r = self.params.r_minus
            return fraction_ceil(r, p) if upper else fraction_floor(r, p)
        q = p + 8
        v_lo, v_hi = _root4_bounds(x, 3, q)
        v = v_hi if upper else v_lo
        bn, bd = self.params.b_slope.numerator, self.params.b_slope.denominator
        num = (bn * (v.man << (v.exp + q)) - (bd << q)) << p
        den = bd << q
        return Dyadic(-((-num) // den) if upper else num // den, -p)

    def _f_plus_lo(self, x: Dyadic, p: int) -> Dyadic:
        return self._f_plus_bound(x, p, False)

    def _f_plus_hi(self, x: Dyadic, p: int) -> Dyadic:
        return self._f_plus_bound(x, p, True)

    def _g_plus_bound(self, x: Dyadic, y: Dyadic, p: int, upper: bool) -> Dyadic:
        # t + kappa * x * (y + Y + 1) with integer arithmetic only
        pr = self.params
        tn, td = pr.t_minus.numerator, pr.t_minus.denominator
        if x.man == 0:
            num, den = tn << p, td
        else:
            kn, kd = pr.kappa.numerator, pr.kappa.denominator
            w = x * (y + int(pr.y_half) + 1)
            e = w.exp + p
            prod = kn * w.man
            if e >= 0:
                num, den = tn * kd * (1 << p) + td * (prod << e), td * kd
            else:
                num, den = ((tn * kd << -w.exp) + td * prod) << p, td * kd << -w.exp
        return Dyadic(-((-num) // den) if upper else num // den, -p)

    def _g_plus_exact(self, x: Dyadic, y: Dyadic) -> Fraction:
        pr = self.params
        if x.man == 0:
            return pr.t_minus
        return pr.t_minus + pr.kappa * x.to_fraction() * (y.to_fraction() + pr.y_half + 1)

    # -- public branch maps ---------------------------------------------
    def _check_side(self, side: Side, x: Interval):
        if side is Side.PLUS:
            if x.lo.man < 0 or x.hi > 1:
                raise DomainError(f"x = {x} outside the plus domain [0, 1]")
        elif x.hi.man > 0 or x.lo < -1:
            raise DomainError(f"x = {x} outside the minus domain [-1, 0]")

    def _check_y(self, y: Interval):
        if y.lo < -self.Y or y.hi > self.Y:
            raise DomainError(f"y = {y} outside [-{self.Y}, {self.Y}]")

    def f_branch(self, side, x, p=None) -> Interval:
        """Enclosure of the monotone branch image ``f_side(x)``."""
        side, p, x = Side.of(side), self._p(p), _point_interval(x)
        self._check_side(side, x)
        if side is Side.MINUS:
            return -self.f_branch(Side.PLUS, -x, p)
        return Interval(self._f_plus_lo(x.lo, p), self._f_plus_hi(x.hi, p))

    def g_branch(self, side, x, y, p=None) -> Interval:
        """Enclosure of ``g_side`` over the box ``x times y``.

        On the plus side g is nondecreasing in both arguments (``x >= 0`` and
        ``y + Y + 1 > 0``), so the image is spanned by two corner values.
        """
        side, p = Side.of(side), self._p(p)
        x, y = _point_interval(x), _point_interval(y)
        self._check_side(side, x)
        self._check_y(y)
        if side is Side.MINUS:
            return -self.g_branch(Side.PLUS, -x, -y, p)
        lo = self._g_plus_bound(x.lo, y.lo, p, False)
        hi = self._g_plus_bound(x.hi, y.hi, p, True)
        return Interval(lo, hi)

    def F_branch(self, side, box: Box, p=None) -> Box:
        """Image box of ``box`` intersected with the side's half-plane."""
        side, p = Side.of(side), self._p(p)
        if side is Side.PLUS:
            lo, hi = max(box.x.lo, Dyadic(0)), min(box.x.hi, Dyadic(1))
        else:
            lo, hi = max(box.x.lo, Dyadic(-1)), min(box.x.hi, Dyadic(0))
        if hi < lo:
            raise PreconditionError(f"box {box.x} does not meet the {side.value} half-plane")
        x = Interval(lo, hi)
        return Box(self.f_branch(side, x, p), self.g_branch(side, x, box.y, p))

    def F_point(self, x, y, p=None) -> Box:
        """F at a point off the singular line, branch chosen by the sign of x."""
        x, y = _point_interval(x), _point_interval(y)
        if x.lo.man < 0 < x.hi.man or (x.lo.man == 0 and x.hi.man == 0):
            raise DomainError("F is undefined on the singular line x = 0")
        side = Side.PLUS if x.lo.man >= 0 else Side.MINUS
        return self.F_branch(side, Box(x, y), p)

    def f_prime(self, x, p=None) -> Interval:
        """Enclosure of ``f'`` on an interval inside ``(0, 1]`` (decreasing there)."""
        p, x = self._p(p), _point_interval(x)
        if x.lo.man <= 0 or x.hi > 1:
            raise DomainError("f' is evaluated on (0, 1] only")
        k = A_EXP * self.params.b_slope
        lo_root = root4(Interval.point(x.hi), p + 8).hi
        hi_root = root4(Interval.point(x.lo), p + 8).lo
        return enclose_fractions(k / lo_root.to_fraction(), k / hi_root.to_fraction(), p)

    def roof(self, x, p=None) -> Interval:
        """Enclosure of ``r(x) = roof_base + C |ln |x||`` for ``0`` not in ``x``."""
        p, x = self._p(p), _point_interval(x)
        if x.lo.man <= 0 <= x.hi.man:
            raise DomainError("the roof is singular on x = 0")
        if x.hi.man < 0:
            x = -x
        lg = ln(x, p + 8)
        if lg.lo.man >= 0:
            a_lo, a_hi = lg.lo, lg.hi
        elif lg.hi.man <= 0:
            a_lo, a_hi = -lg.hi, -lg.lo
        else:
            a_lo, a_hi = Dyadic(0), max(-lg.lo, lg.hi)
        pr = self.params
        return enclose_fractions(
            pr.roof_base + pr.roof_coeff * a_lo.to_fraction(),
            pr.roof_base + pr.roof_coeff * a_hi.to_fraction(),
            p,
        )

    # -- float helpers (guesses only, never certificates) ---------------
    def f_float(self, x: float) -> float:
        b = float(self.params.b_slope)
        return b * x**0.75 - 1.0 if x >= 0 else -(b * (-x) ** 0.75 - 1.0)

    def f_inverse_float(self, side, tau: float) -> float | None:
        """Preimage of ``tau`` under one branch, or ``None`` when outside its range."""
        side = Side.of(side)
        b = float(self.params.b_slope)
        if side is Side.MINUS:
            r = self.f_inverse_float(Side.PLUS, -tau)
            return None if r is None else -r
        u = (tau + 1.0) / b
        if u < 0 or u > 1.0:
            return None
        return u ** (4.0 / 3.0)

    def g_inverse_y_float(self, side, x: float, target: float) -> float:
        """y with ``g_side(x, y) = target`` (x off the singular line)."""
        side = Side.of(side)
        pr = self.params
        if side is Side.MINUS:
            return -self.g_inverse_y_float(Side.PLUS, -x, -target)
        return (target - float(pr.t_minus)) / (float(pr.kappa) * x) - float(pr.y_half) - 1.0

    def validate(self, depth: int = 10) -> "ValidationReport":
        return validate(self.params, depth, precision=self.precision)


DEFAULT_MODEL = LorenzModel()


def f_branch(side, x, p=DEFAULT_PRECISION, model: LorenzModel | None = None) -> Interval:
    return (model or DEFAULT_MODEL).f_branch(side, x, p)


def g_branch(side, x, y, p=DEFAULT_PRECISION, model: LorenzModel | None = None) -> Interval:
    return (model or DEFAULT_MODEL).g_branch(side, x, y, p)


def F_branch(side, box: Box, p=DEFAULT_PRECISION, model: LorenzModel | None = None) -> Box:
    return (model or DEFAULT_MODEL).F_branch(side, box, p)


def roof(x, p=DEFAULT_PRECISION, model: LorenzModel | None = None) -> Interval:
    return (model or DEFAULT_MODEL).roof(x, p)


# -- validation ---------------------------------------------------------


@dataclass
class ValidationItem:
    name: str
    passed: bool
    witness: Interval | None = None
    detail: str = ""

    def to_json(self) -> dict:
        return {
            "item": self.name,
            "passed": self.passed,
            "witness": None if self.witness is None else self.witness.to_json(),
            "detail": self.detail,
        }


@dataclass
class ValidationReport:
    params: ModelParams
    depth: int
    items: list[ValidationItem] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(item.passed for item in self.items)

    def item(self, name: str) -> ValidationItem:
        for it in self.items:
            if it.name == name:
                return it
        raise KeyError(name)

    def failed(self) -> list[str]:
        return [it.name for it in self.items if not it.passed]

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "depth": self.depth,
            "params": self.params.to_dict(),
            "items": [it.to_json() for it in self.items],
        }


def validate(params: ModelParams | None = None, depth: int = 10, precision: int = DEFAULT_PRECISION) -> ValidationReport:
    """Check the model properties by exact and interval arithmetic.

    Items come in two kinds: ``param:*`` checks of the constants, and
    ``F-1`` ... ``F-5`` checks of the map itself.  Failures are reported,
    never raised.
    """
    params = params if params is not None else ModelParams()
    if not isinstance(depth, int) or depth < 1:
        raise PreconditionError("depth must be a positive integer")
    model = LorenzModel(params, precision)
    p = precision
    pr = params
    Y = pr.y_half
    report = ValidationReport(params, depth)
    add = report.items.append

    # constants
    add(ValidationItem("param:c_range", 0 < pr.c and pr.c**2 < Fraction(1, 2),
                       enclose_fractions(pr.c, pr.c, p), "0 < c and c^2 < 1/2"))
    add(ValidationItem("param:slope", (3 * pr.b_slope) ** 2 > 32,
                       enclose_fractions(A_EXP * pr.b_slope, A_EXP * pr.b_slope, p),
                       "(3/4) b > sqrt(2), checked as (3b)^2 > 32"))
    add(ValidationItem("param:f_endpoint", 0 < pr.b_slope - 1 < 1,
                       enclose_fractions(pr.b_slope - 1, pr.b_slope - 1, p), "0 < b - 1 < 1"))
    add(ValidationItem("param:g_range", abs(pr.t_minus) + pr.c * pr.r_plus <= Y,
                       enclose_fractions(abs(pr.t_minus) + pr.c, abs(pr.t_minus) + pr.c, p),
                       "|t| + c <= y_half"))

    # F-1: the x-image does not depend on y
    probe = Interval(Dyadic(3, -3), Dyadic(5, -3))
    xs = {model.F_branch(Side.PLUS, Box(probe, Interval(yl, yh)), p).x
          for yl, yh in ((-Y, -Y), (0, 0), (-Y, Y), (Y, Y))}
    add(ValidationItem("F-1:skew_product", len(xs) == 1, xs.pop(), "x-image identical for every y-slab"))

    # F-2: odd symmetry, compared bit for bit on sample boxes
    ok = True
    n_boxes = 1 << min(depth, 6)
    for i in range(n_boxes):
        bx = Interval(Dyadic(i, -min(depth, 6)), Dyadic(i + 1, -min(depth, 6)))
        by = Interval(Dyadic(int(Y) * (2 * i - n_boxes), -min(depth, 6)), Dyadic(int(Y)))
        box = Box(bx, by)
        if model.F_branch(Side.MINUS, -box, p) != -model.F_branch(Side.PLUS, box, p):
            ok = False
    add(ValidationItem("F-2:odd_symmetry", ok, None,
                       f"F_minus(-B) == -F_plus(B) bit for bit on {n_boxes} boxes; r_minus = -r_plus, t_plus = -t_minus by construction"))

    # F-3: f' > sqrt 2 on [2^-depth, 1] split into 2^depth pieces, f' decreasing
    pieces = 1 << depth
    left = Fraction(1, 1 << depth)
    step = (1 - left) / pieces
    nodes = [Dyadic.from_fraction(left + step * i) for i in range(pieces + 1)]
    vals = [model.f_prime(Interval.point(u), p) for u in nodes]
    worst = vals[-1]
    slope_ok = all(v.lo.to_fraction() ** 2 > 2 for v in vals)
    decreasing = all(vals[i + 1].hi < vals[i].lo for i in range(pieces))
    add(ValidationItem("F-3:slope", slope_ok and decreasing, worst,
                       f"min of f' over {pieces} pieces of [2^-{depth}, 1] is attained at x = 1; lower bound squared > 2"))
    add(ValidationItem("F-3:blowup", decreasing and A_EXP < 1, vals[0],
                       "f' = (3/4) b x^(-1/4) increases strictly as x decreases (nodes certified) and is unbounded at 0"))
    f_one = model.f_branch(Side.PLUS, Interval.point(1), p)
    add(ValidationItem("F-3:range", f_one.lo.man > 0 and f_one.hi < 1 and pr.b_slope > 0, f_one,
                       "f increasing from f(0+) = r_minus to f(r_plus) in (0, r_plus), so f((0, r_plus]) lies in (r_minus, r_plus)"))

    # F-4: derivatives of g
    kappa = pr.kappa
    dgdy = enclose_fractions(kappa * left, kappa * pr.r_plus, p)
    add(ValidationItem("F-4:dg_dy", kappa > 0 and kappa * pr.r_plus <= pr.c, dgdy,
                       "dg/dy = kappa x on (0, r_plus]; 0 < dg/dy <= kappa r_plus <= c"))
    dgdx = enclose_fractions(kappa, kappa * (2 * Y + 1), p)
    add(ValidationItem("F-4:dg_dx", kappa > 0 and kappa * (2 * Y + 1) <= pr.c, dgdx,
                       "dg/dx = kappa (y + Y + 1) over y in [-Y, Y]; range [kappa, c]"))
    add(ValidationItem("F-4:dg_dy_limit", kappa > 0, enclose_fractions(kappa * left, kappa * left, p),
                       "dg/dy is linear in x with positive slope, so it decreases to 0 as x -> 0"))
    add(ValidationItem("F-4:c_bound", 0 < pr.c and pr.c**2 < Fraction(1, 2),
                       enclose_fractions(pr.c, pr.c, p), "c < 1/sqrt(2)"))
    g_hull = enclose_fractions(pr.t_minus, pr.t_minus + kappa * pr.r_plus * (2 * Y + 1), p)
    add(ValidationItem("range:g", -Y <= g_hull.lo.to_fraction() and g_hull.hi.to_fraction() <= Y, g_hull,
                       "g maps V into [-y_half, y_half]"))

    # F-5: stored extension values agree with the one-sided limits
    tiny = Dyadic(1, -4 * depth)
    near = model.f_branch(Side.PLUS, Interval.point(tiny), p)
    bound = pr.b_slope * Fraction(1, 1 << (3 * depth))
    f_lim = (near.lo.to_fraction() + 1 >= -Fraction(1, 1 << (p - 1))
             and near.hi.to_fraction() + 1 <= bound + Fraction(1, 1 << (p - 1)))
    at0 = model.F_branch(Side.PLUS, Box(Interval.point(0), Interval(-int(Y), int(Y))), p)
    at0m = model.F_branch(Side.MINUS, Box(Interval.point(0), Interval(-int(Y), int(Y))), p)
    stored = (at0.x == enclose_fractions(pr.r_minus, pr.r_minus, p) and at0.y == enclose_fractions(pr.t_minus, pr.t_minus, p)
              and at0m.x == enclose_fractions(pr.r_plus, pr.r_plus, p) and at0m.y == enclose_fractions(pr.t_plus, pr.t_plus, p))
    add(ValidationItem("F-5:limits", f_lim and stored, near,
                       f"F_plus(0, y) = (r_minus, t_minus), F_minus(0, y) = (r_plus, t_plus); f(2^-{4 * depth}) within b 2^-{3 * depth} of r_minus"))
    return report
