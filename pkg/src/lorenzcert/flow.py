"""Return times of flows through the section plane, and the suspension picture.

:func:`return_time` implements the band-detection scheme: with
``eps0 <= min(eps * alpha * sin(theta) / 2, eps_band)`` and step
``delta = eps0 / (2 beta)``, the trajectory leaves the section downwards
through the lower band and is followed with certified enclosures until one
of them lies entirely in the upper band ``B+ = section x [z0, z0 + eps0]``,
which a returning orbit passes through just before it hits the section.  The detection time is then within
``eps0 / (alpha sin theta) <= eps / 2`` of the true first return.

Two testbeds are provided: a rotating ``circle`` field with closed orbits of
period ``2 pi`` and the ``model-suspension`` semiflow, which moves at unit
speed in ``s`` under the roof of the section model.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from .attractor import OUTSIDE, UNKNOWN, AttractorCertificate, engine
from .errors import (
    BoundViolationError,
    CertificateError,
    EscapeError,
    PreconditionError,
    ResourceError,
)
from .grid import Grid
from .interval import Dyadic, Interval
from .model import DEFAULT_MODEL, Box, LorenzModel, Side

Vec = tuple[float, float, float]


def _dyadic_floor(v: Fraction, bits: int = 30) -> Dyadic:
    """A dyadic ``<= v`` with about ``bits`` significant bits (``v > 0``)."""
    if v <= 0:
        raise PreconditionError("expected a positive quantity")
    e = bits - math.floor(math.log2(v))
    return Dyadic(math.floor(v * Fraction(2) ** e), -e)


def sin_lower(theta: Fraction) -> Fraction:
    """Lower bound ``theta - theta^3/6`` of ``sin(theta)`` for ``0 <= theta <= pi/2``."""
    return theta - theta**3 / 6


@dataclass
class VectorField:
    """A vector field with the declared bounds needed for band detection.

    ``eval`` is an interval extension (box to box).  ``center_eval`` is a
    float evaluation used for the integrator's centre path; its error is
    covered by ``eval_error`` (relative, per evaluation).  ``hessian_bound``
    bounds the second derivative and enters the local error of the Heun step.
    """

    name: str
    eval: Callable[[tuple[Interval, Interval, Interval]], tuple[Interval, Interval, Interval]]
    center_eval: Callable[[Vec], Vec]
    alpha_min: Fraction
    beta_max: Fraction
    theta: Fraction
    lipschitz: Fraction
    band_eps: Fraction
    section: Box
    z_section: Fraction = Fraction(27)
    hessian_bound: Fraction = Fraction(0)
    region: tuple[tuple[float, float], ...] = ((-math.inf, math.inf),) * 3
    eval_error: float = 2.0**-50
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("alpha_min", "beta_max", "theta", "lipschitz", "band_eps", "z_section", "hessian_bound"):
            setattr(self, name, Fraction(getattr(self, name)))
        if not (self.alpha_min > 0 and self.beta_max >= self.alpha_min and self.theta > 0):
            raise PreconditionError("vector field bounds need 0 < alpha <= beta and theta > 0")
        if self.theta > Fraction(157, 100):
            raise PreconditionError("theta must not exceed pi/2")


def circle_field(y0=-20, z0=27, y_lo=-10, y_hi=27) -> VectorField:
    """``h = (0, z - z0, -(y - y0))``: rotation about the line ``y = y0, z = z0``.

    Orbits starting on the section at height ``y > y0`` are circles of radius
    ``y - y0`` traversed in time ``2 pi``.  The section is restricted to
    ``y in [y_lo, y_hi]`` so that speeds on the band are bounded below.
    """
    y0, z0, y_lo, y_hi = (Fraction(v) for v in (y0, z0, y_lo, y_hi))
    if y_lo <= y0:
        raise PreconditionError("the section must stay above the rotation axis")
    eps = Fraction(1, 4)
    alpha = y_lo - y0
    beta = math.ceil(math.sqrt(float((y_hi - y0) ** 2 + eps**2)) + 1e-9)
    fy0, fz0 = float(y0), float(z0)
    Iy0, Iz0 = Interval.point(Dyadic.from_fraction(y0)), Interval.point(Dyadic.from_fraction(z0))

    def ev(box):
        _, y, z = box
        return Interval.point(0), z - Iz0, -(y - Iy0)

    def cev(c):
        return 0.0, c[2] - fz0, fy0 - c[1]

    R = float(y_hi - y0) + 20
    return VectorField(
        name="circle", eval=ev, center_eval=cev, alpha_min=alpha, beta_max=Fraction(beta),
        theta=Fraction(3, 4), lipschitz=Fraction(1), band_eps=eps,
        section=Box(Interval(-1, 1), Interval(Dyadic.from_fraction(y_lo), Dyadic.from_fraction(y_hi))),
        z_section=z0, hessian_bound=Fraction(0),
        region=((-2.0, 2.0), (fy0 - R, fy0 + R), (fz0 - R, fz0 + R)),
        params={"y0": str(y0), "z0": str(z0), "y_lo": str(y_lo), "y_hi": str(y_hi)},
    )


@dataclass
class ReturnTimeResult:
    time: Dyadic
    eps: Fraction
    eps0: Dyadic
    delta: Dyadic
    steps: int
    landing: tuple[Dyadic, Dyadic]
    landing_radius: Fraction
    departure_band_hits: int
    return_band_hits: int
    max_step: Dyadic

    def to_json(self) -> dict:
        return {
            "return_time": str(self.time),
            "return_time_decimal": self.time.to_decimal(),
            "eps": str(self.eps),
            "eps0": self.eps0.to_decimal(),
            "delta": self.delta.to_decimal(),
            "steps": self.steps,
            "landing": [self.landing[0].to_decimal(), self.landing[1].to_decimal()],
            "landing_radius": float(self.landing_radius),
            "departure_band_hits": self.departure_band_hits,
            "return_band_hits": self.return_band_hits,
        }


def _band_params(alpha, beta, theta, band_eps, eps):
    eps = Fraction(eps.to_fraction() if isinstance(eps, Dyadic) else eps)
    if eps <= 0:
        raise PreconditionError("eps must be positive")
    eps0 = _dyadic_floor(min(eps * alpha * sin_lower(theta) / 2, band_eps))
    delta = _dyadic_floor(eps0.to_fraction() / (2 * beta))
    return eps, eps0, delta


def _as_point3(a):
    if len(a) != 3:
        raise PreconditionError("expected a 3-D point")
    return tuple(Dyadic.coerce(v) if not isinstance(v, Fraction) else Dyadic.from_fraction(v) for v in a)


def _return_ode(fld: VectorField, a, eps, max_steps: int) -> ReturnTimeResult:
    x0, y0, z0 = _as_point3(a)
    zs = fld.z_section
    if z0.to_fraction() != zs:
        raise PreconditionError("start point must lie on the section plane")
    if not fld.section.contains(x0, y0):
        raise PreconditionError("start point outside the field's section")
    eps, eps0, delta = _band_params(fld.alpha_min, fld.beta_max, fld.theta, fld.band_eps, eps)
    h = float(delta)
    e0 = float(eps0)
    L = float(fld.lipschitz)
    M2 = float(fld.hessian_bound)
    zsf = float(zs)
    sx0, sx1 = float(fld.section.x.lo), float(fld.section.x.hi)
    sy0, sy1 = float(fld.section.y.lo), float(fld.section.y.hi)
    (rx0, rx1), (ry0, ry1), (rz0, rz1) = fld.region
    cx, cy, cz = float(x0), float(y0), float(z0)
    # conversion error of the start point
    err = max(abs(cx - x0.to_fraction()), abs(cy - y0.to_fraction()), abs(cz - z0.to_fraction()))
    err = float(err) * 2 + 0.0
    grow = 1.0 + L * h + (L * h) ** 2
    slack_rel = 2.0**-48 + 4 * fld.eval_error
    ev = fld.center_eval
    band_eps = float(fld.band_eps)
    phase = 0
    dep_hits = ret_hits = 0
    steps = 0
    first_hit = None
    was_above = False
    while True:
        # classify the current enclosure
        zlo, zhi = cz - err - zsf, cz + err - zsf
        if phase == 0:
            if zhi < -e0:
                phase = 1
            elif zhi <= 0 and zlo >= -e0:
                dep_hits += 1
            elif zlo > 0:
                raise CertificateError("trajectory leaves the section upwards; field is not transversal as declared")
        else:
            in_band = zlo >= 0 and zhi <= e0
            in_sec = cx - err >= sx0 and cx + err <= sx1 and cy - err >= sy0 and cy + err <= sy1
            if in_band and in_sec:
                if first_hit is None:
                    first_hit = (steps, cx, cy, err)
                ret_hits += 1
            elif first_hit is not None:
                break
            elif in_sec and zhi < 0 and was_above:
                raise CertificateError("the upper band was crossed without a certain detection; reduce eps or the error")
            was_above = zlo > e0
        if first_hit is not None and ret_hits >= 2:
            break
        if abs(zlo) <= band_eps or abs(zhi) <= band_eps:
            _check_speed(fld, cx, cy, cz, err)
        if not (rx0 <= cx - err and cx + err <= rx1 and ry0 <= cy - err and cy + err <= ry1
                and rz0 <= cz - err and cz + err <= rz1):
            raise EscapeError("trajectory enclosure left the declared validity region")
        if steps >= max_steps:
            raise ResourceError(f"no return detected within {max_steps} steps")
        # Heun step of the centre plus a rigorous bound on the new radius
        k1 = ev((cx, cy, cz))
        px, py, pz = cx + h * k1[0], cy + h * k1[1], cz + h * k1[2]
        k2 = ev((px, py, pz))
        nx = cx + 0.5 * h * (k1[0] + k2[0])
        ny = cy + 0.5 * h * (k1[1] + k2[1])
        nz = cz + 0.5 * h * (k1[2] + k2[2])
        s1 = math.sqrt(k1[0] ** 2 + k1[1] ** 2 + k1[2] ** 2)
        B = s1 * (1.0 + 2.0 * L * h)
        local = h**3 * ((M2 * B * B + L * L * B) / 6.0 + M2 * s1 * s1 / 4.0) * 1.01
        mag = abs(cx) + abs(cy) + abs(cz) + h * (s1 + abs(k2[0]) + abs(k2[1]) + abs(k2[2])) + 1.0
        err = err * grow + local + slack_rel * mag
        cx, cy, cz = nx, ny, nz
        steps += 1
    step0, lx, ly, lerr = first_hit
    t = delta * step0
    return ReturnTimeResult(
        time=t, eps=eps, eps0=eps0, delta=delta, steps=steps,
        landing=(Dyadic.coerce(lx), Dyadic.coerce(ly)), landing_radius=Fraction(lerr),
        departure_band_hits=dep_hits, return_band_hits=ret_hits, max_step=delta,
    )


def _check_speed(fld: VectorField, cx, cy, cz, err):
    box = tuple(Interval(Dyadic.coerce(c - err * (1 + 2**-40) - 2**-60), Dyadic.coerce(c + err * (1 + 2**-40) + 2**-60))
                for c in (cx, cy, cz))
    hx, hy, hz = fld.eval(box)
    sq_lo = Fraction(0)
    sq_hi = Fraction(0)
    for comp in (hx, hy, hz):
        lo, hi = comp.lo.to_fraction(), comp.hi.to_fraction()
        m = max(abs(lo), abs(hi))
        sq_hi += m * m
        if lo > 0 or hi < 0:
            n = min(abs(lo), abs(hi))
            sq_lo += n * n
    if sq_hi < fld.alpha_min**2:
        raise BoundViolationError(f"speed below the declared alpha = {fld.alpha_min}")
    if sq_lo > fld.beta_max**2:
        raise BoundViolationError(f"speed above the declared beta = {fld.beta_max}")


# -- suspension of the section model ------------------------------------------


@dataclass(frozen=True)
class SuspensionPoint:
    x: Dyadic
    y: Dyadic
    s: Dyadic

    @classmethod
    def of(cls, x, y, s) -> "SuspensionPoint":
        return cls(Dyadic.coerce(x), Dyadic.coerce(y), Dyadic.coerce(s))

    def check(self, model: LorenzModel | None = None):
        model = model or DEFAULT_MODEL
        if self.x.man == 0:
            raise PreconditionError("suspension points must lie off the singular line")
        if not (-1 <= self.x <= 1 and -model.Y <= self.y <= model.Y):
            raise PreconditionError("suspension point outside V")
        if self.s < 0 or self.s > model.roof(self.x).hi:
            raise PreconditionError("s outside [0, roof(x)]")
        return self


class SuspensionTestbed:
    """Unit-speed semiflow in ``s`` under the roof of the section model.

    In a chart where the section sits at height 0, the height after leaving
    the section is ``-s`` (moving down) and, later in the same loop,
    ``r(x) - s`` (coming back down onto the section from above).  Speed is
    exactly 1 and crossings are perpendicular.
    """

    name = "model-suspension"
    alpha_min = Fraction(1)
    beta_max = Fraction(1)
    theta = Fraction(3, 4)
    band_eps = Fraction(1, 4)

    def __init__(self, model: LorenzModel | None = None):
        self.model = model or DEFAULT_MODEL


def _return_suspension(tb: SuspensionTestbed, a, eps, max_steps: int) -> ReturnTimeResult:
    model = tb.model
    if len(a) == 3:
        x, y, z = _as_point3(a)
        if z.man != 0:
            raise PreconditionError("model-suspension start points have s = 0")
    else:
        x, y = (Dyadic.coerce(v) for v in a)
    SuspensionPoint(x, y, Dyadic(0)).check(model)
    eps, eps0, delta = _band_params(tb.alpha_min, tb.beta_max, tb.theta, tb.band_eps, eps)
    r = model.roof(x)
    r_lo, r_hi = r.lo.to_fraction(), r.hi.to_fraction()
    e0 = eps0.to_fraction()
    d = delta.to_fraction()
    # first step index whose height r - s lies in [0, eps0] for every r in the enclosure
    j = max(math.ceil((r_hi - e0) / d), 1)
    if j * d > r_lo:
        raise CertificateError("roof enclosure too wide for the requested eps")
    if j > max_steps:
        raise ResourceError(f"no return detected within {max_steps} steps")
    dep = sum(1 for i in range(0, 4) if i * d <= e0)
    ret = sum(1 for i in range(j, j + 4) if i * d <= r_lo)
    land = model.F_point(x, y)
    lx, ly = land.mid()
    rad = max(land.x.width().to_fraction(), land.y.width().to_fraction())
    return ReturnTimeResult(
        time=delta * j, eps=eps, eps0=eps0, delta=delta, steps=j, landing=(lx, ly),
        landing_radius=rad, departure_band_hits=dep, return_band_hits=ret, max_step=delta,
    )


def return_time_details(field, a, eps, max_steps: int = 50_000_000) -> ReturnTimeResult:
    if isinstance(field, SuspensionTestbed):
        return _return_suspension(field, a, eps, max_steps)
    if isinstance(field, VectorField):
        return _return_ode(field, a, eps, max_steps)
    raise PreconditionError(f"unsupported field {field!r}")


def return_time(field, a, eps) -> Dyadic:
    """Approximate first return time ``t`` with ``|r(a) - t| <= eps``."""
    return return_time_details(field, a, eps).time


@dataclass
class Landing:
    x: Dyadic
    y: Dyadic
    radius: Fraction

    def encloses(self, x, y) -> bool:
        fx = Fraction(x.to_fraction() if isinstance(x, Dyadic) else x)
        fy = Fraction(y.to_fraction() if isinstance(y, Dyadic) else y)
        return abs(fx - self.x.to_fraction()) <= self.radius and abs(fy - self.y.to_fraction()) <= self.radius

    def to_json(self) -> dict:
        return {"x": self.x.to_decimal(), "y": self.y.to_decimal(), "radius": float(self.radius)}


def poincare_from_flow(field, a, eps) -> Landing:
    """Landing point on the section, within ``eps (1 + beta)`` of the true one."""
    res = return_time_details(field, a, eps)
    beta = field.beta_max
    radius = res.landing_radius + res.eps * (1 + beta)
    return Landing(res.landing[0], res.landing[1], radius)


def field_by_name(name: str, params: dict | None = None, model: LorenzModel | None = None):
    params = dict(params or {})
    if name == "circle":
        allowed = {"y0", "z0", "y_lo", "y_hi"}
        bad = set(params) - allowed
        if bad:
            from .errors import ConfigError

            raise ConfigError(f"unknown circle field parameter(s): {sorted(bad)}")
        return circle_field(**{k: Fraction(str(v)) for k, v in params.items()})
    if name == "model-suspension":
        if params:
            from .errors import ConfigError

            raise ConfigError("model-suspension takes no parameters")
        return SuspensionTestbed(model)
    from .errors import ConfigError

    raise ConfigError(f"unknown field {name!r}; choose 'circle' or 'model-suspension'")


# -- tube covers ----------------------------------------------------------------


@dataclass
class TubeCover:
    """Boxes ``cell x [l h, (l+1) h]`` covering the suspended attractor.

    ``nslabs[k]`` slabs sit over ``cells[k]``; ``truncated[k]`` marks cells
    meeting the singular line, where the roof is unbounded and the tower is
    cut at ``s_max``.  The origin marker stands for the fixed point of the
    flow that closes up the attractor.
    """

    m: int
    m_s: int
    s_max: Fraction
    cells: np.ndarray
    nslabs: np.ndarray
    truncated: np.ndarray
    marker: tuple = (0, 0, 0)
    model: LorenzModel = field(default=DEFAULT_MODEL, repr=False)

    @property
    def n_boxes(self) -> int:
        return int(self.nslabs.sum())

    def contains(self, x, y, s) -> bool:
        x, y, s = (Fraction(v.to_fraction() if isinstance(v, Dyadic) else v) for v in (x, y, s))
        grid = Grid(self.model, self.m)
        hs = Fraction(1, 1 << self.m_s)
        index = {(int(i), int(j)): n for n, (i, j) in enumerate(self.cells.tolist())}
        for i, j in grid.cells_containing(x, y):
            n = index.get((i, j))
            if n is not None and 0 <= s <= hs * int(self.nslabs[n]):
                return True
        return False

    def to_csv(self) -> str:
        N = 1 << self.m
        Y = self.model.Y
        out = ["i,j,l,x_lo,x_hi,y_lo,y_hi,s_lo,s_hi,truncated"]
        for (i, j), ns, tr in zip(self.cells.tolist(), self.nslabs.tolist(), self.truncated.tolist()):
            xl = (i - N) / N
            xh = (i + 1 - N) / N
            yl = Y * (j - N) / N
            yh = Y * (j + 1 - N) / N
            for l in range(ns):
                out.append(f"{i},{j},{l},{xl!r},{xh!r},{yl!r},{yh!r},{l / (1 << self.m_s)!r},{(l + 1) / (1 << self.m_s)!r},{int(tr)}")
        out.append("marker,0,0,0,0,0,0,0,0,0")
        return "\n".join(out) + "\n"

    def to_pgm_layers(self) -> bytes:
        """Multi-image PGM: one raster per slab, 0 = some box present."""
        size = 2 << self.m
        top = int(self.nslabs.max()) if self.nslabs.size else 0
        chunks = []
        for l in range(top):
            img = np.full((size, size), 255, dtype=np.uint8)
            sel = self.nslabs > l
            c = self.cells[sel]
            img[size - 1 - c[:, 1], c[:, 0]] = 0
            chunks.append(f"P5\n{size} {size}\n255\n".encode() + img.tobytes())
        return b"".join(chunks)

    def to_ppm(self, width: int = 480, height: int = 360) -> bytes:
        """Non-certified picture: boxes mapped onto a two-lobed shape."""
        pts, shade = embed_boxes(self)
        img = np.full((height, width, 3), 255, dtype=np.uint8)
        if pts.size:
            X, Z = pts[:, 0], pts[:, 1]
            px = ((X + 2.6) / 5.2 * (width - 1)).round().astype(int)
            pz = ((1 - (Z + 0.2) / 2.6) * (height - 1)).round().astype(int)
            ok = (px >= 0) & (px < width) & (pz >= 0) & (pz < height)
            col = np.stack([(40 + 200 * shade), 60 + 0 * shade, (230 - 200 * shade)], axis=1).astype(np.uint8)
            img[pz[ok], px[ok]] = col[ok]
        return f"P6\n{width} {height}\n255\n".encode() + img.tobytes()

    def summary(self) -> dict:
        return {
            "m": self.m,
            "m_s": self.m_s,
            "s_max": str(self.s_max),
            "cells": int(self.cells.shape[0]),
            "boxes": self.n_boxes,
            "truncated_cells": int(self.truncated.sum()),
            "marker": list(self.marker),
            "note": "towers over cells meeting x = 0 are cut at s_max (roof unbounded there)",
        }


def embed_boxes(cover: TubeCover, per_box: int = 1):
    """Map box centres ``(x, y, s)`` to a plane picture of two lobes.

    Purely illustrative: a point leaving the section at ``x`` winds once
    around the lobe on the side of ``x`` as ``s`` runs from 0 to the roof.
    """
    N = 1 << cover.m
    hs = 1.0 / (1 << cover.m_s)
    xs, ys, ss, rs = [], [], [], []
    for (i, j), ns in zip(cover.cells.tolist(), cover.nslabs.tolist()):
        x = (i + 0.5 - N) / N
        r = ns * hs
        for l in range(ns):
            xs.append(x)
            ys.append((j + 0.5 - N) / N)
            ss.append((l + 0.5) * hs)
            rs.append(r)
    if not xs:
        return np.zeros((0, 2)), np.zeros(0)
    x, y, s, r = (np.asarray(v) for v in (xs, ys, ss, rs))
    phase = 2 * np.pi * np.clip(s / r, 0, 1)
    rad = 0.35 + 0.6 * np.abs(x) + 0.02 * y
    sign = np.where(x >= 0, 1.0, -1.0)
    X = sign * (1.2 - rad * np.cos(phase))
    Z = 1.2 + rad * np.sin(phase)
    return np.stack([X, Z], axis=1), np.clip(s / 6.0, 0, 1)


def suspension_cover(cert: AttractorCertificate, m_s: int = 2, s_max=20,
                     model: LorenzModel | None = None) -> TubeCover:
    model = model or DEFAULT_MODEL
    if not cert.outer:
        raise CertificateError("certificate has an empty outer cover")
    s_max = Fraction(s_max)
    m = cert.outer.m
    N = 1 << m
    cells = np.asarray(cert.outer.cells)
    cols = np.unique(cells[:, 0])
    top = {}
    trunc = {}
    scale = 1 << m_s
    for i in cols.tolist():
        if i in (N - 1, N):
            top[i] = math.ceil(s_max * scale)
            trunc[i] = True
            continue
        lo, hi = Dyadic(i - N, -m), Dyadic(i + 1 - N, -m)
        r = model.roof(Interval(lo, hi))
        top[i] = min(math.ceil(r.hi.to_fraction() * scale), math.ceil(s_max * scale))
        trunc[i] = r.hi.to_fraction() > s_max
    nslabs = np.array([top[i] for i in cells[:, 0].tolist()], dtype=np.int64)
    truncated = np.array([trunc[i] for i in cells[:, 0].tolist()], dtype=bool)
    return TubeCover(m=m, m_s=m_s, s_max=s_max, cells=cells, nslabs=nslabs, truncated=truncated, model=model)


def semidecide_outside_flow(q: SuspensionPoint, k: int, model: LorenzModel | None = None) -> str:
    """Outside verdict for a suspension point, via its base point on the section."""
    model = model or DEFAULT_MODEL
    q.check(model)
    return engine(model).semidecide_outside_section((q.x, q.y), k)
