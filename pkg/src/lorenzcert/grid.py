"""Uniform dyadic grid on V and vectorised image tables of the plus branch.

Cells are ``[x_i, x_{i+1}] x [y_j, y_{j+1}]`` with ``x_i = (i - N)/N`` and
``y_j = Y (j - N)/N`` for ``0 <= i, j < 2N`` and ``N = 2**m``.  The line
``x = 0`` is the grid line ``i = N``, so no cell straddles it.

The minus half of the grid is handled by reflection ``i -> 2N-1-i``,
``j -> 2N-1-j``, which maps cells of V^- onto cells of V^+ and, by the odd
symmetry of F, intertwines the two branches exactly.
"""
from __future__ import annotations

import math
from fractions import Fraction
from functools import cached_property

import numpy as np

from .errors import ConfigError
from .interval import Dyadic, Interval, sqrt
from .model import LorenzModel


def ceil_div(a, b):
    return -((-a) // b)


class Grid:
    def __init__(self, model: LorenzModel, m: int):
        if not isinstance(m, (int, np.integer)) or m < 1:
            raise ConfigError(f"grid resolution must be a positive integer, got {m!r}")
        self.model = model
        self.m = int(m)
        self.N = 1 << self.m
        self.size = 2 * self.N
        self.Y = model.Y

    def __repr__(self) -> str:
        return f"Grid(m={self.m}, Y={self.Y})"

    @property
    def cell_width(self) -> Fraction:
        return Fraction(1, self.N)

    @property
    def cell_height(self) -> Fraction:
        return Fraction(self.Y, self.N)

    @cached_property
    def celldiag(self) -> Interval:
        sq = Interval.point(Dyadic(1 + self.Y * self.Y, -2 * self.m))
        return sqrt(sq, 60)

    @cached_property
    def celldiag_float(self) -> float:
        return float(self.celldiag.hi)

    def x_node(self, i: int) -> Dyadic:
        return Dyadic(i - self.N, -self.m)

    def y_node(self, j: int) -> Dyadic:
        return Dyadic(self.Y * (j - self.N), -self.m)

    def cell_box(self, i: int, j: int):
        from .model import Box

        return Box(Interval(self.x_node(i), self.x_node(i + 1)), Interval(self.y_node(j), self.y_node(j + 1)))

    def x_centers(self, i):
        return (np.asarray(i, dtype=np.float64) + 0.5 - self.N) / self.N

    def y_centers(self, j):
        return self.Y * (np.asarray(j, dtype=np.float64) + 0.5 - self.N) / self.N

    # closed cells meeting a coordinate range ------------------------
    def col_range(self, lo, hi) -> tuple[int, int]:
        t_lo = (Fraction(lo) + 1) * self.N
        t_hi = (Fraction(hi) + 1) * self.N
        a0 = max(math.ceil(t_lo) - 1, 0)
        a1 = min(math.floor(t_hi), self.size - 1)
        return a0, a1

    def row_range(self, lo, hi) -> tuple[int, int]:
        t_lo = (Fraction(lo) + self.Y) * self.N / self.Y
        t_hi = (Fraction(hi) + self.Y) * self.N / self.Y
        a0 = max(math.ceil(t_lo) - 1, 0)
        a1 = min(math.floor(t_hi), self.size - 1)
        return a0, a1

    def cells_containing(self, x, y) -> list[tuple[int, int]]:
        """All closed cells containing the point (up to four on grid lines)."""
        a0, a1 = self.col_range(x, x)
        b0, b1 = self.row_range(y, y)
        return [(i, j) for i in range(a0, a1 + 1) for j in range(b0, b1 + 1)]

    def reflect_index(self, i):
        return self.size - 1 - i


class PlusImageTable:
    """Integer fixed-point enclosures of F on grid nodes of V^+.

    x-values are kept at scale ``2**-P``; g-values at scale ``2**-(P+m)``.
    All bounds are exact floors/ceilings of rational or algebraic values, so
    the derived column and row ranges are sound.
    """

    def __init__(self, model: LorenzModel, m: int, P: int | None = None):
        self.grid = Grid(model, m)
        g = self.grid
        self.model = model
        self.m, self.N, self.Y = g.m, g.N, g.Y
        ybits = (self.Y * 2 + 1).bit_length()
        if P is None:
            P = min(40, 60 - self.m - ybits)
        if P < 16:
            raise ConfigError(f"resolution m={m} too fine for the fixed-point tables")
        self.P = P
        pr = model.params
        N = self.N
        # f at nodes u_n = n/N, n = 0..N
        fx_lo, fx_hi = [], []
        for n in range(N + 1):
            u = Dyadic(n, -self.m)
            fx_lo.append(_scaled(model._f_plus_lo(u, P), P))
            fx_hi.append(_scaled(model._f_plus_hi(u, P), P))
        self.fx_lo = np.array(fx_lo, dtype=np.int64)
        self.fx_hi = np.array(fx_hi, dtype=np.int64)
        # kappa * u_n
        kn, kd = pr.kappa.numerator, pr.kappa.denominator
        shift = P - self.m
        self.A_lo = np.array([(kn * n << shift) // kd for n in range(N + 1)], dtype=np.int64)
        self.A_hi = np.array([-((-(kn * n << shift)) // kd) for n in range(N + 1)], dtype=np.int64)
        t = pr.t_minus
        self.t_lo = math.floor(t * (1 << P))
        self.t_hi = math.ceil(t * (1 << P))
        # target columns of the image of each plus column c = 0..N-1
        one = 1 << P
        step = 1 << (P - self.m)
        lo = self.fx_lo[:-1]
        hi = self.fx_hi[1:]
        self.col_lo = np.clip(ceil_div(lo + one, step) - 1, 0, g.size - 1)
        self.col_hi = np.clip((hi + one) // step, 0, g.size - 1)
        self._yoff = self.Y << (P + self.m)
        self._ydiv = self.Y << P

    # -- y-images -----------------------------------------------------------
    def g_bounds(self, c, j0, j1):
        """G-unit bounds of g over plus column ``c`` (relative) and rows j0..j1."""
        N, Y = self.N, self.Y
        G_lo = self.t_lo * N + self.A_lo[c] * (Y * j0 + N)
        G_hi = self.t_hi * N + self.A_hi[c + 1] * (Y * (j1 + 1) + N)
        return G_lo, G_hi

    def rows_of(self, G_lo, G_hi):
        size = self.grid.size
        r0 = np.clip(ceil_div(G_lo + self._yoff, self._ydiv) - 1, 0, size - 1)
        r1 = np.clip((G_hi + self._yoff) // self._ydiv, 0, size - 1)
        return r0, r1

    def row_bounds_G(self, r):
        """G-unit coordinates of the grid line y_r."""
        return (self.Y * (np.asarray(r, dtype=np.int64) - self.N)) << self.P

    def col_bounds_X(self, a):
        """x-scale (``2**-P``) coordinates of the grid line x_a."""
        return (np.asarray(a, dtype=np.int64) - self.N) << (self.P - self.m)


def _scaled(d: Dyadic, P: int) -> int:
    e = d.exp + P
    if e < 0:
        raise ValueError("value not on the 2**-P grid")
    return d.man << e


_TABLES: dict = {}


def plus_table(model: LorenzModel, m: int) -> PlusImageTable:
    key = (model.params, model.precision, m)
    table = _TABLES.get(key)
    if table is None:
        table = _TABLES[key] = PlusImageTable(model, m)
    return table
