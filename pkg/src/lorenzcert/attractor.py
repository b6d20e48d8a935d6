"""Certified outer covers and inner samples of the section attractor.

The attractor of the return map is the nested intersection of the sets
``A_n = alpha^n(V)`` where ``alpha(K) = F+(K n V+) u F-(K n V-) u {rho+, rho-}``.
Outer covers of ``A_n`` are computed on a uniform grid by pushing every
vertical run of cells through the monotone branches; inner samples are
forward images of backward orbits of a fine x-grid.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.spatial import cKDTree

from .errors import PreconditionError, ResourceError
from .grid import Grid, plus_table
from .interval import Dyadic, Interval
from .model import DEFAULT_MODEL, Box, LorenzModel, Side

OUTSIDE = "outside"
UNKNOWN = "unknown_at_k"

_COL_SHIFT = 32


def _canonical_runs(c, j0, j1) -> np.ndarray:
    """Sort runs and merge overlapping or adjacent ones within a column."""
    c = np.asarray(c, dtype=np.int64)
    j0 = np.asarray(j0, dtype=np.int64)
    j1 = np.asarray(j1, dtype=np.int64)
    if c.size == 0:
        return np.zeros((0, 3), dtype=np.int64)
    order = np.lexsort((j0, c))
    c, j0, j1 = c[order], j0[order], j1[order]
    base = c << _COL_SHIFT
    end = np.maximum.accumulate(base + j1)
    prev = np.empty_like(end)
    prev[0] = -2
    prev[1:] = end[:-1]
    start = (base + j0) > prev + 1
    idx = np.flatnonzero(start)
    last = np.empty_like(idx)
    last[:-1] = idx[1:] - 1
    last[-1] = c.size - 1
    out = np.empty((idx.size, 3), dtype=np.int64)
    out[:, 0] = c[idx]
    out[:, 1] = j0[idx]
    out[:, 2] = end[last] - base[idx]
    return out


class CellSet:
    """Set of grid cells at resolution m, stored as vertical runs.

    ``runs[k] = (i, j0, j1)`` means cells ``(i, j0) .. (i, j1)``.  Runs are
    sorted, disjoint and non-adjacent, so equal sets have equal arrays.
    """

    __slots__ = ("m", "runs", "_cells")

    def __init__(self, m: int, runs=None, *, canonical: bool = False):
        self.m = int(m)
        if runs is None:
            runs = np.zeros((0, 3), dtype=np.int64)
        runs = np.asarray(runs, dtype=np.int64).reshape(-1, 3)
        if not canonical:
            size = 2 << self.m
            if runs.size and (runs.min() < 0 or runs.max() >= size or np.any(runs[:, 1] > runs[:, 2])):
                raise PreconditionError("cell indices out of grid bounds")
            runs = _canonical_runs(runs[:, 0], runs[:, 1], runs[:, 2])
        self.runs = runs
        self.runs.setflags(write=False)
        self._cells = None

    # -- constructors ---------------------------------------------------
    @classmethod
    def full(cls, m: int) -> "CellSet":
        size = 2 << m
        cols = np.arange(size, dtype=np.int64)
        runs = np.stack([cols, np.zeros(size, np.int64), np.full(size, size - 1, np.int64)], axis=1)
        return cls(m, runs, canonical=True)

    @classmethod
    def empty(cls, m: int) -> "CellSet":
        return cls(m)

    @classmethod
    def from_cells(cls, m: int, cells) -> "CellSet":
        cells = np.asarray(cells, dtype=np.int64).reshape(-1, 2)
        return cls(m, np.stack([cells[:, 0], cells[:, 1], cells[:, 1]], axis=1))

    # -- basic queries -------------------------------------------------------
    @property
    def N(self) -> int:
        return 1 << self.m

    @property
    def size(self) -> int:
        return 2 << self.m

    def __len__(self) -> int:
        return int((self.runs[:, 2] - self.runs[:, 1] + 1).sum())

    count = property(__len__)

    def __bool__(self) -> bool:
        return self.runs.shape[0] > 0

    def __eq__(self, other) -> bool:
        return isinstance(other, CellSet) and self.m == other.m and np.array_equal(self.runs, other.runs)

    def __hash__(self):
        return hash((self.m, self.runs.tobytes()))

    def __repr__(self) -> str:
        return f"CellSet(m={self.m}, cells={len(self)}, runs={self.runs.shape[0]})"

    @property
    def cells(self) -> np.ndarray:
        """All cells as an ``(K, 2)`` array sorted by ``(i, j)``."""
        if self._cells is None:
            lengths = self.runs[:, 2] - self.runs[:, 1] + 1
            i = np.repeat(self.runs[:, 0], lengths)
            starts = np.repeat(self.runs[:, 1] - np.cumsum(lengths) + lengths, lengths)
            j = starts + np.arange(int(lengths.sum()), dtype=np.int64)
            self._cells = np.stack([i, j], axis=1)
            self._cells.setflags(write=False)
        return self._cells

    def linear_index(self) -> np.ndarray:
        c = self.cells
        return c[:, 0] * self.size + c[:, 1]

    def reflect(self) -> "CellSet":
        s = self.size - 1
        r = self.runs
        return CellSet(self.m, np.stack([s - r[:, 0], s - r[:, 2], s - r[:, 1]], axis=1))

    def is_symmetric(self) -> bool:
        return self == self.reflect()

    def union(self, other: "CellSet") -> "CellSet":
        _same_m(self, other)
        return CellSet(self.m, np.concatenate([self.runs, other.runs]))

    __or__ = union

    def inflate(self, k: int = 1) -> "CellSet":
        """Add every cell within ``k`` cells (in the max norm) of the set."""
        if not self:
            return self
        s = self.size - 1
        r = self.runs
        offs = np.arange(-k, k + 1, dtype=np.int64)
        c = (r[:, 0][:, None] + offs[None, :]).ravel()
        j0 = np.repeat(np.maximum(r[:, 1] - k, 0), offs.size)
        j1 = np.repeat(np.minimum(r[:, 2] + k, s), offs.size)
        keep = (c >= 0) & (c <= s)
        return CellSet(self.m, np.stack([c[keep], j0[keep], j1[keep]], axis=1))

    def issubset(self, other: "CellSet") -> bool:
        _same_m(self, other)
        if not self:
            return True
        if not other:
            return False
        keys_b = (other.runs[:, 0] << _COL_SHIFT) + other.runs[:, 1]
        keys_a = (self.runs[:, 0] << _COL_SHIFT) + self.runs[:, 1]
        idx = np.searchsorted(keys_b, keys_a, side="right") - 1
        ok = idx >= 0
        idx = np.maximum(idx, 0)
        ok &= other.runs[idx, 0] == self.runs[:, 0]
        ok &= other.runs[idx, 2] >= self.runs[:, 2]
        return bool(ok.all())

    def __le__(self, other):
        return self.issubset(other)

    def member_mask(self, i, j) -> np.ndarray:
        """Vectorised cell membership."""
        i = np.asarray(i, dtype=np.int64)
        j = np.asarray(j, dtype=np.int64)
        r = self.runs
        if r.shape[0] == 0:
            return np.zeros(i.shape, dtype=bool)
        keys = (r[:, 0] << _COL_SHIFT) | r[:, 1]
        k = np.searchsorted(keys, (i << _COL_SHIFT) | j, side="right") - 1
        ok = k >= 0
        k = np.maximum(k, 0)
        return ok & (r[k, 0] == i) & (r[k, 1] <= j) & (j <= r[k, 2])

    def contains_cell(self, i: int, j: int) -> bool:
        return bool(self.member_mask([i], [j])[0])

    def contains_point(self, x, y, model: LorenzModel | None = None) -> bool:
        """Whether the point lies in the closed union of the cells."""
        return bool(self.contains_points([(x, y)], model)[0])

    def contains_points(self, points, model: LorenzModel | None = None) -> np.ndarray:
        """Closed-union membership for a list of exact points."""
        grid = Grid(model or DEFAULT_MODEL, self.m)
        owner, ii, jj = [], [], []
        for n, (x, y) in enumerate(points):
            for i, j in grid.cells_containing(_fr(x), _fr(y)):
                owner.append(n)
                ii.append(i)
                jj.append(j)
        out = np.zeros(len(points), dtype=bool)
        if owner:
            hit = self.member_mask(ii, jj)
            np.logical_or.at(out, np.asarray(owner, dtype=np.int64), hit)
        return out

    def coarsen(self, levels: int = 1) -> "CellSet":
        """The coarser cells (``levels`` halvings) that meet this set."""
        r = self.runs
        return CellSet(self.m - levels, np.stack([r[:, 0] >> levels, r[:, 1] >> levels, r[:, 2] >> levels], axis=1))

    def refine(self, levels: int = 1) -> "CellSet":
        r = self.runs
        f = 1 << levels
        c = (r[:, 0][:, None] * f + np.arange(f)[None, :]).ravel()
        j0 = np.repeat(r[:, 1] * f, f)
        j1 = np.repeat(r[:, 2] * f + f - 1, f)
        return CellSet(self.m + levels, np.stack([c, j0, j1], axis=1))

    def extent(self, model: LorenzModel | None = None) -> tuple[Fraction, Fraction, Fraction, Fraction]:
        """Bounding box of the union: (x_lo, x_hi, y_lo, y_hi)."""
        if not self:
            raise PreconditionError("empty cell set has no extent")
        N, Y = self.N, (model or DEFAULT_MODEL).Y
        return (Fraction(int(self.runs[:, 0].min()) - N, N), Fraction(int(self.runs[:, 0].max()) + 1 - N, N),
                Fraction(Y * (int(self.runs[:, 1].min()) - N), N), Fraction(Y * (int(self.runs[:, 2].max()) + 1 - N), N))

    # -- exports ----------------------------------------------------------
    def to_pgm(self) -> bytes:
        """Binary PGM, one pixel per cell, 0 (black) = in the set.

        Row 0 of the image is the top of V (largest y)."""
        size = self.size
        img = np.full((size, size), 255, dtype=np.uint8)
        c = self.cells
        img[size - 1 - c[:, 1], c[:, 0]] = 0
        return f"P5\n{size} {size}\n255\n".encode() + img.tobytes()

    def to_csv(self) -> str:
        lines = ["i,j"]
        lines.extend(f"{i},{j}" for i, j in self.cells.tolist())
        return "\n".join(lines) + "\n"


def _fr(v) -> Fraction:
    return v.to_fraction() if isinstance(v, Dyadic) else Fraction(v)


def _same_m(a: CellSet, b: CellSet):
    if a.m != b.m:
        raise PreconditionError(f"cell sets at different resolutions ({a.m} vs {b.m})")


# -- the alpha map --------------------------------------------------------


def _rho_runs(model: LorenzModel, m: int) -> np.ndarray:
    grid = Grid(model, m)
    out = []
    for rho in (model.params.rho_plus, model.params.rho_minus):
        for i, j in grid.cells_containing(*rho):
            out.append((i, j, j))
    return np.array(out, dtype=np.int64)


def _push_plus(table, c, j0, j1):
    """Target runs of plus-frame runs (column c relative to V+)."""
    tc0 = table.col_lo[c]
    tc1 = table.col_hi[c]
    G_lo, G_hi = table.g_bounds(c, j0, j1)
    r0, r1 = table.rows_of(G_lo, G_hi)
    ncols = tc1 - tc0 + 1
    tot = int(ncols.sum())
    base = np.repeat(tc0 - np.cumsum(ncols) + ncols, ncols)
    cols = base + np.arange(tot, dtype=np.int64)
    return cols, np.repeat(r0, ncols), np.repeat(r1, ncols)


def _alpha_chunk(table, runs: np.ndarray):
    N = table.N
    size = 2 * N
    plus = runs[:, 0] >= N
    out = []
    rp = runs[plus]
    if rp.size:
        out.append(_push_plus(table, rp[:, 0] - N, rp[:, 1], rp[:, 2]))
    rm = runs[~plus]
    if rm.size:
        # reflect into V+, push, reflect back
        c = size - 1 - rm[:, 0]
        a, b0, b1 = _push_plus(table, c - N, size - 1 - rm[:, 2], size - 1 - rm[:, 1])
        out.append((size - 1 - a, size - 1 - b1, size - 1 - b0))
    if not out:
        z = np.zeros(0, np.int64)
        return z, z, z
    return tuple(np.concatenate([o[k] for o in out]) for k in range(3))


class AttractorEngine:
    """Caches grid tables and iterates ``A_n`` per resolution."""

    def __init__(self, model: LorenzModel | None = None, threads: int = 1,
                 max_runs: int = 50_000_000, chunk: int = 1 << 16):
        self.model = model or DEFAULT_MODEL
        self.threads = max(1, int(threads))
        self.max_runs = max_runs
        self.chunk = chunk
        self._iterates: dict[int, list[CellSet]] = {}
        self._certs: dict[int, "AttractorCertificate"] = {}

    def alpha_step(self, K: CellSet) -> CellSet:
        table = plus_table(self.model, K.m)
        runs = K.runs
        chunks = [runs[s:s + self.chunk] for s in range(0, runs.shape[0], self.chunk)] or [runs]
        if self.threads > 1 and len(chunks) > 1:
            with ThreadPoolExecutor(self.threads) as pool:
                parts = list(pool.map(lambda r: _alpha_chunk(table, r), chunks))
        else:
            parts = [_alpha_chunk(table, r) for r in chunks]
        rho = _rho_runs(self.model, K.m)
        c = np.concatenate([p[0] for p in parts] + [rho[:, 0]])
        j0 = np.concatenate([p[1] for p in parts] + [rho[:, 1]])
        j1 = np.concatenate([p[2] for p in parts] + [rho[:, 2]])
        if c.size > self.max_runs:
            raise ResourceError(f"alpha step produced {c.size} runs, above the ceiling {self.max_runs}")
        return CellSet(K.m, _canonical_runs(c, j0, j1), canonical=True)

    def iterate_An(self, n: int, m: int) -> CellSet:
        if n < 0:
            raise PreconditionError("n must be nonnegative")
        seq = self._iterates.setdefault(m, [CellSet.full(m)])
        while len(seq) <= n:
            seq.append(self.alpha_step(seq[-1]))
        return seq[n]

    def compute_attractor(self, k: int) -> "AttractorCertificate":
        if k < 1:
            raise PreconditionError("k must be at least 1")
        if k not in self._certs:
            n = stopping_n(k, self.model)
            m = resolution_for(k, self.model)
            outer = self.iterate_An(n, m)
            inner = inner_samples(n, k, self.model)
            self._certs[k] = AttractorCertificate(
                outer=outer, inner=inner.points, n_iters=n, k=k, m=m,
                bound=Dyadic(1, -k), tail=tail_bound(n, self.model),
                celldiag=Grid(self.model, m).celldiag, inner_radius=inner.radius,
            )
        return self._certs[k]

    def semidecide_outside_section(self, q, k: int) -> str:
        x, y = (Dyadic.coerce(v) for v in q)
        Y = self.model.Y
        if not (-1 <= x <= 1 and -Y <= y <= Y):
            raise PreconditionError("query point must lie in V")
        for level in range(1, k + 1):
            cert = self.compute_attractor(level)
            if not cert.outer.contains_point(x, y, self.model):
                return OUTSIDE
        return UNKNOWN


# -- stopping rules ---------------------------------------------------------


def tail_bound(n: int, model: LorenzModel | None = None) -> Fraction:
    """Geometric tail ``4 Y c^n / (1 - c)`` of the per-step Hausdorff bound."""
    pr = (model or DEFAULT_MODEL).params
    return 4 * pr.y_half * pr.c**n / (1 - pr.c)


def stopping_n(k: int, model: LorenzModel | None = None) -> int:
    """Smallest n with ``4 Y c^n / (1 - c) <= 2^-(k+1)`` (exact rationals)."""
    target = Fraction(1, 1 << (k + 1))
    n = 0
    while tail_bound(n, model) > target:
        n += 1
    return n


def resolution_for(k: int, model: LorenzModel | None = None) -> int:
    """Smallest m with cell diagonal ``<= 2^-(k+2)``."""
    Y = (model or DEFAULT_MODEL).Y
    m = 1
    while Fraction(1 + Y * Y, 1 << (2 * m)) > Fraction(1, 1 << (2 * (k + 2))):
        m += 1
    return m


# -- Hausdorff distances ------------------------------------------------------


def _interval_from_floats(lo: float, hi: float) -> Interval:
    lo = max(0.0, lo * (1 - 2.0**-40))
    hi = hi * (1 + 2.0**-40)
    return Interval(Dyadic.coerce(lo), Dyadic.coerce(hi))


def _centers(K: CellSet, grid: Grid) -> np.ndarray:
    c = K.cells
    return np.stack([grid.x_centers(c[:, 0]), grid.y_centers(c[:, 1])], axis=1)


def _directed(a: CellSet, b: CellSet, grid: Grid) -> float:
    """Max over cells of ``a`` not in ``b`` of the nearest center distance to ``b``."""
    la, lb = a.linear_index(), b.linear_index()
    extra = ~np.isin(la, lb, assume_unique=True)
    if not extra.any():
        return 0.0
    pts = _centers(a, grid)[extra]
    tree = cKDTree(_centers(b, grid))
    d, _ = tree.query(pts)
    return float(d.max())


def hausdorff(K1: CellSet, K2: CellSet, model: LorenzModel | None = None) -> Interval:
    """Enclosure of the Hausdorff distance of two cell unions.

    A cell of ``K1`` not in ``K2`` at center distance ``d`` from the nearest
    cell center of ``K2`` contributes a directed distance within
    ``d +- diag/2``; shared cells contribute 0.  The enclosure has width at
    most one cell diagonal.
    """
    _same_m(K1, K2)
    if not K1 or not K2:
        raise PreconditionError("Hausdorff distance of an empty cell set")
    if K1 == K2:
        return Interval.point(0)
    grid = Grid(model or DEFAULT_MODEL, K1.m)
    d = max(_directed(K1, K2, grid), _directed(K2, K1, grid))
    if d == 0.0:
        return Interval.point(0)
    half = grid.celldiag_float / 2
    return _interval_from_floats(d - half, d + half)


def hausdorff_points(points, K: CellSet, model: LorenzModel | None = None) -> Interval:
    """Enclosure of the Hausdorff distance between a point set and a cell union."""
    pts = np.array([[float(x), float(y)] for x, y in points], dtype=np.float64).reshape(-1, 2)
    if pts.shape[0] == 0 or not K:
        raise PreconditionError("Hausdorff distance of an empty set")
    grid = Grid(model or DEFAULT_MODEL, K.m)
    half = grid.celldiag_float / 2
    centers = _centers(K, grid)
    d_pts, _ = cKDTree(centers).query(pts)
    d_cells, _ = cKDTree(pts).query(centers)
    lo = max(float(np.max(d_pts)) - half, float(np.max(d_cells)) - half, 0.0)
    hi = max(float(np.max(d_pts)), float(np.max(d_cells)) + half)
    # float rounding of the inputs is far below the 2**-40 padding
    return _interval_from_floats(lo, hi)


# -- inner samples -------------------------------------------------------------


@dataclass
class InnerSamples:
    points: list
    radius: Fraction
    depth: int
    dropped: int = 0


def _pullback_chains(model: LorenzModel, targets, full_depth: int, extra: int):
    """Backward branch sequences ending at the targets.

    Every valid branch combination is kept for ``full_depth`` levels; the
    remaining ``extra`` levels follow a single chain (plus branch first).
    Floats are only guesses here: the forward pass certifies the result.
    """
    chains = []
    for tau in targets:
        layer = [(tau, ())]
        for _ in range(full_depth):
            nxt = []
            for w, seq in layer:
                for side in (Side.PLUS, Side.MINUS):
                    v = model.f_inverse_float(side, w)
                    if v is not None:
                        nxt.append((v, (side,) + seq))
            layer = nxt
        for w, seq in layer:
            ok = True
            for _ in range(extra):
                for side in (Side.PLUS, Side.MINUS):
                    v = model.f_inverse_float(side, w)
                    if v is not None:
                        w, seq = v, (side,) + seq
                        break
                else:
                    ok = False
                    break
            if ok:
                chains.append((w, seq))
    return chains


def inner_samples(n: int, k: int, model: LorenzModel | None = None) -> InnerSamples:
    """Points within ``2^-(k+1)`` of ``A_n`` forming a ``2^-k``-dense net of A.

    A target x-grid of spacing ``2^-(k+4)`` is pulled back through every
    branch sequence of length ``L`` (then one chain for the rest); forward
    orbits are enclosed with interval arithmetic, so each output point is the
    midpoint of an enclosure of a genuine point of ``A_n``.
    """
    model = model or DEFAULT_MODEL
    if n < 0:
        raise PreconditionError("n must be nonnegative")
    pr = model.params
    Y = pr.y_half
    h = Fraction(1, 1 << (k + 4))
    budget = Fraction(1, 1 << (k + 3))
    rho = [tuple(Dyadic.from_fraction(v) for v in pr.rho_plus), tuple(Dyadic.from_fraction(v) for v in pr.rho_minus)]
    ntargets = int(2 / h)
    xs = [Dyadic.from_fraction(-1 + (i + Fraction(1, 2)) * h) for i in range(ntargets)]
    if n == 0:
        ny = int(2 * Y / h)
        ys = [Dyadic.from_fraction(-Y + (j + Fraction(1, 2)) * h) for j in range(ny)]
        pts = [(x, y) for x in xs for y in ys] + rho
        return InnerSamples(pts, Fraction(0), 0)
    lam = pr.fiber_lipschitz
    lstar = 0
    while lam**lstar * Y > budget:
        lstar += 1
    L = min(n, lstar)
    if L == lstar:
        ystarts = [Dyadic(0)]
    else:
        sigma = Fraction(1)
        while sigma * 2 <= 2 * budget / lam**L:
            sigma *= 2
        while sigma > 2 * budget / lam**L:
            sigma /= 2
        if sigma >= 2 * Y:
            ystarts = [Dyadic(0)]
        else:
            cnt = int(math.ceil(2 * Y / sigma))
            ystarts = [Dyadic.from_fraction(min(-Y + (j + Fraction(1, 2)) * sigma, Y)) for j in range(cnt)]
    chains = _pullback_chains(model, [float(x) for x in xs], L, n - L)
    p = model.precision
    seen = set()
    pts = []
    widest = Fraction(0)
    dropped = 0
    for w, seq in chains:
        x0 = Dyadic.coerce(w)
        for y0 in ystarts:
            box = Box(Interval.point(x0), Interval.point(y0))
            good = True
            for side in seq:
                if box.x.lo.man < 0 < box.x.hi.man:
                    good = False
                    break
                box = model.F_branch(side, box, p)
            if not good:
                dropped += 1
                continue
            widest = max(widest, box.x.width().to_fraction(), box.y.width().to_fraction())
            pt = box.mid()
            if pt not in seen:
                seen.add(pt)
                pts.append(pt)
    for r in rho:
        if r not in seen:
            seen.add(r)
            pts.append(r)
    return InnerSamples(pts, widest, L, dropped)


# -- certificate -------------------------------------------------------------------


@dataclass
class AttractorCertificate:
    outer: CellSet
    inner: list
    n_iters: int
    k: int
    m: int
    bound: Dyadic
    tail: Fraction = Fraction(0)
    celldiag: Interval | None = None
    inner_radius: Fraction = Fraction(0)
    notes: list = field(default_factory=list)

    def inner_in_outer(self, model: LorenzModel | None = None) -> bool:
        return bool(self.outer.contains_points(self.inner, model).all())

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "n": self.n_iters,
            "m": self.m,
            "bound": str(self.bound),
            "bound_decimal": self.bound.to_decimal(),
            "tail_bound": f"{self.tail.numerator}/{self.tail.denominator}",
            "tail_bound_float": float(self.tail),
            "celldiag": None if self.celldiag is None else self.celldiag.to_json(),
            "inner_enclosure_width": float(self.inner_radius),
            "counts": {
                "outer_cells": len(self.outer),
                "outer_runs": int(self.outer.runs.shape[0]),
                "inner_points": len(self.inner),
            },
            "symmetric": self.outer.is_symmetric(),
        }


# -- module-level API bound to the default model -------------------------------------

_ENGINES: dict = {}


def engine(model: LorenzModel | None = None, threads: int = 1) -> AttractorEngine:
    model = model or DEFAULT_MODEL
    key = (model.params, model.precision)
    eng = _ENGINES.get(key)
    if eng is None:
        eng = _ENGINES[key] = AttractorEngine(model)
    eng.threads = max(1, int(threads))
    return eng


def alpha_step(K: CellSet, model: LorenzModel | None = None, threads: int = 1) -> CellSet:
    return engine(model, threads).alpha_step(K)


def iterate_An(n: int, m: int, model: LorenzModel | None = None, threads: int = 1) -> CellSet:
    return engine(model, threads).iterate_An(n, m)


def compute_attractor(k: int, model: LorenzModel | None = None, threads: int = 1) -> AttractorCertificate:
    return engine(model, threads).compute_attractor(k)


def semidecide_outside_section(q, k: int, model: LorenzModel | None = None) -> str:
    return engine(model).semidecide_outside_section(q, k)
