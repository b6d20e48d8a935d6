"""Invariant densities, push-forwards and the physical measure of the flow.

Pipeline: the invariant density of the one-dimensional factor ``f`` is
approximated by Ulam's method; its product with normalised Lebesgue measure
on the fibres is pushed forward by F on the grid; the roof integral
normalises the suspension measure.

Masses are integers at a fixed binary scale, so totals are exact and every
result is reproducible bit for bit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import PreconditionError, ResourceError, SingularLineError
from .grid import Grid, PlusImageTable, plus_table
from .interval import Dyadic, DomainError, Interval, ln
from .model import DEFAULT_MODEL, LorenzModel, Side

WEIGHT_BITS = 32  # scale of Ulam weights
MASS_BITS = 44  # scale of planar cell masses
SPLIT_BITS = 18  # scale of overlap fractions in push-forwards


def _pow2_exponent(value: Fraction) -> int:
    value = Fraction(value)
    if value <= 0 or value.numerator & (value.numerator - 1) or value.denominator & (value.denominator - 1):
        raise PreconditionError(f"{value} is not a power of two")
    return value.numerator.bit_length() - value.denominator.bit_length()


# -- interval maps for Ulam's method ------------------------------------------


@dataclass
class Branch:
    """Increasing branch on ``[lo, hi]`` with an interval point evaluator."""

    lo: Fraction
    hi: Fraction
    evaluate: Callable[[Dyadic, int], Interval]
    inverse_guess: Callable[[float], Optional[float]]


@dataclass
class IntervalMap:
    lo: Fraction
    hi: Fraction
    branches: list
    name: str = "map"


def model_interval_map(model: LorenzModel | None = None) -> IntervalMap:
    model = model or DEFAULT_MODEL
    return IntervalMap(
        Fraction(-1), Fraction(1),
        [
            Branch(Fraction(-1), Fraction(0), lambda d, p: model.f_branch(Side.MINUS, d, p),
                   lambda t: model.f_inverse_float(Side.MINUS, t)),
            Branch(Fraction(0), Fraction(1), lambda d, p: model.f_branch(Side.PLUS, d, p),
                   lambda t: model.f_inverse_float(Side.PLUS, t)),
        ],
        name="f",
    )


def doubling_map() -> IntervalMap:
    """``x -> 2x mod 1`` on ``[0, 1]``; a test harness with Lebesgue measure invariant."""
    return IntervalMap(
        Fraction(0), Fraction(1),
        [
            Branch(Fraction(0), Fraction(1, 2), lambda d, p: Interval.point(d.shift(1)), lambda t: t / 2),
            Branch(Fraction(1, 2), Fraction(1), lambda d, p: Interval.point(d.shift(1) - 1), lambda t: (t + 1) / 2),
        ],
        name="doubling",
    )


@dataclass
class DensityApprox:
    """Cell weights of an invariant density on ``2**q`` equal cells.

    ``weights`` are integers at scale ``2**-WEIGHT_BITS`` summing to
    ``2**WEIGHT_BITS`` exactly.
    """

    q: int
    lo: Fraction
    hi: Fraction
    weights: np.ndarray
    cauchy_gap: Dyadic
    iterations: int
    entry_error: Fraction = Fraction(0)

    @property
    def cell_width(self) -> Fraction:
        return (self.hi - self.lo) / (1 << self.q)

    def weight(self, i: int) -> Dyadic:
        return Dyadic(int(self.weights[i]), -WEIGHT_BITS)

    @property
    def sup_density(self) -> Dyadic:
        exp = _pow2_exponent(self.cell_width)
        return Dyadic(int(self.weights.max()), -WEIGHT_BITS - exp)

    def probabilities(self) -> np.ndarray:
        return self.weights.astype(np.float64) / float(1 << WEIGHT_BITS)

    def density(self) -> np.ndarray:
        return self.probabilities() / float(self.cell_width)

    def centers(self) -> np.ndarray:
        w = float(self.cell_width)
        return float(self.lo) + (np.arange(1 << self.q) + 0.5) * w

    def integrate_exact_cells(self, phi_antiderivative: Callable[[np.ndarray], np.ndarray]) -> float:
        """``sum_i rho_i (Phi(b_i) - Phi(a_i))`` for a float antiderivative ``Phi``."""
        edges = float(self.lo) + np.arange((1 << self.q) + 1) * float(self.cell_width)
        vals = phi_antiderivative(edges)
        return float(np.sum(self.density() * np.diff(vals)))

    def to_csv(self) -> str:
        lines = ["index,x_lo,x_hi,weight,density"]
        w = self.cell_width
        for i, v in enumerate(self.weights.tolist()):
            a = self.lo + i * w
            d = Dyadic(v, -WEIGHT_BITS)
            lines.append(f"{i},{float(a)!r},{float(a + w)!r},{d.to_decimal()},{v / 2**WEIGHT_BITS / float(w)!r}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict:
        return {
            "q": self.q,
            "domain": [str(self.lo), str(self.hi)],
            "cauchy_gap": self.cauchy_gap.to_decimal(),
            "iterations": self.iterations,
            "sup_density": self.sup_density.to_decimal(),
            "weight_scale_bits": WEIGHT_BITS,
            "matrix_entry_error": float(self.entry_error),
            "weight_sum_exact": int(self.weights.sum()) == 1 << WEIGHT_BITS,
        }


@dataclass
class UlamMatrix:
    """Sparse row-stochastic matrix with integer entries over ``2**unit_bits``."""

    q: int
    rows: list  # rows[i] = (targets ndarray, numerators ndarray)
    unit_bits: int
    entry_error: Fraction

    def row_sums_exact(self) -> bool:
        return all(int(num.sum()) == 1 << self.unit_bits for _, num in self.rows)

    def entry(self, i: int, j: int) -> Dyadic:
        t, num = self.rows[i]
        hit = np.flatnonzero(t == j)
        return Dyadic(int(num[hit[0]]) if hit.size else 0, -self.unit_bits)


def _preimage(branch: Branch, tau: Fraction, lo_u: int, hi_u: int, bits: int, p: int) -> int:
    """Cut point (in units of ``2**-bits``) certified within one unit-pair of ``branch^-1(tau)``.

    Returns ``u`` such that the exact preimage lies in ``[u - 1, u + 1]``
    units, found by interval bisection started from a float guess.
    """
    def sign_at(u: int) -> int:
        val = branch.evaluate(Dyadic(u, -bits), p)
        if val.hi.to_fraction() < tau:
            return -1
        if val.lo.to_fraction() > tau:
            return 1
        return 0

    guess = branch.inverse_guess(float(tau))
    a, b = lo_u, hi_u
    if guess is not None and math.isfinite(guess):
        g = min(max(int(round(guess * (1 << bits))), lo_u), hi_u)
        eta = 2
        while eta < (hi_u - lo_u):
            ga, gb = max(g - eta, lo_u), min(g + eta, hi_u)
            if sign_at(ga) <= 0 and sign_at(gb) >= 0:
                a, b = ga, gb
                break
            eta *= 16
    while b - a > 2:
        mid = (a + b) // 2
        s = sign_at(mid)
        if s < 0:
            a = mid
        elif s > 0:
            b = mid
        else:
            return mid
    return (a + b) // 2


def ulam_matrix(imap: IntervalMap, q: int, p: int = 64, extra_bits: int = 30) -> UlamMatrix:
    """Exact-partition Ulam matrix: each row splits its cell at certified cut points."""
    if q < 1:
        raise PreconditionError("q must be positive")
    ncell = 1 << q
    width = (imap.hi - imap.lo) / ncell
    wexp = _pow2_exponent(width)
    bits = -wexp + extra_bits  # cut points on the 2**-bits grid
    cell_units = 1 << extra_bits
    lo_units = int(imap.lo * (1 << bits))
    edges = [imap.lo + k * width for k in range(ncell + 1)]
    # breakpoints (unit position, target cell of the piece to the right)
    pieces: list[tuple[int, int]] = []
    for br in imap.branches:
        if (br.lo - imap.lo) / width != int((br.lo - imap.lo) / width) or (br.hi - imap.lo) / width != int((br.hi - imap.lo) / width):
            raise PreconditionError("branch endpoints must be cell edges")
        a_u, b_u = int(br.lo * (1 << bits)), int(br.hi * (1 << bits))
        ya = br.evaluate(Dyadic.from_fraction(br.lo), p)
        yb = br.evaluate(Dyadic.from_fraction(br.hi), p)
        ya_lo, ya_hi = ya.lo.to_fraction(), ya.hi.to_fraction()
        yb_lo, yb_hi = yb.lo.to_fraction(), yb.hi.to_fraction()
        inner = [k for k in range(ncell + 1) if ya_hi < edges[k] < yb_lo]
        for k in range(ncell + 1):
            e = edges[k]
            if (ya_lo <= e <= ya_hi and not ya.is_point()) or (yb_lo <= e <= yb_hi and not yb.is_point()):
                raise PreconditionError("branch endpoint image too close to a cell edge")
        if inner:
            first_target = inner[0] - 1
        else:
            first_target = min(int((ya_lo - imap.lo) / width), ncell - 1)
        pieces.append((a_u, first_target))
        for k in inner:
            pieces.append((_preimage(br, edges[k], a_u, b_u, bits, p), k))
        pieces.append((b_u, -1))
    # assemble rows
    rows = []
    pos = 0
    for i in range(ncell):
        c0 = lo_units + i * cell_units
        c1 = c0 + cell_units
        acc: dict[int, int] = {}
        while pos + 1 < len(pieces) and pieces[pos + 1][0] <= c0:
            pos += 1
        k = pos
        while k + 1 < len(pieces) and pieces[k][0] < c1:
            start, target = pieces[k]
            end = pieces[k + 1][0]
            if target >= 0:
                lo_ = max(start, c0)
                hi_ = min(end, c1)
                if hi_ > lo_:
                    acc[target] = acc.get(target, 0) + (hi_ - lo_)
            k += 1
        tg = np.array(sorted(acc), dtype=np.int64)
        num = np.array([acc[t] for t in sorted(acc)], dtype=np.int64)
        if int(num.sum()) != cell_units:
            raise PreconditionError(f"Ulam row {i} does not partition its cell")
        rows.append((tg, num))
    # one cut unit of displacement at each end of a piece
    err = Fraction(2, cell_units)
    return UlamMatrix(q, rows, extra_bits, err)


def ulam_acim(model=None, q: int = 10, tol=Fraction(1, 1 << 20), max_iter: int = 20000,
              imap: IntervalMap | None = None) -> DensityApprox:
    """Stationary vector of the Ulam matrix by power iteration from uniform.

    Each step is computed exactly and then floored to the weight scale; the
    lost residue goes to the heaviest cell (lowest index on ties), so the
    weights always sum to one exactly.
    """
    if q < 3:
        raise PreconditionError("q must be at least 3")
    tol = Fraction(tol)
    if tol <= 0:
        raise PreconditionError("tol must be positive")
    if imap is None:
        imap = model_interval_map(model if isinstance(model, LorenzModel) else None)
    P = ulam_matrix(imap, q)
    ncell = 1 << q
    one = 1 << WEIGHT_BITS
    v = [one >> q] * ncell
    shift = P.unit_bits
    tgt = [t.tolist() for t, _ in P.rows]
    num = [n.tolist() for _, n in P.rows]
    gap = Fraction(0)
    it = 0
    for it in range(1, max_iter + 1):
        acc = [0] * ncell
        for i in range(ncell):
            vi = v[i]
            if vi:
                for j, w in zip(tgt[i], num[i]):
                    acc[j] += vi * w
        new = [a >> shift for a in acc]
        res = one - sum(new)
        if res:
            jmax = max(range(ncell), key=lambda j: (new[j], -j))
            new[jmax] += res
        diff = sum(abs(a - b) for a, b in zip(new, v))
        v = new
        gap = Fraction(diff, one)
        if gap <= tol:
            break
    else:
        raise ResourceError(f"power iteration did not reach tol {tol} in {max_iter} iterations")
    return DensityApprox(q, imap.lo, imap.hi, np.array(v, dtype=np.int64),
                         Dyadic.from_fraction(gap), it, P.entry_error)


def uniform_density(q: int, lo=-1, hi=1) -> DensityApprox:
    n = 1 << q
    return DensityApprox(q, Fraction(lo), Fraction(hi), np.full(n, (1 << WEIGHT_BITS) >> q, dtype=np.int64),
                         Dyadic(0), 0)


# -- planar measures --------------------------------------------------------------


class PlanarMeasure:
    """Cell masses on the V grid, integers at scale ``2**-MASS_BITS``."""

    def __init__(self, m: int, mass: np.ndarray, steps: int = 0, meta: dict | None = None):
        self.m = m
        self.mass = np.ascontiguousarray(mass, dtype=np.int64)
        size = 2 << m
        if self.mass.shape != (size, size):
            raise PreconditionError("mass array does not match the grid")
        self.steps = steps
        self.meta = dict(meta or {})

    @property
    def N(self) -> int:
        return 1 << self.m

    def total_exact(self) -> bool:
        return int(self.mass.sum()) == 1 << MASS_BITS

    def probabilities(self) -> np.ndarray:
        return self.mass.astype(np.float64) / float(1 << MASS_BITS)

    def x_marginal(self) -> np.ndarray:
        return self.mass.sum(axis=1)

    def y_marginal(self) -> np.ndarray:
        return self.mass.sum(axis=0)

    def reflect(self) -> "PlanarMeasure":
        return PlanarMeasure(self.m, self.mass[::-1, ::-1].copy(), self.steps, self.meta)

    def asymmetry(self) -> float:
        """Total variation between the measure and its reflection."""
        return float(np.abs(self.mass - self.mass[::-1, ::-1]).sum()) / float(1 << MASS_BITS) / 2

    def __eq__(self, other) -> bool:
        return isinstance(other, PlanarMeasure) and self.m == other.m and np.array_equal(self.mass, other.mass)

    def support(self) -> np.ndarray:
        return np.argwhere(self.mass > 0)

    def to_csv(self) -> str:
        lines = ["i,j,weight"]
        for i, j in self.support().tolist():
            lines.append(f"{i},{j},{Dyadic(int(self.mass[i, j]), -MASS_BITS).to_decimal()}")
        return "\n".join(lines) + "\n"

    def to_pgm(self) -> bytes:
        """Heatmap: darker = more mass (square-root scale); top row = largest y."""
        size = 2 << self.m
        p = self.probabilities()
        top = p.max() if p.max() > 0 else 1.0
        img = (255 - np.round(255 * np.sqrt(p / top))).astype(np.uint8)
        img = img.T[::-1, :]
        return f"P5\n{size} {size}\n255\n".encode() + np.ascontiguousarray(img).tobytes()


def product_measure(mu_f: DensityApprox, m: int) -> PlanarMeasure:
    """``mu_f`` times normalised Lebesgue measure on ``[-Y, Y]``."""
    if mu_f.lo != -1 or mu_f.hi != 1:
        raise PreconditionError("the density must live on [-1, 1]")
    ncol = 2 << m
    q = mu_f.q
    w = mu_f.weights.astype(object)
    if q >= m + 1:
        f = 1 << (q - m - 1)
        col = np.array([int(sum(w[k * f:(k + 1) * f])) for k in range(ncol)], dtype=object)
        col_shift = MASS_BITS - WEIGHT_BITS
        split_bits = 0
    else:
        split_bits = m + 1 - q
        col = np.repeat(w, 1 << split_bits)
        col_shift = MASS_BITS - WEIGHT_BITS
    # column mass = col * 2**col_shift / 2**split_bits, then / ncol rows
    total_shift = col_shift - split_bits - (m + 1)
    mass = np.zeros((ncol, ncol), dtype=np.int64)
    if total_shift >= 0:
        per = np.array([int(c) << total_shift for c in col], dtype=np.int64)
        mass[:, :] = per[:, None]
    else:
        cm = [(int(c) << col_shift) >> split_bits if col_shift >= 0 else int(c) >> (split_bits - col_shift) for c in col]
        for i, c in enumerate(cm):
            base = c // ncol
            mass[i, :] = base
            mass[i, ncol // 2] += c - base * ncol
        lost = (1 << MASS_BITS) - int(mass.sum())
        i0 = int(np.argmax(mass.sum(axis=1)))
        mass[i0, ncol // 2] += lost
    return PlanarMeasure(m, mass, 0, {"q": q})


@dataclass
class _PushTables:
    table: PlusImageTable
    tc0: np.ndarray
    nx: np.ndarray
    frx: np.ndarray  # (N, maxcols) overlap fractions at scale 2**-SPLIT_BITS
    cx: np.ndarray  # centre offset per column


def _overlap_fracs(lo, hi, edges_lo, edges_hi):
    width = (hi - lo).astype(np.float64)
    ov = (np.minimum(hi, edges_hi) - np.maximum(lo, edges_lo)).astype(np.float64)
    ov = np.maximum(ov, 0.0)
    return np.floor(ov / width * float(1 << SPLIT_BITS)).astype(np.int64)


@lru_cache(maxsize=8)
def _push_tables(model: LorenzModel, m: int) -> _PushTables:
    t = plus_table(model, m)
    N = t.N
    tc0 = t.col_lo.astype(np.int64)
    nx = (t.col_hi - t.col_lo + 1).astype(np.int64)
    maxc = int(nx.max())
    X_lo = t.fx_lo[:-1]
    X_hi = t.fx_hi[1:]
    offs = np.arange(maxc, dtype=np.int64)
    a = tc0[:, None] + offs[None, :]
    e_lo = t.col_bounds_X(a)
    e_hi = t.col_bounds_X(a + 1)
    frx = _overlap_fracs(X_lo[:, None], X_hi[:, None], e_lo, e_hi)
    frx[offs[None, :] >= nx[:, None]] = 0
    mid = (X_lo + X_hi) // 2
    step = 1 << (t.P - t.m)
    cmid = np.clip((mid + (1 << t.P)) // step, 0, 2 * N - 1)
    cx = np.clip(cmid - tc0, 0, nx - 1)
    return _PushTables(t, tc0, nx, frx, cx)


def _push_block(pt: _PushTables, c, jj, M, minus, size):
    """Push masses of plus-frame cells ``(c, jj)``; returns target (a, b, mass)."""
    t = pt.table
    N = t.N
    K = c.size
    maxc = pt.frx.shape[1]
    # split in x
    fr = pt.frx[c]
    MA = (M[:, None] * fr) >> SPLIT_BITS
    MA[np.arange(K), pt.cx[c]] += M - MA.sum(axis=1)
    # split in y (depends on the source cell only)
    G_lo, G_hi = t.g_bounds(c, jj, jj)
    r0, r1 = t.rows_of(G_lo, G_hi)
    ny = r1 - r0 + 1
    maxr = int(ny.max())
    roffs = np.arange(maxr, dtype=np.int64)
    rows = r0[:, None] + roffs[None, :]
    e_lo = t.row_bounds_G(rows)
    e_hi = t.row_bounds_G(rows + 1)
    fry = _overlap_fracs(G_lo[:, None], G_hi[:, None], e_lo, e_hi)
    fry[roffs[None, :] >= ny[:, None]] = 0
    gmid = G_lo // 2 + G_hi // 2
    rmid = np.clip((gmid + t._yoff) // t._ydiv, 0, size - 1)
    cy = np.clip(rmid - r0, 0, ny - 1)
    MB = (MA[:, :, None] * fry[:, None, :]) >> SPLIT_BITS
    resid = MA - MB.sum(axis=2)
    kk, oo = np.nonzero(resid)
    MB[kk, oo, cy[kk]] += resid[kk, oo]
    a = pt.tc0[c][:, None, None] + np.arange(maxc, dtype=np.int64)[None, :, None]
    b = rows[:, None, :]
    a = np.broadcast_to(a, MB.shape)
    b = np.broadcast_to(b, MB.shape)
    sel = MB > 0
    a, b, v = a[sel], b[sel], MB[sel]
    mk = np.broadcast_to(minus[:, None, None], MB.shape)[sel]
    a = np.where(mk, size - 1 - a, a)
    b = np.where(mk, size - 1 - b, b)
    return a, b, v


def _accumulate(size: int, parts) -> np.ndarray:
    """Exact integer sums via two float bincounts on 22-bit halves."""
    out = np.zeros(size * size, dtype=np.int64)
    for a, b, v in parts:
        idx = a * size + b
        hi = np.bincount(idx, weights=(v >> 22).astype(np.float64), minlength=size * size)
        lo = np.bincount(idx, weights=(v & ((1 << 22) - 1)).astype(np.float64), minlength=size * size)
        out += (hi.astype(np.int64) << 22) + lo.astype(np.int64)
    return out.reshape(size, size)


def push_once(mu: PlanarMeasure, model: LorenzModel | None = None, block: int = 1 << 16) -> PlanarMeasure:
    model = model or DEFAULT_MODEL
    pt = _push_tables(model, mu.m)
    N = mu.N
    size = 2 * N
    i, j = np.nonzero(mu.mass)
    M = mu.mass[i, j]
    minus = i < N
    ip = np.where(minus, size - 1 - i, i)
    jp = np.where(minus, size - 1 - j, j)
    c = ip - N
    parts = []
    for s in range(0, c.size, block):
        sl = slice(s, s + block)
        parts.append(_push_block(pt, c[sl], jp[sl], M[sl], minus[sl], size))
        if len(parts) >= 16:
            parts = [_flatten(_accumulate(size, parts))]
    new = _accumulate(size, parts)
    out = PlanarMeasure(mu.m, new, mu.steps + 1, mu.meta)
    if int(new.sum()) != int(mu.mass.sum()):
        raise RuntimeError("push-forward lost mass")
    return out


def _flatten(mass: np.ndarray):
    size = mass.shape[0]
    i, j = np.nonzero(mass)
    return i.astype(np.int64), j.astype(np.int64), mass[i, j]


def pushforward(mu: PlanarMeasure, steps: int, model: LorenzModel | None = None) -> PlanarMeasure:
    """Apply the grid transfer of F ``steps`` times; total mass is preserved exactly."""
    if steps < 0:
        raise PreconditionError("steps must be nonnegative")
    for _ in range(steps):
        mu = push_once(mu, model)
    return mu


def pushforward_sequence(mu: PlanarMeasure, steps: int, model: LorenzModel | None = None) -> list:
    out = [mu]
    for _ in range(steps):
        out.append(push_once(out[-1], model))
    return out


def grid_resolution_for(k: int, model: LorenzModel | None = None) -> int:
    """Smallest m whose half cell diagonal is at most ``2^-(k+1)``."""
    Y = (model or DEFAULT_MODEL).Y
    m = 1
    while Fraction(1 + Y * Y, 1 << (2 * m + 2)) > Fraction(1, 1 << (2 * (k + 1))):
        m += 1
    return m


def section_steps_for(k: int, model: LorenzModel | None = None) -> int:
    """Smallest n with ``4 Y c^n / (1 - c) <= 2^-(k+1)``."""
    from .attractor import stopping_n

    return stopping_n(k, model)


_SECTION_CACHE: dict = {}


def section_physical_measure(k: int, model: LorenzModel | None = None, tol=Fraction(1, 1 << 20)) -> PlanarMeasure:
    if k < 1:
        raise PreconditionError("k must be at least 1")
    model = model or DEFAULT_MODEL
    key = (model.params, model.precision, k, Fraction(tol))
    if key not in _SECTION_CACHE:
        m = grid_resolution_for(k, model)
        n = section_steps_for(k, model)
        mu_f = ulam_acim(model, m + 1, tol)
        nu = product_measure(mu_f, m)
        out = pushforward(nu, n, model)
        out.meta.update({"k": k, "m": m, "steps": n, "q": m + 1, "tail_constant": "4*y_half*c^n/(1-c)",
                         "acim_gap": mu_f.cauchy_gap.to_decimal()})
        _SECTION_CACHE[key] = (out, mu_f)
    return _SECTION_CACHE[key][0]


def section_acim(k: int, model: LorenzModel | None = None, tol=Fraction(1, 1 << 20)) -> DensityApprox:
    section_physical_measure(k, model, tol)
    model = model or DEFAULT_MODEL
    return _SECTION_CACHE[(model.params, model.precision, k, Fraction(tol))][1]


# -- Wasserstein distance on the grid (tests and diagnostics only) ------------------


def _bbox(mask: np.ndarray):
    ii, jj = np.nonzero(mask)
    return ii.min(), ii.max(), jj.min(), jj.max()


def w1_grid(mu: PlanarMeasure, nu: PlanarMeasure, model: LorenzModel | None = None) -> float:
    """W1 with the l1 ground metric between cell-centre measures.

    The l1 metric on cell centres is the shortest-path metric of the grid
    graph, so W1 equals a min-cost flow on that graph; the flow is solved as
    a linear program restricted to the bounding box of both supports (some
    l1-geodesic between any two cells stays in that box).
    """
    from scipy.optimize import linprog
    from scipy.sparse import coo_matrix

    if mu.m != nu.m:
        raise PreconditionError("measures at different resolutions")
    Y = (model or DEFAULT_MODEL).Y
    d = (mu.mass - nu.mass).astype(np.float64) / float(1 << MASS_BITS)
    if not np.any(d):
        return 0.0
    i0, i1, j0, j1 = _bbox((mu.mass > 0) | (nu.mass > 0))
    sub = d[i0:i1 + 1, j0:j1 + 1]
    nx, ny = sub.shape
    idx = np.arange(nx * ny).reshape(nx, ny)
    hx, hy = 1.0 / mu.N, Y / mu.N
    tails, heads, costs = [], [], []
    if nx > 1:
        a, b = idx[:-1, :].ravel(), idx[1:, :].ravel()
        tails += [a, b]
        heads += [b, a]
        costs += [np.full(a.size, hx)] * 2
    if ny > 1:
        a, b = idx[:, :-1].ravel(), idx[:, 1:].ravel()
        tails += [a, b]
        heads += [b, a]
        costs += [np.full(a.size, hy)] * 2
    t = np.concatenate(tails)
    h = np.concatenate(heads)
    cost = np.concatenate(costs)
    E = t.size
    rows = np.concatenate([t, h])
    cols = np.concatenate([np.arange(E), np.arange(E)])
    vals = np.concatenate([np.ones(E), -np.ones(E)])
    A = coo_matrix((vals, (rows, cols)), shape=(nx * ny, E)).tocsr()
    res = linprog(cost, A_eq=A, b_eq=sub.ravel(), bounds=(0, None), method="highs")
    if res.status != 0:
        raise RuntimeError(f"transport solve failed: {res.message}")
    return float(res.fun)


def w1_dense(mu: PlanarMeasure, nu: PlanarMeasure, model: LorenzModel | None = None) -> float:
    """Reference W1 (l1 ground metric) from the full transport LP on the supports."""
    from scipy.optimize import linprog
    from scipy.sparse import coo_matrix

    Y = (model or DEFAULT_MODEL).Y
    a_idx = np.argwhere(mu.mass > 0)
    b_idx = np.argwhere(nu.mass > 0)
    a = mu.mass[mu.mass > 0].astype(np.float64) / float(1 << MASS_BITS)
    b = nu.mass[nu.mass > 0].astype(np.float64) / float(1 << MASS_BITS)
    hx, hy = 1.0 / mu.N, Y / mu.N
    C = (np.abs(a_idx[:, None, 0] - b_idx[None, :, 0]) * hx + np.abs(a_idx[:, None, 1] - b_idx[None, :, 1]) * hy)
    na, nb = a.size, b.size
    r = np.repeat(np.arange(na), nb)
    c = np.arange(na * nb)
    A1 = coo_matrix((np.ones(na * nb), (r, c)), shape=(na, na * nb))
    r2 = np.tile(np.arange(nb), na)
    A2 = coo_matrix((np.ones(na * nb), (r2, c)), shape=(nb, na * nb))
    from scipy.sparse import vstack

    res = linprog(C.ravel(), A_eq=vstack([A1, A2]).tocsr(), b_eq=np.concatenate([a, b]), bounds=(0, None), method="highs")
    if res.status != 0:
        raise RuntimeError(f"transport solve failed: {res.message}")
    return float(res.fun)


# -- roof integral -------------------------------------------------------------------


class _RoofAntiderivative:
    """Dyadic approximations of ``R(x) = int_0^x r`` for ``0 < x <= 1``.

    ``R(x) = B x + C (x - x ln x)``.  Values at the same point are cached so
    that sums over adjacent cells telescope exactly.
    """

    def __init__(self, model: LorenzModel, p: int = 64):
        self.B = model.params.roof_base
        self.C = model.params.roof_coeff
        self.p = p
        self.eta = Fraction(1, 1 << (p - 4)) * (1 + self.C)
        self._cache: dict = {}

    def __call__(self, x: Fraction) -> Fraction:
        v = self._cache.get(x)
        if v is None:
            if x == 0:
                v = Fraction(0)
            else:
                lg = ln(Interval.point(Dyadic.from_fraction(x)), self.p).mid().to_fraction()
                v = self.B * x + self.C * (x - x * lg)
            self._cache[x] = v
        return v


def roof_integral(mu_f: DensityApprox, eps_cut, model: LorenzModel | None = None) -> Interval:
    """Enclosure of ``int r dmu_f`` with the log-singular tail near 0 bounded.

    Cells (clipped to ``|x| >= eps_cut``) are integrated exactly against the
    piecewise-constant density; the two pieces ``0 < |x| < eps_cut`` add at
    most ``M (C eps (ln(1/eps) + 1) + eps r(1))`` each.
    """
    model = model or DEFAULT_MODEL
    eps = Fraction(eps_cut.to_fraction() if isinstance(eps_cut, Dyadic) else eps_cut)
    if not 0 < eps < 1:
        raise DomainError("eps_cut must lie in (0, r_plus)")
    if eps.denominator & (eps.denominator - 1):
        raise DomainError("eps_cut must be dyadic")
    if mu_f.lo != -1 or mu_f.hi != 1:
        raise PreconditionError("the density must live on [-1, 1]")
    R = _roof_antiderivative(model)
    n = 1 << mu_f.q
    w = mu_f.cell_width
    wexp = _pow2_exponent(w)
    half = n // 2
    S = Fraction(0)
    rho_total = Fraction(0)
    for i in range(half, n):
        a = (i - half) * w
        b = a + w
        rho = Fraction(int(mu_f.weights[i]) + int(mu_f.weights[n - 1 - i]), 1 << WEIGHT_BITS) / w
        rho_total += rho
        if b <= eps:
            continue
        S += rho * (R(b) - R(max(a, eps)))
    M = mu_f.sup_density.to_fraction()
    tail = 2 * M * R(eps)
    slack = 2 * R.eta * rho_total + 2 * M * R.eta
    lo = S - slack
    hi = S + tail + slack
    p = 64
    from .interval import enclose_fractions

    return enclose_fractions(lo, hi, p)


@lru_cache(maxsize=8)
def _roof_antiderivative(model: LorenzModel) -> _RoofAntiderivative:
    return _RoofAntiderivative(model)


def roof_tail_bound(mu_f: DensityApprox, eps_cut, model: LorenzModel | None = None) -> Fraction:
    """Closed-form one-sided tail bound ``M (C eps (ln(1/eps) + 1) + eps r(1))``."""
    model = model or DEFAULT_MODEL
    eps = Fraction(eps_cut)
    pr = model.params
    L = Fraction(math.log(1 / eps))
    return mu_f.sup_density.to_fraction() * (pr.roof_coeff * eps * (L + 1) + eps * pr.roof_base)


# -- observables ---------------------------------------------------------------------


@dataclass
class Observable:
    """Vectorised function of ``(x, y, s)`` with per-coordinate Lipschitz bounds.

    ``growth = (a, b)`` bounds ``|phi| <= a + b s``; ``s_free`` marks
    observables that ignore ``s``.
    """

    name: str
    fn: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
    lip: tuple = (0.0, 0.0, 0.0)
    s_free: bool = True
    growth: tuple = (1.0, 0.0)
    odd: bool = False

    def __call__(self, x, y, s=0.0):
        x = np.asarray(x, dtype=np.float64)
        return self.fn(x, np.asarray(y, dtype=np.float64), np.asarray(s, dtype=np.float64) + 0 * x)


def _hat(x, y, s):
    return np.maximum(0.0, 1.0 - 4.0 * np.abs(x - 0.25))


OBSERVABLES = {
    "one": Observable("one", lambda x, y, s: np.ones_like(x), (0.0, 0.0, 0.0), True, (1.0, 0.0)),
    "x": Observable("x", lambda x, y, s: x + 0.0, (1.0, 0.0, 0.0), True, (1.0, 0.0), odd=True),
    "x2": Observable("x2", lambda x, y, s: x * x, (2.0, 0.0, 0.0), True, (1.0, 0.0)),
    "y": Observable("y", lambda x, y, s: y + 0.0, (0.0, 1.0, 0.0), True, (27.0, 0.0), odd=True),
    "s": Observable("s", lambda x, y, s: s + 0.0 * x, (0.0, 0.0, 1.0), False, (0.0, 1.0)),
    "hat": Observable("hat", _hat, (4.0, 0.0, 0.0), True, (1.0, 0.0)),
}


def observable(name_or_obs) -> Observable:
    if isinstance(name_or_obs, Observable):
        return name_or_obs
    try:
        return OBSERVABLES[name_or_obs]
    except KeyError:
        from .errors import ConfigError

        raise ConfigError(f"unknown observable {name_or_obs!r}; choose from {sorted(OBSERVABLES)}") from None


def _outward(lo: float, hi: float) -> Interval:
    lo = float(np.nextafter(lo, -np.inf)) - 1e-300
    hi = float(np.nextafter(hi, np.inf)) + 1e-300
    pad = 4 * np.finfo(float).eps * max(abs(lo), abs(hi), 1.0)
    return Interval(Dyadic.coerce(lo - pad), Dyadic.coerce(hi + pad))


# -- physical measure ------------------------------------------------------------------


@dataclass
class PhysicalMeasure:
    """Suspension measure ``mu_F x Leb / Z`` in coordinates ``(x, y, s)``."""

    section: PlanarMeasure
    Z: Interval
    m_s: int = 3
    s_max: Fraction = Fraction(20)
    model: LorenzModel = field(default=DEFAULT_MODEL, repr=False)
    meta: dict = field(default_factory=dict)

    def _columns(self):
        """Roof data per grid column: (r_min, r_max, mean roof enclosure lo/hi)."""
        m = self.section.m
        N = 1 << m
        R = _roof_antiderivative(self.model)
        w = Fraction(1, N)
        rmin = np.empty(2 * N)
        rmax = np.empty(2 * N)
        mean_lo = np.empty(2 * N)
        mean_hi = np.empty(2 * N)
        for i in range(N, 2 * N):
            a, b = (i - N) * w, (i + 1 - N) * w
            mean = (R(b) - R(a)) / w
            eta = 2 * R.eta / w
            lo_v = float(mean - eta)
            hi_v = float(mean + eta)
            if a == 0:
                r_lo = float(self.model.roof(Dyadic.from_fraction(b)).lo)
                r_hi = math.inf
            else:
                ri = self.model.roof(Interval(Dyadic.from_fraction(a), Dyadic.from_fraction(b)))
                r_lo, r_hi = float(ri.lo), float(ri.hi)
            for k in (i, 2 * N - 1 - i):
                rmin[k], rmax[k] = r_lo, r_hi
                mean_lo[k], mean_hi[k] = lo_v * (1 - 2**-50), hi_v * (1 + 2**-50)
        return rmin, rmax, mean_lo, mean_hi

    def normalization(self) -> Interval:
        """Enclosure of the total suspension mass (should contain 1)."""
        return self.integrate(OBSERVABLES["one"])

    def truncation_mass(self) -> float:
        """Upper bound of the suspension mass above ``s_max`` (cells at x = 0)."""
        return 0.0

    def integrate(self, phi) -> Interval:
        phi = observable(phi)
        mu = self.section
        m = mu.m
        N = 1 << m
        Y = self.model.Y
        p = mu.probabilities()
        Z_lo, Z_hi = float(self.Z.lo), float(self.Z.hi)
        rmin, rmax, mean_lo, mean_hi = self._columns()
        ii, jj = np.nonzero(p)
        w = p[ii, jj]
        x = (ii + 0.5 - N) / N
        y = Y * (jj + 0.5 - N) / N
        hx, hy = 0.5 / N, 0.5 * Y / N
        if phi.s_free:
            c = phi(x, y, 0.0)
            rad = phi.lip[0] * hx + phi.lip[1] * hy
            f_lo, f_hi = c - rad, c + rad
            # int phi r dmu / Z per cell, r integrated exactly over the cell
            m_lo, m_hi = mean_lo[ii], mean_hi[ii]
            prods = np.stack([f_lo * m_lo, f_lo * m_hi, f_hi * m_lo, f_hi * m_hi])
            lo = np.sum(w * prods.min(axis=0))
            hi = np.sum(w * prods.max(axis=0))
            cands = [lo / Z_lo, lo / Z_hi, hi / Z_lo, hi / Z_hi]
            err = 1e-12 * (abs(lo) + abs(hi) + 1)
            return _outward(min(cands) - err, max(cands) + err)
        # s-dependent: slabs of height h up to the roof
        h = 1.0 / (1 << self.m_s)
        smax = float(self.s_max)
        top = np.minimum(rmax[ii], smax)
        nsl = np.ceil(top / h).astype(np.int64)
        rep = np.repeat(np.arange(ii.size), nsl)
        l = np.arange(int(nsl.sum())) - np.repeat(np.cumsum(nsl) - nsl, nsl)
        s0 = l * h
        len_lo = np.clip(rmin[ii][rep] - s0, 0, h)
        len_hi = np.clip(np.minimum(rmax[ii][rep], smax) - s0, 0, h)
        c = phi(x[rep], y[rep], s0 + h / 2)
        rad = phi.lip[0] * hx + phi.lip[1] * hy + phi.lip[2] * h / 2
        f_lo, f_hi = c - rad, c + rad
        wt = w[rep]
        prods = np.stack([f_lo * len_lo, f_lo * len_hi, f_hi * len_lo, f_hi * len_hi])
        lo = np.sum(wt * prods.min(axis=0))
        hi = np.sum(wt * prods.max(axis=0))
        # mass above s_max over the two columns touching x = 0
        tail = self._tail(phi, w[np.isinf(rmax[ii])].sum() * N)
        cands = [lo / Z_lo, lo / Z_hi, hi / Z_lo, hi / Z_hi]
        err = 1e-12 * (abs(lo) + abs(hi) + 1)
        return _outward(min(cands) - tail / Z_lo - err, max(cands) + tail / Z_lo + err)

    def _tail(self, phi: Observable, density_bound: float) -> float:
        """Bound of ``int_{s > s_max} |phi|`` using ``|phi| <= a + b s``."""
        pr = self.model.params
        B, C = float(pr.roof_base), float(pr.roof_coeff)
        smax = float(self.s_max)
        xstar = math.exp(-(smax - B) / C)
        if xstar <= 0:
            return 0.0
        Lx = math.log(1 / xstar)
        u = B + C * Lx
        int_r = B * xstar + C * (xstar + xstar * Lx)
        int_r2 = xstar * (u * u + 2 * C * u + 2 * C * C)
        a, b = phi.growth
        return density_bound * (a * int_r + b * int_r2 / 2) * (1 + 1e-9)

    def boxes(self):
        """Arrays ``(i, j, l, w_lo, w_hi)`` of suspension box weights."""
        mu = self.section
        N = mu.N
        p = mu.probabilities()
        rmin, rmax, _, _ = self._columns()
        ii, jj = np.nonzero(p)
        h = 1.0 / (1 << self.m_s)
        top = np.minimum(rmax[ii], float(self.s_max))
        nsl = np.ceil(top / h).astype(np.int64)
        rep = np.repeat(np.arange(ii.size), nsl)
        l = np.arange(int(nsl.sum())) - np.repeat(np.cumsum(nsl) - nsl, nsl)
        s0 = l * h
        len_lo = np.clip(rmin[ii][rep] - s0, 0, h)
        len_hi = np.clip(np.minimum(rmax[ii][rep], float(self.s_max)) - s0, 0, h)
        w = p[ii, jj][rep]
        return ii[rep], jj[rep], l, w * len_lo / float(self.Z.hi), w * len_hi / float(self.Z.lo)

    def to_csv(self) -> str:
        i, j, l, lo, hi = self.boxes()
        lines = ["i,j,slab,weight_lo,weight_hi"]
        lines.extend(f"{a},{b},{c},{d!r},{e!r}" for a, b, c, d, e in zip(i.tolist(), j.tolist(), l.tolist(), lo.tolist(), hi.tolist()))
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict:
        norm = self.normalization()
        return {
            "m": self.section.m,
            "m_s": self.m_s,
            "s_max": str(self.s_max),
            "Z": self.Z.to_json(),
            "normalization": norm.to_json(),
            "section_meta": self.section.meta,
            **self.meta,
        }


def physical_measure_from(section: PlanarMeasure, mu_f: DensityApprox, eps_cut=None, m_s: int = 3,
                          s_max=20, model: LorenzModel | None = None) -> PhysicalMeasure:
    model = model or DEFAULT_MODEL
    if eps_cut is None:
        eps_cut = Fraction(1, 1 << min(mu_f.q + 2, 40))
    Z = roof_integral(mu_f, eps_cut, model)
    return PhysicalMeasure(section, Z, m_s, Fraction(s_max), model, {"eps_cut": str(Fraction(eps_cut)), "q": mu_f.q})


def physical_measure(k: int, model: LorenzModel | None = None, m_s: int = 3, s_max=20) -> PhysicalMeasure:
    model = model or DEFAULT_MODEL
    section = section_physical_measure(k, model)
    mu_f = section_acim(k, model)
    pm = physical_measure_from(section, mu_f, Fraction(1, 1 << (k + 9)), m_s, s_max, model)
    pm.meta["k"] = k
    return pm


def integrate_observable(mu, phi, model: LorenzModel | None = None) -> Interval:
    """Enclosure of ``int phi dmu`` for a planar or physical measure."""
    phi = observable(phi)
    if isinstance(mu, PhysicalMeasure):
        return mu.integrate(phi)
    if isinstance(mu, PlanarMeasure):
        model = model or DEFAULT_MODEL
        N, Y = mu.N, model.Y
        p = mu.probabilities()
        ii, jj = np.nonzero(p)
        w = p[ii, jj]
        x = (ii + 0.5 - N) / N
        y = Y * (jj + 0.5 - N) / N
        c = phi(x, y, 0.0)
        rad = phi.lip[0] * 0.5 / N + phi.lip[1] * 0.5 * Y / N
        val = math.fsum((w * c).tolist())
        spread = math.fsum((w * rad).tolist())
        total = math.fsum(w.tolist())
        err = 1e-12 * (abs(val) + 1) + abs(total - 1.0) * float(np.max(np.abs(c)) + rad)
        return _outward(val - spread - err, val + spread + err)
    raise PreconditionError(f"cannot integrate against {type(mu).__name__}")


# -- Birkhoff averages ---------------------------------------------------------------------


def _segment_integral(phi: Observable, x: float, y: float, s0: Fraction, s1: Fraction):
    if s1 <= s0:
        return Fraction(0)
    if phi.s_free:
        # exact product, so constant observables average to their value exactly
        return Fraction(float(phi(x, y, 0.0))) * (s1 - s0)
    s0, s1 = float(s0), float(s1)
    nodes, weights = np.polynomial.legendre.leggauss(8)
    mid, half = (s0 + s1) / 2, (s1 - s0) / 2
    vals = phi(np.full(8, x), np.full(8, y), mid + half * nodes)
    return float(np.sum(weights * vals) * half)


def birkhoff_average(start, T, phi, model: LorenzModel | None = None, p: int | None = None) -> float:
    """Time average of ``phi`` along the suspension semiflow up to time ``T``.

    Between section hits the integral in ``s`` is done per segment; at a hit
    F is applied to the current point and the midpoint of the enclosure is
    kept.  Non-certified diagnostic.
    """
    from .flow import SuspensionPoint

    model = model or DEFAULT_MODEL
    phi = observable(phi)
    if not isinstance(start, SuspensionPoint):
        start = SuspensionPoint.of(*start)
    start.check(model)
    T = Fraction(T.to_fraction() if isinstance(T, Dyadic) else T)
    if T <= 0:
        raise PreconditionError("horizon T must be positive")
    p = p or model.precision
    x, y, s = start.x, start.y, start.s.to_fraction()
    elapsed = Fraction(0)
    parts = []
    hits = 0
    while elapsed < T:
        r = model.roof(x, p).mid().to_fraction()
        seg = min(r - s, T - elapsed)
        parts.append(_segment_integral(phi, float(x), float(y), s, s + seg))
        elapsed += seg
        if elapsed >= T:
            break
        box = model.F_point(x, y, p)
        if box.x.lo.man <= 0 <= box.x.hi.man:
            raise SingularLineError(
                f"iterate {hits + 1} has an x-enclosure touching x = 0; restart with a higher precision than {p}")
        x, y = box.mid()
        s = Fraction(0)
        hits += 1
    return float(sum(parts, Fraction(0)) / T)


def section_birkhoff_average(start, n: int, phi, model: LorenzModel | None = None) -> float:
    """Average of ``phi(x, y)`` over ``n`` iterates of F (discrete time)."""
    model = model or DEFAULT_MODEL
    phi = observable(phi)
    x, y = (Dyadic.coerce(v) for v in start)
    vals = []
    for _ in range(n):
        vals.append(float(phi(float(x), float(y), 0.0)))
        box = model.F_point(x, y)
        if box.x.lo.man <= 0 <= box.x.hi.man:
            raise SingularLineError("iterate touches x = 0; raise the precision")
        x, y = box.mid()
    return math.fsum(vals) / n
