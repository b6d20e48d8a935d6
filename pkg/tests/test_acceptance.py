"""Acceptance criteria, one test each.

Every test prints a single ``criterion N: PASS|FAIL`` line with the measured
quantities before asserting, so ``pytest -s`` gives a compact report.
"""
import math
import os
import random
import subprocess
import sys
import time
from decimal import Decimal, getcontext
from fractions import Fraction
from functools import lru_cache
from pathlib import Path

import numpy as np
import pytest

from lorenzcert.attractor import (CellSet, compute_attractor, hausdorff, hausdorff_points, iterate_An,
                                  stopping_n, tail_bound)
from lorenzcert.flow import SuspensionTestbed, circle_field, return_time
from lorenzcert.grid import Grid
from lorenzcert.interval import Dyadic, Interval, arith, ln, sqrt
from lorenzcert.measure import (MASS_BITS, birkhoff_average, doubling_map, integrate_observable,
                                physical_measure, product_measure, pushforward_sequence, roof_integral,
                                roof_tail_bound, section_physical_measure, ulam_acim, uniform_density, w1_grid)
from lorenzcert.model import DEFAULT_MODEL, ModelParams, validate

M = DEFAULT_MODEL


def report(n, ok, detail):
    print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'} | {detail}")
    assert ok, f"criterion {n}: {detail}"


@lru_cache(maxsize=None)
def section_iterates(m, n_max):
    return [iterate_An(n, m) for n in range(n_max + 1)]


def _rho_cells(m):
    g = Grid(M, m)
    return [g.cells_containing(*r) for r in (M.params.rho_plus, M.params.rho_minus)]


# 1 ------------------------------------------------------------------------------


def test_criterion_01_hausdorff_decay():
    t0 = time.time()
    m = 9
    A = section_iterates(m, 13)
    diag = Grid(M, m).celldiag.hi.to_fraction()
    worst = []
    ok = True
    for n in range(1, 13):
        h = hausdorff(A[n], A[n + 1]).hi.to_fraction()
        bound = 108 * Fraction(3, 5) ** n + 2 * diag
        ok &= h <= bound
        worst.append(float(h / bound))
    elapsed = time.time() - t0
    ok &= elapsed < 120
    report(1, ok, f"max h/bound over n=1..12 = {max(worst):.3g}; {elapsed:.1f}s")


# 2 ------------------------------------------------------------------------------


def test_criterion_02_nesting_and_fixed_points():
    t0 = time.time()
    m = 9
    A = section_iterates(m, 16)
    nested = all(A[n + 1].issubset(A[n].inflate(1)) for n in range(16))
    rho = _rho_cells(m)
    fixed = all(any(A[n].contains_cell(i, j) for i, j in cells) for n in range(17) for cells in rho)
    elapsed = time.time() - t0
    report(2, nested and fixed and elapsed < 60,
           f"nested={nested} rho_cells_present={fixed} n<=16 m={m}; {elapsed:.1f}s")


# 3 ------------------------------------------------------------------------------


def test_criterion_03_symmetry():
    A = section_iterates(9, 16)
    sets_ok = all(a == a.reflect() for a in A)
    k = 5
    mu = section_physical_measure(k)
    asym_sec = mu.asymmetry()
    dens = ulam_acim(M, 10)
    w = dens.weights
    asym_acim = float(np.abs(w - w[::-1]).sum()) / 2**33
    nu = product_measure(dens, 8)
    asym_push = max(x.asymmetry() for x in pushforward_sequence(nu, 6))
    bound = 2.0**-k
    ok = sets_ok and max(asym_sec, asym_acim, asym_push) <= bound
    report(3, ok, f"A_n reflection-equal={sets_ok}; measure asymmetry section={asym_sec:.2e} "
                  f"acim={asym_acim:.2e} pushforward={asym_push:.2e} (bound {bound})")


# 4 ------------------------------------------------------------------------------


def _smallest_n_exact(k):
    c = Fraction(3, 5)
    n = 0
    while 270 * c**n > Fraction(1, 2 ** (k + 1)):
        n += 1
    return n


def test_criterion_04_certificate_consistency():
    t0 = time.time()
    parts = []
    ok = True
    for k in (4, 5, 6):
        cert = compute_attractor(k)
        inside = cert.inner_in_outer()
        h = hausdorff_points(cert.inner, cert.outer).hi.to_fraction()
        good = inside and h <= Fraction(1, 2**k)
        ok &= good
        parts.append(f"k={k}: n={cert.n_iters} inner_in_outer={inside} h={float(h):.4g}")
    elapsed = time.time() - t0
    ok &= elapsed < 300
    n6 = stopping_n(6)
    exact_n6 = _smallest_n_exact(6)
    literal = n6 == 16
    parts.append(f"stopping n(6)={n6} (exact smallest n with 270*0.6^n <= 2^-7 is {exact_n6}; expected literal 16)")
    report(4, ok and literal, "; ".join(parts) + f"; {elapsed:.1f}s")


# 5 ------------------------------------------------------------------------------


def test_criterion_05_model_validation():
    rep = validate(depth=12)
    slope = validate(ModelParams().replace(b_slope=Fraction(6, 5)), depth=12)
    contr = validate(ModelParams().replace(c=Fraction(4, 5)), depth=12)
    slope_fail = not slope.item("F-3:slope").passed
    contr_fail = not contr.item("F-4:c_bound").passed
    f3 = rep.item("F-3:slope")
    ok = rep.passed and slope_fail and contr_fail and f3.passed
    report(5, ok, f"defaults pass={rep.passed} ({len(rep.items)} items); b=1.2 fails F-3:slope={slope_fail}; "
                  f"c=0.8 fails F-4:c_bound={contr_fail}")


# 6 ------------------------------------------------------------------------------


def _rand_interval(rng, lo=-50.0, hi=50.0, positive=False):
    a = Fraction(rng.uniform(lo, hi))
    b = Fraction(rng.uniform(lo, hi))
    if positive:
        a, b = abs(a) + Fraction(1, 2**30), abs(b) + Fraction(1, 2**30)
    a, b = min(a, b), max(a, b)
    return Interval(Dyadic.from_fraction(a), Dyadic.from_fraction(b))


def _rand_point(rng, iv):
    t = Fraction(rng.randrange(0, 2**20), 2**20)
    return iv.lo.to_fraction() + t * (iv.hi.to_fraction() - iv.lo.to_fraction())


def test_criterion_06_interval_containment():
    rng = random.Random(20240601)
    getcontext().prec = 80
    trials = 10_000
    fails = {"add": 0, "sub": 0, "mul": 0, "sqrt": 0, "ln": 0}
    ops = {"add": lambda a, b: a + b, "sub": lambda a, b: a - b, "mul": lambda a, b: a * b}
    for name, op in ops.items():
        for _ in range(trials):
            a, b = _rand_interval(rng), _rand_interval(rng)
            p = rng.choice([24, 53, 64, 100])
            r = arith(name, a, b, p)
            x, y = _rand_point(rng, a), _rand_point(rng, b)
            v = op(x, y)
            fails[name] += not (r.lo.to_fraction() <= v <= r.hi.to_fraction())
    for _ in range(trials):
        a = _rand_interval(rng, 0, 100, positive=True)
        p = rng.choice([24, 53, 64, 100])
        x = _rand_point(rng, a)
        r = sqrt(a, p)
        lo, hi = r.lo.to_fraction(), r.hi.to_fraction()
        fails["sqrt"] += not ((lo <= 0 or lo * lo <= x) and x <= hi * hi)
        r = ln(a, p)
        dx = Decimal(x.numerator) / Decimal(x.denominator)
        v = dx.ln()
        rl = Decimal(r.lo.to_fraction().numerator) / Decimal(r.lo.to_fraction().denominator)
        rh = Decimal(r.hi.to_fraction().numerator) / Decimal(r.hi.to_fraction().denominator)
        fails["ln"] += not (rl <= v <= rh)
    # refinement: a tighter input and more bits never widen the enclosure
    mono = 0
    for _ in range(2000):
        a = _rand_interval(rng, 0, 100, positive=True)
        sub_lo = _rand_point(rng, a)
        inner = Interval(Dyadic.from_fraction(sub_lo), a.hi)
        for fn in (sqrt, ln):
            coarse, fine = fn(a, 40), fn(inner, 80)
            mono += not (coarse.lo <= fine.lo and fine.hi <= coarse.hi)
        b = _rand_interval(rng)
        c1, c2 = arith("mul", a, b, 40), arith("mul", inner, b, 80)
        mono += not (c1.lo <= c2.lo and c2.hi <= c1.hi)
    ok = sum(fails.values()) == 0 and mono == 0
    report(6, ok, f"{trials} checks per primitive, failures={fails}; refinement violations={mono}")


# 7 ------------------------------------------------------------------------------


def test_criterion_07_return_time():
    t0 = time.time()
    fld = circle_field()
    eps = Fraction(1, 2**10)
    errs = []
    for i in range(20):
        x = Fraction(i - 10, 16)
        y = Fraction(-9) + Fraction(i * 35, 20)
        t = return_time(fld, (x, y, Fraction(27)), eps).to_fraction()
        errs.append(abs(float(t) - 2 * math.pi))
    circle_ok = max(errs) <= 1e-3
    tb = SuspensionTestbed(M)
    roof_errs = []
    for x in (Fraction(1, 4), Fraction(1, 2), Fraction(3, 4)):
        t = return_time(tb, (x, Fraction(0)), eps).to_fraction()
        r = M.roof(Dyadic.from_fraction(x))
        dist = max(r.lo.to_fraction() - t, t - r.hi.to_fraction(), 0)
        roof_errs.append(float(dist))
    roof_ok = max(roof_errs) <= float(eps)
    elapsed = time.time() - t0
    report(7, circle_ok and roof_ok and elapsed < 60,
           f"circle max |t-2pi|={max(errs):.2e} over 20 starts; roof max dist={max(roof_errs):.2e} "
           f"(eps={float(eps):.2e}); {elapsed:.1f}s")


# 8 ------------------------------------------------------------------------------


def _cell_integrals(dens, fn, order=16):
    nodes, weights = np.polynomial.legendre.leggauss(order)
    n = 1 << dens.q
    w = 2.0 / n
    a = -1.0 + np.arange(n) * w
    xs = a[:, None] + (nodes[None, :] + 1) * w / 2
    return (fn(xs) * weights[None, :]).sum(axis=1) * w / 2


def _f_float(x):
    return np.sign(x) * (1.95 * np.abs(x) ** 0.75 - 1)


def test_criterion_08_ulam_oracle():
    dbl = ulam_acim(imap=doubling_map(), q=8)
    uniform = bool(np.all(dbl.weights == dbl.weights[0])) and int(dbl.weights.sum()) == 2**32
    tol = Fraction(1, 2**20)
    dens = ulam_acim(M, 10, tol)
    rho = dens.density()
    gaps = {}
    ok = uniform
    for name, fn, lip in (("x", lambda x: x, 1.0), ("x2", lambda x: x * x, 2.0)):
        lhs = float(np.sum(rho * _cell_integrals(dens, lambda x: fn(_f_float(x)))))
        rhs = float(np.sum(rho * _cell_integrals(dens, fn)))
        bound = 2 * lip * (2.0**-10 * 2 + float(tol))
        gaps[name] = (abs(lhs - rhs), bound)
        ok &= abs(lhs - rhs) <= bound
    detail = ", ".join(f"{k}: {g:.2e} <= {b:.2e}" for k, (g, b) in gaps.items())
    report(8, ok, f"doubling harness uniform={uniform}; invariance {detail}")


# 9 ------------------------------------------------------------------------------


def test_criterion_09_pushforward_decay():
    m = 8
    dens = ulam_acim(M, m + 1)
    seq = pushforward_sequence(product_measure(dens, m), 11)
    exact = all(int(s.mass.sum()) == 1 << MASS_BITS for s in seq)
    gaps = [w1_grid(seq[n], seq[n + 1]) for n in range(1, 11)]
    ratios = [gaps[i] / gaps[i - 1] for i in range(1, len(gaps))]
    in_band = [0.3 <= r <= 1.2 for r in ratios]
    ok = exact and all(in_band)
    report(9, ok, f"mass exact={exact}; W1 gaps n=1..10: {[f'{g:.2e}' for g in gaps]}; "
                  f"ratios n=2..10: {[round(r, 3) for r in ratios]}")


# 10 -----------------------------------------------------------------------------


def test_criterion_10_roof_integral():
    u = uniform_density(10)
    eps = Fraction(1, 2**12)
    I = roof_integral(u, eps)
    contains = I.lo.to_fraction() <= 2 <= I.hi.to_fraction()
    tail = roof_tail_bound(u, eps)
    width = I.hi.to_fraction() - I.lo.to_fraction()
    slack = Fraction(1, 2**40)
    width_ok = width <= 2 * tail + slack
    ivs = [roof_integral(u, Fraction(1, 2**e)) for e in (8, 10, 12)]
    nested = all(ivs[i].lo <= ivs[i + 1].lo and ivs[i + 1].hi <= ivs[i].hi for i in range(2))
    report(10, contains and width_ok and nested,
           f"I=[{float(I.lo):.6f}, {float(I.hi):.6f}] contains 2={contains}; width={float(width):.3e} "
           f"<= 2*tail+slack={float(2 * tail + slack):.3e}; nested={nested}")


# 11 -----------------------------------------------------------------------------


def test_criterion_11_srb_consistency():
    t0 = time.time()
    pm = physical_measure(5)
    I = integrate_observable(pm, "x2")
    lo, hi = float(I.lo), float(I.hi)
    mid = (lo + hi) / 2
    starts = [(Fraction(3, 10), Fraction(5), Fraction(0)),
              (Fraction(-61, 100), Fraction(-33, 10), Fraction(1, 2)),
              (Fraction(77, 100), Fraction(12), Fraction(1))]
    vals = []
    for s in starts:
        s = tuple(Fraction(float(v)) for v in s)
        vals.append(birkhoff_average(s, 10_000, "x2"))
    agree = all(abs(v - mid) <= 0.05 and lo - 0.05 <= v <= hi + 0.05 for v in vals)
    one = birkhoff_average((Fraction(3, 8), Fraction(1), Fraction(0)), 10_000, "one")
    one_int = integrate_observable(pm, "one")
    one_ok = one == 1.0 and one_int.lo <= 1 <= one_int.hi
    elapsed = time.time() - t0
    report(11, agree and one_ok and elapsed < 180,
           f"int x^2 dmu* in [{lo:.4f}, {hi:.4f}]; Birkhoff {[round(v, 4) for v in vals]}; "
           f"phi=1 average={one!r}; {elapsed:.1f}s")


# 12 -----------------------------------------------------------------------------

DETERMINISM_RUNS = [
    ["validate", "--depth", "8"],
    ["attractor", "--k", "4"],
    ["suspension", "--k", "3", "--ms", "2"],
    ["return-time", "--field", "circle", "--point", "0.5,20,27"],
    ["acim", "--q", "9"],
    ["measure", "--k", "2"],
    ["integrate", "--k", "2", "--phi", "x2"],
    ["birkhoff", "--T", "500", "--phi", "x2"],
]


def _run_suite(root: Path, threads: int):
    env = dict(os.environ)
    env.pop("LORENZCERT_OUT", None)
    for args in DETERMINISM_RUNS:
        out = root / args[0]
        proc = subprocess.run([sys.executable, "-m", "lorenzcert.cli", *args, "--threads", str(threads),
                               "--out", str(out)], capture_output=True, env=env)
        assert proc.returncode == 0, proc.stderr.decode()
    return {p.relative_to(root): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_criterion_12_determinism(tmp_path):
    a = _run_suite(tmp_path / "t1", 1)
    b = _run_suite(tmp_path / "t8", 8)
    same = a.keys() == b.keys() and all(a[k] == b[k] for k in a)
    differ = sorted(str(k) for k in a if k in b and a[k] != b[k])
    report(12, same, f"{len(a)} artifacts compared between --threads 1 and --threads 8; differing={differ}")
