from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lorenzcert.attractor import (OUTSIDE, UNKNOWN, CellSet, alpha_step, compute_attractor, hausdorff,
                                  inner_samples, iterate_An, semidecide_outside_section, stopping_n, tail_bound)
from lorenzcert.errors import PreconditionError

cell_lists = st.lists(st.tuples(st.integers(0, 63), st.integers(0, 63)), max_size=60)


@settings(max_examples=100)
@given(cell_lists)
def test_cellset_roundtrip_and_reflection(cells):
    K = CellSet.from_cells(5, cells)
    assert {tuple(c) for c in K.cells.tolist()} == set(cells)
    assert K.reflect().reflect() == K
    assert len(K.union(K.reflect())) >= len(K)
    assert K.issubset(K.inflate(1))


def test_coarsen_refine():
    K = CellSet.from_cells(4, [(3, 5), (10, 11)])
    assert K.refine(1).coarsen(1) == K
    assert len(K.refine(2)) == 16 * len(K)


def test_alpha_of_empty_is_rho_cells():
    E = alpha_step(CellSet.empty(8))
    assert sorted(map(tuple, E.cells.tolist())) == [(0, 274), (511, 237)]


def test_alpha_full_is_symmetric_and_shrinks():
    A1 = alpha_step(CellSet.full(8))
    assert A1.is_symmetric()
    assert len(A1) < len(CellSet.full(8))


def test_iterates_nested_and_symmetric():
    A = [iterate_An(n, 8) for n in range(8)]
    for a, b in zip(A, A[1:]):
        assert b.issubset(a.inflate(1))
        assert b == b.reflect()


def test_hausdorff_identity_and_decay():
    A2, A3 = iterate_An(2, 8), iterate_An(3, 8)
    assert hausdorff(A3, A3).hi == 0
    assert float(hausdorff(iterate_An(1, 8), A2).hi) > float(hausdorff(A2, A3).hi)


def test_stopping_rule_exact():
    assert [stopping_n(k) for k in range(1, 8)] == [14, 16, 17, 18, 20, 21, 22]
    n = stopping_n(6)
    assert tail_bound(n) <= Fraction(1, 2**7) < tail_bound(n - 1)


def test_certificate_small():
    cert = compute_attractor(2)
    assert cert.inner_in_outer()
    assert cert.outer.is_symmetric()
    js = cert.to_json()
    assert js["k"] == 2 and js["symmetric"]


def test_inner_samples_zero_levels():
    s = inner_samples(0, 2)
    assert len(s.points) > 2


def test_semidecide():
    assert semidecide_outside_section((0, 27), 3) == OUTSIDE
    assert semidecide_outside_section((-1, 2), 3) == UNKNOWN
    with pytest.raises(PreconditionError):
        semidecide_outside_section((2, 0), 2)


def test_pgm_header():
    K = iterate_An(3, 6)
    data = K.to_pgm()
    assert data.startswith(b"P5\n128 128\n255\n")
    assert len(data) == len(b"P5\n128 128\n255\n") + 128 * 128
