from fractions import Fraction

import numpy as np
import pytest

from lorenzcert.errors import PreconditionError, ResourceError, SingularLineError
from lorenzcert.interval import DomainError
from lorenzcert.measure import (MASS_BITS, WEIGHT_BITS, PlanarMeasure, birkhoff_average, doubling_map,
                                integrate_observable, physical_measure_from, product_measure, pushforward,
                                roof_integral, section_birkhoff_average, ulam_acim, ulam_matrix, uniform_density,
                                w1_dense, w1_grid)


@pytest.fixture(scope="module")
def acim9(model):
    return ulam_acim(model, 9)


def test_doubling_uniform_exact():
    d = ulam_acim(imap=doubling_map(), q=6)
    assert np.all(d.weights == 1 << (WEIGHT_BITS - 6))
    assert d.iterations == 1


def test_ulam_rows_exact(model):
    from lorenzcert.measure import model_interval_map

    assert ulam_matrix(doubling_map(), 5).row_sums_exact()
    assert ulam_matrix(model_interval_map(model), 7).row_sums_exact()


def test_acim_symmetric_and_normalised(acim9):
    w = acim9.weights
    assert int(w.sum()) == 1 << WEIGHT_BITS
    assert np.abs(w - w[::-1]).sum() / 2**WEIGHT_BITS <= 2**-10
    assert acim9.sup_density.to_fraction() >= Fraction(int(w.max()), 1 << WEIGHT_BITS) / acim9.cell_width


def test_acim_symmetry_against_doubled_q(model, acim9):
    fine = ulam_acim(model, 10).weights
    coarse = fine.reshape(-1, 2).sum(axis=1)
    assert np.abs(coarse - acim9.weights).sum() / 2**WEIGHT_BITS < 0.02


def test_acim_bad_arguments(model):
    with pytest.raises(PreconditionError):
        ulam_acim(model, 2)
    with pytest.raises(ResourceError):
        ulam_acim(model, 6, tol=Fraction(1, 2**40), max_iter=3)


def test_product_measure_marginals(acim9):
    nu = product_measure(acim9, 8)
    assert nu.total_exact()
    assert np.array_equal(nu.x_marginal(), acim9.weights << (MASS_BITS - WEIGHT_BITS))
    y = nu.y_marginal()
    assert np.all(y == y[0])


def test_product_of_uniform_is_uniform():
    nu = product_measure(uniform_density(7), 6)
    assert np.all(nu.mass == nu.mass[0, 0])


def test_pushforward_conserves_mass(acim9):
    nu = product_measure(acim9, 7)
    assert pushforward(nu, 0) == nu
    out = pushforward(nu, 4)
    assert out.total_exact()
    assert out.asymmetry() < 1e-5


def test_w1_grid_matches_dense_oracle(acim9):
    nu = product_measure(acim9, 5)
    a, b = pushforward(nu, 2), pushforward(nu, 3)
    assert w1_grid(a, b) == pytest.approx(w1_dense(a, b), rel=1e-3, abs=1e-9)
    assert w1_grid(a, a) == 0.0


def test_roof_integral_uniform_contains_two():
    I = roof_integral(uniform_density(10), Fraction(1, 2**12))
    assert I.lo.to_fraction() <= 2 <= I.hi.to_fraction()
    with pytest.raises(DomainError):
        roof_integral(uniform_density(6), Fraction(3, 2))


def test_roof_integral_default_width(model):
    d = ulam_acim(model, 10)
    I = roof_integral(d, Fraction(1, 2**12))
    assert float(I.hi - I.lo) <= 0.1
    fine = roof_integral(d, Fraction(1, 2**14))
    assert I.contains(fine)


def test_integrals_on_physical_measure(acim9):
    nu = pushforward(product_measure(acim9, 8), 6)
    pm = physical_measure_from(nu, acim9)
    assert pm.normalization().contains(Fraction(1))
    assert integrate_observable(pm, "x").contains(Fraction(0))
    assert integrate_observable(nu, "x").contains(Fraction(0))


def test_uniform_harness_expected_s():
    size = 2 << 7
    u = PlanarMeasure(7, np.full((size, size), (1 << MASS_BITS) // size**2, dtype=np.int64))
    pm = physical_measure_from(u, uniform_density(8), m_s=6)
    assert integrate_observable(pm, "s").contains(Fraction(5, 4))


def test_birkhoff_exact_time_accounting():
    assert birkhoff_average((0.375, 1.0, 0.0), 200, "one") == 1.0
    v = birkhoff_average((0.375, 1.0, 0.0), 2000, "x2")
    assert 0.1 < v < 0.25


def test_section_birkhoff():
    v = section_birkhoff_average((0.3, 5.0), 5000, "x2")
    assert 0.2 < v < 0.3


def test_birkhoff_rejects_singular_start():
    with pytest.raises(PreconditionError):
        birkhoff_average((0.0, 1.0, 0.0), 10, "x")
