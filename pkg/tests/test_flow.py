import math
from fractions import Fraction

import pytest

from lorenzcert.attractor import compute_attractor
from lorenzcert.errors import ConfigError, PreconditionError
from lorenzcert.flow import (SuspensionPoint, SuspensionTestbed, circle_field, field_by_name, poincare_from_flow,
                             return_time, return_time_details, semidecide_outside_flow, suspension_cover)
from lorenzcert.interval import Dyadic

EPS = Fraction(1, 2**8)


def test_circle_return_time():
    fld = circle_field()
    res = return_time_details(fld, (Fraction(1, 2), Fraction(20), Fraction(27)), EPS)
    assert abs(float(res.time) - 2 * math.pi) <= float(EPS)
    assert res.return_band_hits >= 2
    assert float(res.delta) <= float(res.eps0) / (2 * float(fld.beta_max))


def test_circle_landing_encloses_start():
    fld = circle_field()
    land = poincare_from_flow(fld, (Fraction(1, 4), Fraction(10), Fraction(27)), EPS)
    assert land.encloses(Fraction(1, 4), Fraction(10))


def test_suspension_testbed_matches_roof(model):
    tb = SuspensionTestbed(model)
    for x in (Fraction(1, 4), Fraction(1, 2)):
        t = return_time(tb, (x, Fraction(0)), EPS).to_fraction()
        r = model.roof(Dyadic.from_fraction(x))
        assert r.lo.to_fraction() - EPS <= t <= r.hi.to_fraction() + EPS


def test_suspension_landing_is_F(model):
    tb = SuspensionTestbed(model)
    land = poincare_from_flow(tb, (Fraction(1, 2), Fraction(3)), EPS)
    img = model.F_point(Dyadic(1, -1), Dyadic(3))
    assert land.encloses(img.x.mid(), img.y.mid())


def test_suspension_point_checks(model):
    with pytest.raises(PreconditionError):
        SuspensionPoint.of(0, 1, 0).check(model)
    with pytest.raises(PreconditionError):
        SuspensionPoint.of(0.5, 1, 100).check(model)


def test_field_by_name_rejects_unknown():
    with pytest.raises(ConfigError):
        field_by_name("nope")
    with pytest.raises(ConfigError):
        field_by_name("circle", {"radius": 1})


def test_tube_cover_contains_orbit_points(model):
    cert = compute_attractor(2)
    cover = suspension_cover(cert, m_s=2, s_max=20)
    assert cover.n_boxes > 0
    assert cover.to_ppm().startswith(b"P6")
    # rho_plus lies on the attractor; the flow line above it is covered
    x, y = model.rho_plus
    assert cover.contains(x, y, Fraction(1, 2)) or cover.contains(x, y, Fraction(0))


def test_semidecide_flow():
    assert semidecide_outside_flow(SuspensionPoint.of(0.5, 27, 0), 2) == "outside"
