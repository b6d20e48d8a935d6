import json
from fractions import Fraction

import pytest

from lorenzcert.errors import ConfigError
from lorenzcert.interval import DomainError, Dyadic, Interval
from lorenzcert.model import Box, LorenzModel, ModelParams, Side, validate


def test_f_half_value(model):
    r = model.f_branch("plus", Dyadic(1, -1))
    assert abs(float(r.mid()) - 0.159476937) < 1e-8
    assert r.width().to_fraction() < Fraction(1, 2**60)


def test_minus_branch_g_value(model):
    r = model.g_branch(Side.MINUS, Interval(-1), Interval(27))
    assert r.contains(Fraction(-553, 275))


def test_odd_symmetry(model):
    x, y = Dyadic(3, -3), Dyadic(-5, -1)
    plus = model.F_branch("plus", Box(Interval(x), Interval(y)))
    minus = model.F_branch("minus", Box(Interval(-x), Interval(-y)))
    assert minus.x == -plus.x and minus.y == -plus.y


def test_branch_extension_at_singular_line(model):
    img = model.F_branch("plus", Box(Interval(0), Interval(Dyadic(-27), Dyadic(27))))
    assert img.x == Interval(-1) and img.y == Interval(2)


def test_domain_errors(model):
    with pytest.raises(DomainError):
        model.f_branch("plus", Dyadic(-1, -1))
    with pytest.raises(DomainError):
        model.g_branch("plus", Dyadic(1, -1), Dyadic(28))


def test_roof_value(model):
    r = model.roof(Dyadic(1, -1))
    assert abs(float(r.mid()) - 1.693147) < 1e-6


def test_params_roundtrip_and_unknown_keys():
    p = ModelParams()
    assert ModelParams.from_dict(json.loads(json.dumps(p.to_dict()))) == p
    with pytest.raises(ConfigError):
        ModelParams.from_dict({"bogus": 1})


def test_mutations_fail_named_items():
    assert not validate(ModelParams().replace(b_slope=Fraction(6, 5)), depth=6).item("F-3:slope").passed
    assert not validate(ModelParams().replace(c=Fraction(4, 5)), depth=6).item("F-4:c_bound").passed


def test_defaults_validate(model):
    rep = validate(depth=8)
    assert rep.passed, rep.failed()
    assert json.loads(json.dumps(rep.to_json()))


def test_g_bound_matches_exact_for_fine_inputs(model):
    # inputs finer than the working precision take a separate integer path
    x = Dyadic(123456789123456789, -80)
    y = Dyadic(-987654321987, -70)
    exact = model._g_plus_exact(x, y)
    lo = model._g_plus_bound(x, y, 64, False).to_fraction()
    hi = model._g_plus_bound(x, y, 64, True).to_fraction()
    assert lo <= exact <= hi and hi - lo <= Fraction(1, 2**63)
