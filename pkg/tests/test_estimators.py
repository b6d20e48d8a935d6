import numpy as np

from lorenzcert.estimators import AttractorCover, PhysicalMeasureEstimator, UlamDensity


def test_params_api():
    est = UlamDensity(q=6)
    assert est.get_params()["q"] == 6
    est.set_params(q=7)
    assert est.q == 7


def test_ulam_density_predict():
    est = UlamDensity(q=7).fit()
    vals = est.predict([-0.5, 0.0, 0.5])
    assert np.all(vals > 0)
    assert abs(vals[0] - vals[2]) < 0.05


def test_attractor_cover_predict(model):
    est = AttractorCover(k=2).fit()
    x, y = (float(v) for v in model.rho_plus)
    assert est.predict([[x, y], [0.5, 27.0]]).tolist() == [1, 0]


def test_physical_measure_estimator():
    est = PhysicalMeasureEstimator(k=1).fit()
    assert est.integrate("one").contains(1)
