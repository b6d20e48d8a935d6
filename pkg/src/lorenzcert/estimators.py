"""Thin scikit-learn style wrappers.

The computations here are not fitted to data: ``fit`` runs the certified
pipeline for the model given by the hyper-parameters and ``X`` is ignored.
The wrappers exist so the pipelines can be configured with ``get_params`` /
``set_params`` and queried with ``predict`` like any other estimator.
"""
from __future__ import annotations

from fractions import Fraction

import numpy as np
from sklearn.base import BaseEstimator

from .model import LorenzModel, ModelParams


def _model(params, precision) -> LorenzModel:
    return LorenzModel(params if params is not None else ModelParams(), precision)


class AttractorCover(BaseEstimator):
    """Outer cell cover of the section attractor at accuracy ``2**-k``."""

    def __init__(self, k=4, params=None, precision=64, threads=1):
        self.k = k
        self.params = params
        self.precision = precision
        self.threads = threads

    def fit(self, X=None, y=None):
        from .attractor import compute_attractor

        self.model_ = _model(self.params, self.precision)
        self.certificate_ = compute_attractor(self.k, self.model_, self.threads)
        self.cover_ = self.certificate_.outer
        return self

    def predict(self, X):
        """1 where a point lies in the outer cover, else 0 (certainly outside)."""
        X = np.asarray(X, dtype=np.float64)
        return self.cover_.contains_points(X, self.model_).astype(np.int64)


class UlamDensity(BaseEstimator):
    """Invariant density of ``f`` by Ulam's method on ``2**q`` cells."""

    def __init__(self, q=10, tol=Fraction(1, 1 << 20), params=None, precision=64):
        self.q = q
        self.tol = tol
        self.params = params
        self.precision = precision

    def fit(self, X=None, y=None):
        from .measure import ulam_acim

        self.density_ = ulam_acim(_model(self.params, self.precision), self.q, self.tol)
        self.weights_ = self.density_.probabilities()
        return self

    def predict(self, X):
        """Density value of the cell containing each x in ``[-1, 1]``."""
        x = np.asarray(X, dtype=np.float64).ravel()
        n = 1 << self.q
        idx = np.clip(np.floor((x + 1) / 2 * n).astype(np.int64), 0, n - 1)
        return self.density_.density()[idx]


class PhysicalMeasureEstimator(BaseEstimator):
    """Suspension measure at accuracy ``2**-k``; ``score`` integrates an observable."""

    def __init__(self, k=4, m_s=3, params=None, precision=64):
        self.k = k
        self.m_s = m_s
        self.params = params
        self.precision = precision

    def fit(self, X=None, y=None):
        from .measure import physical_measure

        self.model_ = _model(self.params, self.precision)
        self.measure_ = physical_measure(self.k, self.model_, m_s=self.m_s)
        return self

    def integrate(self, phi):
        from .measure import integrate_observable

        return integrate_observable(self.measure_, phi, self.model_)
