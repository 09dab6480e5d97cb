"""scikit-learn style wrappers over the sweep and theory engines.

Rows of ``X`` are parameter points. The estimators learn nothing: ``fit``
only validates the hyper-parameters and freezes the resolved configuration,
so they slot into pipelines and grid searches over integration settings.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import check_fitted, check_points
from .integrate import Branch, IntegrationConfig
from .models import ModelKind, Transform
from .sweep import DCP_CHAOS_BIT, CellClass, SweepConfig, evaluate_points
from .symbolic import KneadingConfig, Mode
from .theory import ReturnMapParams, iterate_code, parse_code

__all__ = ["KneadingTransformer", "DCPClassifier", "HomoclinicCodeDiagram"]


class _SeparatrixEstimator(BaseEstimator):
    def _build(self, mode: Mode) -> SweepConfig:
        enc = KneadingConfig(int(self.i), int(self.j), float(self.q), mode)
        integ = IntegrationConfig(dt=self.dt, max_time=self.max_time, max_symbols=enc.j,
                                  delta=self.delta, esc_bound=self.esc_bound,
                                  refine_extrema=self.refine_extrema)
        # ranges and resolution are unused for point evaluation
        return SweepConfig(ModelKind.parse(self.model), Transform.parse(self.coords),
                           (0.0, 1.0), (0.0, 1.0), (2, 2), enc, integ,
                           Branch.parse(self.branch))

    def _evaluate(self, X):
        check_fitted(self)
        X = check_points(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError("X has a different number of columns than during fit")
        return evaluate_points(self.config_, X[:, 0], X[:, 1])


class KneadingTransformer(TransformerMixin, _SeparatrixEstimator):
    """Map (u, v) parameter points to kneading values K.

    ``coords`` names the parameter transform applied to (u, v).
    ``transform`` returns an ``(n, 1)`` array; escaped or invalid points get
    ``-1``. ``mode`` is ``"full"`` or ``"one-sided"``.
    """

    def __init__(self, model="chua", coords="identity", i=1, j=10, q=0.5, mode="full",
                 branch="gamma1", dt=0.002, max_time=1e5, delta=1e-6, esc_bound=100.0,
                 refine_extrema=True):
        self.model = model
        self.coords = coords
        self.i = i
        self.j = j
        self.q = q
        self.mode = mode
        self.branch = branch
        self.dt = dt
        self.max_time = max_time
        self.delta = delta
        self.esc_bound = esc_bound
        self.refine_extrema = refine_extrema

    def fit(self, X=None, y=None):
        mode = Mode.parse(self.mode)
        if mode is Mode.DCP:
            raise ValueError("use DCPClassifier for long-term classification")
        self.config_ = self._build(mode)
        self.n_features_in_ = 2
        if X is not None:
            check_points(X)
        return self

    def transform(self, X):
        r = self._evaluate(X)
        self.classes_last_ = r.classes
        return r.values[:, None]


class DCPClassifier(_SeparatrixEstimator):
    """Long-window classification of the separatrix at each (u, v).

    ``predict`` gives the minimal period of periodic streams, 0 for chaotic
    ones and -1 for escaped or invalid points; ``predict_complexity`` the
    normalized LZ76 complexity (0 for non-chaotic points).
    """

    def __init__(self, model="chua", coords="identity", i=601, j=1000, q=0.5,
                 branch="gamma1", dt=0.002, max_time=1e5, delta=1e-6, esc_bound=100.0,
                 refine_extrema=True):
        self.model = model
        self.coords = coords
        self.i = i
        self.j = j
        self.q = q
        self.branch = branch
        self.dt = dt
        self.max_time = max_time
        self.delta = delta
        self.esc_bound = esc_bound
        self.refine_extrema = refine_extrema

    def fit(self, X=None, y=None):
        self.config_ = self._build(Mode.DCP)
        self.n_features_in_ = 2
        if X is not None:
            check_points(X)
        return self

    def predict(self, X):
        r = self._evaluate(X)
        codes = r.codes.astype(np.int64)
        out = np.where(codes & DCP_CHAOS_BIT, 0, codes)
        bad = (r.classes == CellClass.ESCAPED) | (r.classes == CellClass.INVALID)
        out[bad] = -1
        return out

    def predict_complexity(self, X):
        return self._evaluate(X).lz_norm


class HomoclinicCodeDiagram(BaseEstimator):
    """Region of a homoclinic code at (mu, nu0) points of the truncated return map.

    ``predict`` returns 0 (infeasible), 1 (feasible, last iterate < 0) or
    2 (feasible, last iterate >= 0).
    """

    def __init__(self, code="11", B0=0.8, R=1.0, Omega0=3.0, phi2=0.0,
                 sign_rule="phase", keep_mu=True):
        self.code = code
        self.B0 = B0
        self.R = R
        self.Omega0 = Omega0
        self.phi2 = phi2
        self.sign_rule = sign_rule
        self.keep_mu = keep_mu

    def fit(self, X=None, y=None):
        self.code_ = parse_code(self.code)
        self.config_ = ReturnMapParams(B0=self.B0, R=self.R, Omega0=self.Omega0, nu0=0.5,
                                       phi2=self.phi2)
        self.n_features_in_ = 2
        if X is not None:
            check_points(X)
        return self

    def predict(self, X):
        check_fitted(self)
        X = check_points(X)
        nu = X[:, 1]
        if np.any((nu <= 0) | (nu >= 1)):
            raise ValueError("nu0 column must lie in (0, 1)")
        with np.errstate(invalid="ignore", divide="ignore"):
            res = iterate_code(self.code_, X[:, 0], self.config_, self.sign_rule,
                               self.keep_mu, nu0=nu)
        return res.region().astype(np.int64)
