from __future__ import annotations

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from saddlefocus.estimators import DCPClassifier, HomoclinicCodeDiagram, KneadingTransformer
from saddlefocus.sweep import SweepConfig, evaluate_points
from saddlefocus.symbolic import KneadingConfig
from saddlefocus.theory import ReturnMapParams, iterate_code


def test_transformer_matches_point_evaluation():
    X = np.array([[10.16, 14.7], [9.0, 14.0]])
    k = KneadingTransformer(j=8).fit(X).transform(X)
    cfg = SweepConfig("chua", "identity", (0, 1), (0, 1), (2, 2), KneadingConfig(1, 8))
    assert k.shape == (2, 1)
    assert np.array_equal(k[:, 0], evaluate_points(cfg, X[:, 0], X[:, 1]).values)


def test_params_and_clone():
    est = KneadingTransformer(j=12, coords="polar")
    assert est.get_params()["j"] == 12
    c = clone(est).set_params(q=0.3)
    assert c.q == 0.3 and est.q == 0.5
    with pytest.raises(ValueError):
        KneadingTransformer(mode="dcp").fit()


def test_unfitted_and_bad_input():
    with pytest.raises(NotFittedError):
        KneadingTransformer().transform([[1.0, 2.0]])
    est = KneadingTransformer().fit()
    with pytest.raises(ValueError):
        est.transform([[1.0, np.nan]])
    with pytest.raises(ValueError):
        est.transform([[1.0, 2.0, 3.0]])


def test_dcp_classifier():
    X = [[2.0, 6.0], [9.0, 6.0], [10.16, 14.7]]
    clf = DCPClassifier(i=101, j=300).fit(X)
    assert list(clf.predict(X)) == [1, 2, 0]
    lz = clf.predict_complexity(X)
    assert lz[0] == 0 and lz[2] > 0.5
    esc = DCPClassifier(model="acst", i=2, j=20, max_time=500).fit()
    assert list(esc.predict([[5.0, 0.5]])) == [-1]


def test_code_diagram():
    X = np.array([[1e-3, 0.3], [2e-2, 0.6], [5e-4, 0.9]])
    est = HomoclinicCodeDiagram(code="110", B0=0.8).fit(X)
    got = est.predict(X)
    p = ReturnMapParams(B0=0.8)
    for row, g in zip(X, got):
        assert g == iterate_code("110", row[0], p, nu0=row[1]).region()
    with pytest.raises(ValueError):
        est.predict([[1e-3, 1.5]])
