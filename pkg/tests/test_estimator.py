import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from opusd import OptimalUSD
from opusd.exceptions import LinearlyDependent


ROWS = np.array([[1.0, 0.0], [0.5, np.sqrt(0.75)]])


def test_fit_matches_solver():
    est = OptimalUSD().fit(ROWS)
    np.testing.assert_allclose(est.p_, [0.5, 0.5], atol=1e-12)
    assert est.success_probability_ == pytest.approx(0.5)
    assert est.failure_probability_ == pytest.approx(0.5)
    assert est.n_features_in_ == 2

    est = OptimalUSD().fit(ROWS, sample_weight=[0.9, 0.1])
    np.testing.assert_allclose(est.p_, [0.75, 0.0], atol=1e-12)
    assert est.support_ == (0,)


def test_params_round_trip():
    est = OptimalUSD(tol_feas=1e-8, phase_grid=12)
    params = est.get_params()
    assert params == {"tol_feas": 1e-8, "tol_phase": 1e-6, "phase_grid": 12, "exhaustive": True}
    other = clone(est).set_params(exhaustive=False)
    assert other.exhaustive is False and other.phase_grid == 12


def test_predict_proba_zero_error():
    est = OptimalUSD().fit(ROWS)
    proba = est.predict_proba(ROWS)
    assert proba.shape == (2, 3)
    np.testing.assert_allclose(proba.sum(axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(proba, [[0.5, 0.5, 0.0], [0.5, 0.0, 0.5]], atol=1e-12)
    assert est.score(ROWS, [0, 1]) == pytest.approx(0.5)
    np.testing.assert_array_equal(est.transform(ROWS), proba)


def test_predict_orthonormal():
    est = OptimalUSD().fit(np.eye(3))
    np.testing.assert_array_equal(est.predict(np.eye(3)), [1, 2, 3])


def test_errors():
    with pytest.raises(NotFittedError):
        OptimalUSD().predict_proba(ROWS)
    with pytest.raises(LinearlyDependent):
        OptimalUSD().fit([[1.0, 0.0], [1.0, 0.0]])
    est = OptimalUSD().fit(ROWS)
    with pytest.raises(ValueError, match="features"):
        est.predict_proba(np.eye(3))
    with pytest.raises(ValueError):
        OptimalUSD().fit([[np.nan, 0.0], [0.0, 1.0]])
