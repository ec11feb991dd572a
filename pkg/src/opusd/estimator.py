"""scikit-learn style wrapper around the analytic solver."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .ensemble import StateEnsemble, validate_ensemble
from .feasible import DEFAULT_TOL
from .kkt import PHASE_GRID, PHASE_TOL, solve_optimal


def _check_states(X, n_features=None):
    X = np.asarray(X)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D array of states, got shape {X.shape}")
    X = X.astype(np.complex128)
    if not np.all(np.isfinite(X)):
        raise ValueError("states contain NaN or infinity")
    if n_features is not None and X.shape[1] != n_features:
        raise ValueError(f"X has {X.shape[1]} features, but the estimator was fitted with {n_features}")
    return X


class OptimalUSD(BaseEstimator):
    """Optimal unambiguous discrimination measurement for a set of pure states.

    ``fit`` takes the states as rows of ``X`` (shape ``(N, d)``) and the
    prior probabilities as ``sample_weight`` (uniform when omitted).

    Parameters
    ----------
    tol_feas : float
        Eigenvalue tolerance when testing positivity of the inconclusive
        operator.
    tol_phase : float
        Largest imaginary part of a detection probability still accepted
        as real during the phase search.
    phase_grid : int
        Grid points per phase in the complex phase search.
    exhaustive : bool
        Search every support in addition to the greedy reduction.

    Attributes
    ----------
    p_ : ndarray of shape (N,)
        Optimal detection probabilities.
    success_probability_ : float
    failure_probability_ : float
    povm_ : PovmSet
    solution_ : UsdSolution
    n_features_in_ : int
    """

    def __init__(self, tol_feas=DEFAULT_TOL, tol_phase=PHASE_TOL, phase_grid=PHASE_GRID, exhaustive=True):
        self.tol_feas = tol_feas
        self.tol_phase = tol_phase
        self.phase_grid = phase_grid
        self.exhaustive = exhaustive

    def fit(self, X, y=None, sample_weight=None):
        X = _check_states(X)
        ensemble = StateEnsemble.from_rows(X, sample_weight)
        self.ensemble_ = validate_ensemble(ensemble)
        self.solution_ = solve_optimal(
            self.ensemble_,
            tol_feas=self.tol_feas,
            tol_phase=self.tol_phase,
            grid=self.phase_grid,
            exhaustive=self.exhaustive,
        )
        self.p_ = self.solution_.p
        self.support_ = self.solution_.support
        self.phases_ = self.solution_.phases
        self.success_probability_ = self.solution_.success_probability
        self.failure_probability_ = self.solution_.failure_probability
        self.povm_ = self.solution_.povm
        self.n_features_in_ = X.shape[1]
        return self

    def predict_proba(self, X):
        """Outcome probabilities for each row state; column 0 is inconclusive."""
        check_is_fitted(self, "povm_")
        X = _check_states(X, self.n_features_in_)
        return np.clip(self.povm_.outcome_probabilities(X.T), 0.0, 1.0)

    def transform(self, X):
        return self.predict_proba(X)

    def predict(self, X):
        """Most likely outcome per row: ``k >= 1`` identifies state ``k - 1``, 0 is inconclusive."""
        return np.argmax(self.predict_proba(X), axis=1)

    def score(self, X, y):
        """Mean probability of correctly identifying row ``j`` as state ``y[j]``."""
        proba = self.predict_proba(X)
        y = np.asarray(y, dtype=int)
        return float(np.mean(proba[np.arange(len(y)), y + 1]))
