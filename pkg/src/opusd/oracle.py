"""Brute-force checks that do not use the analytic KKT formulas.

The optimizer only sees the linear objective ``sum eta_i p_i`` and a
membership test for the feasible region (smallest eigenvalue of the
inconclusive operator), so agreement with :mod:`opusd.kkt` is a genuine
cross-check. The simulator samples measurement outcomes with the Born
rule.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .ensemble import StateEnsemble
from .exceptions import IncompletePovm, TooLarge, TooManyAxes
from .feasible import DEFAULT_TOL, min_eigenvalue, min_eigenvalues
from .reciprocal import PovmSet, ReciprocalSet, reciprocal_states

MAX_GRID_AXES = 4
MAX_SUPPORT_N = 10
GOLDEN_STEP = 1e-7
CHUNK = 200_000
CLAMP = 1e-12
GENERATOR = "PCG64"

_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True, eq=False)
class OracleResult:
    p_best: np.ndarray
    P_best: float
    method: str
    evaluations: int

    def to_dict(self) -> dict:
        return {
            "p_best": [float(x) for x in self.p_best],
            "P_best": float(self.P_best),
            "method": self.method,
            "evaluations": int(self.evaluations),
        }


class _Region:
    """Membership test for the feasible region, counting evaluations."""

    def __init__(self, duals: ReciprocalSet, tol: float):
        self.duals = duals
        self.tol = tol
        self.evaluations = 0

    def margin(self, p) -> float:
        self.evaluations += 1
        return min_eigenvalue(self.duals, p) + self.tol

    def contains(self, p) -> bool:
        return self.margin(p) >= 0.0

    def batch(self, points) -> np.ndarray:
        self.evaluations += len(points)
        return min_eigenvalues(self.duals, points) >= -self.tol

    def reach(self, p, j):
        """Largest ``t`` in [0, 1] keeping ``p`` feasible with ``p[j] = t``.

        ``None`` when even ``t = 0`` is infeasible. The margin is
        non-increasing in ``t``, so the crossing is unique.
        """
        q = p.copy()

        def f(t):
            q[j] = t
            return self.margin(q)

        if f(0.0) < 0.0:
            return None
        if f(1.0) >= 0.0:
            return 1.0
        t = brentq(f, 0.0, 1.0, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        while t > 0.0 and f(t) < 0.0:
            t = max(0.0, t - 1e-14)
        return t


def _golden_max(h, lo, hi, step=GOLDEN_STEP):
    """Maximize a concave function on [lo, hi] by golden-section search."""
    a, b = lo, hi
    x1 = b - _INVPHI * (b - a)
    x2 = a + _INVPHI * (b - a)
    f1, f2 = h(x1), h(x2)
    while b - a > step:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + _INVPHI * (b - a)
            f2 = h(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - _INVPHI * (b - a)
            f1 = h(x1)
    return (x1, f1) if f1 >= f2 else (x2, f2)


def _pair_move(region, eta, p, i, j):
    """Best point on the 2-D slice through ``p`` spanned by axes ``i``, ``j``.

    Axis ``j`` is pushed to the boundary for every trial value of axis
    ``i``; by convexity of the region the slice objective is concave in
    ``p[i]``.
    """
    q = p.copy()
    q[j] = 0.0
    hi = region.reach(q, i)
    if hi is None:
        return p

    def point(t):
        r = p.copy()
        r[i] = t
        r[j] = 0.0
        r[j] = region.reach(r, j)
        return r

    def h(t):
        r = point(t)
        return eta[i] * r[i] + eta[j] * r[j]

    t, _ = _golden_max(h, 0.0, hi)
    best = p
    best_val = float(np.dot(eta, p))
    for trial in (t, 0.0, hi):
        r = point(trial)
        val = float(np.dot(eta, r))
        if val > best_val:
            best, best_val = r, val
    return best


def _refine(region, eta, p, max_sweeps=500):
    p = p.copy()
    axes = [k for k in range(len(p)) if eta[k] > 0]
    for _ in range(max_sweeps):
        start = float(np.dot(eta, p))
        for k in axes:
            t = region.reach(p, k)
            if t is not None and t > p[k]:
                p[k] = t
        for i, j in itertools.combinations(axes, 2):
            p = _pair_move(region, eta, p, i, j)
        if float(np.dot(eta, p)) - start <= 1e-13:
            break
    return p


def _grid_best(region, eta, axes_idx, n, resolution):
    line = np.linspace(0.0, 1.0, resolution)
    k = len(axes_idx)
    total = resolution**k
    best_val, best_p = -np.inf, None
    for start in range(0, total, CHUNK):
        flat = np.arange(start, min(start + CHUNK, total))
        coords = np.stack(np.unravel_index(flat, (resolution,) * k), axis=1)
        pts = np.zeros((len(flat), n))
        pts[:, axes_idx] = line[coords]
        ok = region.batch(pts)
        if not ok.any():
            continue
        vals = np.where(ok, pts @ eta, -np.inf)
        m = int(np.argmax(vals))
        if vals[m] > best_val:
            best_val, best_p = vals[m], pts[m].copy()
    return best_p


def _face_maximize(e, support, resolution, tol, duals, use_grid=True):
    n = e.n_states
    region = _Region(duals, tol)
    eta = np.zeros(n)
    eta[support] = e.priors[support]
    if use_grid:
        start = _grid_best(region, eta, list(support), n, resolution)
    else:
        start = np.zeros(n)
    p = _refine(region, eta, start)
    return p, float(np.dot(e.priors, p)), region.evaluations


def grid_refine_maximize(
    e: StateEnsemble,
    resolution: int = 50,
    *,
    tol: float = DEFAULT_TOL,
    duals: ReciprocalSet | None = None,
) -> OracleResult:
    """Maximize the success probability over the feasible region.

    An exhaustive grid of ``resolution`` points per axis is followed by
    golden-section refinement on two-axis slices until the step drops
    below ``1e-7``.
    """
    n = e.n_states
    if n > MAX_GRID_AXES:
        raise TooManyAxes(f"grid search is limited to {MAX_GRID_AXES} axes, got {n}")
    if duals is None:
        duals = reciprocal_states(e)
    p, P, evals = _face_maximize(e, list(range(n)), resolution, tol, duals)
    return OracleResult(p, P, "refined", evals)


def support_exhaustive_maximize(
    e: StateEnsemble,
    resolution: int = 50,
    *,
    tol: float = DEFAULT_TOL,
    duals: ReciprocalSet | None = None,
) -> OracleResult:
    """Maximize separately on every face ``{p_i = 0, i not in S}``.

    Faces with more than four free axes skip the grid and refine from
    the origin.
    """
    n = e.n_states
    if n > MAX_SUPPORT_N:
        raise TooLarge(f"support enumeration is limited to N <= {MAX_SUPPORT_N}, got {n}")
    if duals is None:
        duals = reciprocal_states(e)
    best_p, best_P, total = None, -np.inf, 0
    for mask in range(1, 1 << n):
        support = [i for i in range(n) if mask >> i & 1]
        p, P, evals = _face_maximize(
            e, support, resolution, tol, duals, use_grid=len(support) <= MAX_GRID_AXES
        )
        total += evals
        if P > best_P + 1e-12 or (abs(P - best_P) <= 1e-12 and tuple(p) < tuple(best_p)):
            best_p, best_P = p, P
    return OracleResult(best_p, best_P, "support-exhaustive", total)


@dataclass(frozen=True, eq=False)
class SimulationReport:
    trials: int
    seed: int
    counts: np.ndarray
    confusion: np.ndarray
    wrong_identifications: int
    empirical_success: float
    generator: str = GENERATOR

    def to_dict(self) -> dict:
        return {
            "trials": int(self.trials),
            "seed": int(self.seed),
            "generator": self.generator,
            "counts": [int(c) for c in self.counts],
            "confusion": [[int(c) for c in row] for row in self.confusion],
            "wrong_identifications": int(self.wrong_identifications),
            "empirical_success": float(self.empirical_success),
        }


def outcome_table(e: StateEnsemble, povm: PovmSet) -> np.ndarray:
    """Row ``i``: outcome distribution for state ``i`` (inconclusive first).

    Entries below ``1e-12`` are clamped to zero and rows renormalized.
    """
    probs = povm.outcome_probabilities(e.states)
    probs[probs < CLAMP] = 0.0
    return probs / probs.sum(axis=1, keepdims=True)


def simulate_measurement(e: StateEnsemble, povm: PovmSet, trials: int, seed: int) -> SimulationReport:
    """Monte Carlo run of the measurement.

    Uses numpy's PCG64 generator seeded with ``seed``; the same seed
    always reproduces the same tallies.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    err = povm.completeness_error()
    if err > 1e-10:
        raise IncompletePovm(f"POVM elements miss the identity by {err:.3e}")
    n = e.n_states
    table = outcome_table(e, povm)
    rng = np.random.Generator(np.random.PCG64(seed))
    which = rng.choice(n, size=trials, p=e.priors)
    confusion = np.zeros((n, n + 1), dtype=np.int64)
    for i in range(n):
        count = int(np.sum(which == i))
        if count:
            outcomes = rng.choice(n + 1, size=count, p=table[i])
            confusion[i] = np.bincount(outcomes, minlength=n + 1)
    correct = int(sum(confusion[i, i + 1] for i in range(n)))
    conclusive = int(confusion[:, 1:].sum())
    return SimulationReport(
        trials=trials,
        seed=seed,
        counts=confusion.sum(axis=0),
        confusion=confusion,
        wrong_identifications=conclusive - correct,
        empirical_success=correct / trials,
    )
