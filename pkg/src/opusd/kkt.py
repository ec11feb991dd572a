"""Analytic optimal unambiguous discrimination from the KKT conditions.

At an optimum supported on ``S`` the dual variable is rank one,
``X = v v^*``, and the coefficients ``c_k = <dual_k|v>`` have modulus
``sqrt(eta_k)``. Writing ``c_k = sqrt(eta_k) exp(i phi_k)`` the detection
probabilities follow from ``D_S (p * c) = c``:

* Cramer form: ``p_i = det(D_S with column i replaced by c) / (c_i det D_S)``
* direct form: ``p_i = sum_j exp(i(phi_j - phi_i)) sqrt(eta_j / eta_i) A_ij``
  with ``A = D_S^{-1}`` (the Schur complement of the Gram matrix onto ``S``)
* success probability ``c^* D_S^{-1} c``, equal to a bordered determinant
  ratio and, on full support, to ``||sum_j c_j |psi_j>||^2``.

The phases are not fixed by the conditions themselves. :func:`search_phases`
looks for phases that make every ``p_i`` real and keeps those giving a
feasible measurement.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares, minimize_scalar

from .ensemble import StateEnsemble, gram_matrix
from .exceptions import CrossCheckError, NoFeasiblePhase, NoSolution, SingularMinor
from .feasible import DEFAULT_TOL, feasibility_check, inconclusive_operator
from .reciprocal import PovmSet, ReciprocalSet, dual_gram, povm_from_probabilities, reciprocal_states

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi
SINGULAR_TOL = 1e-12
PHASE_GRID = 24
PHASE_TOL = 1e-6
BOX_SLACK = 1e-9
TIE_TOL = 1e-10
CROSS_TOL = 1e-8
MAX_GRID_SUPPORT = 4
MAX_EXHAUSTIVE_N = 10
MULTISTART = 256
MAX_STARTS = 48


@dataclass(frozen=True)
class PhaseAssignment:
    """Phases ``phi_j`` of the dual coefficients, gauge-fixed so that the
    first index of the support carries phase 0."""

    phases: tuple
    real_mode: bool = False

    def __post_init__(self):
        phases = tuple(float(x) % TWO_PI for x in self.phases)
        object.__setattr__(self, "phases", phases)
        if self.real_mode and any(x not in (0.0, np.pi) for x in phases):
            raise ValueError("real-mode phases must be 0 or pi")

    @classmethod
    def from_signs(cls, signs) -> "PhaseAssignment":
        return cls(tuple(0.0 if s > 0 else np.pi for s in signs), real_mode=True)

    @property
    def factors(self) -> np.ndarray:
        if self.real_mode:
            return np.array([1.0 if x == 0.0 else -1.0 for x in self.phases], dtype=np.complex128)
        return np.exp(1j * np.array(self.phases))

    @property
    def signs(self):
        """``+1``/``-1`` per index in real mode, else ``None``."""
        if not self.real_mode:
            return None
        return tuple(1 if x == 0.0 else -1 for x in self.phases)


def _support(support, n) -> np.ndarray:
    if support is None:
        return np.arange(n)
    s = np.array(sorted(set(int(i) for i in support)), dtype=int)
    if s.size == 0:
        raise ValueError("support must be non-empty")
    if s[0] < 0 or s[-1] >= n:
        raise IndexError(f"support {s.tolist()} out of range for {n} states")
    return s


def _coefficients(priors, phases: PhaseAssignment, s) -> np.ndarray:
    eta = np.asarray(priors, dtype=np.float64)[s]
    if np.any(eta <= 0):
        raise SingularMinor("zero prior on the support")
    return np.sqrt(eta) * phases.factors[s]


def _restricted(D, s):
    ds = np.asarray(D)[np.ix_(s, s)]
    det = np.linalg.det(ds)
    if abs(det) <= SINGULAR_TOL:
        raise SingularMinor(f"|det D_S| = {abs(det):.3e} on support {s.tolist()}")
    return ds, det


def effective_gram(G, support=None) -> np.ndarray:
    """Inverse of the dual Gram matrix restricted to ``support``.

    Computed from the Gram matrix alone as the Schur complement
    ``G_SS - G_ST G_TT^{-1} G_TS`` (``T`` the complement of ``S``).
    On full support it is ``G`` itself.
    """
    G = np.asarray(G)
    n = G.shape[0]
    s = _support(support, n)
    t = np.setdiff1d(np.arange(n), s)
    g_ss = G[np.ix_(s, s)]
    if t.size == 0:
        return g_ss
    g_tt = G[np.ix_(t, t)]
    if abs(np.linalg.det(g_tt)) <= SINGULAR_TOL:
        raise SingularMinor("Gram block outside the support is singular")
    g_st = G[np.ix_(s, t)]
    return g_ss - g_st @ np.linalg.solve(g_tt, g_st.conj().T)


def interior_solution_cramer(D, priors, phases: PhaseAssignment, support=None) -> np.ndarray:
    """Detection probabilities by column replacement in ``D_S``.

    Returns a complex array of length N, zero off the support; the
    imaginary parts measure how far the phases are from a KKT point.
    """
    D = np.asarray(D)
    n = D.shape[0]
    s = _support(support, n)
    c = _coefficients(priors, phases, s)
    ds, det = _restricted(D, s)
    p = np.zeros(n, dtype=np.complex128)
    for k, i in enumerate(s):
        replaced = ds.copy()
        replaced[:, k] = c
        p[i] = np.linalg.det(replaced) / (c[k] * det)
    return p


def interior_solution_direct(G, priors, phases: PhaseAssignment, support=None) -> np.ndarray:
    """Detection probabilities from the Gram matrix without determinants."""
    G = np.asarray(G)
    n = G.shape[0]
    s = _support(support, n)
    c = _coefficients(priors, phases, s)
    geff = effective_gram(G, s)
    p = np.zeros(n, dtype=np.complex128)
    p[s] = (geff @ c) / c
    return p


def success_probability_bordered(D, priors, phases: PhaseAssignment, support=None) -> float:
    """``-det([[0, c^*], [c, D_S]]) / det(D_S)``."""
    D = np.asarray(D)
    s = _support(support, D.shape[0])
    c = _coefficients(priors, phases, s)
    ds, det = _restricted(D, s)
    k = len(s)
    bordered = np.zeros((k + 1, k + 1), dtype=np.complex128)
    bordered[0, 1:] = c.conj()
    bordered[1:, 0] = c
    bordered[1:, 1:] = ds
    value = -np.linalg.det(bordered) / det
    if abs(value.imag) > CROSS_TOL * max(1.0, abs(value)):
        raise CrossCheckError(f"bordered success probability has imaginary part {value.imag:.3e}")
    return float(value.real)


def success_probability_vector_form(e: StateEnsemble, phases: PhaseAssignment, support=None) -> float:
    """``|| sum_j sqrt(eta_j) exp(i phi_j) |psi_j> ||^2``; full support only."""
    s = _support(support, e.n_states)
    if len(s) != e.n_states:
        raise ValueError("the vector form is defined for full support only")
    c = _coefficients(e.priors, phases, s)
    v = e.states @ c
    return float(np.vdot(v, v).real)


def dual_vector(duals: ReciprocalSet, priors, phases: PhaseAssignment, support=None) -> np.ndarray:
    """The vector ``v`` with ``X = v v^*``, built from the restricted dual Gram."""
    n = duals.n_states
    s = _support(support, n)
    c = _coefficients(priors, phases, s)
    ds, _ = _restricted(dual_gram(duals), s)
    return duals.dual_states[:, s] @ np.linalg.solve(ds, c)


# ---------------------------------------------------------------------------
# phase search


@dataclass(frozen=True, eq=False)
class PhaseCandidate:
    support: tuple
    phases: PhaseAssignment
    p: np.ndarray
    success_probability: float
    imag_residual: float
    in_box: bool
    min_eigenvalue: float
    feasible: bool

    def box_violation(self) -> float:
        return float(np.sum(np.maximum(0.0, -self.p) + np.maximum(0.0, self.p - 1.0)))

    def to_dict(self) -> dict:
        return {
            "support": list(self.support),
            "phases": list(self.phases.phases),
            "real_mode": self.phases.real_mode,
            "p": [float(x) for x in self.p],
            "success_probability": float(self.success_probability),
            "imag_residual": float(self.imag_residual),
            "in_box": self.in_box,
            "min_eigenvalue": float(self.min_eigenvalue),
            "feasible": self.feasible,
        }


def _p_from_angles(geff, sqrt_eta, angles):
    """Complex p for a batch of free phases (first support phase fixed at 0)."""
    angles = np.atleast_2d(angles)
    phi = np.concatenate([np.zeros((angles.shape[0], 1)), angles], axis=1)
    c = sqrt_eta * np.exp(1j * phi)
    return (c @ geff.T) / c


def _unreality(geff, sqrt_eta, angles):
    return np.abs(_p_from_angles(geff, sqrt_eta, angles).imag).sum(axis=1)


def _grid_minima(geff, sqrt_eta, grid):
    k = len(sqrt_eta) - 1
    axis = np.arange(grid) * (TWO_PI / grid)
    mesh = np.stack(np.meshgrid(*([axis] * k), indexing="ij"), axis=-1).reshape(-1, k)
    f = _unreality(geff, sqrt_eta, mesh).reshape((grid,) * k)
    is_min = np.ones_like(f, dtype=bool)
    for ax in range(k):
        for shift in (1, -1):
            is_min &= f <= np.roll(f, shift, axis=ax)
    flat = np.flatnonzero(is_min.reshape(-1))
    order = np.argsort(f.reshape(-1)[flat], kind="stable")
    return mesh[flat[order[:MAX_STARTS]]]


def _refine_angles(geff, sqrt_eta, start, step):
    """Coordinate descent on the total imaginary part of ``p``, then a
    Levenberg-Marquardt polish of the same residuals."""
    theta = np.array(start, dtype=np.float64)

    def total(t):
        return float(_unreality(geff, sqrt_eta, t)[0])

    width = step
    sweeps = 0 if total(theta) < 1e-14 else 60
    for _ in range(sweeps):
        moved = 0.0
        for j in range(theta.size):
            def along(x, j=j):
                trial = theta.copy()
                trial[j] = x
                return total(trial)

            res = minimize_scalar(
                along,
                bounds=(theta[j] - width, theta[j] + width),
                method="bounded",
                options={"xatol": 1e-12},
            )
            if res.fun < along(theta[j]):
                moved = max(moved, abs(res.x - theta[j]))
                theta[j] = res.x
        if moved < 1e-10:
            break
        width = max(min(width, 4.0 * moved), 1e-9)

    def residual(t):
        return _p_from_angles(geff, sqrt_eta, t)[0].imag

    fit = least_squares(residual, theta, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15)
    if np.max(np.abs(fit.fun)) <= np.max(np.abs(residual(theta))):
        theta = fit.x
    return theta


def _snap_phase(x):
    x = float(x) % TWO_PI
    for ref in (0.0, np.pi, TWO_PI):
        if abs(x - ref) < 1e-9:
            return ref % TWO_PI
    return x


def _complex_angle_solutions(geff, sqrt_eta, grid, tol_phase):
    k = len(sqrt_eta) - 1
    if k <= MAX_GRID_SUPPORT - 1:
        starts = _grid_minima(geff, sqrt_eta, grid)
        step = TWO_PI / grid
    else:
        rng = np.random.default_rng(0)
        starts = rng.uniform(0.0, TWO_PI, size=(MULTISTART, k))
        step = np.pi
    found = []
    for start in starts:
        theta = _refine_angles(geff, sqrt_eta, start, step)
        resid = float(np.max(np.abs(_p_from_angles(geff, sqrt_eta, theta)[0].imag)))
        if resid <= tol_phase:
            found.append(np.array([_snap_phase(x) for x in theta]))
    return found


def enumerate_phase_candidates(
    e: StateEnsemble,
    support=None,
    *,
    grid: int = PHASE_GRID,
    tol_feas: float = DEFAULT_TOL,
    tol_phase: float = PHASE_TOL,
    duals: ReciprocalSet | None = None,
    gram=None,
) -> list:
    """All phase assignments on ``support`` that make ``p`` real.

    Real Gram blocks get every sign vector with a leading ``+``. Supports
    of three or more states also get a continuous phase search, since a
    real Gram matrix can have its optimum at genuinely complex phases
    (equiangular states are the standard example). Candidates are
    deduplicated on ``p`` and returned in a deterministic order, feasible
    or not.
    """
    n = e.n_states
    s = _support(support, n)
    if duals is None:
        duals = reciprocal_states(e)
    if gram is None:
        gram = gram_matrix(e)
    geff = effective_gram(gram, s)
    sqrt_eta = np.sqrt(e.priors[s])
    if np.any(sqrt_eta == 0):
        raise SingularMinor("zero prior on the support")

    real_block = bool(np.max(np.abs(geff.imag)) <= 1e-12) if geff.size else True
    assignments = []
    if len(s) == 1:
        assignments.append(PhaseAssignment((0.0,) * n, real_mode=True))
    else:
        if real_block:
            for tail in itertools.product((1, -1), repeat=len(s) - 1):
                signs = np.ones(n, dtype=int)
                signs[s[1:]] = tail
                assignments.append(PhaseAssignment.from_signs(signs))
        if not real_block or len(s) >= 3:
            for theta in _complex_angle_solutions(geff, sqrt_eta, grid, tol_phase):
                phases = np.zeros(n)
                phases[s[1:]] = theta
                real = all(x in (0.0, np.pi) for x in phases)
                assignments.append(PhaseAssignment(tuple(phases), real_mode=real))

    candidates = {}
    for phases in assignments:
        pc = interior_solution_direct(gram, e.priors, phases, s)
        imag = float(np.max(np.abs(pc.imag)))
        if imag > tol_phase:
            continue
        p = pc.real.copy()
        in_box = bool(np.all(p[s] >= -BOX_SLACK) and np.all(p[s] <= 1.0 + BOX_SLACK))
        p_clip = np.clip(p, 0.0, 1.0)
        if in_box:
            report = feasibility_check(e, p_clip, tol_feas, duals=duals)
            lam, feasible = report.min_eigenvalue, report.feasible
            p = p_clip
        else:
            lam = float(np.linalg.eigvalsh(inconclusive_operator(duals, p))[0])
            feasible = False
        cand = PhaseCandidate(
            support=tuple(int(i) for i in s),
            phases=phases,
            p=p,
            success_probability=float(np.dot(e.priors, p)),
            imag_residual=imag,
            in_box=in_box,
            min_eigenvalue=lam,
            feasible=feasible,
        )
        key = tuple(np.round(p, 7))
        old = candidates.get(key)
        if old is None or cand.phases.phases < old.phases.phases:
            candidates[key] = cand
    return sorted(candidates.values(), key=lambda c: (c.phases.phases, tuple(c.p)))


def search_phases(e: StateEnsemble, support=None, **kwargs) -> list:
    """Feasible KKT candidates on ``support``.

    Raises :class:`NoFeasiblePhase` (carrying every rejected candidate)
    when none survive.
    """
    everything = enumerate_phase_candidates(e, support, **kwargs)
    feasible = [c for c in everything if c.feasible]
    if not feasible:
        s = _support(support, e.n_states)
        raise NoFeasiblePhase(f"no feasible phase assignment on support {s.tolist()}", everything)
    return feasible


# ---------------------------------------------------------------------------
# solver


@dataclass(frozen=True)
class KktResiduals:
    stationarity: float
    slackness: float
    dual_feasibility: float
    primal_feasibility: float
    z: tuple = ()

    def as_tuple(self):
        return (self.stationarity, self.slackness, self.dual_feasibility, self.primal_feasibility)

    def max(self) -> float:
        return max(self.as_tuple())

    def certified(self, tol: float = 1e-8) -> bool:
        return self.max() <= tol

    def to_dict(self) -> dict:
        return {
            "stationarity": self.stationarity,
            "slackness": self.slackness,
            "dual_feasibility": self.dual_feasibility,
            "primal_feasibility": self.primal_feasibility,
            "z": list(self.z),
        }


@dataclass(frozen=True, eq=False)
class UsdSolution:
    p: np.ndarray
    support: tuple
    phases: PhaseAssignment
    success_probability: float
    failure_probability: float
    povm: PovmSet | None = None
    kkt_residuals: KktResiduals | None = None
    candidates: tuple = ()
    reduction: dict = field(default_factory=dict)

    def to_dict(self, verbose: bool = False) -> dict:
        out = {
            "p": [float(x) for x in self.p],
            "support": list(self.support),
            "phases": list(self.phases.phases),
            "real_mode": self.phases.real_mode,
            "success_probability": float(self.success_probability),
            "failure_probability": float(self.failure_probability),
            "reduction": self.reduction,
        }
        if self.phases.real_mode:
            out["signs"] = list(self.phases.signs)
        if self.kkt_residuals is not None:
            out["kkt_residuals"] = self.kkt_residuals.to_dict()
        if verbose:
            out["candidates"] = [c.to_dict() for c in self.candidates]
        return out


def kkt_residuals(e: StateEnsemble, sol, duals: ReciprocalSet | None = None) -> KktResiduals:
    """Residuals of the KKT system at ``sol``.

    ``sol`` needs ``p``, ``phases`` and ``support``. The dual variable is
    the rank-one ``X = v v^*`` fixed by the phases alone, so perturbing
    ``p`` shows up in the stationarity residual.
    """
    if duals is None:
        duals = reciprocal_states(e)
    p = np.asarray(sol.p, dtype=np.float64)
    v = dual_vector(duals, e.priors, sol.phases, sol.support)
    x = np.outer(v, v.conj())
    pi0 = inconclusive_operator(duals, p)
    overlaps = duals.dual_states.conj().T @ v
    z = np.abs(overlaps) ** 2 - e.priors
    return KktResiduals(
        stationarity=float(np.linalg.norm(pi0 @ x)),
        slackness=float(np.max(np.abs(z * p))),
        dual_feasibility=float(max(0.0, -np.min(z))),
        primal_feasibility=float(max(0.0, -np.linalg.eigvalsh(pi0)[0])),
        z=tuple(float(t) for t in z),
    )


def _pick(cands):
    """Largest success probability; near-ties go to the smallest phase vector."""
    best = max(c.success_probability for c in cands)
    tied = [c for c in cands if c.success_probability >= best - TIE_TOL]
    return min(tied, key=lambda c: (c.phases.phases, c.support))


def _drop_index(rejected, s):
    usable = [c for c in rejected if c.box_violation() > 0 or not c.feasible]
    if not usable:
        return int(s[-1])
    worst = min(usable, key=lambda c: (c.box_violation(), c.phases.phases))
    vals = worst.p[s]
    if np.min(vals) < 0:
        return int(s[int(np.argmin(vals))])
    # no negative entry: drop the largest overshoot, else the smallest p
    over = vals - 1.0
    if np.max(over) > 0:
        return int(s[int(np.argmax(over))])
    return int(s[int(np.argmin(vals))])


def _cross_check(e, duals, gram, D, cand):
    s = np.array(cand.support)
    cramer = interior_solution_cramer(D, e.priors, cand.phases, s)
    direct = interior_solution_direct(gram, e.priors, cand.phases, s)
    cond = float(np.linalg.cond(D[np.ix_(s, s)]))
    tol = CROSS_TOL * max(1.0, cond)
    gap = float(np.max(np.abs(cramer - direct)))
    if gap > tol:
        raise CrossCheckError(f"Cramer and direct forms disagree by {gap:.3e} on support {s.tolist()}")
    bordered = success_probability_bordered(D, e.priors, cand.phases, s)
    weighted = float(np.dot(e.priors, direct.real))
    if abs(bordered - weighted) > tol:
        raise CrossCheckError(f"bordered determinant {bordered!r} != sum eta p {weighted!r}")
    if len(s) == e.n_states:
        vec = success_probability_vector_form(e, cand.phases, s)
        if abs(vec - weighted) > tol:
            raise CrossCheckError(f"vector form {vec!r} != sum eta p {weighted!r}")


def solve_optimal(
    e: StateEnsemble,
    *,
    tol_feas: float = DEFAULT_TOL,
    tol_phase: float = PHASE_TOL,
    grid: int = PHASE_GRID,
    exhaustive: bool = True,
) -> UsdSolution:
    """Optimal zero-error measurement for a validated ensemble.

    The full support is tried first; when it admits no feasible KKT point
    the index with the most negative ``p_i`` is dropped and the search is
    repeated on the smaller support, keeping the original reciprocal
    states. For ``N <= 10`` every support is also searched and the overall
    best feasible candidate is returned.
    """
    n = e.n_states
    duals = reciprocal_states(e)
    gram = gram_matrix(e)
    D = dual_gram(duals)
    opts = dict(grid=grid, tol_feas=tol_feas, tol_phase=tol_phase, duals=duals, gram=gram)

    universe = np.flatnonzero(e.priors > 0)
    seen = {}
    pool = []

    def explore(s):
        key = tuple(int(i) for i in s)
        if key not in seen:
            everything = enumerate_phase_candidates(e, s, **opts)
            seen[key] = everything
            pool.extend(c for c in everything if c.feasible)
        return seen[key]

    s = universe.copy()
    greedy = None
    while True:
        everything = explore(s)
        found = [c for c in everything if c.feasible]
        if found:
            greedy = _pick(found)
            break
        if len(s) == 1:
            break
        drop = _drop_index(everything, s)
        logger.debug("dropping index %d from support %s", drop, s.tolist())
        s = s[s != drop]

    if exhaustive and len(universe) <= MAX_EXHAUSTIVE_N:
        for r in range(1, len(universe) + 1):
            for sub in itertools.combinations(universe.tolist(), r):
                explore(np.array(sub))

    if not pool:
        raise NoSolution("no feasible candidate on any support")
    for i in universe:
        single = seen.get((int(i),))
        if single is not None and not any(c.feasible for c in single):
            raise NoSolution(f"singleton support {{{i}}} unexpectedly infeasible")

    best = _pick(pool)
    _cross_check(e, duals, gram, D, best)

    reduction = {
        "greedy_support": list(greedy.support) if greedy else None,
        "greedy_success_probability": greedy.success_probability if greedy else None,
        "exhaustive": bool(exhaustive and len(universe) <= MAX_EXHAUSTIVE_N),
        "supports_searched": len(seen),
    }
    reduction["greedy_agrees"] = bool(
        greedy is not None and abs(greedy.success_probability - best.success_probability) <= 1e-9
    )

    p = best.p.copy()
    P = float(np.dot(e.priors, p))
    povm = povm_from_probabilities(e, p, duals)
    everything = tuple(c for key in sorted(seen) for c in seen[key])
    sol = UsdSolution(
        p=p,
        support=best.support,
        phases=best.phases,
        success_probability=P,
        failure_probability=1.0 - P,
        povm=povm,
        candidates=everything,
        reduction=reduction,
    )
    res = kkt_residuals(e, sol, duals)
    return UsdSolution(
        p=p,
        support=sol.support,
        phases=sol.phases,
        success_probability=P,
        failure_probability=1.0 - P,
        povm=povm,
        kkt_residuals=res,
        candidates=everything,
        reduction=reduction,
    )
