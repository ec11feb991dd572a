"""Feasible region of detection probabilities.

A probability vector ``p`` is feasible when it lies in the unit box and
the inconclusive operator ``I - sum_i p_i |dual_i><dual_i|`` is positive
semidefinite. The alternating minor expansion of the dual Gram matrix
vanishes on the boundary of that region.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ensemble import StateEnsemble
from .exceptions import IndexOutOfRange
from .reciprocal import ReciprocalSet, reciprocal_states

DEFAULT_TOL = 1e-9
MAX_EXPANSION_N = 12


@dataclass(frozen=True)
class FeasibilityReport:
    in_box: bool
    min_eigenvalue: float
    polynomial_value: float
    feasible: bool


def principal_minor(D, idx) -> complex:
    """Determinant of ``D`` restricted to rows and columns ``idx`` (0-based)."""
    D = np.asarray(D)
    idx = list(idx)
    if not idx:
        raise IndexOutOfRange("index subset must be non-empty")
    n = D.shape[0]
    if any(not 0 <= i < n for i in idx):
        raise IndexOutOfRange(f"indices {idx} out of range for a {n}x{n} matrix")
    return complex(np.linalg.det(D[np.ix_(idx, idx)]))


def _subsets_binary(n):
    """Non-empty subsets of range(n) ordered by binary counting."""
    for mask in range(1, 1 << n):
        yield [i for i in range(n) if mask >> i & 1]


def minor_expansion(D, p) -> complex:
    """``1 - sum D_i p_i + sum D_ij p_i p_j - ...`` over all index subsets."""
    D = np.asarray(D)
    p = np.asarray(p, dtype=np.float64)
    total = 1.0 + 0.0j
    for sub in _subsets_binary(len(p)):
        weight = np.prod(p[sub])
        if weight == 0.0:
            continue
        sign = -1.0 if len(sub) % 2 else 1.0
        total += sign * weight * np.linalg.det(D[np.ix_(sub, sub)])
    return total


def ray_polynomial(D, direction) -> np.ndarray:
    """Coefficients (highest degree first) of ``t -> polynomial(D, t * direction)``.

    Each subset ``S`` contributes ``(-1)^|S| prod(u_S) det(D_S)`` to the
    coefficient of ``t^|S|``, so the minors are computed once per ray.
    """
    D = np.asarray(D)
    u = np.asarray(direction, dtype=np.float64)
    coeffs = np.zeros(len(u) + 1, dtype=np.complex128)
    coeffs[0] = 1.0
    for sub in _subsets_binary(len(u)):
        sign = -1.0 if len(sub) % 2 else 1.0
        coeffs[len(sub)] += sign * np.prod(u[sub]) * np.linalg.det(D[np.ix_(sub, sub)])
    return coeffs[::-1].real


def feasibility_polynomial(D, p) -> float:
    """Boundary polynomial of the feasible region at ``p``.

    Uses the minor expansion for ``N <= 12`` and ``det(I - diag(p) D)``
    beyond that; the two agree identically.
    """
    D = np.asarray(D)
    p = np.asarray(p, dtype=np.float64).reshape(-1)
    if len(p) <= MAX_EXPANSION_N:
        value = minor_expansion(D, p)
    else:
        value = np.linalg.det(np.eye(len(p)) - p[:, None] * D)
    scale = max(1.0, float(np.sum(np.abs(D))) ** len(p))
    if abs(value.imag) > 1e-10 * scale:
        raise ArithmeticError(f"boundary polynomial has imaginary part {value.imag:.3e}")
    return float(value.real)


def inconclusive_operator(duals: ReciprocalSet, p) -> np.ndarray:
    v = duals.dual_states
    p = np.asarray(p, dtype=np.float64)
    op = np.eye(v.shape[0]) - (v * p) @ v.conj().T
    return 0.5 * (op + op.conj().T)


def min_eigenvalues(duals: ReciprocalSet, points) -> np.ndarray:
    """Smallest eigenvalue of the inconclusive operator at each row of ``points``."""
    v = duals.dual_states
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    ops = np.eye(v.shape[0]) - np.einsum("ai,mi,bi->mab", v, points, v.conj())
    ops = 0.5 * (ops + np.conj(np.swapaxes(ops, -1, -2)))
    return np.linalg.eigvalsh(ops)[:, 0]


def min_eigenvalue(duals: ReciprocalSet, p) -> float:
    return float(np.linalg.eigvalsh(inconclusive_operator(duals, p))[0])


def feasibility_check(
    e: StateEnsemble,
    p,
    tol: float = DEFAULT_TOL,
    duals: ReciprocalSet | None = None,
) -> FeasibilityReport:
    if duals is None:
        duals = reciprocal_states(e)
    p = np.asarray(p, dtype=np.float64).reshape(-1)
    in_box = bool(np.all(p >= 0) and np.all(p <= 1))
    lam = min_eigenvalue(duals, p)
    D = duals.dual_states.conj().T @ duals.dual_states
    poly = feasibility_polynomial(D, p)
    return FeasibilityReport(
        in_box=in_box,
        min_eigenvalue=lam,
        polynomial_value=poly,
        feasible=in_box and lam >= -tol,
    )


def boundary_points(e: StateEnsemble, directions, tol: float = DEFAULT_TOL, duals=None):
    """Walk from the origin along each direction to the edge of the feasible region.

    Returns ``(points, poly_values)``. Each point is the last feasible
    point on the ray, located by bisection on the eigenvalue test; rays
    that leave the unit box first stop at the box face.
    """
    if duals is None:
        duals = reciprocal_states(e)
    D = duals.dual_states.conj().T @ duals.dual_states
    points, values = [], []
    for u in np.atleast_2d(np.asarray(directions, dtype=np.float64)):
        hi = 1.0 / np.max(u)
        if min_eigenvalue(duals, hi * u) >= -tol:
            t = hi
        else:
            lo = 0.0
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if min_eigenvalue(duals, mid * u) >= -tol:
                    lo = mid
                else:
                    hi = mid
                if hi - lo < 1e-14:
                    break
            t = lo
        points.append(t * u)
        values.append(feasibility_polynomial(D, t * u))
    return np.array(points), np.array(values)


def boundary_directions(n: int, samples: int, seed: int = 0) -> np.ndarray:
    """Deterministic unit directions in the non-negative orthant."""
    if n == 1:
        return np.ones((1, 1))
    if n == 2:
        theta = np.linspace(0.0, 0.5 * np.pi, samples)
        return np.column_stack([np.cos(theta), np.sin(theta)])
    rng = np.random.default_rng(seed)
    u = np.abs(rng.standard_normal((samples, n)))
    return u / np.linalg.norm(u, axis=1, keepdims=True)

