"""Reciprocal states, the dual Gram matrix and zero-error POVMs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ensemble import StateEnsemble, gram_matrix
from .exceptions import CrossCheckError, IllConditioned, ProbabilityOutOfRange

COND_LIMIT = 1e12
CROSS_TOL = 1e-9


def pseudoinverse(m, rcond: float = 1e-13) -> np.ndarray:
    """Moore-Penrose pseudoinverse through the SVD.

    Singular values below ``rcond * s_max`` are treated as zero.
    """
    m = np.asarray(m)
    if m.size == 0:
        return np.zeros(m.shape[::-1], dtype=m.dtype)
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    cutoff = rcond * (s[0] if s.size else 0.0)
    inv = np.zeros_like(s)
    keep = s > cutoff
    inv[keep] = 1.0 / s[keep]
    return (vh.conj().T * inv) @ u.conj().T


@dataclass(frozen=True, eq=False)
class ReciprocalSet:
    """Columns of ``dual_states`` (shape ``(d, N)``) are the reciprocal states."""

    dual_states: np.ndarray
    condition_number: float = 1.0

    @property
    def n_states(self) -> int:
        return self.dual_states.shape[1]


def reciprocal_states(e: StateEnsemble) -> ReciprocalSet:
    """Reciprocal states ``Phi (Phi^* Phi)^{-1}``, biorthogonal to the states.

    The product is evaluated with a linear solve against the Gram matrix.
    The pseudoinverse route ``(Phi Phi^*)^+ Phi`` is computed as a
    cross-check; the tolerance scales with the Gram condition number.
    """
    phi = e.states
    gram = gram_matrix(e)
    cond = float(np.linalg.cond(gram))
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise IllConditioned(f"Gram matrix condition number {cond:.3e} exceeds {COND_LIMIT:.0e}")

    # Phi G^{-1} = (G^{-1} Phi^*)^*, G Hermitian
    duals = np.linalg.solve(gram, phi.conj().T).conj().T

    check = pseudoinverse(phi @ phi.conj().T) @ phi
    err = float(np.max(np.abs(duals - check)))
    if err > CROSS_TOL * max(1.0, cond):
        raise CrossCheckError(
            f"reciprocal states disagree between solve and pseudoinverse routes by {err:.3e}"
        )
    return ReciprocalSet(duals, cond)


def dual_gram(r: ReciprocalSet) -> np.ndarray:
    """Overlaps of the reciprocal states; equals the inverse Gram matrix."""
    return r.dual_states.conj().T @ r.dual_states


@dataclass(frozen=True, eq=False)
class PovmSet:
    """Zero-error POVM: ``conclusive[i] = p_i |dual_i><dual_i|`` plus the
    inconclusive element ``I - sum(conclusive)``."""

    conclusive: np.ndarray
    inconclusive: np.ndarray
    probabilities: np.ndarray

    @property
    def elements(self) -> list:
        """All outcomes, inconclusive first (outcome 0)."""
        return [self.inconclusive, *self.conclusive]

    def completeness_error(self) -> float:
        total = self.inconclusive + self.conclusive.sum(axis=0)
        return float(np.max(np.abs(total - np.eye(total.shape[0]))))

    def outcome_probabilities(self, states) -> np.ndarray:
        """``<psi|Pi_k|psi>`` for each column ``psi`` of ``states``.

        Returns shape ``(n_columns, N + 1)`` with the inconclusive outcome
        in column 0.
        """
        states = np.asarray(states, dtype=np.complex128)
        ops = np.concatenate([self.inconclusive[None], self.conclusive])
        vals = np.einsum("ai,kab,bi->ik", states.conj(), ops, states)
        return vals.real


def povm_from_probabilities(e: StateEnsemble, p, duals: ReciprocalSet | None = None) -> PovmSet:
    p = np.asarray(p, dtype=np.float64).reshape(-1)
    if p.shape[0] != e.n_states:
        raise ProbabilityOutOfRange(f"expected {e.n_states} probabilities, got {p.shape[0]}")
    if not np.all(np.isfinite(p)) or np.any(p < 0) or np.any(p > 1):
        raise ProbabilityOutOfRange(f"detection probabilities must lie in [0, 1], got {p}")
    if duals is None:
        duals = reciprocal_states(e)
    v = duals.dual_states
    conclusive = np.einsum("i,ai,bi->iab", p, v, v.conj())
    inconclusive = np.eye(e.dim) - conclusive.sum(axis=0)
    inconclusive = 0.5 * (inconclusive + inconclusive.conj().T)
    return PovmSet(conclusive, inconclusive, p.copy())
