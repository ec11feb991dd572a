"""Semidefinite-program view of the discrimination problem, for verification.

The problem is stored in standard form: minimize ``c^T p`` with
``c = -eta`` subject to ``F(p) = F0 + sum_i p_i F_i >= 0``. ``F(p)`` is
block diagonal with the inconclusive operator in the top-left ``d x d``
block and ``diag(p)`` in the bottom-right ``N x N`` block.

Nothing here solves the SDP. The dual certificate comes from the KKT
solution (``X = v v^*`` and the slacks ``z``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ensemble import StateEnsemble
from .kkt import dual_vector
from .reciprocal import ReciprocalSet, reciprocal_states


@dataclass(frozen=True, eq=False)
class SdpData:
    F0: np.ndarray
    F: np.ndarray
    c: np.ndarray

    @property
    def size(self) -> int:
        return self.F0.shape[0]

    def evaluate(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=np.float64)
        return self.F0 + np.tensordot(p, self.F, axes=1)


@dataclass(frozen=True)
class GapReport:
    primal_value: float
    dual_value: float
    gap: float
    slackness_norm: float
    product_norm: float
    primal_min_form: float
    dual_min_form: float

    def to_dict(self) -> dict:
        return {
            "primal_value": self.primal_value,
            "dual_value": self.dual_value,
            "gap": self.gap,
            "slackness_norm": self.slackness_norm,
            "product_norm": self.product_norm,
            "primal_min_form": self.primal_min_form,
            "dual_min_form": self.dual_min_form,
        }


def build_sdp_data(e: StateEnsemble, duals: ReciprocalSet | None = None) -> SdpData:
    if duals is None:
        duals = reciprocal_states(e)
    d, n = e.dim, e.n_states
    size = d + n
    F0 = np.zeros((size, size), dtype=np.complex128)
    F0[:d, :d] = np.eye(d)
    F = np.zeros((n, size, size), dtype=np.complex128)
    v = duals.dual_states
    for i in range(n):
        F[i, :d, :d] = -np.outer(v[:, i], v[:, i].conj())
        F[i, d + i, d + i] = 1.0
    return SdpData(F0, F, -e.priors.copy())


def dual_certificate(e: StateEnsemble, sol, duals: ReciprocalSet | None = None) -> np.ndarray:
    """``Z = [[X, 0], [0, diag(z)]]`` from the solution's phases and support.

    The off-diagonal block is left at zero: ``F(p)`` is block diagonal, so
    it does not enter the objective or the slackness products.
    """
    if duals is None:
        duals = reciprocal_states(e)
    d, n = e.dim, e.n_states
    v = dual_vector(duals, e.priors, sol.phases, sol.support)
    z = np.abs(duals.dual_states.conj().T @ v) ** 2 - e.priors
    Z = np.zeros((d + n, d + n), dtype=np.complex128)
    Z[:d, :d] = np.outer(v, v.conj())
    Z[d:, d:] = np.diag(z)
    return Z


def slackness_and_gap(e: StateEnsemble, sol, duals: ReciprocalSet | None = None) -> GapReport:
    if duals is None:
        duals = reciprocal_states(e)
    data = build_sdp_data(e, duals)
    Z = dual_certificate(e, sol, duals)
    Fp = data.evaluate(sol.p)

    primal_min = float(np.dot(data.c, sol.p))
    dual_min = float(-np.trace(data.F0 @ Z).real)
    gap = primal_min - dual_min
    return GapReport(
        primal_value=-primal_min,
        dual_value=-dual_min,
        gap=gap,
        slackness_norm=float(np.linalg.norm(Fp @ Z - Z @ Fp)),
        product_norm=float(np.linalg.norm(Fp @ Z)),
        primal_min_form=primal_min,
        dual_min_form=dual_min,
    )

