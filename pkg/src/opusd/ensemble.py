"""Discrimination problem instances: states, priors and their Gram matrix."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .exceptions import (
    DimensionMismatch,
    DimensionTooSmall,
    LinearlyDependent,
    NotNormalized,
    ParseError,
    PriorsInvalid,
)

NORM_TOL = 1e-10
RENORM_TOL = 1e-6
DEPENDENCE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class StateEnsemble:
    """N pure states in C^d with prior probabilities.

    ``states`` is stored column-wise, shape ``(d, N)``: column ``i`` is
    the amplitude vector of state ``i``.
    """

    states: np.ndarray
    priors: np.ndarray

    def __post_init__(self):
        states = np.array(self.states, dtype=np.complex128)
        if states.ndim == 1:
            states = states[:, None]
        priors = np.array(self.priors, dtype=np.float64).reshape(-1)
        states.setflags(write=False)
        priors.setflags(write=False)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "priors", priors)

    @property
    def dim(self) -> int:
        return self.states.shape[0]

    @property
    def n_states(self) -> int:
        return self.states.shape[1]

    @classmethod
    def from_rows(cls, rows, priors=None) -> "StateEnsemble":
        """Build from an ``(N, d)`` array with one state per row."""
        rows = np.atleast_2d(np.asarray(rows, dtype=np.complex128))
        if priors is None:
            priors = np.full(rows.shape[0], 1.0 / rows.shape[0])
        return cls(rows.T, priors)

    def permuted(self, perm) -> "StateEnsemble":
        perm = np.asarray(perm)
        return StateEnsemble(self.states[:, perm], self.priors[perm])


def _parse_amplitude(value, where):
    if isinstance(value, bool):
        raise ParseError(f"{where}: expected number or [re, im], got {value!r}")
    if isinstance(value, (int, float)):
        z = complex(float(value), 0.0)
    elif isinstance(value, list) and len(value) == 2 and all(
        isinstance(x, (int, float)) and not isinstance(x, bool) for x in value
    ):
        z = complex(float(value[0]), float(value[1]))
    else:
        raise ParseError(f"{where}: expected number or [re, im], got {value!r}")
    if not np.isfinite(z.real) or not np.isfinite(z.imag):
        raise ParseError(f"{where}: non-finite amplitude")
    return z


def parse_ensemble(text: str) -> StateEnsemble:
    """Parse the JSON ensemble format.

    Only syntax and shape are checked here; physical validity is the job
    of :func:`validate_ensemble`.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ParseError("top level: expected a JSON object")
    for key in ("dim", "states", "priors"):
        if key not in doc:
            raise ParseError(f"missing field {key!r}")

    dim = doc["dim"]
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
        raise ParseError(f"field 'dim': expected positive integer, got {dim!r}")
    states = doc["states"]
    if not isinstance(states, list) or not states:
        raise ParseError("field 'states': expected a non-empty list of vectors")
    priors = doc["priors"]
    if not isinstance(priors, list) or len(priors) != len(states):
        raise ParseError("field 'priors': expected one prior per state")

    columns = []
    for i, vec in enumerate(states):
        if not isinstance(vec, list):
            raise ParseError(f"states[{i}]: expected a list of amplitudes")
        if len(vec) != dim:
            raise DimensionMismatch(
                f"states[{i}]: has {len(vec)} entries but dim is {dim}"
            )
        columns.append([_parse_amplitude(v, f"states[{i}][{k}]") for k, v in enumerate(vec)])

    eta = []
    for i, value in enumerate(priors):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ParseError(f"priors[{i}]: expected a real number, got {value!r}")
        if not np.isfinite(value):
            raise ParseError(f"priors[{i}]: non-finite prior")
        eta.append(float(value))

    return StateEnsemble(np.array(columns, dtype=np.complex128).T, np.array(eta))


def _fmt(x: float) -> str:
    x = float(x)
    if x == 0.0:
        return "0.0"
    return format(x, ".17g")


def dumps_ensemble(e: StateEnsemble) -> str:
    """Canonical serialization: full ``[re, im]`` pairs, 17 significant digits."""
    states = ", ".join(
        "[" + ", ".join(f"[{_fmt(z.real)}, {_fmt(z.imag)}]" for z in e.states[:, i]) + "]"
        for i in range(e.n_states)
    )
    priors = ", ".join(_fmt(p) for p in e.priors)
    return f'{{"dim": {e.dim}, "states": [{states}], "priors": [{priors}]}}'


def ensemble_to_dict(e: StateEnsemble) -> dict:
    return {
        "dim": e.dim,
        "states": [[[float(z.real), float(z.imag)] for z in e.states[:, i]] for i in range(e.n_states)],
        "priors": [float(p) for p in e.priors],
    }


def gram_matrix(e: StateEnsemble) -> np.ndarray:
    """Matrix of overlaps ``a_ij = <psi_i|psi_j>``."""
    return e.states.conj().T @ e.states


def validate_ensemble(e: StateEnsemble) -> StateEnsemble:
    """Check the physical invariants of an ensemble.

    Norms and the prior sum may be off by at most ``1e-6``; such inputs
    are renormalized exactly. Anything further off is rejected. A valid
    ensemble is returned unchanged.
    """
    n, d = e.n_states, e.dim
    if n < 1:
        raise DimensionTooSmall("ensemble has no states")
    if d < n:
        raise DimensionTooSmall(f"dimension {d} is smaller than the number of states {n}")
    if not np.all(np.isfinite(e.states)) or not np.all(np.isfinite(e.priors)):
        raise NotNormalized("non-finite amplitudes or priors")

    states, priors = e.states, e.priors
    changed = False

    norms = np.linalg.norm(states, axis=0)
    off = np.abs(norms - 1.0)
    if np.any(off > RENORM_TOL):
        bad = int(np.argmax(off))
        raise NotNormalized(f"state {bad} has norm {norms[bad]:.12g}")
    if np.any(off > NORM_TOL):
        states = states / norms
        changed = True

    if np.any(priors < 0):
        raise PriorsInvalid("priors must be non-negative")
    total = priors.sum()
    if abs(total - 1.0) > RENORM_TOL:
        raise PriorsInvalid(f"priors sum to {total:.12g}, not 1")
    if abs(total - 1.0) > NORM_TOL:
        priors = priors / total
        changed = True

    gram = states.conj().T @ states
    det = abs(np.linalg.det(gram))
    lam_min = np.linalg.eigvalsh(gram)[0]
    if det <= DEPENDENCE_TOL or lam_min <= DEPENDENCE_TOL:
        raise LinearlyDependent(
            f"states are (numerically) linearly dependent: |det Gram| = {det:.3e}, "
            f"min eigenvalue = {lam_min:.3e}"
        )

    return StateEnsemble(states, priors) if changed else e
