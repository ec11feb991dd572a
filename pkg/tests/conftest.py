import numpy as np
import pytest

from opusd.ensemble import StateEnsemble, validate_ensemble


def two_states(s, priors=(0.5, 0.5)):
    """|psi_1> = (1, 0), |psi_2> = (s, sqrt(1 - s^2))."""
    phi = np.array([[1.0, s], [0.0, np.sqrt(1.0 - s * s)]])
    return validate_ensemble(StateEnsemble(phi, np.array(priors, dtype=float)))


def equiangular(s, n=3, priors=None):
    """Real states with all pairwise overlaps equal to ``s``."""
    gram = (1.0 - s) * np.eye(n) + s * np.ones((n, n))
    phi = np.linalg.cholesky(gram).T
    if priors is None:
        priors = np.full(n, 1.0 / n)
    return validate_ensemble(StateEnsemble(phi, np.asarray(priors, dtype=float)))


def orthonormal(n, d=None):
    d = d or n
    return validate_ensemble(StateEnsemble(np.eye(d)[:, :n], np.full(n, 1.0 / n)))


def random_ensemble(rng, n, d, complex_=True, min_prior=0.0):
    phi = rng.standard_normal((d, n))
    if complex_:
        phi = phi + 1j * rng.standard_normal((d, n))
    phi /= np.linalg.norm(phi, axis=0)
    w = rng.dirichlet(np.ones(n))
    priors = min_prior + (1.0 - n * min_prior) * w
    return validate_ensemble(StateEnsemble(phi, priors / priors.sum()))


def random_unitary(rng, d):
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


_ACCEPTANCE_LINES = []


def record_criterion(name, passed, detail=""):
    _ACCEPTANCE_LINES.append(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}".rstrip())


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
