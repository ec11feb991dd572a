import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opusd.exceptions import IndexOutOfRange
from opusd.feasible import (
    boundary_directions,
    boundary_points,
    feasibility_check,
    feasibility_polynomial,
    minor_expansion,
    min_eigenvalue,
    principal_minor,
    ray_polynomial,
)
from opusd.reciprocal import dual_gram, reciprocal_states

from conftest import orthonormal, random_ensemble, two_states

D_HALF = np.array([[1.0, -0.5], [-0.5, 1.0]]) / 0.75


def test_principal_minor_examples():
    assert principal_minor(np.eye(3), [0, 2]) == pytest.approx(1.0)
    assert principal_minor(D_HALF, [0, 1]) == pytest.approx(4.0 / 3.0)
    d = np.array([[2.0, 0.3], [0.3, 5.0]])
    assert principal_minor(d, [1]) == pytest.approx(5.0)
    with pytest.raises(IndexOutOfRange):
        principal_minor(d, [2])
    with pytest.raises(IndexOutOfRange):
        principal_minor(d, [])


def test_polynomial_examples():
    assert feasibility_polynomial(np.array([[1.7]]), [0.4]) == pytest.approx(1 - 0.4 * 1.7)
    assert feasibility_polynomial(np.eye(2), [0.3, 0.6]) == pytest.approx(0.7 * 0.4)
    # 1 - (4/3)(1) + (4/3)(0.25) = 0
    assert feasibility_polynomial(D_HALF, [0.5, 0.5]) == pytest.approx(0.0, abs=1e-14)
    assert feasibility_polynomial(D_HALF, [0.9, 0.9]) == pytest.approx(1 - 2.4 + 1.08, abs=1e-12)


def test_polynomial_beyond_expansion_cap(rng):
    e = random_ensemble(rng, 13, 14)
    d = dual_gram(reciprocal_states(e))
    p = rng.uniform(0, 0.05, 13)
    det = np.linalg.det(np.eye(13) - p[:, None] * d).real
    assert feasibility_polynomial(d, p) == pytest.approx(det, abs=1e-9)


def test_feasibility_check_examples():
    e = two_states(0.5)
    r = feasibility_check(e, [0.0, 0.0])
    assert r.feasible and r.min_eigenvalue == pytest.approx(1.0)
    r = feasibility_check(e, [0.5, 0.5])
    assert r.feasible and r.min_eigenvalue == pytest.approx(0.0, abs=1e-12)
    # oracle: eigenvalues of I - sum p_i |dual_i><dual_i| from the closed-form duals
    duals = np.array([[1.0, 0.0], [-1.0 / np.sqrt(3.0), 2.0 / np.sqrt(3.0)]])
    op = np.eye(2) - 0.5 * (np.outer(duals[:, 0], duals[:, 0]) + np.outer(duals[:, 1], duals[:, 1]))
    assert np.linalg.eigvalsh(op)[0] == pytest.approx(0.0, abs=1e-12)
    r = feasibility_check(e, [0.9, 0.9])
    assert not r.feasible and r.min_eigenvalue < 0 and r.polynomial_value == pytest.approx(-0.32)
    assert not feasibility_check(orthonormal(2), [1.1, 0.0]).in_box


@settings(max_examples=80, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 6))
def test_expansion_matches_determinant(seed, n):
    rng = np.random.default_rng(seed)
    d = dual_gram(reciprocal_states(random_ensemble(rng, n, n + 2)))
    p = rng.uniform(0, 1, n)
    det = np.linalg.det(np.eye(n) - p[:, None] * d)
    assert abs(det.imag) < 1e-10
    assert feasibility_polynomial(d, p) == pytest.approx(det.real, abs=1e-9)


@pytest.mark.parametrize("n", [7, 8])
def test_expansion_matches_determinant_larger(rng, n):
    d = dual_gram(reciprocal_states(random_ensemble(rng, n, n + 3)))
    p = rng.uniform(0, 1, n)
    det = np.linalg.det(np.eye(n) - p[:, None] * d).real
    assert minor_expansion(d, p).real == pytest.approx(det, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 4))
def test_infeasibility_is_monotone(seed, n):
    rng = np.random.default_rng(seed)
    e = random_ensemble(rng, n, n + 1)
    duals = reciprocal_states(e)
    p = rng.uniform(0, 1, n)
    q = p + rng.uniform(0, 1, n) * (1 - p)
    if min_eigenvalue(duals, p) < 0:
        assert min_eigenvalue(duals, q) <= min_eigenvalue(duals, p) + 1e-12


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 5))
def test_polynomial_sign_change_at_eigenvalue_crossing(seed, n):
    rng = np.random.default_rng(seed)
    e = random_ensemble(rng, n, n + 1)
    duals = reciprocal_states(e)
    d = dual_gram(duals)
    u = rng.uniform(0.05, 1, n)

    lo, hi = 0.0, 1.0 / np.max(u * np.diag(d).real)
    # the eigenvalue crossing lies at or below hi since lambda_max >= max u_i D_ii
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if min_eigenvalue(duals, mid * u) >= 0 else (lo, mid)
    t_eig = 0.5 * (lo + hi)

    coeffs = ray_polynomial(d, u)
    ts = np.linspace(0, 1.0 / np.max(u * np.diag(d).real), 4001)
    vals = np.polyval(coeffs, ts)
    k = int(np.argmax(vals <= 0))
    a, b = ts[k - 1], ts[k]
    for _ in range(200):
        mid = 0.5 * (a + b)
        a, b = (mid, b) if np.polyval(coeffs, mid) > 0 else (a, mid)
    assert 0.5 * (a + b) == pytest.approx(t_eig, abs=1e-7)


def test_ray_polynomial_matches_pointwise(rng):
    d = dual_gram(reciprocal_states(random_ensemble(rng, 4, 5)))
    u = rng.uniform(0, 1, 4)
    coeffs = ray_polynomial(d, u)
    for t in (0.0, 0.1, 0.37, 0.8):
        assert np.polyval(coeffs, t) == pytest.approx(feasibility_polynomial(d, t * u), abs=1e-10)


def test_boundary_points_lie_on_zero_set():
    e = two_states(0.5)
    pts, vals = boundary_points(e, boundary_directions(2, 9))
    assert np.max(np.abs(vals)) < 1e-8
    np.testing.assert_allclose(pts[4], [0.5, 0.5], atol=1e-8)
    for p in pts:
        assert feasibility_check(e, p).feasible
