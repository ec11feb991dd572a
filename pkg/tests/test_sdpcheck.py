import dataclasses

import numpy as np
import pytest

from opusd.feasible import feasibility_check
from opusd.kkt import solve_optimal
from opusd.reciprocal import reciprocal_states
from opusd.sdpcheck import build_sdp_data, dual_certificate, slackness_and_gap

from conftest import orthonormal, random_ensemble, two_states


def test_block_shapes_and_structure():
    e = two_states(0.5)
    data = build_sdp_data(e)
    assert data.F0.shape == (4, 4) and data.F.shape == (2, 4, 4)
    duals = reciprocal_states(e).dual_states
    for i, f in enumerate(data.F):
        np.testing.assert_allclose(f, f.conj().T, atol=1e-15)
        np.testing.assert_allclose(f[:2, :2], -np.outer(duals[:, i], duals[:, i].conj()), atol=1e-10)
        assert f[2 + i, 2 + i] == 1
    assert np.linalg.eigvalsh(data.F0)[0] >= 0


def test_psd_examples():
    data = build_sdp_data(orthonormal(2))
    assert np.linalg.eigvalsh(data.evaluate([1.0, 1.0]))[0] >= -1e-12
    data = build_sdp_data(two_states(0.5))
    assert np.linalg.eigvalsh(data.evaluate([0.9, 0.9]))[0] < 0


def test_psd_matches_feasibility(rng):
    agree = 0
    for _ in range(100):
        n = int(rng.integers(1, 5))
        e = random_ensemble(rng, n, n + int(rng.integers(0, 3)))
        p = rng.uniform(-0.1, 1.0, n)
        data = build_sdp_data(e)
        psd = np.linalg.eigvalsh(data.evaluate(p))[0] >= -1e-8
        agree += psd == feasibility_check(e, p, 1e-8).feasible
    assert agree == 100


def test_gap_examples():
    e = two_states(0.5)
    sol = solve_optimal(e)
    rep = slackness_and_gap(e, sol)
    assert rep.primal_value == pytest.approx(0.5)
    assert abs(rep.gap) <= 1e-8 and rep.slackness_norm <= 1e-8
    assert rep.primal_min_form == pytest.approx(-0.5)

    e = orthonormal(3)
    rep = slackness_and_gap(e, solve_optimal(e))
    assert abs(rep.gap) <= 1e-12

    e = two_states(0.5)
    bad = dataclasses.replace(sol, p=np.array([0.4, 0.5]))
    rep = slackness_and_gap(e, bad)
    # dual value stays 0.5, primal drops to 0.45
    assert rep.gap == pytest.approx(0.05, abs=1e-12) and rep.gap > 1e-3


def test_weak_duality_and_gap_identity(rng):
    for _ in range(20):
        n = int(rng.integers(2, 4))
        e = random_ensemble(rng, n, n + 1, min_prior=0.05)
        sol = solve_optimal(e)
        data = build_sdp_data(e)
        Z = dual_certificate(e, sol)
        assert np.linalg.eigvalsh(Z)[0] >= -1e-10
        rep = slackness_and_gap(e, sol)
        assert rep.gap <= 1e-7 and rep.slackness_norm <= 1e-7
        for _ in range(5):
            p = rng.uniform(0, 1, n) * rng.uniform(0, 1)
            if not feasibility_check(e, p).feasible:
                continue
            trial = dataclasses.replace(sol, p=p)
            rep = slackness_and_gap(e, trial)
            assert rep.gap >= -1e-8
            assert rep.gap == pytest.approx(np.trace(data.evaluate(p) @ Z).real, abs=1e-10)
