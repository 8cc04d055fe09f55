import math

import numpy as np
import pytest

from dynbiharm.evolution import propagate_coefficients
from dynbiharm.grid import EvaluationGrid
from dynbiharm.spectral import mode_eigenvector_state


def test_grid_shape(small_disc):
    grid = EvaluationGrid(small_disc, n_theta=10, refine=3)
    assert grid.shape == (3 * 16 + 1, 10)
    assert grid.r[0] == 1.0 and grid.r[-1] == 2.0
    fine = grid.refined()
    assert fine.shape == (6 * 16 + 1, 20)
    with pytest.raises(ValueError):
        EvaluationGrid(small_disc, n_theta=0)


def test_constant_evaluates_to_one(small_disc):
    bulk, surf = EvaluationGrid(small_disc, n_theta=12).values(small_disc.ones())
    assert np.allclose(bulk, 1.0, atol=1e-14) and np.allclose(surf, 1.0, atol=1e-14)


def test_angular_synthesis_and_surface_values(small_disc):
    u = small_disc.zeros()
    n_b = small_disc.layout.n_bulk
    u.coeffs[2, 1, n_b] = 3.0  # inner circle: 3 sin(2 theta)
    u.coeffs[1, 0, n_b + 1] = -2.0  # outer circle: -2 cos(theta)
    grid = EvaluationGrid(small_disc, n_theta=16, refine=1)
    _, surf = grid.values(u)
    assert np.allclose(surf[0], 3 * np.sin(2 * grid.theta))
    assert np.allclose(surf[1], -2 * np.cos(grid.theta))
    low = grid.minimum(u)
    assert low.where == "inner" and low.value == pytest.approx(-3.0) and low.theta == pytest.approx(3 * math.pi / 4)
    assert grid.maximum(u).value == pytest.approx(3.0)
    assert grid.sup_norm(u) == pytest.approx(3.0)


def test_modal_extrema_match_direct_evaluation(small_dec):
    disc = small_dec.disc
    grid = EvaluationGrid(disc, n_theta=24, refine=2)
    rng = np.random.default_rng(4)
    u = disc.zeros()
    u.coeffs[:3] = rng.standard_normal(u.coeffs[:3].shape)
    u.coeffs[0, 1] = 0.0
    times = np.array([0.0, 1e-3, 0.1, 2.0])
    mins, maxs = grid.modal_extrema(small_dec, small_dec.coefficients(u), times, chunk=3)
    states = propagate_coefficients(small_dec, u, times)
    for i in range(times.size):
        bulk, surf = grid.values_from_coeffs(states[i])
        assert mins[i] == pytest.approx(min(bulk.min(), surf.min()), abs=1e-10)
        assert maxs[i] == pytest.approx(max(bulk.max(), surf.max()), abs=1e-10)


def test_eigenfunction_angular_dependence(small_dec):
    entry = next(e for e in small_dec.entries if e.m == 3 and e.branch == "sin")
    u = mode_eigenvector_state(small_dec, entry)
    grid = EvaluationGrid(small_dec.disc, n_theta=12, refine=1)
    bulk, _ = grid.values(u)
    i = np.argmax(np.abs(bulk[:, 1]))
    assert np.allclose(bulk[i], bulk[i, 1] / math.sin(3 * grid.theta[1]) * np.sin(3 * grid.theta), atol=1e-12)
