import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from planchette.board import BoardLayout, default_board
from planchette.energy import (
    EnergyContext,
    PotentialParams,
    effective_energy,
    effective_gradient,
    elemental_energy,
    elemental_gradient,
    fused_energy,
    fused_gradient,
    gradient_norm_bound,
    phi_cauchy,
)

BOARD = default_board()
K = len(BOARD)


def random_dists(rng, n):
    return rng.dirichlet(np.full(K, 0.3), size=n)


def point_mass(symbol):
    d = np.zeros(K)
    d[BOARD.index(symbol)] = 1.0
    return d


@pytest.mark.parametrize(
    "r, r0, expected",
    [(0.0, 0.3, 0.0), (0.3, 0.3, 0.5 * math.log(2)), (3.0, 0.3, 0.5 * math.log(101))],
)
def test_phi_cauchy_values(r, r0, expected):
    assert phi_cauchy(r, r0) == pytest.approx(expected, abs=1e-12)


def test_phi_cauchy_documented_decimals():
    assert round(float(phi_cauchy(0.3, 0.3)), 5) == 0.34657
    assert round(float(phi_cauchy(3.0, 0.3)), 5) == 2.30756


def test_phi_is_monotone():
    r = np.linspace(0, 10, 1001)
    assert (np.diff(phi_cauchy(r, 0.3)) > 0).all()


def test_params_validation():
    with pytest.raises(ValueError):
        PotentialParams(r0=0.0)


def test_elemental_minimum_and_offset():
    g = (2.0, 1.0)
    assert elemental_energy(g, g) == 0.0
    shifted = PotentialParams(phi0=5.0)
    p = np.array([2.7, 0.4])
    assert elemental_energy(p, g, shifted) == pytest.approx(elemental_energy(p, g) + 5.0, abs=1e-12)
    assert np.array_equal(elemental_gradient(p, g, shifted), elemental_gradient(p, g))


def test_elemental_gradient_example():
    grad = elemental_gradient((0.3, 0.0), (0.0, 0.0))
    assert grad == pytest.approx([0.3 / 0.18, 0.0])


def test_effective_energy_of_point_mass():
    p = np.array([1.3, 2.2])
    assert effective_energy(p, point_mass("k"), BOARD) == pytest.approx(elemental_energy(p, BOARD.goal("k")))


def test_effective_energy_symmetric_midpoint():
    d = (point_mass("a") + point_mass("b")) / 2
    assert effective_energy((0.5, 0.0), d, BOARD) == pytest.approx(phi_cauchy(0.5, 0.3), abs=1e-12)


def test_effective_energy_is_linear_in_dist():
    rng = np.random.default_rng(3)
    d1, d2 = random_dists(rng, 2)
    p = rng.uniform(-1, 4, size=(50, 2))
    mix = effective_energy(p, 0.5 * d1 + 0.5 * d2, BOARD)
    mean = 0.5 * effective_energy(p, d1, BOARD) + 0.5 * effective_energy(p, d2, BOARD)
    assert np.allclose(mix, mean, atol=1e-12)


def test_fused_energy_is_exact_sum_of_agents():
    rng = np.random.default_rng(4)
    dists = random_dists(rng, 3)
    ctx = EnergyContext(BOARD, dists)
    p = rng.uniform(-1, 4, size=(100, 2))
    total = effective_energy(p, dists[0], BOARD)
    for d in dists[1:]:
        total = total + effective_energy(p, d, BOARD)
    assert np.array_equal(fused_energy(p, ctx), total)
    grad = sum(effective_gradient(p, d, BOARD) for d in dists)
    assert np.allclose(fused_gradient(p, ctx), grad, atol=1e-12, rtol=0)


def test_identical_agents_double_the_energy():
    d = random_dists(np.random.default_rng(5), 1)[0]
    p = np.array([[0.2, 3.1], [5.5, 1.5]])
    one = fused_energy(p, EnergyContext(BOARD, [d]))
    two = fused_energy(p, EnergyContext(BOARD, [d, d]))
    assert np.allclose(two, 2 * one, atol=1e-12)


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(0)
    ctx = EnergyContext(BOARD, random_dists(rng, 2))
    p = np.column_stack([rng.uniform(-1, 7, 1000), rng.uniform(-1, 4, 1000)])
    h = 1e-5
    fd = np.empty_like(p)
    for k in range(2):
        e = np.zeros(2)
        e[k] = h
        fd[:, k] = (fused_energy(p + e, ctx) - fused_energy(p - e, ctx)) / (2 * h)
    err = np.linalg.norm(fused_gradient(p, ctx) - fd, axis=1) / (1 + np.linalg.norm(fd, axis=1))
    assert err.max() < 1e-6


@given(
    st.floats(-5, 5), st.floats(-5, 5),
    st.floats(-1, 7), st.floats(-1, 4),
    st.integers(0, 2**32 - 1),
)
@settings(max_examples=50, deadline=None)
def test_translation_invariance(dx, dy, x, y, seed):
    dists = random_dists(np.random.default_rng(seed), 2)
    x0, x1, y0, y1 = BOARD.bounds
    moved = BoardLayout(BOARD.symbols, BOARD.goals + (dx, dy), (x0 + dx, x1 + dx, y0 + dy, y1 + dy))
    a = EnergyContext(BOARD, dists)
    b = EnergyContext(moved, dists)
    p = np.array([x, y])
    assert fused_energy(p + (dx, dy), b) == pytest.approx(fused_energy(p, a), abs=1e-12)
    assert np.allclose(fused_gradient(p + (dx, dy), b), fused_gradient(p, a), atol=1e-12)


@given(st.floats(-50, 50), st.floats(-50, 50), st.floats(0.05, 3.0))
def test_force_bound(x, y, r0):
    params = PotentialParams(r0)
    assert np.linalg.norm(elemental_gradient((x, y), (0.0, 0.0), params)) <= 1 / (2 * r0) + 1e-12


def test_fused_force_bound_on_grid():
    rng = np.random.default_rng(9)
    ctx = EnergyContext(BOARD, random_dists(rng, 4))
    p = rng.uniform(-1, 7, size=(5000, 2))
    assert np.linalg.norm(fused_gradient(p, ctx), axis=1).max() <= gradient_norm_bound(ctx)
    assert gradient_norm_bound(ctx) == pytest.approx(4 / 0.6)


@pytest.mark.parametrize(
    "dists",
    [np.full((1, K), 0.5), -point_mass("a")[None], np.ones((1, 3)) / 3],
)
def test_context_validation(dists):
    with pytest.raises(ValueError):
        EnergyContext(BOARD, dists)
