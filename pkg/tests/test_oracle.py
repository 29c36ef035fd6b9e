import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from planchette.board import BoardLayout, Grid, default_board, toy_board
from planchette.corpus import BOS, EOS
from planchette.dynamics import DynamicsConfig
from planchette.energy import EnergyContext, PotentialParams, energy_field
from planchette.oracle import (
    CharDistribution,
    boltzmann,
    char_mass_oracle,
    coarsen,
    empirical_histogram,
    field_csv,
    gibbs_oracle,
    histogram_csv,
    poe_char_check,
    product_of_experts,
    selection_frequencies,
    total_variation,
)

BOARD = default_board()
K = len(BOARD)


def point_mass(symbol, board=BOARD):
    d = np.zeros(len(board))
    d[board.index(symbol)] = 1.0
    return d


@pytest.fixture(scope="module")
def mixed_ctx():
    rng = np.random.default_rng(0)
    return EnergyContext(BOARD, rng.dirichlet(np.full(K, 0.5), size=2))


def symmetric_board():
    return BoardLayout((BOS, "a", EOS), [(0.0, 1.0), (-1.0, 0.0), (1.0, 0.0)], (-2.0, 2.0, -1.0, 2.0))


def test_constant_landscape_is_uniform():
    p = boltzmann(np.full((30, 20), 3.7), 0.2)
    assert np.allclose(p, 1 / 600, atol=1e-12, rtol=0)


def test_boltzmann_survives_huge_energies():
    p = boltzmann(np.array([1e6, 1e6 + 0.1]), 0.01)
    assert np.isfinite(p).all() and p.sum() == pytest.approx(1.0)
    with pytest.raises(ValueError):
        boltzmann([1.0, 2.0], 0.0)


def test_symmetric_goals_give_mirror_field():
    board = symmetric_board()
    ctx = EnergyContext(board, [[0.0, 0.5, 0.5]])
    field = gibbs_oracle(ctx, 0.2, 0.02)
    probs = field.cell_probs
    assert np.allclose(probs, probs[::-1, :], atol=1e-12)
    nx = probs.shape[0]
    assert probs[: nx // 2].sum() == pytest.approx(0.5, abs=1e-9)


def test_phi0_cancels(mixed_ctx):
    shifted = EnergyContext(BOARD, mixed_ctx.dists, PotentialParams(phi0=2.5))
    a = gibbs_oracle(mixed_ctx, 0.2, 0.05).cell_probs
    b = gibbs_oracle(shifted, 0.2, 0.05).cell_probs
    assert np.allclose(a, b, atol=1e-12, rtol=0)


def test_oracle_is_normalized(mixed_ctx):
    field = gibbs_oracle(mixed_ctx, 0.2)
    assert field.cell_probs.shape == (400, 250)
    assert (field.cell_probs >= 0).all()
    assert abs(field.cell_probs.sum() - 1.0) < 1e-9


@pytest.mark.parametrize("step", [0.0, -0.1, 0.6])
def test_oracle_rejects_bad_grid(mixed_ctx, step):
    with pytest.raises(ValueError):
        gibbs_oracle(mixed_ctx, 0.2, step)


def test_higher_temperature_flattens(mixed_ctx):
    cold = gibbs_oracle(mixed_ctx, 0.2, 0.05)
    hot = gibbs_oracle(mixed_ctx, 0.8, 0.05)
    assert hot.entropy() > cold.entropy()


def test_energy_and_temperature_scaling_cancel(mixed_ctx):
    # two copies of the same agents double the energy; doubling T restores the field
    doubled = EnergyContext(BOARD, np.vstack([mixed_ctx.dists, mixed_ctx.dists]))
    a = gibbs_oracle(mixed_ctx, 0.2, 0.05).cell_probs
    b = gibbs_oracle(doubled, 0.4, 0.05).cell_probs
    assert np.allclose(a, b, atol=1e-12, rtol=0)


@pytest.mark.parametrize(
    "a, b, expected",
    [([0.6, 0.4], [0.5, 0.5], 0.1), ([1.0, 0.0], [0.0, 1.0], 1.0), ([0.3, 0.7], [0.3, 0.7], 0.0)],
)
def test_total_variation_examples(a, b, expected):
    assert total_variation(a, b) == pytest.approx(expected, abs=1e-12)


def test_total_variation_errors():
    with pytest.raises(ValueError, match="shape"):
        total_variation([1.0], [0.5, 0.5])
    with pytest.raises(ValueError, match="normalized"):
        total_variation([0.6, 0.6], [0.5, 0.5])


@given(st.lists(st.floats(0.01, 10), min_size=2, max_size=8), st.integers(0, 1000))
@settings(max_examples=50)
def test_total_variation_bounds(raw, seed):
    a = np.array(raw) / sum(raw)
    b = np.random.default_rng(seed).permutation(a)
    tv = total_variation(a, b)
    assert 0.0 <= tv <= 1.0
    assert tv == pytest.approx(total_variation(b, a))


def test_point_mass_char_mass():
    ctx = EnergyContext(BOARD, [point_mass("a"), point_mass("a")])
    mass = char_mass_oracle(ctx, 0.05)
    assert mass["a"] > 0.99
    single = char_mass_oracle(EnergyContext(BOARD, [point_mass("a")]), 0.05)
    assert np.argmax(single.probs) == np.argmax(mass.probs) == BOARD.index("a")


def test_symmetric_char_mass():
    board = symmetric_board()
    mass = char_mass_oracle(EnergyContext(board, [[0.0, 0.5, 0.5]]), 0.2).without(BOS)
    assert mass["a"] == pytest.approx(0.5, abs=0.01)
    assert mass[EOS] == pytest.approx(0.5, abs=0.01)


def test_char_mass_grid_refinement(mixed_ctx):
    coarse = char_mass_oracle(mixed_ctx, 0.2, 0.04)
    fine = char_mass_oracle(mixed_ctx, 0.2, 0.02)
    assert np.abs(coarse.probs - fine.probs).max() < 0.01


def test_char_distribution_checks():
    with pytest.raises(ValueError):
        CharDistribution(("a", "b"), [0.7, 0.7])
    d = CharDistribution((BOS, "a", "b"), [0.5, 0.25, 0.25])
    assert d.without().as_dict() == {"a": 0.5, "b": 0.5}


def test_coarsen_preserves_mass(mixed_ctx):
    fine = gibbs_oracle(mixed_ctx, 0.2, 0.02)
    grid = Grid(BOARD.bounds, 0.1)
    coarse = coarsen(fine, grid)
    assert coarse.shape == (80, 50)
    assert np.allclose(coarse, fine.cell_probs.reshape(80, 5, 50, 5).sum(axis=(1, 3)), atol=1e-14)


def test_histogram_counts_and_point_mass():
    ctx = EnergyContext(BOARD, [point_mass("g")])
    counts = empirical_histogram(ctx, [0.0], DynamicsConfig(), 3000, burn_in=1000, grid_step=0.1)
    assert counts.sum() == 2000
    assert (counts > 0).sum() == 1
    with pytest.raises(ValueError):
        empirical_histogram(ctx, [0.0], DynamicsConfig(), 100, burn_in=100)


def _single_goal_tv(eta, n_agents=2, temperature=0.2):
    board = toy_board({BOS: (0.0, 0.0), EOS: (4.0, 2.0)}, margin=1.5)
    ctx = EnergyContext(board, [[0.0, 1.0]] * n_agents)
    noise = [temperature * eta / n_agents] * n_agents
    counts = empirical_histogram(ctx, noise, DynamicsConfig(eta=eta), 200_000, burn_in=10_000, seed=0)
    target = coarsen(gibbs_oracle(ctx, temperature, 0.02), Grid(board.bounds, 0.1))
    return total_variation(counts / counts.sum(), target)


def test_single_goal_stationarity():
    # a lone Cauchy well has curvature N / r0**2 at its goal, so the step must be
    # well below r0**2 / N for the discretized chain to follow the Gibbs law
    assert _single_goal_tv(eta=0.01) <= 0.05


def test_step_size_bias_on_sharp_well():
    assert _single_goal_tv(eta=0.1) > 2 * _single_goal_tv(eta=0.01)


@pytest.mark.slow
def test_long_chain_converges_on_default_board():
    # the desk-scale run sits at the Monte Carlo noise floor; a 20x longer chain halves the error
    from planchette.corpus import default_vocabulary, train_weighted
    from planchette.harness import build_agent_corpora

    vocab = default_vocabulary()
    dists = [train_weighted(build_agent_corpora(vocab, s)).next_char_dist([]) for s in ("colorful", "reverse")]
    ctx = EnergyContext(BOARD, dists)
    counts = empirical_histogram(ctx, [0.01, 0.01], DynamicsConfig(), 4_000_000, burn_in=10_000, seed=0)
    target = coarsen(gibbs_oracle(ctx, 0.2, 0.02), Grid(BOARD.bounds, 0.1))
    assert total_variation(counts / counts.sum(), target) <= 0.025


def test_product_of_experts_examples():
    a = CharDistribution(("a", "b"), [0.8, 0.2])
    b = CharDistribution(("a", "b"), [0.2, 0.8])
    assert np.allclose(product_of_experts([a, b], [0.5, 0.5]).probs, [0.5, 0.5])
    assert np.allclose(product_of_experts([a, a], [0.5, 0.5]).probs, a.probs)
    assert np.allclose(product_of_experts([a], [1.0]).probs, a.probs)


def test_product_of_experts_drops_dead_symbols():
    a = CharDistribution(("a", "b", "c"), [0.5, 0.5, 0.0])
    b = CharDistribution(("a", "b", "c"), [0.25, 0.75, 0.0])
    with pytest.warns(UserWarning, match="zero mass"):
        poe = product_of_experts([a, b], [0.5, 0.5])
    assert poe.symbols == ("a", "b")


def test_poe_check_single_agent_is_zero():
    a = CharDistribution(("a", "b"), [0.3, 0.7])
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert poe_char_check([a], [1.0], a) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError, match="sum to 1"):
        poe_char_check([a, a], [0.5, 0.6], a)


def test_selection_frequencies_point_mass():
    ctx = EnergyContext(BOARD, [point_mass("z")])
    cfg = DynamicsConfig(t_max_inner=400)
    freq = selection_frequencies(ctx, [0.001], cfg, 20, seed=0)
    assert freq["z"] == 1.0


def test_field_csv_schema(mixed_ctx):
    field = gibbs_oracle(mixed_ctx, 0.2, 0.5)
    lines = field_csv(field, mixed_ctx).splitlines()
    assert lines[0] == "x,y,E_fused,prob"
    assert len(lines) == 1 + 16 * 10
    x, y, e, p = map(float, lines[1].split(","))
    assert (x, y) == (-0.75, -0.75)
    assert e == pytest.approx(float(energy_field(mixed_ctx, field.grid)[0, 0]))
    counts = np.ones(field.grid.shape)
    assert histogram_csv(counts, field.grid, mixed_ctx).splitlines()[0] == "x,y,E_fused,prob"
