"""Brute-force checks of the sampler against its Gibbs stationary law.

The Gibbs field is evaluated cell by cell on a regular grid over the board
bounds, so it treats the clip region as a truncated domain. The chain
clamps instead of reflecting, which is why comparisons carry a tolerance
rather than matching to machine precision.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .board import BoardLayout, Grid, voronoi_cell_mass
from .corpus import BOS
from .dynamics import DynamicsConfig, run_chain, select_from_context, spawn_streams
from .energy import EnergyContext, energy_field


@dataclass(eq=False)
class GibbsField:
    grid: Grid
    cell_probs: np.ndarray
    temperature: float

    def entropy(self) -> float:
        p = self.cell_probs[self.cell_probs > 0]
        return float(-(p * np.log(p)).sum())


@dataclass(eq=False)
class CharDistribution:
    symbols: tuple[str, ...]
    probs: np.ndarray

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=float)
        if (self.probs < 0).any() or abs(self.probs.sum() - 1.0) > 1e-9:
            raise ValueError("character distribution must be nonnegative and sum to 1")

    def __getitem__(self, symbol: str) -> float:
        return float(self.probs[self.symbols.index(symbol)])

    def as_dict(self) -> dict[str, float]:
        return {s: float(p) for s, p in zip(self.symbols, self.probs)}

    def without(self, symbol: str = BOS) -> "CharDistribution":
        """Drop ``symbol`` and renormalize the rest."""
        keep = [i for i, s in enumerate(self.symbols) if s != symbol]
        probs = self.probs[keep]
        return CharDistribution(tuple(self.symbols[i] for i in keep), probs / probs.sum())


def boltzmann(energies, temperature: float) -> np.ndarray:
    """Normalized ``exp(-E / T)`` over an array of cell energies."""
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    energies = np.asarray(energies, dtype=float)
    w = np.exp(-(energies - energies.min()) / temperature)
    return w / w.sum()


def gibbs_oracle(ctx: EnergyContext, temperature: float, grid_step: float = 0.02) -> GibbsField:
    """Grid-discretized Gibbs density of the fused energy at ``temperature``."""
    x0, x1, y0, y1 = ctx.board.bounds
    if grid_step <= 0 or grid_step > min(x1 - x0, y1 - y0) / 10:
        raise ValueError("grid_step must be positive and at most a tenth of the smaller board extent")
    grid = Grid(ctx.board.bounds, grid_step)
    return GibbsField(grid, boltzmann(energy_field(ctx, grid), temperature), temperature)


def coarsen(field: GibbsField, grid: Grid) -> np.ndarray:
    """Re-bin a fine Gibbs field onto a coarser ``grid`` by summing cell mass."""
    centers = field.grid.centers.reshape(-1, 2)
    mass, _, _ = np.histogram2d(centers[:, 0], centers[:, 1], bins=grid.edges, weights=field.cell_probs.ravel())
    return mass / mass.sum()


def empirical_histogram(ctx: EnergyContext, noise_d: Sequence[float], cfg: DynamicsConfig, steps: int,
                        burn_in: int = 0, grid_step: float = 0.1, start=None, seed: int | None = None) -> np.ndarray:
    """Visit counts of a fixed-context chain, burn-in discarded.

    Counts cover ``x(burn_in + 1) .. x(steps)`` and total ``steps - burn_in``.
    """
    if not steps > burn_in >= 0:
        raise ValueError("need steps > burn_in >= 0")
    rngs, goal_rng = spawn_streams(cfg.seed if seed is None else seed, ctx.n_agents)
    x0 = ctx.board.goal(BOS) if start is None else start
    positions = run_chain(ctx, noise_d, x0, steps, cfg, rngs, goal_rng)
    return Grid(ctx.board.bounds, grid_step).histogram(positions[burn_in + 1:])


def total_variation(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if abs(a.sum() - 1.0) > 1e-6 or abs(b.sum() - 1.0) > 1e-6:
        raise ValueError("both inputs must be normalized")
    return 0.5 * float(np.abs(a - b).sum())


def char_mass_oracle(ctx: EnergyContext, temperature: float, grid_step: float = 0.02) -> CharDistribution:
    """Gibbs mass in each symbol's Voronoi cell, BOS included.

    Use ``.without(BOS)`` for comparisons against selection frequencies.
    """
    field = gibbs_oracle(ctx, temperature, grid_step)
    mass = voronoi_cell_mass(ctx.board, field.cell_probs, field.grid)
    probs = np.array([mass[s] for s in ctx.board.symbols])
    return CharDistribution(ctx.board.symbols, probs / probs.sum())


def selection_frequencies(ctx: EnergyContext, noise_d: Sequence[float], cfg: DynamicsConfig,
                          n_selections: int, seed: int | None = None) -> CharDistribution:
    """Empirical symbol frequencies over repeated inner loops on one context."""
    rngs, goal_rng = spawn_streams(cfg.seed if seed is None else seed, ctx.n_agents)
    board = ctx.board
    counts = np.zeros(len(board))
    for _ in range(n_selections):
        traj = select_from_context(ctx, noise_d, cfg, rngs, goal_rng)
        counts[board.index(traj.selected)] += 1
    return CharDistribution(board.symbols, counts / counts.sum())


def product_of_experts(masses: Sequence[CharDistribution], exponents: Sequence[float]) -> CharDistribution:
    """Normalized ``prod_i m_i ** e_i`` over the symbols of the first input.

    A symbol with zero mass in every component is dropped with a warning.
    """
    symbols = masses[0].symbols
    stacked = np.stack([[m[s] for s in symbols] for m in masses])
    dead = (stacked == 0).all(axis=0)
    if dead.any():
        warnings.warn(f"symbols {[s for s, d in zip(symbols, dead) if d]} have zero mass in every component; excluded")
    keep = ~dead
    with np.errstate(divide="ignore"):
        logp = (np.asarray(exponents)[:, None] * np.log(stacked[:, keep])).sum(axis=0)
    p = np.exp(logp - logp.max())
    return CharDistribution(tuple(s for s, k in zip(symbols, keep) if k), p / p.sum())


def poe_char_check(agent_masses: Sequence[CharDistribution], exponents: Sequence[float],
                   collective_mass: CharDistribution) -> float:
    """TV distance between ``collective_mass`` and the tempered product of ``agent_masses``."""
    if abs(sum(exponents) - 1.0) > 1e-9:
        raise ValueError("exponents must sum to 1")
    poe = product_of_experts(agent_masses, exponents)
    observed = np.array([collective_mass[s] for s in poe.symbols])
    if observed.sum() <= 0:
        return 1.0
    return total_variation(observed / observed.sum(), poe.probs)


def field_csv(field: GibbsField, ctx: EnergyContext) -> str:
    """``x,y,E_fused,prob`` rows over the grid cell centers."""
    centers = field.grid.centers
    energies = energy_field(ctx, field.grid)
    rows = ["x,y,E_fused,prob"]
    nx, ny = field.grid.shape
    for i in range(nx):
        for j in range(ny):
            x, y = centers[i, j].tolist()
            rows.append(f"{x!r},{y!r},{float(energies[i, j])!r},{float(field.cell_probs[i, j])!r}")
    return "\n".join(rows) + "\n"


def histogram_csv(counts: np.ndarray, grid: Grid, ctx: EnergyContext) -> str:
    probs = counts / counts.sum()
    return field_csv(GibbsField(grid, probs, float("nan")), ctx)
