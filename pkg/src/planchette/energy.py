"""Cauchy-potential energy landscapes over the board and their gradients.

All functions accept positions of shape ``(..., 2)`` and broadcast over the
leading axes. Energies are written with a positive sign so that minima sit
on probable goals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .board import BoardLayout, Grid


@dataclass(frozen=True)
class PotentialParams:
    r0: float = 0.3
    phi0: float = 0.0

    def __post_init__(self):
        if self.r0 <= 0:
            raise ValueError("r0 must be positive")


def phi_cauchy(r, r0: float):
    """Cauchy (Lorentzian) potential ``0.5 * ln(1 + (r / r0)**2)``."""
    r = np.asarray(r, dtype=float)
    return 0.5 * np.log1p((r / r0) ** 2)


def elemental_energy(p, goal, params: PotentialParams = PotentialParams()):
    diff = np.asarray(p, dtype=float) - np.asarray(goal, dtype=float)
    return phi_cauchy(np.hypot(diff[..., 0], diff[..., 1]), params.r0) + params.phi0


def elemental_gradient(p, goal, params: PotentialParams = PotentialParams()):
    diff = np.asarray(p, dtype=float) - np.asarray(goal, dtype=float)
    r2 = (diff**2).sum(axis=-1, keepdims=True)
    return diff / (params.r0**2 + r2)


def _goal_terms(p, board: BoardLayout, params: PotentialParams):
    # per-goal potentials (..., K) and gradient terms (..., K, 2)
    diff = np.asarray(p, dtype=float)[..., None, :] - board.goals
    r2 = (diff**2).sum(axis=-1)
    phi = 0.5 * np.log1p(r2 / params.r0**2)
    grad = diff / (params.r0**2 + r2)[..., None]
    return phi, grad


def effective_energy(p, dist, board: BoardLayout, params: PotentialParams = PotentialParams()):
    """Expected elemental energy when the goal is drawn from ``dist``."""
    dist = np.asarray(dist, dtype=float)
    phi, _ = _goal_terms(p, board, params)
    return (phi + params.phi0) @ dist


def effective_gradient(p, dist, board: BoardLayout, params: PotentialParams = PotentialParams()):
    dist = np.asarray(dist, dtype=float)
    _, grad = _goal_terms(p, board, params)
    return np.einsum("...kd,k->...d", grad, dist)


@dataclass(frozen=True, eq=False)
class EnergyContext:
    """Per-agent next-symbol distributions for one fixed context.

    ``dists`` has shape ``(N, K)`` with columns in board symbol order.
    """

    board: BoardLayout
    dists: np.ndarray
    params: PotentialParams = PotentialParams()

    def __post_init__(self):
        dists = np.atleast_2d(np.asarray(self.dists, dtype=float))
        if dists.shape[1] != len(self.board):
            raise ValueError("distribution length must match the board's symbol count")
        if (dists < 0).any() or np.abs(dists.sum(axis=1) - 1.0).max() > 1e-9:
            raise ValueError("each agent distribution must be nonnegative and sum to 1")
        dists.flags.writeable = False
        object.__setattr__(self, "dists", dists)

    @property
    def n_agents(self) -> int:
        return self.dists.shape[0]


def fused_energy(p, ctx: EnergyContext):
    """Sum of the agents' effective energies."""
    phi, _ = _goal_terms(p, ctx.board, ctx.params)
    elemental = phi + ctx.params.phi0
    total = elemental @ ctx.dists[0]
    for dist in ctx.dists[1:]:
        total = total + elemental @ dist
    return total


def fused_gradient(p, ctx: EnergyContext):
    _, grad = _goal_terms(p, ctx.board, ctx.params)
    total = np.einsum("...kd,k->...d", grad, ctx.dists[0])
    for dist in ctx.dists[1:]:
        total = total + np.einsum("...kd,k->...d", grad, dist)
    return total


def gradient_norm_bound(ctx: EnergyContext) -> float:
    """Upper bound ``N / (2 r0)`` on the fused force magnitude."""
    return ctx.n_agents / (2.0 * ctx.params.r0)


def energy_field(ctx: EnergyContext, grid: Grid) -> np.ndarray:
    """Fused energy at every cell center of ``grid``, shape ``grid.shape``."""
    return fused_energy(grid.centers, ctx)
