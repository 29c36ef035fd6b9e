"""Collective Langevin dynamics of the planchette and the sequence generator.

Each agent pushes the planchette down the gradient of its own effective
energy and adds its own Gaussian jitter; the planchette moves by the sum of
those pushes and is clamped to the board. The inner loop runs that chain
for a fixed number of steps and lets the trailing steps vote for the
nearest goal; the outer loop appends the winner to the context.

Random numbers come from one numpy ``Generator`` per agent plus one for
goal resampling, all spawned from a single seed. Every step consumes one
standard-normal pair per agent, in agent order, whether or not the agent's
noise is zero.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numba
import numpy as np

from .board import BoardLayout, clip, nearest_index
from .corpus import BOS, EOS, NgramModel
from .energy import (
    EnergyContext,
    PotentialParams,
    effective_gradient,
    elemental_gradient,
    fused_energy,
    fused_gradient,
)

MODES = ("marginal", "resample")


@dataclass(frozen=True)
class DynamicsConfig:
    """Step size, loop lengths and noise-free knobs of the simulation.

    ``mode="marginal"`` drives every agent by its effective (goal-averaged)
    energy. ``mode="resample"`` has each agent draw a goal from its
    distribution every ``delta_t`` steps and pull toward that goal only.
    """

    eta: float = 0.1
    delta_t: int = 1
    t_max_inner: int = 2000
    vote_fraction: float = 0.05
    t_max_outer: int = 20
    mode: str = "marginal"
    params: PotentialParams = PotentialParams()
    seed: int = 0
    continue_from_previous: bool = False

    def __post_init__(self):
        if self.eta <= 0:
            raise ValueError("eta must be positive")
        if self.t_max_inner < 1:
            raise ValueError("t_max_inner must be >= 1")
        if not 1 <= self.delta_t <= self.t_max_inner:
            raise ValueError("delta_t must lie in [1, t_max_inner]")
        if not 0 < self.vote_fraction <= 1:
            raise ValueError("vote_fraction must lie in (0, 1]")
        if self.t_max_outer < 0:
            raise ValueError("t_max_outer must be >= 0")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")

    @property
    def vote_steps(self) -> int:
        return min(self.t_max_inner, math.ceil(self.vote_fraction * self.t_max_inner - 1e-9))

    @property
    def burn_in(self) -> int:
        return self.t_max_inner - self.vote_steps


@dataclass(frozen=True)
class AgentSpec:
    model: NgramModel
    noise_d: float = 0.01

    def __post_init__(self):
        if self.noise_d < 0:
            raise ValueError("noise_d must be >= 0")

    def temperature(self, eta: float) -> float:
        return self.noise_d / eta


def fused_temperature(noise_d: Sequence[float], eta: float) -> float:
    """Effective temperature ``sum(D_i) / eta`` of the collective chain."""
    return float(np.sum(noise_d)) / eta


@dataclass(eq=False)
class Trajectory:
    """One inner-loop run.

    ``positions`` holds ``x(0) .. x(T)``; ``fused_energy[t-1]`` is the fused
    energy at ``x(t)``; ``voted[t-1]`` is the symbol index ``x(t)`` voted for,
    or -1 during burn-in.
    """

    positions: np.ndarray
    fused_energy: np.ndarray
    voted: np.ndarray
    selected: str
    symbols: tuple[str, ...]

    @property
    def votes(self) -> dict[str, int]:
        counts = np.bincount(self.voted[self.voted >= 0], minlength=len(self.symbols))
        return {s: int(c) for s, c in zip(self.symbols, counts) if c}


@dataclass(eq=False)
class GenerationRecord:
    sequence: list[str]
    per_char: list[Trajectory] = field(default_factory=list)
    seed: int = 0

    @property
    def word(self) -> str:
        """Generated letters with the terminal EOS stripped."""
        return "".join(s for s in self.sequence if s != EOS)

    def to_json(self) -> str:
        return json.dumps(
            {"seed": self.seed, "sequence": self.sequence, "word": self.word,
             "votes": [t.votes for t in self.per_char]},
            sort_keys=True,
        )


def spawn_streams(seed: int, n_agents: int) -> tuple[list[np.random.Generator], np.random.Generator]:
    """One generator per agent plus one for goal resampling."""
    children = np.random.SeedSequence(seed).spawn(n_agents + 1)
    return [np.random.default_rng(c) for c in children[:n_agents]], np.random.default_rng(children[-1])


def trial_seed(seed: int, trial: int) -> int:
    """Derive a 64-bit seed for ``trial`` by hashing ``(seed, trial)`` with SeedSequence."""
    lo, hi = np.random.SeedSequence([seed, trial]).generate_state(2, dtype=np.uint32)
    return int(hi) << 32 | int(lo)


def energy_context(agents: Sequence[AgentSpec], context: Sequence[str], board: BoardLayout,
                   params: PotentialParams = PotentialParams()) -> EnergyContext:
    for a in agents:
        if a.model.alphabet != board.symbols:
            raise ValueError("agent alphabet must match the board's symbol order")
    dists = np.stack([a.model.next_char_dist(context) for a in agents])
    return EnergyContext(board, dists, params)


def agent_action(p, dist, noise_d: float, board: BoardLayout, cfg: DynamicsConfig,
                 rng: np.random.Generator, goal: int | None = None) -> np.ndarray:
    """One agent's push: ``-eta * grad E_i(p) + sqrt(2 D_i) * xi``.

    With ``goal`` given the gradient is the elemental one toward that goal
    index (resample mode); otherwise it is the effective-energy gradient.
    """
    p = np.asarray(p, dtype=float)
    if goal is None:
        grad = effective_gradient(p, dist, board, cfg.params)
    else:
        grad = elemental_gradient(p, board.goals[goal], cfg.params)
    xi = rng.standard_normal(p.shape)
    return -cfg.eta * grad + math.sqrt(2.0 * noise_d) * xi


def collective_step(p, dists, noise_d: Sequence[float], board: BoardLayout, cfg: DynamicsConfig,
                    rngs: Sequence[np.random.Generator], goals: Sequence[int] | None = None) -> np.ndarray:
    """Move the planchette by the sum of all agents' actions, then clamp.

    ``p`` may be a batch of positions ``(..., 2)``; each agent then draws
    one noise pair per position.
    """
    p = np.asarray(p, dtype=float)
    total = np.zeros_like(p)
    for i, (dist, d, rng) in enumerate(zip(dists, noise_d, rngs)):
        goal = None if goals is None else goals[i]
        total = total + agent_action(p, dist, d, board, cfg, rng, goal)
    return clip(board, p + total)


def centralized_ula_step(p, ctx: EnergyContext, eta: float, d_fused: float,
                         rng: np.random.Generator) -> np.ndarray:
    """Plain ULA step on the fused energy with a single noise source."""
    if d_fused < 0:
        raise ValueError("d_fused must be >= 0")
    p = np.asarray(p, dtype=float)
    xi = rng.standard_normal(p.shape)
    return clip(ctx.board, p - eta * fused_gradient(p, ctx) + math.sqrt(2.0 * d_fused) * xi)


@numba.njit(cache=True)
def _chain_kernel(x, y, goals, weights, goal_idx, eta, amp, noise, bounds, r0sq):
    n_agents, steps = noise.shape[0], noise.shape[1]
    n_goals = goals.shape[0]
    resample = goal_idx.shape[1] > 0
    out = np.empty((steps + 1, 2))
    out[0, 0] = x
    out[0, 1] = y
    gx = np.empty(n_goals)
    gy = np.empty(n_goals)
    for t in range(steps):
        for k in range(n_goals):
            dx = x - goals[k, 0]
            dy = y - goals[k, 1]
            den = r0sq + dx * dx + dy * dy
            gx[k] = dx / den
            gy[k] = dy / den
        sx = 0.0
        sy = 0.0
        for i in range(n_agents):
            if resample:
                k = goal_idx[i, t]
                ex = gx[k]
                ey = gy[k]
            else:
                ex = 0.0
                ey = 0.0
                for k in range(n_goals):
                    ex += weights[i, k] * gx[k]
                    ey += weights[i, k] * gy[k]
            sx += -eta * ex + amp[i] * noise[i, t, 0]
            sy += -eta * ey + amp[i] * noise[i, t, 1]
        x = min(max(x + sx, bounds[0]), bounds[1])
        y = min(max(y + sy, bounds[2]), bounds[3])
        out[t + 1, 0] = x
        out[t + 1, 1] = y
    return out


def _draw_goals(dists: np.ndarray, steps: int, delta_t: int, goal_rng: np.random.Generator) -> np.ndarray:
    n_agents = dists.shape[0]
    n_events = -(-steps // delta_t)
    u = goal_rng.random((n_events, n_agents))
    cdf = np.cumsum(dists, axis=1)
    idx = np.empty((n_agents, n_events), dtype=np.int64)
    for i in range(n_agents):
        idx[i] = np.minimum(np.searchsorted(cdf[i], u[:, i] * cdf[i, -1], side="right"), dists.shape[1] - 1)
    return np.repeat(idx, delta_t, axis=1)[:, :steps]


def run_chain(ctx: EnergyContext, noise_d: Sequence[float], x0, steps: int, cfg: DynamicsConfig,
              rngs: Sequence[np.random.Generator], goal_rng: np.random.Generator | None = None) -> np.ndarray:
    """Run ``steps`` collective steps from ``x0``; returns ``(steps + 1, 2)`` positions."""
    noise_d = np.asarray(noise_d, dtype=float)
    if len(noise_d) != ctx.n_agents or len(rngs) != ctx.n_agents:
        raise ValueError("need one noise level and one stream per agent")
    noise = np.stack([rng.standard_normal((steps, 2)) for rng in rngs])
    if cfg.mode == "resample":
        if goal_rng is None:
            raise ValueError("resample mode needs a goal stream")
        goal_idx = _draw_goals(ctx.dists, steps, cfg.delta_t, goal_rng)
    else:
        goal_idx = np.zeros((ctx.n_agents, 0), dtype=np.int64)
    x0 = clip(ctx.board, x0)
    return _chain_kernel(
        float(x0[0]), float(x0[1]), np.ascontiguousarray(ctx.board.goals), np.ascontiguousarray(ctx.dists),
        goal_idx, float(cfg.eta), np.sqrt(2.0 * noise_d), noise,
        np.array(ctx.board.bounds), float(cfg.params.r0) ** 2,
    )


def select_from_context(ctx: EnergyContext, noise_d: Sequence[float], cfg: DynamicsConfig,
                        rngs: Sequence[np.random.Generator], goal_rng: np.random.Generator | None = None,
                        start=None) -> Trajectory:
    """Run one inner loop on a fixed energy context and vote for a symbol.

    BOS votes are recorded but BOS is never selected; if every vote went
    to BOS, the nearest non-BOS goal to the final position wins.
    """
    board = ctx.board
    x0 = board.goal(BOS) if start is None else start
    positions = run_chain(ctx, noise_d, x0, cfg.t_max_inner, cfg, rngs, goal_rng)
    energies = fused_energy(positions[1:], ctx)
    voted = np.full(cfg.t_max_inner, -1, dtype=np.int64)
    voted[cfg.burn_in:] = nearest_index(board, positions[1 + cfg.burn_in:])
    counts = np.bincount(voted[cfg.burn_in:], minlength=len(board)).astype(float)
    counts[board.bos_index] = -1.0
    if counts.max() > 0:
        selected = int(np.argmax(counts))
    else:
        d2 = ((positions[-1] - board.goals) ** 2).sum(axis=1)
        d2[board.bos_index] = np.inf
        selected = int(np.argmin(d2))
    return Trajectory(positions, energies, voted, board.symbols[selected], board.symbols)


def select_character(agents: Sequence[AgentSpec], context: Sequence[str], board: BoardLayout,
                     cfg: DynamicsConfig, rngs, goal_rng=None, start=None) -> Trajectory:
    ctx = energy_context(agents, context, board, cfg.params)
    return select_from_context(ctx, [a.noise_d for a in agents], cfg, rngs, goal_rng, start)


def generate_sequence(agents: Sequence[AgentSpec], board: BoardLayout, cfg: DynamicsConfig,
                      seed: int | None = None) -> GenerationRecord:
    """Spell one sequence: select symbols until EOS or ``t_max_outer``."""
    seed = cfg.seed if seed is None else seed
    rngs, goal_rng = spawn_streams(seed, len(agents))
    record = GenerationRecord([], [], seed)
    start = None
    for _ in range(cfg.t_max_outer):
        traj = select_character(agents, record.sequence, board, cfg, rngs, goal_rng, start)
        record.sequence.append(traj.selected)
        record.per_char.append(traj)
        if cfg.continue_from_previous:
            start = traj.positions[-1]
        if traj.selected == EOS:
            break
    return record


def trajectory_csv(traj: Trajectory) -> str:
    """``t,x,y,E_fused,voted_symbol`` rows; row 0 is the start position."""
    rows = ["t,x,y,E_fused,voted_symbol"]
    x, y = traj.positions[0].tolist()
    rows.append(f"0,{x!r},{y!r},,")
    for t in range(1, len(traj.positions)):
        x, y = traj.positions[t].tolist()
        v = traj.voted[t - 1]
        sym = traj.symbols[v] if v >= 0 else ""
        rows.append(f"{t},{x!r},{y!r},{float(traj.fused_energy[t - 1])!r},{sym}")
    return "\n".join(rows) + "\n"
