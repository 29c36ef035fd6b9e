"""Letter-board geometry: goal coordinates, clipping and nearest-goal lookup."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import BOS, EOS, LETTERS


@dataclass(frozen=True, eq=False)
class BoardLayout:
    """Ordered symbols, one goal per symbol, and a rectangular clip region.

    ``bounds`` is ``(x_min, x_max, y_min, y_max)``. The symbol order is the
    index order used everywhere else (distributions, tie-breaking).
    """

    symbols: tuple[str, ...]
    goals: np.ndarray
    bounds: tuple[float, float, float, float]

    def __post_init__(self):
        goals = np.array(self.goals, dtype=float).reshape(-1, 2)
        goals.flags.writeable = False
        object.__setattr__(self, "goals", goals)
        object.__setattr__(self, "symbols", tuple(self.symbols))
        object.__setattr__(self, "bounds", tuple(float(b) for b in self.bounds))
        if len(self.symbols) != len(goals):
            raise ValueError("one goal per symbol is required")
        if len(set(self.symbols)) != len(self.symbols):
            raise ValueError("duplicate symbols")
        if self.symbols.count(BOS) != 1 or self.symbols.count(EOS) != 1:
            raise ValueError("board needs exactly one BOS and one EOS")
        x0, x1, y0, y1 = self.bounds
        if not (x0 < x1 and y0 < y1):
            raise ValueError("empty bounds")
        inside = (goals[:, 0] >= x0) & (goals[:, 0] <= x1) & (goals[:, 1] >= y0) & (goals[:, 1] <= y1)
        if not inside.all():
            raise ValueError("every goal must lie inside the bounds")
        if len(np.unique(goals, axis=0)) != len(goals):
            raise ValueError("goals must be pairwise distinct")

    def index(self, symbol: str) -> int:
        return self.symbols.index(symbol)

    def goal(self, symbol: str) -> np.ndarray:
        return self.goals[self.index(symbol)]

    @property
    def bos_index(self) -> int:
        return self.index(BOS)

    def __len__(self) -> int:
        return len(self.symbols)


def default_board() -> BoardLayout:
    """7x4 integer grid, BOS at (3, 0), a-z then EOS in row-major order."""
    cells = [(x, y) for y in range(4) for x in range(7)]
    cells.remove((3, 0))
    fill = list(LETTERS) + [EOS]
    goals = {BOS: (3, 0)}
    goals.update(zip(fill, cells))
    symbols = (BOS,) + LETTERS + (EOS,)
    return BoardLayout(symbols, [goals[s] for s in symbols], (-1.0, 7.0, -1.0, 4.0))


def load_board(path) -> BoardLayout:
    lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln.strip()]
    head = lines[0].split("\t")
    if head[0] != "bounds" or len(head) != 5:
        raise ValueError(f"{path}: first line must be 'bounds<TAB>x_min<TAB>x_max<TAB>y_min<TAB>y_max'")
    bounds = tuple(float(v) for v in head[1:])
    symbols, goals = [], []
    for ln in lines[1:]:
        sym, x, y = ln.split("\t")
        symbols.append(sym)
        goals.append((float(x), float(y)))
    return BoardLayout(tuple(symbols), goals, bounds)


def save_board(board: BoardLayout, path) -> None:
    rows = ["bounds\t" + "\t".join(repr(float(b)) for b in board.bounds)]
    rows += [f"{s}\t{x!r}\t{y!r}" for s, (x, y) in zip(board.symbols, board.goals.tolist())]
    Path(path).write_text("\n".join(rows) + "\n", encoding="utf-8")


def clip(board: BoardLayout, p) -> np.ndarray:
    """Clamp positions (shape ``(..., 2)``) into the board bounds."""
    p = np.asarray(p, dtype=float)
    x0, x1, y0, y1 = board.bounds
    return np.stack([np.clip(p[..., 0], x0, x1), np.clip(p[..., 1], y0, y1)], axis=-1)


def nearest_index(board: BoardLayout, p) -> np.ndarray:
    """Index of the closest goal; ties go to the lowest index."""
    p = np.asarray(p, dtype=float)
    d2 = ((p[..., None, :] - board.goals) ** 2).sum(axis=-1)
    return np.argmin(d2, axis=-1)


def nearest_goal(board: BoardLayout, p) -> str:
    return board.symbols[int(nearest_index(board, p))]


@dataclass(frozen=True)
class Grid:
    """Regular cell grid covering ``bounds`` with roughly ``step``-sized cells."""

    bounds: tuple[float, float, float, float]
    step: float

    def __post_init__(self):
        if self.step <= 0:
            raise ValueError("grid step must be positive")

    @property
    def shape(self) -> tuple[int, int]:
        x0, x1, y0, y1 = self.bounds
        return (max(1, int(round((x1 - x0) / self.step))), max(1, int(round((y1 - y0) / self.step))))

    @property
    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        x0, x1, y0, y1 = self.bounds
        nx, ny = self.shape
        return np.linspace(x0, x1, nx + 1), np.linspace(y0, y1, ny + 1)

    @property
    def centers(self) -> np.ndarray:
        """Cell centers, shape ``(nx, ny, 2)``; axis 0 is x."""
        ex, ey = self.edges
        cx, cy = 0.5 * (ex[1:] + ex[:-1]), 0.5 * (ey[1:] + ey[:-1])
        return np.stack(np.meshgrid(cx, cy, indexing="ij"), axis=-1)

    @property
    def cell_area(self) -> float:
        ex, ey = self.edges
        return (ex[1] - ex[0]) * (ey[1] - ey[0])

    def histogram(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        counts, _, _ = np.histogram2d(points[:, 0], points[:, 1], bins=self.edges)
        return counts


def voronoi_cell_mass(board: BoardLayout, density, grid: Grid) -> dict[str, float]:
    """Sum grid-cell probabilities into the Voronoi cell of each goal."""
    density = np.asarray(density, dtype=float)
    if density.shape != grid.shape:
        raise ValueError(f"density shape {density.shape} does not match grid {grid.shape}")
    if abs(density.sum() - 1.0) > 1e-6 or (density < 0).any():
        raise ValueError("density must be nonnegative and sum to 1")
    labels = nearest_index(board, grid.centers)
    mass = np.bincount(labels.ravel(), weights=density.ravel(), minlength=len(board))
    return {s: float(m) for s, m in zip(board.symbols, mass)}


def toy_board(goals: dict[str, Sequence[float]], margin: float = 1.0) -> BoardLayout:
    """Small board from a symbol -> goal mapping, bounds padded by ``margin``."""
    pts = np.array(list(goals.values()), dtype=float)
    lo, hi = pts.min(axis=0) - margin, pts.max(axis=0) + margin
    return BoardLayout(tuple(goals), pts, (lo[0], hi[0], lo[1], hi[1]))

