# simulate/grid.py
"""
Uniform space-time grids

Nodes are the interior points of a uniform tensor grid on the box domain;
Dirichlet boundary nodes are implicit (always zero) and only reappear when
a trajectory is exported.
"""

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from symbolic import Window
from .errors import DiscretizationError


@dataclass(frozen=True)
class Grid:
    domain: Tuple[Tuple[float, float], ...]
    nodes: Tuple[int, ...]
    horizon: float
    steps: int

    def __post_init__(self):
        if len(self.domain) not in (1, 2):
            raise DiscretizationError("only one- and two-dimensional grids are supported")
        if len(self.nodes) != len(self.domain) or min(self.nodes) < 3:
            raise DiscretizationError(f"need at least 3 interior nodes per axis, got {self.nodes}")
        if self.horizon <= 0 or self.steps < 1:
            raise DiscretizationError("horizon and step count must be positive")

    @classmethod
    def uniform(cls, domain: Sequence[Sequence[float]], horizon: float, spacing: float = None,
                nodes: Sequence[int] = None, dt: float = None, steps: int = None) -> 'Grid':
        """
        Build a grid from a spacing h (same on every axis) or explicit node counts.

        The time step is adjusted so that T / dt is an integer.
        """
        domain = tuple((float(lo), float(hi)) for lo, hi in domain)
        if nodes is None:
            if spacing is None:
                raise DiscretizationError("give either a spacing or node counts")
            nodes = tuple(int(round((hi - lo) / spacing)) - 1 for lo, hi in domain)
        nodes = tuple(int(n) for n in nodes)
        if steps is None:
            if dt is None:
                raise DiscretizationError("give either a time step or a step count")
            steps = max(1, int(round(horizon / dt)))
        return cls(domain=domain, nodes=nodes, horizon=float(horizon), steps=int(steps))

    @property
    def dimension(self) -> int:
        return len(self.domain)

    @property
    def spacing(self) -> Tuple[float, ...]:
        return tuple((hi - lo) / (n + 1) for (lo, hi), n in zip(self.domain, self.nodes))

    @property
    def dt(self) -> float:
        return self.horizon / self.steps

    @property
    def size(self) -> int:
        return int(np.prod(self.nodes))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.steps + 1)

    def axes(self) -> List[np.ndarray]:
        """Interior node coordinates per axis."""
        return [lo + h * np.arange(1, n + 1)
                for (lo, _), h, n in zip(self.domain, self.spacing, self.nodes)]

    def padded_axes(self) -> List[np.ndarray]:
        """Node coordinates per axis including the two boundary nodes."""
        return [lo + h * np.arange(n + 2)
                for (lo, _), h, n in zip(self.domain, self.spacing, self.nodes)]

    def mesh(self) -> List[np.ndarray]:
        return np.meshgrid(*self.axes(), indexing='ij')

    def space_time_coords(self, t: float) -> List[np.ndarray]:
        """Coordinates (t, x1, ...) of all interior nodes, flattened in C order."""
        mesh = [m.ravel() for m in self.mesh()]
        return [np.full_like(mesh[0], t)] + mesh

    def trajectory_coords(self) -> List[np.ndarray]:
        """Coordinates of every (time level, interior node) pair, shape (K + 1, size)."""
        mesh = [m.ravel() for m in self.mesh()]
        times = self.times[:, None]
        return [np.broadcast_to(times, (self.steps + 1, self.size))] + [
            np.broadcast_to(m[None, :], (self.steps + 1, self.size)) for m in mesh]

    def nodes_inside(self, window: Window) -> Tuple[int, ...]:
        """Number of interior nodes strictly inside the window, per space axis."""
        return tuple(int(np.count_nonzero((x > lo) & (x < hi)))
                     for x, lo, hi in zip(self.axes(), window.lower[1:], window.upper[1:]))

    def pad(self, values: np.ndarray) -> np.ndarray:
        """Add zero Dirichlet boundary nodes to a flat interior vector."""
        shaped = np.reshape(values, self.nodes)
        return np.pad(shaped, 1)

    def norm(self, values: np.ndarray) -> float:
        """Discrete L2(Omega) norm."""
        return float(np.sqrt(self.cell_volume * np.sum(np.square(values))))

    def to_dict(self) -> dict:
        return {
            'domain': [list(b) for b in self.domain],
            'nodes': list(self.nodes),
            'spacing': list(self.spacing),
            'horizon': self.horizon,
            'steps': self.steps,
            'dt': self.dt,
        }
