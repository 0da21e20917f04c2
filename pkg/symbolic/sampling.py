# symbolic/sampling.py
"""
Boxes, sample grids and random test functions

Numerical checks of operator identities evaluate both sides on random
smooth test functions at random points of a box in (t, x1, ..., xN).
"""

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .expression import Expression, add, const, cos, mul, power, sin, var


@dataclass(frozen=True)
class Window:
    """Open box (lower, upper) in (t, x1, ..., xN)."""

    lower: Tuple[float, ...]
    upper: Tuple[float, ...]

    def __post_init__(self):
        lower = tuple(float(v) for v in self.lower)
        upper = tuple(float(v) for v in self.upper)
        if len(lower) != len(upper) or not lower:
            raise ValueError("window bounds must have the same non-zero length")
        if any(not lo < hi for lo, hi in zip(lower, upper)):
            raise ValueError(f"empty window {list(zip(lower, upper))}")
        object.__setattr__(self, 'lower', lower)
        object.__setattr__(self, 'upper', upper)

    @classmethod
    def from_bounds(cls, bounds: Sequence[Sequence[float]]) -> 'Window':
        return cls(tuple(b[0] for b in bounds), tuple(b[1] for b in bounds))

    @property
    def dimension(self) -> int:
        """Number of space variables."""
        return len(self.lower) - 1

    @property
    def widths(self) -> np.ndarray:
        return np.subtract(self.upper, self.lower)

    @property
    def volume(self) -> float:
        return float(np.prod(self.widths))

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.widths))

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (np.asarray(self.lower) + np.asarray(self.upper))

    def bounds(self) -> List[Tuple[float, float]]:
        return list(zip(self.lower, self.upper))

    def contains(self, point: Sequence[float]) -> bool:
        return all(lo < p < hi for p, lo, hi in zip(point, self.lower, self.upper))

    def contains_window(self, other: 'Window') -> bool:
        return all(lo <= olo and ohi <= hi for lo, hi, olo, ohi
                   in zip(self.lower, self.upper, other.lower, other.upper))

    def shrink(self, fraction: float) -> 'Window':
        """Concentric box with widths scaled by `fraction`."""
        half = 0.5 * fraction * self.widths
        return Window(tuple(self.center - half), tuple(self.center + half))

    def cell_centers(self, samples: int) -> List[np.ndarray]:
        """Cell-centered grid with `samples` cells per axis, as 'ij' mesh arrays."""
        axes = [lo + (np.arange(samples) + 0.5) * (hi - lo) / samples
                for lo, hi in zip(self.lower, self.upper)]
        return np.meshgrid(*axes, indexing='ij')

    def random_points(self, rng: np.random.Generator, count: int, margin: float = 0.05) -> List[np.ndarray]:
        """Uniform points, kept `margin` (relative) away from the faces."""
        inner = self.shrink(1.0 - 2.0 * margin)
        return [rng.uniform(lo, hi, size=count) for lo, hi in zip(inner.lower, inner.upper)]

    def to_dict(self) -> dict:
        names = ['t'] + [f'x{i}' for i in range(1, len(self.lower))]
        return {name: [lo, hi] for name, lo, hi in zip(names, self.lower, self.upper)}


def random_test_functions(dimension: int, count: int, rng: np.random.Generator) -> List[Expression]:
    """
    Smooth, generic test functions of (t, x1, ..., xN).

    Each is a constant plus a quadratic polynomial plus two trigonometric
    plane waves, with random coefficients of order one.
    """
    variables = [var(i) for i in range(dimension + 1)]
    functions = []
    for _ in range(count):
        terms = [const(rng.uniform(-1.0, 1.0))]
        for v in variables:
            terms.append(mul(rng.uniform(-1.0, 1.0), v))
            terms.append(mul(rng.uniform(-0.5, 0.5), power(v, 2)))
        for wave in range(2):
            phase = add(const(rng.uniform(0.0, 2.0 * np.pi)),
                        *(mul(rng.uniform(0.5, 2.5), v) for v in variables))
            amplitude = rng.uniform(0.5, 1.5)
            terms.append(mul(amplitude, sin(phase) if wave == 0 else cos(phase)))
        functions.append(add(*terms))
    return functions


def relative_residual(residual: np.ndarray, reference: np.ndarray) -> float:
    """max |residual| scaled by max(1, max |reference|)."""
    scale = max(1.0, float(np.max(np.abs(reference))) if np.size(reference) else 1.0)
    return float(np.max(np.abs(residual))) / scale if np.size(residual) else 0.0
