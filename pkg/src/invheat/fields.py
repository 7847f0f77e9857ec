"""Solution containers shared by the series and finite-difference solvers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import UsageError
from .numerics import interpolate

__all__ = ["CoefficientTrajectory", "TemperatureField"]


class CoefficientTrajectory:
    """A positive sampled function of time with piecewise-linear interpolation.

    Positivity is part of the solution concept (the diffusivity of a heat
    equation), so the constructor rejects non-positive samples outright.
    """

    def __init__(self, grid, values):
        grid = np.asarray(grid, dtype=float)
        values = np.asarray(values, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape or grid.size < 2:
            raise UsageError("trajectory needs matching 1-D grid/values, >= 2 samples")
        if not np.all(np.diff(grid) > 0):
            raise UsageError("trajectory grid must be strictly increasing")
        if not np.all(np.isfinite(values)):
            raise UsageError("trajectory values must be finite")
        if np.any(values <= 0):
            k = int(np.argmax(values <= 0))
            raise UsageError(
                f"diffusivity must stay strictly positive; value {values[k]} at t={grid[k]}"
            )
        self.grid = grid
        self.values = values
        self._cumulative = None

    @classmethod
    def constant(cls, value: float, T: float, n: int = 512) -> "CoefficientTrajectory":
        return cls(np.linspace(0.0, T, n + 1), np.full(n + 1, float(value)))

    @classmethod
    def from_function(cls, fn, T: float, n: int = 512) -> "CoefficientTrajectory":
        grid = np.linspace(0.0, T, n + 1)
        return cls(grid, np.asarray(fn(grid), dtype=float))

    def __call__(self, t):
        return interpolate(self.grid, self.values, t)

    def __len__(self):
        return self.grid.size

    @property
    def T(self) -> float:
        return float(self.grid[-1])

    def cumulative(self) -> np.ndarray:
        """Prefix integral of the interpolant at the grid nodes (trapezoid
        sums, which are exact for a piecewise-linear function)."""
        if self._cumulative is None:
            W = np.zeros_like(self.values)
            W[1:] = np.cumsum(0.5 * (self.values[1:] + self.values[:-1]) * np.diff(self.grid))
            self._cumulative = W
        return self._cumulative

    def cumulative_at(self, t) -> np.ndarray:
        """Exact prefix integral of the interpolant at arbitrary points."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(t < self.grid[0]) or np.any(t > self.grid[-1]):
            raise UsageError("cumulative_at outside the trajectory range")
        W = self.cumulative()
        idx = np.clip(np.searchsorted(self.grid, t, side="right") - 1, 0, len(self.grid) - 2)
        t0 = self.grid[idx]
        a0 = self.values[idx]
        at = np.interp(t, self.grid, self.values)
        return W[idx] + 0.5 * (a0 + at) * (t - t0)

    def with_values(self, values) -> "CoefficientTrajectory":
        return CoefficientTrajectory(self.grid, values)


@dataclass
class TemperatureField:
    """u(x, t) sampled on a rectangular grid; values[j, i] = u(x_i, t_j)."""

    x: np.ndarray
    t: np.ndarray
    values: np.ndarray
    provenance: str = "spectral"

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.t = np.asarray(self.t, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.t.size, self.x.size):
            raise UsageError(
                f"field shape {self.values.shape} does not match grids "
                f"({self.t.size}, {self.x.size})"
            )
        if not np.all(np.isfinite(self.values)):
            raise UsageError("temperature field contains non-finite entries")

    def x_integrals(self) -> np.ndarray:
        """Trapezoid approximation of the spatial integral at every level."""
        return np.trapezoid(self.values, self.x, axis=1)

    def sup_error(self, exact) -> float:
        """Sup-norm distance to an exact evaluator exact(x, t) on the grid."""
        X, Tg = np.meshgrid(self.x, self.t)
        return float(np.max(np.abs(self.values - exact(X, Tg))))
