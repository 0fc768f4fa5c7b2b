from __future__ import annotations

from functools import cached_property
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..exceptions import ParameterError
from .base import BaseTestFunction

# Allowed relative deviation of the x-spacing from uniform.
UNIFORM_TOLERANCE = 1e-6
# Below this |u·h| the segment transforms switch to their Taylor expansions.
SMALL_PHASE = 1e-3


class Tabulated(BaseTestFunction):
    """Piecewise-linear test function through (x, f(x)) samples on a uniform grid.

    The function is zero outside the table, and the Fourier transform is exact
    for the interpolant.
    """

    def __init__(self, xs: ArrayLike, ys: ArrayLike, f_id: str = "tabulated"):
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        if xs.ndim != 1 or xs.shape != ys.shape or xs.size < 2:
            raise ParameterError("Tabulated test functions need at least two (x, f(x)) rows.")
        steps = np.diff(xs)
        if np.any(steps <= 0):
            raise ParameterError("Tabulated x-grid must be strictly increasing.")
        if np.max(np.abs(steps - steps.mean())) > UNIFORM_TOLERANCE * steps.mean():
            raise ParameterError("Tabulated x-grid must be uniform.")
        if not np.all(np.isfinite(ys)):
            raise ParameterError("Tabulated values must be finite.")
        self.xs = xs
        self.ys = ys
        self.f_id = f_id
        self.breakpoints = (float(xs[0]), float(xs[-1]))

    @classmethod
    def from_file(cls, path: str | Path, f_id: str | None = None) -> Tabulated:
        """Load a two-column numeric text file of x and f(x)."""
        path = Path(path)
        try:
            table = np.loadtxt(path, ndmin=2)
        except (OSError, ValueError) as exc:
            raise ParameterError(f"Cannot read tabulated function from {path}: {exc}") from exc
        if table.shape[1] != 2:
            raise ParameterError(f"Expected two columns in {path}, found {table.shape[1]}.")
        return cls(table[:, 0], table[:, 1], f_id=f_id or path.stem)

    def evaluate(self, x: ArrayLike) -> NDArray[np.float64]:
        x = np.asarray(x, dtype=float)
        return np.interp(x, self.xs, self.ys, left=0.0, right=0.0)

    def fourier(self, u: ArrayLike) -> NDArray[np.complex128]:
        u = np.asarray(u, dtype=float)
        return np.vectorize(self._fourier_scalar, otypes=[np.complex128])(u)

    def _fourier_scalar(self, u: float) -> complex:
        h = self.xs[1:] - self.xs[:-1]
        y0 = self.ys[:-1]
        slope = self.ys[1:] - y0
        theta = u * h
        # ∫_0^1 e^{iθσ} dσ and ∫_0^1 σ e^{iθσ} dσ per segment.
        with np.errstate(divide="ignore", invalid="ignore"):
            expi = np.exp(1j * theta)
            zeroth = np.where(np.abs(theta) < SMALL_PHASE, 1 + 0.5j * theta - theta**2 / 6, (expi - 1) / (1j * theta))
            first = np.where(
                np.abs(theta) < SMALL_PHASE,
                0.5 + 1j * theta / 3 - theta**2 / 8,
                expi / (1j * theta) + (expi - 1) / theta**2,
            )
        segments = h * np.exp(1j * u * self.xs[:-1]) * (y0 * zeroth + slope * first)
        return complex(segments.sum())

    @property
    def integral(self) -> float:
        return float(np.trapezoid(self.ys, self.xs))

    @property
    def mean_zero(self) -> bool:
        return abs(self.integral) <= 1e-10 * max(1.0, float(np.trapezoid(np.abs(self.ys), self.xs)))

    @property
    def compact_support(self) -> bool:
        return True

    @cached_property
    def support_radius(self) -> float:
        above = np.flatnonzero(np.abs(self.ys) >= self.tail_threshold)
        if above.size == 0:
            return 0.0
        lo = max(int(above[0]) - 1, 0)
        hi = min(int(above[-1]) + 1, self.xs.size - 1)
        return float(max(abs(self.xs[lo]), abs(self.xs[hi])))
