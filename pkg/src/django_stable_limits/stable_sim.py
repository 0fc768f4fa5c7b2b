"""Symmetric α-stable increments, time grids and seeded path ensembles.

A path with stability index α has E e^{iuX(t)} = e^{-t|u|^α}: α = 1 is the
Cauchy process and α = 2 is Brownian motion with variance 2t.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, replace
from enum import StrEnum
from typing import Any

import numpy as np
from joblib import Parallel, delayed
from numpy.typing import ArrayLike, NDArray

from .exceptions import ParameterError
from .settings import get_setting

SQRT2 = math.sqrt(2.0)
HALF_PI = 0.5 * math.pi


class GridKind(StrEnum):
    UNIFORM = "uniform"
    GEOMETRIC = "geometric"
    HYBRID = "hybrid"


@dataclass(frozen=True)
class StabilityIndex:
    alpha: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.alpha) or not 0.0 < self.alpha <= 2.0:
            raise ParameterError(f"Stability index must lie in (0, 2], got {self.alpha}.")

    def __float__(self) -> float:
        return float(self.alpha)

    @property
    def is_cauchy(self) -> bool:
        return self.alpha == 1.0

    @property
    def is_gaussian(self) -> bool:
        return self.alpha == 2.0

    @property
    def has_local_time(self) -> bool:
        return self.alpha > 1.0


def validate_alpha(alpha: float | StabilityIndex) -> float:
    return float(alpha if isinstance(alpha, StabilityIndex) else StabilityIndex(float(alpha)))


@dataclass(frozen=True, eq=False)
class TimeGrid:
    points: NDArray[np.float64]
    kind: GridKind = GridKind.UNIFORM
    fine_step: float | None = None
    coarse_bound: float | None = None

    def __post_init__(self) -> None:
        points = np.asarray(self.points, dtype=float)
        if points.ndim != 1 or points.size == 0:
            raise ParameterError("Time grid must contain at least one point.")
        if points[0] < 0:
            raise ParameterError("Time grid must start at a non-negative time.")
        if np.any(np.diff(points) <= 0):
            raise ParameterError("Time grid must be strictly increasing.")
        object.__setattr__(self, "points", points)

    def __len__(self) -> int:
        return int(self.points.size)

    @property
    def start(self) -> float:
        return float(self.points[0])

    @property
    def horizon(self) -> float:
        return float(self.points[-1])

    @property
    def steps(self) -> NDArray[np.float64]:
        return np.diff(self.points)

    def index_of(self, time: float) -> int:
        """Index of a grid point equal to `time` up to rounding."""
        idx = int(np.searchsorted(self.points, time))
        for candidate in (idx - 1, idx):
            if 0 <= candidate < self.points.size and math.isclose(
                self.points[candidate], time, rel_tol=1e-12, abs_tol=1e-12
            ):
                return candidate
        raise ParameterError(f"Time {time} is not a point of the grid.")

    def check_step_bounds(self) -> bool:
        """Whether every step respects the grid kind's declared bounds."""
        steps = self.steps
        if steps.size == 0:
            return True
        slack = 1.0 + 1e-9
        if self.coarse_bound is not None and np.any(steps > self.coarse_bound * slack):
            return False
        # The last step may be clipped at the horizon.
        if self.fine_step is not None and steps.size > 1 and np.any(steps[:-1] < self.fine_step / slack):
            return False
        return True


@dataclass(frozen=True, eq=False)
class StablePath:
    grid: TimeGrid
    values: NDArray[np.float64]
    alpha: float
    seed: int

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.points.shape:
            raise ParameterError("Path values must match the grid length.")
        object.__setattr__(self, "values", values)

    def value_at(self, time: float) -> float:
        """Right-continuous piecewise-constant reading of the path."""
        if time < self.grid.start or time > self.grid.horizon:
            raise ParameterError(f"Time {time} lies outside the path's grid.")
        idx = int(np.searchsorted(self.grid.points, time, side="right")) - 1
        return float(self.values[idx])


@dataclass(frozen=True)
class Discretization:
    """Simulation grid knobs shared by the functional samplers."""

    fine_step: float = 0.05
    coarse_ratio: float = 0.01
    distance_ratio: float = 0.02
    switch_radius: float | None = None
    grid_mode: GridKind = GridKind.HYBRID
    block_size: int = 512

    def __post_init__(self) -> None:
        if not self.fine_step > 0:
            raise ParameterError("fine_step must be positive.")
        if not self.coarse_ratio > 0:
            raise ParameterError("coarse_ratio must be positive.")
        if not self.distance_ratio > 0:
            raise ParameterError("distance_ratio must be positive.")
        if self.switch_radius is not None and not self.switch_radius > 0:
            raise ParameterError("switch_radius must be positive.")
        if self.block_size < 1:
            raise ParameterError("block_size must be at least 1.")
        object.__setattr__(self, "grid_mode", GridKind(self.grid_mode))

    @classmethod
    def from_settings(cls, **overrides: Any) -> Discretization:
        values: dict[str, Any] = {
            "fine_step": float(get_setting("FINE_STEP")),  # type: ignore[arg-type]
            "coarse_ratio": float(get_setting("COARSE_RATIO")),  # type: ignore[arg-type]
            "distance_ratio": float(get_setting("DISTANCE_RATIO")),  # type: ignore[arg-type]
            "switch_radius": get_setting("SWITCH_RADIUS"),
            "grid_mode": str(get_setting("GRID_MODE")),
            "block_size": int(get_setting("BLOCK_SIZE")),  # type: ignore[arg-type]
        }
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**values)

    def radius_for(self, support_radius: float) -> float:
        """Switch radius: the configured value, else the test function's support radius plus 2."""
        return self.switch_radius if self.switch_radius is not None else support_radius + 2.0

    def refined(self) -> Discretization:
        return replace(self, fine_step=self.fine_step / 2.0)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def path_seed(master_seed: int, index: int) -> int:
    """Seed of path `index` in an ensemble; independent of how paths are batched."""
    if master_seed < 0 or index < 0:
        raise ParameterError("Seeds and path indices must be non-negative.")
    sequence = np.random.SeedSequence(master_seed, spawn_key=(index,))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def standard_stable(alpha: float, rng: np.random.Generator, size: int) -> NDArray[np.float64]:
    """Unit draws with characteristic function e^{-|u|^α}.

    Chambers–Mallows–Stuck in general, with exact branches for the Cauchy
    (tangent of a uniform angle) and Gaussian (variance 2) cases.
    """
    index = StabilityIndex(alpha)
    if index.is_gaussian:
        return rng.normal(0.0, SQRT2, size)
    angle = rng.uniform(-HALF_PI, HALF_PI, size)
    if index.is_cauchy:
        return np.tan(angle)
    weight = rng.standard_exponential(size)
    return (
        np.sin(alpha * angle)
        / np.cos(angle) ** (1.0 / alpha)
        * (np.cos((1.0 - alpha) * angle) / weight) ** ((1.0 - alpha) / alpha)
    )


def sample_increment(alpha: float | StabilityIndex, dt: float, rng: np.random.Generator) -> float:
    """One draw of X(t+dt) − X(t)."""
    alpha = validate_alpha(alpha)
    if not dt > 0:
        raise ParameterError(f"Increment length must be positive, got {dt}.")
    if not isinstance(rng, np.random.Generator):
        raise ParameterError("rng must be a numpy Generator.")
    return float(dt ** (1.0 / alpha) * standard_stable(alpha, rng, 1)[0])


def build_grid(
    horizon: float,
    fine_step: float,
    coarse_factor: float = 0.01,
    mode: GridKind | str = GridKind.UNIFORM,
    switch_time: float = 1.0,
) -> TimeGrid:
    """Grid covering [0, horizon].

    Uniform grids use `fine_step` throughout. Geometric grids use `fine_step` up
    to `switch_time` and then multiply by (1 + coarse_factor) per step. Hybrid
    grids depend on the path and come from `simulate_hybrid_path`.
    """
    mode = GridKind(mode)
    if not horizon > 0 or not fine_step > 0:
        raise ParameterError("Grid horizon and steps must be positive.")
    if fine_step >= horizon:
        raise ParameterError("fine_step must be smaller than the horizon.")
    if mode is GridKind.HYBRID:
        raise ParameterError("Hybrid grids depend on the path; use simulate_hybrid_path.")
    if mode is GridKind.UNIFORM:
        points = _uniform_points(horizon, fine_step)
        return TimeGrid(points, GridKind.UNIFORM, fine_step=fine_step, coarse_bound=fine_step)

    if not coarse_factor > 0:
        raise ParameterError("coarse_factor must be positive.")
    switch = min(switch_time, horizon)
    head = _uniform_points(switch, min(fine_step, switch))
    if switch >= horizon:
        return TimeGrid(head, GridKind.GEOMETRIC, coarse_bound=fine_step)
    ratio = 1.0 + coarse_factor
    count = max(1, math.ceil(math.log(horizon / switch) / math.log(ratio) - 1e-9))
    tail = switch * ratio ** np.arange(1, count + 1)
    tail[-1] = horizon
    points = np.concatenate([head, tail[tail > switch]])
    return TimeGrid(points, GridKind.GEOMETRIC, coarse_bound=max(fine_step, coarse_factor * horizon))


def _uniform_points(horizon: float, step: float) -> NDArray[np.float64]:
    count = max(1, math.ceil(horizon / step - 1e-9))
    points = np.arange(count + 1, dtype=float) * step
    points[-1] = horizon
    return points


def simulate_path(alpha: float | StabilityIndex, grid: TimeGrid, seed: int) -> StablePath:
    """Path on a fixed grid from independent increments; a pure function of (alpha, grid, seed)."""
    alpha = validate_alpha(alpha)
    rng = make_rng(seed)
    spans = np.diff(grid.points, prepend=0.0)
    increments = spans ** (1.0 / alpha) * standard_stable(alpha, rng, spans.size)
    return StablePath(grid=grid, values=np.cumsum(increments), alpha=alpha, seed=seed)


def simulate_hybrid_path(
    alpha: float | StabilityIndex,
    horizon: float,
    discretization: Discretization,
    seed: int,
    radius: float,
) -> StablePath:
    """Path whose grid refines itself near the origin.

    Steps are `fine_step` while |X| <= radius. Outside, the time grows by the
    factor (1 + coarse_ratio) per step, never by less than `fine_step`. A
    coarse step is also capped at (distance_ratio · d)^α, where d is the
    distance from the radius when the block was planned, so the typical
    displacement of a step stays a fraction of the way back. A block is
    re-planned once the distance has halved, and the grid returns to fine
    steps at the first grid point back inside the radius. Draws come in
    blocks of `block_size`, and draws left over at a re-plan are discarded.
    """
    alpha = validate_alpha(alpha)
    if not horizon > 0:
        raise ParameterError("Path horizon must be positive.")
    rng = make_rng(seed)
    fine, ratio, block = discretization.fine_step, discretization.coarse_ratio, discretization.block_size
    times: list[NDArray[np.float64]] = [np.zeros(1)]
    values: list[NDArray[np.float64]] = [np.zeros(1)]
    s, x = 0.0, 0.0
    while s < horizon:
        unit = standard_stable(alpha, rng, block)
        distance = abs(x) - radius
        inside = distance <= 0
        if inside:
            new_times = s + fine * np.arange(1, block + 1)
        else:
            cap = max(fine, (discretization.distance_ratio * distance) ** alpha)
            new_times = _coarse_times(s, block, fine, ratio, cap)
        reached = np.flatnonzero(new_times >= horizon)
        if reached.size:
            new_times = new_times[: reached[0] + 1]
            new_times[-1] = horizon
        spans = np.diff(new_times, prepend=s)
        new_values = x + np.cumsum(spans ** (1.0 / alpha) * unit[: spans.size])
        if inside:
            switched = np.flatnonzero(np.abs(new_values) > radius)
        elif cap > fine:
            switched = np.flatnonzero(np.abs(new_values) - radius <= distance / 2.0)
        else:
            switched = np.flatnonzero(np.abs(new_values) <= radius)
        if switched.size:
            keep = switched[0] + 1
            new_times, new_values = new_times[:keep], new_values[:keep]
        times.append(new_times)
        values.append(new_values)
        s, x = float(new_times[-1]), float(new_values[-1])
    grid = TimeGrid(
        np.concatenate(times),
        GridKind.HYBRID,
        fine_step=fine,
        coarse_bound=max(fine, ratio * horizon),
    )
    return StablePath(grid=grid, values=np.concatenate(values), alpha=alpha, seed=seed)


def _coarse_times(s: float, count: int, fine: float, ratio: float, cap: float) -> NDArray[np.float64]:
    # Steps of ratio·s clipped to [fine, cap]: linear, then geometric, then linear again.
    linear = min(count, max(0, math.ceil((fine / ratio - s) / fine)))
    head = s + fine * np.arange(1, linear + 1)
    s = float(head[-1]) if linear else s
    geometric = 0
    if count > linear and ratio * s <= cap:
        geometric = min(count - linear, math.floor(math.log(cap / (ratio * s)) / math.log1p(ratio)) + 1)
    middle = s * (1.0 + ratio) ** np.arange(1, geometric + 1)
    s = float(middle[-1]) if geometric else s
    tail = s + cap * np.arange(1, count - linear - geometric + 1)
    return np.concatenate([head, middle, tail])


def map_path_batches(
    func: Callable[..., list[Any]],
    seeds: Sequence[int],
    *args: Any,
    workers: int = 1,
    batch_size: int = 64,
) -> list[Any]:
    """Apply func(*args, batch) over fixed batches of seeds and concatenate in seed order."""
    if workers < 1 and workers != -1:
        raise ParameterError("workers must be a positive integer or -1.")
    batches = [list(seeds[i : i + batch_size]) for i in range(0, len(seeds), batch_size)]
    results = Parallel(n_jobs=workers)(delayed(func)(*args, batch) for batch in batches)
    return [item for batch in results for item in batch]


def ensemble_seeds(master_seed: int, num_paths: int) -> list[int]:
    return [path_seed(master_seed, k) for k in range(num_paths)]


def _simulate_batch(alpha: float, grid: TimeGrid, seeds: list[int]) -> list[StablePath]:
    return [simulate_path(alpha, grid, seed) for seed in seeds]


def simulate_paths(
    alpha: float | StabilityIndex,
    grid: TimeGrid,
    master_seed: int,
    num_paths: int,
    workers: int = 1,
    batch_size: int = 64,
) -> list[StablePath]:
    """Seeded ensemble on a fixed grid; path k uses path_seed(master_seed, k)."""
    alpha = validate_alpha(alpha)
    if num_paths < 1:
        raise ParameterError("num_paths must be at least 1.")
    return map_path_batches(
        _simulate_batch, ensemble_seeds(master_seed, num_paths), alpha, grid, workers=workers, batch_size=batch_size
    )


def empirical_cf(
    paths: Sequence[StablePath],
    frequencies: ArrayLike,
    times: Sequence[float],
) -> complex | NDArray[np.complex128]:
    """Monte-Carlo average of exp(i Σ x_j X(s_j)).

    `frequencies` is one vector with one entry per time, or a 2-D array with
    one such vector per row.
    """
    if not paths:
        raise ParameterError("empirical_cf needs at least one path.")
    freqs = np.asarray(frequencies, dtype=float)
    single = freqs.ndim == 1
    freqs = np.atleast_2d(freqs)
    if freqs.shape[1] != len(times):
        raise ParameterError("Each frequency vector needs one entry per time.")
    states = np.empty((len(paths), len(times)))
    for row, path in enumerate(paths):
        states[row] = [path.values[path.grid.index_of(s)] for s in times]
    estimates = np.exp(1j * states @ freqs.T).mean(axis=0)
    return complex(estimates[0]) if single else estimates


def increment_cf(alpha: float | StabilityIndex, frequencies: ArrayLike, times: Sequence[float]) -> float:
    """exp(−Σ_i |Σ_{j≥i} x_j|^α (s_i − s_{i−1})) with s_0 = 0."""
    alpha = validate_alpha(alpha)
    freqs = np.asarray(frequencies, dtype=float)
    points = np.asarray(times, dtype=float)
    if freqs.shape != points.shape:
        raise ParameterError("Each frequency needs a matching time.")
    if points.size and (points[0] < 0 or np.any(np.diff(points) <= 0)):
        raise ParameterError("Times must be non-negative and strictly increasing.")
    tail_sums = np.cumsum(freqs[::-1])[::-1]
    gaps = np.diff(points, prepend=0.0)
    return float(np.exp(-np.sum(np.abs(tail_sums) ** alpha * gaps)))
