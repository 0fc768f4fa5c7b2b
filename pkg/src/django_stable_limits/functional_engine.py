"""Occupation-time functionals ∫ f(X(s)) ds along simulated paths.

Four normalizations are supported:

| normalization | horizon  | factor            |
|---------------|----------|-------------------|
| first_law     | e^{nt}   | 1/n               |
| second_law    | e^{nt}   | 1/√n              |
| rosen         | n·t      | n^{(1−α)/(2α)}    |
| log_n         | n·t      | 1/log n           |

Integrals are left-endpoint Riemann sums, matching the càdlàg paths.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass
from enum import StrEnum

import numpy as np
from numpy.typing import NDArray

from .exceptions import ParameterError, PreconditionError, UnsupportedRegime
from .functions.base import BaseTestFunction
from .functions.builtin import Mollified, Scaled, Sum
from .settings import get_setting
from .signals import post_ensemble, pre_ensemble
from .stable_sim import (
    Discretization,
    GridKind,
    StabilityIndex,
    StablePath,
    build_grid,
    ensemble_seeds,
    map_path_batches,
    simulate_hybrid_path,
    simulate_path,
    validate_alpha,
)


class Normalization(StrEnum):
    FIRST_LAW = "first_law"
    SECOND_LAW = "second_law"
    ROSEN = "rosen"
    LOG_N = "log_n"


@dataclass(frozen=True)
class FunctionalSample:
    value: float
    normalization: Normalization
    n: int
    t: float
    alpha: float
    f_id: str

    @property
    def horizon(self) -> float:
        return horizon_for(self.normalization, self.n, self.t)


def horizon_for(normalization: Normalization | str, n: int, t: float) -> float:
    normalization = Normalization(normalization)
    if normalization in (Normalization.FIRST_LAW, Normalization.SECOND_LAW):
        return math.exp(n * t)
    return n * t


def normalizing_factor(normalization: Normalization | str, alpha: float, n: int) -> float:
    normalization = Normalization(normalization)
    if normalization is Normalization.FIRST_LAW:
        return 1.0 / n
    if normalization is Normalization.SECOND_LAW:
        return 1.0 / math.sqrt(n)
    if normalization is Normalization.ROSEN:
        return n ** ((1.0 - alpha) / (2.0 * alpha))
    return 1.0 / math.log(n)


def _left_sum(path: StablePath, weights: NDArray[np.float64], a: float, b: float) -> float:
    points = path.grid.points
    if not a < b:
        raise ParameterError(f"Integration limits must satisfy a < b, got [{a}, {b}].")
    slack = 1e-12 * max(1.0, abs(path.grid.horizon))
    if a < path.grid.start - slack or b > path.grid.horizon + slack:
        raise ParameterError(f"[{a}, {b}] is not inside the path's grid [{path.grid.start}, {path.grid.horizon}].")
    clipped = np.clip(points, a, b)
    return float(np.dot(weights[:-1], np.diff(clipped)))


def occupation_integral(path: StablePath, f: BaseTestFunction, a: float, b: float) -> float:
    """Left-endpoint Riemann sum of f(X(s)) over [a, b]."""
    return _left_sum(path, np.asarray(f.evaluate(path.values), dtype=float), a, b)


def _resolve(discretization: Discretization | None) -> Discretization:
    return discretization if discretization is not None else Discretization.from_settings()


def _simulate(
    alpha: float, horizon: float, f: BaseTestFunction, seed: int, discretization: Discretization
) -> StablePath:
    mode = discretization.grid_mode
    if mode is GridKind.HYBRID:
        radius = discretization.radius_for(f.support_radius)
        return simulate_hybrid_path(alpha, horizon, discretization, seed, radius)
    fine = min(discretization.fine_step, horizon / 2.0)
    # Geometric grids switch where the relative step has grown to the fine step.
    switch = discretization.fine_step / discretization.coarse_ratio
    grid = build_grid(horizon, fine, discretization.coarse_ratio, mode, switch_time=switch)
    return simulate_path(alpha, grid, seed)


def _check_common(n: int, t: float, start: float) -> None:
    if n < 1:
        raise ParameterError(f"n must be a positive integer, got {n}.")
    if not t > 0:
        raise ParameterError(f"t must be positive, got {t}.")
    if start < 0:
        raise ParameterError(f"start must be non-negative, got {start}.")


def _check_law(normalization: Normalization, alpha: float, n: int, t: float, f: BaseTestFunction, start: float) -> None:
    _check_common(n, t, start)
    index = StabilityIndex(alpha)
    if normalization is Normalization.ROSEN:
        if not index.has_local_time:
            raise ParameterError(f"The local-time normalization needs 1 < alpha <= 2, got {alpha}.")
        if not f.mean_zero:
            raise PreconditionError(f"Test function {f.f_id} must be mean-zero for the local-time normalization.")
    else:
        if not index.is_cauchy:
            raise ParameterError(f"{normalization} is defined for the Cauchy process only (alpha=1), got {alpha}.")
        if not f.integrable:
            raise ParameterError(f"Test function {f.f_id} needs ∫|x f(x)| dx < ∞.")
        if normalization is Normalization.SECOND_LAW and not f.mean_zero:
            raise PreconditionError(f"Test function {f.f_id} must be mean-zero for the second-order law.")
        if normalization is Normalization.LOG_N and n < 3:
            raise ParameterError(f"The log-n normalization needs n >= 3, got {n}.")
    if start >= horizon_for(normalization, n, t):
        raise ParameterError("start must lie before the horizon.")


def _functional_value(
    normalization: Normalization,
    alpha: float,
    n: int,
    t: float,
    f: BaseTestFunction,
    seed: int,
    discretization: Discretization,
    start: float,
) -> float:
    horizon = horizon_for(normalization, n, t)
    path = _simulate(alpha, horizon, f, seed, discretization)
    return normalizing_factor(normalization, alpha, n) * occupation_integral(path, f, start, horizon)


def _sample(
    normalization: Normalization,
    alpha: float,
    n: int,
    t: float,
    f: BaseTestFunction,
    seed: int,
    discretization: Discretization | None,
    start: float,
) -> FunctionalSample:
    alpha = validate_alpha(alpha)
    _check_law(normalization, alpha, n, t, f, start)
    value = _functional_value(normalization, alpha, n, t, f, seed, _resolve(discretization), start)
    return FunctionalSample(value=value, normalization=normalization, n=n, t=t, alpha=alpha, f_id=f.f_id)


def first_law_sample(
    alpha: float,
    n: int,
    t: float,
    f: BaseTestFunction,
    seed: int,
    *,
    discretization: Discretization | None = None,
    start: float = 0.0,
) -> FunctionalSample:
    """One draw of (1/n) ∫ f(X(s)) ds over [start, e^{nt}] for the Cauchy process."""
    return _sample(Normalization.FIRST_LAW, alpha, n, t, f, seed, discretization, start)


def second_law_sample(
    alpha: float,
    n: int,
    t: float,
    f: BaseTestFunction,
    seed: int,
    *,
    discretization: Discretization | None = None,
    start: float = 0.0,
) -> FunctionalSample:
    """One draw of (1/√n) ∫ f(X(s)) ds over [start, e^{nt}] for mean-zero f."""
    return _sample(Normalization.SECOND_LAW, alpha, n, t, f, seed, discretization, start)


def rosen_sample(
    alpha: float,
    n: int,
    t: float,
    f: BaseTestFunction,
    seed: int,
    *,
    discretization: Discretization | None = None,
    start: float = 0.0,
) -> FunctionalSample:
    """One draw of n^{(1−α)/(2α)} ∫ f(X(s)) ds over [start, nt], 1 < α <= 2."""
    return _sample(Normalization.ROSEN, alpha, n, t, f, seed, discretization, start)


def logn_sample(
    alpha: float,
    n: int,
    t: float,
    f: BaseTestFunction,
    seed: int,
    *,
    discretization: Discretization | None = None,
    start: float = 0.0,
) -> FunctionalSample:
    """One draw of (1/log n) ∫ f(X(s)) ds over [start, nt] for the Cauchy process."""
    return _sample(Normalization.LOG_N, alpha, n, t, f, seed, discretization, start)


def _functional_batch(
    normalization: Normalization,
    alpha: float,
    n: int,
    t: float,
    f: BaseTestFunction,
    discretization: Discretization,
    start: float,
    seeds: list[int],
) -> list[float]:
    return [_functional_value(normalization, alpha, n, t, f, seed, discretization, start) for seed in seeds]


def _pool_options(workers: int | None, batch_size: int | None) -> tuple[int, int]:
    resolved_workers = int(get_setting("WORKERS")) if workers is None else workers  # type: ignore[arg-type]
    resolved_batch = int(get_setting("BATCH_SIZE")) if batch_size is None else batch_size  # type: ignore[arg-type]
    if resolved_batch < 1:
        raise ParameterError("batch_size must be at least 1.")
    return resolved_workers, resolved_batch


def functional_ensemble(
    normalization: Normalization | str,
    alpha: float,
    n: int,
    t: float,
    f: BaseTestFunction,
    num_paths: int,
    master_seed: int,
    discretization: Discretization | None = None,
    workers: int | None = None,
    *,
    batch_size: int | None = None,
    start: float = 0.0,
) -> NDArray[np.float64]:
    """Functional values of paths 0..num_paths−1, in path order.

    Path k is simulated from path_seed(master_seed, k), so the result does not
    depend on the worker count or batch size.
    """
    normalization = Normalization(normalization)
    alpha = validate_alpha(alpha)
    if num_paths < 1:
        raise ParameterError("num_paths must be at least 1.")
    _check_law(normalization, alpha, n, t, f, start)
    discretization = _resolve(discretization)
    workers, batch_size = _pool_options(workers, batch_size)

    pre_ensemble.send(sender=FunctionalSample, normalization=normalization, n=n, t=t, num_paths=num_paths)
    values = np.asarray(
        map_path_batches(
            _functional_batch,
            ensemble_seeds(master_seed, num_paths),
            normalization,
            alpha,
            n,
            t,
            f,
            discretization,
            start,
            workers=workers,
            batch_size=batch_size,
        ),
        dtype=float,
    )
    post_ensemble.send(sender=FunctionalSample, normalization=normalization, n=n, t=t, values=values)
    return values


def local_time_estimate(path: StablePath, t: float, epsilon: float) -> float:
    """(1/2ε) · Leb{s <= t : |X(s)| <= ε}, read off the path's grid."""
    if not StabilityIndex(path.alpha).has_local_time:
        raise UnsupportedRegime(path.alpha, "local time exists only for alpha > 1")
    if not epsilon > 0:
        raise ParameterError(f"epsilon must be positive, got {epsilon}.")
    inside = (np.abs(path.values) <= epsilon).astype(float)
    return _left_sum(path, inside, path.grid.start, t) / (2.0 * epsilon)


def _local_time_batch(alpha: float, t: float, epsilon: float, step: float, seeds: list[int]) -> list[float]:
    grid = build_grid(t, step)
    return [local_time_estimate(simulate_path(alpha, grid, seed), t, epsilon) for seed in seeds]


def local_time_ensemble(
    alpha: float,
    t: float,
    epsilon: float | None = None,
    num_paths: int = 4000,
    master_seed: int = 0,
    step: float | None = None,
    workers: int | None = None,
    *,
    batch_size: int | None = None,
) -> NDArray[np.float64]:
    """Local-time estimates at level 0 on a uniform grid of width `step`.

    The step defaults to LOCAL_TIME_STEP and the bandwidth to LOCAL_TIME_EPSILON,
    or √step when that is unset.
    """
    alpha = validate_alpha(alpha)
    if not StabilityIndex(alpha).has_local_time:
        raise UnsupportedRegime(alpha, "local time exists only for alpha > 1")
    if not t > 0:
        raise ParameterError(f"t must be positive, got {t}.")
    if num_paths < 1:
        raise ParameterError("num_paths must be at least 1.")
    step = float(get_setting("LOCAL_TIME_STEP")) if step is None else step  # type: ignore[arg-type]
    if epsilon is None:
        configured = get_setting("LOCAL_TIME_EPSILON")
        epsilon = math.sqrt(step) if configured is None else float(configured)  # type: ignore[arg-type]
    if not epsilon > 0:
        raise ParameterError(f"epsilon must be positive, got {epsilon}.")
    workers, batch_size = _pool_options(workers, batch_size)
    return np.asarray(
        map_path_batches(
            _local_time_batch,
            ensemble_seeds(master_seed, num_paths),
            alpha,
            t,
            epsilon,
            step,
            workers=workers,
            batch_size=batch_size,
        ),
        dtype=float,
    )


@dataclass(frozen=True)
class VarianceDecay:
    n_values: tuple[int, ...]
    variances: tuple[float, ...]
    slope: float


def variance_decay(
    f: BaseTestFunction,
    delta: float,
    n_values: Sequence[int],
    t: float,
    num_paths: int,
    master_seed: int,
    discretization: Discretization | None = None,
    workers: int | None = None,
) -> VarianceDecay:
    """Log-log slope in n of Var[(1/n)∫(f − f*φ_δ)(X(s)) ds] over [0, e^{nt}].

    f − f*φ_δ integrates to zero, so the first-law functional of it should
    vanish in L² at rate 1/n.
    """
    if len(n_values) < 2:
        raise ParameterError("variance_decay needs at least two values of n.")
    residual = Sum(f, Scaled(Mollified(f, delta), -1.0))
    variances = tuple(
        float(
            np.var(
                functional_ensemble(
                    Normalization.FIRST_LAW, 1.0, n, t, residual, num_paths, master_seed, discretization, workers
                ),
                ddof=1,
            )
        )
        for n in n_values
    )
    slope = float(np.polyfit(np.log(np.asarray(n_values, dtype=float)), np.log(variances), 1)[0])
    return VarianceDecay(n_values=tuple(n_values), variances=variances, slope=slope)
