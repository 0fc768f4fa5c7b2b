"""Comparison statistics between Monte-Carlo samples and the limit laws."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import stats

from ..exceptions import ParameterError
from ..limit_targets import LimitLaw, law_cdf, law_cf, law_moment

MIN_TABLE_SAMPLES = 100
# Frequencies per chunk when averaging e^{iux} over large samples.
CF_CHUNK = 64


def _samples(samples: ArrayLike) -> NDArray[np.float64]:
    values = np.asarray(samples, dtype=float).ravel()
    if values.size == 0:
        raise ParameterError("At least one sample is required.")
    return values


def ks_distance(samples: ArrayLike, law: LimitLaw) -> float:
    """Two-sided Kolmogorov distance between the empirical CDF and the law's CDF."""
    values = _samples(samples)
    return float(stats.kstest(values, lambda x: law_cdf(law, x)).statistic)


def two_sample_ks(first: ArrayLike, second: ArrayLike) -> float:
    return float(stats.ks_2samp(_samples(first), _samples(second)).statistic)


def empirical_cf(samples: ArrayLike, frequencies: ArrayLike) -> NDArray[np.complex128]:
    values = _samples(samples)
    freqs = np.atleast_1d(np.asarray(frequencies, dtype=float))
    result = np.empty(freqs.size, dtype=np.complex128)
    for start in range(0, freqs.size, CF_CHUNK):
        chunk = freqs[start : start + CF_CHUNK]
        result[start : start + CF_CHUNK] = np.exp(1j * np.outer(chunk, values)).mean(axis=1)
    return result


def cf_distance(samples: ArrayLike, law: LimitLaw, frequencies: ArrayLike) -> float:
    """sup over the frequency grid of |empirical CF − law CF|."""
    freqs = np.atleast_1d(np.asarray(frequencies, dtype=float))
    if freqs.size == 0:
        raise ParameterError("The frequency grid must not be empty.")
    gap = np.abs(empirical_cf(samples, freqs) - np.atleast_1d(law_cf(law, freqs)))
    return float(gap.max())


def default_frequencies(law: LimitLaw, count: int = 41) -> NDArray[np.float64]:
    """Symmetric grid reaching a few inverse scales of the law."""
    spread = max(law.scale * law.t, 1e-12) if law.kind == "exponential" else max(law.laplace_scale, 1e-12)
    return np.linspace(-4.0 / spread, 4.0 / spread, count)


@dataclass(frozen=True)
class MomentRow:
    order: int
    empirical: float
    std_error: float
    target: float
    z_score: float


def z_score(empirical: float, target: float, std_error: float) -> float:
    if std_error > 0:
        return (empirical - target) / std_error
    return 0.0 if empirical == target else math.copysign(math.inf, empirical - target)


def moment_table(samples: ArrayLike, law: LimitLaw, orders: tuple[int, ...] = (1, 2, 3, 4)) -> list[MomentRow]:
    """Empirical moments with asymptotic standard errors against the exact law moments."""
    values = _samples(samples)
    if values.size < MIN_TABLE_SAMPLES:
        raise ParameterError(f"moment_table needs at least {MIN_TABLE_SAMPLES} samples, got {values.size}.")
    rows = []
    for order in orders:
        powers = values**order
        empirical = float(powers.mean())
        std_error = float(powers.std(ddof=1) / math.sqrt(values.size))
        target = law_moment(law, order)
        rows.append(MomentRow(order, empirical, std_error, target, z_score(empirical, target, std_error)))
    return rows


def mean_with_error(samples: ArrayLike) -> tuple[float, float]:
    values = _samples(samples)
    if values.size < 2:
        return float(values.mean()), 0.0
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(values.size))


def second_moment_with_error(samples: ArrayLike) -> tuple[float, float]:
    return mean_with_error(_samples(samples) ** 2)


def kurtosis_ratio(samples: ArrayLike) -> float:
    """m₄ / m₂² about zero; 6 for the mixed Gaussian, 3 for a normal law."""
    values = _samples(samples)
    second = float(np.mean(values**2))
    if second == 0.0:
        return math.nan
    return float(np.mean(values**4)) / second**2


def is_degenerate(samples: ArrayLike) -> bool:
    values = _samples(samples)
    return bool(np.all(values == values[0]))


def non_increasing(values: list[float], slack: float = 0.0) -> bool:
    return all(later <= earlier + slack for earlier, later in zip(values, values[1:], strict=False))
