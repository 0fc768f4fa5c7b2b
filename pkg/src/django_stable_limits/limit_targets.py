"""The two limit laws: Z(t) exponential and √Z(t)·η mixed Gaussian.

"Parameter t" is read as the mean of Z(t), which is what E Z(t)^m = m! t^m
forces. The mixed Gaussian √Z(t)·η is a Laplace law of scale √(t/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import StrEnum

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .exceptions import ParameterError


class LawKind(StrEnum):
    EXPONENTIAL = "exponential"
    MIXED_GAUSSIAN = "mixed_gaussian"


@dataclass(frozen=True)
class LimitLaw:
    kind: LawKind
    t: float
    scale: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", LawKind(self.kind))
        if not self.t > 0:
            raise ParameterError(f"Limit law needs t > 0, got {self.t}.")
        if not math.isfinite(self.scale) or self.scale < 0:
            raise ParameterError(f"Limit law scale must be a finite non-negative number, got {self.scale}.")

    @classmethod
    def first_law(cls, t: float, k1: float) -> LimitLaw:
        """K₁·Z(t), the limit of (1/n)∫ f(X(s)) ds over [0, e^{nt}]."""
        return cls(LawKind.EXPONENTIAL, t, k1)

    @classmethod
    def second_law(cls, t: float, k2: float) -> LimitLaw:
        """√K₂·√Z(t)·η, the limit of (1/√n)∫ f(X(s)) ds over [0, e^{nt}] for mean-zero f."""
        if k2 < 0:
            raise ParameterError(f"k2 must be non-negative, got {k2}.")
        return cls(LawKind.MIXED_GAUSSIAN, t, math.sqrt(k2))

    @property
    def laplace_scale(self) -> float:
        return self.scale * math.sqrt(self.t / 2.0)

    @property
    def mean(self) -> float:
        return law_moment(self, 1)

    @property
    def variance(self) -> float:
        return law_moment(self, 2) - self.mean**2


def law_moment(law: LimitLaw, m: int) -> float:
    """Exact m-th moment, scale included."""
    if m < 1:
        raise ParameterError(f"Moment order must be at least 1, got {m}.")
    if law.kind is LawKind.EXPONENTIAL:
        return math.factorial(m) * law.t**m * law.scale**m
    if m % 2:
        return 0.0
    return math.factorial(m) * law.t ** (m // 2) / 2 ** (m // 2) * law.scale**m


def law_cdf(law: LimitLaw, x: ArrayLike) -> float | NDArray[np.float64]:
    """CDF of the law; a zero scale gives the point mass at 0."""
    values = np.asarray(x, dtype=float)
    if law.scale == 0.0:
        cdf = (values >= 0.0).astype(float)
    elif law.kind is LawKind.EXPONENTIAL:
        cdf = np.where(values >= 0.0, -np.expm1(-np.maximum(values, 0.0) / (law.scale * law.t)), 0.0)
    else:
        b = law.laplace_scale
        left = 0.5 * np.exp(np.minimum(values, 0.0) / b)
        cdf = np.where(values < 0.0, left, 1.0 - 0.5 * np.exp(-np.maximum(values, 0.0) / b))
    return float(cdf) if cdf.ndim == 0 else cdf


def law_sample(law: LimitLaw, rng: np.random.Generator, size: int | None = None) -> float | NDArray[np.float64]:
    """Draws of the law.

    The mixed Gaussian takes Z and η from two independent child streams of
    `rng`, so Z does not depend on how many normals are drawn.
    """
    count = 1 if size is None else size
    if law.kind is LawKind.EXPONENTIAL:
        draws = law.scale * law.t * rng.standard_exponential(count)
    else:
        z_stream, eta_stream = rng.spawn(2)
        z = law.t * z_stream.standard_exponential(count)
        draws = law.scale * np.sqrt(z) * eta_stream.standard_normal(count)
    return float(draws[0]) if size is None else draws


def law_cf(law: LimitLaw, u: ArrayLike) -> complex | NDArray[np.complex128]:
    """Characteristic function E e^{iuY}."""
    freqs = np.asarray(u, dtype=float)
    if law.kind is LawKind.EXPONENTIAL:
        cf = 1.0 / (1.0 - 1j * law.scale * law.t * freqs)
    else:
        cf = (1.0 / (1.0 + law.scale**2 * law.t * freqs**2 / 2.0)).astype(np.complex128)
    return complex(cf) if cf.ndim == 0 else cf
