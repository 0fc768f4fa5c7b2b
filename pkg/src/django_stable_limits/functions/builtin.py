from __future__ import annotations

import math
from functools import cached_property

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .base import BaseTestFunction

SQRT_2PI = math.sqrt(2.0 * math.pi)

# Nodes and weights for E g(Z), Z standard normal: (1/√π) Σ w_i g(√2 z_i).
_HERMITE_NODES, _HERMITE_WEIGHTS = np.polynomial.hermite.hermgauss(64)


class Gauss(BaseTestFunction):
    """Gaussian bump a·exp(-x²/(2w²)); the default is e^{-x²/2}."""

    f_id = "gauss"

    def __init__(self, amplitude: float = 1.0, width: float = 1.0):
        if width <= 0:
            raise ValueError("width must be positive")
        self.amplitude = amplitude
        self.width = width

    def evaluate(self, x: ArrayLike) -> NDArray[np.float64]:
        x = np.asarray(x, dtype=float)
        return self.amplitude * np.exp(-0.5 * (x / self.width) ** 2)

    def fourier(self, u: ArrayLike) -> NDArray[np.complex128]:
        u = np.asarray(u, dtype=float)
        return (self.integral * np.exp(-0.5 * (self.width * u) ** 2)).astype(np.complex128)

    @property
    def integral(self) -> float:
        return self.amplitude * self.width * SQRT_2PI

    @property
    def mean_zero(self) -> bool:
        return self.amplitude == 0.0

    @property
    def compact_support(self) -> bool:
        return False

    @cached_property
    def abs_first_moment(self) -> float:
        return 2.0 * abs(self.amplitude) * self.width**2


class GaussDerivative(BaseTestFunction):
    """x·e^{-x²/2}, odd and mean-zero."""

    f_id = "gauss_deriv"

    def evaluate(self, x: ArrayLike) -> NDArray[np.float64]:
        x = np.asarray(x, dtype=float)
        return x * np.exp(-0.5 * x**2)

    def fourier(self, u: ArrayLike) -> NDArray[np.complex128]:
        u = np.asarray(u, dtype=float)
        return 1j * SQRT_2PI * u * np.exp(-0.5 * u**2)

    @property
    def integral(self) -> float:
        return 0.0

    @property
    def mean_zero(self) -> bool:
        return True

    @property
    def compact_support(self) -> bool:
        return False

    @cached_property
    def abs_first_moment(self) -> float:
        return SQRT_2PI


class DifferenceOfGaussians(BaseTestFunction):
    """Two unit-mass Gaussian densities of different widths, subtracted (scaled by √(2π))."""

    f_id = "dog"

    def __init__(self, narrow: float = 1.0, wide: float = 2.0):
        if not 0 < narrow < wide:
            raise ValueError("need 0 < narrow < wide")
        self.narrow = narrow
        self.wide = wide

    def evaluate(self, x: ArrayLike) -> NDArray[np.float64]:
        x = np.asarray(x, dtype=float)
        a, b = self.narrow, self.wide
        return np.exp(-0.5 * (x / a) ** 2) / a - np.exp(-0.5 * (x / b) ** 2) / b

    def fourier(self, u: ArrayLike) -> NDArray[np.complex128]:
        u = np.asarray(u, dtype=float)
        a, b = self.narrow, self.wide
        return (SQRT_2PI * (np.exp(-0.5 * (a * u) ** 2) - np.exp(-0.5 * (b * u) ** 2))).astype(np.complex128)

    @property
    def integral(self) -> float:
        return 0.0

    @property
    def mean_zero(self) -> bool:
        return True

    @property
    def compact_support(self) -> bool:
        return False


class HatPair(BaseTestFunction):
    """Λ(x+1) − Λ(x−1) with Λ(y) = max(0, 1−|y|): piecewise linear, supported on [-2, 2]."""

    f_id = "hat"
    breakpoints = (-2.0, -1.0, 0.0, 1.0, 2.0)

    def evaluate(self, x: ArrayLike) -> NDArray[np.float64]:
        x = np.asarray(x, dtype=float)
        return np.maximum(0.0, 1.0 - np.abs(x + 1.0)) - np.maximum(0.0, 1.0 - np.abs(x - 1.0))

    def fourier(self, u: ArrayLike) -> NDArray[np.complex128]:
        u = np.asarray(u, dtype=float)
        # Λ̂(u) = (sin(u/2)/(u/2))², and np.sinc(z) = sin(πz)/(πz).
        triangle = np.sinc(u / (2.0 * math.pi)) ** 2
        return -2j * np.sin(u) * triangle

    @property
    def integral(self) -> float:
        return 0.0

    @property
    def mean_zero(self) -> bool:
        return True

    @property
    def compact_support(self) -> bool:
        return True

    @cached_property
    def support_radius(self) -> float:
        return 2.0

    @cached_property
    def abs_first_moment(self) -> float:
        return 2.0


class ZeroFunction(BaseTestFunction):
    f_id = "zero"

    def evaluate(self, x: ArrayLike) -> NDArray[np.float64]:
        return np.zeros_like(np.asarray(x, dtype=float))

    def fourier(self, u: ArrayLike) -> NDArray[np.complex128]:
        return np.zeros_like(np.asarray(u, dtype=float), dtype=np.complex128)

    @property
    def integral(self) -> float:
        return 0.0

    @property
    def mean_zero(self) -> bool:
        return True

    @property
    def compact_support(self) -> bool:
        return True

    @cached_property
    def support_radius(self) -> float:
        return 0.0


class Scaled(BaseTestFunction):
    """c·f."""

    def __init__(self, base: BaseTestFunction, factor: float):
        self.base = base
        self.factor = factor
        self.f_id = f"{factor:g}*{base.f_id}"
        self.breakpoints = base.breakpoints

    def evaluate(self, x: ArrayLike) -> NDArray[np.float64]:
        return self.factor * self.base.evaluate(x)

    def fourier(self, u: ArrayLike) -> NDArray[np.complex128]:
        return self.factor * self.base.fourier(u)

    @property
    def integral(self) -> float:
        return self.factor * self.base.integral

    @property
    def mean_zero(self) -> bool:
        return self.base.mean_zero or self.factor == 0.0

    @property
    def compact_support(self) -> bool:
        return self.base.compact_support

    @cached_property
    def support_radius(self) -> float:
        return 0.0 if self.factor == 0.0 else self.base.support_radius

    @cached_property
    def abs_first_moment(self) -> float:
        return abs(self.factor) * self.base.abs_first_moment


class Shifted(BaseTestFunction):
    """x ↦ f(x − a); |f̂| is unchanged."""

    def __init__(self, base: BaseTestFunction, shift: float):
        self.base = base
        self.shift = shift
        self.f_id = f"{base.f_id}(x-{shift:g})"
        self.breakpoints = tuple(p + shift for p in base.breakpoints)

    def evaluate(self, x: ArrayLike) -> NDArray[np.float64]:
        return self.base.evaluate(np.asarray(x, dtype=float) - self.shift)

    def fourier(self, u: ArrayLike) -> NDArray[np.complex128]:
        u = np.asarray(u, dtype=float)
        return np.exp(1j * u * self.shift) * self.base.fourier(u)

    @property
    def integral(self) -> float:
        return self.base.integral

    @property
    def mean_zero(self) -> bool:
        return self.base.mean_zero

    @property
    def compact_support(self) -> bool:
        return self.base.compact_support

    @cached_property
    def support_radius(self) -> float:
        return self.base.support_radius + abs(self.shift)


class Sum(BaseTestFunction):
    """f + g."""

    def __init__(self, first: BaseTestFunction, second: BaseTestFunction):
        self.first = first
        self.second = second
        self.f_id = f"{first.f_id}+{second.f_id}"
        self.breakpoints = tuple(sorted({*first.breakpoints, *second.breakpoints}))

    def evaluate(self, x: ArrayLike) -> NDArray[np.float64]:
        return self.first.evaluate(x) + self.second.evaluate(x)

    def fourier(self, u: ArrayLike) -> NDArray[np.complex128]:
        return self.first.fourier(u) + self.second.fourier(u)

    @property
    def integral(self) -> float:
        return self.first.integral + self.second.integral

    @property
    def mean_zero(self) -> bool:
        if self.first.mean_zero and self.second.mean_zero:
            return True
        scale = max(abs(self.first.integral), abs(self.second.integral), 1.0)
        return abs(self.integral) <= 1e-12 * scale

    @property
    def compact_support(self) -> bool:
        return self.first.compact_support and self.second.compact_support

    @cached_property
    def support_radius(self) -> float:
        return max(self.first.support_radius, self.second.support_radius)


class Mollified(BaseTestFunction):
    """Gaussian convolution f * φ_δ, evaluated by Gauss–Hermite quadrature."""

    def __init__(self, base: BaseTestFunction, delta: float):
        if delta <= 0:
            raise ValueError("delta must be positive")
        self.base = base
        self.delta = delta
        self.f_id = f"{base.f_id}*phi({delta:g})"

    def evaluate(self, x: ArrayLike) -> NDArray[np.float64]:
        x = np.asarray(x, dtype=float)
        shifts = math.sqrt(2.0) * self.delta * _HERMITE_NODES
        values = self.base.evaluate(x[..., np.newaxis] + shifts)
        return values @ _HERMITE_WEIGHTS / math.sqrt(math.pi)

    def fourier(self, u: ArrayLike) -> NDArray[np.complex128]:
        u = np.asarray(u, dtype=float)
        return self.base.fourier(u) * np.exp(-0.5 * (self.delta * u) ** 2)

    @property
    def integral(self) -> float:
        return self.base.integral

    @property
    def mean_zero(self) -> bool:
        return self.base.mean_zero

    @property
    def compact_support(self) -> bool:
        return False

    @cached_property
    def support_radius(self) -> float:
        return self.base.support_radius + 8.0 * self.delta
