from __future__ import annotations

import math
from abc import ABC, abstractmethod
from functools import cached_property

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import integrate

from ..quadrature import Tolerance, quad

FOURIER_TOLERANCE = Tolerance(epsabs=1e-12, epsrel=1e-10, limit=400)


class BaseTestFunction(ABC):
    """Base class for test functions f entering the occupation-time functionals.

    The Fourier convention is f̂(u) = ∫ e^{iux} f(x) dx, so f̂(0) = ∫ f.
    Subclasses provide a vectorized evaluator, ∫f and the support metadata;
    analytic transforms override `fourier`.
    """

    f_id: str = ""
    # |f| below this threshold counts as outside the support.
    tail_threshold: float = 1e-12
    scan_limit: float = 200.0
    scan_step: float = 1e-3
    # Kinks and jumps handed to quadrature as breakpoints.
    breakpoints: tuple[float, ...] = ()

    def __call__(self, x: ArrayLike) -> NDArray[np.float64]:
        return self.evaluate(x)

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.f_id}>"

    @abstractmethod
    def evaluate(self, x: ArrayLike) -> NDArray[np.float64]:
        """Evaluate f elementwise."""

    @property
    @abstractmethod
    def integral(self) -> float:
        """∫ f(x) dx."""

    @property
    @abstractmethod
    def mean_zero(self) -> bool:
        """Whether ∫ f = 0."""

    @property
    @abstractmethod
    def compact_support(self) -> bool:
        """Whether f vanishes identically outside [-support_radius, support_radius]."""

    def fourier(self, u: ArrayLike) -> NDArray[np.complex128]:
        """f̂(u), by quadrature unless a subclass knows the closed form."""
        return np.vectorize(lambda v: fourier_by_quadrature(self, float(v))[0], otypes=[np.complex128])(u)

    @cached_property
    def support_radius(self) -> float:
        xs = np.arange(0.0, self.scan_limit + self.scan_step, self.scan_step)
        magnitude = np.maximum(np.abs(self.evaluate(xs)), np.abs(self.evaluate(-xs)))
        above = np.flatnonzero(magnitude >= self.tail_threshold)
        if above.size == 0:
            return 0.0
        return float(min(xs[above[-1]] + self.scan_step, self.scan_limit))

    @cached_property
    def abs_first_moment(self) -> float:
        """∫ |x f(x)| dx over the numerical support."""
        radius = self.support_radius
        if radius == 0.0:
            return 0.0
        points = sorted({0.0, *(p for p in self.breakpoints if -radius < p < radius)})
        value, _ = integrate.quad(
            lambda x: abs(x * float(self.evaluate(x))), -radius, radius, points=points, limit=400
        )
        return float(value)

    @property
    def integrable(self) -> bool:
        """Boundedness and ∫|x f(x)| dx < ∞, the hypotheses of the logarithmic laws."""
        return math.isfinite(self.abs_first_moment)


def fourier_by_quadrature(f: BaseTestFunction, u: float, tol: Tolerance = FOURIER_TOLERANCE) -> tuple[complex, float]:
    """∫ e^{iux} f(x) dx over the numerical support, with its error estimate."""
    radius = f.support_radius
    if radius == 0.0:
        return 0j, 0.0

    def integrand(x: float) -> float:
        return float(f.evaluate(x))

    quantity = f"fourier transform of {f.f_id} at u={u}"
    if u == 0.0:
        points = [p for p in f.breakpoints if -radius < p < radius]
        real = quad(integrand, -radius, radius, quantity=quantity, tol=tol, points=points or None)
        return complex(real.value, 0.0), real.error
    real = quad(integrand, -radius, radius, quantity=quantity, tol=tol, weight="cos", wvar=u)
    imag = quad(integrand, -radius, radius, quantity=quantity, tol=tol, weight="sin", wvar=u)
    return complex(real.value, imag.value), real.error + imag.error
