"""Thin wrappers around scipy quadrature that attach error estimates."""

from __future__ import annotations

import math
import warnings
from collections.abc import Callable
from typing import Any, NamedTuple

from scipy import integrate

from .exceptions import NumericalError, ParameterError
from .settings import get_setting

# Accepted ratio between the reported error and the requested tolerance when
# scipy flags a roundoff-limited result.
ROUNDOFF_SLACK = 100.0


class Estimate(NamedTuple):
    value: float
    error: float


class Tolerance(NamedTuple):
    epsabs: float
    epsrel: float
    limit: int

    def allowed(self, value: float) -> float:
        return max(self.epsabs, self.epsrel * abs(value))


def default_tolerance() -> Tolerance:
    return Tolerance(
        epsabs=float(get_setting("QUAD_EPSABS")),  # type: ignore[arg-type]
        epsrel=float(get_setting("QUAD_EPSREL")),  # type: ignore[arg-type]
        limit=int(get_setting("QUAD_LIMIT")),  # type: ignore[arg-type]
    )


def quad(
    func: Callable[[float], float],
    a: float,
    b: float,
    *,
    quantity: str,
    tol: Tolerance | None = None,
    **kwargs: Any,
) -> Estimate:
    """Run `scipy.integrate.quad` and raise NumericalError when it misses the tolerance."""
    tol = tol or default_tolerance()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", integrate.IntegrationWarning)
        value, error = integrate.quad(func, a, b, epsabs=tol.epsabs, epsrel=tol.epsrel, limit=tol.limit, **kwargs)
    flagged = any(issubclass(w.category, integrate.IntegrationWarning) for w in caught)
    _check(quantity, value, error, tol, flagged)
    return Estimate(float(value), float(error))


def dblquad(
    func: Callable[[float, float], float],
    a: float,
    b: float,
    lower: Callable[[float], float],
    upper: Callable[[float], float],
    *,
    quantity: str,
    tol: Tolerance | None = None,
) -> Estimate:
    """Integrate func(y, x) over a <= x <= b, lower(x) <= y <= upper(x)."""
    tol = tol or default_tolerance()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", integrate.IntegrationWarning)
        value, error = integrate.dblquad(func, a, b, lower, upper, epsabs=tol.epsabs, epsrel=tol.epsrel)
    flagged = any(issubclass(w.category, integrate.IntegrationWarning) for w in caught)
    _check(quantity, value, error, tol, flagged)
    return Estimate(float(value), float(error))


def half_line(
    func: Callable[[float], float],
    *,
    quantity: str,
    start: float = 0.0,
    panel: float = 2.0 * math.pi,
    tol: Tolerance | None = None,
    max_panels: int = 20000,
    patience: int = 3,
) -> Estimate:
    """Integrate func over [start, inf) panel by panel.

    Panels are added until `patience` consecutive panels contribute less than a
    hundredth of the tolerance. The last panel's magnitude is folded into the
    error as a truncation estimate.
    """
    tol = tol or default_tolerance()
    total = 0.0
    error = 0.0
    quiet = 0
    last = 0.0
    for k in range(max_panels):
        lo = start + k * panel
        piece = quad(func, lo, lo + panel, quantity=quantity, tol=tol)
        total += piece.value
        error += piece.error
        last = abs(piece.value)
        if last <= 0.01 * tol.allowed(total):
            quiet += 1
            if quiet >= patience:
                return Estimate(total, error + last)
        else:
            quiet = 0
    raise NumericalError(quantity, achieved=last, tolerance=tol.allowed(total))


def log_scale(
    func: Callable[[float], float],
    lo: float,
    hi: float,
    *,
    quantity: str,
    tol: Tolerance | None = None,
) -> Estimate:
    """Integrate func over [lo, hi] with 0 < lo < hi through the substitution u = e^w."""
    if lo <= 0 or hi <= lo:
        raise ParameterError(f"log_scale needs 0 < lo < hi, got [{lo}, {hi}].")

    def integrand(w: float) -> float:
        u = math.exp(w)
        return func(u) * u

    return quad(integrand, math.log(lo), math.log(hi), quantity=quantity, tol=tol)


def _check(quantity: str, value: float, error: float, tol: Tolerance, flagged: bool) -> None:
    if not math.isfinite(value) or not math.isfinite(error):
        raise NumericalError(quantity, achieved=math.inf, tolerance=tol.allowed(0.0))
    if flagged and error > ROUNDOFF_SLACK * tol.allowed(value):
        raise NumericalError(quantity, achieved=error, tolerance=tol.allowed(value))
