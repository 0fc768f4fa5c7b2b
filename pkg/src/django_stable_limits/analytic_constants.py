"""Constants of the occupation-time limit laws.

Closed forms are used where they exist. Everything else is computed by adaptive
quadrature with the error estimate attached. Fourier transforms follow
f̂(u) = ∫ e^{iux} f(x) dx.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import special

from .exceptions import ParameterError, PreconditionError, UnsupportedRegime
from .functions.base import BaseTestFunction, fourier_by_quadrature
from .quadrature import Estimate, Tolerance, default_tolerance, half_line, log_scale, quad
from .stable_sim import StabilityIndex, validate_alpha

# e^{-u^α} is below 1e-18 beyond u = DENSITY_CUTOFF^{1/α}.
DENSITY_CUTOFF = 18.0 * math.log(10.0)


def fourier_transform(f: BaseTestFunction, u: float) -> complex:
    """f̂(u): analytic for the built-ins, quadrature-backed otherwise."""
    return complex(f.fourier(u))


def fourier_quadrature(f: BaseTestFunction, u: float) -> tuple[complex, float]:
    """f̂(u) by oscillatory quadrature regardless of any closed form, with its error."""
    return fourier_by_quadrature(f, u)


def k1(f: BaseTestFunction) -> float:
    """(1/π) ∫ f, the mean of the exponential limit per unit t."""
    return f.integral / math.pi


def _require_mean_zero(f: BaseTestFunction, quantity: str) -> None:
    if not f.mean_zero:
        raise PreconditionError(f"{quantity} needs a mean-zero test function, {f.f_id} has ∫f = {f.integral:.6g}.")


def spectral_energy(f: BaseTestFunction, power: float, tol: Tolerance | None = None) -> Estimate:
    """∫ |f̂(u)|² |u|^{-power} du over the real line.

    The integrand is bounded at the origin because |f̂|² vanishes quadratically
    for mean-zero f and power <= 2.
    """

    def integrand(u: float) -> float:
        if u == 0.0:
            return 0.0
        return float(abs(complex(f.fourier(u))) ** 2) * u ** (-power)

    half = half_line(integrand, quantity=f"spectral energy of {f.f_id} (power {power:g})", tol=tol)
    return Estimate(2.0 * half.value, 2.0 * half.error)


def k2(f: BaseTestFunction) -> Estimate:
    """(1/π²) ∫ |f̂(x)|² |x|^{-1} dx, the second-law variance constant."""
    _require_mean_zero(f, "k2")
    energy = spectral_energy(f, 1.0)
    return Estimate(energy.value / math.pi**2, energy.error / math.pi**2)


def k_alpha(f: BaseTestFunction, alpha: float) -> Estimate:
    """(1/π) ∫ |f̂(x)|² |x|^{-α} dx; at α = 1 this is π·k2(f)."""
    _require_mean_zero(f, "k_alpha")
    if not 1.0 <= alpha <= 2.0:
        raise ParameterError(f"k_alpha needs 1 <= alpha <= 2, got {alpha}.")
    energy = spectral_energy(f, alpha)
    return Estimate(energy.value / math.pi, energy.error / math.pi)


def _inverse_fourier(alpha: float, x: float, tol: Tolerance | None = None) -> Estimate:
    # (1/π) ∫_0^∞ cos(xu) e^{-u^α} du
    upper = DENSITY_CUTOFF ** (1.0 / alpha)
    quantity = f"stable density alpha={alpha:g} at x={x:g}"
    x = abs(x)
    if x == 0.0:
        result = quad(lambda u: math.exp(-(u**alpha)), 0.0, upper, quantity=quantity, tol=tol)
    else:
        result = quad(lambda u: math.exp(-(u**alpha)), 0.0, upper, quantity=quantity, tol=tol, weight="cos", wvar=x)
    return Estimate(result.value / math.pi, result.error / math.pi)


def stable_density(alpha: float, x: float) -> Estimate:
    """p_1(x), the density of X(1), by oscillatory inverse-Fourier quadrature."""
    alpha = validate_alpha(alpha)
    if not math.isfinite(x):
        raise ParameterError("stable_density needs a finite x.")
    return _inverse_fourier(alpha, x)


def density_at_zero(alpha: float) -> float:
    """p_1(0) = Γ(1 + 1/α)/π."""
    return float(special.gamma(1.0 + 1.0 / alpha)) / math.pi


def density_mass(alpha: float, a: float, b: float) -> Estimate:
    """∫_a^b p_1(x) dx by integrating the quadrature density."""
    alpha = validate_alpha(alpha)
    if not a < b:
        raise ParameterError("density_mass needs a < b.")
    points = [0.0] if a < 0.0 < b else None
    return quad(
        lambda x: _inverse_fourier(alpha, x).value,
        a,
        b,
        quantity=f"stable mass alpha={alpha:g} on [{a:g}, {b:g}]",
        points=points,
    )


def interval_probability(alpha: float, b: float) -> Estimate:
    """P(|X(1)| <= b) = (2/π) ∫_0^∞ sin(bu) e^{-u^α} / u du, straight from the characteristic function."""
    alpha = validate_alpha(alpha)
    if not b > 0:
        raise ParameterError("interval_probability needs b > 0.")
    upper = DENSITY_CUTOFF ** (1.0 / alpha)
    knee = min(1.0 / b, upper)
    quantity = f"interval probability alpha={alpha:g} b={b:g}"
    head = quad(lambda u: math.sin(b * u) / u * math.exp(-(u**alpha)) if u else b, 0.0, knee, quantity=quantity)
    tail = Estimate(0.0, 0.0)
    if knee < upper:
        tail = quad(lambda u: math.exp(-(u**alpha)) / u, knee, upper, quantity=quantity, weight="sin", wvar=b)
    scale = 2.0 / math.pi
    return Estimate(scale * (head.value + tail.value), scale * (head.error + tail.error))


def rosen_c(alpha: float) -> Estimate:
    """c = ∫_0^∞ (p_1(0) − p_1(s^{-1/α})) s^{-1/α} ds for 1 < α < 3.

    With v = s^{-1/α} this is α ∫_0^∞ (p_1(0) − p_1(v)) v^{-α} dv. On v <= 1 the
    difference is integrated directly as (2/π) ∫ sin²(vu/2) e^{-u^α} du. On
    v > 1 the p_1(0) part is integrated analytically.
    """
    if not 1.0 < alpha < 3.0:
        raise ParameterError(f"rosen_c needs 1 < alpha < 3, got {alpha}.")
    upper = DENSITY_CUTOFF ** (1.0 / alpha)
    p0 = density_at_zero(alpha)
    inner_tol = Tolerance(epsabs=1e-12, epsrel=1e-10, limit=400)

    def difference(v: float) -> float:
        result = quad(
            lambda u: 2.0 * math.sin(0.5 * v * u) ** 2 * math.exp(-(u**alpha)),
            0.0,
            upper,
            quantity="rosen_c inner difference",
            tol=inner_tol,
        )
        return result.value / math.pi

    near = quad(lambda v: difference(v) * v ** (-alpha) if v else 0.0, 0.0, 1.0, quantity="rosen_c near part")
    far = quad(
        lambda v: _inverse_fourier(alpha, v, inner_tol).value * v ** (-alpha),
        1.0,
        math.inf,
        quantity="rosen_c far part",
    )
    value = alpha * (near.value + p0 / (alpha - 1.0) - far.value)
    return Estimate(value, alpha * (near.error + far.error))


def rosen_c_closed_form(alpha: float) -> float:
    """1 / (2 Γ(α) sin(π(α−1)/2)), from the Fourier form of p_1(0) − p_1(v)."""
    if not 1.0 < alpha < 3.0:
        raise ParameterError(f"rosen_c needs 1 < alpha < 3, got {alpha}.")
    return 1.0 / (2.0 * float(special.gamma(alpha)) * math.sin(0.5 * math.pi * (alpha - 1.0)))


def _energy_alpha(alpha: float) -> None:
    if not 1.0 < alpha <= 2.0:
        raise ParameterError(f"energy_form needs 1 < alpha <= 2, got {alpha}.")


def energy_form(f: BaseTestFunction, alpha: float) -> Estimate:
    """−∬ f(x) f(y) |x−y|^{α−1} dx dy over [−R, R]² with R the support radius."""
    _energy_alpha(alpha)
    _require_mean_zero(f, "energy_form")
    radius = f.support_radius
    if radius == 0.0:
        return Estimate(0.0, 0.0)
    power = alpha - 1.0
    kinks = [p for p in f.breakpoints if -radius < p < radius]
    inner_tol = Tolerance(epsabs=1e-11, epsrel=1e-9, limit=200)
    inner_errors: list[float] = []

    def inner(y: float) -> float:
        points = sorted({y, *kinks})
        result = quad(
            lambda x: float(f.evaluate(x)) * abs(x - y) ** power,
            -radius,
            radius,
            quantity="energy form inner integral",
            tol=inner_tol,
            points=points,
        )
        inner_errors.append(result.error)
        return result.value

    outer = quad(
        lambda y: float(f.evaluate(y)) * inner(y),
        -radius,
        radius,
        quantity=f"energy form of {f.f_id}",
        points=kinks or None,
    )
    inner_error = max(inner_errors, default=0.0) * 2.0 * radius * float(np.max(np.abs(f.evaluate(kinks or [0.0]))))
    return Estimate(-outer.value, outer.error + inner_error)


def energy_form_monte_carlo(
    f: BaseTestFunction, alpha: float, num_points: int = 10_000_000, seed: int = 0, chunk: int = 1_000_000
) -> Estimate:
    """Plain Monte-Carlo estimate of the energy form with its standard error."""
    _energy_alpha(alpha)
    radius = f.support_radius
    if radius == 0.0:
        return Estimate(0.0, 0.0)
    rng = np.random.default_rng(seed)
    total = 0.0
    total_sq = 0.0
    remaining = num_points
    while remaining > 0:
        size = min(chunk, remaining)
        x = rng.uniform(-radius, radius, size)
        y = rng.uniform(-radius, radius, size)
        sample = -f.evaluate(x) * f.evaluate(y) * np.abs(x - y) ** (alpha - 1.0)
        total += float(sample.sum())
        total_sq += float((sample**2).sum())
        remaining -= size
    volume = (2.0 * radius) ** 2
    mean = total / num_points
    variance = max(total_sq / num_points - mean**2, 0.0)
    return Estimate(volume * mean, volume * math.sqrt(variance / num_points))


def expected_local_time(alpha: float, t: float) -> float:
    """E L_t(0) = α Γ(1+1/α) / (π(α−1)) · t^{1−1/α}."""
    if not StabilityIndex(alpha).has_local_time:
        raise UnsupportedRegime(alpha, "E L_t(0) diverges; local time exists only for alpha > 1")
    if not t > 0:
        raise ParameterError("expected_local_time needs t > 0.")
    gamma = float(special.gamma(1.0 + 1.0 / alpha))
    return alpha * gamma / (math.pi * (alpha - 1.0)) * t ** (1.0 - 1.0 / alpha)


def expected_occupation(f: BaseTestFunction, alpha: float, horizon: float) -> Estimate:
    """E ∫_0^T f(X(s)) ds for X(0) = 0.

    Equal to (1/π) ∫_0^∞ Re f̂(u) (1 − e^{−T u^α}) u^{−α} du. The low
    frequencies, where the integrand changes on the scale T^{−1/α}, are
    integrated in log scale.
    """
    alpha = validate_alpha(alpha)
    if not horizon > 0:
        raise ParameterError(f"expected_occupation needs a positive horizon, got {horizon}.")

    def integrand(u: float) -> float:
        return complex(f.fourier(u)).real * -math.expm1(-horizon * u**alpha) / u**alpha

    quantity = f"expected occupation of {f.f_id} up to T={horizon:g}"
    knee = horizon ** (-1.0 / alpha)
    lo = 1e-6 * min(knee, 1.0)
    head = complex(f.fourier(0.0)).real * horizon * lo
    middle = log_scale(integrand, lo, max(1.0, 10.0 * knee), quantity=quantity)
    tail = half_line(integrand, quantity=quantity, start=max(1.0, 10.0 * knee))
    total = head + middle.value + tail.value
    return Estimate(total / math.pi, (abs(head) + middle.error + tail.error) / math.pi)


def l2_norm_squared(f: BaseTestFunction) -> Estimate:
    radius = f.support_radius
    if radius == 0.0:
        return Estimate(0.0, 0.0)
    kinks = [p for p in f.breakpoints if -radius < p < radius]
    return quad(
        lambda x: float(f.evaluate(x)) ** 2, -radius, radius, quantity=f"L2 norm of {f.f_id}", points=kinks or None
    )


def plancherel_check(f: BaseTestFunction) -> float:
    """Relative gap between (1/2π) ∫ |f̂|² and ∫ f²."""
    spatial = l2_norm_squared(f).value
    spectral = spectral_energy(f, 0.0).value / (2.0 * math.pi)
    if spatial == 0.0:
        return abs(spectral)
    return abs(spectral - spatial) / spatial


@dataclass(frozen=True)
class RosenIdentityReport:
    alpha: float
    f_id: str
    g_id: str
    ratio_f: float
    ratio_f_error: float
    ratio_g: float
    ratio_g_error: float
    relative_difference: float
    two_c: float
    two_c_error: float
    relative_to_two_c: float

    def as_dict(self) -> dict[str, float | str]:
        return asdict(self)


def _ratio(h: BaseTestFunction, alpha: float) -> Estimate:
    spectral = k_alpha(h, alpha)
    energy = energy_form(h, alpha)
    if energy.value <= 0.0:
        raise PreconditionError(f"Energy form of {h.f_id} is not positive ({energy.value:.3g}).")
    ratio = spectral.value / energy.value
    error = abs(ratio) * (spectral.error / abs(spectral.value) + energy.error / energy.value)
    return Estimate(ratio, error)


def rosen_identity(f: BaseTestFunction, g: BaseTestFunction, alpha: float) -> RosenIdentityReport:
    """Compare k_alpha(h)/energy_form(h) across two test functions and against 2c.

    Both ratios should agree with each other and with 2·rosen_c(alpha), which ties
    the 1/π normalization of k_alpha to the energy-form constant.
    """
    if not 1.0 < alpha < 2.0:
        raise ParameterError(f"rosen_identity needs 1 < alpha < 2, got {alpha}.")
    for h in (f, g):
        _require_mean_zero(h, "rosen_identity")
    ratio_f = _ratio(f, alpha)
    ratio_g = ratio_f if g is f else _ratio(g, alpha)
    c = rosen_c(alpha)
    two_c = 2.0 * c.value
    return RosenIdentityReport(
        alpha=alpha,
        f_id=f.f_id,
        g_id=g.f_id,
        ratio_f=ratio_f.value,
        ratio_f_error=ratio_f.error,
        ratio_g=ratio_g.value,
        ratio_g_error=ratio_g.error,
        relative_difference=abs(ratio_f.value - ratio_g.value) / abs(ratio_g.value),
        two_c=two_c,
        two_c_error=2.0 * c.error,
        relative_to_two_c=abs(ratio_f.value - two_c) / two_c,
    )
