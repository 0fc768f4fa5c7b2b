"""Path-free numerical checks of the integral lemmas and second-moment limits.

Every oracle evaluates its quantity on the ladder (⌈n0/4⌉, ⌈n0/2⌉, n0) and
reports whether |value − target| shrinks along it. Time integrals over
[1, e^{nt}] are taken in log-time, where the integrands are flat.
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import special
from scipy.stats import qmc

from .analytic_constants import expected_local_time, k_alpha, k2, spectral_energy
from .exceptions import ParameterError, PreconditionError
from .functions.base import BaseTestFunction
from .quadrature import Estimate, Tolerance, dblquad, quad
from .settings import get_setting
from .signals import oracle_evaluated

# Below this b·T the kernel h uses its power series.
SERIES_CUTOFF = 1e-3
# Largest n·t whose horizon e^{nt} is representable.
MAX_LOG_HORIZON = 700.0
# Log-time depth below 0 kept for gaps that may shrink to zero.
LOG_DEPTH = 40.0
# Absolute error below which a ladder point counts as exact.
EXACT_TOLERANCE = 1e-12
INNER_TOLERANCE = Tolerance(epsabs=1e-10, epsrel=1e-8, limit=200)
GAUSS_NODES, GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(16)


@dataclass(frozen=True)
class OracleResult:
    name: str
    value: float
    target: float
    n_used: int
    m: int
    error_estimate: float
    converging: bool
    ladder: tuple[tuple[int, float], ...] = ()
    box_value: float | None = None
    correction: float | None = None
    candidates: dict[str, float] = field(default_factory=dict)
    matched: str | None = None

    @property
    def relative_error(self) -> float:
        if self.target == 0.0:
            return abs(self.value)
        return abs(self.value - self.target) / abs(self.target)

    def as_dict(self) -> dict[str, object]:
        data = asdict(self)
        data["ladder"] = [list(point) for point in self.ladder]
        data["relative_error"] = self.relative_error
        return data


def n_ladder(n0: int) -> tuple[int, int, int]:
    if n0 < 1:
        raise ParameterError(f"Ladder top must be a positive integer, got {n0}.")
    return (math.ceil(n0 / 4), math.ceil(n0 / 2), n0)


def is_converging(values: list[float], target: float) -> bool:
    """|value − target| strictly decreasing, or exact within rounding, across at least three points."""
    if len(values) < 3:
        return False
    errors = [abs(v - target) for v in values]
    exact = EXACT_TOLERANCE * max(1.0, abs(target))
    return all(later < earlier or later <= exact for earlier, later in zip(errors, errors[1:], strict=False))


def h_integral(b: float, T: float) -> float:
    """∫_0^T (1 − e^{−bu})/u du = ln(bT) + γ + E₁(bT)."""
    if not b > 0 or not T > 0:
        raise ParameterError("h_integral needs b > 0 and T > 0.")
    x = b * T
    if x < SERIES_CUTOFF:
        return sum((-1) ** (k + 1) * x**k / (k * math.factorial(k)) for k in range(1, 8))
    return math.log(x) + float(np.euler_gamma) + float(special.exp1(x))


def _log_horizon(n: int, t: float) -> float:
    if n < 1:
        raise ParameterError(f"n must be a positive integer, got {n}.")
    if t < 0:
        raise ParameterError(f"t must be non-negative, got {t}.")
    if n * t > MAX_LOG_HORIZON:
        raise ParameterError(f"n·t = {n * t:g} overflows the horizon e^(nt).")
    return n * t


def _psi(b: ArrayLike, L: ArrayLike) -> NDArray[np.float64]:
    # ∫_0^L e^{−bu} du
    b = np.asarray(b, dtype=float)
    L = np.asarray(L, dtype=float)
    bl = b * L
    with np.errstate(divide="ignore", invalid="ignore"):
        exact = -np.expm1(-bl) / np.where(b > 0, b, 1.0)
    return np.where(bl < 1e-8, L * (1.0 - 0.5 * bl), exact)


def _psi2(b: ArrayLike, c: ArrayLike, L: ArrayLike) -> NDArray[np.float64]:
    # ∫∫ e^{−b u − c v} over u, v >= 0, u + v <= L; symmetric in b and c.
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    L = np.asarray(L, dtype=float)
    lo = np.minimum(b, c)
    hi = np.maximum(b, c)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        exact = (_psi(lo, L) - np.exp(-lo * L) * _psi(hi - lo, L)) / np.where(hi > 0, hi, 1.0)
    series = 0.5 * L**2 * (1.0 - (b + c) * L / 3.0)
    return np.where(hi * L < 1e-4, series, exact)


def _psi_scalar(b: float, L: float) -> float:
    bl = b * L
    return L * (1.0 - 0.5 * bl) if bl < 1e-8 else -math.expm1(-bl) / b


def _psi2_scalar(b: float, c: float, L: float) -> float:
    lo, hi = min(b, c), max(b, c)
    if hi * L < 1e-4:
        return 0.5 * L**2 * (1.0 - (b + c) * L / 3.0)
    return (_psi_scalar(lo, L) - math.exp(-lo * L) * _psi_scalar(hi - lo, L)) / hi


def _ladder_result(
    name: str,
    n0: int,
    m: int,
    target: float,
    evaluate: Callable[[int], tuple[float, float]],
    **extra: object,
) -> OracleResult:
    points = [(n, *evaluate(n)) for n in n_ladder(n0)]
    values = [value for _, value, _ in points]
    _, value, error = points[-1]
    result = OracleResult(
        name=name,
        value=value,
        target=target,
        n_used=n0,
        m=m,
        error_estimate=abs(error),
        converging=is_converging(values, target),
        ladder=tuple((n, v) for n, v, _ in points),
        **extra,  # type: ignore[arg-type]
    )
    oracle_evaluated.send(sender=OracleResult, name=name, result=result)
    return result


# --- product lemma with exponential kernels -------------------------------


def _a1_double(log_T: float) -> Estimate:
    """∫∫ G(u1, u2) du over u1 >= 1, u2 >= 0, u1 + u2 <= T, with the x-average done in closed form."""
    if log_T == 0.0:
        return Estimate(0.0, 0.0)

    def integrand(v2: float, v1: float) -> float:
        u1, u2 = math.exp(v1), math.exp(v2)
        bracket = (
            2.0 * _psi_scalar(u2, 1.0)
            - math.exp(-min(u1, u2)) * _psi_scalar(abs(u1 - u2), 1.0)
            - math.exp(-u1) * _psi_scalar(u1 + u2, 1.0)
        )
        # G = (2/u1)·bracket, and the Jacobian of the log substitution is u1·u2.
        return 2.0 * u2 * bracket

    def upper(v1: float) -> float:
        gap = -math.expm1(v1 - log_T)
        return max(-LOG_DEPTH, log_T + math.log(gap)) if gap > 0 else -LOG_DEPTH

    return dblquad(integrand, 0.0, log_T, lambda _: -LOG_DEPTH, upper, quantity="product lemma, two gaps")


def _a1_triple(log_T: float, points: int, replicates: int, seed: int) -> Estimate:
    """Randomized Sobol average of J3 over x ∈ [−1, 1]³ with the time integral on composite Gauss nodes."""
    if log_T == 0.0:
        return Estimate(0.0, 0.0)
    panels = max(1, math.ceil(log_T))
    edges = np.linspace(0.0, log_T, panels + 1)
    half = 0.5 * np.diff(edges)
    nodes = (edges[:-1, None] + half[:, None] * (GAUSS_NODES[None, :] + 1.0)).ravel()
    weights = (half[:, None] * GAUSS_WEIGHTS[None, :]).ravel()
    u1 = np.exp(nodes)
    remaining = -np.exp(log_T) * np.expm1(nodes - log_T)

    generator = np.random.default_rng(seed)
    means = []
    for _ in range(replicates):
        sampler = qmc.Sobol(d=3, scramble=True, rng=generator)
        x = 2.0 * sampler.random_base2(int(math.log2(points))) - 1.0
        y = np.cumsum(x[:, ::-1], axis=1)[:, ::-1]
        a = np.abs(y)
        kernel = np.exp(-a[:, :1] * u1[None, :]) * _psi2(a[:, 1:2], a[:, 2:3], remaining[None, :]) * u1[None, :]
        means.append(8.0 * float(np.mean(kernel @ weights)))
    means_array = np.asarray(means)
    stderr = float(means_array.std(ddof=1) / math.sqrt(replicates)) if replicates > 1 else 0.0
    return Estimate(float(means_array.mean()), stderr)


def _qmc_options(points: int | None, replicates: int | None) -> tuple[int, int]:
    points = int(get_setting("QMC_POINTS")) if points is None else points  # type: ignore[arg-type]
    replicates = int(get_setting("QMC_REPLICATES")) if replicates is None else replicates  # type: ignore[arg-type]
    if points < 2 or points & (points - 1):
        raise ParameterError(f"QMC point counts must be powers of two, got {points}.")
    if replicates < 1:
        raise ParameterError("QMC needs at least one replicate.")
    return points, replicates


def lemma_a1_value(
    m: int, n: int, t: float, *, qmc_points: int | None = None, replicates: int | None = None, seed: int = 0
) -> OracleResult:
    """(1/n^m) ∫_{[−1,1]^m} ∫_{1<s_1<…<s_m<e^{nt}} e^{−Σ|y_i|(s_i − s_{i−1})} ds dx against (2t)^m.

    Here y_i = Σ_{j>=i} x_j and s_0 = 0.
    """
    if m not in (1, 2, 3):
        raise ParameterError(f"The product lemma oracle covers m in {{1, 2, 3}}, got {m}.")
    _log_horizon(n, t)
    points, replicates = _qmc_options(qmc_points, replicates) if m == 3 else (0, 0)

    def evaluate(k: int) -> tuple[float, float]:
        log_T = _log_horizon(k, t)
        if log_T == 0.0:
            return 0.0, 0.0
        if m == 1:
            return 2.0 / k * (h_integral(1.0, math.exp(log_T)) - h_integral(1.0, 1.0)), 0.0
        estimate = _a1_double(log_T) if m == 2 else _a1_triple(log_T, points, replicates, seed)
        return estimate.value / k**m, estimate.error / k**m

    return _ladder_result("lemma_a1", n, m, (2.0 * t) ** m, evaluate)


def lemma_a1_upper_envelope(m: int, n: int, t: float) -> float:
    """(2/n)^m (h(m, T) − h(m, 1)) h(m, T)^{m−1}, T = e^{nt}: the product bound with |y_i| <= m."""
    if m < 1:
        raise ParameterError(f"m must be positive, got {m}.")
    log_T = _log_horizon(n, t)
    if log_T == 0.0:
        return 0.0
    T = math.exp(log_T)
    return (2.0 / n) ** m * (h_integral(m, T) - h_integral(m, 1.0)) * h_integral(m, T) ** (m - 1)


# --- spectral lemma ----------------------------------------------------------


def _spectral_window(f: BaseTestFunction, lower: float, upper: float) -> Estimate:
    # ∫ |f̂(y)|² (e^{−|y|·lower} − e^{−|y|·upper}) / |y| dy
    def integrand(y: float) -> float:
        if y == 0.0:
            return 0.0
        window = math.exp(-y * lower) * -math.expm1(-y * (upper - lower))
        return float(abs(complex(f.fourier(y))) ** 2) * window / y

    cutoff = _fourier_cutoff(f)
    if cutoff == 0.0:
        return Estimate(0.0, 0.0)
    points = [p for p in (1.0 / upper, 1.0) if 0.0 < p < cutoff]
    half = quad(integrand, 0.0, cutoff, quantity=f"spectral window of {f.f_id}", points=points or None)
    return Estimate(2.0 * half.value, 2.0 * half.error)


def lemma_a2_value(f: BaseTestFunction, m: int, n: int, t: float) -> OracleResult:
    """Spectral lemma for m in {1, 2} against (∫ |f̂|² |y|^{-1} dy)^m.

    The time window is u_i > n^{−m} with Σ u_i < e^{nt}/2. For m = 1 this is
    exact. For m = 2 the box [n^{−2}, e^{nt}/2]² is used and the part of it
    beyond the simplex is bounded and reported as the correction.
    """
    if m not in (1, 2):
        raise ParameterError(f"The spectral lemma oracle covers m in {{1, 2}}, got {m}.")
    if not f.mean_zero:
        raise PreconditionError(f"Test function {f.f_id} must be mean-zero.")
    if not t > 0:
        raise ParameterError("t must be positive.")
    _log_horizon(n, t)
    target = spectral_energy(f, 1.0).value ** m
    corrections: dict[int, float] = {}

    def evaluate(k: int) -> tuple[float, float]:
        half_T = 0.5 * math.exp(_log_horizon(k, t))
        window = _spectral_window(f, float(k) ** -m, half_T)
        if m == 1:
            corrections[k] = 0.0
            return window.value, window.error
        # Outside the simplex one gap exceeds T/4.
        far = _spectral_window(f, 0.5 * half_T, half_T)
        corrections[k] = 2.0 * window.value * far.value
        return window.value**2, 2.0 * abs(window.value) * window.error + corrections[k]

    result = _ladder_result("lemma_a2", n, m, target, evaluate)
    box = result.value
    return replace(result, box_value=box, correction=corrections[n])


# --- logarithmic volume lemma ------------------------------------------------


def _a3_box(m: int, n: int, t: float) -> float:
    return t * ((n * t + m * math.log(n)) / n) ** (m - 1)


def _a3_correction(m: int, n: int, t: float, points: int, replicates: int, seed: int) -> Estimate:
    """(1/n^m)·Vol{v ∈ box : Σ e^{v_i} >= e^{nt}} in log coordinates."""
    log_T = n * t
    depth = m * math.log(n)
    if m == 1 or log_T == 0.0:
        return Estimate(0.0, 0.0)
    if m == 2:
        # With w = nt − v1 the excess in v2 is −log(1 − e^{−w}), capped by the box.
        cap = log_T + depth
        volume = quad(
            lambda w: min(-math.log(-math.expm1(-w)), cap) if w > 0 else cap,
            0.0,
            log_T,
            quantity="logarithmic volume correction",
        )
        return Estimate(volume.value / n**2, volume.error / n**2)
    lower = np.array([0.0] + [-depth] * (m - 1))
    upper = np.full(m, log_T)
    box_volume = float(np.prod(upper - lower))
    generator = np.random.default_rng(seed)
    fractions = []
    for _ in range(replicates):
        sampler = qmc.Sobol(d=m, scramble=True, rng=generator)
        v = qmc.scale(sampler.random_base2(int(math.log2(points))), lower, upper)
        fractions.append(float(np.mean(np.exp(v - log_T).sum(axis=1) >= 1.0)))
    fraction = np.asarray(fractions)
    stderr = float(fraction.std(ddof=1) / math.sqrt(replicates)) if replicates > 1 else 0.0
    scale = box_volume / n**m
    return Estimate(scale * float(fraction.mean()), scale * stderr)


def lemma_a3_value(
    m: int, n: int, t: float, *, qmc_points: int | None = None, replicates: int | None = None, seed: int = 0
) -> OracleResult:
    """(1/n^m) ∫ Π u_i^{−1} du against t^m.

    The region is u_1 ∈ [1, e^{nt}], u_i ∈ [n^{−m}, e^{nt}] for i >= 2 and
    Σ u_i < e^{nt}. The box part is closed-form and the simplex constraint is
    subtracted as a correction: exact for m = 2, quasi-Monte-Carlo for m >= 3.
    """
    if m not in (1, 2, 3, 4):
        raise ParameterError(f"The logarithmic volume oracle covers m <= 4, got {m}.")
    if not t > 0:
        raise ParameterError("t must be positive.")
    _log_horizon(n, t)
    points, replicates = _qmc_options(qmc_points, replicates) if m >= 3 else (0, 0)
    corrections: dict[int, float] = {}

    def evaluate(k: int) -> tuple[float, float]:
        _log_horizon(k, t)
        correction = _a3_correction(m, k, t, points, replicates, seed)
        corrections[k] = correction.value
        return _a3_box(m, k, t) - correction.value, correction.error

    result = _ladder_result("lemma_a3", n, m, t**m, evaluate)
    return replace(result, box_value=_a3_box(m, n, t), correction=corrections[n])


# --- second moments --------------------------------------------------------


def _fourier_cutoff(f: BaseTestFunction, step: float = 0.05, limit: float = 200.0, threshold: float = 1e-8) -> float:
    """Frequency beyond which |f̂| stays below `threshold` times its maximum on the scan."""
    grid = np.arange(0.0, limit + step, step)
    magnitude = np.abs(np.asarray(f.fourier(grid)))
    peak = float(magnitude.max(initial=0.0))
    if peak == 0.0:
        return 0.0
    above = np.flatnonzero(magnitude >= threshold * peak)
    return float(min(grid[above[-1]] + step, limit))


def _spectral_pair_integral(
    f: BaseTestFunction,
    kernel: Callable[[float, float], float],
    log_low: float,
    quantity: str,
) -> Estimate:
    """2·∫_{y1>0} ∫ Re[f̂(y1 − y2) f̂(y2)] kernel(y1, y2) dy2 dy1, with y1 = e^w.

    Real f gives f̂(−u) = conj f̂(u), so the half y1 < 0 mirrors y1 > 0.
    """
    cutoff = _fourier_cutoff(f)
    if cutoff == 0.0:
        return Estimate(0.0, 0.0)
    inner_errors: list[float] = []

    def inner(w: float) -> float:
        y1 = math.exp(w)
        lo, hi = max(-cutoff, y1 - cutoff), min(cutoff, y1 + cutoff)

        def integrand(y2: float) -> float:
            product = complex(f.fourier(y1 - y2)) * complex(f.fourier(y2))
            return product.real * kernel(y1, y2)

        points = [p for p in (0.0, y1) if lo < p < hi]
        result = quad(integrand, lo, hi, quantity=quantity, tol=INNER_TOLERANCE, points=points or None)
        inner_errors.append(result.error * y1)
        return result.value * y1

    log_high = math.log(2.0 * cutoff)
    # The kernel changes regime 12 log-units above log_low and f̂ varies on the unit scale.
    breaks = sorted(p for p in {log_low + 12.0, 0.0} if log_low < p < log_high)
    outer = quad(inner, log_low, log_high, quantity=quantity, points=breaks or None)
    span = log_high - log_low
    return Estimate(2.0 * outer.value, 2.0 * (outer.error + max(inner_errors, default=0.0) * span))


def _theorem2_moment(f: BaseTestFunction, n: int, t: float, start: float) -> Estimate:
    log_T = _log_horizon(n, t)
    length = math.exp(log_T) - start
    if length <= 0:
        raise ParameterError("start must lie before the horizon e^(nt).")

    def kernel(y1: float, y2: float) -> float:
        return math.exp(-y1 * start) * _psi2_scalar(y1, abs(y2), length)

    pair = _spectral_pair_integral(f, kernel, -math.log(length) - 12.0, f"second moment of {f.f_id} at n={n}")
    scale = 2.0 / n / (4.0 * math.pi**2)
    return Estimate(scale * pair.value, scale * pair.error)


def second_moment_theorem2(f: BaseTestFunction, n: int, t: float, start: float = 1.0) -> OracleResult:
    """E(F_n)² for F_n = (1/√n) ∫ f(X(s)) ds over [start, e^{nt}], α = 1, against K₂·t.

    With y1 = x1 + x2 and y2 = x2 the time integrals close to
    e^{−|y1|·start}·Ψ(|y1|, |y2|; e^{nt} − start), where Ψ integrates
    e^{−b u − c v} over the triangle u, v >= 0, u + v <= L.
    """
    if not f.mean_zero:
        raise PreconditionError(f"Test function {f.f_id} must be mean-zero.")
    if not t > 0 or start < 0:
        raise ParameterError("second_moment_theorem2 needs t > 0 and start >= 0.")
    target = k2(f).value * t

    def evaluate(k: int) -> tuple[float, float]:
        estimate = _theorem2_moment(f, k, t, start)
        return estimate.value, estimate.error

    return _ladder_result("second_moment_theorem2", n, 2, target, evaluate)


def _rosen_moment(f: BaseTestFunction, alpha: float, n: int, t: float) -> Estimate:
    length = n * t

    def kernel(y1: float, y2: float) -> float:
        return _psi2_scalar(y1**alpha, abs(y2) ** alpha, length)

    log_low = -math.log(length) / alpha - 12.0
    pair = _spectral_pair_integral(f, kernel, log_low, f"local-time second moment of {f.f_id} at n={n}")
    scale = 2.0 * n ** ((1.0 - alpha) / alpha) / (4.0 * math.pi**2)
    return Estimate(scale * pair.value, scale * pair.error)


def rosen_candidates(f: BaseTestFunction, alpha: float, t: float) -> dict[str, float]:
    """The two candidate limits of the local-time second moment."""
    spectral = k_alpha(f, alpha).value * math.pi
    local_time = expected_local_time(alpha, t)
    return {
        "one_over_pi": spectral / math.pi * local_time,
        "one_over_pi_squared": spectral / math.pi**2 * local_time,
    }


def second_moment_rosen(
    f: BaseTestFunction, alpha: float, n: int, t: float, *, match_tolerance: float = 0.10
) -> OracleResult:
    """E(F_n)² for F_n = n^{(1−α)/(2α)} ∫_0^{nt} f(X(s)) ds, 1 < α < 2.

    The value is compared against both candidate constants. A candidate is
    matched when it is the only one within `match_tolerance` relative error.
    """
    if not 1.0 < alpha < 2.0:
        raise ParameterError(f"second_moment_rosen needs 1 < alpha < 2, got {alpha}.")
    if not f.mean_zero:
        raise PreconditionError(f"Test function {f.f_id} must be mean-zero.")
    if not t > 0 or n < 1:
        raise ParameterError("second_moment_rosen needs n >= 1 and t > 0.")
    candidates = rosen_candidates(f, alpha, t)
    ladder = [(k, _rosen_moment(f, alpha, k, t)) for k in n_ladder(n)]
    value = ladder[-1][1].value
    errors = {name: abs(value - target) / abs(target) for name, target in candidates.items() if target}
    close = [name for name, error in errors.items() if error <= match_tolerance]
    matched = close[0] if len(close) == 1 else None
    target = candidates[matched or min(errors, key=errors.__getitem__)] if errors else 0.0
    values = [estimate.value for _, estimate in ladder]
    result = OracleResult(
        name="second_moment_rosen",
        value=value,
        target=target,
        n_used=n,
        m=2,
        error_estimate=abs(ladder[-1][1].error),
        converging=is_converging(values, target),
        ladder=tuple((k, estimate.value) for k, estimate in ladder),
        candidates=candidates,
        matched=matched,
    )
    oracle_evaluated.send(sender=OracleResult, name=result.name, result=result)
    return result


def rosen_moment_at(f: BaseTestFunction, alpha: float, n: int, t: float) -> Estimate:
    """E(F_n)² of the local-time normalization at a single n."""
    if not 1.0 < alpha < 2.0:
        raise ParameterError(f"rosen_moment_at needs 1 < alpha < 2, got {alpha}.")
    return _rosen_moment(f, alpha, n, t)


def theorem2_moment_at(f: BaseTestFunction, n: int, t: float, start: float = 0.0) -> Estimate:
    """E(F_n)² of the second-law normalization at a single n."""
    return _theorem2_moment(f, n, t, start)
