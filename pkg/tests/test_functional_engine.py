from __future__ import annotations

import math

import numpy as np
import pytest

from django_stable_limits import signals
from django_stable_limits.analytic_constants import expected_local_time, expected_occupation
from django_stable_limits.exceptions import ParameterError, PreconditionError, UnsupportedRegime
from django_stable_limits.functional_engine import (
    FunctionalSample,
    Normalization,
    first_law_sample,
    functional_ensemble,
    horizon_for,
    local_time_ensemble,
    local_time_estimate,
    logn_sample,
    normalizing_factor,
    occupation_integral,
    rosen_sample,
    second_law_sample,
    variance_decay,
)
from django_stable_limits.functions.builtin import Gauss, GaussDerivative, HatPair, Scaled, Sum, ZeroFunction
from django_stable_limits.stable_sim import (
    Discretization,
    GridKind,
    StablePath,
    TimeGrid,
    build_grid,
    path_seed,
    simulate_hybrid_path,
)

SMALL = Discretization(fine_step=0.1, coarse_ratio=0.05, block_size=64)


def _ramp() -> StablePath:
    grid = TimeGrid(np.array([0.0, 1.0, 2.0, 3.0]))
    return StablePath(grid=grid, values=np.array([0.0, 1.0, 2.0, 3.0]), alpha=1.0, seed=0)


class TestNormalizations:
    def test_horizons(self):
        assert horizon_for("first_law", 3, 2.0) == pytest.approx(math.exp(6.0))
        assert horizon_for(Normalization.SECOND_LAW, 1, 1.0) == pytest.approx(math.e)
        assert horizon_for("rosen", 100, 0.5) == 50.0
        assert horizon_for("log_n", 10, 2.0) == 20.0

    def test_factors(self):
        assert normalizing_factor("first_law", 1.0, 4) == 0.25
        assert normalizing_factor("second_law", 1.0, 4) == 0.5
        assert normalizing_factor("rosen", 1.5, 64) == pytest.approx(64 ** (-1.0 / 3.0))
        assert normalizing_factor("rosen", 2.0, 16) == pytest.approx(0.25)
        assert normalizing_factor("log_n", 1.0, 100) == pytest.approx(1.0 / math.log(100))

    def test_sample_horizon(self):
        sample = FunctionalSample(0.0, Normalization.ROSEN, 10, 2.0, 1.5, "hat")
        assert sample.horizon == 20.0


class TestOccupationIntegral:
    def test_left_endpoint_sum(self):
        f = Gauss()
        expected = float(f.evaluate(0.0) + f.evaluate(1.0) + f.evaluate(2.0))
        assert occupation_integral(_ramp(), f, 0.0, 3.0) == pytest.approx(expected)

    def test_partial_range(self):
        f = Gauss()
        expected = float(0.5 * f.evaluate(0.0) + f.evaluate(1.0) + 0.5 * f.evaluate(2.0))
        assert occupation_integral(_ramp(), f, 0.5, 2.5) == pytest.approx(expected)

    def test_linear_in_f_on_one_path(self):
        f, g = Gauss(), GaussDerivative()
        path = simulate_hybrid_path(1.0, 300.0, SMALL, seed=21, radius=SMALL.radius_for(f.support_radius))
        combined = Sum(Scaled(f, 2.5), Scaled(g, -0.75))
        expected = 2.5 * occupation_integral(path, f, 0.0, 300.0) - 0.75 * occupation_integral(path, g, 0.0, 300.0)
        assert occupation_integral(path, combined, 0.0, 300.0) == pytest.approx(expected, rel=1e-12, abs=1e-12)

    def test_additive_over_adjacent_ranges(self):
        f = Gauss()
        path = simulate_hybrid_path(1.0, 300.0, SMALL, seed=22, radius=SMALL.radius_for(f.support_radius))
        middle = float(path.grid.points[np.searchsorted(path.grid.points, 100.0)])
        split = occupation_integral(path, f, 1.0, middle) + occupation_integral(path, f, middle, 250.0)
        assert split == pytest.approx(occupation_integral(path, f, 1.0, 250.0), rel=1e-12)

    def test_rejects_reversed_limits(self):
        with pytest.raises(ParameterError, match="a < b"):
            occupation_integral(_ramp(), Gauss(), 2.0, 1.0)

    def test_rejects_range_outside_grid(self):
        with pytest.raises(ParameterError, match="not inside"):
            occupation_integral(_ramp(), Gauss(), 0.0, 4.0)


class TestPreconditions:
    def test_first_law_needs_cauchy(self):
        with pytest.raises(ParameterError, match="alpha=1"):
            first_law_sample(1.5, 3, 1.0, Gauss(), seed=0, discretization=SMALL)

    def test_second_law_needs_mean_zero(self):
        with pytest.raises(PreconditionError, match="mean-zero"):
            second_law_sample(1.0, 3, 1.0, Gauss(), seed=0, discretization=SMALL)

    def test_rosen_needs_alpha_above_one(self):
        with pytest.raises(ParameterError, match="1 < alpha <= 2"):
            rosen_sample(1.0, 10, 1.0, HatPair(), seed=0, discretization=SMALL)

    def test_rosen_needs_mean_zero(self):
        with pytest.raises(PreconditionError):
            rosen_sample(1.5, 10, 1.0, Gauss(), seed=0, discretization=SMALL)

    def test_log_n_needs_n_three(self):
        with pytest.raises(ParameterError, match="n >= 3"):
            logn_sample(1.0, 2, 1.0, Gauss(), seed=0, discretization=SMALL)

    def test_start_before_horizon(self):
        with pytest.raises(ParameterError, match="before the horizon"):
            logn_sample(1.0, 3, 1.0, Gauss(), seed=0, discretization=SMALL, start=3.0)

    def test_rejects_bad_n_and_t(self):
        with pytest.raises(ParameterError, match="positive integer"):
            first_law_sample(1.0, 0, 1.0, Gauss(), seed=0)
        with pytest.raises(ParameterError, match="t must be positive"):
            first_law_sample(1.0, 2, 0.0, Gauss(), seed=0)


class TestSamples:
    def test_first_law_sample(self):
        sample = first_law_sample(1.0, 3, 1.0, Gauss(), seed=5, discretization=SMALL)
        assert sample.normalization is Normalization.FIRST_LAW
        assert sample.f_id == "gauss"
        assert sample.value > 0.0
        assert sample.value == first_law_sample(1.0, 3, 1.0, Gauss(), seed=5, discretization=SMALL).value

    def test_first_law_sample_is_scaled_occupation(self):
        f, n = Gauss(), 3
        horizon = math.exp(n * 1.0)
        sample = first_law_sample(1.0, n, 1.0, f, seed=9, discretization=SMALL)
        path = simulate_hybrid_path(1.0, horizon, SMALL, seed=9, radius=SMALL.radius_for(f.support_radius))
        assert sample.value * n == pytest.approx(occupation_integral(path, f, 0.0, horizon), rel=1e-12)

    def test_second_law_sample_is_finite(self):
        sample = second_law_sample(1.0, 3, 1.0, GaussDerivative(), seed=6, discretization=SMALL)
        assert math.isfinite(sample.value)

    def test_rosen_sample(self):
        sample = rosen_sample(1.5, 20, 1.0, HatPair(), seed=7, discretization=SMALL)
        assert sample.alpha == 1.5
        assert sample.horizon == 20.0

    def test_zero_function_gives_zero(self):
        assert logn_sample(1.0, 5, 1.0, ZeroFunction(), seed=1, discretization=SMALL).value == 0.0

    @pytest.mark.parametrize("mode", [GridKind.UNIFORM, GridKind.GEOMETRIC])
    def test_fixed_grid_modes(self, mode: GridKind):
        discretization = Discretization(fine_step=0.1, coarse_ratio=0.05, grid_mode=mode)
        sample = logn_sample(1.0, 5, 1.0, Gauss(), seed=2, discretization=discretization)
        assert sample.value > 0.0


class TestEnsemble:
    def test_matches_single_samples(self):
        values = functional_ensemble("log_n", 1.0, 5, 1.0, Gauss(), num_paths=6, master_seed=11, discretization=SMALL)
        for k in (0, 5):
            single = logn_sample(1.0, 5, 1.0, Gauss(), seed=path_seed(11, k), discretization=SMALL)
            assert values[k] == single.value

    def test_independent_of_workers_and_batching(self):
        kwargs = {"num_paths": 12, "master_seed": 3, "discretization": SMALL}
        serial = functional_ensemble("first_law", 1.0, 3, 1.0, Gauss(), workers=1, batch_size=5, **kwargs)
        parallel = functional_ensemble("first_law", 1.0, 3, 1.0, Gauss(), workers=2, batch_size=4, **kwargs)
        assert np.array_equal(serial, parallel)

    def test_sends_signals(self):
        received: list[tuple[str, dict]] = []

        def pre(sender, **kwargs):
            received.append(("pre", kwargs))

        def post(sender, **kwargs):
            received.append(("post", kwargs))

        signals.pre_ensemble.connect(pre, dispatch_uid="test_pre_ensemble")
        signals.post_ensemble.connect(post, dispatch_uid="test_post_ensemble")
        try:
            functional_ensemble("log_n", 1.0, 4, 1.0, Gauss(), num_paths=3, master_seed=0, discretization=SMALL)
        finally:
            signals.pre_ensemble.disconnect(dispatch_uid="test_pre_ensemble")
            signals.post_ensemble.disconnect(dispatch_uid="test_post_ensemble")
        assert [name for name, _ in received] == ["pre", "post"]
        assert received[0][1]["num_paths"] == 3
        assert received[1][1]["values"].shape == (3,)

    def test_rejects_empty_ensemble(self):
        with pytest.raises(ParameterError, match="num_paths"):
            functional_ensemble("log_n", 1.0, 4, 1.0, Gauss(), num_paths=0, master_seed=0)

    def test_rejects_bad_batch_size(self):
        with pytest.raises(ParameterError, match="batch_size"):
            functional_ensemble("log_n", 1.0, 4, 1.0, Gauss(), num_paths=2, master_seed=0, batch_size=0)


class TestLocalTime:
    def test_estimate_counts_time_near_zero(self):
        grid = TimeGrid(np.array([0.0, 1.0, 2.0, 3.0]))
        path = StablePath(grid=grid, values=np.array([0.0, 0.05, 1.0, 0.0]), alpha=2.0, seed=0)
        # Two unit intervals start inside the band |x| <= 0.1.
        assert local_time_estimate(path, 3.0, 0.1) == pytest.approx(2.0 / 0.2)

    def test_estimate_unsupported_for_cauchy(self):
        path = StablePath(grid=build_grid(1.0, 0.5), values=np.zeros(3), alpha=1.0, seed=0)
        with pytest.raises(UnsupportedRegime):
            local_time_estimate(path, 1.0, 0.1)

    def test_brownian_mean(self):
        values = local_time_ensemble(2.0, 1.0, epsilon=0.03, num_paths=400, master_seed=1, step=1e-3)
        assert values.mean() == pytest.approx(expected_local_time(2.0, 1.0), rel=0.15)

    def test_bandwidth_halving_is_stable(self):
        kwargs = {"num_paths": 1000, "master_seed": 4, "step": 1e-4}
        wide = local_time_ensemble(1.5, 1.0, epsilon=0.01, **kwargs).mean()
        narrow = local_time_ensemble(1.5, 1.0, epsilon=0.005, **kwargs).mean()
        assert abs(narrow - wide) <= 0.05 * wide

    def test_ensemble_validation(self):
        with pytest.raises(UnsupportedRegime):
            local_time_ensemble(1.0, 1.0, num_paths=10)
        with pytest.raises(ParameterError, match="epsilon"):
            local_time_ensemble(1.5, 1.0, epsilon=0.0, num_paths=10)


class TestVarianceDecay:
    def test_structure(self):
        result = variance_decay(Gauss(), 0.5, [3, 4], 1.0, num_paths=20, master_seed=0, discretization=SMALL)
        assert result.n_values == (3, 4)
        assert len(result.variances) == 2
        assert all(v >= 0.0 for v in result.variances)
        assert math.isfinite(result.slope)

    def test_needs_two_values(self):
        with pytest.raises(ParameterError, match="two values"):
            variance_decay(Gauss(), 0.5, [3], 1.0, num_paths=10, master_seed=0)


class TestGridBias:
    def test_hybrid_mean_matches_finite_horizon_mean(self):
        f, n, num_paths = Gauss(), 8, 2000
        values = functional_ensemble(
            "first_law", 1.0, n, 1.0, f, num_paths, master_seed=17, discretization=Discretization()
        )
        exact = expected_occupation(f, 1.0, math.exp(n)).value / n
        error = values.std(ddof=1) / math.sqrt(num_paths)
        assert abs(values.mean() - exact) <= 0.01 * exact + 3.0 * error

    def test_halving_fine_step_keeps_mean(self):
        f, n, num_paths = Gauss(), 5, 2000
        coarse = functional_ensemble("first_law", 1.0, n, 1.0, f, num_paths, master_seed=18, discretization=SMALL)
        fine = functional_ensemble(
            "first_law", 1.0, n, 1.0, f, num_paths, master_seed=18, discretization=SMALL.refined()
        )
        exact = expected_occupation(f, 1.0, math.exp(n)).value / n
        error = math.hypot(coarse.std(ddof=1), fine.std(ddof=1)) / math.sqrt(num_paths)
        assert abs(coarse.mean() - fine.mean()) <= 0.01 * exact + 3.0 * error

    def test_slope_of_mollification_residual(self):
        result = variance_decay(
            Gauss(), 0.5, [4, 6, 8], 1.0, num_paths=1500, master_seed=5, discretization=Discretization(block_size=128)
        )
        assert -1.5 <= result.slope <= -0.5
