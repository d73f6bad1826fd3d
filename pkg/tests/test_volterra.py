import numpy as np
import pytest

from mzworkbench.errors import (
    DegenerateProjectionError,
    GridMismatchError,
    SeriesTooShortError,
    StepSingularityError,
    WorkbenchError,
)
from mzworkbench.series import ScalarSeries, TimeGrid, constant_series
from mzworkbench.volterra import (
    acf_from_kernel,
    differentiate_series,
    kernel_from_acf,
    solve_volterra2,
)


def max_err(series, fn):
    return float(np.max(np.abs(series.values - fn(series.times))))


class TestSolveVolterra2:
    def test_zero_kernel_returns_forcing(self):
        grid = TimeGrid(0.1, 30)
        b = ScalarSeries(grid, np.sin(grid.times))
        x = solve_volterra2(lambda t, s: 0.0, b)
        assert np.array_equal(x.values, b.values)

    def test_exponential_oracle(self):
        # x = 1 + int_0^t x(s) ds  has solution e^t
        grid = TimeGrid(0.01, 200)
        x = solve_volterra2(lambda t, s: 1.0, constant_series(grid, 1.0))
        assert max_err(x, np.exp) <= 0.5 * grid.dt**2 * np.exp(grid.horizon)

    def test_halving_dt_quarters_error(self):
        errs = []
        for grid in (TimeGrid(0.02, 100), TimeGrid(0.01, 200)):
            x = solve_volterra2(lambda t, s: 1.0, constant_series(grid, 1.0))
            errs.append(max_err(x, np.exp))
        order = np.log2(errs[0] / errs[1])
        assert 1.8 <= order <= 2.2

    def test_array_kernel_matches_callable(self):
        grid = TimeGrid(0.05, 40)
        b = ScalarSeries(grid, np.cos(grid.times))
        a_vals = np.exp(-grid.times)
        from_callable = solve_volterra2(lambda t, s: np.exp(-(t - s)), b)
        from_array = solve_volterra2(a_vals, b)
        assert np.allclose(from_callable.values, from_array.values, rtol=1e-13)

    def test_step_singularity(self):
        grid = TimeGrid(0.1, 5)
        with pytest.raises(StepSingularityError):
            solve_volterra2(lambda t, s: 2.0 / grid.dt, constant_series(grid, 1.0))

    def test_initial_value(self):
        grid = TimeGrid(0.1, 4)
        b = ScalarSeries(grid, np.array([3.0, 0.0, 0.0, 0.0, 0.0]))
        assert solve_volterra2(lambda t, s: 1.0, b).values[0] == 3.0


class TestAcfFromKernel:
    def test_zero_kernel_constant(self):
        grid = TimeGrid(0.05, 50)
        c = acf_from_kernel(constant_series(grid, 0.0), 2.5)
        assert np.array_equal(c.values, np.full(51, 2.5))

    def test_cosine_oracle(self):
        # K = -1, C(0) = 1  ->  C'' = -C, C'(0) = 0  ->  cos t
        grid = TimeGrid(0.01, 500)
        c = acf_from_kernel(constant_series(grid, -1.0), 1.0)
        assert max_err(c, np.cos) <= 5.0 * grid.dt**2

    def test_cosine_order(self):
        errs = []
        for grid in (TimeGrid(0.02, 250), TimeGrid(0.01, 500)):
            c = acf_from_kernel(constant_series(grid, -1.0), 1.0)
            errs.append(max_err(c, np.cos))
        assert 1.8 <= np.log2(errs[0] / errs[1]) <= 2.2

    def test_linearity_in_c0(self):
        grid = TimeGrid(0.02, 100)
        kernel = ScalarSeries(grid, -np.exp(-grid.times))
        one = acf_from_kernel(kernel, 1.0)
        scaled = acf_from_kernel(kernel, -3.5)
        assert np.allclose(scaled.values, -3.5 * one.values, rtol=1e-12)

    def test_zero_c0_warns(self):
        grid = TimeGrid(0.1, 10)
        with pytest.warns(UserWarning):
            c = acf_from_kernel(constant_series(grid, -1.0), 0.0)
        assert np.array_equal(c.values, np.zeros(11))

    def test_grid_mismatch(self):
        with pytest.raises(GridMismatchError):
            acf_from_kernel(constant_series(TimeGrid(0.1, 10), -1.0), 1.0,
                            grid=TimeGrid(0.1, 11))


class TestKernelFromAcf:
    def test_cosine_analytic_triple(self):
        # Laplace oracle: transformed cos has s/(s^2+1), so the kernel
        # transform is -1/s, i.e. K = -1
        grid = TimeGrid(0.01, 500)
        t = grid.times
        k = kernel_from_acf(
            ScalarSeries(grid, np.cos(t)),
            d_acf=ScalarSeries(grid, -np.sin(t)),
            d2_acf=ScalarSeries(grid, -np.cos(t)),
        )
        assert np.max(np.abs(k.values + 1.0)) <= 5.0 * grid.dt**2

    def test_cosine_sampled(self):
        grid = TimeGrid(0.01, 500)
        k = kernel_from_acf(ScalarSeries(grid, np.cos(grid.times)))
        assert np.max(np.abs(k.values + 1.0)) <= 5.0 * grid.dt**2

    def test_t0_identity(self):
        grid = TimeGrid(0.02, 100)
        t = grid.times
        c = ScalarSeries(grid, np.cosh(t))  # C'' = C, C(0) = 1
        k = kernel_from_acf(c, d_acf=ScalarSeries(grid, np.sinh(t)),
                            d2_acf=ScalarSeries(grid, np.cosh(t)))
        assert k.values[0] == pytest.approx(1.0, abs=1e-15)  # C''(0)/C(0)

    def test_round_trip_exponential_kernel(self):
        results = {}
        for grid in (TimeGrid(0.02, 150), TimeGrid(0.01, 300)):
            kernel = ScalarSeries(grid, -np.exp(-grid.times))
            acf = acf_from_kernel(kernel, 1.0)
            back = kernel_from_acf(acf)
            results[grid.dt] = float(np.max(np.abs(back.values - kernel.values)))
        assert results[0.01] <= 10.0 * 0.01**2
        assert 1.7 <= np.log2(results[0.02] / results[0.01]) <= 2.3

    def test_round_trip_seeded_damped_cosines(self):
        rng = np.random.default_rng(42)
        for _ in range(3):
            n_modes = int(rng.integers(1, 4))
            amps = rng.uniform(0.2, 1.0, n_modes)
            decays = rng.uniform(0.3, 1.5, n_modes)
            freqs = rng.uniform(0.5, 3.0, n_modes)
            errs = []
            for grid in (TimeGrid(0.02, 100), TimeGrid(0.01, 200)):
                t = grid.times
                kv = -np.sum(amps[:, None] * np.exp(-np.outer(decays, t))
                             * np.cos(np.outer(freqs, t)), axis=0)
                kernel = ScalarSeries(grid, kv)
                back = kernel_from_acf(acf_from_kernel(kernel, 1.0))
                errs.append(float(np.max(np.abs(back.values - kernel.values))))
            assert 1.6 <= np.log2(errs[0] / errs[1]) <= 2.4

    def test_degenerate_c0(self):
        grid = TimeGrid(0.1, 10)
        with pytest.raises(DegenerateProjectionError):
            kernel_from_acf(ScalarSeries(grid, np.sin(grid.times)))

    def test_nonstationary_input_warns(self):
        grid = TimeGrid(0.01, 200)
        with pytest.warns(UserWarning, match="stationary"):
            kernel_from_acf(ScalarSeries(grid, np.cos(grid.times + 0.5)))


class TestDifferentiateSeries:
    def test_constant_has_zero_derivative(self):
        grid = TimeGrid(0.1, 10)
        d = differentiate_series(constant_series(grid, 4.2), order=1)
        assert np.allclose(d.values, 0.0, atol=1e-13)

    def test_exact_on_quadratics(self):
        grid = TimeGrid(0.1, 20)
        series = ScalarSeries(grid, grid.times**2)
        d1 = differentiate_series(series, order=1)
        d2 = differentiate_series(series, order=2)
        assert np.allclose(d1.values, 2.0 * grid.times, atol=1e-12)
        assert np.allclose(d2.values, 2.0, atol=1e-11)

    def test_cosine_error_bound(self):
        grid = TimeGrid(1e-3, 2000)
        d = differentiate_series(ScalarSeries(grid, np.cos(grid.times)), order=1)
        assert np.max(np.abs(d.values + np.sin(grid.times))) <= 1e-6

    def test_too_short(self):
        with pytest.raises(SeriesTooShortError):
            differentiate_series(constant_series(TimeGrid(0.1, 3), 1.0))

    def test_bad_order(self):
        with pytest.raises(ValueError):
            differentiate_series(constant_series(TimeGrid(0.1, 10), 1.0), order=3)


class TestSeriesTypes:
    def test_rejects_non_finite(self):
        grid = TimeGrid(0.1, 2)
        with pytest.raises(WorkbenchError):
            ScalarSeries(grid, np.array([0.0, np.nan, 1.0]))

    def test_rejects_wrong_length(self):
        with pytest.raises(GridMismatchError):
            ScalarSeries(TimeGrid(0.1, 3), np.zeros(3))

    def test_grid_validation(self):
        with pytest.raises(WorkbenchError):
            TimeGrid(0.0, 5)
        with pytest.raises(WorkbenchError):
            TimeGrid(0.1, -1)
        assert TimeGrid(0.5, 0).n_nodes == 1  # degenerate single-node grid

    def test_times_never_accumulate(self):
        grid = TimeGrid(0.1, 1000)
        assert grid.times[1000] == 1000 * 0.1
