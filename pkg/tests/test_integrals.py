"""Stochastic integrals, symmetrization, isometry, and the recurrence."""
import math

import numpy as np
import pytest

from obtusewalk import (
    Kernel,
    PredictabilityError,
    VectorProcess,
    conditional_expectation,
    expectation,
    increment_rv,
    integrate_predictable,
    monomial_kernel,
    monomial_table,
    multiple_integral,
    symmetrize,
)
from obtusewalk.integrals import kernel_head_slice
from helpers import (
    bernoulli,
    d2_fixture,
    random_kernel,
    random_predictable,
    random_process,
    random_table,
    random_walk,
)


class TestIntegratePredictable:
    def test_deterministic_unit_process(self):
        walk = bernoulli(1)
        vals = np.zeros((2, 4, 1))
        vals[0, :, 0] = 1.0
        result = integrate_predictable(walk, VectorProcess(walk.space, vals))
        assert np.array_equal(result.values, increment_rv(walk, 0, 1).values)

    def test_past_measurable_integrand(self):
        walk = bernoulli(1)
        y0 = increment_rv(walk, 0, 1)
        vals = np.zeros((2, 4, 1))
        vals[1, :, 0] = y0.values
        result = integrate_predictable(walk, VectorProcess(walk.space, vals))
        expected = y0 * increment_rv(walk, 1, 1)
        assert result.max_abs_diff(expected) == 0.0

    def test_rejects_non_predictable(self, rng):
        walk = bernoulli(1)
        with pytest.raises(PredictabilityError):
            integrate_predictable(walk, random_process(rng, walk))

    def test_zero_mean(self, rng):
        walk = random_walk(rng, 2, 2)
        u = random_predictable(rng, walk)
        assert abs(expectation(walk, integrate_predictable(walk, u))) < 1e-12

    def test_conditional_isometry_per_atom(self, rng):
        for d, N in [(1, 2), (2, 2)]:
            walk = random_walk(rng, d, N)
            u = random_predictable(rng, walk)
            for n in range(N + 1):
                tail = np.array(u.values)
                tail[:n] = 0.0
                integral = integrate_predictable(walk, VectorProcess(walk.space, tail))
                lhs = conditional_expectation(walk, integral * integral, n - 1)
                norm = np.einsum("kpj,kpj->p", tail, tail)
                rhs = conditional_expectation(
                    walk, type(integral)(walk.space, norm), n - 1
                )
                assert lhs.max_abs_diff(rhs) < 1e-10


class TestSymmetrize:
    def test_symmetric_input_is_fixed_point(self):
        raw = [
            ((0, 1), (1, 2), 0.7),
            ((1, 0), (2, 1), 0.7),
        ]
        kernel = symmetrize(raw, 2, 2)
        assert kernel.tensor((0, 1))[0, 1] == pytest.approx(0.7)

    def test_two_permutations_split_value(self):
        kernel = symmetrize([((0, 1), (1, 2), 1.0)], 2, 2)
        assert kernel.tensor((0, 1))[0, 1] == pytest.approx(0.5)
        assert kernel.tensor((0, 1))[1, 0] == pytest.approx(0.0)
        # the transposed-time value lands on the transposed components
        kernel_rev = symmetrize([((1, 0), (2, 1), 1.0)], 2, 2)
        assert kernel_rev.tensor((0, 1))[0, 1] == pytest.approx(0.5)

    def test_elementary_indicator_weight(self):
        # all orderings of the indicator at times {0,1}, coords (1,2)
        raw = [((0, 1), (1, 2), 1.0), ((1, 0), (2, 1), 1.0)]
        kernel = symmetrize(raw, 2, 2)
        assert kernel.tensor((0, 1))[0, 1] == pytest.approx(1.0)
        assert kernel.tensor((0, 1))[1, 0] == pytest.approx(0.0)

    def test_repeated_time_rejected(self):
        with pytest.raises(ValueError):
            symmetrize([((0, 0), (1, 1), 1.0)], 2, 1)

    def test_integral_invariant_under_symmetrization(self, rng):
        # a raw one-sided assignment and its symmetrization integrate equally
        walk = d2_fixture(1)
        raw_value = 0.83
        kernel = symmetrize([((1, 0), (2, 1), raw_value)], 2, 2)
        integral = multiple_integral(walk, kernel)
        expected = monomial_table(walk, (0, 1), (1, 2)) * raw_value
        assert integral.max_abs_diff(expected) < 1e-12


class TestMultipleIntegral:
    def test_order_zero_constant(self):
        walk = bernoulli(1)
        table = multiple_integral(walk, Kernel.scalar(3.0, 1))
        assert np.all(table.values == 3.0)

    def test_elementary_indicator_gives_monomial(self):
        walk = bernoulli(1)
        table = multiple_integral(walk, monomial_kernel((0, 1), (1, 1), 1))
        assert np.array_equal(table.values, [1.0, -1.0, -1.0, 1.0])

    def test_zero_mean(self, rng):
        walk = random_walk(rng, 2, 2)
        for r in (1, 2, 3):
            table = multiple_integral(walk, random_kernel(rng, 2, 2, r))
            assert abs(expectation(walk, table)) < 1e-12

    def test_order_above_horizon_is_zero(self):
        walk = bernoulli(0)
        kernel = Kernel(2, 1, {})
        assert np.all(multiple_integral(walk, kernel).values == 0.0)

    def test_horizon_error(self):
        walk = bernoulli(0)
        kernel = monomial_kernel((0, 1), (1, 1), 1)
        with pytest.raises(ValueError):
            multiple_integral(walk, kernel)

    def test_isometry(self, rng):
        for d, N in [(1, 2), (2, 2)]:
            walk = random_walk(rng, d, N)
            for r in (1, 2, 3):
                for s in (1, 2, 3):
                    f = random_kernel(rng, d, N, r)
                    g = random_kernel(rng, d, N, s)
                    lhs = expectation(
                        walk,
                        multiple_integral(walk, f) * multiple_integral(walk, g),
                    )
                    rhs = math.factorial(r) * f.dot(g) if r == s else 0.0
                    assert lhs == pytest.approx(rhs, abs=1e-9)

    def test_recurrence(self, rng):
        for d, N in [(1, 2), (2, 2)]:
            walk = random_walk(rng, d, N)
            for r in (1, 2, 3):
                f = random_kernel(rng, d, N, r)
                direct = multiple_integral(walk, f)
                total = np.zeros(walk.space.num_paths)
                for k in range(1, d + 1):
                    for last in range(N + 1):
                        head = kernel_head_slice(f, k, last)
                        inner = multiple_integral(walk, head)
                        total += r * inner.values * increment_rv(walk, last, k).values
                assert np.max(np.abs(direct.values - total)) < 1e-9

    def test_projection_matches_conditioning(self, rng):
        walk = random_walk(rng, 2, 2)
        for r in (1, 2, 3):
            f = random_kernel(rng, 2, 2, r)
            table = multiple_integral(walk, f)
            for horizon in range(-1, 3):
                conditioned = conditional_expectation(walk, table, horizon)
                truncated = multiple_integral(walk, f.truncate(horizon))
                assert conditioned.max_abs_diff(truncated) < 1e-10

    def test_measurability_corollary(self, rng):
        walk = random_walk(rng, 1, 2)
        f = random_kernel(rng, 1, 2, 2)
        table = multiple_integral(walk, f)
        # not F_1-measurable since f loads time 2; truncated version is
        from obtusewalk import is_measurable

        assert not is_measurable(table, 1, tol=1e-10)
        assert is_measurable(multiple_integral(walk, f.truncate(1)), 1, tol=1e-10)


class TestMonomialKernel:
    def test_single_increment(self):
        walk = bernoulli(1)
        table = multiple_integral(walk, monomial_kernel((0,), (1,), 1))
        assert table.max_abs_diff(increment_rv(walk, 0, 1)) == 0.0

    def test_pair_on_bernoulli(self):
        walk = bernoulli(1)
        table = multiple_integral(walk, monomial_kernel((0, 1), (1, 1), 1))
        assert np.array_equal(table.values, [1.0, -1.0, -1.0, 1.0])

    def test_pair_on_d2_fixture(self):
        walk = d2_fixture(1)
        table = multiple_integral(walk, monomial_kernel((0, 1), (1, 2), 2))
        expected = increment_rv(walk, 0, 1) * increment_rv(walk, 1, 2)
        assert table.max_abs_diff(expected) < 1e-14

    def test_non_increasing_rejected(self):
        with pytest.raises(ValueError):
            monomial_kernel((1, 0), (1, 1), 1)
        with pytest.raises(ValueError):
            monomial_kernel((0, 0), (1, 1), 1)


class TestVectorProcess:
    def test_predictability_flag(self, rng):
        walk = random_walk(rng, 2, 2)
        assert random_predictable(rng, walk).is_predictable()
        assert not random_process(rng, walk).is_predictable()

    def test_table_access(self, rng):
        walk = bernoulli(1)
        proc = random_process(rng, walk)
        assert np.array_equal(proc.table(1, 1).values, proc.values[1][:, 0])
