import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sobolev_lab.degenerate import DegWeight
from sobolev_lab.errors import ParameterOutOfRange, ResidualTooLarge
from sobolev_lab.grid_norms import make_grid, random_band_limited
from sobolev_lab.operator_core import DiagOperator
from sobolev_lab.parabolic import (
    ParabolicProblem,
    SpaceTimeField,
    degenerate_system_residual,
    epsilon_sweep,
    infinite_system_solve,
    parabolic_coercivity_report,
    parabolic_terms,
    phi1,
    psi,
    solve_cauchy,
    spacetime_norm,
)

from .conftest import TWO_PI, philox

ONE = DiagOperator((1.0,))


def model(n_t=64, A=ONE, eps=(1.0,)):
    return ParabolicProblem(A, eps, (1,), 1.0, n_t)


def closed(grid, times, func):
    x = grid.nodes(0)
    return np.array([func(t) * np.cos(x) for t in times])


class TestPhiFunctions:
    def test_series_matches_direct(self):
        z = np.array([0.099, 0.1, 0.101, 1e-6, 0.0, 5.0])
        direct = (1 - np.exp(-z) * (1 + z)) / np.where(z == 0, 1, z) ** 2
        np.testing.assert_allclose(psi(z[[0, 1, 2, 5]]), direct[[0, 1, 2, 5]], rtol=1e-12)
        assert psi(np.array([0.0]))[0] == 0.5
        assert phi1(np.array([0.0]))[0] == 1.0

    @given(st.floats(0, 50))
    def test_psi_continuity(self, z):
        a, b = psi(np.array([z, z * (1 + 1e-9) + 1e-12]))
        assert abs(a - b) <= 1e-8


class TestProblem:
    def test_minimum_steps(self):
        with pytest.raises(ParameterOutOfRange):
            ParabolicProblem(ONE, (1.0,), (1,), 1.0, 4)

    def test_eps_positive(self):
        with pytest.raises(ParameterOutOfRange):
            ParabolicProblem(ONE, (0.0,), (1,))


class TestSolveCauchy:
    def test_zero(self, grid16):
        prob = model()
        u = solve_cauchy(SpaceTimeField.zeros(grid16, prob.times()), prob)
        assert not np.any(u.values)

    def test_constant_forcing(self, grid16):
        prob = model()
        ts = prob.times()
        f = SpaceTimeField.from_function(grid16, ts, lambda t, x: np.cos(x))
        ex = closed(grid16, ts, lambda t: (1 - math.exp(-2 * t)) / 2)
        assert np.max(np.abs(solve_cauchy(f, prob).values[..., 0] - ex)) <= 1e-10

    def test_linear_forcing(self, grid16):
        prob = model()
        ts = prob.times()
        f = SpaceTimeField.from_function(grid16, ts, lambda t, x: t * np.cos(x))
        ex = closed(grid16, ts, lambda t: t / 2 - (1 - math.exp(-2 * t)) / 4)
        assert np.max(np.abs(solve_cauchy(f, prob).values[..., 0] - ex)) <= 1e-10

    def test_zero_initial_value(self, grid16, rng):
        prob = model()
        f = SpaceTimeField(grid16, prob.times(), np.broadcast_to(random_band_limited(grid16, 1, rng).values, (65, 16, 1)))
        assert not np.any(solve_cauchy(f, prob).values[0])

    @given(st.integers(0, 2**32), st.integers(1, 40))
    def test_causality(self, seed, j):
        g = make_grid(1, (16,), (TWO_PI,))
        prob = model()
        rng = philox(seed)
        vals = rng.standard_normal((65, 16, 2))
        f = SpaceTimeField(g, prob.times(), vals)
        A = DiagOperator((1.0, 3.0))
        prob = ParabolicProblem(A, (0.5,), (1,))
        u1 = solve_cauchy(f, prob).values
        vals2 = vals.copy()
        vals2[j + 1 :] += rng.standard_normal(vals2[j + 1 :].shape)
        u2 = solve_cauchy(f.with_values(vals2), prob).values
        assert np.array_equal(u1[: j + 1], u2[: j + 1])

    @given(st.integers(0, 2**32))
    def test_dissipativity(self, seed):
        g = make_grid(1, (16,), (TWO_PI,))
        prob = model()
        ts = prob.times()
        a = random_band_limited(g, 1, philox(seed), real=False).values
        vals = np.array([a if t <= 0.25 else 0 * a for t in ts])
        u = solve_cauchy(SpaceTimeField(g, ts, vals), prob)
        start = np.searchsorted(ts, 0.25, side="right") + 1
        spec = np.abs(np.fft.fft(u.values[start:, :, 0], axis=1))
        assert np.all(np.diff(spec, axis=0) <= 1e-14)

    @given(st.integers(0, 2**32))
    def test_piecewise_linear_exactness(self, seed):
        g = make_grid(1, (16,), (TWO_PI,))
        rng = philox(seed)
        a, b = random_band_limited(g, 1, rng, 0.25).values, random_band_limited(g, 1, rng, 0.25).values
        prob = model(n_t=32)
        ts = prob.times()
        f = SpaceTimeField(g, ts, np.array([a + t * b for t in ts]))
        u = solve_cauchy(f, prob)
        # per-mode closed form for u' + w u = a + b t, u(0) = 0
        w = 1 + g.wavenumbers(0) ** 2
        ah, bh = np.fft.fft(a[:, 0]), np.fft.fft(b[:, 0])
        for j, t in enumerate(ts):
            e = np.exp(-w * t)
            uh = ah * (1 - e) / w + bh * (t / w - (1 - e) / w**2)
            assert np.max(np.abs(np.fft.ifft(uh) - u.values[j, :, 0])) <= 1e-10

    def test_non_uniform_steps(self, grid16):
        ts = np.concatenate([np.linspace(0, 0.5, 9), np.linspace(0.6, 1.0, 5)])
        prob = model()
        f = SpaceTimeField.from_function(grid16, ts, lambda t, x: t * np.cos(x))
        ex = closed(grid16, ts, lambda t: t / 2 - (1 - math.exp(-2 * t)) / 4)
        assert np.max(np.abs(solve_cauchy(f, prob).values[..., 0] - ex)) <= 1e-10


class TestSpacetimeNorm:
    def test_constant(self):
        g = make_grid(1, (16,), (TWO_PI,))
        u = SpaceTimeField.from_function(g, np.linspace(0, 1, 9), lambda t, x: np.ones_like(x))
        assert spacetime_norm(u, 2, (2,)) == pytest.approx(math.sqrt(TWO_PI), rel=1e-14)

    def test_homogeneity(self, grid16, rng):
        u = SpaceTimeField(grid16, np.linspace(0, 1, 9), rng.standard_normal((9, 16, 2)))
        assert spacetime_norm(u.with_values(u.values * -3.5)) == pytest.approx(3.5 * spacetime_norm(u), rel=1e-13)

    def test_decaying(self, grid16):
        u = SpaceTimeField.from_function(grid16, np.linspace(0, 1, 2049), lambda t, x: math.exp(-t) * np.cos(x))
        assert spacetime_norm(u) == pytest.approx(math.sqrt(math.pi * (1 - math.exp(-2)) / 2), abs=1e-6)


class TestCoercivity:
    def test_zero_forcing(self, grid16):
        prob = model()
        f = SpaceTimeField.zeros(grid16, prob.times())
        terms = parabolic_terms(solve_cauchy(f, prob), f, prob)
        assert terms.dt_norm == terms.a_norm == sum(terms.eps_terms) == 0

    def test_hand_anchor(self, grid16):
        prob = model(n_t=4096)
        f = SpaceTimeField.from_function(grid16, prob.times(), lambda t, x: np.cos(x))
        rep = parabolic_coercivity_report(solve_cauchy(f, prob), f, prob)
        dt = math.sqrt((1 - math.exp(-4)) / 4)
        rest = math.sqrt(1 - (1 - math.exp(-2)) + (1 - math.exp(-4)) / 4)
        row = rep.rows[0]
        assert row["dt_norm"] == pytest.approx(math.sqrt(math.pi) * dt, abs=1e-6)
        assert row["a_norm"] == pytest.approx(math.sqrt(math.pi) * rest / 2, abs=1e-6)
        assert row["empirical_constant"] == pytest.approx(dt + rest, abs=1e-6)

    def test_not_solution(self, grid16):
        prob = model()
        f = SpaceTimeField.from_function(grid16, prob.times(), lambda t, x: np.cos(x))
        with pytest.raises(ResidualTooLarge):
            parabolic_terms(f, f, prob)

    def test_eps_sweep_bounded(self, rng):
        g = make_grid(1, (32,), (TWO_PI,))
        prob = model()
        fs = [SpaceTimeField(g, prob.times(), np.broadcast_to(random_band_limited(g, 1, rng).values, (65, 32, 1))) for _ in range(4)]
        rep = epsilon_sweep(prob, [(1.0,), (1e-2,), (1e-4,)], fs)
        # each mode contributes at most e^{-wt} + 2(1 - e^{-wt}) in L2(0,1)
        assert rep.summary["empirical_constant"]["max"] <= 3


class TestInfiniteSystem:
    def test_single_component(self, grid16, rng):
        ts = np.linspace(0, 1, 17)
        f = SpaceTimeField(grid16, ts, rng.standard_normal((17, 16, 1)))
        u = infinite_system_solve(f, (2.0,), (1.0,), (1,))
        np.testing.assert_array_equal(u.values, solve_cauchy(f, ParabolicProblem(DiagOperator((2.0,)), (1.0,), (1,), 1.0, 16)).values)

    def test_decoupling(self, grid16):
        ts = np.linspace(0, 1, 17)
        f = SpaceTimeField.from_function(grid16, ts, lambda t, x: np.cos(x), 4)
        u = infinite_system_solve(f, (2.0, 4.0, 8.0, 16.0), (1.0,), (1,))
        assert not np.any(u.values[..., 1:])

    def test_truncation_stability(self, grid16, rng):
        ts = np.linspace(0, 1, 17)
        vals = rng.standard_normal((17, 16, 16))
        d = DiagOperator.dyadic(16).diag
        small = infinite_system_solve(SpaceTimeField(grid16, ts, vals[..., :8]), d[:8], (1.0,), (1,))
        big = infinite_system_solve(SpaceTimeField(grid16, ts, vals), d, (1.0,), (1,))
        assert np.max(np.abs(big.values[..., :8] - small.values)) <= 1e-12

    def test_degenerate_residual(self):
        g = make_grid(1, (128,), (TWO_PI,))
        ts = np.linspace(0, 1, 17)
        a = random_band_limited(g, 2, philox(5), 8 / 128)
        f = SpaceTimeField(g, ts, np.array([a.values * (1 + t) for t in ts]))
        gam = [DegWeight.cosine(0.5)]
        u = infinite_system_solve(f, (2.0, 4.0), (1.0,), (1,), gam)
        assert degenerate_system_residual(u, f, (2.0, 4.0), (1.0,), (1,), gam) <= 1e-6
