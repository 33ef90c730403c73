import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sobolev_lab.degenerate import (
    TAU_TO_X,
    X_TO_TAU,
    DegWeight,
    degenerate_coercivity,
    degenerate_derivative,
    degenerate_residual,
    pulled_back_weight,
    solve_degenerate,
    substitution,
    substitutions,
    transform_field,
    trig_eval,
)
from sobolev_lab.elliptic import EllipticProblem, solve_principal
from sobolev_lab.errors import NonPositiveWeight
from sobolev_lab.grid_norms import Field, axis_derivative, make_grid, mixed_norm, random_band_limited, spectral_derivative
from sobolev_lab.operator_core import DiagOperator

from .conftest import TWO_PI, philox

COS = DegWeight.cosine(0.5)
ONE = DiagOperator((1.0,))


@pytest.fixture
def grid128():
    return make_grid(1, (128,), (TWO_PI,))


def band_limited(grid, seed, modes=8, m=1):
    return random_band_limited(grid, m, philox(seed), modes / grid.sizes[0])


class TestWeight:
    def test_invalid_cosine(self):
        with pytest.raises(NonPositiveWeight):
            DegWeight.cosine(1.0)

    def test_invalid_constant(self):
        with pytest.raises(NonPositiveWeight):
            DegWeight.const(0.0)

    def test_table_interpolates(self, grid16):
        x = grid16.nodes(0)
        tab = DegWeight.tabulated(2 + np.sin(x))
        y = np.linspace(0, 6, 13)
        np.testing.assert_allclose(tab.evaluate(y, TWO_PI), 2 + np.sin(y), atol=1e-13)


class TestSubstitution:
    def test_identity(self, grid16):
        m = substitution(DegWeight.const(1.0), grid16)
        np.testing.assert_allclose(m.tau_nodes, grid16.nodes(0), atol=1e-14)
        assert m.new_period == pytest.approx(TWO_PI)

    def test_constant_two(self, grid16):
        m = substitution(DegWeight.const(2.0), grid16)
        np.testing.assert_allclose(m.tau_nodes, grid16.nodes(0) / 2, atol=1e-14)
        assert m.new_period == pytest.approx(math.pi)

    def test_cosine_closed_form(self, grid128):
        x = grid128.nodes(0)
        m = substitution(COS, grid128)
        assert np.max(np.abs(m.tau_nodes - (x + 0.5 * np.sin(x)))) <= 1e-8
        assert m.new_period == pytest.approx(TWO_PI, abs=1e-12)

    def test_strictly_monotone(self, grid128):
        for w in (COS, DegWeight.cosine(-0.9), DegWeight.const(3.0)):
            assert np.all(np.diff(substitution(w, grid128).tau_nodes) > 0)

    def test_inverse(self, grid128):
        m = substitution(DegWeight.cosine(0.8), grid128)
        tau = np.linspace(-3, 10, 57)
        assert np.max(np.abs(m.tau(m.inverse(tau)) - tau)) <= 1e-9

    def test_table_weight_positive(self, grid16):
        with pytest.raises(NonPositiveWeight):
            DegWeight.tabulated(np.cos(grid16.nodes(0)))


class TestDegenerateDerivative:
    def test_unit_weight(self, rng, grid16):
        u = random_band_limited(grid16, 2, rng)
        d = degenerate_derivative(u, DegWeight.const(1.0), 0, 3)
        assert np.max(np.abs(d.values - spectral_derivative(u, (3,)).values)) <= 1e-11 * np.max(np.abs(d.values))

    def test_sine_second(self, grid16):
        d = degenerate_derivative(Field.from_function(grid16, np.sin), DegWeight.const(1.0), 0, 2)
        assert np.max(np.abs(d.values[:, 0] + np.sin(grid16.nodes(0)))) <= 1e-12

    def test_chain_rule(self, grid128):
        tau = lambda x: x + 0.5 * np.sin(x)
        u = Field.from_function(grid128, lambda x: np.sin(tau(x)))
        d = degenerate_derivative(u, COS, 0, 1)
        assert np.max(np.abs(d.values[:, 0] - np.cos(tau(grid128.nodes(0))))) <= 1e-8

    @given(st.floats(0.1, 5.0), st.integers(1, 4), st.integers(0, 2**16))
    def test_constant_weight_scaling(self, c, i, seed):
        g = make_grid(1, (32,), (TWO_PI,))
        u = random_band_limited(g, 1, philox(seed))
        d = degenerate_derivative(u, DegWeight.const(c), 0, i).values
        ref = c**i * spectral_derivative(u, (i,)).values
        assert np.max(np.abs(d - ref)) <= 1e-10 * max(1.0, np.max(np.abs(ref)))

    def test_second_axis(self, grid2d, rng):
        u = random_band_limited(grid2d, 1, rng)
        d = degenerate_derivative(u, DegWeight.const(2.0), 1, 1).values
        np.testing.assert_allclose(d, 2 * axis_derivative(u, 1, 1).values, atol=1e-11)


class TestTransform:
    def test_identity_map(self, grid16, rng):
        u = random_band_limited(grid16, 2, rng)
        m = substitution(DegWeight.const(1.0), grid16)
        np.testing.assert_allclose(transform_field(u, [m], X_TO_TAU).values, u.values, atol=1e-12)

    @pytest.mark.parametrize("seed", range(4))
    def test_round_trip(self, grid128, seed):
        u = band_limited(grid128, seed)
        m = substitution(COS, grid128)
        back = transform_field(transform_field(u, [m], X_TO_TAU), [m], TAU_TO_X)
        assert np.max(np.abs(back.values - u.values)) <= 1e-7

    def test_norm_preservation_constant(self, grid128):
        one = Field.from_function(grid128, np.ones_like)
        m = substitution(COS, grid128)
        ut = transform_field(one, [m], X_TO_TAU)
        w = pulled_back_weight([m], ut.grid)
        assert mixed_norm(ut, (2,), w) == pytest.approx(mixed_norm(one, (2,)), rel=1e-6)

    @pytest.mark.parametrize("p", [2.0, 4.0])
    def test_norm_preservation_band_limited(self, grid128, p):
        u = band_limited(grid128, 9, modes=4)
        m = substitution(COS, grid128)
        ut = transform_field(u, [m], X_TO_TAU)
        w = pulled_back_weight([m], ut.grid)
        assert mixed_norm(ut, (p,), w) == pytest.approx(mixed_norm(u, (p,)), rel=1e-6)

    @pytest.mark.parametrize("p", [1.0, 1.5, 3.0])
    def test_norm_preservation_positive(self, grid128, p):
        # |u|^p stays smooth only away from zeros of u
        u = band_limited(grid128, 9, modes=4)
        u = u.with_values(u.values + 2 * np.max(np.abs(u.values)))
        m = substitution(COS, grid128)
        ut = transform_field(u, [m], X_TO_TAU)
        w = pulled_back_weight([m], ut.grid)
        assert mixed_norm(ut, (p,), w) == pytest.approx(mixed_norm(u, (p,)), rel=1e-6)

    def test_two_dimensional_conjugacy(self):
        g = make_grid(2, (128, 128), (TWO_PI, TWO_PI))
        gammas = [COS, DegWeight.const(1.5)]
        maps = substitutions(gammas, g)
        u = random_band_limited(g, 1, philox(2), 3 / 128)
        ut = transform_field(u, maps, X_TO_TAU)
        for k in range(2):
            lhs = degenerate_derivative(u, gammas[k], k, 1).values
            rhs = transform_field(axis_derivative(ut, k, 1), maps, TAU_TO_X).values
            assert np.max(np.abs(lhs - rhs)) <= 1e-6 * np.max(np.abs(lhs))


class TestSolveDegenerate:
    def test_unit_weight_matches_principal(self, grid16, rng):
        f = random_band_limited(grid16, 2, rng)
        A = DiagOperator((1.0, 2.0))
        u = solve_degenerate(f, A, (1.0,), 1.0, (1,), [DegWeight.const(1.0)])
        ref = solve_principal(f, EllipticProblem(A, (1.0,), 1.0, (1,)))
        assert np.max(np.abs(u.values - ref.values)) <= 1e-11

    @pytest.mark.parametrize("seed", range(3))
    def test_residual(self, grid128, seed):
        f = band_limited(grid128, seed)
        u = solve_degenerate(f, ONE, (1.0,), 1.0, (1,), [COS])
        assert degenerate_residual(u, f, ONE, (1.0,), 1.0, (1,), [COS]) <= 1e-6

    def test_conjugacy_invariant(self, grid128):
        u = band_limited(grid128, 5)
        m = substitution(COS, grid128)
        for i in (1, 2, 3):
            lhs = degenerate_derivative(u, COS, 0, i).values
            ut = transform_field(u, [m], X_TO_TAU)
            rhs = transform_field(spectral_derivative(ut, (i,)), [m], TAU_TO_X).values
            assert np.max(np.abs(lhs - rhs)) <= 1e-6 * np.max(np.abs(lhs))

    @pytest.mark.parametrize("lam", [1.0, 10.0, 100.0])
    def test_constant_comparison(self, grid128, lam):
        f = band_limited(grid128, 3)
        cmp = degenerate_coercivity(f, ONE, (1.0,), lam, (1,), [COS])
        assert cmp.degenerate_constant <= 1.1 * cmp.regular_constant
