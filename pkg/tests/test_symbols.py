import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sobolev_lab.errors import GridTouchesAxis, ParameterOutOfRange, SingularResolvent
from sobolev_lab.operator_core import DiagOperator, Sector, positivity_constant
from sobolev_lab.symbols import (
    SymbolParams,
    coercive_symbol_term,
    dyadic_grid,
    mikhlin_sup,
    principal_symbol,
    psi_symbol,
    symbol_sup,
)

ONE = DiagOperator((1.0,))
DENSE = dyadic_grid(1, -12, 12, per_octave=16)


def psi_sym(t=1.0, h=1.0, A=ONE):
    sp = SymbolParams(t=(t,), h=h, alpha=(1,), l=(2,))
    return lambda xi: psi_symbol(xi, sp, A)


class TestPsiSymbol:
    def test_vanishes_at_origin(self):
        assert np.all(psi_sym()(np.zeros((1, 1))) == 0)

    def test_sup(self):
        assert symbol_sup(psi_sym(), DENSE) == pytest.approx(math.sqrt(2) / 4, abs=1e-6)

    @pytest.mark.parametrize("t", [1e-3, 0.25, 4.0, 1e3])
    def test_t_dilation_invariance(self, t):
        assert symbol_sup(psi_sym(t=t), DENSE) == pytest.approx(symbol_sup(psi_sym(), DENSE), rel=1e-4)

    @pytest.mark.parametrize("h", [1e-3, 1.0, 1e3])
    def test_bounded_uniformly_in_h(self, h):
        # the sup depends on h (it equals 1 / (2 sqrt(1 + 1/h)) here) but stays below 1/2
        s = symbol_sup(psi_sym(h=h), DENSE)
        assert s == pytest.approx(1 / (2 * math.sqrt(1 + 1 / h)), rel=1e-4)
        assert s <= 0.5

    def test_mu_range_enforced(self):
        with pytest.raises(ParameterOutOfRange):
            SymbolParams(t=(1.0,), alpha=(1,), l=(2,), mu=0.6)

    def test_sigma_non_negative(self):
        with pytest.raises(ParameterOutOfRange):
            SymbolParams(t=(1.0,), sigma=(-0.1,))


class TestPrincipal:
    def test_values(self):
        assert principal_symbol([1.0], 0, (1,), (1,), ONE)[0, 0] == pytest.approx(0.5)
        assert principal_symbol([0.0], 1, (1,), (1,), ONE)[0, 0] == pytest.approx(0.5)

    def test_decreasing_components(self):
        vals = principal_symbol([2.0], 1j, (1,), (1,), DiagOperator.dyadic(4))[0]
        np.testing.assert_allclose(vals, 1 / (2.0 ** np.arange(1, 5) + 1j + 4))
        assert np.all(np.diff(np.abs(vals)) < 0)

    def test_singular(self):
        with pytest.raises(SingularResolvent):
            principal_symbol([1.0], -2.0, (1,), (1,), ONE)

    def test_sector_bound(self):
        A = DiagOperator((1.0, 2.0))
        sector = Sector.sample(math.pi / 2, n_radii=41, n_angles=9)
        cap = positivity_constant(A, sector)
        xi = dyadic_grid(1, -5, 5)
        for lam in sector.points():
            if lam == 0:
                continue
            assert np.max(np.abs(lam * principal_symbol(xi, lam, (1.0,), (1,), A))) <= cap + 1e-12


class TestCoerciveTerms:
    def test_zeroth(self):
        assert coercive_symbol_term([0.0], 1, (1,), (1,), 0, 0, ONE)[0, 0] == pytest.approx(0.5)

    def test_second_order_approaches_one(self):
        vals = coercive_symbol_term(DENSE, 1, (1,), (1,), 0, 2, ONE)
        assert np.max(np.abs(vals)) <= 1 and np.max(np.abs(vals)) > 0.999

    @given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3), st.integers(1, 3), st.data())
    def test_young_cap(self, lam, t, l, data):
        i = data.draw(st.integers(0, 2 * l))
        A = DiagOperator((0.5, 3.0))
        vals = coercive_symbol_term(dyadic_grid(1, -8, 8, 2), lam, (t,), (l,), 0, i, A)
        assert np.max(np.abs(vals)) <= 1 + 1e-12

    def test_order_range(self):
        with pytest.raises(ParameterOutOfRange):
            coercive_symbol_term([1.0], 1, (1,), (1,), 0, 3, ONE)


class TestMikhlin:
    phi = staticmethod(lambda xi: 1 / (2 + xi[:, :1] ** 2))

    def test_first_order(self):
        assert mikhlin_sup(self.phi, (1,), points=DENSE) == pytest.approx(0.25, abs=1e-3)

    def test_zeroth_order(self):
        assert mikhlin_sup(self.phi, (0,), points=DENSE) == pytest.approx(0.5, abs=1e-3)

    def test_psi_refinement(self):
        a = mikhlin_sup(psi_sym(), (1,), points=dyadic_grid(1, per_octave=4))
        b = mikhlin_sup(psi_sym(), (1,), points=dyadic_grid(1, per_octave=8))
        assert math.isfinite(a) and abs(a - b) <= 0.05 * b

    def test_axis_rejected(self):
        with pytest.raises(GridTouchesAxis):
            mikhlin_sup(self.phi, (1,), points=np.array([[0.0], [1.0]]))

    def test_analytic_derivative_agrees(self):
        def deriv(xi, beta):
            x = xi[:, :1]
            return -2 * x / (2 + x**2) ** 2 if beta[0] else 1 / (2 + x**2)

        pts = dyadic_grid(1, per_octave=4)
        fd = mikhlin_sup(self.phi, (1,), points=pts)
        exact = mikhlin_sup(self.phi, (1,), points=pts, derivative=deriv)
        assert fd == pytest.approx(exact, rel=1e-5)

    def test_mixed_two_dimensional(self):
        sym = lambda xi: 1 / (1 + xi[:, :1] ** 2 + xi[:, 1:2] ** 2)

        def deriv(xi, beta):
            x, y = xi[:, :1], xi[:, 1:2]
            r = 1 + x**2 + y**2
            return 8 * x * y / r**3

        pts = dyadic_grid(2, -4, 4, 2)
        assert mikhlin_sup(sym, (1, 1), points=pts) == pytest.approx(mikhlin_sup(sym, (1, 1), points=pts, derivative=deriv), rel=1e-5)
