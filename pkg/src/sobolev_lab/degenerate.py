"""
Degenerate derivatives ``(gamma_k d/dx_k)^i`` and the change of variables
``tau_k = int_0^{x_k} 1/gamma_k`` that turns them into ordinary derivatives.

Only strictly positive periodic weights are supported, so every axis maps onto
a new period ``T_k = int_0^{L_k} 1/gamma_k`` and grids stay uniform in both
coordinates with the same number of nodes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .elliptic import EllipticProblem, coercivity_terms, solve_principal
from .errors import DimensionMismatch, NonPositiveWeight, ParameterOutOfRange
from .grid_norms import Field, Grid, Weight, axis_derivative, make_grid
from .operator_core import DiagOperator

X_TO_TAU = "x->tau"
TAU_TO_X = "tau->x"


def trig_coefficients(samples: np.ndarray, axis: int = 0) -> np.ndarray:
    return np.fft.fft(samples, axis=axis) / samples.shape[axis]


def trig_matrix(n: int, period: float, x: np.ndarray) -> np.ndarray:
    """Matrix ``E`` with ``E @ samples`` = trigonometric interpolant at ``x``.

    The Nyquist mode is taken as a cosine so real samples give real values.
    """
    k = np.fft.fftfreq(n, 1.0 / n)
    x = np.asarray(x, dtype=float)
    phase = np.exp(2j * np.pi * np.outer(x, k) / period)
    phase[:, n // 2] = np.cos(np.pi * n * x / period)
    dft = np.exp(-2j * np.pi * np.outer(k, np.arange(n)) / n) / n
    return phase @ dft


def trig_eval(samples: np.ndarray, period: float, x: np.ndarray) -> np.ndarray:
    return trig_matrix(len(samples), period, x) @ np.asarray(samples)


@dataclass(frozen=True)
class DegWeight:
    """Strictly positive periodic weight on one axis.

    kinds: ``const`` (gamma = c), ``cosine`` (gamma = 1/(1 + a cos(2 pi x / L))),
    ``table`` (samples on the axis grid, trigonometrically interpolated).
    """

    kind: str = "const"
    c: float = 1.0
    a: float = 0.0
    table: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ("const", "cosine", "table"):
            raise ValueError(f"unknown weight kind {self.kind!r}")
        if self.kind == "const" and not self.c > 0:
            raise NonPositiveWeight(f"constant weight must be positive, got {self.c}")
        if self.kind == "cosine" and not abs(self.a) < 1:
            raise NonPositiveWeight(f"1/(1 + a cos) needs |a| < 1, got a={self.a}")
        if self.kind == "table":
            tab = np.asarray(self.table, dtype=float)
            if tab.ndim != 1 or np.any(tab <= 0) or not np.all(np.isfinite(tab)):
                raise NonPositiveWeight("tabulated weight must be a positive 1-d array")
            object.__setattr__(self, "table", tab)

    @classmethod
    def const(cls, c: float) -> "DegWeight":
        return cls("const", c=c)

    @classmethod
    def cosine(cls, a: float) -> "DegWeight":
        return cls("cosine", a=a)

    @classmethod
    def tabulated(cls, values) -> "DegWeight":
        return cls("table", table=np.asarray(values, dtype=float))

    def evaluate(self, x: np.ndarray, period: float) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "const":
            return np.full(x.shape, self.c)
        if self.kind == "cosine":
            return 1.0 / (1.0 + self.a * np.cos(2 * np.pi * x / period))
        return np.real(trig_eval(self.table, period, x.ravel())).reshape(x.shape)

    def to_dict(self) -> dict:
        if self.kind == "table":
            return {"kind": "table", "table": self.table.tolist()}
        return {"kind": self.kind, "c": self.c, "a": self.a}


@dataclass(frozen=True)
class SubstitutionMap:
    """Monotone map ``x -> tau`` on one axis with its inverse."""

    weight: DegWeight
    period: float
    x_nodes: np.ndarray = field(compare=False)
    tau_nodes: np.ndarray = field(compare=False)
    new_period: float = 0.0
    mean_inv: float = 0.0
    inv_coeffs: np.ndarray = field(default=None, compare=False)

    def tau(self, x) -> np.ndarray:
        """Exact antiderivative of the interpolated ``1/gamma``."""
        x = np.asarray(x, dtype=float)
        n = len(self.inv_coeffs)
        k = np.fft.fftfreq(n, 1.0 / n)
        xi = 2 * np.pi * k / self.period
        c = self.inv_coeffs.copy()
        c[0] = 0.0
        c[n // 2] = 0.0  # the Nyquist cosine integrates separately
        nz = xi != 0
        flat = x.ravel()
        osc = (np.exp(1j * np.outer(flat, xi[nz])) - 1.0) @ (c[nz] / (1j * xi[nz]))
        nyq = self.inv_coeffs[n // 2] * np.sin(np.pi * n * flat / self.period) / (np.pi * n / self.period)
        out = self.mean_inv * flat + np.real(osc) + np.real(nyq)
        return out.reshape(x.shape)

    def inverse(self, tau, tol: float = 1e-14, maxit: int = 50) -> np.ndarray:
        """``x(tau)`` by Newton iteration started from monotone interpolation."""
        tau = np.asarray(tau, dtype=float)
        shift = np.floor(tau / self.new_period)
        r = tau - shift * self.new_period
        xs = np.append(self.x_nodes, self.period)
        ts = np.append(self.tau_nodes, self.new_period)
        x = np.interp(r, ts, xs)
        for _ in range(maxit):
            step = (self.tau(x) - r) * self.weight.evaluate(x, self.period)
            x = x - step
            if np.max(np.abs(step), initial=0.0) <= tol * self.period:
                break
        return x + shift * self.period


def substitution(gamma: DegWeight, grid: Grid, axis: int = 0) -> SubstitutionMap:
    """Tabulate ``tau(x) = int_0^x 1/gamma`` on the axis nodes."""
    x = grid.nodes(axis)
    L = grid.periods[axis]
    g = gamma.evaluate(x, L)
    if np.any(g <= 0) or not np.all(np.isfinite(g)):
        raise NonPositiveWeight("weight must be strictly positive on the grid")
    coeffs = trig_coefficients(1.0 / g)
    mean_inv = float(np.real(coeffs[0]))
    proto = SubstitutionMap(gamma, L, x, x, mean_inv * L, mean_inv, coeffs)
    tau = proto.tau(x)
    if np.any(np.diff(tau) <= 0):
        raise NonPositiveWeight("substitution is not strictly increasing")
    return SubstitutionMap(gamma, L, x, tau, mean_inv * L, mean_inv, coeffs)


def substitutions(gammas: Sequence[DegWeight], grid: Grid) -> list[SubstitutionMap]:
    if len(gammas) != grid.n:
        raise DimensionMismatch(f"{len(gammas)} weights for a {grid.n}-dimensional grid")
    return [substitution(g, grid, k) for k, g in enumerate(gammas)]


def tau_grid(grid: Grid, maps: Sequence[SubstitutionMap]) -> Grid:
    return make_grid(grid.n, grid.sizes, [m.new_period for m in maps])


def pulled_back_weight(maps: Sequence[SubstitutionMap], tgrid: Grid) -> Weight:
    """Sampled ``prod_k gamma_k(x_k(tau_k))`` on the tau grid."""
    out = np.ones(tgrid.sizes)
    for k, m in enumerate(maps):
        shape = [1] * tgrid.n
        shape[k] = tgrid.sizes[k]
        vals = m.weight.evaluate(m.inverse(tgrid.nodes(k)), m.period)
        out = out * vals.reshape(shape)
    return Weight.sampled(out)


def _resample(values: np.ndarray, axis: int, matrix: np.ndarray) -> np.ndarray:
    moved = np.moveaxis(values, axis, 0)
    out = np.tensordot(matrix, moved, axes=(1, 0))
    return np.moveaxis(out, 0, axis)


def transform_field(u: Field, maps: Sequence[SubstitutionMap], direction: str = X_TO_TAU) -> Field:
    """Resample ``u`` into the other coordinate system.

    ``x->tau`` returns ``u(x(tau))`` on the uniform tau grid; ``tau->x``
    returns ``u(tau(x))`` on the uniform x grid.
    """
    if direction not in (X_TO_TAU, TAU_TO_X):
        raise ValueError(f"direction must be {X_TO_TAU!r} or {TAU_TO_X!r}")
    if len(maps) != u.grid.n:
        raise DimensionMismatch("one substitution map per axis is required")
    vals = u.values
    periods = []
    for k, m in enumerate(maps):
        n = u.grid.sizes[k]
        if direction == X_TO_TAU:
            src_period, dst_period = m.period, m.new_period
            targets = m.inverse(np.arange(n) * dst_period / n)
        else:
            src_period, dst_period = m.new_period, m.period
            targets = m.tau(np.arange(n) * dst_period / n)
        if not np.isclose(u.grid.periods[k], src_period, rtol=1e-12):
            raise DimensionMismatch(f"axis {k} period does not match the map's source coordinate")
        vals = _resample(vals, k, trig_matrix(n, src_period, targets))
        periods.append(dst_period)
    return Field(make_grid(u.grid.n, u.grid.sizes, periods), vals)


def degenerate_derivative(u: Field, gamma: DegWeight, axis: int = 0, order: int = 1) -> Field:
    """``(gamma(x_k) d/dx_k)^order u``."""
    if order < 1:
        raise ParameterOutOfRange("derivative order must be >= 1")
    x = u.grid.nodes(axis)
    shape = [1] * u.grid.n + [1]
    shape[axis] = u.grid.sizes[axis]
    g = gamma.evaluate(x, u.grid.periods[axis]).reshape(shape)
    for _ in range(order):
        u = u.with_values(g * axis_derivative(u, axis, 1).values)
    return u


def degenerate_apply(u: Field, A: DiagOperator, t, lam: complex, l, gammas: Sequence[DegWeight]) -> Field:
    """``sum_k (-1)^{l_k} t_k D_k^{[2 l_k]} u + (A + lambda) u``."""
    out = u.values * (A.d + lam)
    for k, (tk, lk) in enumerate(zip(t, l)):
        out = out + (-1) ** lk * tk * degenerate_derivative(u, gammas[k], k, 2 * lk).values
    return u.with_values(out)


def degenerate_residual(u: Field, f: Field, A: DiagOperator, t, lam, l, gammas) -> float:
    r = np.max(np.abs(degenerate_apply(u, A, t, lam, l, gammas).values - f.values))
    return float(r / np.max(np.abs(f.values)))


def solve_degenerate(
    f: Field, A: DiagOperator, t, lam: complex, l, gammas: Sequence[DegWeight]
) -> Field:
    maps = substitutions(gammas, f.grid)
    f_tau = transform_field(f, maps, X_TO_TAU)
    u_tau = solve_principal(f_tau, EllipticProblem(A, tuple(t), lam, tuple(l)))
    return transform_field(u_tau, maps, TAU_TO_X)


@dataclass
class DegenerateComparison:
    degenerate_constant: float
    regular_constant: float

    @property
    def ratio(self) -> float:
        return self.degenerate_constant / self.regular_constant


def degenerate_coercivity(
    f: Field, A: DiagOperator, t, lam: complex, l, gammas: Sequence[DegWeight], p: float = 2.0
) -> DegenerateComparison:
    """Coercive constants in degenerate norms and for the transformed regular problem.

    The regular problem is measured in ``L_p`` with the pulled-back weight on
    the tau grid, which matches the unweighted x-norms up to quadrature.  A
    single exponent is used because the sampled weight enters the innermost
    integral as a whole.
    """
    maps = substitutions(gammas, f.grid)
    f_tau = transform_field(f, maps, X_TO_TAU)
    prob = EllipticProblem(A, tuple(t), lam, tuple(l))
    u_tau = solve_principal(f_tau, prob)
    u = transform_field(u_tau, maps, TAU_TO_X)
    deg = coercivity_terms(
        u, f, prob.t, lam, prob.l, A, (p,),
        derivative=lambda v, k, i: degenerate_derivative(v, gammas[k], k, i),
    )
    w = pulled_back_weight(maps, f_tau.grid)
    reg = coercivity_terms(u_tau, f_tau, prob.t, lam, prob.l, A, (p,), w)
    return DegenerateComparison(deg.empirical_constant, reg.empirical_constant)
