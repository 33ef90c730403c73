"""
Cauchy problem ``u' + sum_k (-1)^{l_k} eps_k D_k^{2 l_k} u + A u = f``, ``u(0) = 0``.

Each Fourier mode and component obeys ``u' + omega u = f`` with
``omega = d_m + sum_k eps_k xi_k^{2 l_k} > 0``.  The solver integrates the
Duhamel formula exactly for data that are piecewise linear in time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .degenerate import (
    TAU_TO_X,
    X_TO_TAU,
    DegWeight,
    degenerate_derivative,
    substitutions,
    transform_field,
)
from .elliptic import anisotropic_symbol
from .errors import DimensionMismatch, ParameterOutOfRange, ResidualTooLarge
from .grid_norms import Field, Grid, Weight, iterated_norm, make_grid, pointwise_norm
from .operator_core import DiagOperator
from .report import Report

SERIES_CUTOFF = 0.1
_PSI_TERMS = 14


@dataclass(frozen=True)
class ParabolicProblem:
    A: DiagOperator
    eps: tuple[float, ...]
    l: tuple[int, ...]
    T_final: float = 1.0
    n_t: int = 64
    p0: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, "eps", tuple(float(e) for e in self.eps))
        object.__setattr__(self, "l", tuple(int(x) for x in self.l))
        if len(self.eps) != len(self.l):
            raise DimensionMismatch("eps and l must have equal length")
        if any(e <= 0 for e in self.eps):
            raise ParameterOutOfRange("eps_k must be positive")
        if any(x < 1 for x in self.l):
            raise ParameterOutOfRange("l_k must be positive integers")
        if not self.T_final > 0:
            raise ParameterOutOfRange("T_final must be positive")
        if self.n_t < 8:
            raise ParameterOutOfRange("need at least 8 time steps")

    @property
    def n(self) -> int:
        return len(self.eps)

    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.T_final, self.n_t + 1)

    def decay_rates(self, grid: Grid) -> np.ndarray:
        """``omega`` of shape ``(*sizes, M)``."""
        if grid.n != self.n:
            raise DimensionMismatch("grid and problem dimensions differ")
        return self.A.d + anisotropic_symbol(grid, self.eps, self.l)[..., None]


@dataclass(frozen=True)
class SpaceTimeField:
    """Samples of shape ``(n_times, *grid.sizes, M)`` on a uniform time grid."""

    grid: Grid
    times: np.ndarray = field(compare=False)
    values: np.ndarray = field(compare=False)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        vals = np.array(self.values, dtype=complex)
        if vals.ndim == self.grid.n + 1:
            vals = vals[..., None]
        if vals.shape[:-1] != (len(times),) + self.grid.sizes:
            raise DimensionMismatch(f"values of shape {vals.shape} do not match the space-time lattice")
        vals.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", vals)

    @property
    def m_components(self) -> int:
        return self.values.shape[-1]

    def at(self, j: int) -> Field:
        return Field(self.grid, self.values[j])

    def with_values(self, values: np.ndarray) -> "SpaceTimeField":
        return SpaceTimeField(self.grid, self.times, values)

    @classmethod
    def from_function(
        cls, grid: Grid, times: Sequence[float], func: Callable, m_components: int = 1
    ) -> "SpaceTimeField":
        """``func(t, *mesh)`` returns grid-shaped values (component 0) or ``(*sizes, M)``."""
        times = np.asarray(times, dtype=float)
        out = np.zeros((len(times),) + grid.sizes + (m_components,), dtype=complex)
        mesh = grid.mesh()
        for j, t in enumerate(times):
            v = np.asarray(func(t, *mesh), dtype=complex)
            if v.shape == grid.sizes:
                out[j, ..., 0] = v
            else:
                out[j] = np.broadcast_to(v, grid.sizes + (m_components,))
        return cls(grid, times, out)

    @classmethod
    def zeros(cls, grid: Grid, times: Sequence[float], m_components: int = 1) -> "SpaceTimeField":
        times = np.asarray(times, dtype=float)
        return cls(grid, times, np.zeros((len(times),) + grid.sizes + (m_components,), dtype=complex))


def _spatial_axes(grid: Grid) -> tuple[int, ...]:
    return tuple(range(1, grid.n + 1))


def _fft_x(values: np.ndarray, grid: Grid) -> np.ndarray:
    return np.fft.fftn(values, axes=_spatial_axes(grid)) / math.prod(grid.sizes)


def _ifft_x(values: np.ndarray, grid: Grid) -> np.ndarray:
    return np.fft.ifftn(values, axes=_spatial_axes(grid)) * math.prod(grid.sizes)


def phi1(z: np.ndarray) -> np.ndarray:
    """``(1 - e^{-z}) / z``."""
    z = np.asarray(z, dtype=float)
    out = np.ones_like(z)
    nz = z != 0
    out[nz] = -np.expm1(-z[nz]) / z[nz]
    return out


def psi(z: np.ndarray) -> np.ndarray:
    """``(1 - e^{-z}(1 + z)) / z^2``, by its power series near zero."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = z < SERIES_CUTOFF
    zs = z[small]
    acc = np.zeros_like(zs)
    for k in reversed(range(_PSI_TERMS)):
        acc = acc * zs + (-1) ** k / (math.factorial(k) * (k + 2))
    out[small] = acc
    zb = z[~small]
    out[~small] = (-np.expm1(-zb) - zb * np.exp(-zb)) / zb**2
    return out


def solve_cauchy(f: SpaceTimeField, prob: ParabolicProblem) -> SpaceTimeField:
    """Exponential integrator with piecewise-linear forcing; exact for such ``f``."""
    if f.m_components != prob.A.m_components:
        raise DimensionMismatch("forcing components do not match the operator size")
    times = f.times
    steps = np.diff(times)
    if len(times) < 2 or np.any(steps <= 0):
        raise ParameterOutOfRange("time nodes must be strictly increasing")
    omega = prob.decay_rates(f.grid)
    fh = _fft_x(f.values, f.grid)
    uh = np.zeros_like(fh)
    cache: dict[float, tuple] = {}
    for j, dt in enumerate(steps):
        key = float(dt)
        if key not in cache:
            z = omega * dt
            p1, ps = phi1(z), psi(z)
            cache[key] = (np.exp(-z), dt * ps, dt * (p1 - ps))
        decay, w0, w1 = cache[key]
        uh[j + 1] = decay * uh[j] + w0 * fh[j] + w1 * fh[j + 1]
    return f.with_values(_ifft_x(uh, f.grid))


def time_derivative(u: SpaceTimeField, f: SpaceTimeField, prob: ParabolicProblem) -> SpaceTimeField:
    """``u' = f - (O_eps + A) u`` evaluated mode by mode."""
    omega = prob.decay_rates(u.grid)
    uh = _fft_x(u.values, u.grid)
    fh = _fft_x(f.values, f.grid)
    return u.with_values(_ifft_x(fh - omega * uh, u.grid))


def spatial_norms(u: SpaceTimeField, p=(2.0,), weight: Weight | None = None, q: float = 2.0) -> np.ndarray:
    mags = pointwise_norm(u.values, q)
    return np.array([iterated_norm(m, u.grid, p, weight) for m in mags])


def spacetime_norm(
    u: SpaceTimeField, p0: float = 2.0, p=(2.0,), weight: Weight | None = None, q: float = 2.0
) -> float:
    """``L_{p0}(0, T; L_p)`` norm, trapezoid rule in time."""
    s = spatial_norms(u, p, weight, q)
    return float(np.trapezoid(s**p0, u.times) ** (1.0 / p0))


def _axis_power(u: SpaceTimeField, axis: int, order: int) -> SpaceTimeField:
    shape = [1] * (u.grid.n + 2)
    shape[axis + 1] = u.grid.sizes[axis]
    mult = ((1j * u.grid.wavenumbers(axis)) ** order).reshape(shape)
    return u.with_values(_ifft_x(_fft_x(u.values, u.grid) * mult, u.grid))


@dataclass
class ParabolicTerms:
    dt_norm: float
    eps_terms: list[float]
    a_norm: float
    f_norm: float

    @property
    def lhs(self) -> float:
        return self.dt_norm + sum(self.eps_terms) + self.a_norm

    @property
    def empirical_constant(self) -> float:
        return self.lhs / self.f_norm if self.f_norm > 0 else 0.0


def parabolic_terms(
    u: SpaceTimeField,
    f: SpaceTimeField,
    prob: ParabolicProblem,
    p=(2.0,),
    weight: Weight | None = None,
    check: bool = True,
    rtol: float = 1e-8,
) -> ParabolicTerms:
    """Norms of ``u'``, ``eps_k D_k^{2 l_k} u`` and ``A u`` against ``f``."""
    if check:
        ref = solve_cauchy(f, prob).values
        scale = max(np.max(np.abs(ref)), np.max(np.abs(f.values)), 1e-300)
        err = np.max(np.abs(ref - u.values)) / scale if ref.size else 0.0
        if err > rtol:
            raise ResidualTooLarge(f"u is not the solution for f (relative mismatch {err:.3e})")
    q = prob.A.q

    def norm(v):
        return spacetime_norm(v, prob.p0, p, weight, q)

    dt = norm(time_derivative(u, f, prob))
    eps_terms = [ek * norm(_axis_power(u, k, 2 * lk)) for k, (ek, lk) in enumerate(zip(prob.eps, prob.l))]
    a = norm(u.with_values(u.values * prob.A.d))
    return ParabolicTerms(dt, eps_terms, a, norm(f))


def parabolic_coercivity_report(
    u: SpaceTimeField, f: SpaceTimeField, prob: ParabolicProblem, p=(2.0,), weight: Weight | None = None
) -> Report:
    terms = parabolic_terms(u, f, prob, p, weight)
    report = Report(["eps", "dt_norm", "eps_terms", "a_norm", "f_norm", "empirical_constant"])
    report.add(
        eps=list(prob.eps), dt_norm=terms.dt_norm, eps_terms=terms.eps_terms,
        a_norm=terms.a_norm, f_norm=terms.f_norm, empirical_constant=terms.empirical_constant,
    )
    return report


def epsilon_sweep(
    template: ParabolicProblem,
    eps_values: Sequence[Sequence[float]],
    forcings: Sequence[SpaceTimeField],
    p=(2.0,),
) -> Report:
    """Largest empirical constant over the forcing batch for each ``eps``."""
    report = Report(["eps", "empirical_constant", "status"])
    for eps in eps_values:
        prob = ParabolicProblem(template.A, tuple(eps), template.l, template.T_final, template.n_t, template.p0)
        consts = [parabolic_terms(solve_cauchy(f, prob), f, prob, p, check=False).empirical_constant for f in forcings]
        report.add(eps=list(eps), empirical_constant=max(consts), status="ok")
    report.summarize("empirical_constant")
    return report


# ---------------------------------------------------------------------------
# Diagonal infinite systems, optionally with degenerate derivatives
# ---------------------------------------------------------------------------


def _map_slices(u: SpaceTimeField, maps, direction: str) -> SpaceTimeField:
    slices = [transform_field(u.at(j), maps, direction) for j in range(len(u.times))]
    return SpaceTimeField(slices[0].grid, u.times, np.stack([s.values for s in slices]))


def infinite_system_solve(
    f: SpaceTimeField,
    d: Sequence[float],
    eps: Sequence[float],
    l: Sequence[int],
    gammas: Sequence[DegWeight] | None = None,
) -> SpaceTimeField:
    """Truncated system ``u_m' + sum (-1)^{l_k} eps_k D_k^{[2 l_k]} u_m + d_m u_m = f_m``.

    Without ``gammas`` the derivatives are ordinary.  With them, each time slice
    is mapped to the coordinates where the degenerate derivatives become
    ordinary ones, solved there, and mapped back.
    """
    prob = ParabolicProblem(DiagOperator(tuple(d)), tuple(eps), tuple(l), float(f.times[-1]), max(len(f.times) - 1, 8))
    if gammas is None:
        return solve_cauchy(f, prob)
    maps = substitutions(gammas, f.grid)
    return _map_slices(solve_cauchy(_map_slices(f, maps, X_TO_TAU), prob), maps, TAU_TO_X)


def degenerate_system_residual(
    u: SpaceTimeField,
    f: SpaceTimeField,
    d: Sequence[float],
    eps: Sequence[float],
    l: Sequence[int],
    gammas: Sequence[DegWeight],
) -> float:
    """Relative sup residual of the degenerate system in x coordinates.

    The time derivative is taken from the mode equations in the mapped
    coordinates and pulled back, so the check exercises the degenerate
    derivatives and both resamplings.
    """
    maps = substitutions(gammas, f.grid)
    prob = ParabolicProblem(DiagOperator(tuple(d)), tuple(eps), tuple(l), float(f.times[-1]), max(len(f.times) - 1, 8))
    u_tau, f_tau = _map_slices(u, maps, X_TO_TAU), _map_slices(f, maps, X_TO_TAU)
    ut = _map_slices(time_derivative(u_tau, f_tau, prob), maps, TAU_TO_X)
    dvec = np.asarray(d, dtype=float)
    worst = 0.0
    for j in range(len(u.times)):
        uj = u.at(j)
        res = ut.values[j] + dvec * uj.values - f.values[j]
        for k, (ek, lk) in enumerate(zip(eps, l)):
            res = res + (-1) ** lk * ek * degenerate_derivative(uj, gammas[k], k, 2 * lk).values
        worst = max(worst, float(np.max(np.abs(res))))
    return worst / float(np.max(np.abs(f.values)))
