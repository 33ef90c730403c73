"""
Spectral solution of the anisotropic operator equation

    sum_k (-1)^{l_k} t_k D_k^{2 l_k} u + (A + lambda) u + lower-order terms = f

on a periodic grid, plus coercive-estimate reports.

The principal part is a Fourier multiplier and is inverted mode by mode.
Lower-order terms ``prod_k t_k^{alpha_k / 2 l_k} a(x) A^theta D^alpha u`` are
handled by the fixed-point iteration ``u <- (O_0 + lambda)^{-1} (f - O_1 u)``,
which converges when ``O_1 (O_0 + lambda)^{-1}`` is a contraction.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    MaxIterations,
    NotContractive,
    ParameterOutOfRange,
    ResidualTooLarge,
    SingularResolvent,
    SobolevLabError,
    ZeroField,
)
from .grid_norms import (
    Field,
    Grid,
    Weight,
    apply_multiplier,
    axis_derivative,
    mixed_norm,
    random_band_limited,
    spectral_derivative,
)
from .operator_core import DiagOperator
from .report import Report

SINGULAR_RTOL = 1e-12


@dataclass(frozen=True)
class LowerTerm:
    """``a(x) A^theta D^alpha`` with ``a`` a constant, a callable of the mesh, or grid samples."""

    alpha: tuple[int, ...]
    theta_power: float = 0.0
    coeff: complex | Callable | np.ndarray = 1.0

    def __post_init__(self):
        object.__setattr__(self, "alpha", tuple(int(a) for a in self.alpha))

    def coeff_values(self, grid: Grid):
        c = self.coeff
        if callable(c):
            return np.asarray(c(*grid.mesh()), dtype=complex)
        c = np.asarray(c, dtype=complex)
        if c.ndim and c.shape != grid.sizes:
            raise DimensionMismatch("coefficient samples do not match the grid")
        return c


@dataclass(frozen=True)
class EllipticProblem:
    A: DiagOperator
    t: tuple[float, ...]
    lam: complex
    l: tuple[int, ...]
    lower_terms: tuple[LowerTerm, ...] = ()
    mu: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "t", tuple(float(x) for x in self.t))
        object.__setattr__(self, "l", tuple(int(x) for x in self.l))
        object.__setattr__(self, "lower_terms", tuple(self.lower_terms))
        if len(self.t) != len(self.l):
            raise DimensionMismatch("t and l must have equal length")
        if any(x <= 0 for x in self.t):
            raise ParameterOutOfRange("t_k must be positive")
        if any(x < 1 for x in self.l):
            raise ParameterOutOfRange("l_k must be positive integers")
        for term in self.lower_terms:
            if len(term.alpha) != self.n:
                raise DimensionMismatch("lower-term multi-index has the wrong length")
            weight = self.order_ratio(term.alpha)
            if not weight < 1:
                raise ParameterOutOfRange(f"|alpha:2l| = {weight} must be < 1")
            limit = 1 - weight - (self.mu or 0.0)
            ok = term.theta_power <= limit if self.mu else term.theta_power < limit
            if not ok:
                raise ParameterOutOfRange(
                    f"theta_power={term.theta_power} exceeds 1 - |alpha:2l| - mu = {limit}"
                )

    @property
    def n(self) -> int:
        return len(self.t)

    def order_ratio(self, alpha: Sequence[int]) -> float:
        return sum(a / (2 * lk) for a, lk in zip(alpha, self.l))

    def principal_only(self) -> "EllipticProblem":
        return replace(self, lower_terms=())

    def with_lambda(self, lam: complex) -> "EllipticProblem":
        return replace(self, lam=lam)

    def with_t(self, t: Sequence[float]) -> "EllipticProblem":
        return replace(self, t=tuple(t))


# ---------------------------------------------------------------------------
# Operators on fields
# ---------------------------------------------------------------------------


def anisotropic_symbol(grid: Grid, t: Sequence[float], l: Sequence[int]) -> np.ndarray:
    """``sum_k t_k xi_k^{2 l_k}`` on the frequency lattice."""
    out = np.zeros(grid.sizes)
    for k, (tk, lk) in enumerate(zip(t, l)):
        shape = [1] * grid.n
        shape[k] = grid.sizes[k]
        out = out + (tk * grid.wavenumbers(k) ** (2 * lk)).reshape(shape)
    return out


def principal_denominator(grid: Grid, prob: EllipticProblem) -> np.ndarray:
    if grid.n != prob.n:
        raise DimensionMismatch("grid and problem dimensions differ")
    den = prob.A.d + prob.lam + anisotropic_symbol(grid, prob.t, prob.l)[..., None]
    scale = np.abs(prob.A.d).max() + abs(prob.lam) + 1.0
    if np.any(np.abs(den) <= SINGULAR_RTOL * scale):
        raise SingularResolvent("A + lambda + sum t_k xi_k^{2l_k} vanishes on a grid mode")
    return den


def _check_field(u: Field, prob: EllipticProblem) -> None:
    if u.m_components != prob.A.m_components:
        raise DimensionMismatch("field components do not match the operator size")


def principal_apply(u: Field, prob: EllipticProblem) -> Field:
    """``(O_0 + lambda) u``."""
    _check_field(u, prob)
    sym = prob.A.d + prob.lam + anisotropic_symbol(u.grid, prob.t, prob.l)[..., None]
    return apply_multiplier(u, sym)


def lower_apply(u: Field, prob: EllipticProblem) -> Field:
    """``O_1 u = sum prod t_k^{alpha_k/2l_k} a(x) A^theta D^alpha u``."""
    out = np.zeros_like(u.values)
    for term in prob.lower_terms:
        scale = float(np.prod([tk ** (a / (2 * lk)) for tk, a, lk in zip(prob.t, term.alpha, prob.l)]))
        du = spectral_derivative(u, term.alpha).values * prob.A.d**term.theta_power
        c = term.coeff_values(u.grid)
        out = out + scale * (c[..., None] if np.ndim(c) else c) * du
    return u.with_values(out)


def full_apply(u: Field, prob: EllipticProblem) -> Field:
    res = principal_apply(u, prob)
    if prob.lower_terms:
        res = res + lower_apply(u, prob)
    return res


def relative_residual(u: Field, f: Field, prob: EllipticProblem) -> float:
    """``||L u - f||_inf / ||f||_inf``."""
    r = np.max(np.abs(full_apply(u, prob).values - f.values))
    fn = np.max(np.abs(f.values))
    return float(r / fn) if fn > 0 else float(r)


# ---------------------------------------------------------------------------
# Solvers
# ---------------------------------------------------------------------------


def solve_principal(f: Field, prob: EllipticProblem) -> Field:
    """``u = F^{-1} [(A + lambda + sum t_k xi_k^{2l_k})^{-1} F f]``."""
    if prob.lower_terms:
        raise ValueError("solve_principal ignores lower-order terms; use solve_perturbed")
    _check_field(f, prob)
    return apply_multiplier(f, 1.0 / principal_denominator(f.grid, prob))


@dataclass
class PerturbedSolution:
    u: Field
    rho: float
    iterations: int
    gaps: list[float] = field(default_factory=list)
    residual: float = 0.0


def _l2(u: Field) -> float:
    return mixed_norm(u, (2.0,), q=2.0)


def contraction_estimate(prob: EllipticProblem, probes: Sequence[Field]) -> float:
    """``max ||O_1 (O_0 + lambda)^{-1} g|| / ||g||`` over probe fields."""
    principal = prob.principal_only()
    ratios = []
    for g in probes:
        gn = _l2(g)
        if gn == 0:
            continue
        ratios.append(_l2(lower_apply(solve_principal(g, principal), prob)) / gn)
    return max(ratios) if ratios else 0.0


def _probe_fields(f: Field, n_probes: int, seed: int) -> list[Field]:
    rng = np.random.Generator(np.random.Philox(seed))
    return [random_band_limited(f.grid, f.m_components, rng, 0.5, real=False) for _ in range(n_probes)] + [f]


def suggest_lambda(prob: EllipticProblem, probes: Sequence[Field], target: float = 0.9) -> float | None:
    for k in range(21):
        lam = 2.0**k
        try:
            if contraction_estimate(prob.with_lambda(lam), probes) < target:
                return lam
        except SingularResolvent:
            continue
    return None


def solve_perturbed(
    f: Field,
    prob: EllipticProblem,
    tol: float = 1e-10,
    maxit: int = 200,
    n_probes: int = 8,
    seed: int = 0,
) -> PerturbedSolution:
    """Fixed-point solve of the full problem.

    Iterates ``u_{j+1} = (O_0 + lambda)^{-1} (f - O_1 u_j)`` from
    ``u_0 = (O_0 + lambda)^{-1} f`` until ``||u_{j+1} - u_j|| <= tol ||f||``
    and the residual is below ``10 tol ||f||`` (L2 norms).
    """
    _check_field(f, prob)
    principal = prob.principal_only()
    if not prob.lower_terms:
        u = solve_principal(f, principal)
        return PerturbedSolution(u, 0.0, 1, [], relative_residual(u, f, prob))
    probes = _probe_fields(f, n_probes, seed)
    rho = contraction_estimate(prob, probes)
    if rho >= 1:
        raise NotContractive(rho, suggest_lambda(prob, probes))
    fnorm = _l2(f)
    u = solve_principal(f, principal)
    gaps = []
    for it in range(1, maxit + 1):
        u_next = solve_principal(f - lower_apply(u, prob), principal)
        step = u_next - u
        gap = _l2(step)
        gaps.append(gap)
        u = u_next
        # L u_{j+1} - f = O_1 (u_{j+1} - u_j), so the residual is known for free
        if gap <= tol * fnorm and _l2(lower_apply(step, prob)) <= 10 * tol * fnorm:
            break
    else:
        raise MaxIterations(f"no convergence in {maxit} iterations (last gap {gaps[-1]:.3e})")
    res = _l2(full_apply(u, prob) - f) / fnorm if fnorm else 0.0
    if res > 10 * tol:
        raise ResidualTooLarge(f"relative residual {res:.3e} exceeds {10 * tol:.1e}")
    return PerturbedSolution(u, rho, it + 1, gaps, res)


# ---------------------------------------------------------------------------
# Coercive estimates
# ---------------------------------------------------------------------------


def young_cap(l: Sequence[int]) -> float:
    """Analytic ceiling ``n + sum_k (2 l_k + 1) + 1`` for real positive lambda."""
    return len(l) + sum(2 * lk + 1 for lk in l) + 1


@dataclass
class CoercivityReport:
    terms: dict[tuple[int, int], float]
    a_norm: float
    f_norm: float

    @property
    def lhs(self) -> float:
        return sum(self.terms.values()) + self.a_norm

    @property
    def empirical_constant(self) -> float:
        return self.lhs / self.f_norm


def coercivity_terms(
    u: Field,
    f: Field,
    t: Sequence[float],
    lam: complex,
    l: Sequence[int],
    A: DiagOperator,
    p=(2.0,),
    weight: Weight | None = None,
    derivative: Callable[[Field, int, int], Field] | None = None,
) -> CoercivityReport:
    """Populate the report from given fields; ``derivative(u, k, i)`` defaults to ``D_k^i``."""
    derivative = derivative or (lambda v, k, i: axis_derivative(v, k, i))
    q = A.q
    f_norm = mixed_norm(f, p, weight, q)
    if f_norm == 0:
        raise ZeroField("coercive estimate needs f != 0")
    terms = {}
    for k, lk in enumerate(l):
        for i in range(2 * lk + 1):
            r = i / (2 * lk)
            scale = t[k] ** r * abs(lam) ** (1 - r)
            du = u if i == 0 else derivative(u, k, i)
            terms[(k, i)] = scale * mixed_norm(du, p, weight, q)
    a_norm = mixed_norm(u.with_values(u.values * A.d), p, weight, q)
    return CoercivityReport(terms, a_norm, f_norm)


def coercivity_report(
    u: Field,
    f: Field,
    prob: EllipticProblem,
    p=(2.0,),
    weight: Weight | None = None,
    residual_tol: float = 1e-8,
) -> CoercivityReport:
    if not np.any(f.values):
        raise ZeroField("coercive estimate needs f != 0")
    res = relative_residual(u, f, prob)
    if res > residual_tol:
        raise ResidualTooLarge(f"u does not solve the problem (relative residual {res:.3e})")
    return coercivity_terms(u, f, prob.t, prob.lam, prob.l, prob.A, p, weight)


def _solve(f: Field, prob: EllipticProblem) -> Field:
    if prob.lower_terms:
        return solve_perturbed(f, prob).u
    return solve_principal(f, prob)


def resolvent_sweep(
    template: EllipticProblem,
    lams: Sequence[complex],
    probes: Sequence[Field],
    p=(2.0,),
    weight: Weight | None = None,
    t_values: Sequence[Sequence[float]] | None = None,
) -> Report:
    """Empirical coercivity constants over a (t, lambda) grid.

    Each row holds the largest constant over the probe set, i.e. an estimate of
    the resolvent bound at that parameter point.  Solver failures become rows
    with a non-``ok`` status.
    """
    report = Report(["t", "lambda_re", "lambda_im", "empirical_constant", "n_probes", "status"])
    for t in t_values or [template.t]:
        for lam in lams:
            lam = complex(lam)
            row = dict(t=list(t), lambda_re=lam.real, lambda_im=lam.imag, n_probes=len(probes))
            try:
                prob = template.with_t(t).with_lambda(lam)
                consts = []
                for f in probes:
                    u = _solve(f, prob)
                    consts.append(coercivity_report(u, f, prob, p, weight).empirical_constant)
                report.add(**row, empirical_constant=max(consts), status="ok")
            except SobolevLabError as exc:
                report.add(**row, empirical_constant=None, status=type(exc).__name__)
    report.summarize("empirical_constant")
    return report


def fourier_mode(grid: Grid, index: Sequence[int], m_components: int = 1, component: int = 0) -> Field:
    """Complex exponential ``exp(i xi.x)`` in one component."""
    phase = sum(2 * np.pi * j / L * x for j, L, x in zip(index, grid.periods, grid.mesh()))
    vals = np.zeros(grid.sizes + (m_components,), dtype=complex)
    vals[..., component] = np.exp(1j * phase)
    return Field(grid, vals)
