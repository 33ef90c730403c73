"""Numerical checks of anisotropic embedding and multiplicative inequalities."""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, ParameterOutOfRange, ZeroField
from .grid_norms import Field, Weight, axis_derivative, iterated_norm, pointwise_norm, spectral_derivative
from .operator_core import DiagOperator, InterpParams, interpolation_norm, interpolation_norm_realized
from .report import Report


def kappa(alpha: Sequence[int], l: Sequence[int], p: Sequence[float], q: Sequence[float], exact: bool = False):
    """``sum_k (alpha_k + 1/p_k - 1/q_k) / l_k``, evaluated in rational arithmetic.

    With ``exact=True`` the :class:`~fractions.Fraction` is returned.
    """
    if not (len(alpha) == len(l) == len(p) == len(q)):
        raise DimensionMismatch("alpha, l, p and q must share one length")
    total = sum(
        (Fraction(int(a)) + 1 / Fraction(pk) - 1 / Fraction(qk)) / int(lk)
        for a, lk, pk, qk in zip(alpha, l, p, q)
    )
    return Fraction(total) if exact else float(total)


def t_factor(t: Sequence[float], alpha: Sequence[int], l: Sequence[int], sigma: Sequence[float]) -> float:
    return float(np.prod([tk ** ((a + s) / lk) for tk, a, lk, s in zip(t, alpha, l, sigma)]))


@dataclass(frozen=True)
class EmbeddingParams:
    alpha: tuple[int, ...]
    l: tuple[int, ...]
    p: tuple[float, ...]
    q: tuple[float, ...]
    A: DiagOperator
    mu: float = 0.0
    t: tuple[float, ...] | None = None
    h: float = 1.0
    weight: Weight | None = None

    def __post_init__(self):
        n = len(self.alpha)
        object.__setattr__(self, "alpha", tuple(int(a) for a in self.alpha))
        object.__setattr__(self, "l", tuple(int(x) for x in self.l))
        object.__setattr__(self, "p", tuple(float(x) for x in self.p))
        object.__setattr__(self, "q", tuple(float(x) for x in self.q))
        object.__setattr__(self, "t", (1.0,) * n if self.t is None else tuple(float(x) for x in self.t))
        if not (len(self.l) == len(self.p) == len(self.q) == len(self.t) == n):
            raise DimensionMismatch("alpha, l, p, q and t must share one length")
        if any(pk > qk for pk, qk in zip(self.p, self.q)):
            raise ParameterOutOfRange("need p_k <= q_k on every axis")
        if any(tk <= 0 for tk in self.t) or self.h <= 0:
            raise ParameterOutOfRange("t_k and h must be positive")
        k = self.kappa
        if k > 1:
            raise ParameterOutOfRange(f"kappa = {k} exceeds 1")
        if not (0 <= self.mu and self.mu + k <= 1 + 1e-15):
            raise ParameterOutOfRange(f"need 0 <= mu <= 1 - kappa = {1 - k:.6g}, got mu={self.mu}")

    @property
    def n(self) -> int:
        return len(self.alpha)

    @property
    def sigma(self) -> tuple[float, ...]:
        return tuple(1 / pk - 1 / qk for pk, qk in zip(self.p, self.q))

    @property
    def kappa(self) -> float:
        return kappa(self.alpha, self.l, self.p, self.q)

    @property
    def theta(self) -> float:
        """Fractional power of the target space ``E(A^{1-kappa-mu})``."""
        return max(0.0, 1.0 - self.kappa - self.mu)

    @property
    def T(self) -> float:
        return t_factor(self.t, self.alpha, self.l, self.sigma)


def graph_magnitude(A: DiagOperator, values: np.ndarray, theta: float) -> np.ndarray:
    """Pointwise ``||A^theta v|| + ||v||``; at ``theta = 0`` the space is ``E`` itself."""
    base = pointwise_norm(values, A.q)
    if theta == 0:
        return base
    return pointwise_norm(values * A.d**theta, A.q) + base


@dataclass(frozen=True)
class EmbeddingTerms:
    """The h-independent pieces of the embedding inequality."""

    lhs: float
    w_norm: float
    lp_norm: float

    def rhs(self, h, mu: float):
        h = np.asarray(h, dtype=float)
        return h**mu * self.w_norm + h ** (mu - 1) * self.lp_norm

    def ratio(self, h, mu: float):
        r = self.rhs(h, mu)
        return np.where(r > 0, self.lhs / np.where(r > 0, r, 1.0), 0.0)


def w_norm(u: Field, ep: EmbeddingParams) -> float:
    """``||u||_{L_p(E(A))} + sum_k t_k ||D_k^{l_k} u||_{L_p(E)}``."""
    total = iterated_norm(graph_magnitude(ep.A, u.values, 1.0), u.grid, ep.p, ep.weight)
    for k, (tk, lk) in enumerate(zip(ep.t, ep.l)):
        du = axis_derivative(u, k, lk)
        total += tk * iterated_norm(pointwise_norm(du.values, ep.A.q), u.grid, ep.p, ep.weight)
    return total


def lp_norm(u: Field, ep: EmbeddingParams) -> float:
    return iterated_norm(pointwise_norm(u.values, ep.A.q), u.grid, ep.p, ep.weight)


def embedding_terms(u: Field, ep: EmbeddingParams) -> EmbeddingTerms:
    if u.grid.n != ep.n or u.m_components != ep.A.m_components:
        raise DimensionMismatch("field does not match the embedding parameters")
    du = spectral_derivative(u, ep.alpha)
    lhs = ep.T * iterated_norm(graph_magnitude(ep.A, du.values, ep.theta), u.grid, ep.q, ep.weight)
    return EmbeddingTerms(lhs, w_norm(u, ep), lp_norm(u, ep))


def mode_cap(grid, ep: EmbeddingParams, h: float) -> float:
    """Upper bound for the inequality ratio at ``p = q = 2`` from a per-mode sup.

    By Plancherel the left side is at most ``2 sup T|xi^alpha| max(d^theta, 1) / m``
    times ``||m u_hat||``, and the right side is at least ``||m u_hat||`` with
    ``m = h^mu (d + 1 + sum t_k |xi_k|^{l_k}) + h^{mu-1}``.
    """
    xi = grid.frequency_mesh()
    mono = np.ones(grid.sizes)
    aniso = np.zeros(grid.sizes)
    for k in range(grid.n):
        mono = mono * np.abs(xi[k]) ** ep.alpha[k]
        aniso = aniso + ep.t[k] * np.abs(xi[k]) ** ep.l[k]
    d = ep.A.d
    m = h**ep.mu * (d + 1 + aniso[..., None]) + h ** (ep.mu - 1)
    num = ep.T * mono[..., None] * np.maximum(d**ep.theta, 1.0)
    return float(2 * np.max(num / m))


def embedding_inequality_report(
    u: Field, ep: EmbeddingParams, h_values: Sequence[float] | None = None
) -> Report:
    """LHS, RHS and their ratio for each ``h``."""
    terms = embedding_terms(u, ep)
    hs = [ep.h] if h_values is None else list(h_values)
    report = Report(["h", "lhs", "rhs", "ratio"], metadata={"kappa": ep.kappa, "mu": ep.mu, "T": ep.T})
    for h in hs:
        report.add(h=float(h), lhs=terms.lhs, rhs=float(terms.rhs(h, ep.mu)), ratio=float(terms.ratio(h, ep.mu)))
    report.summarize("ratio")
    return report


def multiplicative_constant(u: Field, ep: EmbeddingParams) -> float:
    """``LHS / (||u||_W^{1-mu} ||u||_{L_p}^mu)``, i.e. the inequality at ``h* = ||u||_{L_p} / ||u||_W``."""
    terms = embedding_terms(u, ep)
    if terms.lp_norm == 0:
        raise ZeroField("multiplicative estimate needs u != 0")
    return terms.lhs / (terms.w_norm ** (1 - ep.mu) * terms.lp_norm**ep.mu)


def multiplicative_report(u: Field, ep: EmbeddingParams) -> Report:
    terms = embedding_terms(u, ep)
    if terms.lp_norm == 0:
        raise ZeroField("multiplicative estimate needs u != 0")
    h_star = terms.lp_norm / terms.w_norm
    c = terms.lhs / (terms.w_norm ** (1 - ep.mu) * terms.lp_norm**ep.mu)
    report = Report(["mu", "h_star", "lhs", "w_norm", "lp_norm", "empirical_constant"])
    report.add(mu=ep.mu, h_star=h_star, lhs=terms.lhs, w_norm=terms.w_norm, lp_norm=terms.lp_norm, empirical_constant=c)
    return report


def interpolation_embedding_report(
    u: Field, ep: EmbeddingParams, sigma: float = 2.0, h: float = 1.0, realized: bool = False
) -> Report:
    """Inequality with the target measured in the interpolation space of order ``kappa + mu``."""
    if not (0 < ep.mu < 1 - ep.kappa):
        raise ParameterOutOfRange("need 0 < mu < 1 - kappa")
    theta = ep.kappa + ep.mu
    du = spectral_derivative(u, ep.alpha).values
    if realized:
        pointwise = interpolation_norm_realized(ep.A, du, theta)
    else:
        pointwise = interpolation_norm(ep.A, du, InterpParams(theta, sigma))
    lhs = ep.T * iterated_norm(np.asarray(pointwise), u.grid, ep.q, ep.weight)
    rhs = h**ep.mu * w_norm(u, ep) + h ** (ep.mu - 1) * lp_norm(u, ep)
    report = Report(["theta", "sigma", "h", "lhs", "rhs", "empirical_constant", "norm"])
    report.add(
        theta=theta, sigma=sigma, h=h, lhs=lhs, rhs=rhs,
        empirical_constant=lhs / rhs if rhs > 0 else 0.0,
        norm="realized" if realized else "canonical",
    )
    return report


def sup_constant(fields: Sequence[Field], ep: EmbeddingParams, h_values: Sequence[float]) -> float:
    """``max`` of the inequality ratio over a field family and an ``h`` grid."""
    hs = np.asarray(h_values, dtype=float)
    best = 0.0
    for u in fields:
        best = max(best, float(np.max(embedding_terms(u, ep).ratio(hs, ep.mu))))
    return best


def t_uniformity_sweep(
    fields: Sequence[Field], ep: EmbeddingParams, t_values: Sequence[Sequence[float]], h_values: Sequence[float]
) -> Report:
    """Sup constant of the inequality for each ``t``; uniformity means a flat column."""
    report = Report(["t", "sup_constant"])
    for t in t_values:
        report.add(t=list(t), sup_constant=sup_constant(fields, replace(ep, t=tuple(t)), h_values))
    report.summarize("sup_constant")
    return report
