"""
Operator-valued multiplier symbols and a numerical Mikhlin-condition check.

Every symbol here is diagonal in the component basis, so a symbol is
represented by a callable ``xi -> values`` mapping points of shape ``(P, n)``
to diagonal entries of shape ``(P, M)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DimensionMismatch, GridTouchesAxis, ParameterOutOfRange, SingularResolvent
from .operator_core import DiagOperator

Symbol = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SymbolParams:
    """Parameters ``(t, h, mu, lambda, l, alpha, sigma)`` of the multiplier family.

    ``sigma`` is the per-axis gap ``1/p_k - 1/q_k``.
    """

    t: tuple[float, ...]
    h: float = 1.0
    mu: float = 0.0
    lam: complex = 1.0
    l: tuple[int, ...] = (1,)
    alpha: tuple[int, ...] = (0,)
    sigma: tuple[float, ...] | None = None

    def __post_init__(self):
        n = len(self.t)
        sigma = (0.0,) * n if self.sigma is None else tuple(float(s) for s in self.sigma)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "t", tuple(float(x) for x in self.t))
        if not (len(self.l) == len(self.alpha) == len(sigma) == n):
            raise DimensionMismatch("t, l, alpha and sigma must share one length")
        if any(x <= 0 for x in self.t):
            raise ParameterOutOfRange("t_k must be positive")
        if self.h <= 0:
            raise ParameterOutOfRange("h must be positive")
        if any(s < 0 for s in sigma):
            raise ParameterOutOfRange("sigma_k = 1/p_k - 1/q_k must be non-negative")
        if any(int(x) != x or x < 1 for x in self.l):
            raise ParameterOutOfRange("l_k must be positive integers")
        if any(int(a) != a or a < 0 for a in self.alpha):
            raise ParameterOutOfRange("alpha must be a multi-index")
        kappa = self.kappa
        if not (0 <= self.mu <= 1 - kappa + 1e-15):
            raise ParameterOutOfRange(f"need 0 <= mu <= 1 - kappa = {1 - kappa:.6g}, got mu={self.mu}")

    @property
    def n(self) -> int:
        return len(self.t)

    @property
    def kappa(self) -> float:
        return sum((a + s) / lk for a, s, lk in zip(self.alpha, self.sigma, self.l))

    @property
    def t_factor(self) -> float:
        return float(
            np.prod([tk ** ((a + s) / lk) for tk, a, s, lk in zip(self.t, self.alpha, self.sigma, self.l)])
        )


def _points(xi, n: int) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    if xi.ndim == 0:
        xi = xi.reshape(1, 1)
    elif xi.ndim == 1:
        xi = xi.reshape(-1, 1) if n == 1 else xi.reshape(1, -1)
    if xi.shape[-1] != n:
        raise DimensionMismatch(f"points of dimension {xi.shape[-1]}, expected {n}")
    return xi


def psi_symbol(xi, sp: SymbolParams, A: DiagOperator) -> np.ndarray:
    """``T(t) |xi|^{alpha+sigma} A^{1-kappa-mu} h^{-mu} [A + sum t_k |xi_k|^{l_k} + 1/h]^{-1}``."""
    xi = _points(xi, sp.n)
    expo = np.asarray(sp.alpha, dtype=float) + np.asarray(sp.sigma)
    mono = np.prod(np.abs(xi) ** expo, axis=-1)
    aniso = np.sum(np.asarray(sp.t) * np.abs(xi) ** np.asarray(sp.l), axis=-1)
    d = A.d
    power = d ** (1 - sp.kappa - sp.mu)
    den = d[None, :] + aniso[:, None] + 1.0 / sp.h
    return sp.t_factor * mono[:, None] * power[None, :] * sp.h ** (-sp.mu) / den


def principal_symbol(xi, lam: complex, t: Sequence[float], l: Sequence[int], A: DiagOperator) -> np.ndarray:
    """``(A + lambda + sum t_k xi_k^{2 l_k})^{-1}`` per component."""
    xi = _points(xi, len(t))
    aniso = np.sum(np.asarray(t, dtype=float) * xi ** (2 * np.asarray(l)), axis=-1)
    den = A.d[None, :] + lam + aniso[:, None]
    if np.any(den == 0):
        raise SingularResolvent("principal symbol denominator vanishes")
    return 1.0 / den


def coercive_symbol_term(
    xi, lam: complex, t: Sequence[float], l: Sequence[int], k: int, i: int, A: DiagOperator
) -> np.ndarray:
    """``t_k^{i/2l_k} |lambda|^{1-i/2l_k} xi_k^i`` times the principal symbol."""
    lk = l[k]
    if not (0 <= i <= 2 * lk):
        raise ParameterOutOfRange(f"derivative order i={i} outside 0..{2 * lk}")
    xi = _points(xi, len(t))
    r = i / (2 * lk)
    scale = t[k] ** r * abs(lam) ** (1 - r)
    return scale * (xi[:, k] ** i)[:, None] * principal_symbol(xi, lam, t, l, A)


# ---------------------------------------------------------------------------
# Sample sets and the Mikhlin check
# ---------------------------------------------------------------------------


def dyadic_grid(n: int, j_min: int = -10, j_max: int = 10, per_octave: int = 1) -> np.ndarray:
    """All points with ``xi_k in +-{2^(j/per_octave)}``, shape ``(P, n)``."""
    mags = 2.0 ** (np.arange(j_min * per_octave, j_max * per_octave + 1) / per_octave)
    axis = np.concatenate([-mags[::-1], mags])
    mesh = np.meshgrid(*[axis] * n, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def symbol_sup(symbol: Symbol, points: np.ndarray) -> float:
    return float(np.max(np.abs(symbol(points))))


def _finite_difference(symbol: Symbol, xi: np.ndarray, beta: Sequence[int], rel_step: float) -> np.ndarray:
    axes = [k for k, b in enumerate(beta) if b]
    if not axes:
        return symbol(xi)
    steps = rel_step * np.abs(xi[:, axes])
    total = 0.0
    for signs in itertools.product((1.0, -1.0), repeat=len(axes)):
        shifted = xi.copy()
        shifted[:, axes] += np.asarray(signs) * steps
        total = total + np.prod(signs) * symbol(shifted)
    return total / np.prod(2 * steps, axis=-1)[:, None]


def mikhlin_sup(
    symbol: Symbol,
    beta: Sequence[int],
    sigma: Sequence[float] | None = None,
    points: np.ndarray | None = None,
    derivative: Callable[[np.ndarray, Sequence[int]], np.ndarray] | None = None,
    rel_step: float = 1e-4,
) -> float:
    """``max prod |xi_k|^{beta_k + sigma_k} ||D^beta symbol(xi)||`` over sample points.

    Mixed derivatives use tensor-product central differences with per-axis step
    ``rel_step * |xi_k|`` unless an analytic ``derivative(xi, beta)`` is given.
    """
    beta = tuple(int(b) for b in beta)
    if any(b not in (0, 1) for b in beta):
        raise ParameterOutOfRange("beta must be a binary multi-index")
    n = len(beta)
    sigma = np.zeros(n) if sigma is None else np.asarray(sigma, dtype=float)
    xi = dyadic_grid(n) if points is None else _points(points, n)
    if np.any(xi == 0):
        raise GridTouchesAxis("Mikhlin sample points must avoid the coordinate hyperplanes")
    if derivative is not None:
        dvals = derivative(xi, beta)
    else:
        dvals = _finite_difference(symbol, xi, beta, rel_step)
    weight = np.prod(np.abs(xi) ** (np.asarray(beta) + sigma), axis=-1)
    return float(np.max(weight * np.max(np.abs(dvals), axis=-1)))
