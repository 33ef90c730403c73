"""
Periodic anisotropic grids, discrete Fourier transforms and weighted mixed norms.

A field on an ``n``-dimensional periodic lattice carries ``M`` complex
components per node (a truncated sequence-space value).  Array layout is
``values[i_1, ..., i_n, m]``; axis 0 is ``x_1``, the innermost axis of every
mixed norm.

Transform convention::

    u_hat(xi) = (1 / prod N_k) * sum_x u(x) exp(-i xi.x)

so a constant field maps to a single coefficient and ``cos(x)`` maps to 1/2
at ``xi = +-1``.  Under this convention ``F(D^a u) = prod (i xi_k)^{a_k} F(u)``
holds exactly on the grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .errors import DimensionMismatch, InvalidDimension, NonPositiveWeight, SideMismatch

PHYSICAL = "physical"
SPECTRAL = "spectral"


# ---------------------------------------------------------------------------
# Grid
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Grid:
    """Uniform periodic lattice with per-axis size ``N_k`` and period ``L_k``."""

    n: int
    sizes: tuple[int, ...]
    periods: tuple[float, ...]

    def __post_init__(self):
        if self.n < 1:
            raise InvalidDimension(f"dimension must be >= 1, got {self.n}")
        if len(self.sizes) != self.n or len(self.periods) != self.n:
            raise InvalidDimension("sizes and periods must have length n")
        for N in self.sizes:
            if int(N) != N or N < 4 or N % 2:
                raise InvalidDimension(f"axis size must be an even integer >= 4, got {N}")
        for L in self.periods:
            if not (L > 0 and math.isfinite(L)):
                raise InvalidDimension(f"period must be positive, got {L}")
        object.__setattr__(self, "sizes", tuple(int(N) for N in self.sizes))
        object.__setattr__(self, "periods", tuple(float(L) for L in self.periods))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.sizes

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(L / N for L, N in zip(self.periods, self.sizes))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def nodes(self, axis: int) -> np.ndarray:
        N, L = self.sizes[axis], self.periods[axis]
        return np.arange(N) * (L / N)

    def wavenumbers(self, axis: int) -> np.ndarray:
        """Frequencies ``2 pi j / L`` in FFT order, ``j = -N/2 .. N/2 - 1``."""
        N, L = self.sizes[axis], self.periods[axis]
        return 2.0 * np.pi * np.fft.fftfreq(N, d=L / N)

    def mode_indices(self, axis: int) -> np.ndarray:
        N = self.sizes[axis]
        return np.rint(np.fft.fftfreq(N, d=1.0 / N)).astype(int)

    def mesh(self) -> list[np.ndarray]:
        return np.meshgrid(*[self.nodes(k) for k in range(self.n)], indexing="ij")

    def frequency_mesh(self) -> list[np.ndarray]:
        return np.meshgrid(*[self.wavenumbers(k) for k in range(self.n)], indexing="ij")

    def refined(self, factor: int = 2) -> "Grid":
        return Grid(self.n, tuple(N * factor for N in self.sizes), self.periods)


def make_grid(n: int, sizes: Sequence[int], periods: Sequence[float]) -> Grid:
    """Build a grid with nodes ``x_k(j) = j * L_k / N_k``."""
    if len(sizes) != n or len(periods) != n:
        raise InvalidDimension("sizes and periods must have length n")
    return Grid(int(n), tuple(sizes), tuple(float(L) for L in periods))


# ---------------------------------------------------------------------------
# Field
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Field:
    """E-valued samples on a grid; ``values`` has shape ``(*grid.sizes, M)``."""

    grid: Grid
    values: np.ndarray
    side: str = PHYSICAL

    def __post_init__(self):
        vals = np.array(self.values, dtype=complex)
        if vals.ndim == self.grid.n:
            vals = vals[..., np.newaxis]
        if vals.shape[:-1] != self.grid.sizes:
            raise DimensionMismatch(
                f"values of shape {vals.shape} do not match grid {self.grid.sizes}"
            )
        if self.side not in (PHYSICAL, SPECTRAL):
            raise ValueError(f"unknown side {self.side!r}")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def m_components(self) -> int:
        return self.values.shape[-1]

    def with_values(self, values: np.ndarray, side: str | None = None) -> "Field":
        return Field(self.grid, values, self.side if side is None else side)

    def __add__(self, other: "Field") -> "Field":
        _require_same_side(self, other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "Field") -> "Field":
        _require_same_side(self, other)
        return self.with_values(self.values - other.values)

    def __mul__(self, c: complex) -> "Field":
        return self.with_values(self.values * c)

    __rmul__ = __mul__

    @classmethod
    def from_function(
        cls, grid: Grid, func: Callable[..., np.ndarray], m_components: int = 1
    ) -> "Field":
        """Sample ``func(*mesh)``; a scalar result is placed in component 0."""
        vals = np.asarray(func(*grid.mesh()), dtype=complex)
        if vals.shape == grid.sizes:
            out = np.zeros(grid.sizes + (m_components,), dtype=complex)
            out[..., 0] = vals
            vals = out
        return cls(grid, vals)

    @classmethod
    def zeros(cls, grid: Grid, m_components: int = 1) -> "Field":
        return cls(grid, np.zeros(grid.sizes + (m_components,), dtype=complex))


def _require_same_side(a: Field, b: Field) -> None:
    if a.side != b.side:
        raise SideMismatch("fields live on different sides of the transform")
    if a.grid != b.grid or a.values.shape != b.values.shape:
        raise DimensionMismatch("fields live on different grids")


def random_band_limited(
    grid: Grid,
    m_components: int,
    rng: np.random.Generator,
    max_mode_fraction: float = 0.25,
    real: bool = True,
) -> Field:
    """Random field whose spectrum is supported on ``|j_k| <= N_k * fraction``."""
    spec = rng.standard_normal(grid.sizes + (m_components,)) + 1j * rng.standard_normal(
        grid.sizes + (m_components,)
    )
    mask = np.ones(grid.sizes, dtype=bool)
    for k in range(grid.n):
        j = np.abs(grid.mode_indices(k))
        keep = j <= int(grid.sizes[k] * max_mode_fraction)
        shape = [1] * grid.n
        shape[k] = grid.sizes[k]
        mask = mask & keep.reshape(shape)
    spec = spec * mask[..., np.newaxis]
    vals = _ifft(spec, grid)
    if real:
        vals = vals.real
    return Field(grid, vals)


# ---------------------------------------------------------------------------
# Transforms and derivatives
# ---------------------------------------------------------------------------


def _axes(grid: Grid) -> tuple[int, ...]:
    return tuple(range(grid.n))


def _fft(values: np.ndarray, grid: Grid) -> np.ndarray:
    return np.fft.fftn(values, axes=_axes(grid)) / np.prod(grid.sizes)


def _ifft(values: np.ndarray, grid: Grid) -> np.ndarray:
    return np.fft.ifftn(values, axes=_axes(grid)) * np.prod(grid.sizes)


def forward_transform(u: Field) -> Field:
    if u.side != PHYSICAL:
        raise SideMismatch("forward_transform expects a physical-side field")
    return Field(u.grid, _fft(u.values, u.grid), SPECTRAL)


def inverse_transform(u: Field) -> Field:
    if u.side != SPECTRAL:
        raise SideMismatch("inverse_transform expects a spectral-side field")
    return Field(u.grid, _ifft(u.values, u.grid), PHYSICAL)


def derivative_symbol(grid: Grid, alpha: Sequence[int]) -> np.ndarray:
    """``prod_k (i xi_k)^{alpha_k}`` on the frequency lattice."""
    if len(alpha) != grid.n:
        raise DimensionMismatch("multi-index length must equal grid dimension")
    sym = np.ones(grid.sizes, dtype=complex)
    for k, a in enumerate(alpha):
        if a < 0 or int(a) != a:
            raise ValueError(f"derivative orders must be non-negative integers, got {alpha}")
        if a == 0:
            continue
        shape = [1] * grid.n
        shape[k] = grid.sizes[k]
        sym = sym * ((1j * grid.wavenumbers(k)) ** int(a)).reshape(shape)
    return sym


def apply_multiplier(u: Field, multiplier: np.ndarray) -> Field:
    """``F^{-1} m F u`` for a multiplier of shape ``sizes`` or ``sizes + (M,)``."""
    if u.side != PHYSICAL:
        raise SideMismatch("multiplier application expects a physical-side field")
    m = np.asarray(multiplier)
    if m.shape == u.grid.sizes:
        m = m[..., np.newaxis]
    return Field(u.grid, _ifft(_fft(u.values, u.grid) * m, u.grid))


def spectral_derivative(u: Field, alpha: Sequence[int]) -> Field:
    if all(a == 0 for a in alpha):
        if len(alpha) != u.grid.n:
            raise DimensionMismatch("multi-index length must equal grid dimension")
        return u
    return apply_multiplier(u, derivative_symbol(u.grid, alpha))


def axis_derivative(u: Field, axis: int, order: int = 1) -> Field:
    alpha = [0] * u.grid.n
    alpha[axis] = order
    return spectral_derivative(u, alpha)


# ---------------------------------------------------------------------------
# Weights
# ---------------------------------------------------------------------------


def periodic_distance(x: np.ndarray, period: float) -> np.ndarray:
    """Periodic analogue of ``|x|``: ``(L / 2 pi) |2 sin(pi x / L)|``."""
    return (period / (2 * np.pi)) * np.abs(2 * np.sin(np.pi * np.asarray(x) / period))


@dataclass(frozen=True)
class Weight:
    """Positive weight ``gamma(x)``.

    kinds
        ``unit``     gamma = 1
        ``power``    gamma = prod_k |x_k|^{exponents[k]}
        ``product``  gamma = prod_j (1 + sum_k |x_k|^{a_jk})^{b_j}, with
                     ``terms = ((a_j1, ..., a_jn), b_j), ...``
        ``sampled``  explicit values on a grid (used for pulled-back weights)

    On a grid ``|x_k|`` is replaced by :func:`periodic_distance`.  The cell
    containing the origin of a power weight is assigned the exact cell average
    of ``|x|^a`` so singular exponents ``-1 < a < 0`` stay finite.
    """

    kind: str = "unit"
    exponents: tuple[float, ...] = ()
    terms: tuple = ()
    values: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ("unit", "power", "product", "sampled"):
            raise ValueError(f"unknown weight kind {self.kind!r}")
        if self.kind == "power":
            object.__setattr__(self, "exponents", tuple(float(a) for a in self.exponents))
            if any(a <= -1 for a in self.exponents):
                raise NonPositiveWeight("power exponents <= -1 are not locally integrable")
        if self.kind == "product":
            terms = tuple((tuple(float(a) for a in alphas), float(b)) for alphas, b in self.terms)
            if any(a < 0 for alphas, _ in terms for a in alphas):
                raise NonPositiveWeight("product-form exponents must be non-negative")
            object.__setattr__(self, "terms", terms)
        if self.kind == "sampled":
            vals = np.asarray(self.values, dtype=float)
            if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
                raise NonPositiveWeight("sampled weight must be finite and strictly positive")
            object.__setattr__(self, "values", vals)

    @classmethod
    def unit(cls) -> "Weight":
        return cls("unit")

    @classmethod
    def power(cls, exponents: Sequence[float]) -> "Weight":
        return cls("power", exponents=tuple(exponents))

    @classmethod
    def product(cls, terms) -> "Weight":
        return cls("product", terms=tuple(terms))

    @classmethod
    def sampled(cls, values: np.ndarray) -> "Weight":
        return cls("sampled", values=np.asarray(values, dtype=float))

    @property
    def is_unit(self) -> bool:
        return self.kind == "unit"

    def evaluate(self, coords: Sequence[np.ndarray], periods: Sequence[float] | None = None):
        """Weight at points given per axis (broadcastable arrays).

        Without ``periods`` the raw closed form is used; with ``periods`` each
        ``|x_k|`` is periodized.
        """
        if self.kind == "unit":
            return np.ones(np.broadcast(*coords).shape)
        if self.kind == "sampled":
            raise ValueError("sampled weights can only be read on their own grid")
        if periods is None:
            dist = [np.abs(np.asarray(c, dtype=float)) for c in coords]
        else:
            dist = [periodic_distance(c, L) for c, L in zip(coords, periods)]
        if self.kind == "power":
            _check_len(self.exponents, len(dist))
            out = np.ones(np.broadcast(*dist).shape)
            for r, a in zip(dist, self.exponents):
                if a != 0:
                    with np.errstate(divide="ignore"):
                        out = out * r**a
            return out
        out = np.ones(np.broadcast(*dist).shape)
        for alphas, beta in self.terms:
            _check_len(alphas, len(dist))
            inner = 1.0 + sum(r**a for r, a in zip(dist, alphas))
            out = out * inner**beta
        return out

    def sample(self, grid: Grid) -> np.ndarray:
        """Weight values on the grid nodes, shape ``grid.sizes``."""
        if self.kind == "unit":
            return np.ones(grid.sizes)
        if self.kind == "sampled":
            if self.values.shape != grid.sizes:
                raise DimensionMismatch("sampled weight does not match the grid")
            return self.values
        if self.kind == "power":
            _check_len(self.exponents, grid.n)
            out = np.ones(grid.sizes)
            for k, a in enumerate(self.exponents):
                if a == 0:
                    continue
                r = periodic_distance(grid.nodes(k), grid.periods[k])
                with np.errstate(divide="ignore"):
                    w = r**a
                half = grid.spacing[k] / 2
                w[0] = half**a / (a + 1)
                shape = [1] * grid.n
                shape[k] = grid.sizes[k]
                out = out * w.reshape(shape)
        else:
            out = self.evaluate(grid.mesh(), grid.periods)
        if not np.all(np.isfinite(out)) or np.any(out <= 0):
            raise NonPositiveWeight("weight is not strictly positive on the grid")
        return out

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "power":
            d["exponents"] = list(self.exponents)
        if self.kind == "product":
            d["terms"] = [[list(a), b] for a, b in self.terms]
        return d


def _check_len(seq, n):
    if len(seq) != n:
        raise DimensionMismatch(f"weight has {len(seq)} axes, expected {n}")


# ---------------------------------------------------------------------------
# Mixed norms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MixedExponents:
    p: tuple[float, ...]
    p0: float | None = None

    def __post_init__(self):
        p = tuple(float(x) for x in self.p)
        if any(not (1 <= x < math.inf) for x in p):
            raise ValueError(f"exponents must lie in [1, inf), got {p}")
        if self.p0 is not None and not (1 <= self.p0 < math.inf):
            raise ValueError(f"time exponent must lie in [1, inf), got {self.p0}")
        object.__setattr__(self, "p", p)


def _as_exponents(p) -> MixedExponents:
    if isinstance(p, MixedExponents):
        return p
    if np.isscalar(p):
        return MixedExponents((float(p),))
    return MixedExponents(tuple(p))


def pointwise_norm(values: np.ndarray, q: float = 2.0) -> np.ndarray:
    """q-norm over the trailing component axis."""
    mag = np.abs(values)
    if math.isinf(q):
        return mag.max(axis=-1)
    if q == 2:
        return np.sqrt(np.sum(mag * mag, axis=-1))
    return np.sum(mag**q, axis=-1) ** (1.0 / q)


def iterated_norm(
    magnitude: np.ndarray, grid: Grid, p, weight: Weight | None = None
) -> float:
    """Nested rectangle-rule norm of a non-negative array of shape ``grid.sizes``.

    The weight multiplies the innermost (``x_1``) integrand only.
    """
    exps = _as_exponents(p).p
    if len(exps) == 1 and grid.n > 1:
        exps = exps * grid.n
    if len(exps) != grid.n:
        raise DimensionMismatch(f"{len(exps)} exponents for a {grid.n}-dimensional grid")
    mag = np.asarray(magnitude, dtype=float)
    w = 1.0 if weight is None or weight.is_unit else weight.sample(grid)
    dx = grid.spacing
    acc = np.sum(mag ** exps[0] * w, axis=0) * dx[0]
    r = acc ** (1.0 / exps[0])
    for k in range(1, grid.n):
        acc = np.sum(r ** exps[k], axis=0) * dx[k]
        r = acc ** (1.0 / exps[k])
    return float(r)


def mixed_norm(u: Field, exponents, weight: Weight | None = None, q: float = 2.0) -> float:
    """Weighted mixed ``L_p(E)`` norm with the ``q``-norm on components."""
    if u.side != PHYSICAL:
        raise SideMismatch("mixed_norm expects a physical-side field")
    return iterated_norm(pointwise_norm(u.values, q), u.grid, exponents, weight)


# ---------------------------------------------------------------------------
# A_p constants
# ---------------------------------------------------------------------------


def _box(cube, n):
    arr = np.asarray(cube, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, 2)
    if arr.shape != (n, 2):
        raise DimensionMismatch(f"cube {cube!r} is not an {n}-dimensional box")
    if np.any(arr[:, 1] <= arr[:, 0]):
        raise ValueError(f"degenerate cube {cube!r}")
    return arr


def _power_average(a: float, lo: float, hi: float) -> float:
    """Average of |x|^a on [lo, hi]; inf when the singularity is not integrable."""
    if a == 0:
        return 1.0
    if lo <= 0 <= hi and a <= -1:
        return math.inf
    points = [0.0] if lo < 0 < hi else None
    val, _ = integrate.quad(lambda x: abs(x) ** a, lo, hi, points=points, limit=200)
    return val / (hi - lo)


def ap_cube_values(weight: Weight, p: float, cubes) -> list[float]:
    """``(avg gamma) (avg gamma^{-1/(p-1)})^{p-1}`` for each cube (raw, non-periodic weight)."""
    if not p > 1:
        raise ValueError("A_p constants need p > 1")
    cubes = list(cubes)
    if not cubes:
        raise ValueError("cube family is empty")
    if weight.kind == "sampled":
        raise ValueError("A_p estimates need a closed-form weight")
    n = np.asarray(cubes[0], dtype=float).reshape(-1, 2).shape[0]
    if weight.kind == "power":
        _check_len(weight.exponents, n)
    dual = -1.0 / (p - 1)
    out = []
    for cube in cubes:
        box = _box(cube, n)
        if weight.kind == "unit":
            out.append(1.0)
            continue
        if weight.kind == "power":
            avg_w = math.prod(_power_average(a, lo, hi) for a, (lo, hi) in zip(weight.exponents, box))
            avg_d = math.prod(
                _power_average(a * dual, lo, hi) for a, (lo, hi) in zip(weight.exponents, box)
            )
        else:
            vol = float(np.prod(box[:, 1] - box[:, 0]))
            ranges = [tuple(b) for b in box]

            def w(*x):
                val = weight.evaluate([np.asarray(xi) for xi in x])
                if val <= 0:
                    raise NonPositiveWeight("weight vanishes inside the cube")
                return float(val)

            avg_w = integrate.nquad(w, ranges)[0] / vol
            avg_d = integrate.nquad(lambda *x: w(*x) ** dual, ranges)[0] / vol
        out.append(avg_w * avg_d ** (p - 1))
    return out


def ap_constant_estimate(weight: Weight, p: float, cubes) -> float:
    """Maximum of the A_p functional over a cube family; ``inf`` flags divergence."""
    return max(ap_cube_values(weight, p, cubes))
