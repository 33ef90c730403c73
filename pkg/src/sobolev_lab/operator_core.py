"""
Diagonal positive operators on a truncated q-normed sequence space.

``A = diag(d_1, ..., d_M)`` acts on the trailing component axis of any array,
so the same calls work on single vectors and on whole fields of samples.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateGrid, DimensionMismatch, SingularResolvent, ZeroDenominator
from .grid_norms import Field, mixed_norm, pointwise_norm


@dataclass(frozen=True)
class DiagOperator:
    diag: tuple[float, ...]
    q: float = 2.0
    s: float | None = None

    def __post_init__(self):
        d = tuple(float(x) for x in self.diag)
        if not d:
            raise DimensionMismatch("operator needs at least one component")
        if any(not (x > 0 and math.isfinite(x)) for x in d):
            raise ValueError(f"diagonal entries must be finite and positive, got {d}")
        if not (self.q >= 1):
            raise ValueError(f"component exponent q must be >= 1, got {self.q}")
        if self.s is not None:
            expected = tuple(2.0 ** (self.s * m) for m in range(1, len(d) + 1))
            if d != expected:
                raise ValueError("diag does not follow d_m = 2**(s*m)")
        object.__setattr__(self, "diag", d)

    @classmethod
    def dyadic(cls, m_components: int = 16, s: float = 1.0, q: float = 2.0) -> "DiagOperator":
        """``d_m = 2**(s*m)`` for ``m = 1..M``."""
        return cls(tuple(2.0 ** (s * m) for m in range(1, m_components + 1)), q=q, s=s)

    @property
    def m_components(self) -> int:
        return len(self.diag)

    @property
    def d(self) -> np.ndarray:
        return np.asarray(self.diag)

    def _check(self, v) -> np.ndarray:
        v = np.asarray(v)
        if v.shape[-1:] != (self.m_components,):
            raise DimensionMismatch(
                f"vector with trailing length {v.shape[-1:]} for an operator of size {self.m_components}"
            )
        return v

    def norm(self, v) -> np.ndarray:
        return pointwise_norm(self._check(v), self.q)

    def truncated(self, m_components: int) -> "DiagOperator":
        return DiagOperator(self.diag[:m_components], q=self.q, s=self.s)

    def to_dict(self) -> dict:
        return {"diag": list(self.diag), "q": self.q, "s": self.s}


def apply(A: DiagOperator, v):
    return A._check(v) * A.d


def resolvent_diag(A: DiagOperator, xi: complex) -> np.ndarray:
    den = A.d + xi
    if np.any(den == 0):
        raise SingularResolvent(f"-{xi} is an eigenvalue of A")
    return 1.0 / den


def resolvent_apply(A: DiagOperator, xi: complex, v):
    """``(A + xi)^{-1} v``."""
    return A._check(v) * resolvent_diag(A, xi)


def fractional_apply(A: DiagOperator, theta: float, v):
    return A._check(v) * A.d**theta


def opnorm(entries) -> float:
    """Norm of a diagonal operator on any q-normed space: ``max |entry|``."""
    return float(np.max(np.abs(entries)))


# ---------------------------------------------------------------------------
# Positivity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Sector:
    phi: float
    radii: tuple[float, ...]
    angles: tuple[float, ...]

    def __post_init__(self):
        if not (0 <= self.phi < math.pi):
            raise ValueError(f"sector half-angle must lie in [0, pi), got {self.phi}")
        if any(abs(a) > self.phi + 1e-15 for a in self.angles):
            raise ValueError("sector angles exceed the half-angle")
        if not self.radii or not self.angles:
            raise ValueError("sector sample set is empty")

    @classmethod
    def sample(
        cls,
        phi: float,
        n_radii: int = 241,
        n_angles: int = 33,
        r_min: float = 1e-6,
        r_max: float = 1e6,
        include_origin: bool = True,
    ) -> "Sector":
        radii = tuple(np.geomspace(r_min, r_max, n_radii))
        if include_origin:
            radii = (0.0,) + radii
        angles = (0.0,) if phi == 0 else tuple(np.linspace(-phi, phi, n_angles))
        return cls(phi, radii, angles)

    def points(self) -> np.ndarray:
        r = np.asarray(self.radii)[:, None]
        a = np.asarray(self.angles)[None, :]
        return (r * np.exp(1j * a)).ravel()


def positivity_constant(A: DiagOperator, sector: Sector) -> float:
    """``max (1 + |xi|) ||(A + xi)^{-1}||`` over the sampled sector."""
    xi = sector.points()
    den = A.d[None, :] + xi[:, None]
    if np.any(den == 0):
        raise SingularResolvent("a sampled sector point hits -d_m")
    return float(np.max((1 + np.abs(xi)) * np.max(1.0 / np.abs(den), axis=1)))


# ---------------------------------------------------------------------------
# Interpolation norms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InterpParams:
    theta: float
    sigma: float = 2.0
    y_min: float = 1e-6
    y_max: float = 1e6
    n_points: int = 200

    def __post_init__(self):
        if not (0 < self.theta < 1):
            raise ValueError(f"theta must lie strictly inside (0, 1), got {self.theta}")
        if not (self.sigma >= 1):
            raise ValueError(f"sigma must be >= 1, got {self.sigma}")
        if not (0 < self.y_min <= 1 <= self.y_max):
            raise DegenerateGrid("y-grid must satisfy 0 < y_min <= 1 <= y_max")
        if self.y_max / self.y_min < 1e4:
            raise DegenerateGrid("y-grid spans fewer than four decades")
        if self.n_points < 2:
            raise DegenerateGrid("y-grid needs at least two points")

    def y_grid(self) -> np.ndarray:
        return np.geomspace(self.y_min, self.y_max, self.n_points)


def interpolation_norm(A: DiagOperator, v, ip: InterpParams) -> np.ndarray | float:
    """``( int ||y^{1-theta-1/sigma} A^theta (A+y)^{-1} v||_q^sigma dy )^{1/sigma}``.

    Trapezoid rule in ``log y``.  ``v`` may carry leading axes; the result then
    has those axes.
    """
    v = A._check(v)
    y = ip.y_grid()
    theta, sigma = ip.theta, ip.sigma
    # factors: (n_y, M)
    factor = y[:, None] ** (1 - theta - 1 / sigma) * A.d**theta / (A.d[None, :] + y[:, None])
    vals = np.abs(v[..., None, :]) * factor
    g = pointwise_norm(vals, A.q) ** sigma * y  # dy = y d(log y)
    total = np.trapezoid(g, np.log(y), axis=-1)
    out = total ** (1 / sigma)
    return float(out) if np.ndim(out) == 0 else out


def interpolation_norm_realized(A: DiagOperator, v, theta: float):
    """Sequence-space form ``||A^{1-theta} v||_q + ||v||_q``."""
    if not (0 < theta < 1):
        raise ValueError(f"theta must lie strictly inside (0, 1), got {theta}")
    v = A._check(v)
    out = A.norm(fractional_apply(A, 1 - theta, v)) + A.norm(v)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# R-boundedness
# ---------------------------------------------------------------------------

EXACT_SIGN_LIMIT = 12
MONTE_CARLO_DRAWS = 4096


def _sign_patterns(m: int, trials: int | None, seed: int) -> np.ndarray:
    if m <= EXACT_SIGN_LIMIT:
        return np.array(list(itertools.product((1.0, -1.0), repeat=m)))
    rng = np.random.Generator(np.random.Philox(seed))
    return rng.choice((-1.0, 1.0), size=(trials or MONTE_CARLO_DRAWS, m))


def r_bound_estimate(
    ops: Sequence[DiagOperator],
    vectors: Sequence,
    trials: int | None = None,
    exponents=None,
    seed: int = 0,
) -> float:
    """Randomized-sum ratio ``E||sum r_j T_j f_j|| / E||sum r_j f_j||``.

    ``vectors`` are component vectors (normed by ``q``) or fields (normed by the
    mixed norm with ``exponents``).  Signs are enumerated exactly for up to 12
    operators, otherwise sampled with a fixed seed.
    """
    if len(ops) != len(vectors) or not ops:
        raise DimensionMismatch("operator and vector families must have equal, non-zero length")
    q = ops[0].q
    is_field = isinstance(vectors[0], Field)
    if is_field:
        grid = vectors[0].grid
        fs = np.stack([f.values for f in vectors])
    else:
        fs = np.stack([np.asarray(f, dtype=complex) for f in vectors])
    tfs = np.stack([apply(T, f) for T, f in zip(ops, fs)])
    signs = _sign_patterns(len(ops), trials, seed)

    def norm(x):
        if is_field:
            return mixed_norm(Field(grid, x), exponents or (2.0,), q=q)
        return float(pointwise_norm(x, q))

    num = np.mean([norm(np.tensordot(r, tfs, axes=1)) for r in signs])
    den = np.mean([norm(np.tensordot(r, fs, axes=1)) for r in signs])
    if den == 0:
        raise ZeroDenominator("all vectors in the family vanish")
    return float(num / den)
