"""Feasible sets, projections, Bregman divergences and special functions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .core import DimensionError, DomainError, as_vector

# Points this close to a set boundary are treated as inside, which keeps
# projection exactly idempotent.
_FEASIBILITY_RTOL = 1e-12


@dataclass(frozen=True)
class All:
    dim: int

    @property
    def diameter(self) -> float:
        return math.inf


@dataclass(frozen=True)
class L2Ball:
    radius: float
    dim: int

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"radius must be positive, got {self.radius}")

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius


@dataclass(frozen=True)
class Box:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo, hi = as_vector(self.lo), as_vector(self.hi)
        if lo.shape != hi.shape:
            raise DimensionError("box bounds differ in dimension")
        if np.any(lo > hi):
            raise ValueError("box needs lo <= hi in every coordinate")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    @property
    def widths(self) -> np.ndarray:
        return self.hi - self.lo

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.widths))


@dataclass(frozen=True)
class Simplex:
    dim: int

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError("simplex needs dim >= 2")

    @property
    def diameter(self) -> float:
        return math.sqrt(2.0)


FeasibleSet = Union[All, L2Ball, Box, Simplex]


def _project_simplex(v: np.ndarray) -> np.ndarray:
    if np.all(v >= 0) and abs(v.sum() - 1.0) <= _FEASIBILITY_RTOL * v.shape[0]:
        return v.copy()
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.shape[0] + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    tau = css[rho] / (rho + 1)
    return np.maximum(v - tau, 0.0)


def project(feasible: FeasibleSet, v) -> np.ndarray:
    """Euclidean projection of ``v`` onto ``feasible``."""
    v = as_vector(v, feasible.dim)
    if isinstance(feasible, All):
        return v.copy()
    if isinstance(feasible, L2Ball):
        n = float(np.linalg.norm(v))
        if n <= feasible.radius * (1.0 + _FEASIBILITY_RTOL):
            return v.copy()
        return v * (feasible.radius / n)
    if isinstance(feasible, Box):
        return np.minimum(np.maximum(v, feasible.lo), feasible.hi)
    if isinstance(feasible, Simplex):
        return _project_simplex(v)
    raise TypeError(f"unknown set {type(feasible).__name__}")


def contains(feasible: FeasibleSet, x, tol: float = 1e-9) -> bool:
    x = as_vector(x, feasible.dim)
    if isinstance(feasible, All):
        return bool(np.all(np.isfinite(x)))
    if isinstance(feasible, L2Ball):
        return bool(np.linalg.norm(x) <= feasible.radius + tol)
    if isinstance(feasible, Box):
        return bool(np.all(x >= feasible.lo - tol) and np.all(x <= feasible.hi + tol))
    if isinstance(feasible, Simplex):
        return bool(np.all(x >= -tol) and abs(x.sum() - 1.0) <= tol)
    raise TypeError(f"unknown set {type(feasible).__name__}")


# ---------------------------------------------------------------------------
# Bregman divergences
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SquaredL2:
    pass


@dataclass(frozen=True)
class NegativeEntropy:
    pass


@dataclass(frozen=True)
class HalfPNormSq:
    p: float

    def __post_init__(self):
        if not 1.0 < self.p <= 2.0:
            raise ValueError(f"p must lie in (1, 2], got {self.p}")

    @property
    def q(self) -> float:
        return self.p / (self.p - 1.0)


BregmanKind = Union[SquaredL2, NegativeEntropy, HalfPNormSq]


def pnorm_grad(x, p: float) -> np.ndarray:
    """Gradient of ``0.5 * ||x||_p^2``; zero at the origin."""
    x = as_vector(x)
    n = float(np.linalg.norm(x, ord=p))
    if n == 0.0:
        return np.zeros_like(x)
    return np.sign(x) * np.abs(x) ** (p - 1.0) * n ** (2.0 - p)


def _xlogx(x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = x[pos] * np.log(x[pos])
    return out


def bregman(kind: BregmanKind, x, y) -> float:
    """``psi(x) - psi(y) - <grad psi(y), x - y>``."""
    x = as_vector(x)
    y = as_vector(y, x.shape[0])
    if isinstance(kind, SquaredL2):
        d = x - y
        return 0.5 * float(d @ d)
    if isinstance(kind, NegativeEntropy):
        if np.any(y <= 0):
            raise DomainError("negative entropy divergence needs y > 0")
        if np.any(x < 0):
            raise DomainError("negative entropy divergence needs x >= 0")
        # unnormalized KL; equals KL(x; y) on the simplex
        return float(np.sum(_xlogx(x) - x * np.log(y) - x + y))
    if isinstance(kind, HalfPNormSq):
        p = kind.p
        px = 0.5 * float(np.linalg.norm(x, ord=p)) ** 2
        py = 0.5 * float(np.linalg.norm(y, ord=p)) ** 2
        return px - py - float(pnorm_grad(y, p) @ (x - y))
    raise TypeError(f"unknown Bregman kind {type(kind).__name__}")


# ---------------------------------------------------------------------------
# Special functions
# ---------------------------------------------------------------------------

_W_LOWER = 0.6321


def _w_residual_ok(w: float, x: float) -> bool:
    return abs(w * math.exp(w) - x) <= 1e-12 * max(1.0, x)


def lambert_w(x: float) -> float:
    """Principal branch of Lambert W on ``[0, inf)``.

    Halley's iteration from ``ln(x + 1)``; bisection on the bracket
    ``[0.6321 ln(x+1), ln(x+1)]`` if it fails to converge.
    """
    x = float(x)
    if not x >= 0:
        raise DomainError(f"lambert_w needs x >= 0, got {x}")
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return math.inf
    hi = math.log1p(x)
    lo = _W_LOWER * hi
    w = hi
    for _ in range(50):
        ew = math.exp(w)
        f = w * ew - x
        wp1 = w + 1.0
        denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
        step = f / denom
        w_new = w - step
        if not math.isfinite(w_new):
            break
        w = w_new
        if abs(step) <= 1e-15 * max(1.0, abs(w)):
            break
    if lo <= w <= hi and _w_residual_ok(w, x):
        return w
    # bisection fallback; w e^w is increasing on [0, inf)
    a, b = lo, hi
    for _ in range(200):
        m = 0.5 * (a + b)
        if m * math.exp(m) < x:
            a = m
        else:
            b = m
        if b - a <= 4e-16 * max(1.0, b):
            break
    return 0.5 * (a + b)


def conj_exp_square(theta: float, a: float, b: float) -> float:
    """Fenchel conjugate of ``b * exp(x^2 / (2a))`` evaluated at ``theta``."""
    if not (a > 0 and b > 0):
        raise ValueError("a and b must be positive")
    theta = float(theta)
    if theta == 0.0:
        return -b
    w = lambert_w(a * theta * theta / (b * b))
    if w == 0.0:
        # underflow of the argument; the maximizer is at the origin
        return -b
    return math.sqrt(a) * abs(theta) * (math.sqrt(w) - 1.0 / math.sqrt(w))
