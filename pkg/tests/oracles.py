"""Brute-force reference computations, independent of the package code."""

from __future__ import annotations

import itertools
import math

import numpy as np


def simplex_grid(d: int, step: float) -> np.ndarray:
    n = int(round(1.0 / step))
    pts = [c for c in itertools.product(range(n + 1), repeat=d - 1) if sum(c) <= n]
    P = np.array([list(c) + [n - sum(c)] for c in pts], dtype=float)
    return P / n


def simplex_projection_grid(v, step: float = 1e-3) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    P = simplex_grid(v.shape[0], step)
    return P[np.argmin(((P - v) ** 2).sum(axis=1))]


def simplex_projection_tau(v, step: float = 1e-6) -> np.ndarray:
    """Scan the water-filling threshold tau so that sum(max(v - tau, 0)) = 1."""
    v = np.asarray(v, dtype=float)
    taus = np.arange(v.min() - 1.0, v.max(), step)
    mass = np.maximum(v[None, :] - taus[:, None], 0.0).sum(axis=1)
    tau = taus[np.argmin(np.abs(mass - 1.0))]
    return np.maximum(v - tau, 0.0)


def lambert_w_bisect(x: float, tol: float = 1e-15) -> float:
    lo, hi = 0.0, max(1.0, math.log1p(x))
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if mid * math.exp(mid) < x:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def conj_exp_square_grid(theta: float, a: float, b: float, half: float = 6.0, n: int = 2_000_001) -> float:
    x = np.linspace(-half, half, n)
    return float(np.max(theta * x - b * np.exp(x * x / (2.0 * a))))


def entropic_step_grid(x, g, eta: float, step: float = 1e-3) -> np.ndarray:
    """argmin <g, y> + KL(y; x) / eta over a simplex grid."""
    x, g = np.asarray(x, float), np.asarray(g, float)
    P = simplex_grid(x.shape[0], step)
    with np.errstate(divide="ignore", invalid="ignore"):
        kl = np.where(P > 0, P * np.log(P / x), 0.0).sum(axis=1)
    return P[np.argmin(P @ g + kl / eta)]


def pnorm_step_grid(x, g, eta: float, p: float, half: float = 1.5, step: float = 1e-3) -> np.ndarray:
    """argmin <g, y> + B(y; x) / eta with psi = ||.||_p^2 / 2 on a 2-d grid."""
    x, g = np.asarray(x, float), np.asarray(g, float)
    a = np.arange(-half, half + step / 2, step)
    A, B = np.meshgrid(a, a, indexing="ij")
    Y = np.stack([A.ravel(), B.ravel()], axis=1)

    def psi(Z):
        return 0.5 * (np.abs(Z) ** p).sum(axis=-1) ** (2.0 / p)

    nx = (np.abs(x) ** p).sum() ** (1.0 / p)
    grad = np.sign(x) * np.abs(x) ** (p - 1) * nx ** (2.0 - p) if nx > 0 else np.zeros_like(x)
    breg = psi(Y) - psi(x) - (Y - x) @ grad
    return Y[np.argmin(Y @ g + breg / eta)]


def ball_quadratic_grid(S, c, radius: float, step: float = 1e-3) -> np.ndarray:
    """argmin x^T S x / 2 - <c, x> over a 2-d disk grid."""
    a = np.arange(-radius, radius + step / 2, step)
    A, B = np.meshgrid(a, a, indexing="ij")
    X = np.stack([A.ravel(), B.ravel()], axis=1)
    X = X[(X * X).sum(axis=1) <= radius * radius]
    vals = 0.5 * np.einsum("ij,jk,ik->i", X, S, X) - X @ c
    return X[np.argmin(vals)]


def tsallis_grid(x, g, eta: float, step: float = 1e-4) -> np.ndarray:
    """One INF step for d = 2 by scanning the first coordinate.

    argmin <g, y> + psi(y)/eta - <grad psi(x), y>/eta with
    psi(y) = -2 sum sqrt(y) (q = 1/2) over y on the simplex.
    """
    x, g = np.asarray(x, float), np.asarray(g, float)
    y1 = np.arange(step, 1.0, step)
    Y = np.stack([y1, 1.0 - y1], axis=1)
    grad_x = -1.0 / np.sqrt(x)
    vals = Y @ g + (-2.0 * np.sqrt(Y).sum(axis=1) - Y @ grad_x) / eta
    return Y[np.argmin(vals)]


def kt_wealth_direct(coins, eps: float = 1.0) -> float:
    """Wealth of the KT bettor as the product form eps * prod(1 + beta_t c_t)."""
    w, s = eps, 0.0
    for t, c in enumerate(coins, start=1):
        w *= 1.0 + (s / t) * c
        s += c
    return w


def hinge_grid_competitor(Z, y, radius: float, step: float = 1e-2):
    """Grid points of a disk with their cumulative hinge losses."""
    a = np.arange(-radius, radius + step / 2, step)
    A, B = np.meshgrid(a, a, indexing="ij")
    U = np.stack([A.ravel(), B.ravel()], axis=1)
    U = U[(U * U).sum(axis=1) <= radius * radius]
    L1 = np.maximum(1.0 - (Z * y[:, None]) @ U.T, 0.0).sum(axis=0)
    return U, L1
