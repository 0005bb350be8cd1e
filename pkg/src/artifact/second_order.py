"""Online Newton Step and the Vovk-Azoury-Warmuth forecaster."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import GradientLearner, as_vector
from .geometry import All, FeasibleSet, L2Ball

REFACTOR_EVERY = 512
_BALL_TOL = 1e-10


def sherman_morrison(S_inv: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse of ``S + u u^T`` given ``S^{-1}``."""
    Su = S_inv @ u
    return S_inv - np.outer(Su, Su) / (1.0 + float(u @ Su))


@dataclass
class _RankOneInverse:
    """A symmetric PD matrix and its inverse under rank-one growth."""

    S: np.ndarray
    S_inv: np.ndarray
    updates: int = 0

    @classmethod
    def scaled_identity(cls, d: int, lam: float) -> "_RankOneInverse":
        return cls(S=lam * np.eye(d), S_inv=np.eye(d) / lam)

    def add(self, u: np.ndarray) -> None:
        self.S = self.S + np.outer(u, u)
        self.updates += 1
        if self.updates % REFACTOR_EVERY == 0:
            self.S_inv = np.linalg.inv(self.S)
        else:
            self.S_inv = sherman_morrison(self.S_inv, u)
        # keep both exactly symmetric
        self.S_inv = 0.5 * (self.S_inv + self.S_inv.T)


def logistic_exp_concavity(U: float) -> float:
    """Exp-concavity of ``ln(1 + exp(-<z, x>))`` for ``||x|| <= U`` and ``||z|| <= 1``."""
    if not U > 0:
        raise ValueError("U must be positive")
    return math.exp(-2.0 * U) / 2.0


def ons_mu(alpha: float, G: float, D: float) -> float:
    """A valid ``mu`` for alpha-exp-concave losses with gradients bounded by ``G`` on a set of diameter ``D``."""
    return min(alpha / 2.0, 1.0 / (2.0 * G * D))


# ---------------------------------------------------------------------------
# ONS
# ---------------------------------------------------------------------------


@dataclass
class OnsState:
    grad_sum: np.ndarray
    mat: _RankOneInverse
    b: np.ndarray
    lam: float
    mu: float
    set: FeasibleSet
    x: np.ndarray
    t: int = 1

    @property
    def S(self) -> np.ndarray:
        return self.mat.S

    @property
    def S_inv(self) -> np.ndarray:
        return self.mat.S_inv


def ons_state(feasible: FeasibleSet, lam: float, mu: float) -> OnsState:
    if not (lam > 0 and mu > 0):
        raise ValueError("lambda and mu must be positive")
    if not isinstance(feasible, (All, L2Ball)):
        raise TypeError(f"ONS supports All and L2Ball, not {type(feasible).__name__}")
    d = feasible.dim
    return OnsState(
        grad_sum=np.zeros(d),
        mat=_RankOneInverse.scaled_identity(d, lam),
        b=np.zeros(d),
        lam=float(lam),
        mu=float(mu),
        set=feasible,
        x=np.zeros(d),
    )


def quadratic_ball_argmin(S: np.ndarray, c: np.ndarray, radius: float, tol: float = _BALL_TOL) -> np.ndarray:
    """``argmin_{||x|| <= r} x^T S x / 2 - <c, x>`` for symmetric PD ``S``.

    The KKT point is ``(S + nu I)^{-1} c`` with ``nu >= 0`` chosen so the
    norm equals ``r`` whenever the unconstrained minimizer is outside.  ``nu``
    solves ``1/||x(nu)|| = 1/r``, which is nearly linear in ``nu``; Newton
    steps are kept inside a shrinking bracket and fall back to bisection.
    """
    evals, Q = np.linalg.eigh(S)
    w = Q.T @ c

    def norm_at(nu: float) -> float:
        return float(np.linalg.norm(w / (evals + nu)))

    if norm_at(0.0) <= radius:
        return Q @ (w / evals)
    lo, hi = 0.0, float(np.linalg.norm(c)) / radius
    nu = lo
    for _ in range(500):
        v = w / (evals + nu)
        n = float(np.linalg.norm(v))
        if abs(n - radius) <= tol * radius:
            break
        if n > radius:
            lo = nu
        else:
            hi = nu
        if hi - lo <= tol * max(1.0, hi):
            break
        # d||x||/dnu = -sum v_i^2 / (evals_i + nu) / ||x||
        dn = -float(np.sum(v * v / (evals + nu))) / n
        step = nu + (1.0 / n - 1.0 / radius) * (n * n) / dn
        nu = step if lo < step < hi else 0.5 * (lo + hi)
    else:
        raise RuntimeError("ball search for ONS did not converge")
    x = Q @ v
    # trim the residual overshoot so the point is feasible
    n = float(np.linalg.norm(x))
    return x * (radius / n) if n > radius else x


def ons_point(state: OnsState) -> np.ndarray:
    c = state.b - state.grad_sum
    if isinstance(state.set, All):
        return state.S_inv @ c
    return quadratic_ball_argmin(state.S, c, state.set.radius)


def ons_step(state: OnsState, g, x_obs=None) -> OnsState:
    """Fold in ``g`` observed at ``x_obs`` (defaults to the current point)."""
    d = state.grad_sum.shape[0]
    g = as_vector(g, d)
    if not np.all(np.isfinite(g)):
        raise ValueError("gradient must be finite")
    x_obs = state.x if x_obs is None else as_vector(x_obs, d)
    state.mat.add(math.sqrt(state.mu) * g)
    state.b = state.b + state.mu * float(g @ x_obs) * g
    state.grad_sum = state.grad_sum + g
    state.t += 1
    state.x = ons_point(state)
    return state


def ons_objective(state: OnsState, history: list, x) -> float:
    """The objective minimized by ONS, from an explicit ``(g_i, x_i)`` history."""
    x = as_vector(x)
    val = 0.5 * state.lam * float(x @ x)
    for g, xi in history:
        val += float(g @ x) + 0.5 * state.mu * float(g @ (x - xi)) ** 2
    return val


class ONS(GradientLearner):
    def __init__(self, feasible: FeasibleSet, lam: float, mu: float):
        super().__init__(feasible.dim)
        self.state = ons_state(feasible, lam, mu)

    def _predict(self) -> np.ndarray:
        return self.state.x

    def _update(self, g: np.ndarray) -> None:
        ons_step(self.state, g)


# ---------------------------------------------------------------------------
# VAW
# ---------------------------------------------------------------------------


@dataclass
class VawState:
    mat: _RankOneInverse
    b: np.ndarray
    lam: float
    t: int = 1
    pending: Optional[np.ndarray] = field(default=None)

    @property
    def S(self) -> np.ndarray:
        return self.mat.S

    @property
    def S_inv(self) -> np.ndarray:
        return self.mat.S_inv


def vaw_state(d: int, lam: float) -> VawState:
    if not lam > 0:
        raise ValueError("lambda must be positive")
    return VawState(mat=_RankOneInverse.scaled_identity(d, lam), b=np.zeros(d), lam=float(lam))


def vaw_predict(state: VawState, z) -> np.ndarray:
    """Include ``z`` in the covariance with a zero label and return the weights."""
    if state.pending is not None:
        raise RuntimeError("vaw_predict called twice without vaw_observe")
    z = as_vector(z, state.b.shape[0])
    state.mat.add(z)
    state.pending = z.copy()
    return state.S_inv @ state.b


def vaw_observe(state: VawState, y: float) -> VawState:
    if state.pending is None:
        raise RuntimeError("vaw_observe called before vaw_predict")
    state.b = state.b + float(y) * state.pending
    state.pending = None
    state.t += 1
    return state


class VAW:
    """Online least squares; predicts ``<x_t, z_t>`` for each incoming ``z_t``."""

    def __init__(self, d: int, lam: float = 1.0):
        self.dim = d
        self.state = vaw_state(d, lam)

    def predict(self, z) -> float:
        x = vaw_predict(self.state, z)
        return float(x @ self.state.pending)

    def weights(self, z) -> np.ndarray:
        return vaw_predict(self.state, z)

    def observe(self, y: float) -> None:
        vaw_observe(self.state, y)
