"""Follow-the-regularized-leader variants."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import GradientLearner, as_vector
from .geometry import All, Box, FeasibleSet, L2Ball, project
from .mirror_descent import eg_weights

Schedule = Callable[[int], float]


def sqrt_schedule(scale: float = 1.0) -> Schedule:
    """``lambda_t = scale * sqrt(t)``."""
    if not scale > 0:
        raise ValueError("scale must be positive")
    return lambda t: scale * math.sqrt(t)


def constant_schedule(lam: float) -> Schedule:
    if not lam > 0:
        raise ValueError("lambda must be positive")
    return lambda t: lam


def _quadratic_argmin(feasible: FeasibleSet, theta: np.ndarray, lam: float) -> np.ndarray:
    # argmin over the set of lam/2 ||x||^2 - <theta, x>
    if not isinstance(feasible, (All, L2Ball, Box)):
        raise TypeError(f"quadratic FTRL has no closed form on {type(feasible).__name__}")
    if not lam > 0:
        raise ValueError("regularizer weight must be positive")
    return project(feasible, theta / lam)


# ---------------------------------------------------------------------------
# Linearized FTRL with a quadratic regularizer
# ---------------------------------------------------------------------------


@dataclass
class FtrlLinState:
    """``psi_t(x) = lambda_t/2 ||x||^2`` restricted to ``set``; ``theta = -sum g``."""

    theta: np.ndarray
    set: FeasibleSet
    lam: Schedule
    x: np.ndarray
    t: int = 1


def ftrl_lin_state(feasible: FeasibleSet, lam: Schedule) -> FtrlLinState:
    theta = np.zeros(feasible.dim)
    return FtrlLinState(theta=theta, set=feasible, lam=lam, x=_quadratic_argmin(feasible, theta, lam(1)))


def ftrl_lin_step(state: FtrlLinState, g) -> FtrlLinState:
    g = as_vector(g, state.theta.shape[0])
    if not np.all(np.isfinite(g)):
        raise ValueError("gradient must be finite")
    state.theta = state.theta - g
    state.t += 1
    state.x = _quadratic_argmin(state.set, state.theta, state.lam(state.t))
    return state


def ftrl_lin_objective(state: FtrlLinState, t: int, x) -> float:
    """``F_t(x) = psi_t(x) - <theta, x>`` for the current ``theta``; helper for audits."""
    x = as_vector(x, state.theta.shape[0])
    return 0.5 * state.lam(t) * float(x @ x) - float(state.theta @ x)


class FTRLLinear(GradientLearner):
    def __init__(self, feasible: FeasibleSet, lam: Optional[Schedule] = None):
        super().__init__(feasible.dim)
        self.state = ftrl_lin_state(feasible, lam or sqrt_schedule())

    def _predict(self) -> np.ndarray:
        return self.state.x

    def _update(self, g: np.ndarray) -> None:
        ftrl_lin_step(self.state, g)


# ---------------------------------------------------------------------------
# Entropic FTRL on the simplex with sqrt(t) temperature
# ---------------------------------------------------------------------------


@dataclass
class FtrlEntropicState:
    theta: np.ndarray
    alpha: float
    Linf: float
    x: np.ndarray
    t: int = 1


def ftrl_entropic_state(d: int, alpha: float, Linf: float) -> FtrlEntropicState:
    if not (alpha > 0 and Linf > 0):
        raise ValueError("alpha and Linf must be positive")
    return FtrlEntropicState(theta=np.zeros(d), alpha=float(alpha), Linf=float(Linf), x=np.full(d, 1.0 / d))


def ftrl_entropic_weights(theta: np.ndarray, alpha: float, Linf: float, t: int) -> np.ndarray:
    return eg_weights(theta / (alpha * Linf * math.sqrt(t)))


def ftrl_entropic_step(state: FtrlEntropicState, g) -> FtrlEntropicState:
    g = as_vector(g, state.theta.shape[0])
    if not np.all(np.isfinite(g)):
        raise ValueError("gradient must be finite")
    if float(np.max(np.abs(g))) > state.Linf:
        raise ValueError(f"||g||_inf = {np.max(np.abs(g))} exceeds Linf = {state.Linf}")
    state.theta = state.theta - g
    state.t += 1
    state.x = ftrl_entropic_weights(state.theta, state.alpha, state.Linf, state.t)
    return state


class FTRLEntropic(GradientLearner):
    def __init__(self, d: int, alpha: float = 1.0, Linf: float = 1.0):
        super().__init__(d)
        self.state = ftrl_entropic_state(d, alpha, Linf)

    def _predict(self) -> np.ndarray:
        return self.state.x

    def _update(self, g: np.ndarray) -> None:
        ftrl_entropic_step(self.state, g)


# ---------------------------------------------------------------------------
# AdaHedge
# ---------------------------------------------------------------------------


@dataclass
class AdaHedgeState:
    theta: np.ndarray
    lam: float
    x: np.ndarray
    alpha: float
    t: int = 1
    last_delta: float = 0.0


def adahedge_state(d: int, alpha: Optional[float] = None) -> AdaHedgeState:
    if d < 2:
        raise ValueError("AdaHedge needs d >= 2")
    a = math.sqrt(math.log(d)) if alpha is None else float(alpha)
    if not a > 0:
        raise ValueError("alpha must be positive")
    return AdaHedgeState(theta=np.zeros(d), lam=0.0, x=np.full(d, 1.0 / d), alpha=a)


def _argmax_uniform(theta: np.ndarray) -> np.ndarray:
    top = theta == theta.max()
    return top / top.sum()


def adahedge_weights(theta: np.ndarray, lam: float) -> np.ndarray:
    """Softmax of ``theta / lam``; uniform over the argmax when ``lam == 0``."""
    if lam == 0.0:
        return _argmax_uniform(theta)
    return eg_weights(theta / lam)


def adahedge_mix_gap(x: np.ndarray, g: np.ndarray, lam: float, theta: np.ndarray, theta_next: np.ndarray) -> float:
    """The per-round gap ``delta_t``, clipped at zero against rounding."""
    inner = float(g @ x)
    if lam == 0.0:
        # limit lam -> 0+ of the conjugate difference
        delta = float(theta_next.max() - theta.max()) + inner
    else:
        supp = x > 0
        gs = g[supp]
        m = float(gs.min())
        delta = lam * math.log(float(np.sum(x[supp] * np.exp(-(gs - m) / lam)))) - m + inner
    return max(delta, 0.0)


def adahedge_step(state: AdaHedgeState, g) -> AdaHedgeState:
    g = as_vector(g, state.theta.shape[0])
    if not np.all(np.isfinite(g)):
        raise ValueError("gradient must be finite")
    theta_next = state.theta - g
    delta = adahedge_mix_gap(state.x, g, state.lam, state.theta, theta_next)
    state.theta = theta_next
    state.lam = state.lam + delta / (state.alpha * state.alpha)
    state.x = adahedge_weights(state.theta, state.lam)
    state.last_delta = delta
    state.t += 1
    return state


class AdaHedge(GradientLearner):
    def __init__(self, d: int, alpha: Optional[float] = None):
        super().__init__(d)
        self.state = adahedge_state(d, alpha)

    def _predict(self) -> np.ndarray:
        return self.state.x

    def _update(self, g: np.ndarray) -> None:
        adahedge_step(self.state, g)


# ---------------------------------------------------------------------------
# Composite L1 regularization
# ---------------------------------------------------------------------------


@dataclass
class CompositeL1State:
    theta: np.ndarray  # sum of past gradients
    lam: float
    L: float
    t: int = 1

    def __post_init__(self):
        if not (self.lam > 0 and self.L > 0):
            raise ValueError("lambda and L must be positive")


def composite_l1_predict(state: CompositeL1State) -> np.ndarray:
    """Soft-thresholded ``-sign(theta) max(|theta| - lam t, 0) / (L sqrt t)``."""
    th = state.theta
    shrunk = np.maximum(np.abs(th) - state.lam * state.t, 0.0)
    return -np.sign(th) * shrunk / (state.L * math.sqrt(state.t))


def composite_l1_step(state: CompositeL1State, g) -> CompositeL1State:
    g = as_vector(g, state.theta.shape[0])
    state.theta = state.theta + g
    state.t += 1
    return state


class CompositeL1(GradientLearner):
    """FTRL on linear losses plus ``lam ||x||_1`` per round."""

    def __init__(self, d: int, lam: float, L: float = 1.0):
        super().__init__(d)
        self.state = CompositeL1State(theta=np.zeros(d), lam=float(lam), L=float(L))

    def _predict(self) -> np.ndarray:
        return composite_l1_predict(self.state)

    def _update(self, g: np.ndarray) -> None:
        composite_l1_step(self.state, g)


# ---------------------------------------------------------------------------
# Quadratized FTRL for strongly convex losses
# ---------------------------------------------------------------------------


@dataclass
class QuadratizedState:
    num: np.ndarray  # sum mu_i x_i - g_i
    den: float = 0.0  # sum mu_i
    t: int = 1


def quadratized_predict(state: QuadratizedState) -> np.ndarray:
    if state.den == 0.0:
        return np.zeros_like(state.num)
    return state.num / state.den


def quadratized_step(state: QuadratizedState, g, mu: float, x_obs) -> QuadratizedState:
    if not mu > 0:
        raise ValueError("mu must be positive")
    d = state.num.shape[0]
    g = as_vector(g, d)
    x_obs = as_vector(x_obs, d)
    state.num = state.num + (mu * x_obs - g)
    state.den += mu
    state.t += 1
    return state


class Quadratized(GradientLearner):
    """FTRL on the quadratic lower bounds of ``mu``-strongly convex losses.

    On squared losses with ``mu = 2`` this is exactly follow-the-leader.
    """

    def __init__(self, d: int, mu: float):
        super().__init__(d)
        self.mu = float(mu)
        self.state = QuadratizedState(num=np.zeros(d))
        self._x = np.zeros(d)

    def _predict(self) -> np.ndarray:
        self._x = quadratized_predict(self.state)
        return self._x

    def _update(self, g: np.ndarray) -> None:
        quadratized_step(self.state, g, self.mu, self._x)


class FollowTheLeader(GradientLearner):
    """Unregularized leader for linear losses on a bounded set.

    Plays ``argmin_x <sum g, x>``; coordinates with no preference go to the
    point of the set nearest the origin, so the first prediction is that point.
    """

    def __init__(self, feasible: FeasibleSet):
        if not isinstance(feasible, (L2Ball, Box)):
            raise TypeError(f"follow-the-leader needs a bounded set, not {type(feasible).__name__}")
        super().__init__(feasible.dim)
        self.set = feasible
        self.grad_sum = np.zeros(feasible.dim)

    def _predict(self) -> np.ndarray:
        s = self.grad_sum
        if isinstance(self.set, L2Ball):
            n = float(np.linalg.norm(s))
            return np.zeros_like(s) if n == 0.0 else -self.set.radius * s / n
        base = project(self.set, np.zeros_like(s))
        return np.where(s > 0, self.set.lo, np.where(s < 0, self.set.hi, base))

    def _update(self, g: np.ndarray) -> None:
        self.grad_sum = self.grad_sum + g


# ---------------------------------------------------------------------------
# Optimistic FTRL
# ---------------------------------------------------------------------------


class Hint(enum.Enum):
    ZERO = "zero"
    LAST_GRADIENT = "last_gradient"
    RUNNING_MEAN = "running_mean"


@dataclass
class OptimisticState:
    """Optimistic FTRL with the quadratic regularizer.

    With ``M`` and ``L`` given, ``lambda_t = sqrt(max(8M^2, 4L^2) + V_t)`` where
    ``V_t`` accumulates the squared gradient variations seen so far; otherwise
    ``inner.lam`` is used.
    """

    inner: FtrlLinState
    hint_strategy: Hint = Hint.ZERO
    M: Optional[float] = None
    L: Optional[float] = None
    variation: float = 0.0
    grad_sum: np.ndarray = field(default=None)
    last_g: Optional[np.ndarray] = None
    hint: np.ndarray = field(default=None)

    def __post_init__(self):
        d = self.inner.theta.shape[0]
        if self.grad_sum is None:
            self.grad_sum = np.zeros(d)
        if self.hint is None:
            self.hint = np.zeros(d)
        if (self.M is None) != (self.L is None):
            raise ValueError("give both M and L or neither")
        self.inner.x = self.predict_point()

    @property
    def t(self) -> int:
        return self.inner.t

    @property
    def x(self) -> np.ndarray:
        return self.inner.x

    def lam_t(self) -> float:
        if self.M is None:
            return self.inner.lam(self.inner.t)
        return math.sqrt(max(8.0 * self.M**2, 4.0 * self.L**2) + self.variation)

    def predict_point(self) -> np.ndarray:
        return _quadratic_argmin(self.inner.set, self.inner.theta - self.hint, self.lam_t())


def optimistic_state(
    feasible: FeasibleSet,
    hint: Hint = Hint.ZERO,
    lam: Optional[Schedule] = None,
    M: Optional[float] = None,
    L: Optional[float] = None,
) -> OptimisticState:
    inner = ftrl_lin_state(feasible, lam or sqrt_schedule())
    return OptimisticState(inner=inner, hint_strategy=Hint(hint), M=M, L=L)


def _next_hint(state: OptimisticState) -> np.ndarray:
    s = state.hint_strategy
    if s is Hint.ZERO or state.last_g is None:
        return np.zeros_like(state.grad_sum)
    if s is Hint.LAST_GRADIENT:
        return state.last_g.copy()
    # rounds observed so far is t - 1 after the counter advanced
    return state.grad_sum / (state.inner.t - 1)


def optimistic_step(state: OptimisticState, g, g_at_prev=None) -> OptimisticState:
    """Observe ``g = grad l_t(x_t)``.

    ``g_at_prev`` is ``grad l_t(x_{t-1})``; it feeds the variation term of the
    adaptive regularizer.  When omitted, ``g_t - g_{t-1}`` is used instead.
    """
    d = state.inner.theta.shape[0]
    g = as_vector(g, d)
    if not np.all(np.isfinite(g)):
        raise ValueError("gradient must be finite")
    if state.last_g is not None:
        ref = g if g_at_prev is None else as_vector(g_at_prev, d)
        diff = ref - state.last_g
        state.variation += float(diff @ diff)
    state.inner.theta = state.inner.theta - g
    state.grad_sum = state.grad_sum + g
    state.last_g = g.copy()
    state.inner.t += 1
    state.hint = _next_hint(state)
    state.inner.x = state.predict_point()
    return state


class OptimisticFTRL(GradientLearner):
    def __init__(
        self,
        feasible: FeasibleSet,
        hint: Hint = Hint.ZERO,
        lam: Optional[Schedule] = None,
        M: Optional[float] = None,
        L: Optional[float] = None,
    ):
        super().__init__(feasible.dim)
        self.state = optimistic_state(feasible, hint, lam, M, L)

    def _predict(self) -> np.ndarray:
        return self.state.x

    def _update(self, g: np.ndarray) -> None:
        optimistic_step(self.state, g)
