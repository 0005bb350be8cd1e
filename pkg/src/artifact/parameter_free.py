"""Coin betting and the reductions built on it."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import List, Optional, Union

import numpy as np

from ._accel import njit, use_numba
from .core import GradientLearner, as_vector
from .first_order import AdaptiveGlobal, StepsizePolicy, osd_state, osd_step
from .geometry import L2Ball

# ---------------------------------------------------------------------------
# Bettors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KT:
    pass


@dataclass(frozen=True)
class Shifted:
    """Potential-based bettor that needs the horizon up front."""

    horizon: int

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")


BettorKind = Union[KT, Shifted]


@dataclass
class BettingState:
    wealth: float
    coin_sum: float = 0.0
    t: int = 0  # rounds played
    kind: BettorKind = field(default_factory=KT)
    eps: float = 1.0

    def __post_init__(self):
        if not self.wealth > 0:
            raise ValueError("initial wealth must be positive")


def betting_state(eps: float = 1.0, kind: Optional[BettorKind] = None) -> BettingState:
    return BettingState(wealth=float(eps), kind=kind or KT(), eps=float(eps))


def kt_fraction(coin_sum: float, t_next: int) -> float:
    return coin_sum / t_next


def shifted_fraction(coin_sum: float, t_next: int, horizon: int) -> float:
    # ratio of the potentials at S+1 and S-1 is exp(2S / (t + T))
    return math.tanh(coin_sum / (t_next + horizon))


def betting_fraction(state: BettingState) -> float:
    t_next = state.t + 1
    if isinstance(state.kind, KT):
        return kt_fraction(state.coin_sum, t_next)
    if t_next > state.kind.horizon:
        raise ValueError(f"round {t_next} is past the horizon {state.kind.horizon}")
    return shifted_fraction(state.coin_sum, t_next, state.kind.horizon)


def kt_bet(state: BettingState) -> float:
    if not isinstance(state.kind, KT):
        raise TypeError("kt_bet needs a KT bettor")
    return betting_fraction(state) * state.wealth


def shifted_bet(state: BettingState) -> float:
    if not isinstance(state.kind, Shifted):
        raise TypeError("shifted_bet needs a Shifted bettor")
    return betting_fraction(state) * state.wealth


def bet(state: BettingState) -> float:
    return betting_fraction(state) * state.wealth


def settle(state: BettingState, c: float, x: Optional[float] = None) -> BettingState:
    """Resolve a round with coin ``c`` in [-1, 1]; ``x`` is the bet placed."""
    c = float(c)
    if not -1.0 <= c <= 1.0:
        raise ValueError(f"coin {c} outside [-1, 1]")
    x = bet(state) if x is None else float(x)
    state.wealth += c * x
    state.coin_sum += c
    state.t += 1
    return state


def shifted_potential(x: float, t: int, horizon: int, eps: float = 1.0) -> float:
    s = sum(1.0 / (2.0 * (i + horizon)) for i in range(1, t + 1))
    return eps * math.exp(x * x / (2.0 * (t + horizon)) - s)


# ---------------------------------------------------------------------------
# Batched wealth kernels
# ---------------------------------------------------------------------------


@njit(cache=True)
def _kt_log_wealth_loop(coins: np.ndarray, eps: float) -> np.ndarray:
    n, T = coins.shape
    out = np.empty(n)
    for r in range(n):
        w = eps
        s = 0.0
        for t in range(T):
            c = coins[r, t]
            w += c * (s / (t + 1)) * w
            s += c
        out[r] = math.log(w)
    return out


def _kt_log_wealth_numpy(coins: np.ndarray, eps: float) -> np.ndarray:
    n, T = coins.shape
    logw = np.full(n, math.log(eps))
    s = np.zeros(n)
    for t in range(T):
        c = coins[:, t]
        logw += np.log1p(c * (s / (t + 1)))
        s += c
    return logw


@njit(cache=True)
def _shifted_log_wealth_loop(coins: np.ndarray, eps: float) -> np.ndarray:
    n, T = coins.shape
    out = np.empty(n)
    for r in range(n):
        w = eps
        s = 0.0
        for t in range(T):
            c = coins[r, t]
            w += c * math.tanh(s / (t + 1 + T)) * w
            s += c
        out[r] = math.log(w)
    return out


def _shifted_log_wealth_numpy(coins: np.ndarray, eps: float) -> np.ndarray:
    n, T = coins.shape
    logw = np.full(n, math.log(eps))
    s = np.zeros(n)
    for t in range(T):
        c = coins[:, t]
        logw += np.log1p(c * np.tanh(s / (t + 1 + T)))
        s += c
    return logw


def kt_log_wealth(coins, eps: float = 1.0, accel: Optional[bool] = None) -> np.ndarray:
    """Final log-wealth of a KT bettor on each row of ``coins``."""
    coins = np.ascontiguousarray(np.atleast_2d(np.asarray(coins, dtype=float)))
    if accel if accel is not None else use_numba():
        return _kt_log_wealth_loop(coins, float(eps))
    return _kt_log_wealth_numpy(coins, float(eps))


def shifted_log_wealth(coins, eps: float = 1.0, accel: Optional[bool] = None) -> np.ndarray:
    """Final log-wealth of the shifted bettor with horizon equal to the row length."""
    coins = np.ascontiguousarray(np.atleast_2d(np.asarray(coins, dtype=float)))
    if accel if accel is not None else use_numba():
        return _shifted_log_wealth_loop(coins, float(eps))
    return _shifted_log_wealth_numpy(coins, float(eps))


def all_sign_sequences(T: int) -> np.ndarray:
    return np.array(list(itertools.product((-1.0, 1.0), repeat=T)))


def calibrate_kt_constant(max_len: int = 16) -> float:
    """Smallest ``K`` with ``ln W_T >= S^2/(4T) - ln(T)/2 - K`` on every +-1 sequence up to ``max_len``."""
    K = -math.inf
    for T in range(1, max_len + 1):
        coins = all_sign_sequences(T)
        lw = kt_log_wealth(coins)
        S = coins.sum(axis=1)
        gap = S * S / (4.0 * T) - 0.5 * math.log(T) - lw
        K = max(K, float(gap.max()))
    return K


# ---------------------------------------------------------------------------
# Coin betting as online linear optimization
# ---------------------------------------------------------------------------


@dataclass
class KtOcoState:
    bettor: BettingState
    x: float = 0.0

    @property
    def t(self) -> int:
        return self.bettor.t + 1


def kt_oco_state(eps: float = 1.0, kind: Optional[BettorKind] = None) -> KtOcoState:
    b = betting_state(eps, kind)
    return KtOcoState(bettor=b, x=bet(b))


def kt_oco_step(state: KtOcoState, g: float) -> float:
    """Feed the 1-d gradient ``g`` and return the next prediction."""
    g = float(g)
    if not abs(g) <= 1.0:
        raise ValueError(f"|g| = {abs(g)} exceeds 1; rescale by the Lipschitz constant")
    settle(state.bettor, -g, state.x)
    state.x = bet(state.bettor)
    return state.x


class KTOCO(GradientLearner):
    """One-dimensional parameter-free learner, ``x_t = -(sum g / t)(eps - sum g x)``."""

    def __init__(self, eps: float = 1.0, kind: Optional[BettorKind] = None):
        super().__init__(1)
        self.state = kt_oco_state(eps, kind)

    def _predict(self) -> np.ndarray:
        return np.array([self.state.x])

    def _update(self, g: np.ndarray) -> None:
        kt_oco_step(self.state, float(g[0]))


@dataclass
class CoordKtState:
    grad_sum: np.ndarray
    reward: np.ndarray  # -sum g_i x_i per coordinate
    eps: float
    x: np.ndarray
    t: int = 1


def coord_kt_state(d: int, eps: Optional[float] = None) -> CoordKtState:
    e = 1.0 / d if eps is None else float(eps)
    if not e > 0:
        raise ValueError("eps must be positive")
    return CoordKtState(grad_sum=np.zeros(d), reward=np.zeros(d), eps=e, x=np.zeros(d))


def coord_kt_step(state: CoordKtState, g) -> np.ndarray:
    g = as_vector(g, state.x.shape[0])
    if float(np.max(np.abs(g), initial=0.0)) > 1.0:
        raise ValueError("coordinate KT needs ||g||_inf <= 1")
    state.reward = state.reward - g * state.x
    state.grad_sum = state.grad_sum + g
    state.t += 1
    state.x = -(state.grad_sum / state.t) * (state.eps + state.reward)
    return state.x


class CoordKT(GradientLearner):
    def __init__(self, d: int, eps: Optional[float] = None):
        super().__init__(d)
        self.state = coord_kt_state(d, eps)

    def _predict(self) -> np.ndarray:
        return self.state.x

    def _update(self, g: np.ndarray) -> None:
        coord_kt_step(self.state, g)


# ---------------------------------------------------------------------------
# Direction and magnitude
# ---------------------------------------------------------------------------


@dataclass
class DirMagState:
    one_d: KtOcoState
    ball: object  # OsdState on the unit ball
    z: float = 0.0
    x_dir: np.ndarray = None
    last_s: float = 0.0

    @property
    def x(self) -> np.ndarray:
        return self.z * self.x_dir


def dir_mag_state(d: int, eps: float = 1.0, policy: Optional[StepsizePolicy] = None) -> DirMagState:
    ball = osd_state(L2Ball(1.0, d), policy or AdaptiveGlobal(D=2.0))
    one = kt_oco_state(eps)
    return DirMagState(one_d=one, ball=ball, z=one.x, x_dir=ball.x.copy())


def dir_mag_step(state: DirMagState, g) -> np.ndarray:
    """Split ``g`` between the magnitude and direction learners; return the next point."""
    g = as_vector(g, state.x_dir.shape[0])
    s = float(g @ state.x_dir)
    # |s| <= ||g|| <= 1; clip the last ulp so the 1-d learner never rejects it
    s = max(-1.0, min(1.0, s))
    state.last_s = s
    kt_oco_step(state.one_d, s)
    osd_step(state.ball, g)
    state.z = state.one_d.x
    state.x_dir = state.ball.x.copy()
    return state.x


class DirMag(GradientLearner):
    def __init__(self, d: int, eps: float = 1.0, policy: Optional[StepsizePolicy] = None):
        super().__init__(d)
        self.state = dir_mag_state(d, eps, policy)

    def _predict(self) -> np.ndarray:
        return self.state.x

    def _update(self, g: np.ndarray) -> None:
        dir_mag_step(self.state, g)


# ---------------------------------------------------------------------------
# Experts through betting
# ---------------------------------------------------------------------------


@dataclass
class BettingExpertsState:
    prior: np.ndarray
    bettors: List[BettingState]
    bets: np.ndarray
    p: np.ndarray
    t: int = 1


def _experts_prediction(prior: np.ndarray, bets: np.ndarray) -> np.ndarray:
    phat = prior * np.maximum(bets, 0.0)
    tot = phat.sum()
    if tot > 0.0:
        return phat / tot
    return prior.copy()


def betting_experts_state(
    d: int, prior=None, kind: Optional[BettorKind] = None, eps: float = 1.0
) -> BettingExpertsState:
    pi = np.full(d, 1.0 / d) if prior is None else as_vector(prior, d)
    if np.any(pi < 0) or not math.isclose(float(pi.sum()), 1.0, rel_tol=1e-12):
        raise ValueError("prior must lie on the simplex")
    bettors = [betting_state(eps, kind) for _ in range(d)]
    bets = np.array([bet(b) for b in bettors])
    return BettingExpertsState(prior=pi, bettors=bettors, bets=bets, p=_experts_prediction(pi, bets))


def _exhausted(b: BettingState) -> bool:
    return isinstance(b.kind, Shifted) and b.t >= b.kind.horizon


def expert_coins(g: np.ndarray, p: np.ndarray, bets: np.ndarray) -> np.ndarray:
    gap = float(g @ p) - g
    return np.where(bets > 0, gap, np.maximum(gap, 0.0))


def betting_experts_step(state: BettingExpertsState, g) -> np.ndarray:
    g = as_vector(g, state.prior.shape[0])
    if np.any(g < 0) or np.any(g > 1) or not np.all(np.isfinite(g)):
        raise ValueError("expert losses must lie in [0, 1]")
    coins = np.clip(expert_coins(g, state.p, state.bets), -1.0, 1.0)
    for b, c, x in zip(state.bettors, coins, state.bets):
        settle(b, float(c), float(x))
    # once the horizon is reached there is no next round to stake on
    state.bets = np.array([0.0 if _exhausted(b) else bet(b) for b in state.bettors])
    state.p = _experts_prediction(state.prior, state.bets)
    state.t += 1
    return state.p


class BettingExperts(GradientLearner):
    def __init__(self, d: int, prior=None, kind: Optional[BettorKind] = None, eps: float = 1.0):
        super().__init__(d)
        self.state = betting_experts_state(d, prior, kind, eps)

    def _predict(self) -> np.ndarray:
        return self.state.p

    def _update(self, g: np.ndarray) -> None:
        betting_experts_step(self.state, g)


# ---------------------------------------------------------------------------
# Combining two learners
# ---------------------------------------------------------------------------


class ZeroLearner(GradientLearner):
    def _predict(self) -> np.ndarray:
        return np.zeros(self.dim)

    def _update(self, g: np.ndarray) -> None:
        pass


class Combined(GradientLearner):
    """Plays the sum of two learners' points and passes the same gradient to both."""

    def __init__(self, a: GradientLearner, b: GradientLearner):
        if a.dim != b.dim:
            raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
        super().__init__(a.dim)
        self.a, self.b = a, b
        self.parts: tuple = ()

    def _predict(self) -> np.ndarray:
        xa, xb = self.a.predict(), self.b.predict()
        self.parts = (xa, xb)
        return xa + xb

    def _update(self, g: np.ndarray) -> None:
        self.a.observe(g)
        self.b.observe(g)


def combine(a: GradientLearner, b: GradientLearner) -> Combined:
    return Combined(a, b)
