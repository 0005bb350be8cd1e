"""Adversarial and stochastic multi-armed bandits.

Each policy exists twice: as a step function on an explicit state, and as a
batched simulation kernel over many independent runs.  Kernels take every
random number from pre-drawn tables so the compiled and numpy paths see the
same inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from ._accel import njit, use_numba
from .core import as_vector
from .mirror_descent import eg_weights

TSALLIS_TOL = 1e-10
TSALLIS_MAX_ITER = 200


def iw_estimate(x, arm: int, loss: float) -> np.ndarray:
    """Importance-weighted loss vector; nonzero only at ``arm``."""
    x = as_vector(x)
    if not 0 <= arm < x.shape[0]:
        raise IndexError(f"arm {arm} out of range")
    if not x[arm] > 0:
        raise ValueError("cannot importance-weight an arm with zero probability")
    g = np.zeros_like(x)
    g[arm] = loss / x[arm]
    return g


# ---------------------------------------------------------------------------
# Tsallis normalization
# ---------------------------------------------------------------------------


@njit(cache=True)
def _tsallis_solve(x: np.ndarray, g: np.ndarray, eta: float, q: float) -> Tuple[np.ndarray, float]:
    # x_i(beta) = (c (a_i + beta))^(1/(q-1)) with c = (1-q)/q; find sum = 1.
    d = x.shape[0]
    c = (1.0 - q) / q
    p = 1.0 / (q - 1.0)
    a = np.empty(d)
    for i in range(d):
        a[i] = x[i] ** (q - 1.0) / c + eta * g[i]
    amin = a.min()
    lo = 1.0 / c - amin  # smallest coordinate alone has mass 1
    hi = d ** (1.0 - q) / c - amin  # every coordinate has mass <= 1/d
    beta = lo
    out = np.empty(d)
    res = 1.0
    for _ in range(200):
        s = 0.0
        ds = 0.0
        for i in range(d):
            v = c * (a[i] + beta)
            xi = v ** p
            out[i] = xi
            s += xi
            ds += p * c * xi / v
        res = s - 1.0
        if abs(res) <= 1e-13:
            break
        if res > 0.0:
            lo = beta
        else:
            hi = beta
        step = beta - res / ds
        # the sum is convex and decreasing, so Newton from the left stays left
        if step <= lo or step >= hi:
            step = 0.5 * (lo + hi)
        if step == beta:
            break
        beta = step
    return out, abs(res)


def tsallis_solve(x, g, eta: float, q: float = 0.5) -> Tuple[np.ndarray, float]:
    """One INF update; returns the new point and its normalization residual."""
    x = as_vector(x)
    g = as_vector(g, x.shape[0])
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0, 1)")
    out, res = _tsallis_solve(x, g, float(eta), float(q))
    if not res <= TSALLIS_TOL:
        raise RuntimeError(f"Tsallis normalization did not converge (residual {res:.3e})")
    return out, res


# ---------------------------------------------------------------------------
# Adversarial state machines
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Exp3:
    eta: float


@dataclass(frozen=True)
class ExploreMix:
    eta: float
    alpha: float

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")


@dataclass(frozen=True)
class Tsallis:
    eta: float
    q: float = 0.5


AdvAlgo = Union[Exp3, ExploreMix, Tsallis]


@dataclass
class AdvBanditState:
    w: np.ndarray  # EG weights, or the INF point
    algo: AdvAlgo
    Linf: float = 1.0
    t: int = 1
    last_residual: float = 0.0

    @property
    def d(self) -> int:
        return self.w.shape[0]

    @property
    def x(self) -> np.ndarray:
        """Sampling distribution for the current round."""
        if isinstance(self.algo, ExploreMix):
            a = self.algo.alpha
            return (1.0 - a) * self.w + a / self.d
        return self.w


def adv_bandit_state(d: int, algo: AdvAlgo, Linf: float = 1.0) -> AdvBanditState:
    if d < 2:
        raise ValueError("need at least two arms")
    if not algo.eta > 0:
        raise ValueError("eta must be positive")
    return AdvBanditState(w=np.full(d, 1.0 / d), algo=algo, Linf=float(Linf))


def _check_loss(loss: float, lo: float, hi: float) -> float:
    loss = float(loss)
    if not lo <= loss <= hi:
        raise ValueError(f"loss {loss} outside [{lo}, {hi}]")
    return loss


def exp3_step(state: AdvBanditState, arm: int, loss: float) -> AdvBanditState:
    if not isinstance(state.algo, Exp3):
        raise TypeError("exp3_step needs an Exp3 state")
    loss = _check_loss(loss, 0.0, state.Linf)
    g = iw_estimate(state.w, arm, loss)
    state.w = eg_weights(np.log(state.w) - state.algo.eta * g)
    state.t += 1
    return state


def explore_mix_step(state: AdvBanditState, arm: int, loss: float) -> AdvBanditState:
    if not isinstance(state.algo, ExploreMix):
        raise TypeError("explore_mix_step needs an ExploreMix state")
    loss = _check_loss(loss, -state.Linf, state.Linf)
    g = iw_estimate(state.x, arm, loss)
    state.w = eg_weights(np.log(state.w) - state.algo.eta * g)
    state.t += 1
    return state


def tsallis_step(state: AdvBanditState, arm: int, loss: float) -> AdvBanditState:
    if not isinstance(state.algo, Tsallis):
        raise TypeError("tsallis_step needs a Tsallis state")
    loss = _check_loss(loss, 0.0, math.inf)
    g = iw_estimate(state.w, arm, loss)
    state.w, state.last_residual = tsallis_solve(state.w, g, state.algo.eta, state.algo.q)
    state.t += 1
    return state


def adv_bandit_step(state: AdvBanditState, arm: int, loss: float) -> AdvBanditState:
    if isinstance(state.algo, Exp3):
        return exp3_step(state, arm, loss)
    if isinstance(state.algo, ExploreMix):
        return explore_mix_step(state, arm, loss)
    return tsallis_step(state, arm, loss)


# ---------------------------------------------------------------------------
# Stochastic bandits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Bernoulli:
    """Loss 1 with probability ``p``, else 0."""

    p: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must lie in [0, 1]")

    @property
    def mean(self) -> float:
        return self.p


@dataclass(frozen=True)
class Gaussian:
    mu: float
    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    @property
    def mean(self) -> float:
        return self.mu


ArmModel = Union[Bernoulli, Gaussian]


def arm_loss(model: ArmModel, noise: float) -> float:
    """Map a uniform (Bernoulli) or standard normal (Gaussian) draw to a loss."""
    if isinstance(model, Bernoulli):
        return 1.0 if noise < model.p else 0.0
    return model.mu + model.sigma * noise


@dataclass(frozen=True)
class ETC:
    m: int


@dataclass(frozen=True)
class UCB:
    alpha: float = 3.0

    def __post_init__(self):
        if not self.alpha > 2.0:
            raise ValueError("UCB needs alpha > 2")


StochPolicy = Union[ETC, UCB]


@dataclass
class StochBanditState:
    pulls: np.ndarray
    sums: np.ndarray
    policy: StochPolicy
    horizon: Optional[int] = None
    t: int = 0  # rounds played
    committed: Optional[int] = None  # ETC arm, fixed once exploration ends

    @property
    def d(self) -> int:
        return self.pulls.shape[0]

    @property
    def means(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.pulls > 0, self.sums / np.maximum(self.pulls, 1), np.nan)


def stoch_bandit_state(d: int, policy: StochPolicy, horizon: Optional[int] = None) -> StochBanditState:
    if isinstance(policy, ETC):
        if horizon is None:
            raise ValueError("ETC needs the horizon")
        if not 1 <= policy.m <= horizon // d:
            raise ValueError(f"ETC needs 1 <= m <= T/d, got m={policy.m}")
    return StochBanditState(pulls=np.zeros(d, dtype=np.int64), sums=np.zeros(d), policy=policy, horizon=horizon)


def etc_m(T: int, gap: float) -> int:
    """Tuned exploration length for two arms with gap ``gap``."""
    return max(math.ceil(4.0 / gap**2 * math.log(T * gap**2 / 4.0)), 1)


def etc_choose(state: StochBanditState) -> int:
    if not isinstance(state.policy, ETC):
        raise TypeError("etc_choose needs an ETC state")
    t = state.t + 1
    d, m = state.d, state.policy.m
    if t <= d * m:
        return t % d
    if state.committed is None:
        state.committed = int(np.argmin(state.means))
    return state.committed


def ucb_index(mean: float, pulls: int, t: int, alpha: float) -> float:
    if pulls == 0:
        return -math.inf
    return mean - math.sqrt(2.0 * alpha * math.log(t) / pulls)


def ucb_choose(state: StochBanditState) -> int:
    if not isinstance(state.policy, UCB):
        raise TypeError("ucb_choose needs a UCB state")
    t = state.t + 1
    idx = [ucb_index(state.sums[i] / max(state.pulls[i], 1), int(state.pulls[i]), t, state.policy.alpha) for i in range(state.d)]
    return int(np.argmin(idx))


def stoch_choose(state: StochBanditState) -> int:
    return etc_choose(state) if isinstance(state.policy, ETC) else ucb_choose(state)


def stoch_update(state: StochBanditState, arm: int, loss: float) -> StochBanditState:
    state.pulls[arm] += 1
    state.sums[arm] += float(loss)
    state.t += 1
    return state


def ucb_bound(gaps: Sequence[float], T: int, alpha: float) -> float:
    gaps = [float(g) for g in gaps]
    return alpha / (alpha - 2.0) * sum(gaps) + sum(8.0 * alpha * math.log(T) / g for g in gaps if g > 0)


def etc_bound(gap: float, T: int) -> float:
    return gap + 4.0 / gap * (1.0 + max(math.log(T * gap * gap / 4.0), 0.0))


# ---------------------------------------------------------------------------
# Random tables and batched simulation
# ---------------------------------------------------------------------------


@dataclass
class Tables:
    """Pre-drawn randomness for ``n`` runs of ``T`` rounds."""

    u: np.ndarray  # uniforms for arm sampling, (n, T)
    noise: np.ndarray  # uniforms (Bernoulli) or standard normals (Gaussian), (n, T)


@dataclass
class SimResult:
    arms: np.ndarray  # (n, T) pulled arm per round
    losses: np.ndarray  # (n, T) realized loss per round
    residual: np.ndarray = field(default=None)  # (n,) worst normalization residual

    def pulls(self, d: int) -> np.ndarray:
        out = np.zeros((self.arms.shape[0], d), dtype=np.int64)
        for i in range(d):
            out[:, i] = (self.arms == i).sum(axis=1)
        return out

    def pseudo_regret(self, means: np.ndarray) -> np.ndarray:
        """``sum_t mu_{A_t} - T min_i mu_i`` per run."""
        means = np.asarray(means, dtype=float)
        return means[self.arms].sum(axis=1) - self.arms.shape[1] * means.min()


def _arm_arrays(arms: Sequence[ArmModel]) -> Tuple[np.ndarray, np.ndarray, int]:
    kinds = {type(a) for a in arms}
    if len(kinds) != 1:
        raise ValueError("all arms of an instance must share one distribution family")
    if isinstance(arms[0], Bernoulli):
        return np.array([a.p for a in arms]), np.zeros(len(arms)), 0
    return np.array([a.mu for a in arms]), np.array([a.sigma for a in arms]), 1


def draw_tables(rng: np.random.Generator, n: int, T: int, arms: Sequence[ArmModel]) -> Tables:
    _, _, kind = _arm_arrays(arms)
    u = rng.random((n, T))
    noise = rng.random((n, T)) if kind == 0 else rng.standard_normal((n, T))
    return Tables(u=u, noise=noise)


@njit(cache=True)
def _loss_of(arm: int, noise: float, means: np.ndarray, sigmas: np.ndarray, kind: int) -> float:
    if kind == 0:
        return 1.0 if noise < means[arm] else 0.0
    return means[arm] + sigmas[arm] * noise


@njit(cache=True)
def _sample(x: np.ndarray, u: float) -> int:
    tot = x.sum()
    acc = 0.0
    d = x.shape[0]
    for i in range(d):
        acc += x[i] / tot
        if u < acc:
            return i
    # rounding left u above the last partial sum
    for i in range(d - 1, -1, -1):
        if x[i] > 0.0:
            return i
    return d - 1


def _sample_batch(x: np.ndarray, u: np.ndarray) -> np.ndarray:
    tot = x.sum(axis=1, keepdims=True)
    cdf = np.cumsum(x / tot, axis=1)
    arm = (u[:, None] >= cdf).sum(axis=1)
    d = x.shape[1]
    over = arm >= d
    if np.any(over):
        # mirror the scalar fallback: last arm with positive mass
        pos = x[over] > 0
        arm[over] = d - 1 - np.argmax(pos[:, ::-1], axis=1)
    return arm


def _loss_batch(arm: np.ndarray, noise: np.ndarray, means: np.ndarray, sigmas: np.ndarray, kind: int) -> np.ndarray:
    if kind == 0:
        return np.where(noise < means[arm], 1.0, 0.0)
    return means[arm] + sigmas[arm] * noise


# --- Exp3 / explicit exploration -------------------------------------------


@njit(cache=True)
def _exp3_loop(means, sigmas, kind, u, noise, eta, alpha):
    n, T = u.shape
    d = means.shape[0]
    arms = np.empty((n, T), dtype=np.int64)
    losses = np.empty((n, T))
    for r in range(n):
        logw = np.zeros(d)
        for t in range(T):
            m = logw.max()
            w = np.exp(logw - m)
            w /= w.sum()
            x = (1.0 - alpha) * w + alpha / d
            a = _sample(x, u[r, t])
            loss = _loss_of(a, noise[r, t], means, sigmas, kind)
            arms[r, t] = a
            losses[r, t] = loss
            logw = np.log(w)
            logw[a] -= eta * loss / x[a]
    return arms, losses


def _exp3_numpy(means, sigmas, kind, u, noise, eta, alpha):
    n, T = u.shape
    d = means.shape[0]
    arms = np.empty((n, T), dtype=np.int64)
    losses = np.empty((n, T))
    logw = np.zeros((n, d))
    rows = np.arange(n)
    for t in range(T):
        w = np.exp(logw - logw.max(axis=1, keepdims=True))
        w /= w.sum(axis=1, keepdims=True)
        x = (1.0 - alpha) * w + alpha / d
        a = _sample_batch(x, u[:, t])
        loss = _loss_batch(a, noise[:, t], means, sigmas, kind)
        arms[:, t] = a
        losses[:, t] = loss
        logw = np.log(w)
        logw[rows, a] -= eta * loss / x[rows, a]
    return arms, losses


def simulate_exp3(
    arms_model: Sequence[ArmModel], tables: Tables, eta: float, alpha: float = 0.0, accel: Optional[bool] = None
) -> SimResult:
    means, sigmas, kind = _arm_arrays(arms_model)
    fn = _exp3_loop if (use_numba() if accel is None else accel) else _exp3_numpy
    a, l = fn(means, sigmas, kind, tables.u, tables.noise, float(eta), float(alpha))
    return SimResult(arms=a, losses=l)


# --- Tsallis-INF --------------------------------------------------------------


@njit(cache=True)
def _tsallis_loop(means, sigmas, kind, u, noise, eta, q):
    n, T = u.shape
    d = means.shape[0]
    arms = np.empty((n, T), dtype=np.int64)
    losses = np.empty((n, T))
    worst = np.zeros(n)
    g = np.zeros(d)
    for r in range(n):
        x = np.full(d, 1.0 / d)
        for t in range(T):
            a = _sample(x, u[r, t])
            loss = _loss_of(a, noise[r, t], means, sigmas, kind)
            arms[r, t] = a
            losses[r, t] = loss
            g[:] = 0.0
            g[a] = loss / x[a]
            x, res = _tsallis_solve(x, g, eta, q)
            if res > worst[r]:
                worst[r] = res
    return arms, losses, worst


def _tsallis_solve_batch(x: np.ndarray, g: np.ndarray, eta: float, q: float) -> Tuple[np.ndarray, np.ndarray]:
    n, d = x.shape
    c = (1.0 - q) / q
    p = 1.0 / (q - 1.0)
    a = x ** (q - 1.0) / c + eta * g
    amin = a.min(axis=1)
    lo = 1.0 / c - amin
    hi = d ** (1.0 - q) / c - amin
    beta = lo.copy()
    active = np.ones(n, dtype=bool)
    out = np.empty_like(x)
    res = np.ones(n)
    for _ in range(TSALLIS_MAX_ITER):
        v = c * (a + beta[:, None])
        xi = v**p
        s = xi.sum(axis=1)
        ds = (p * c * xi / v).sum(axis=1)
        r = s - 1.0
        out[active] = xi[active]
        res[active] = np.abs(r[active])
        active &= ~(np.abs(r) <= 1e-13)
        if not active.any():
            break
        lo = np.where(active & (r > 0), beta, lo)
        hi = np.where(active & (r <= 0), beta, hi)
        step = beta - r / ds
        bad = (step <= lo) | (step >= hi)
        step = np.where(bad, 0.5 * (lo + hi), step)
        stalled = step == beta
        active &= ~stalled
        beta = np.where(active, step, beta)
    return out, res


def _tsallis_numpy(means, sigmas, kind, u, noise, eta, q):
    n, T = u.shape
    d = means.shape[0]
    arms = np.empty((n, T), dtype=np.int64)
    losses = np.empty((n, T))
    worst = np.zeros(n)
    x = np.full((n, d), 1.0 / d)
    rows = np.arange(n)
    for t in range(T):
        a = _sample_batch(x, u[:, t])
        loss = _loss_batch(a, noise[:, t], means, sigmas, kind)
        arms[:, t] = a
        losses[:, t] = loss
        g = np.zeros((n, d))
        g[rows, a] = loss / x[rows, a]
        x, res = _tsallis_solve_batch(x, g, eta, q)
        worst = np.maximum(worst, res)
    return arms, losses, worst


def simulate_tsallis(
    arms_model: Sequence[ArmModel], tables: Tables, eta: float, q: float = 0.5, accel: Optional[bool] = None
) -> SimResult:
    means, sigmas, kind = _arm_arrays(arms_model)
    fn = _tsallis_loop if (use_numba() if accel is None else accel) else _tsallis_numpy
    a, l, w = fn(means, sigmas, kind, tables.u, tables.noise, float(eta), float(q))
    return SimResult(arms=a, losses=l, residual=w)


# --- UCB ---------------------------------------------------------------------


@njit(cache=True)
def _ucb_loop(means, sigmas, kind, u, noise, alpha):
    n, T = u.shape
    d = means.shape[0]
    arms = np.empty((n, T), dtype=np.int64)
    losses = np.empty((n, T))
    for r in range(n):
        pulls = np.zeros(d)
        sums = np.zeros(d)
        for t in range(T):
            a = -1
            best = math.inf
            for i in range(d):
                if pulls[i] == 0.0:
                    a = i
                    break
                idx = sums[i] / pulls[i] - math.sqrt(2.0 * alpha * math.log(t + 1) / pulls[i])
                if idx < best:
                    best = idx
                    a = i
            loss = _loss_of(a, noise[r, t], means, sigmas, kind)
            arms[r, t] = a
            losses[r, t] = loss
            pulls[a] += 1.0
            sums[a] += loss
    return arms, losses


def _ucb_numpy(means, sigmas, kind, u, noise, alpha):
    n, T = u.shape
    d = means.shape[0]
    arms = np.empty((n, T), dtype=np.int64)
    losses = np.empty((n, T))
    pulls = np.zeros((n, d))
    sums = np.zeros((n, d))
    rows = np.arange(n)
    for t in range(T):
        with np.errstate(divide="ignore", invalid="ignore"):
            idx = sums / pulls - np.sqrt(2.0 * alpha * math.log(t + 1) / pulls)
        idx = np.where(pulls == 0.0, -np.inf, idx)
        a = np.argmin(idx, axis=1)
        loss = _loss_batch(a, noise[:, t], means, sigmas, kind)
        arms[:, t] = a
        losses[:, t] = loss
        pulls[rows, a] += 1.0
        sums[rows, a] += loss
    return arms, losses


def simulate_ucb(arms_model: Sequence[ArmModel], tables: Tables, alpha: float = 3.0, accel: Optional[bool] = None) -> SimResult:
    UCB(alpha)  # validates alpha
    means, sigmas, kind = _arm_arrays(arms_model)
    fn = _ucb_loop if (use_numba() if accel is None else accel) else _ucb_numpy
    a, l = fn(means, sigmas, kind, tables.u, tables.noise, float(alpha))
    return SimResult(arms=a, losses=l)


# --- ETC ---------------------------------------------------------------------


@njit(cache=True)
def _etc_loop(means, sigmas, kind, u, noise, m):
    n, T = u.shape
    d = means.shape[0]
    arms = np.empty((n, T), dtype=np.int64)
    losses = np.empty((n, T))
    for r in range(n):
        sums = np.zeros(d)
        committed = -1
        for t in range(1, T + 1):
            if t <= d * m:
                a = t % d
            else:
                if committed < 0:
                    committed = 0
                    for i in range(1, d):
                        if sums[i] < sums[committed]:
                            committed = i
                a = committed
            loss = _loss_of(a, noise[r, t - 1], means, sigmas, kind)
            arms[r, t - 1] = a
            losses[r, t - 1] = loss
            sums[a] += loss
    return arms, losses


def _etc_numpy(means, sigmas, kind, u, noise, m):
    n, T = u.shape
    d = means.shape[0]
    arms = np.empty((n, T), dtype=np.int64)
    losses = np.empty((n, T))
    sums = np.zeros((n, d))
    rows = np.arange(n)
    committed = None
    for t in range(1, T + 1):
        if t <= d * m:
            a = np.full(n, t % d)
        else:
            if committed is None:
                # equal pull counts, so comparing sums compares means
                committed = np.argmin(sums, axis=1)
            a = committed
        loss = _loss_batch(a, noise[:, t - 1], means, sigmas, kind)
        arms[:, t - 1] = a
        losses[:, t - 1] = loss
        sums[rows, a] += loss
    return arms, losses


def simulate_etc(arms_model: Sequence[ArmModel], tables: Tables, m: int, accel: Optional[bool] = None) -> SimResult:
    means, sigmas, kind = _arm_arrays(arms_model)
    T = tables.u.shape[1]
    if not 1 <= m <= T // len(arms_model):
        raise ValueError(f"ETC needs 1 <= m <= T/d, got m={m}")
    fn = _etc_loop if (use_numba() if accel is None else accel) else _etc_numpy
    a, l = fn(means, sigmas, kind, tables.u, tables.noise, int(m))
    return SimResult(arms=a, losses=l)
