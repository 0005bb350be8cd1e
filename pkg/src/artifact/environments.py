"""Seeded loss-sequence generators and the online-to-batch conversion.

Random environments draw round ``t`` from a generator keyed on ``(seed, t)``,
so any round can be regenerated on its own and a stream is a pure function of
its seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional, Sequence, Union

import numpy as np

from .bandit import Bernoulli, arm_loss
from .core import Learner, Linear, LossSpec, SquaredDistance, as_vector, rescale

_SEED_MASK = (1 << 64) - 1


def round_rng(seed: int, t: int, *keys: int) -> np.random.Generator:
    """Generator for round ``t`` of the stream with 64-bit ``seed``."""
    ss = np.random.SeedSequence(entropy=int(seed) & _SEED_MASK, spawn_key=(int(t),) + tuple(int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class GuessingGame:
    """Squared losses ``(x - y_t)^2`` against a fixed sequence in [0, 1]."""

    ys: tuple

    def __post_init__(self):
        ys = tuple(float(y) for y in self.ys)
        if any(not 0.0 <= y <= 1.0 for y in ys):
            raise ValueError("guessing-game targets must lie in [0, 1]")
        object.__setattr__(self, "ys", ys)

    @classmethod
    def random(cls, T: int, seed: int) -> "GuessingGame":
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed) & _SEED_MASK)))
        return cls(tuple(rng.random(T)))


@dataclass(frozen=True)
class FtlFailure:
    """Linear losses ``-0.5, 1, -1, 1, -1, ...`` on [-1, 1]."""


@dataclass(frozen=True)
class RademacherOlo:
    """Linear losses ``L eps_t z`` with Rademacher signs.

    The two competitors ``v, w = +-(D/2) z`` sit at distance ``D``.
    """

    L: float
    D: float
    z: np.ndarray
    seed: int = 0

    def __post_init__(self):
        z = as_vector(self.z)
        n = float(np.linalg.norm(z))
        if not n > 0:
            raise ValueError("direction must be nonzero")
        object.__setattr__(self, "z", z / n)

    @property
    def competitors(self) -> tuple:
        return (0.5 * self.D * self.z, -0.5 * self.D * self.z)


@dataclass(frozen=True)
class IidLinear:
    """Linear losses with i.i.d. Gaussian vectors ``mean + sigma N(0, I)``."""

    mean: np.ndarray
    sigma: float = 1.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "mean", as_vector(self.mean))
        if not self.sigma >= 0:
            raise ValueError("sigma must be nonnegative")


@dataclass(frozen=True)
class AdversarialLinear:
    """Oblivious piecewise-drifting linear losses.

    Rounds come in blocks of ``block``; each block draws a preferred
    direction, and each round adds noise and a random magnitude.  ``norm``
    selects the bound: ``l2`` gives ``||g||_2 <= L``, ``linf`` gives
    ``||g||_inf <= L`` and ``unit`` gives expert losses in ``[0, L]``.
    """

    d: int
    norm: str = "l2"
    L: float = 1.0
    block: int = 64
    seed: int = 0

    def __post_init__(self):
        if self.norm not in ("l2", "linf", "unit"):
            raise ValueError(f"unknown norm {self.norm!r}")
        if self.d < 1 or self.block < 1 or not self.L > 0:
            raise ValueError("need d >= 1, block >= 1 and L > 0")


def _adversarial_vector(env: AdversarialLinear, t: int) -> np.ndarray:
    k = (t - 1) // env.block
    brng = round_rng(env.seed, k, 1)
    rng = round_rng(env.seed, t, 0)
    drift = brng.uniform(-1.0, 1.0, env.d)
    sign = 1.0 if rng.random() < brng.uniform(0.2, 0.95) else -1.0
    v = sign * drift + 0.5 * rng.uniform(-1.0, 1.0, env.d)
    mag = rng.uniform(0.25, 1.0)
    if env.norm == "l2":
        n = float(np.linalg.norm(v))
        return np.zeros(env.d) if n == 0.0 else env.L * mag * v / n
    v = np.clip(v, -1.0, 1.0)
    if env.norm == "linf":
        return env.L * mag * v
    return env.L * mag * (v + 1.0) / 2.0


@dataclass(frozen=True)
class StochasticArms:
    """Full loss vector of a stochastic bandit instance; bandit play reveals one coordinate."""

    arms: tuple
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "arms", tuple(self.arms))
        if len(self.arms) < 1:
            raise ValueError("need at least one arm")

    @property
    def means(self) -> np.ndarray:
        return np.array([a.mean for a in self.arms])


@dataclass(frozen=True)
class FixedConvex:
    """The same loss every round."""

    loss: LossSpec


Environment = Union[GuessingGame, FtlFailure, RademacherOlo, IidLinear, AdversarialLinear, StochasticArms, FixedConvex]


def next_loss(env: Environment, t: int) -> LossSpec:
    """Loss of round ``t >= 1``."""
    if t < 1:
        raise ValueError("rounds start at 1")
    if isinstance(env, GuessingGame):
        if t > len(env.ys):
            raise IndexError(f"sequence has only {len(env.ys)} rounds")
        return SquaredDistance(env.ys[t - 1])
    if isinstance(env, FtlFailure):
        if t == 1:
            return Linear([-0.5])
        return Linear([1.0 if t % 2 == 0 else -1.0])
    if isinstance(env, RademacherOlo):
        eps = 1.0 if round_rng(env.seed, t).random() < 0.5 else -1.0
        return Linear(env.L * eps * env.z)
    if isinstance(env, IidLinear):
        rng = round_rng(env.seed, t)
        return Linear(env.mean + env.sigma * rng.standard_normal(env.mean.shape[0]))
    if isinstance(env, AdversarialLinear):
        return Linear(_adversarial_vector(env, t))
    if isinstance(env, StochasticArms):
        rng = round_rng(env.seed, t)
        draws = [rng.random() if isinstance(a, Bernoulli) else rng.standard_normal() for a in env.arms]
        return Linear([arm_loss(a, u) for a, u in zip(env.arms, draws)])
    if isinstance(env, FixedConvex):
        return env.loss
    raise TypeError(f"unknown environment {type(env).__name__}")


def stream(env: Environment, T: int) -> Iterator[LossSpec]:
    for t in range(1, T + 1):
        yield next_loss(env, t)


# ---------------------------------------------------------------------------
# Online-to-batch
# ---------------------------------------------------------------------------


@dataclass
class BatchConversionResult:
    x_bar: np.ndarray
    weights: np.ndarray
    objective: Optional[float] = None
    iterates: np.ndarray = field(default=None, repr=False)


WeightSpec = Union[str, Sequence[float], np.ndarray]


def conversion_weights(spec: WeightSpec, T: int) -> np.ndarray:
    """``uniform`` (1), ``inv_sqrt`` (1/sqrt t), ``linear`` (t), or explicit positive weights."""
    t = np.arange(1, T + 1, dtype=float)
    if isinstance(spec, str):
        table = {"uniform": np.ones(T), "inv_sqrt": 1.0 / np.sqrt(t), "linear": t}
        if spec not in table:
            raise ValueError(f"unknown weighting {spec!r}")
        return table[spec]
    w = np.asarray(spec, dtype=float)
    if w.shape != (T,):
        raise ValueError(f"need {T} weights, got shape {w.shape}")
    if not np.all(w > 0):
        raise ValueError("weights must be positive")
    return w


def online_to_batch(
    learner: Learner,
    sampler: Callable[[int], LossSpec],
    T: int,
    weights: WeightSpec = "uniform",
    objective: Optional[Callable[[np.ndarray], float]] = None,
) -> BatchConversionResult:
    """Feed ``alpha_t f(., xi_t)`` to ``learner`` and average its predictions with weights ``alpha``.

    ``sampler(t)`` returns the stochastic loss of round ``t``.
    """
    if T < 1:
        raise ValueError("T must be at least 1")
    alpha = conversion_weights(weights, T)
    xs = []
    for t in range(1, T + 1):
        x = learner.predict()
        xs.append(np.array(x, dtype=float))
        learner.observe(rescale(sampler(t), alpha[t - 1]))
    xs = np.array(xs)
    x_bar = (alpha[:, None] * xs).sum(axis=0) / alpha.sum()
    val = None if objective is None else float(objective(x_bar))
    return BatchConversionResult(x_bar=x_bar, weights=alpha, objective=val, iterates=xs)


def rademacher_regret_floor(L: float, D: float, T: int) -> float:
    """``(sqrt 2 / 4) L D sqrt T``, the asymptotic lower bound on expected regret."""
    return math.sqrt(2.0) / 4.0 * L * D * math.sqrt(T)
