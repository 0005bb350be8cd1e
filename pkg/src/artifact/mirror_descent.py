"""Exponentiated gradient, p-norm mirror descent and expert sampling."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import GradientLearner, as_vector
from .geometry import pnorm_grad


@dataclass
class EgState:
    x: np.ndarray
    eta: float
    t: int = 1


def eg_state(d: int, eta: float) -> EgState:
    if not eta > 0:
        raise ValueError("eta must be positive")
    return EgState(x=np.full(d, 1.0 / d), eta=float(eta))


def eg_weights(log_w: np.ndarray) -> np.ndarray:
    """Normalized ``exp(log_w)``, shifted by the max for stability."""
    z = log_w - log_w.max()
    w = np.exp(z)
    return w / w.sum()


def eg_step(state: EgState, g) -> EgState:
    """``x_{t+1,j} proportional to x_{t,j} exp(-eta g_j)``."""
    g = as_vector(g, state.x.shape[0])
    if not np.all(np.isfinite(g)):
        raise ValueError("gradient must be finite")
    state.x = eg_weights(np.log(state.x) - state.eta * g)
    state.t += 1
    return state


class EG(GradientLearner):
    def __init__(self, d: int, eta: float):
        super().__init__(d)
        self.state = eg_state(d, eta)

    def _predict(self) -> np.ndarray:
        return self.state.x

    def _update(self, g: np.ndarray) -> None:
        eg_step(self.state, g)


@dataclass
class PNormState:
    x: np.ndarray
    p: float
    eta: float
    t: int = 1

    def __post_init__(self):
        if not 1.0 < self.p <= 2.0:
            raise ValueError(f"p must lie in (1, 2], got {self.p}")

    @property
    def q(self) -> float:
        return self.p / (self.p - 1.0)


def pnorm_step(state: PNormState, g) -> PNormState:
    """Map to the dual, take a gradient step, map back.

    The maps are the gradients of ``0.5||.||_p^2`` and ``0.5||.||_q^2``.
    """
    g = as_vector(g, state.x.shape[0])
    theta = pnorm_grad(state.x, state.p) - state.eta * g
    state.x = pnorm_grad(theta, state.q)
    state.t += 1
    return state


class PNormOMD(GradientLearner):
    def __init__(self, d: int, p: float, eta: float, x1=None):
        super().__init__(d)
        x = np.zeros(d) if x1 is None else as_vector(x1, d)
        self.state = PNormState(x=x, p=float(p), eta=float(eta))

    def _predict(self) -> np.ndarray:
        return self.state.x

    def _update(self, g: np.ndarray) -> None:
        pnorm_step(self.state, g)


def sample_expert(x, rng: Optional[np.random.Generator] = None, u: Optional[float] = None) -> int:
    """Draw index ``i`` with probability ``x_i`` by inverting the CDF at one uniform.

    Pass ``u`` to supply the uniform draw directly.
    """
    x = as_vector(x)
    if not np.all(np.isfinite(x)) or np.any(x < 0):
        raise ValueError("sampling distribution must be finite and nonnegative")
    if u is None:
        if rng is None:
            raise ValueError("need an rng or a uniform draw")
        u = rng.random()
    cdf = np.cumsum(x)
    cdf /= cdf[-1]
    i = int(np.searchsorted(cdf, u, side="right"))
    i = min(i, x.shape[0] - 1)
    # skip zero-mass atoms that rounding could land on
    while x[i] == 0.0 and i > 0:
        i -= 1
    return i
