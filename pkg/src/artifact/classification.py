"""Online linear classification: Perceptron and a randomized FTRL classifier."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .core import as_vector


def _label(y) -> int:
    if y not in (-1, 1):
        raise ValueError(f"label must be -1 or +1, got {y}")
    return int(y)


@dataclass
class PerceptronState:
    x: np.ndarray
    mistakes: int = 0
    eta: float = 1.0
    t: int = 1


def perceptron_state(d: int, eta: float = 1.0) -> PerceptronState:
    if not eta > 0:
        raise ValueError("eta must be positive")
    return PerceptronState(x=np.zeros(d), eta=float(eta))


def perceptron_predict(x: np.ndarray, z: np.ndarray) -> int:
    # ties go to +1
    return 1 if float(z @ x) >= 0.0 else -1


def perceptron_step(state: PerceptronState, z, y) -> Tuple[int, PerceptronState]:
    z = as_vector(z, state.x.shape[0])
    if not np.all(np.isfinite(z)):
        raise ValueError("features must be finite")
    y = _label(y)
    pred = perceptron_predict(state.x, z)
    if pred != y:
        state.x = state.x + state.eta * y * z
        state.mistakes += 1
    state.t += 1
    return pred, state


def perceptron_bound(L1: float, R: float, u_norm: float) -> float:
    """Mistake bound against a competitor with cumulative hinge loss ``L1``."""
    a = R * u_norm
    return L1 + a * a / 2.0 + a * math.sqrt(a * a / 4.0 + L1)


@dataclass
class RandClassifierState:
    theta: np.ndarray
    R: float
    t: int = 1

    def __post_init__(self):
        if not self.R > 0:
            raise ValueError("R must be positive")


def rand_classifier_state(d: int, R: float) -> RandClassifierState:
    return RandClassifierState(theta=np.zeros(d), R=float(R))


def rand_classifier_point(state: RandClassifierState) -> np.ndarray:
    """``eta_t theta_t`` pulled back into the ball of radius ``1/R``."""
    eta = math.sqrt(2.0) / math.sqrt(state.t)
    n = float(np.linalg.norm(state.theta))
    if n == 0.0:
        return np.zeros_like(state.theta)
    return eta * state.theta * min(1.0 / (state.R * eta * n), 1.0)


def rand_classifier_prob(state: RandClassifierState, z) -> float:
    """Probability of predicting +1 on ``z``."""
    z = as_vector(z, state.theta.shape[0])
    m = float(z @ rand_classifier_point(state))
    return min(max((m + 1.0) / 2.0, 0.0), 1.0)


def rand_classifier_step(
    state: RandClassifierState,
    z,
    y,
    rng: Optional[np.random.Generator] = None,
    u: Optional[float] = None,
) -> Tuple[int, RandClassifierState]:
    """Predict, then update on the surrogate ``|<z, x> - y| / 2``.

    ``u`` is an optional uniform draw in place of ``rng``.
    """
    z = as_vector(z, state.theta.shape[0])
    y = _label(y)
    if float(np.linalg.norm(z)) > state.R * (1.0 + 1e-12):
        raise ValueError(f"||z|| exceeds R = {state.R}")
    x = rand_classifier_point(state)
    m = float(z @ x)
    p = min(max((m + 1.0) / 2.0, 0.0), 1.0)
    if u is None:
        if rng is None:
            raise ValueError("need an rng or a uniform draw")
        u = rng.random()
    pred = 1 if u < p else -1
    s = float(np.sign(m - y))  # sign(0) = 0
    # theta accumulates negative surrogate subgradients
    state.theta = state.theta - 0.5 * s * z
    state.t += 1
    return pred, state
