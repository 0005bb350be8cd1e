"""Projected online subgradient descent and diagonal AdaGrad on boxes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .core import GradientLearner, as_vector
from .geometry import Box, FeasibleSet, project

_SQRT2_HALF = math.sqrt(2.0) / 2.0


@dataclass(frozen=True)
class Constant:
    eta: float

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError("eta must be positive")


@dataclass(frozen=True)
class Decaying:
    """``eta_t = D / (L sqrt(t))``."""

    D: float
    L: float

    def __post_init__(self):
        if not (self.D > 0 and self.L > 0):
            raise ValueError("D and L must be positive")


@dataclass(frozen=True)
class AdaptiveGlobal:
    """``eta_t = sqrt(2) D / (2 sqrt(sum_{i<=t} ||g_i||^2))``, current gradient included."""

    D: float

    def __post_init__(self):
        if not self.D > 0:
            raise ValueError("D must be positive")


@dataclass(frozen=True)
class StronglyConvex:
    """``eta_t = 1 / sum_{i<=t} mu_i``; ``mu`` is a constant or a function of t."""

    mu: Union[float, Callable[[int], float]]

    def mu_at(self, t: int) -> float:
        m = self.mu(t) if callable(self.mu) else self.mu
        if not m > 0:
            raise ValueError("strong convexity parameters must be positive")
        return float(m)


StepsizePolicy = Union[Constant, Decaying, AdaptiveGlobal, StronglyConvex]


@dataclass
class OsdState:
    x: np.ndarray
    set: FeasibleSet
    policy: StepsizePolicy
    grad_sq_sum: float = 0.0
    mu_sum: float = 0.0
    t: int = 1


def osd_state(feasible: FeasibleSet, policy: StepsizePolicy, x1=None) -> OsdState:
    x = np.zeros(feasible.dim) if x1 is None else as_vector(x1, feasible.dim)
    return OsdState(x=project(feasible, x), set=feasible, policy=policy)


def osd_step(state: OsdState, g) -> OsdState:
    """One step ``x <- Proj(x - eta_t g)``; updates ``state`` in place and returns it."""
    g = as_vector(g, state.x.shape[0])
    if not np.all(np.isfinite(g)):
        raise ValueError("gradient must be finite")
    t = state.t
    pol = state.policy
    gsq = float(g @ g)
    state.grad_sq_sum += gsq
    step: Optional[np.ndarray]
    if isinstance(pol, Constant):
        step = pol.eta * g
    elif isinstance(pol, Decaying):
        step = (pol.D / (pol.L * math.sqrt(t))) * g
    elif isinstance(pol, AdaptiveGlobal):
        # no move while every gradient so far is zero
        step = None if state.grad_sq_sum == 0.0 else (_SQRT2_HALF * pol.D / math.sqrt(state.grad_sq_sum)) * g
    elif isinstance(pol, StronglyConvex):
        state.mu_sum += pol.mu_at(t)
        step = g / state.mu_sum
    else:
        raise TypeError(f"unknown stepsize policy {type(pol).__name__}")
    if step is not None and gsq > 0.0:
        state.x = project(state.set, state.x - step)
    state.t = t + 1
    return state


class OSD(GradientLearner):
    """Online subgradient descent as a learner."""

    def __init__(self, feasible: FeasibleSet, policy: StepsizePolicy, x1=None):
        super().__init__(feasible.dim)
        self.state = osd_state(feasible, policy, x1)

    def _predict(self) -> np.ndarray:
        return self.state.x

    def _update(self, g: np.ndarray) -> None:
        osd_step(self.state, g)


@dataclass
class AdaGradState:
    """Per-coordinate gradient history kept relative to a reference magnitude.

    ``ref[i]`` is the largest ``|g_i|`` seen and ``norm_sq[i]`` is
    ``sum_j (g_{j,i} / ref[i])^2``, so every stored ratio is at most one.
    """

    x: np.ndarray
    box: Box
    ref: np.ndarray = field(default=None)
    norm_sq: np.ndarray = field(default=None)
    t: int = 1

    def __post_init__(self):
        if self.ref is None:
            self.ref = np.zeros_like(self.x)
        if self.norm_sq is None:
            self.norm_sq = np.zeros_like(self.x)

    @property
    def per_coord_sq(self) -> np.ndarray:
        """``sum_j g_{j,i}^2`` per coordinate."""
        return self.ref * self.ref * self.norm_sq


def adagrad_state(box: Box, x1=None) -> AdaGradState:
    x = np.clip(np.zeros(box.dim), box.lo, box.hi) if x1 is None else as_vector(x1, box.dim)
    return AdaGradState(x=project(box, x), box=box)


def adagrad_step(state: AdaGradState, g) -> AdaGradState:
    """Per-coordinate step ``eta_{t,i} = sqrt(2) D_i / (2 sqrt(sum_j g_{j,i}^2))``.

    The move ``eta_{t,i} g_{t,i}`` only depends on the ratios ``g_{j,i} / ref_i``.
    A correctly rounded quotient is unchanged when both operands are scaled
    by the same ``c``, so the iterates are bit-identical under per-coordinate
    scaling whenever the scaled gradients are exactly representable.
    """
    g = as_vector(g, state.x.shape[0])
    if not np.all(np.isfinite(g)):
        raise ValueError("gradient must be finite")
    moving = g != 0
    if np.any(moving):
        grown = np.abs(g) > state.ref
        if np.any(grown):
            # re-express the history relative to the new maximum
            r = np.ones_like(g)
            r[grown] = state.ref[grown] / np.abs(g[grown])
            state.norm_sq = state.norm_sq * (r * r)
            state.ref = np.where(grown, np.abs(g), state.ref)
        q = np.zeros_like(g)
        q[moving] = g[moving] / state.ref[moving]
        state.norm_sq = state.norm_sq + q * q
        ratio = np.zeros_like(g)
        ratio[moving] = q[moving] / np.sqrt(state.norm_sq[moving])
        step = ratio * (_SQRT2_HALF * state.box.widths)
        state.x = np.minimum(np.maximum(state.x - step, state.box.lo), state.box.hi)
    state.t += 1
    return state


class AdaGrad(GradientLearner):
    def __init__(self, box: Box, x1=None):
        super().__init__(box.dim)
        self.state = adagrad_state(box, x1)

    def _predict(self) -> np.ndarray:
        return self.state.x

    def _update(self, g: np.ndarray) -> None:
        adagrad_step(self.state, g)

