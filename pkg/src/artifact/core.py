"""Loss family, round records, regret accounting and the learner contract."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Protocol, Sequence, Union, runtime_checkable

import numpy as np


class DimensionError(ValueError):
    """Vector sizes disagree."""


class DomainError(ValueError):
    """Argument outside the domain of a function."""


def as_vector(x, dim: Optional[int] = None) -> np.ndarray:
    """Return ``x`` as a 1-d float array, checking its length if ``dim`` is given."""
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if v.ndim != 1:
        raise DimensionError(f"expected a vector, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise DimensionError(f"expected dimension {dim}, got {v.shape[0]}")
    return v


def _check_scale(scale: float) -> float:
    scale = float(scale)
    if not (scale > 0 and math.isfinite(scale)):
        raise ValueError(f"loss scale must be positive and finite, got {scale}")
    return scale


def _check_label(y) -> float:
    y = float(y)
    if y not in (-1.0, 1.0):
        raise ValueError(f"label must be -1 or +1, got {y}")
    return y


# ---------------------------------------------------------------------------
# Loss kinds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Linear:
    g: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "g", as_vector(self.g))
        object.__setattr__(self, "scale", _check_scale(self.scale))

    @property
    def dim(self) -> int:
        return self.g.shape[0]


@dataclass(frozen=True)
class SquaredDistance:
    """``||x - y||^2``; a scalar ``y`` is broadcast."""

    y: Union[float, np.ndarray]
    scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "y", as_vector(self.y))
        object.__setattr__(self, "scale", _check_scale(self.scale))

    @property
    def dim(self) -> Optional[int]:
        return None if self.y.shape[0] == 1 else self.y.shape[0]


@dataclass(frozen=True)
class Absolute:
    """``|x - y|`` in one dimension."""

    y: float
    scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "scale", _check_scale(self.scale))

    @property
    def dim(self) -> int:
        return 1


@dataclass(frozen=True)
class Hinge:
    z: np.ndarray
    y: float
    scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "z", as_vector(self.z))
        object.__setattr__(self, "y", _check_label(self.y))
        object.__setattr__(self, "scale", _check_scale(self.scale))

    @property
    def dim(self) -> int:
        return self.z.shape[0]


@dataclass(frozen=True)
class HingePower:
    z: np.ndarray
    y: float
    q: float
    scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "z", as_vector(self.z))
        object.__setattr__(self, "y", _check_label(self.y))
        if not float(self.q) >= 1.0:
            raise ValueError(f"hinge power q must be >= 1, got {self.q}")
        object.__setattr__(self, "q", float(self.q))
        object.__setattr__(self, "scale", _check_scale(self.scale))

    @property
    def dim(self) -> int:
        return self.z.shape[0]


@dataclass(frozen=True)
class Logistic:
    z: np.ndarray
    y: float
    scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "z", as_vector(self.z))
        object.__setattr__(self, "y", _check_label(self.y))
        object.__setattr__(self, "scale", _check_scale(self.scale))

    @property
    def dim(self) -> int:
        return self.z.shape[0]


@dataclass(frozen=True)
class LogWealth:
    """``-ln(1 + c x)`` in one dimension, the coin-betting log loss."""

    c: float
    scale: float = 1.0

    def __post_init__(self):
        c = float(self.c)
        if not -1.0 <= c <= 1.0:
            raise ValueError(f"coin must lie in [-1, 1], got {c}")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "scale", _check_scale(self.scale))

    @property
    def dim(self) -> int:
        return 1


LossSpec = Union[Linear, SquaredDistance, Absolute, Hinge, HingePower, Logistic, LogWealth]
LOSS_KINDS = (Linear, SquaredDistance, Absolute, Hinge, HingePower, Logistic, LogWealth)


def rescale(loss: LossSpec, factor: float) -> LossSpec:
    """Copy of ``loss`` with its scale multiplied by ``factor``."""
    return replace(loss, scale=loss.scale * float(factor))


def _point(loss: LossSpec, x) -> np.ndarray:
    x = as_vector(x)
    dim = loss.dim
    if dim is not None and x.shape[0] != dim:
        raise DimensionError(f"loss has dimension {dim}, point has {x.shape[0]}")
    if not np.all(np.isfinite(x)):
        raise ValueError("point must be finite")
    return x


def _softplus(m: float) -> float:
    # ln(1 + exp(m)) without overflow
    if m > 0:
        return m + math.log1p(math.exp(-m))
    return math.log1p(math.exp(m))


def _sigmoid(m: float) -> float:
    if m >= 0:
        return 1.0 / (1.0 + math.exp(-m))
    e = math.exp(m)
    return e / (1.0 + e)


def evaluate(loss: LossSpec, x) -> float:
    """Value of ``loss`` at ``x`` (scale included)."""
    x = _point(loss, x)
    if isinstance(loss, Linear):
        base = float(loss.g @ x)
    elif isinstance(loss, SquaredDistance):
        diff = x - loss.y
        base = float(diff @ diff)
    elif isinstance(loss, Absolute):
        base = abs(x[0] - loss.y)
    elif isinstance(loss, Hinge):
        base = max(1.0 - loss.y * float(loss.z @ x), 0.0)
    elif isinstance(loss, HingePower):
        base = max(1.0 - loss.y * float(loss.z @ x), 0.0) ** loss.q
    elif isinstance(loss, Logistic):
        base = _softplus(-loss.y * float(loss.z @ x))
    elif isinstance(loss, LogWealth):
        arg = 1.0 + loss.c * x[0]
        if arg <= 0:
            raise DomainError(f"1 + c*x = {arg} is not positive")
        base = -math.log(arg)
    else:
        raise TypeError(f"unknown loss kind {type(loss).__name__}")
    return loss.scale * base


def subgradient(loss: LossSpec, x) -> np.ndarray:
    """One element of the subdifferential of ``loss`` at ``x``.

    Kinks resolve to zero: ``Absolute`` at ``x == y`` and the hinge kinds at
    ``1 - y<z, x> == 0`` both return the zero vector.
    """
    x = _point(loss, x)
    if isinstance(loss, Linear):
        g = loss.g.copy()
    elif isinstance(loss, SquaredDistance):
        g = 2.0 * (x - loss.y)
    elif isinstance(loss, Absolute):
        g = np.array([float(np.sign(x[0] - loss.y))])
    elif isinstance(loss, Hinge):
        margin = 1.0 - loss.y * float(loss.z @ x)
        g = -loss.y * loss.z if margin > 0 else np.zeros_like(loss.z)
    elif isinstance(loss, HingePower):
        margin = 1.0 - loss.y * float(loss.z @ x)
        if margin > 0:
            g = -loss.q * margin ** (loss.q - 1.0) * loss.y * loss.z
        else:
            g = np.zeros_like(loss.z)
    elif isinstance(loss, Logistic):
        m = -loss.y * float(loss.z @ x)
        g = -loss.y * _sigmoid(m) * loss.z
    elif isinstance(loss, LogWealth):
        arg = 1.0 + loss.c * x[0]
        if arg <= 0:
            raise DomainError(f"1 + c*x = {arg} is not positive")
        g = np.array([-loss.c / arg])
    else:
        raise TypeError(f"unknown loss kind {type(loss).__name__}")
    return loss.scale * g


# ---------------------------------------------------------------------------
# Records and regret
# ---------------------------------------------------------------------------


@dataclass
class RoundRecord:
    t: int
    x: np.ndarray
    loss_value: float
    g: np.ndarray
    aux: Optional[float] = None


@dataclass
class RegretLedger:
    records: list = field(default_factory=list)
    losses: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def append(self, loss: LossSpec, x, g=None, aux: Optional[float] = None) -> RoundRecord:
        x = as_vector(x).copy()
        value = evaluate(loss, x)
        g = subgradient(loss, x) if g is None else as_vector(g).copy()
        t = len(self.records) + 1
        rec = RoundRecord(t=t, x=x, loss_value=value, g=g, aux=aux)
        self.records.append(rec)
        self.losses.append(loss)
        return rec

    def learner_losses(self) -> np.ndarray:
        return np.array([r.loss_value for r in self.records], dtype=float)

    def competitor_losses(self, u) -> np.ndarray:
        return np.array([evaluate(loss, u) for loss in self.losses], dtype=float)

    def regret_curve(self, u) -> np.ndarray:
        """Prefix regrets ``R_1, ..., R_T`` against the fixed competitor ``u``."""
        return np.cumsum(self.learner_losses() - self.competitor_losses(u))

    def check(self, rtol: float = 1e-9) -> None:
        """Raise if the ledger invariants are broken."""
        if len(self.records) != len(self.losses):
            raise AssertionError("records and losses differ in length")
        last = 0
        for rec, loss in zip(self.records, self.losses):
            if rec.t <= last:
                raise AssertionError("round indices must increase")
            last = rec.t
            if not (np.all(np.isfinite(rec.x)) and np.all(np.isfinite(rec.g)) and math.isfinite(rec.loss_value)):
                raise AssertionError(f"non-finite entry at round {rec.t}")
            ref = evaluate(loss, rec.x)
            if not math.isclose(ref, rec.loss_value, rel_tol=rtol, abs_tol=rtol):
                raise AssertionError(f"loss mismatch at round {rec.t}: {rec.loss_value} vs {ref}")


def regret(ledger: RegretLedger, u) -> float:
    """``sum_t l_t(x_t) - sum_t l_t(u)``; zero for an empty ledger."""
    if len(ledger) == 0:
        return 0.0
    return float(ledger.learner_losses().sum() - ledger.competitor_losses(u).sum())


def best_squared_loss_competitor(ys: Sequence[float]) -> float:
    ys = np.asarray(list(ys), dtype=float)
    if ys.size == 0:
        raise ValueError("empty sequence")
    return float(ys.mean())


# ---------------------------------------------------------------------------
# Learner contract
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BanditFeedback:
    """Loss of a single pulled arm."""

    arm: int
    loss: float


Feedback = Union[LossSpec, np.ndarray, BanditFeedback]


@runtime_checkable
class Learner(Protocol):
    def predict(self) -> np.ndarray: ...

    def observe(self, feedback) -> None: ...


class GradientLearner:
    """Base class for learners that only need a subgradient at their last prediction.

    Subclasses implement ``_predict`` and ``_update(g)``.  ``observe`` accepts a
    loss (differentiated at the last prediction) or a raw gradient vector.
    """

    def __init__(self, dim: int):
        self.dim = int(dim)
        self._last_x: Optional[np.ndarray] = None

    def predict(self) -> np.ndarray:
        if self._last_x is not None:
            raise RuntimeError("predict called twice without observe")
        x = np.array(self._predict(), dtype=float)
        self._last_x = x
        return x.copy()

    def observe(self, feedback) -> None:
        if self._last_x is None:
            raise RuntimeError("observe called before predict")
        if isinstance(feedback, LOSS_KINDS):
            g = subgradient(feedback, self._last_x)
        else:
            g = as_vector(feedback, self.dim)
        if not np.all(np.isfinite(g)):
            raise ValueError("gradient must be finite")
        self._last_x = None
        self._update(g)

    def _predict(self) -> np.ndarray:
        raise NotImplementedError

    def _update(self, g: np.ndarray) -> None:
        raise NotImplementedError


def play(learner: Learner, losses: Iterable[LossSpec], T: Optional[int] = None) -> RegretLedger:
    """Run a full-information game and return its ledger."""
    ledger = RegretLedger()
    for t, loss in enumerate(losses, start=1):
        if T is not None and t > T:
            break
        x = learner.predict()
        ledger.append(loss, x)
        learner.observe(loss)
    return ledger
