import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from artifact.core import (
    Absolute,
    DimensionError,
    DomainError,
    GradientLearner,
    Hinge,
    HingePower,
    Linear,
    Logistic,
    LogWealth,
    RegretLedger,
    SquaredDistance,
    best_squared_loss_competitor,
    evaluate,
    play,
    regret,
    rescale,
    subgradient,
)

finite = st.floats(-5.0, 5.0, allow_nan=False)
vec2 = st.lists(finite, min_size=2, max_size=2).map(np.array)
label = st.sampled_from([-1.0, 1.0])


# --- evaluate / subgradient examples ---------------------------------------


def test_evaluate_examples():
    assert evaluate(Absolute(10.0), [10.0]) == 0.0
    assert evaluate(SquaredDistance(1.0), [0.5]) == 0.25
    assert evaluate(Hinge([1.0, 0.0], 1), [0.0, 0.0]) == 1.0


def test_subgradient_examples():
    assert subgradient(Absolute(10.0), [12.0]).tolist() == [1.0]
    assert subgradient(Absolute(10.0), [10.0]).tolist() == [0.0]
    assert subgradient(Hinge([2.0, 0.0], 1), [0.0, 0.0]).tolist() == [-2.0, 0.0]


def test_kink_selection_is_a_subgradient():
    # 0 at the kink of |x - y| satisfies the subgradient inequality on a grid
    zs = np.linspace(-5, 5, 101)
    for y in np.linspace(-3, 3, 13):
        g = subgradient(Absolute(y), [y])[0]
        assert -1.0 <= g <= 1.0
        vals = np.array([evaluate(Absolute(y), [z]) for z in zs])
        assert np.all(vals >= evaluate(Absolute(y), [y]) + g * (zs - y))


def test_hinge_boundary_returns_zero():
    assert subgradient(Hinge([1.0, 1.0], 1), [0.5, 0.5]).tolist() == [0.0, 0.0]


def test_log_wealth_value_and_domain():
    assert math.isclose(evaluate(LogWealth(0.5), [1.0]), -math.log(1.5))
    with pytest.raises(DomainError):
        evaluate(LogWealth(1.0), [-1.0])
    with pytest.raises(DomainError):
        subgradient(LogWealth(-1.0), [2.0])


def test_invalid_specs_rejected():
    with pytest.raises(ValueError):
        Hinge([1.0], 0.5)
    with pytest.raises(ValueError):
        LogWealth(1.5)
    with pytest.raises(ValueError):
        Absolute(1.0, scale=0.0)
    with pytest.raises(ValueError):
        HingePower([1.0], 1, q=0.5)
    with pytest.raises(DimensionError):
        evaluate(Linear([1.0, 2.0]), [1.0])


def test_scale_multiplies_value_and_gradient():
    loss = Logistic([1.0, -2.0], -1)
    x = [0.3, 0.1]
    assert math.isclose(evaluate(rescale(loss, 3.0), x), 3.0 * evaluate(loss, x))
    np.testing.assert_allclose(subgradient(rescale(loss, 3.0), x), 3.0 * subgradient(loss, x))


# --- properties --------------------------------------------------------------


def _losses(z, y, c):
    return [
        Linear(z),
        SquaredDistance(z),
        Hinge(z, y),
        HingePower(z, y, 1.5),
        HingePower(z, y, 2.0),
        Logistic(z, y),
    ]


@given(vec2, vec2, vec2, label)
def test_subgradient_inequality(x, w, z, y):
    for loss in _losses(z, y, 0.0):
        g = subgradient(loss, x)
        assert evaluate(loss, w) >= evaluate(loss, x) + float(g @ (w - x)) - 1e-9 * (1 + abs(evaluate(loss, w)))


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3))
def test_subgradient_inequality_absolute(x, w, y):
    loss = Absolute(y)
    g = subgradient(loss, [x])
    assert evaluate(loss, [w]) >= evaluate(loss, [x]) + g[0] * (w - x) - 1e-9


@given(st.floats(-0.99, 0.99), st.floats(-0.99, 0.99), st.floats(-1, 1))
def test_subgradient_inequality_log_wealth(x, w, c):
    loss = LogWealth(c)
    g = subgradient(loss, [x])
    assert evaluate(loss, [w]) >= evaluate(loss, [x]) + g[0] * (w - x) - 1e-9


def test_gradients_match_finite_differences():
    rng = np.random.default_rng(0)
    h = 1e-6
    for _ in range(100):
        x, z, yv = rng.normal(size=2), rng.normal(size=2), rng.normal(size=2)
        y = rng.choice([-1.0, 1.0])
        for loss in (SquaredDistance(yv), Logistic(z, y)):
            g = subgradient(loss, x)
            fd = np.array([(evaluate(loss, x + h * e) - evaluate(loss, x - h * e)) / (2 * h) for e in np.eye(2)])
            np.testing.assert_allclose(g, fd, rtol=1e-5, atol=1e-7)


# --- regret ------------------------------------------------------------------


def _ledger(losses, xs):
    led = RegretLedger()
    for loss, x in zip(losses, xs):
        led.append(loss, x)
    return led


def test_regret_examples():
    assert regret(_ledger([Absolute(5.0)], [[5.0]]), [5.0]) == 0.0
    led = _ledger([SquaredDistance(y) for y in (0.2, 0.4, 0.6)], [[0.0], [0.2], [0.3]])
    assert math.isclose(regret(led, [0.4]), 0.09, rel_tol=1e-12)
    assert regret(_ledger([Linear([1.0]), Linear([-1.0])], [[0.5], [0.5]]), [0.0]) == 0.0
    assert regret(RegretLedger(), [0.0]) == 0.0


def test_best_squared_loss_competitor():
    assert math.isclose(best_squared_loss_competitor([0.2, 0.4, 0.6]), 0.4)
    assert best_squared_loss_competitor([1.0]) == 1.0
    assert best_squared_loss_competitor([0.0, 1.0]) == 0.5
    with pytest.raises(ValueError):
        best_squared_loss_competitor([])


@given(st.lists(st.floats(0, 1), min_size=1, max_size=30), st.integers(-6, 6), st.floats(0.01, 100))
def test_regret_scales_with_loss_scale(ys, k, c):
    xs = [[y * 0.5] for y in ys]
    base = _ledger([SquaredDistance(y) for y in ys], xs)
    # powers of two scale every term exactly, so the sum scales exactly
    p2 = _ledger([SquaredDistance(y, 2.0**k) for y in ys], xs)
    assert regret(p2, [0.3]) == 2.0**k * regret(base, [0.3])
    cc = _ledger([SquaredDistance(y, c) for y in ys], xs)
    assert math.isclose(regret(cc, [0.3]), c * regret(base, [0.3]), rel_tol=1e-12, abs_tol=1e-12)


class _Echo(GradientLearner):
    def __init__(self):
        super().__init__(1)
        self.x = np.zeros(1)

    def _predict(self):
        return self.x

    def _update(self, g):
        self.x = self.x - 0.1 * g


def test_play_ledger_is_consistent():
    led = play(_Echo(), [SquaredDistance(y) for y in np.linspace(0, 1, 50)])
    assert len(led) == 50
    led.check()
    assert led.regret_curve([0.5]).shape == (50,)


def test_learner_contract_order():
    L = _Echo()
    with pytest.raises(RuntimeError):
        L.observe([1.0])
    L.predict()
    with pytest.raises(RuntimeError):
        L.predict()
    with pytest.raises(ValueError):
        L.observe([math.inf])
