import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from artifact.classification import (
    RandClassifierState,
    perceptron_bound,
    perceptron_state,
    perceptron_step,
    rand_classifier_point,
    rand_classifier_prob,
    rand_classifier_state,
    rand_classifier_step,
)
from oracles import hinge_grid_competitor

# --- Perceptron -------------------------------------------------------------------------


def test_perceptron_examples():
    s = perceptron_state(2)
    pred, _ = perceptron_step(s, [1.0, 0.0], 1)
    assert pred == 1 and s.mistakes == 0
    np.testing.assert_array_equal(s.x, [0.0, 0.0])
    pred, _ = perceptron_step(s, [1.0, 0.0], -1)
    assert pred == 1 and s.mistakes == 1
    np.testing.assert_array_equal(s.x, [-1.0, 0.0])


def test_perceptron_rejects_bad_input():
    with pytest.raises(ValueError):
        perceptron_step(perceptron_state(2), [1.0, 0.0], 0)
    with pytest.raises(ValueError):
        perceptron_step(perceptron_state(2), [math.nan, 0.0], 1)
    with pytest.raises(ValueError):
        perceptron_state(2, eta=0.0)


def _separable(rng, n, gamma):
    # unit-norm direction w; keep points with margin >= gamma
    w = np.array([math.cos(0.7), math.sin(0.7)])
    Z = []
    while len(Z) < n:
        z = rng.uniform(-1, 1, 2)
        if np.linalg.norm(z) <= 1.0 and abs(z @ w) >= gamma:
            Z.append(z)
    Z = np.array(Z)
    return Z, np.where(Z @ w > 0, 1, -1)


def test_perceptron_margin_bound_when_cycling():
    rng = np.random.default_rng(0)
    gamma = 0.1
    Z, y = _separable(rng, 200, gamma)
    s = perceptron_state(2)
    for _ in range(50):
        for z, lab in zip(Z, y):
            perceptron_step(s, z, lab)
    assert s.mistakes <= 1.0 / gamma**2
    # converged: one more pass makes no mistake
    before = s.mistakes
    for z, lab in zip(Z, y):
        perceptron_step(s, z, lab)
    assert s.mistakes == before


@given(st.floats(1e-3, 1e3), st.integers(0, 2**31 - 1))
def test_perceptron_eta_does_not_change_predictions(eta, seed):
    rng = np.random.default_rng(seed)
    Z = rng.normal(size=(60, 3))
    y = rng.choice([-1, 1], 60)
    a, b = perceptron_state(3), perceptron_state(3, eta)
    for z, lab in zip(Z, y):
        pa, _ = perceptron_step(a, z, lab)
        pb, _ = perceptron_step(b, z, lab)
        assert pa == pb
    assert a.mistakes == b.mistakes


@pytest.mark.parametrize("seed", range(5))
def test_perceptron_hinge_bound_with_grid_competitor(seed):
    rng = np.random.default_rng(seed)
    T = 300
    Z = rng.normal(size=(T, 2))
    Z /= np.maximum(1.0, np.linalg.norm(Z, axis=1, keepdims=True))
    w = np.array([1.0, -0.5])
    y = np.where(Z @ w + 0.3 * rng.normal(size=T) > 0, 1, -1)
    s = perceptron_state(2)
    for z, lab in zip(Z, y):
        perceptron_step(s, z, lab)
    R = float(np.max(np.linalg.norm(Z, axis=1)))
    U, L1 = hinge_grid_competitor(Z, y.astype(float), radius=8.0, step=0.1)
    bounds = np.array([perceptron_bound(l1, R, float(np.linalg.norm(u))) for u, l1 in zip(U, L1)])
    assert s.mistakes <= bounds.min()


def test_perceptron_bound_closed_form():
    assert perceptron_bound(0.0, 1.0, 3.0) == 9.0
    assert math.isclose(perceptron_bound(4.0, 1.0, 2.0), 4.0 + 2.0 + 2.0 * math.sqrt(5.0))


# --- randomized classifier --------------------------------------------------------------


def test_rand_classifier_examples():
    s = rand_classifier_state(2, 1.0)
    np.testing.assert_array_equal(rand_classifier_point(s), [0.0, 0.0])
    assert rand_classifier_prob(s, [1.0, 0.0]) == 0.5
    # theta chosen so that the point is exactly [1, 0]
    s = RandClassifierState(theta=np.array([1.0, 0.0]), R=1.0, t=2)
    np.testing.assert_allclose(rand_classifier_point(s), [1.0, 0.0])
    assert rand_classifier_prob(s, [1.0, 0.0]) == 1.0
    for u in np.linspace(0, 0.999, 20):
        pred, _ = rand_classifier_step(RandClassifierState(theta=np.array([1.0, 0.0]), R=1.0, t=2), [1.0, 0.0], 1, u=u)
        assert pred == 1


@given(
    st.lists(st.floats(-50, 50), min_size=2, max_size=2),
    st.lists(st.floats(-1, 1), min_size=2, max_size=2),
    st.integers(1, 1000),
)
def test_rand_classifier_probability_in_unit_interval(theta, z, t):
    s = RandClassifierState(theta=np.array(theta), R=2.0, t=t)
    p = rand_classifier_prob(s, z)
    assert 0.0 <= p <= 1.0
    assert np.linalg.norm(rand_classifier_point(s)) <= 0.5 * (1 + 1e-12)


def test_rand_classifier_rejects_large_features():
    with pytest.raises(ValueError):
        rand_classifier_step(rand_classifier_state(2, 1.0), [2.0, 0.0], 1, u=0.5)


def test_rand_classifier_expected_mistakes_bound():
    # the update ignores the sampled label, so expected mistakes are exact given the stream
    T = 400
    a = np.linspace(-1, 1, 201)
    A, B = np.meshgrid(a, a, indexing="ij")
    U = np.stack([A.ravel(), B.ravel()], axis=1)
    U = U[(U * U).sum(axis=1) <= 1.0]
    for seed in range(50):
        rng = np.random.default_rng(seed)
        Z, y = _separable(rng, T, 0.05)
        s = rand_classifier_state(2, 1.0)
        expected = 0.0
        for z, lab in zip(Z, y):
            p = rand_classifier_prob(s, z)
            expected += 1.0 - p if lab == 1 else p
            rand_classifier_step(s, z, lab, u=0.5)
        surrogate = (np.abs(Z @ U.T - y[:, None]) / 2.0).sum(axis=0).min()
        assert expected - surrogate <= math.sqrt(2 * T)
