import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from artifact.geometry import All, Box, L2Ball
from artifact.second_order import (
    ONS,
    REFACTOR_EVERY,
    VAW,
    _RankOneInverse,
    logistic_exp_concavity,
    ons_mu,
    ons_objective,
    ons_state,
    ons_step,
    quadratic_ball_argmin,
    sherman_morrison,
    vaw_observe,
    vaw_predict,
    vaw_state,
)
from oracles import ball_quadratic_grid

# --- ONS ------------------------------------------------------------------------------


def test_ons_examples():
    s = ons_state(All(1), 1.0, 1.0)
    np.testing.assert_array_equal(s.x, [0.0])
    ons_step(s, [1.0])
    assert s.x[0] == -0.5


def test_ons_ball_matches_grid_oracle():
    rng = np.random.default_rng(4)
    for trial in range(4):
        s = ons_state(L2Ball(1.0, 2), 0.5, 0.8)
        history = []
        for _ in range(6):
            g = rng.normal(size=2) * 2.0
            history.append((g, s.x.copy()))
            ons_step(s, g)
        c = s.b - s.grad_sum
        grid = ball_quadratic_grid(s.S, c, 1.0)
        assert np.max(np.abs(s.x - grid)) <= 1e-3
        # the closed-form objective agrees with the explicit history form
        f = lambda x: ons_objective(s, history, x)
        assert f(s.x) <= f(grid) + 1e-9


def test_ons_all_is_linear_solve():
    rng = np.random.default_rng(2)
    s = ons_state(All(3), 2.0, 0.3)
    for _ in range(20):
        ons_step(s, rng.normal(size=3))
    np.testing.assert_allclose(s.x, np.linalg.solve(s.S, s.b - s.grad_sum), rtol=1e-10)


@given(
    st.lists(st.floats(-3, 3), min_size=2, max_size=2),
    st.floats(0.1, 5),
    st.floats(0.2, 3),
)
def test_quadratic_ball_argmin_kkt(c, scale, radius):
    S = np.array([[2.0, 0.3], [0.3, 0.5]]) * scale
    c = np.array(c)
    x = quadratic_ball_argmin(S, c, radius)
    assert np.linalg.norm(x) <= radius * (1 + 1e-12)
    resid = S @ x - c
    if np.linalg.norm(x) < radius * (1 - 1e-8):
        assert np.linalg.norm(resid) <= 1e-8 * (1 + np.linalg.norm(c))
    else:
        # on the boundary the residual points inward along -x
        nu = -float(resid @ x) / float(x @ x)
        assert nu >= -1e-8
        assert np.linalg.norm(resid + nu * x) <= 1e-6 * (1 + np.linalg.norm(c))


def test_ons_helpers_and_errors():
    assert math.isclose(logistic_exp_concavity(1.0), math.exp(-2) / 2)
    assert ons_mu(0.5, 1.0, 2.0) == 0.25
    with pytest.raises(TypeError):
        ons_state(Box([0.0], [1.0]), 1.0, 1.0)
    with pytest.raises(ValueError):
        ons_state(All(1), 0.0, 1.0)
    with pytest.raises(ValueError):
        ons_step(ons_state(All(1), 1.0, 1.0), [math.inf])


def test_ons_learner_feasible():
    rng = np.random.default_rng(0)
    L = ONS(L2Ball(0.5, 3), 1.0, 0.5)
    for _ in range(300):
        x = L.predict()
        assert np.linalg.norm(x) <= 0.5 * (1 + 1e-12)
        L.observe(rng.normal(size=3) * 3)


# --- rank-one inverse ---------------------------------------------------------------


def test_sherman_morrison_formula():
    rng = np.random.default_rng(1)
    A = np.eye(3) * 2 + 0.1 * np.ones((3, 3))
    u = rng.normal(size=3)
    np.testing.assert_allclose(sherman_morrison(np.linalg.inv(A), u), np.linalg.inv(A + np.outer(u, u)), rtol=1e-12)


def test_sherman_morrison_drift_after_many_updates():
    rng = np.random.default_rng(9)
    m = _RankOneInverse.scaled_identity(4, 0.1)
    for k in range(1, 1001):
        m.add(rng.normal(size=4))
        if k % REFACTOR_EVERY == REFACTOR_EVERY - 1 or k == 1000:
            fresh = np.linalg.inv(m.S)
            assert np.max(np.abs(m.S_inv - fresh)) <= 1e-8 * np.max(np.abs(fresh))
            np.testing.assert_allclose(m.S @ m.S_inv, np.eye(4), atol=1e-8)
    np.testing.assert_array_equal(m.S, m.S.T)
    np.testing.assert_array_equal(m.S_inv, m.S_inv.T)


# --- VAW ---------------------------------------------------------------------------------


def test_vaw_examples():
    s = vaw_state(1, 1.0)
    np.testing.assert_array_equal(vaw_predict(s, [1.0]), [0.0])
    vaw_observe(s, 1.0)
    np.testing.assert_allclose(vaw_predict(s, [1.0]), [1 / 3], rtol=1e-15)


def test_vaw_matches_dense_solve():
    rng = np.random.default_rng(3)
    d, lam = 2, 0.7
    s = vaw_state(d, lam)
    Z = rng.normal(size=(200, d))
    y = rng.normal(size=200)
    for t in range(200):
        x = vaw_predict(s, Z[t])
        # argmin lam/2 |x|^2 + 1/2 sum_{i<t} (<z_i,x> - y_i)^2 + 1/2 <z_t,x>^2
        A = lam * np.eye(d) + Z[: t + 1].T @ Z[: t + 1]
        want = np.linalg.solve(A, Z[:t].T @ y[:t])
        np.testing.assert_allclose(x, want, rtol=1e-10, atol=1e-12)
        vaw_observe(s, y[t])


def test_vaw_call_order():
    s = vaw_state(1, 1.0)
    with pytest.raises(RuntimeError):
        vaw_observe(s, 1.0)
    vaw_predict(s, [1.0])
    with pytest.raises(RuntimeError):
        vaw_predict(s, [1.0])


@pytest.mark.parametrize("seed", range(5))
def test_vaw_regret_bound(seed):
    rng = np.random.default_rng(100 + seed)
    T, d, lam = 2000, 1 + seed % 3, 1.0
    Z = rng.normal(size=(T, d))
    Z /= np.maximum(1.0, np.linalg.norm(Z, axis=1, keepdims=True))
    y = np.clip(Z @ rng.normal(size=d) + 0.3 * rng.normal(size=T), -1, 1)
    v = VAW(d, lam)
    pred = np.empty(T)
    for t in range(T):
        pred[t] = v.predict(Z[t])
        v.observe(y[t])
    u = np.linalg.solve(lam * np.eye(d) + Z.T @ Z, Z.T @ y)
    reg = 0.5 * np.sum((pred - y) ** 2) - 0.5 * np.sum((Z @ u - y) ** 2)
    assert reg <= lam / 2 * float(u @ u) + d / 2 * math.log1p(T / (lam * d))
