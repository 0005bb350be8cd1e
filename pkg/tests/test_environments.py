import math

import numpy as np
import pytest

from artifact.core import Linear, SquaredDistance, best_squared_loss_competitor, evaluate, play, regret
from artifact.environments import (
    AdversarialLinear,
    FixedConvex,
    FtlFailure,
    GuessingGame,
    IidLinear,
    RademacherOlo,
    StochasticArms,
    conversion_weights,
    next_loss,
    online_to_batch,
    rademacher_regret_floor,
    stream,
)
from artifact.bandit import Bernoulli, Gaussian
from artifact.first_order import OSD, Decaying
from artifact.ftrl import FollowTheLeader, Quadratized, QuadratizedState, quadratized_predict, quadratized_step
from artifact.geometry import Box


def test_next_loss_examples():
    assert next_loss(FtlFailure(), 1) == Linear([-0.5])
    assert next_loss(FtlFailure(), 4) == Linear([1.0])
    assert next_loss(FtlFailure(), 5) == Linear([-1.0])
    assert next_loss(GuessingGame((0.3,)), 1) == SquaredDistance(0.3)
    with pytest.raises(IndexError):
        next_loss(GuessingGame((0.3,)), 2)
    with pytest.raises(ValueError):
        next_loss(FtlFailure(), 0)
    with pytest.raises(ValueError):
        GuessingGame((1.5,))


ENVS = [
    GuessingGame.random(50, 3),
    RademacherOlo(1.0, 2.0, [1.0, 1.0], seed=5),
    IidLinear([0.1, -0.2], 0.5, seed=7),
    AdversarialLinear(3, "linf", 1.0, 8, seed=11),
    StochasticArms((Bernoulli(0.3), Bernoulli(0.6)), seed=13),
    StochasticArms((Gaussian(0.0), Gaussian(1.0, 2.0)), seed=17),
]


@pytest.mark.parametrize("env", ENVS, ids=lambda e: type(e).__name__)
def test_seeded_streams_are_reproducible(env):
    a = [_fields(next_loss(env, t)) for t in range(1, 51)]
    b = [_fields(loss) for loss in stream(env, 50)]
    # rounds can also be regenerated out of order
    c = {t: _fields(next_loss(env, t)) for t in (50, 7, 23)}
    for x, y in zip(a, b):
        assert len(x) == len(y) and all(np.array_equal(p, q) for p, q in zip(x, y))
    for t, x in c.items():
        assert all(np.array_equal(p, q) for p, q in zip(x, a[t - 1]))


def _fields(loss):
    return (type(loss).__name__,) + tuple(np.asarray(getattr(loss, f)) for f in loss.__dataclass_fields__)


def test_different_seeds_differ():
    a = next_loss(IidLinear([0.0, 0.0], seed=1), 1).g
    b = next_loss(IidLinear([0.0, 0.0], seed=2), 1).g
    assert not np.array_equal(a, b)


@pytest.mark.parametrize("norm", ["l2", "linf", "unit"])
def test_adversarial_norm_bounds(norm):
    env = AdversarialLinear(4, norm, 2.5, 16, seed=3)
    G = np.array([g.g for g in stream(env, 500)])
    if norm == "l2":
        assert np.all(np.linalg.norm(G, axis=1) <= 2.5 * (1 + 1e-12))
    elif norm == "linf":
        assert np.all(np.abs(G) <= 2.5)
    else:
        assert np.all((G >= 0) & (G <= 2.5))


def test_rademacher_environment():
    env = RademacherOlo(2.0, 3.0, [3.0, 4.0], seed=1)
    v, w = env.competitors
    assert math.isclose(np.linalg.norm(v - w), 3.0)
    g = next_loss(env, 1).g
    assert math.isclose(np.linalg.norm(g), 2.0)
    assert math.isclose(rademacher_regret_floor(1.0, 1.0, 16), math.sqrt(2))
    with pytest.raises(ValueError):
        RademacherOlo(1.0, 1.0, [0.0, 0.0])


def test_rademacher_forces_regret():
    T, seeds = 1024, 100
    regs = []
    for s in range(seeds):
        env = RademacherOlo(1.0, 2.0, [1.0], seed=s)
        led = play(OSD(Box([-1.0], [1.0]), Decaying(2.0, 1.0)), stream(env, T))
        regs.append(max(regret(led, u) for u in env.competitors))
    assert np.mean(regs) >= 0.2 * 1.0 * 2.0 * math.sqrt(T)


# --- FTL behaviour ----------------------------------------------------------------------------


def test_ftl_fails_and_osd_does_not():
    T = 400
    led = play(FollowTheLeader(Box([-1.0], [1.0])), stream(FtlFailure(), T))
    assert led.records[0].x[0] == 0.0
    assert regret(led, [0.0]) >= T - 2
    led = play(OSD(Box([-1.0], [1.0]), Decaying(2.0, 1.0)), stream(FtlFailure(), T))
    assert regret(led, [0.0]) <= 3 * math.sqrt(T)


@pytest.mark.parametrize("seed", range(20))
def test_ftl_guessing_game_bound(seed):
    T = 300
    env = GuessingGame.random(T, seed)
    led = play(Quadratized(1, 2.0), stream(env, T))
    u = best_squared_loss_competitor(env.ys)
    assert regret(led, [u]) <= 4 + 4 * math.log(T)


# --- online-to-batch -------------------------------------------------------------------------


def test_online_to_batch_examples():
    f = SquaredDistance(0.0)
    res = online_to_batch(OSD(Box([-1.0], [1.0]), Decaying(2.0, 2.0), x1=[0.9]), lambda t: f, 1000)
    assert abs(res.x_bar[0]) <= 0.1
    res = online_to_batch(OSD(Box([-1.0], [1.0]), Decaying(2.0, 2.0), x1=[0.9]), lambda t: f, 1)
    np.testing.assert_array_equal(res.x_bar, [0.9])
    res = online_to_batch(OSD(Box([-1.0], [1.0]), Decaying(2.0, 2.0)), lambda t: f, 5, objective=lambda x: evaluate(f, x))
    assert res.objective == evaluate(f, res.x_bar)


def test_conversion_weights():
    np.testing.assert_array_equal(conversion_weights("linear", 3), [1.0, 2.0, 3.0])
    np.testing.assert_allclose(conversion_weights("inv_sqrt", 4), [1, 1 / math.sqrt(2), 1 / math.sqrt(3), 0.5])
    np.testing.assert_array_equal(conversion_weights([1, 2], 2), [1.0, 2.0])
    for bad in ("cubic", [1.0], [1.0, 0.0]):
        with pytest.raises(ValueError):
            conversion_weights(bad, 2)


def _weighted_quadratized(xi, weights):
    # FTRL on the weighted squared losses alpha_t (x - xi_t)^2, each 2 alpha_t strongly convex
    s = QuadratizedState(num=np.zeros(1))
    xs = []
    for a, z in zip(weights, xi):
        x = quadratized_predict(s)
        xs.append(x[0])
        quadratized_step(s, 2 * a * (x - z), 2 * a, x)
    return float(np.dot(weights, xs) / weights.sum())


def test_linear_weights_beat_uniform_on_strongly_convex_objective():
    T, mu = 1000, 0.3
    uni, lin = [], []
    for seed in range(20):
        xi = np.random.default_rng(seed).normal(mu, 1.0, T)
        # objective E (x - xi)^2 has suboptimality (x - mu)^2
        uni.append((_weighted_quadratized(xi, conversion_weights("uniform", T)) - mu) ** 2)
        lin.append((_weighted_quadratized(xi, conversion_weights("linear", T)) - mu) ** 2)
    assert np.mean(lin) < np.mean(uni)


def test_online_to_batch_rescales_losses():
    seen = []

    class Spy(OSD):
        def _update(self, g):
            seen.append(g[0])
            super()._update(g)

    online_to_batch(Spy(Box([-1.0], [1.0]), Decaying(1.0, 1.0)), lambda t: Linear([1.0]), 3, weights="linear")
    assert seen == [1.0, 2.0, 3.0]


def test_fixed_convex_repeats():
    f = SquaredDistance(0.2)
    assert all(loss is f for loss in stream(FixedConvex(f), 5))
