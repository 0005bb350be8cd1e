"""Named acceptance presets, one per guarantee being checked.

Every preset draws its randomness from ``SeedSequence(master_seed,
spawn_key=(criterion, ...))``, returns a PASS / FAIL / XFAIL verdict with the
measured quantity and the threshold, and produces CSV traces in the
``round,loss,cum_loss,competitor_cum_loss,regret,bound`` format.

XFAIL marks a bound that is provably too small for the algorithm as
configured; the preset then also checks the corrected bound and reports FAIL
if that one is violated.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np
from scipy.optimize import minimize

from . import bandit
from .classification import perceptron_state, perceptron_step
from .cli import Row, csv_text, emit_csv, make_rows
from .core import Logistic, SquaredDistance, evaluate, subgradient
from .environments import AdversarialLinear, FtlFailure, RademacherOlo, next_loss
from .first_order import OSD, AdaGrad, AdaptiveGlobal, Decaying
from .ftrl import AdaHedge, FollowTheLeader, FTRLLinear, Quadratized, sqrt_schedule
from .geometry import All, Box, L2Ball, lambert_w
from .mirror_descent import EG, sample_expert
from .parameter_free import (
    KT,
    BettingExperts,
    Shifted,
    betting_state,
    bet,
    calibrate_kt_constant,
    kt_log_wealth,
    settle,
    shifted_log_wealth,
)
from .second_order import ONS, VAW, logistic_exp_concavity, ons_mu, ons_objective

MASTER_SEED = 20240517


def rng_for(master: int, *keys: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(master), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(ss))


def seed_for(master: int, *keys: int) -> int:
    ss = np.random.SeedSequence(int(master), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass
class CriterionResult:
    number: int
    title: str
    status: str  # PASS | FAIL | XFAIL
    measured: float
    threshold: float
    detail: str
    artifacts: Dict[str, List[Row]] = field(default_factory=dict, repr=False)
    seconds: float = 0.0

    def line(self) -> str:
        return f"{self.status:5s} C{self.number:02d} {self.title}: {self.detail} [{self.seconds:.1f}s]"

    def csv_texts(self) -> Dict[str, str]:
        return {name: csv_text(rows) for name, rows in sorted(self.artifacts.items())}


def _verdict(ok: bool) -> str:
    return "PASS" if ok else "FAIL"


def _play_linear(learner, G: np.ndarray) -> np.ndarray:
    """Feed gradient rows to ``learner``; returns the predictions."""
    X = np.empty_like(G)
    for t in range(G.shape[0]):
        X[t] = learner.predict()
        learner.observe(G[t])
    return X


def _loss_matrix(env, T: int) -> np.ndarray:
    return np.array([next_loss(env, t).g for t in range(1, T + 1)])


def _vertex_rows(X: np.ndarray, G: np.ndarray, bound) -> List[Row]:
    losses = np.einsum("ij,ij->i", X, G)
    return make_rows(losses, np.cumsum(G, axis=0).min(axis=1), bound)


def switching_stream(d: int, T: int) -> np.ndarray:
    """Two expert blocks alternate losses +-1, then expert 0 takes the lead.

    The alternation charges a fixed-rate exponential-weights learner about
    ``eta/2`` per round and the final switch adds about ``ln(d)/eta``.
    """
    h = np.where(np.arange(d) < max(d // 2, 1), 1.0, -1.0)
    sign = np.where(np.arange(T) % 2 == 0, -1.0, 1.0)
    G = sign[:, None] * h[None, :]
    k = T // 5
    G[T - k :] = 1.0
    G[T - k :, 0] = -1.0
    return G


# ---------------------------------------------------------------------------
# 1-2: follow the leader
# ---------------------------------------------------------------------------


def c01(master: int) -> CriterionResult:
    T, n = 1000, 100
    start = time.perf_counter()
    Y = rng_for(master, 1).random((T, n))
    # squared loss is separable, so one n-dimensional FTL is n independent games
    learner = Quadratized(n, 2.0)
    X = np.empty((T, n))
    for t in range(T):
        X[t] = learner.predict()
        learner.observe(SquaredDistance(Y[t]))
    loss = (X - Y) ** 2
    regrets = loss.sum(axis=0) - ((Y - Y.mean(axis=0)) ** 2).sum(axis=0)
    elapsed = time.perf_counter() - start
    bound = 4.0 + 4.0 * math.log(T)
    worst = float(regrets.max())
    ok = worst <= bound and elapsed < 1.0
    # running best constant for sequence 0 is its prefix mean
    y = Y[:, 0]
    k = np.arange(1, T + 1)
    comp = np.cumsum(y * y) - np.cumsum(y) ** 2 / k
    rows = make_rows(loss[:, 0], comp, 4.0 + 4.0 * np.log(k))
    return CriterionResult(
        1,
        "FTL guessing game",
        _verdict(ok),
        worst,
        bound,
        f"max regret {worst:.4f} <= {bound:.4f} over {n} sequences, runtime {elapsed:.3f}s < 1s",
        {"ftl_guessing_seq0": rows},
    )


def c02(master: int) -> CriterionResult:
    T = 1000
    G = _loss_matrix(FtlFailure(), T)
    X_ftl = _play_linear(FollowTheLeader(Box([-1.0], [1.0])), G)
    X_osd = _play_linear(OSD(Box([-1.0], [1.0]), Decaying(2.0, 1.0)), G)
    l_ftl = np.einsum("ij,ij->i", X_ftl, G)
    l_osd = np.einsum("ij,ij->i", X_osd, G)
    r_ftl, r_osd = float(l_ftl.sum()), float(l_osd.sum())
    k = np.arange(1, T + 1)
    ok = r_ftl >= T - 2 and r_osd <= 3.0 * math.sqrt(T)
    return CriterionResult(
        2,
        "FTL failure vs OSD",
        _verdict(ok),
        r_osd,
        3.0 * math.sqrt(T),
        f"FTL regret {r_ftl:.1f} >= {T - 2}; OSD regret {r_osd:.3f} <= {3 * math.sqrt(T):.3f}",
        {
            "ftl_failure_ftl": make_rows(l_ftl, np.zeros(T), k - 2.0),
            "ftl_failure_osd": make_rows(l_osd, np.zeros(T), 3.0 * np.sqrt(k)),
        },
    )


# ---------------------------------------------------------------------------
# 3-7: first-order and FTRL guarantees
# ---------------------------------------------------------------------------


def _ball_grid(radius: float, n_r: int = 41, n_a: int = 720) -> np.ndarray:
    r = np.linspace(0.0, radius, n_r)
    a = np.linspace(0.0, 2 * math.pi, n_a, endpoint=False)
    R, A = np.meshgrid(r, a, indexing="ij")
    return np.stack([(R * np.cos(A)).ravel(), (R * np.sin(A)).ravel()], axis=1)


def c03(master: int) -> CriterionResult:
    T, seeds, D = 2000, 50, 2.0
    U = _ball_grid(1.0)
    worst_ratio, worst_exact = -math.inf, -math.inf
    artifacts = {}
    # drifting streams plus Rademacher sign streams, which leave no direction to exploit
    envs = [AdversarialLinear(2, "l2", 1.0, 64, seed_for(master, 3, s)) for s in range(seeds)]
    envs += [RademacherOlo(1.0, D, rng_for(master, 3, 100 + s).standard_normal(2), seed_for(master, 3, 100 + s)) for s in range(10)]
    for s, env in enumerate(envs):
        G = _loss_matrix(env, T)
        X = _play_linear(OSD(L2Ball(1.0, 2), AdaptiveGlobal(D)), G)
        losses = np.einsum("ij,ij->i", X, G)
        bound = math.sqrt(2.0) * D * math.sqrt(float((G * G).sum()))
        grid_best = float((U @ G.sum(axis=0)).min())
        exact_best = -float(np.linalg.norm(G.sum(axis=0)))
        worst_ratio = max(worst_ratio, (losses.sum() - grid_best) / bound)
        worst_exact = max(worst_exact, (losses.sum() - exact_best) / bound)
        if s == 0:
            comp = (np.cumsum(G, axis=0) @ U.T).min(axis=1)
            curve = math.sqrt(2.0) * D * np.sqrt(np.cumsum((G * G).sum(axis=1)))
            artifacts["osd_adaptive_seed0"] = make_rows(losses, comp, curve)
    ok = worst_ratio <= 1.0 + 1e-6 and worst_exact <= 1.0 + 1e-6
    return CriterionResult(
        3,
        "OSD adaptive step sizes",
        _verdict(ok),
        worst_ratio,
        1.0 + 1e-6,
        f"max regret/bound {worst_ratio:.4f} vs grid best, {worst_exact:.4f} vs exact best, {len(envs)} streams",
        artifacts,
    )


def adagrad_scaling_mismatches(G: np.ndarray, box: Box, c: float) -> int:
    """Rounds where scaling one coordinate's gradients by ``c`` changes any iterate."""
    base = _play_linear(AdaGrad(box), G)
    bad = 0
    for i in range(G.shape[1]):
        H = G.copy()
        H[:, i] *= c
        bad += int(np.any(_play_linear(AdaGrad(box), H) != base, axis=1).sum())
    return bad


def pow2_gradients(rng: np.random.Generator, T: int, d: int) -> np.ndarray:
    G = rng.choice([-1.0, 1.0], (T, d)) * np.exp2(rng.integers(-12, 13, (T, d)))
    G[rng.random((T, d)) < 0.15] = 0.0
    return G


def c04(master: int) -> CriterionResult:
    T = 2000
    box = Box([-1.0, -2.0, -0.5], [1.0, 2.0, 0.5])
    rng = rng_for(master, 4)
    P = pow2_gradients(rng, T, 3)
    Z = rng.integers(-50, 51, (T, 3)).astype(float)
    total = 0
    for G, scales in ((P, (0.01, 100.0)), (Z, (100.0,))):
        for c in scales:
            total += adagrad_scaling_mismatches(G, box, c)
    X = _play_linear(AdaGrad(box), P)
    losses = np.einsum("ij,ij->i", X, P)
    corners = np.cumsum(P, axis=0)
    comp = np.where(corners > 0, corners * box.lo, corners * box.hi).sum(axis=1)
    return CriterionResult(
        4,
        "AdaGrad per-coordinate scale-freeness",
        _verdict(total == 0),
        float(total),
        0.0,
        f"{total} iterates differ after scaling a coordinate by 0.01 or 100 (exactly representable gradients)",
        {"adagrad_pow2": make_rows(losses, comp, np.nan)},
    )


def _expert_streams(master: int, crit: int, d: int, T: int, n: int, norm: str) -> List[np.ndarray]:
    out = [_loss_matrix(AdversarialLinear(d, norm, 1.0, 64, seed_for(master, crit, d, s)), T) for s in range(n)]
    W = switching_stream(d, T)
    out.append(W if norm == "linf" else (W + 1.0) / 2.0)
    return out


def c05(master: int) -> CriterionResult:
    T, n = 2000, 10
    worst_stated, worst_corrected, witness = -math.inf, -math.inf, ""
    artifacts = {}
    for d in (2, 10, 100):
        eta = math.sqrt(2.0 * math.log(d) / T)
        stated = math.sqrt(2.0) / 2.0 * math.sqrt(T * math.log(d))
        corrected = math.sqrt(2.0) * math.sqrt(T * math.log(d))
        for j, G in enumerate(_expert_streams(master, 5, d, T, n, "linf")):
            X = _play_linear(EG(d, eta), G)
            reg = float(np.einsum("ij,ij->", X, G) - G.sum(axis=0).min())
            if reg / stated > worst_stated:
                worst_stated = reg / stated
                witness = f"d={d} stream {j}: regret {reg:.2f} > {stated:.2f}" if reg > stated else witness
            worst_corrected = max(worst_corrected, reg / corrected)
            if d == 10 and j == n:
                artifacts["eg_switching_d10"] = _vertex_rows(
                    X, G, math.log(d) / eta + eta / 2.0 * np.arange(1, T + 1)
                )
    if worst_stated <= 1.0:
        status = "PASS"
    else:
        status = "XFAIL" if worst_corrected <= 1.0 else "FAIL"
    detail = (
        f"max regret/(sqrt2/2 sqrt(T ln d)) {worst_stated:.3f}; "
        f"max regret/(sqrt2 sqrt(T ln d)) {worst_corrected:.3f}"
    )
    if witness:
        detail += f"; {witness}"
    return CriterionResult(5, "EG fixed learning rate", status, worst_stated, 1.0, detail, artifacts)


def c06(master: int) -> CriterionResult:
    T, n = 2000, 10
    worst = -math.inf
    mismatches = 0
    artifacts = {}
    for d in (2, 10, 100):
        for j, G in enumerate(_expert_streams(master, 6, d, T, n, "linf")):
            X = _play_linear(AdaHedge(d), G)
            reg = float(np.einsum("ij,ij->", X, G) - G.sum(axis=0).min())
            gi = np.abs(G).max(axis=1) ** 2
            bound = 2.0 * math.sqrt((4.0 + math.log(d)) * float(gi.sum()))
            worst = max(worst, reg / bound)
            if j < 3:
                for c in (2.0**-7, 2.0**5):
                    mismatches += int(np.any(_play_linear(AdaHedge(d), c * G) != X, axis=1).sum())
            if d == 10 and j == 0:
                artifacts["adahedge_d10"] = _vertex_rows(
                    X, G, 2.0 * np.sqrt((4.0 + math.log(d)) * np.cumsum(gi))
                )
    ok = worst <= 1.0 and mismatches == 0
    return CriterionResult(
        6,
        "AdaHedge",
        _verdict(ok),
        worst,
        1.0,
        f"max regret/bound {worst:.4f}; {mismatches} iterates differ under loss scaling by 2^-7 and 2^5",
        artifacts,
    )


def _set_grid(feasible, n: int = 10) -> np.ndarray:
    if isinstance(feasible, L2Ball):
        r = np.linspace(0.0, feasible.radius, n)
        a = np.linspace(0.0, 2 * math.pi, n, endpoint=False)
        R, A = np.meshgrid(r, a, indexing="ij")
        return np.stack([(R * np.cos(A)).ravel(), (R * np.sin(A)).ravel()], axis=1)
    lo, hi = (feasible.lo, feasible.hi) if isinstance(feasible, Box) else (np.full(2, -3.0), np.full(2, 3.0))
    a, b = np.meshgrid(np.linspace(lo[0], hi[0], n), np.linspace(lo[1], hi[1], n), indexing="ij")
    return np.stack([a.ravel(), b.ravel()], axis=1)


def ftrl_equality_gap(G: np.ndarray, feasible, scale: float, U: np.ndarray):
    """Relative gap of the regret equality over ``U``, and the worst optimality violation of the iterates."""
    T = G.shape[0]
    lam = sqrt_schedule(scale)
    learner = FTRLLinear(feasible, lam)
    X = _play_linear(learner, G)
    X = np.vstack([X, learner.state.x])  # x_1 .. x_{T+1}
    P = np.vstack([np.zeros(G.shape[1]), np.cumsum(G, axis=0)])  # sum_{i<t} g_i for t = 1..T+1

    def F(t: int, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        return 0.5 * lam(t) * np.einsum("ij,ij->i", x, x) + x @ P[t - 1]

    lx = np.einsum("ij,ij->i", X[:T], G)
    Fx = np.array([F(t, X[t - 1])[0] for t in range(1, T + 2)])
    middle = float(np.sum(Fx[:T] - Fx[1:] + lx))
    lhs = lx.sum() - U @ G.sum(axis=0)
    rhs = 0.5 * lam(T + 1) * np.einsum("ij,ij->i", U, U) + middle + Fx[T] - F(T + 1, U)
    rel = float(np.max(np.abs(lhs - rhs) / np.maximum(1.0, np.abs(lhs))))
    # each logged iterate must minimize F_t over the set (checked on the grid)
    opt = max(float(Fx[t - 1] - F(t, U).min()) for t in range(1, T + 2))
    return rel, opt, lx


def c07(master: int) -> CriterionResult:
    T, runs = 200, 20
    sets = [L2Ball(1.0, 2), Box([-1.0, -0.5], [1.0, 0.5]), All(2)]
    worst_rel, worst_opt = 0.0, -math.inf
    artifacts = {}
    for r in range(runs):
        rng = rng_for(master, 7, r)
        feasible = sets[r % 3]
        scale = float(rng.uniform(0.5, 2.0))
        G = _loss_matrix(AdversarialLinear(2, "l2", 1.0, 32, seed_for(master, 7, r)), T)
        U = _set_grid(feasible)
        rel, opt, lx = ftrl_equality_gap(G, feasible, scale, U)
        worst_rel = max(worst_rel, rel)
        worst_opt = max(worst_opt, opt)
        if r == 0:
            artifacts["ftrl_ball_run0"] = make_rows(lx, (np.cumsum(G, axis=0) @ U.T).min(axis=1), np.nan)
    ok = worst_rel <= 1e-6 and worst_opt <= 1e-9
    return CriterionResult(
        7,
        "FTRL regret equality",
        _verdict(ok),
        worst_rel,
        1e-6,
        f"max relative gap {worst_rel:.2e} over {runs} runs x 100 competitors; iterate optimality slack {worst_opt:.1e}",
        artifacts,
    )


# ---------------------------------------------------------------------------
# 8-9: second order
# ---------------------------------------------------------------------------


def _ball_points(rng: np.random.Generator, n: int, d: int, radius: float = 1.0) -> np.ndarray:
    D = rng.standard_normal((n, d))
    D /= np.linalg.norm(D, axis=1, keepdims=True)
    return radius * D * rng.random((n, 1)) ** (1.0 / d)


def c08(master: int) -> CriterionResult:
    T, seeds, lam, R, Y = 10_000, 20, 1.0, 1.0, 1.0
    worst = -math.inf
    artifacts = {}
    for s in range(seeds):
        d = 1 + s % 5
        rng = rng_for(master, 8, s)
        Z = _ball_points(rng, T, d, R)
        w = rng.standard_normal(d) / math.sqrt(d)
        y = np.clip(Z @ w + 0.3 * rng.standard_normal(T), -Y, Y)
        vaw = VAW(d, lam)
        pred = np.empty(T)
        for t in range(T):
            pred[t] = vaw.predict(Z[t])
            vaw.observe(y[t])
        u = np.linalg.solve(lam * np.eye(d) + Z.T @ Z, Z.T @ y)
        losses = 0.5 * (pred - y) ** 2
        comp = 0.5 * (Z @ u - y) ** 2
        bound = lam / 2.0 * float(u @ u) + d * Y * Y / 2.0 * math.log1p(R * R * T / (lam * d))
        worst = max(worst, float(losses.sum() - comp.sum()) / bound)
        if s == 0:
            k = np.arange(1, T + 1)
            curve = lam / 2.0 * float(u @ u) + d * Y * Y / 2.0 * np.log1p(R * R * k / (lam * d))
            artifacts["vaw_seed0"] = make_rows(losses, np.cumsum(comp), curve)
    return CriterionResult(
        8,
        "Vovk-Azoury-Warmuth",
        _verdict(worst <= 1.0),
        worst,
        1.0,
        f"max regret/bound {worst:.4f} over {seeds} seeds, d in 1..5",
        artifacts,
    )


def best_logistic_in_ball(Z: np.ndarray, y: np.ndarray, radius: float) -> float:
    """Smallest cumulative logistic loss over the ball."""

    def f(u):
        return float(np.logaddexp(0.0, -y * (Z @ u)).sum())

    def g(u):
        m = -y * (Z @ u)
        return -(Z * (y / (1.0 + np.exp(-m)))[:, None]).sum(axis=0)

    cons = [{"type": "ineq", "fun": lambda u: radius * radius - u @ u, "jac": lambda u: -2.0 * u}]
    res = minimize(f, np.zeros(Z.shape[1]), jac=g, method="SLSQP", constraints=cons, options={"ftol": 1e-13, "maxiter": 500})
    return min(float(res.fun), f(np.zeros(Z.shape[1])))


def logistic_stream(rng: np.random.Generator, T: int, w) -> tuple:
    w = np.asarray(w, dtype=float)
    Z = _ball_points(rng, T, w.shape[0])
    p = 1.0 / (1.0 + np.exp(-(Z @ w)))
    y = np.where(rng.random(T) < p, 1.0, -1.0)
    return Z, y


def _circle(center: float, half_width: float, n: int) -> np.ndarray:
    a = np.linspace(center - half_width, center + half_width, n)
    return np.stack([np.cos(a), np.sin(a)], axis=1)


def _grid_argmin(obj, coarse: np.ndarray, step: float = 1e-4, half: int = 100) -> np.ndarray:
    """Grid search on the unit disk, recentring a fine window until the best point stays put."""
    best = coarse[np.argmin(obj(coarse))]
    f = step * np.arange(-half, half + 1)
    for _ in range(50):
        FA, FB = np.meshgrid(best[0] + f, best[1] + f, indexing="ij")
        fine = np.stack([FA.ravel(), FB.ravel()], axis=1)
        fine = fine[np.einsum("ij,ij->i", fine, fine) <= 1.0]
        ang = math.atan2(best[1], best[0])
        cand = np.vstack([fine, _circle(ang, half * step, 2 * half + 1), best[None]])
        nxt = cand[np.argmin(obj(cand))]
        if np.array_equal(nxt, best):
            return best
        best = nxt
    return best


def ons_bruteforce_gap(master: int, key: int, w, T: int = 60, checks=(1, 5, 20, 60)) -> float:
    """Largest distance between the ONS iterate and a grid search of its objective."""
    Z, y = logistic_stream(rng_for(master, 9, 1000 + key), T, w)
    mu = ons_mu(logistic_exp_concavity(1.0), 1.0, 2.0)
    ons = ONS(L2Ball(1.0, 2), 1.0, mu)
    a = np.arange(-1.0, 1.0 + 1e-12, 0.005)
    A, B = np.meshgrid(a, a, indexing="ij")
    coarse = np.stack([A.ravel(), B.ravel()], axis=1)
    coarse = np.vstack([coarse[np.einsum("ij,ij->i", coarse, coarse) <= 1.0], _circle(0.0, math.pi, 4000)])
    hist = []
    gap = 0.0
    for t in range(1, T + 1):
        x = ons.predict()
        g = subgradient(Logistic(Z[t - 1], y[t - 1]), x)
        ons.observe(g)
        hist.append((g, x))
        if t in checks:
            Gm = np.array([h[0] for h in hist])
            bm = np.array([float(h[0] @ h[1]) for h in hist])

            def obj(P):
                Ap = P @ Gm.T
                return 0.5 * ons.state.lam * np.einsum("ij,ij->i", P, P) + Ap.sum(axis=1) + 0.5 * mu * ((Ap - bm) ** 2).sum(axis=1)

            best = _grid_argmin(obj, coarse)
            # the vectorized objective must agree with the reference helper
            ref = ons_objective(ons.state, hist, best)
            if not math.isclose(ref, float(obj(best[None])[0]), rel_tol=1e-9, abs_tol=1e-12):
                raise AssertionError("ONS objective mismatch")
            gap = max(gap, float(np.linalg.norm(best - ons.state.x)))
    return gap


def c09(master: int) -> CriterionResult:
    Ts, seeds, w = (100, 1000, 10_000), 8, (1.0, -0.5)
    mu = ons_mu(logistic_exp_concavity(1.0), 1.0, 2.0)
    regrets = np.empty((seeds, len(Ts)))
    artifacts = {}
    for s in range(seeds):
        Z, y = logistic_stream(rng_for(master, 9, s), Ts[-1], w)
        ons = ONS(L2Ball(1.0, 2), 1.0, mu)
        losses = np.empty(Ts[-1])
        for t in range(Ts[-1]):
            x = ons.predict()
            loss = Logistic(Z[t], y[t])
            losses[t] = evaluate(loss, x)
            ons.observe(loss)
        cum = np.cumsum(losses)
        for j, n in enumerate(Ts):
            regrets[s, j] = cum[n - 1] - best_logistic_in_ball(Z[:n], y[:n], 1.0)
        if s == 0:
            u = _best_logistic_point(Z, y)
            comp = np.cumsum(np.logaddexp(0.0, -y * (Z @ u)))
            artifacts["ons_logistic_seed0"] = make_rows(losses, comp, np.nan)
    mean = regrets.mean(axis=0)
    slope = float(np.polyfit(np.log(Ts), mean, 1)[0])
    gap = max(ons_bruteforce_gap(master, 0, w), ons_bruteforce_gap(master, 1, (4.0, -3.0)))
    ok = 0.2 <= slope <= 5.0 and gap <= 1e-3
    return CriterionResult(
        9,
        "ONS on exp-concave logistic losses",
        _verdict(ok),
        slope,
        5.0,
        f"regret slope vs ln T {slope:.3f} in [0.2, 5] (mean regrets {', '.join(f'{m:.3f}' for m in mean)}); "
        f"one-step oracle gap {gap:.1e} <= 1e-3",
        artifacts,
    )


def _best_logistic_point(Z: np.ndarray, y: np.ndarray) -> np.ndarray:
    f = lambda u: float(np.logaddexp(0.0, -y * (Z @ u)).sum())  # noqa: E731
    cons = [{"type": "ineq", "fun": lambda u: 1.0 - u @ u}]
    return minimize(f, np.zeros(Z.shape[1]), method="SLSQP", constraints=cons, options={"ftol": 1e-12}).x


# ---------------------------------------------------------------------------
# 10-12: coin betting
# ---------------------------------------------------------------------------


def coin_sequences(rng: np.random.Generator, n: int, T: int) -> np.ndarray:
    """Half biased +-1 coins, half continuous drifting coins, plus the all-heads sequence."""
    h = n // 2
    P = np.where(rng.random((h, T)) < rng.random((h, 1)), 1.0, -1.0)
    C = np.clip(rng.uniform(-1.0, 1.0, (n - h - 1, 1)) + 0.5 * rng.standard_normal((n - h - 1, T)), -1.0, 1.0)
    return np.vstack([P, C, np.ones((1, T))])


def _wealth_trace(coins: np.ndarray, kind) -> np.ndarray:
    st = betting_state(1.0, kind)
    out = np.empty(coins.shape[0])
    for t, c in enumerate(coins):
        settle(st, float(c), bet(st))
        out[t] = st.wealth
    return out


def c10(master: int) -> CriterionResult:
    K = calibrate_kt_constant(16)
    worst = math.inf
    artifacts = {}
    for T in (64, 256, 1024):
        C = coin_sequences(rng_for(master, 10, T), 1000, T)
        lw = kt_log_wealth(C)
        S = C.sum(axis=1)
        worst = min(worst, float((lw - (S * S / (4.0 * T) - 0.5 * math.log(T) - K)).min()))
        if T == 1024:
            c = C[0]
            k = np.arange(1, T + 1)
            W = _wealth_trace(c, KT())
            logw = np.log(W)
            Sk = np.cumsum(c)
            # log-wealth as a loss against the potential S^2/(4t)
            artifacts["kt_wealth_T1024"] = make_rows(-np.diff(np.concatenate([[0.0], logw])), -Sk * Sk / (4.0 * k), 0.5 * np.log(k) + K)
    ok = worst >= -1e-12
    return CriterionResult(
        10,
        "KT wealth lower bound",
        _verdict(ok),
        worst,
        0.0,
        f"K = {K:.8f}; min slack ln W - (S^2/4T - ln(T)/2 - K) = {worst:.3e} over 3000 sequences",
        artifacts,
    )


def c11(master: int) -> CriterionResult:
    worst = math.inf
    artifacts = {}
    for T in (10, 100, 1000):
        C = coin_sequences(rng_for(master, 11, T), 1000, T)
        lw = shifted_log_wealth(C)
        S = C.sum(axis=1)
        ratio = np.exp(lw - (math.log(math.sqrt(2.0) / 2.0) + S * S / (4.0 * T)))
        worst = min(worst, float(ratio.min()))
        if T == 1000:
            c = C[-1]
            W = _wealth_trace(c, Shifted(T))
            logw = np.log(W)
            Sk = np.cumsum(c)
            bound = np.full(T, np.nan)
            bound[-1] = -math.log(math.sqrt(2.0) / 2.0)
            artifacts["shifted_wealth_all_heads"] = make_rows(
                -np.diff(np.concatenate([[0.0], logw])), -Sk * Sk / (4.0 * T), bound
            )
    ok = worst >= 1.0 - 1e-9
    return CriterionResult(
        11,
        "Shifted bettor wealth",
        _verdict(ok),
        worst,
        1.0 - 1e-9,
        f"min Wealth / (sqrt2/2 exp(S^2/4T)) = {worst:.9f} over 3000 sequences",
        artifacts,
    )


def c12(master: int) -> CriterionResult:
    T, n = 4096, 5
    worst = -math.inf
    artifacts = {}
    for d in (2, 10):
        bound = math.sqrt(4.0 * T * (math.log(d) + 0.5 * math.log(2.0)))
        for j, G in enumerate(_expert_streams(master, 12, d, T, n, "unit")):
            X = _play_linear(BettingExperts(d, None, Shifted(T)), G)
            regs = np.einsum("ij,ij->", X, G) - G.sum(axis=0)  # against every vertex
            worst = max(worst, float(regs.max()) / bound)
            if d == 10 and j == n:
                k = np.arange(1, T + 1)
                artifacts["betting_experts_switching_d10"] = _vertex_rows(
                    X, G, np.sqrt(4.0 * k * (math.log(d) + 0.5 * math.log(2.0)))
                )
    return CriterionResult(
        12,
        "Experts via shifted bettors",
        _verdict(worst <= 1.0),
        worst,
        1.0,
        f"max regret/bound {worst:.4f} over every vertex, d in (2, 10), T={T}",
        artifacts,
    )


# ---------------------------------------------------------------------------
# 13: perceptron
# ---------------------------------------------------------------------------


def _hinge_grid(radius: float = 3.0, step: float = 1e-2) -> np.ndarray:
    a = np.arange(-radius, radius + step / 2, step)
    A, B = np.meshgrid(a, a, indexing="ij")
    U = np.stack([A.ravel(), B.ravel()], axis=1)
    return U[np.einsum("ij,ij->i", U, U) <= radius * radius]


def _perceptron_run(Z: np.ndarray, y: np.ndarray, eta: float) -> np.ndarray:
    st = perceptron_state(Z.shape[1], eta)
    return np.array([perceptron_step(st, z, yy)[0] for z, yy in zip(Z, y)])


def c13(master: int) -> CriterionResult:
    T, seeds, R = 100, 50, 1.0
    U = _hinge_grid()
    unorm = np.linalg.norm(U, axis=1)
    worst = -math.inf
    invariance_breaks = 0
    artifacts = {}
    for s in range(seeds):
        rng = rng_for(master, 13, s)
        Z = _ball_points(rng, T, 2, R)
        w = rng.standard_normal(2)
        y = np.where(Z @ w >= 0, 1.0, -1.0)
        y[rng.random(T) < 0.05] *= -1.0
        preds = _perceptron_run(Z, y, 1.0)
        M = int((preds != y).sum())
        L1 = np.zeros(U.shape[0])
        for lo in range(0, T, 25):
            L1 += np.maximum(1.0 - (Z[lo : lo + 25] * y[lo : lo + 25, None]) @ U.T, 0.0).sum(axis=0)
        a = R * unorm
        bounds = L1 + a * a / 2.0 + a * np.sqrt(a * a / 4.0 + L1)
        best = float(bounds.min())
        worst = max(worst, M / best)
        for eta in (0.37, 2.0**-5, 1e3):
            invariance_breaks += int(np.any(_perceptron_run(Z, y, eta) != preds))
        if s == 0:
            i = int(np.argmin(bounds))
            hinge = np.maximum(1.0 - y * (Z @ U[i]), 0.0)
            artifacts["perceptron_seed0"] = make_rows(
                (preds != y).astype(float), np.cumsum(hinge), np.full(T, np.nan)
            )
            last = artifacts["perceptron_seed0"][-1]
            artifacts["perceptron_seed0"][-1] = replace(last, bound=best - float(hinge.sum()))
    ok = worst <= 1.0 and invariance_breaks == 0
    return CriterionResult(
        13,
        "Perceptron mistake bound",
        _verdict(ok),
        worst,
        1.0,
        f"max mistakes/bound {worst:.4f} over {seeds} seeds; {invariance_breaks} runs changed under rescaled updates",
        artifacts,
    )


# ---------------------------------------------------------------------------
# 14-16: bandits
# ---------------------------------------------------------------------------

BERNOULLI_INSTANCES = {
    "gap0.1": [0.5] + [0.6] * 9,
    "spread": list(np.round(np.linspace(0.2, 0.8, 10), 10)),
}


def _bandit_rows(res: bandit.SimResult, means: np.ndarray, bound) -> List[Row]:
    pulled = means[res.arms].mean(axis=0)
    T = pulled.shape[0]
    return make_rows(pulled, np.arange(1, T + 1) * means.min(), bound)


def c14(master: int) -> CriterionResult:
    T, n, d = 10_000, 100, 10
    eta = math.sqrt(2.0 * math.log(d) / (d * T))
    bound = math.sqrt(2.0) * math.sqrt(d * T * math.log(d))
    worst = -math.inf
    parts = []
    artifacts = {}
    for j, (name, means) in enumerate(BERNOULLI_INSTANCES.items()):
        arms = [bandit.Bernoulli(p) for p in means]
        tables = bandit.draw_tables(rng_for(master, 14, j), n, T, arms)
        res = bandit.simulate_exp3(arms, tables, eta)
        m = np.array(means)
        pr = float(res.pseudo_regret(m).mean())
        worst = max(worst, pr / bound)
        parts.append(f"{name} {pr:.1f}")
        k = np.arange(1, T + 1)
        artifacts[f"exp3_{name}"] = _bandit_rows(res, m, math.sqrt(2.0) * np.sqrt(d * k * math.log(d)))
    return CriterionResult(
        14,
        "Exp3 pseudo-regret",
        _verdict(worst <= 1.0),
        worst,
        1.0,
        f"mean pseudo-regret ({'; '.join(parts)}) <= {bound:.1f}",
        artifacts,
    )


def tsallis_fuzz(master: int, rounds: int = 100_000, episode: int = 1000) -> tuple:
    """Worst normalization residual and smallest coordinate over random INF updates."""
    worst_res, min_x = 0.0, math.inf
    for e in range(rounds // episode):
        rng = rng_for(master, 15, 1, e)
        d = int(rng.integers(2, 65))
        eta = float(np.exp(rng.uniform(math.log(1e-3), math.log(10.0))))
        st = bandit.adv_bandit_state(d, bandit.Tsallis(eta))
        for _ in range(episode):
            arm = sample_expert(st.x, u=float(rng.random()))
            bandit.tsallis_step(st, arm, float(rng.random()))
            worst_res = max(worst_res, st.last_residual)
            min_x = min(min_x, float(st.x.min()))
    return worst_res, min_x


def c15(master: int) -> CriterionResult:
    T, n, d = 10_000, 100, 10
    res_fuzz, min_x = tsallis_fuzz(master)
    eta = 1.0 / math.sqrt(T)
    bound = 4.0 * math.sqrt(d * T)
    worst = -math.inf
    parts = []
    artifacts = {}
    for j, (name, means) in enumerate(BERNOULLI_INSTANCES.items()):
        arms = [bandit.Bernoulli(p) for p in means]
        tables = bandit.draw_tables(rng_for(master, 14, j), n, T, arms)
        res = bandit.simulate_tsallis(arms, tables, eta)
        m = np.array(means)
        pr = float(res.pseudo_regret(m).mean())
        res_fuzz = max(res_fuzz, float(res.residual.max()))
        worst = max(worst, pr / bound)
        parts.append(f"{name} {pr:.1f}")
        artifacts[f"tsallis_{name}"] = _bandit_rows(res, m, 4.0 * np.sqrt(d * np.arange(1, T + 1)))
    ok = res_fuzz <= 1e-10 and min_x > 0.0 and worst <= 1.0
    return CriterionResult(
        15,
        "Tsallis-INF",
        _verdict(ok),
        worst,
        1.0,
        f"max residual {res_fuzz:.1e} <= 1e-10 (min mass {min_x:.1e}); "
        f"mean pseudo-regret ({'; '.join(parts)}) <= {bound:.1f}",
        artifacts,
    )


def c16(master: int) -> CriterionResult:
    T, n, alpha = 10_000, 100, 3.0
    means = np.array([0.0, 0.2, 0.5])
    arms = [bandit.Gaussian(m, 1.0) for m in means]
    res = bandit.simulate_ucb(arms, bandit.draw_tables(rng_for(master, 16, 0), n, T, arms), alpha)
    ucb = float(res.pseudo_regret(means).mean())
    ucb_b = bandit.ucb_bound(means - means.min(), T, alpha)
    k = np.arange(1, T + 1)
    curve = np.array([bandit.ucb_bound(means - means.min(), int(t), alpha) for t in k])
    artifacts = {"ucb_gaussian": _bandit_rows(res, means, curve)}
    ok = ucb <= ucb_b
    parts = [f"UCB {ucb:.1f} <= {ucb_b:.1f}"]
    for j, gap in enumerate((0.2, 0.5)):
        m2 = np.array([0.0, gap])
        arms2 = [bandit.Gaussian(v, 1.0) for v in m2]
        m = bandit.etc_m(T, gap)
        r2 = bandit.simulate_etc(arms2, bandit.draw_tables(rng_for(master, 16, 1 + j), n, T, arms2), m)
        pr = float(r2.pseudo_regret(m2).mean())
        b = bandit.etc_bound(gap, T)
        ok &= pr <= b
        parts.append(f"ETC gap {gap} (m={m}) {pr:.1f} <= {b:.1f}")
        artifacts[f"etc_gap{gap}"] = _bandit_rows(r2, m2, b)
    return CriterionResult(16, "UCB and ETC", _verdict(ok), ucb / ucb_b, 1.0, "; ".join(parts), artifacts)


# ---------------------------------------------------------------------------
# 17: Lambert W
# ---------------------------------------------------------------------------


def c17(master: int) -> CriterionResult:
    xs = np.logspace(-8, 8, 1000)
    W = np.array([lambert_w(x) for x in xs])
    resid = np.abs(W * np.exp(W) - xs) / np.maximum(1.0, xs)
    lo_ok = np.all(0.6321 * np.log1p(xs) <= W)
    hi_ok = np.all(W <= np.log1p(xs))
    worst = float(resid.max())
    ok = worst <= 1e-12 and lo_ok and hi_ok
    rows = [Row(i + 1, float(W[i]), float(xs[i]), float(0.6321 * math.log1p(xs[i])), float(resid[i]), float(math.log1p(xs[i]))) for i in range(0, 1000, 50)]
    return CriterionResult(
        17,
        "Lambert W",
        _verdict(ok),
        worst,
        1e-12,
        f"max relative residual {worst:.1e}; sandwich holds on all 1000 points: {bool(lo_ok and hi_ok)}",
        {"lambert_samples": rows},
    )


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------

PRESETS: Dict[str, Callable[[int], CriterionResult]] = {
    "c01_ftl_guessing": c01,
    "c02_ftl_failure": c02,
    "c03_osd_adaptive": c03,
    "c04_adagrad_scale_free": c04,
    "c05_eg": c05,
    "c06_adahedge": c06,
    "c07_ftrl_equality": c07,
    "c08_vaw": c08,
    "c09_ons_logistic": c09,
    "c10_kt_wealth": c10,
    "c11_shifted_wealth": c11,
    "c12_betting_experts": c12,
    "c13_perceptron": c13,
    "c14_exp3": c14,
    "c15_tsallis_inf": c15,
    "c16_ucb_etc": c16,
    "c17_lambert_w": c17,
    "c18_determinism": None,  # filled below
}


def determinism(master: int, first: Optional[Dict[str, Dict[str, str]]] = None) -> CriterionResult:
    """Re-run every other preset and compare its CSV artifacts byte for byte."""
    start = time.perf_counter()
    if first is None:
        first = {k: fn(master).csv_texts() for k, fn in PRESETS.items() if fn is not None and k != "c18_determinism"}
    diffs = []
    n_files = 0
    for k, texts in first.items():
        again = PRESETS[k](master).csv_texts()
        n_files += len(texts)
        if again != texts:
            diffs.append(k)
    elapsed = time.perf_counter() - start
    return CriterionResult(
        18,
        "Determinism",
        _verdict(not diffs),
        float(len(diffs)),
        0.0,
        f"{n_files} CSV artifacts from {len(first)} presets byte-identical on re-run"
        if not diffs
        else f"artifacts changed in {', '.join(diffs)}",
        seconds=elapsed,
    )


PRESETS["c18_determinism"] = determinism


def resolve(suite: str) -> List[str]:
    if suite == "all":
        return list(PRESETS)
    matches = [k for k in PRESETS if k == suite or k.split("_", 1)[0] == suite]
    if not matches:
        raise KeyError(f"unknown acceptance preset {suite!r}; choose 'all' or one of {', '.join(PRESETS)}")
    return matches


_CACHE: Dict[int, Dict[str, Dict[str, str]]] = {}


def run_criterion(key: str, master_seed: Optional[int] = None, out_dir=None) -> CriterionResult:
    """Run one preset; CSV artifacts go to ``out_dir/<key>/`` when given."""
    master = MASTER_SEED if master_seed is None else int(master_seed)
    if key == "c18_determinism":
        cached = _CACHE.get(master, {})
        complete = all(k in cached for k in PRESETS if k != key)
        res = determinism(master, cached if complete else None)
    else:
        start = time.perf_counter()
        res = PRESETS[key](master)
        res.seconds = time.perf_counter() - start
        _CACHE.setdefault(master, {})[key] = res.csv_texts()
    if out_dir is not None:
        for name, rows in res.artifacts.items():
            emit_csv(rows, Path(out_dir) / key / f"{name}.csv")
    return res
