"""Experiment harness: configured games, CSV traces with bound overlays, acceptance presets.

Config files are TOML with three flat tables and an optional fourth::

    [learner]        # name plus that learner's parameters
    name = "osd"
    policy = "decaying"
    D = 2.0
    L = 1.0
    set = "box"
    lo = [-1.0]
    hi = [1.0]

    [environment]    # name plus that environment's parameters
    name = "ftl_failure"

    [run]
    T = 100
    seeds = [0]                 # or: n_seeds = 10 and master_seed = 7
    competitor = "fixed"        # fixed | grid | vertex | mean | best_arm
    competitor_value = [0.0]
    out = "runs/ftl_failure"    # directory for per-seed CSVs

    [bound]          # optional; name plus the metadata that bound needs
    name = "osd_decaying"
    D = 2.0
    L = 1.0

Every run seed ``s`` is expanded to the 64-bit environment seed
``SeedSequence(s).generate_state(1, uint64)[0]``; ``n_seeds`` seeds are the
first words of ``SeedSequence(master_seed).spawn(n_seeds)``.
"""

from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import bandit, environments as envs
from .core import Absolute, Linear, LossSpec, SquaredDistance, evaluate, subgradient
from .first_order import OSD, AdaGrad, AdaptiveGlobal, Constant, Decaying, StronglyConvex
from .ftrl import (
    AdaHedge,
    FollowTheLeader,
    FTRLEntropic,
    FTRLLinear,
    Hint,
    OptimisticFTRL,
    Quadratized,
    constant_schedule,
    sqrt_schedule,
)
from .geometry import All, Box, L2Ball, Simplex
from .mirror_descent import EG, PNormOMD
from .parameter_free import KT, KTOCO, BettingExperts, CoordKT, DirMag, Shifted
from .second_order import ONS

CSV_HEADER = "round,loss,cum_loss,competitor_cum_loss,regret,bound"
EXIT_PASS, EXIT_VIOLATION, EXIT_CONFIG = 0, 1, 2
BOUND_RTOL = 1e-9


class ConfigError(ValueError):
    """Invalid or incomplete experiment configuration."""


class MissingMetadata(ConfigError):
    """A bound curve needs a quantity the run did not provide."""


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Row:
    round: int
    loss: float
    cum_loss: float
    competitor_cum_loss: float
    regret: float
    bound: float


def fmt(v: float) -> str:
    """Positional decimal with 12 significant digits."""
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if v == 0.0:
        return "0"
    return np.format_float_positional(v, precision=12, unique=False, fractional=False, trim="-")


def csv_text(rows: Sequence[Row]) -> str:
    lines = [CSV_HEADER]
    for r in rows:
        lines.append(
            f"{int(r.round)},{fmt(r.loss)},{fmt(r.cum_loss)},{fmt(r.competitor_cum_loss)},{fmt(r.regret)},{fmt(r.bound)}"
        )
    return "\n".join(lines) + "\n"


def emit_csv(rows: Sequence[Row], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(csv_text(rows))
    return path


def make_rows(losses, competitor_cum, bound) -> List[Row]:
    losses = np.asarray(losses, dtype=float)
    cum = np.cumsum(losses)
    comp = np.asarray(competitor_cum, dtype=float)
    bound = np.broadcast_to(np.asarray(bound, dtype=float), losses.shape)
    return [
        Row(t + 1, losses[t], cum[t], comp[t], cum[t] - comp[t], bound[t]) for t in range(losses.shape[0])
    ]


# ---------------------------------------------------------------------------
# Bound curves
# ---------------------------------------------------------------------------


@dataclass
class BoundSpec:
    name: str = "none"
    params: Dict[str, object] = field(default_factory=dict)


@dataclass
class RunMeta:
    """Per-run quantities available to bound curves."""

    T: int
    grad_sq_l2: Optional[np.ndarray] = None  # ||g_t||_2^2 per round
    grad_sq_inf: Optional[np.ndarray] = None  # ||g_t||_inf^2 per round
    extra: Dict[str, object] = field(default_factory=dict)


def _need(spec: BoundSpec, meta: RunMeta, key: str):
    if key in spec.params:
        return spec.params[key]
    if key in meta.extra:
        return meta.extra[key]
    raise MissingMetadata(f"bound {spec.name!r} needs {key!r}")


def _need_series(meta: RunMeta, attr: str, name: str) -> np.ndarray:
    v = getattr(meta, attr)
    if v is None:
        raise MissingMetadata(f"bound {name!r} needs the per-round gradients of a run")
    return np.asarray(v, dtype=float)


def ucb_curve(t: np.ndarray, alpha: float, gaps: Sequence[float]) -> np.ndarray:
    gaps = [float(g) for g in gaps]
    const = alpha / (alpha - 2.0) * sum(gaps)
    return const + sum(8.0 * alpha / g for g in gaps if g > 0) * np.log(t)


# name -> (direction, curve builder)
def _bound_table() -> Dict[str, Tuple[str, Callable[[BoundSpec, RunMeta, np.ndarray], np.ndarray]]]:
    def sqrt2(x):
        return math.sqrt(2.0) * x

    return {
        "none": ("upper", lambda s, m, t: np.full(t.shape, np.nan)),
        "ftl_guessing": ("upper", lambda s, m, t: 4.0 + 4.0 * np.log(t)),
        "ftl_failure_floor": ("lower", lambda s, m, t: t - 2.0),
        "osd_decaying": ("upper", lambda s, m, t: 1.5 * float(_need(s, m, "D")) * float(_need(s, m, "L")) * np.sqrt(t)),
        "adagrad_norm": (
            "upper",
            lambda s, m, t: sqrt2(float(_need(s, m, "D"))) * np.sqrt(np.cumsum(_need_series(m, "grad_sq_l2", s.name))),
        ),
        "eg": ("upper", lambda s, m, t: math.sqrt(2.0) / 2.0 * np.sqrt(t * math.log(float(_need(s, m, "d"))))),
        "eg_eta": (
            "upper",
            lambda s, m, t: math.log(float(_need(s, m, "d"))) / float(_need(s, m, "eta"))
            + float(_need(s, m, "eta")) / 2.0 * np.cumsum(_need_series(m, "grad_sq_inf", s.name)),
        ),
        "adahedge": (
            "upper",
            lambda s, m, t: 2.0
            * np.sqrt((4.0 + math.log(float(_need(s, m, "d")))) * np.cumsum(_need_series(m, "grad_sq_inf", s.name))),
        ),
        "kl_experts": (
            "upper",
            lambda s, m, t: np.sqrt(4.0 * t * (float(_need(s, m, "KL")) + 0.5 * math.log(2.0))),
        ),
        "vaw": (
            "upper",
            lambda s, m, t: float(_need(s, m, "lam")) / 2.0 * float(_need(s, m, "u_norm")) ** 2
            + float(_need(s, m, "d"))
            * float(_need(s, m, "Y")) ** 2
            / 2.0
            * np.log1p(float(_need(s, m, "R")) ** 2 * t / (float(_need(s, m, "lam")) * float(_need(s, m, "d")))),
        ),
        "ucb": ("upper", lambda s, m, t: ucb_curve(t, float(_need(s, m, "alpha")), _need(s, m, "gaps"))),
        "etc": (
            "upper",
            lambda s, m, t: np.full(t.shape, bandit.etc_bound(float(_need(s, m, "gap")), int(_need(s, m, "T")))),
        ),
        "exp3": (
            "upper",
            lambda s, m, t: sqrt2(float(s.params.get("Linf", 1.0)))
            * np.sqrt(float(_need(s, m, "d")) * t * math.log(float(_need(s, m, "d")))),
        ),
        "tsallis": ("upper", lambda s, m, t: 4.0 * np.sqrt(float(_need(s, m, "d")) * t)),
    }


BOUNDS = _bound_table()


def bound_direction(spec: BoundSpec) -> str:
    if spec.name not in BOUNDS:
        raise ConfigError(f"unknown bound {spec.name!r}")
    return BOUNDS[spec.name][0]


def bound_curve(spec: BoundSpec, meta: RunMeta) -> np.ndarray:
    """Bound value after each prefix ``t = 1..T``."""
    if spec.name not in BOUNDS:
        raise ConfigError(f"unknown bound {spec.name!r}")
    t = np.arange(1, meta.T + 1, dtype=float)
    return np.asarray(BOUNDS[spec.name][1](spec, meta, t), dtype=float)


def within(value: float, bound: float, direction: str, rtol: float = BOUND_RTOL) -> bool:
    if math.isnan(bound):
        return True
    slack = rtol * max(1.0, abs(bound))
    return value <= bound + slack if direction == "upper" else value >= bound - slack


# ---------------------------------------------------------------------------
# Registries
# ---------------------------------------------------------------------------


def _vec(p: dict, key: str) -> np.ndarray:
    return np.asarray(p[key], dtype=float).reshape(-1)


def _feasible(p: dict):
    kind = p.get("set", "all")
    if kind == "all":
        return All(int(p["dim"]))
    if kind == "ball":
        return L2Ball(float(p.get("radius", 1.0)), int(p["dim"]))
    if kind == "box":
        return Box(_vec(p, "lo"), _vec(p, "hi"))
    if kind == "simplex":
        return Simplex(int(p["dim"]))
    raise ConfigError(f"unknown set {kind!r}")


def _policy(p: dict):
    kind = p.get("policy")
    if kind == "constant":
        return Constant(float(p["eta"]))
    if kind == "decaying":
        return Decaying(float(p["D"]), float(p["L"]))
    if kind == "adaptive":
        return AdaptiveGlobal(float(p["D"]))
    if kind == "strongly_convex":
        return StronglyConvex(float(p["mu"]))
    raise ConfigError(f"unknown step-size policy {kind!r}")


def _bettor(p: dict, T: int):
    kind = p.get("bettor", "kt")
    if kind == "kt":
        return KT()
    if kind == "shifted":
        return Shifted(int(p.get("horizon", T)))
    raise ConfigError(f"unknown bettor {kind!r}")


_SET_KEYS = {"set", "dim", "radius", "lo", "hi"}

# name -> (allowed parameter names, factory(params, T))
LEARNERS: Dict[str, Tuple[set, Callable[[dict, int], object]]] = {
    "ftl": (_SET_KEYS, lambda p, T: FollowTheLeader(_feasible(p))),
    "quadratized": ({"dim", "mu"}, lambda p, T: Quadratized(int(p["dim"]), float(p["mu"]))),
    "osd": (_SET_KEYS | {"policy", "eta", "D", "L", "mu"}, lambda p, T: OSD(_feasible(p), _policy(p))),
    "adagrad": ({"lo", "hi"}, lambda p, T: AdaGrad(Box(_vec(p, "lo"), _vec(p, "hi")))),
    "eg": ({"dim", "eta"}, lambda p, T: EG(int(p["dim"]), float(p["eta"]))),
    "pnorm": ({"dim", "p", "eta"}, lambda p, T: PNormOMD(int(p["dim"]), float(p["p"]), float(p["eta"]))),
    "ftrl_linear": (
        _SET_KEYS | {"lam", "lam_scale"},
        lambda p, T: FTRLLinear(
            _feasible(p), constant_schedule(float(p["lam"])) if "lam" in p else sqrt_schedule(float(p.get("lam_scale", 1.0)))
        ),
    ),
    "ftrl_entropic": (
        {"dim", "alpha", "Linf"},
        lambda p, T: FTRLEntropic(int(p["dim"]), float(p.get("alpha", 1.0)), float(p.get("Linf", 1.0))),
    ),
    "adahedge": ({"dim", "alpha"}, lambda p, T: AdaHedge(int(p["dim"]), p.get("alpha"))),
    "optimistic_ftrl": (
        _SET_KEYS | {"hint", "M", "L", "lam"},
        lambda p, T: OptimisticFTRL(
            _feasible(p),
            Hint(p.get("hint", "zero")),
            constant_schedule(float(p["lam"])) if "lam" in p else None,
            p.get("M"),
            p.get("L"),
        ),
    ),
    "ons": (_SET_KEYS | {"lam", "mu"}, lambda p, T: ONS(_feasible(p), float(p["lam"]), float(p["mu"]))),
    "kt_oco": ({"eps", "bettor", "horizon"}, lambda p, T: KTOCO(float(p.get("eps", 1.0)), _bettor(p, T))),
    "coord_kt": ({"dim", "eps"}, lambda p, T: CoordKT(int(p["dim"]), p.get("eps"))),
    "dir_mag": ({"dim", "eps"}, lambda p, T: DirMag(int(p["dim"]), float(p.get("eps", 1.0)))),
    "betting_experts": (
        {"dim", "bettor", "horizon", "eps"},
        lambda p, T: BettingExperts(int(p["dim"]), None, _bettor(p, T), float(p.get("eps", 1.0))),
    ),
}

BANDIT_LEARNERS = {
    "exp3": {"eta"},
    "explore_mix": {"eta", "alpha"},
    "tsallis": {"eta", "q"},
    "ucb": {"alpha"},
    "etc": {"m"},
}


def _fixed_loss(p: dict) -> LossSpec:
    kind = p.get("kind")
    scale = float(p.get("scale", 1.0))
    if kind == "absolute":
        return Absolute(float(p["y"]), scale)
    if kind == "squared":
        return SquaredDistance(p["y"], scale)
    if kind == "linear":
        return Linear(_vec(p, "g"), scale)
    raise ConfigError(f"unknown fixed loss kind {kind!r}")


def _arms(p: dict):
    family = p.get("family", "bernoulli")
    means = [float(m) for m in p["means"]]
    if family == "bernoulli":
        return tuple(bandit.Bernoulli(m) for m in means)
    if family == "gaussian":
        return tuple(bandit.Gaussian(m, float(p.get("sigma", 1.0))) for m in means)
    raise ConfigError(f"unknown arm family {family!r}")


# name -> (allowed parameter names, factory(params, T, seed))
ENVIRONMENTS: Dict[str, Tuple[set, Callable[[dict, int, int], object]]] = {
    "guessing_game": (
        {"ys"},
        lambda p, T, s: envs.GuessingGame(tuple(p["ys"])) if "ys" in p else envs.GuessingGame.random(T, s),
    ),
    "ftl_failure": (set(), lambda p, T, s: envs.FtlFailure()),
    "rademacher_olo": (
        {"L", "D", "z"},
        lambda p, T, s: envs.RademacherOlo(float(p["L"]), float(p["D"]), _vec(p, "z"), s),
    ),
    "iid_linear": ({"mean", "sigma"}, lambda p, T, s: envs.IidLinear(_vec(p, "mean"), float(p.get("sigma", 1.0)), s)),
    "adversarial_linear": (
        {"dim", "norm", "L", "block"},
        lambda p, T, s: envs.AdversarialLinear(
            int(p["dim"]), p.get("norm", "l2"), float(p.get("L", 1.0)), int(p.get("block", 64)), s
        ),
    ),
    "stochastic_arms": ({"family", "means", "sigma"}, lambda p, T, s: envs.StochasticArms(_arms(p), s)),
    "fixed": ({"kind", "y", "g", "scale"}, lambda p, T, s: envs.FixedConvex(_fixed_loss(p))),
}

COMPETITORS = {"fixed", "grid", "vertex", "mean", "best_arm"}


# ---------------------------------------------------------------------------
# Config
# ---------------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    learner: str
    learner_params: dict
    environment: str
    environment_params: dict
    T: int
    seeds: List[int]
    competitor: str = "fixed"
    competitor_params: dict = field(default_factory=dict)
    bound: BoundSpec = field(default_factory=BoundSpec)
    out: Optional[str] = None

    @property
    def is_bandit(self) -> bool:
        return self.learner in BANDIT_LEARNERS


def split_seeds(master: int, n: int) -> List[int]:
    """``n`` independent 64-bit seeds derived from ``master``."""
    children = np.random.SeedSequence(int(master)).spawn(int(n))
    return [int(c.generate_state(1, np.uint64)[0]) for c in children]


def env_seed(seed: int) -> int:
    return int(np.random.SeedSequence(int(seed)).generate_state(1, np.uint64)[0])


def _split_section(raw: dict, name: str) -> Tuple[str, dict]:
    sec = raw.get(name)
    if not isinstance(sec, dict) or "name" not in sec:
        raise ConfigError(f"config needs a [{name}] table with a name")
    params = {k: v for k, v in sec.items() if k != "name"}
    return str(sec["name"]), params


def config_from_dict(raw: dict) -> ExperimentConfig:
    unknown = set(raw) - {"learner", "environment", "run", "bound"}
    if unknown:
        raise ConfigError(f"unknown config tables {sorted(unknown)}")
    lname, lparams = _split_section(raw, "learner")
    ename, eparams = _split_section(raw, "environment")
    if lname in LEARNERS:
        allowed = LEARNERS[lname][0]
    elif lname in BANDIT_LEARNERS:
        allowed = BANDIT_LEARNERS[lname]
    else:
        raise ConfigError(f"unknown learner {lname!r}")
    bad = set(lparams) - allowed
    if bad:
        raise ConfigError(f"learner {lname!r} has no parameters {sorted(bad)}")
    if ename not in ENVIRONMENTS:
        raise ConfigError(f"unknown environment {ename!r}")
    bad = set(eparams) - ENVIRONMENTS[ename][0]
    if bad:
        raise ConfigError(f"environment {ename!r} has no parameters {sorted(bad)}")
    if (lname in BANDIT_LEARNERS) != (ename == "stochastic_arms"):
        raise ConfigError("bandit learners run exactly on the stochastic_arms environment")

    run = raw.get("run")
    if not isinstance(run, dict):
        raise ConfigError("config needs a [run] table")
    T = run.get("T")
    if not isinstance(T, int) or T < 1:
        raise ConfigError("run.T must be an integer >= 1")
    if "seeds" in run:
        seeds = [int(s) for s in run["seeds"]]
    elif "n_seeds" in run:
        seeds = split_seeds(int(run.get("master_seed", 0)), int(run["n_seeds"]))
    else:
        seeds = [0]
    if not seeds:
        raise ConfigError("need at least one seed")
    comp = run.get("competitor", "best_arm" if lname in BANDIT_LEARNERS else "fixed")
    if comp not in COMPETITORS:
        raise ConfigError(f"unknown competitor {comp!r}")
    if (comp == "best_arm") != (lname in BANDIT_LEARNERS):
        raise ConfigError("the best_arm competitor goes with bandit learners only")
    cparams = {k: v for k, v in run.items() if k.startswith(("competitor_", "grid_"))}
    if comp == "fixed" and "competitor_value" not in cparams:
        raise ConfigError("competitor 'fixed' needs run.competitor_value")
    if comp == "grid" and not {"grid_lo", "grid_hi", "grid_n"} <= set(cparams):
        raise ConfigError("competitor 'grid' needs run.grid_lo, run.grid_hi and run.grid_n")
    extra = set(run) - {"T", "seeds", "n_seeds", "master_seed", "competitor", "out"} - set(cparams)
    if extra:
        raise ConfigError(f"unknown run keys {sorted(extra)}")

    bound = BoundSpec()
    if "bound" in raw:
        bname, bparams = _split_section(raw, "bound")
        if bname not in BOUNDS:
            raise ConfigError(f"unknown bound {bname!r}")
        bound = BoundSpec(bname, bparams)
    return ExperimentConfig(
        learner=lname,
        learner_params=lparams,
        environment=ename,
        environment_params=eparams,
        T=T,
        seeds=seeds,
        competitor=comp,
        competitor_params=cparams,
        bound=bound,
        out=run.get("out"),
    )


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    return config_from_dict(raw)


# ---------------------------------------------------------------------------
# Running games
# ---------------------------------------------------------------------------


def losses_on_points(loss: LossSpec, U: np.ndarray) -> np.ndarray:
    """Loss at each row of ``U``."""
    if isinstance(loss, Linear):
        return loss.scale * (U @ loss.g)
    if isinstance(loss, SquaredDistance):
        diff = U - loss.y
        return loss.scale * np.einsum("ij,ij->i", diff, diff)
    if isinstance(loss, Absolute):
        return loss.scale * np.abs(U[:, 0] - loss.y)
    return np.array([evaluate(loss, u) for u in U])


def grid_points(lo, hi, n: int, dim: int) -> np.ndarray:
    lo = np.broadcast_to(np.asarray(lo, dtype=float), (dim,))
    hi = np.broadcast_to(np.asarray(hi, dtype=float), (dim,))
    axes = [np.linspace(lo[i], hi[i], int(n)) for i in range(dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh], axis=1)


@dataclass
class SeedRun:
    seed: int
    rows: List[Row]
    final_regret: float
    final_bound: float


def _competitor_curve(cfg: ExperimentConfig, losses: List[LossSpec], dim: int) -> np.ndarray:
    p = cfg.competitor_params
    if cfg.competitor == "fixed":
        u = np.asarray(p["competitor_value"], dtype=float).reshape(-1)
        return np.cumsum([evaluate(l, u) for l in losses])
    if cfg.competitor == "mean":
        # running best constant for squared losses is the prefix mean
        ys = np.array([np.asarray(l.y, dtype=float) for l in losses])
        out = np.empty(len(losses))
        for t in range(len(losses)):
            m = ys[: t + 1].mean(axis=0)
            out[t] = sum(evaluate(l, m) for l in losses[: t + 1])
        return out
    if cfg.competitor == "vertex":
        U = np.eye(dim)
    else:
        U = grid_points(p["grid_lo"], p["grid_hi"], p["grid_n"], dim)
    cum = np.zeros(U.shape[0])
    out = np.empty(len(losses))
    for t, l in enumerate(losses):
        cum += losses_on_points(l, U)
        out[t] = cum.min()
    return out


def run_seed(cfg: ExperimentConfig, seed: int) -> SeedRun:
    """Play one full game and build its CSV rows."""
    es = env_seed(seed)
    env = ENVIRONMENTS[cfg.environment][1](cfg.environment_params, cfg.T, es)
    if cfg.is_bandit:
        return _run_bandit(cfg, env, seed, es)
    learner = LEARNERS[cfg.learner][1](cfg.learner_params, cfg.T)
    losses, values, gsq2, gsqi = [], [], [], []
    for t in range(1, cfg.T + 1):
        loss = envs.next_loss(env, t)
        x = learner.predict()
        values.append(evaluate(loss, x))
        learner.observe(loss)
        g = subgradient(loss, x)
        gsq2.append(float(g @ g))
        gsqi.append(float(np.max(np.abs(g))) ** 2)
        losses.append(loss)
    comp = _competitor_curve(cfg, losses, learner.dim)
    meta = RunMeta(cfg.T, np.array(gsq2), np.array(gsqi))
    bound = bound_curve(cfg.bound, meta)
    rows = make_rows(values, comp, bound)
    return SeedRun(seed, rows, rows[-1].regret, float(bound[-1]))


def _run_bandit(cfg: ExperimentConfig, env, seed: int, es: int) -> SeedRun:
    arms = env.arms
    means = env.means
    rng = np.random.Generator(np.random.PCG64(es))
    tables = bandit.draw_tables(rng, 1, cfg.T, arms)
    p = cfg.learner_params
    d = len(arms)
    if cfg.learner == "exp3":
        res = bandit.simulate_exp3(arms, tables, float(p.get("eta", math.sqrt(2 * math.log(d) / (d * cfg.T)))))
    elif cfg.learner == "explore_mix":
        res = bandit.simulate_exp3(arms, tables, float(p["eta"]), float(p["alpha"]))
    elif cfg.learner == "tsallis":
        res = bandit.simulate_tsallis(arms, tables, float(p.get("eta", 1.0 / math.sqrt(cfg.T))), float(p.get("q", 0.5)))
    elif cfg.learner == "ucb":
        res = bandit.simulate_ucb(arms, tables, float(p.get("alpha", 3.0)))
    else:
        res = bandit.simulate_etc(arms, tables, int(p["m"]))
    # the loss column is the mean of the pulled arm, so regret is pseudo-regret
    pulled = means[res.arms[0]]
    comp = np.arange(1, cfg.T + 1) * means.min()
    meta = RunMeta(cfg.T, extra={"d": d, "T": cfg.T, "gaps": list(means - means.min())})
    bound = bound_curve(cfg.bound, meta)
    rows = make_rows(pulled, comp, bound)
    return SeedRun(seed, rows, rows[-1].regret, float(bound[-1]))


@dataclass
class Summary:
    mean_final_regret: float
    max_final_regret: float
    min_final_regret: float
    final_bound: float
    passed: bool
    paths: List[Path]


def _csv_path(cfg: ExperimentConfig, out: Optional[str], seed: int, n: int) -> Optional[Path]:
    if out is None:
        return None
    p = Path(out)
    if p.suffix == ".csv":
        return p if n == 1 else p.with_name(f"{p.stem}_seed{seed}.csv")
    return p / f"{cfg.learner}_{cfg.environment}_seed{seed}.csv"


def run_experiment(cfg: ExperimentConfig, out: Optional[str] = None, jobs: int = 1) -> Summary:
    """Play every seed; ``jobs > 1`` fans seeds out to worker processes.

    Each game is sequential and seeded on its own, and results are collected
    in seed order, so the output does not depend on ``jobs``.
    """
    out = cfg.out if out is None else out
    if jobs < 1:
        raise ValueError("jobs must be at least 1")
    if jobs == 1 or len(cfg.seeds) == 1:
        runs = [run_seed(cfg, s) for s in cfg.seeds]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            runs = list(pool.map(run_seed, [cfg] * len(cfg.seeds), cfg.seeds))
    paths = []
    for r in runs:
        path = _csv_path(cfg, out, r.seed, len(runs))
        if path is not None:
            paths.append(emit_csv(r.rows, path))
    finals = np.array([r.final_regret for r in runs])
    bound = runs[0].final_bound
    direction = bound_direction(cfg.bound)
    if cfg.is_bandit:
        # pseudo-regret bounds hold in expectation
        passed = within(float(finals.mean()), bound, direction)
    else:
        passed = all(within(r.final_regret, r.final_bound, direction) for r in runs)
    return Summary(float(finals.mean()), float(finals.max()), float(finals.min()), bound, passed, paths)


def static_bound(cfg: ExperimentConfig) -> np.ndarray:
    """Bound curve from configuration metadata alone."""
    extra: Dict[str, object] = {"T": cfg.T}
    if cfg.environment == "stochastic_arms":
        arms = _arms(cfg.environment_params)
        means = np.array([a.mean for a in arms])
        extra.update(d=len(arms), gaps=list(means - means.min()))
    if "dim" in cfg.learner_params:
        extra.setdefault("d", cfg.learner_params["dim"])
    return bound_curve(cfg.bound, RunMeta(cfg.T, extra=extra))


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seeds = [args.seed]
    s = run_experiment(cfg, args.out, args.jobs)
    verdict = "PASS" if s.passed else "FAIL"
    print(
        f"{verdict} {cfg.learner} on {cfg.environment}: seeds={len(cfg.seeds)} "
        f"mean_regret={fmt(s.mean_final_regret)} max_regret={fmt(s.max_final_regret)} "
        f"bound={fmt(s.final_bound)} ({bound_direction(cfg.bound)})"
    )
    for p in s.paths:
        print(f"wrote {p}")
    return EXIT_PASS if s.passed else EXIT_VIOLATION


def _cmd_bounds(args) -> int:
    cfg = load_config(args.config)
    curve = static_bound(cfg)
    sys.stdout.write("round,bound\n")
    for t in sorted({1, max(cfg.T // 10, 1), max(cfg.T // 2, 1), cfg.T}):
        sys.stdout.write(f"{t},{fmt(curve[t - 1])}\n")
    return EXIT_PASS


def _cmd_accept(args) -> int:
    from . import acceptance

    try:
        keys = acceptance.resolve(args.suite)
    except KeyError as exc:
        raise ConfigError(str(exc)) from exc
    failed = False
    for key in keys:
        res = acceptance.run_criterion(key, master_seed=args.master_seed, out_dir=args.out)
        print(res.line())
        failed |= res.status == "FAIL"
    return EXIT_VIOLATION if failed else EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="artifact", description="Online learning experiments with bound overlays.")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="play a configured game and write per-seed CSVs")
    r.add_argument("config")
    r.add_argument("--seed", type=int)
    r.add_argument("--out")
    r.add_argument("--jobs", type=int, default=1, help="worker processes for seed fan-out")
    r.set_defaults(func=_cmd_run)
    b = sub.add_parser("bounds", help="print the configured bound curve at a few horizons")
    b.add_argument("config")
    b.set_defaults(func=_cmd_bounds)
    a = sub.add_parser("accept", help="run an acceptance preset, or 'all'")
    a.add_argument("suite")
    a.add_argument("--master-seed", type=int, default=None)
    a.add_argument("--out", default=None, help="directory for CSV artifacts")
    a.set_defaults(func=_cmd_accept)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, KeyError, TypeError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
