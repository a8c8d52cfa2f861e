"""Tabular average-reward double Q-learning over discretized world states.

States are keyed by mapping each village's continuous level into a small
number of bands (a red band at the bottom, a green band at the top, and a
configurable count of evenly sized bands in between) plus the truck position
and load.  Two lazily grown Q-tables are updated in random alternation
against a running average-reward estimate; action choice is always
restricted to the epsilon-admissible set.

The constrained trainer additionally shapes rewards with a learned penalty
weight: every step whose equity falls below ``tau`` costs ``lam``, and after
each episode ``lam`` grows with the episode's violation count but is
projected so that violation-free episodes always remain preferable.
"""
from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Hashable, NamedTuple, Sequence

from .admissible import admissible_from, score_actions
from .env import Action, EnvConfig, Episode, WorldState

__all__ = [
    "LevelParams",
    "LevelisedState",
    "levelise",
    "Hyperparams",
    "QModel",
    "LagrangeState",
    "lagrange_update",
    "sample_policy",
    "double_q_update",
    "EpisodeStats",
    "train_eadql",
    "train_ecadql",
    "save_model",
    "load_model",
]


@dataclass(frozen=True)
class LevelParams:
    """Discretization bands for per-inhabitant water levels.

    ``min_requirement`` and ``desired`` set the band boundaries:
    red bound = max(0, min_requirement - (desired + min_requirement) / 2),
    green bound = desired + (desired + min_requirement) / 2.  Both can be
    overridden directly.  ``hidden`` bands split the space in between.
    """

    min_requirement: float = 100.0
    desired: float = 350.0
    hidden: int = 5
    red_override: float | None = None
    green_override: float | None = None

    def __post_init__(self) -> None:
        if not 0.0 < self.min_requirement < self.desired:
            raise ValueError("need 0 < min_requirement < desired")
        if self.hidden < 1:
            raise ValueError("need at least one hidden band")
        if self.red_bound >= self.green_bound:
            raise ValueError("red bound must lie below the green bound")

    @property
    def red_bound(self) -> float:
        if self.red_override is not None:
            return self.red_override
        half = (self.desired + self.min_requirement) / 2.0
        return max(0.0, self.min_requirement - half)

    @property
    def green_bound(self) -> float:
        if self.green_override is not None:
            return self.green_override
        return self.desired + (self.desired + self.min_requirement) / 2.0

    @property
    def top_level(self) -> int:
        return self.hidden + 1


class LevelisedState(NamedTuple):
    """Discrete Q-table key: level band per village, truck position, load."""

    levels: tuple[int, ...]
    position: int
    load: int


def levelise(state: WorldState, params: LevelParams) -> LevelisedState:
    """Map a continuous state onto its discrete Q-table key."""
    red = params.red_bound
    green = params.green_bound
    width = (green - red) / params.hidden
    bands = []
    for x in state.levels:
        if x <= red:
            band = 0
        elif x > green:
            band = params.hidden + 1
        else:
            band = math.ceil((x - red) / width)
            if band < 1:
                band = 1
            elif band > params.hidden:
                band = params.hidden
        bands.append(band)
    return LevelisedState(tuple(bands), state.position, state.load)


@dataclass(frozen=True)
class Hyperparams:
    alpha: float = 0.03  # Q-table step size
    beta: float = 0.01  # average-reward estimator step size
    alpha_lambda: float = 0.0003  # penalty-weight step size
    beta_v: float = 0.001  # violation-ratio estimator step size
    beta_r: float = 0.001  # episode-reward estimator step size
    epsilon: float = 0.1  # admissibility slack
    tau: float = 0.7  # equity floor for the constrained trainer
    episodes: int = 30_000
    p0: float = 0.3  # initial exploration rate, decays linearly to 0
    levels: LevelParams = field(default_factory=LevelParams)
    explore_admissible_only: bool = False

    def __post_init__(self) -> None:
        for name in ("alpha", "beta", "alpha_lambda", "beta_v", "beta_r"):
            rate = getattr(self, name)
            if not 0.0 < rate < 1.0:
                raise ValueError(f"{name} must be in (0, 1)")
        if self.epsilon < 0.0:
            raise ValueError("epsilon must be >= 0")
        if not 0.0 <= self.tau < 1.0:
            # tau = 0 disables the constraint (no state scores below zero).
            raise ValueError("tau must be in [0, 1)")
        if self.episodes < 0:
            raise ValueError("episodes must be >= 0")
        if not 0.0 <= self.p0 <= 1.0:
            raise ValueError("p0 must be in [0, 1]")


@dataclass(frozen=True)
class LagrangeState:
    """Penalty weight plus the slow estimates that bound it."""

    lam: float = 0.0
    reward_estimate: float = 0.0  # expected episode-average raw reward
    violation_estimate: float = 0.0  # expected per-step violation ratio

    def __post_init__(self) -> None:
        if self.lam < 0.0:
            raise ValueError("lam must be >= 0")


def lagrange_update(lag: LagrangeState, violations: int, alpha_lambda: float) -> LagrangeState:
    """Grow the penalty weight with the episode's violation count, projected.

    The projection caps ``lam`` at reward_estimate / violation_estimate so a
    violation-free episode always keeps a higher shaped return than any
    violating one; no cap applies while the violation estimate is zero.
    """
    if violations < 0:
        raise ValueError("violations must be >= 0")
    lam = lag.lam + alpha_lambda * violations
    if lag.violation_estimate > 0.0:
        bound = lag.reward_estimate / lag.violation_estimate
        if lam > bound:
            lam = bound
    return replace(lag, lam=lam)


class QModel:
    """Two lazily grown Q-tables plus the average-reward estimate."""

    def __init__(self, hyper: Hyperparams, kind: str = "eadql") -> None:
        self.hyper = hyper
        self.kind = kind
        self.qa: dict[tuple[Hashable, Action], float] = {}
        self.qb: dict[tuple[Hashable, Action], float] = {}
        self.avg_reward = 0.0
        self.lagrange: LagrangeState | None = None

    def state_key(self, state: WorldState) -> LevelisedState:
        return levelise(state, self.hyper.levels)

    def q_sum(self, key: Hashable, action: Action) -> float:
        k = (key, action)
        return self.qa.get(k, 0.0) + self.qb.get(k, 0.0)


def _argmax_q(model: QModel, key: Hashable, actions: Sequence[Action]) -> Action:
    """First action maximizing qa+qb, in the given deterministic order."""
    qa, qb = model.qa, model.qb
    best_action = actions[0]
    best_value = qa.get((key, best_action), 0.0) + qb.get((key, best_action), 0.0)
    for a in actions[1:]:
        v = qa.get((key, a), 0.0) + qb.get((key, a), 0.0)
        if v > best_value:
            best_value = v
            best_action = a
    return best_action


def sample_policy(
    model: QModel, state: WorldState, config: EnvConfig, epsilon: float | None = None
) -> Action:
    """Greedy choice of the model restricted to the admissible set."""
    eps = model.hyper.epsilon if epsilon is None else epsilon
    adm = admissible_from(score_actions(state, config), eps)
    return _argmax_q(model, model.state_key(state), [sa.action for sa in adm])


def double_q_update(
    model: QModel,
    key: Hashable,
    action: Action,
    next_key: Hashable,
    next_actions: Sequence[Action],
    reward: float,
    rng: random.Random,
) -> float:
    """One differential double-Q update; returns the TD error.

    ``next_actions`` is the admissible set the caller computed for the next
    state; the bootstrap maximizes the randomly selected companion table
    over exactly that set.
    """
    if not next_actions:
        raise ValueError("next_actions must not be empty")
    if rng.random() < 0.5:
        q_upd, q_sel = model.qa, model.qb
    else:
        q_upd, q_sel = model.qb, model.qa
    best = -math.inf
    for a in next_actions:
        v = q_sel.get((next_key, a), 0.0)
        if v > best:
            best = v
    k = (key, action)
    current = q_upd.get(k, 0.0)
    delta = reward - model.avg_reward + best - current
    if delta != 0.0:
        model.avg_reward += model.hyper.beta * delta
        q_upd[k] = current + model.hyper.alpha * delta
    return delta


class EpisodeStats(NamedTuple):
    """Per-episode training telemetry."""

    episode: int
    length: int
    reward_mean: float  # raw (pre-penalty) per-step mean
    violations: int
    exploration: float
    avg_reward_estimate: float
    lam: float
    reward_estimate: float
    violation_estimate: float
    clamped: bool


StepHook = Callable[[int, WorldState, Sequence, Sequence, Action, bool], None]


def train_eadql(
    config: EnvConfig,
    hyper: Hyperparams,
    seed: int,
    on_episode: Callable[[EpisodeStats], None] | None = None,
    step_hook: StepHook | None = None,
) -> QModel:
    """Train an epsilon-admissible average-reward double-Q policy."""
    return _train(config, hyper, seed, constrained=False, on_episode=on_episode, step_hook=step_hook)


def train_ecadql(
    config: EnvConfig,
    hyper: Hyperparams,
    seed: int,
    on_episode: Callable[[EpisodeStats], None] | None = None,
    step_hook: StepHook | None = None,
) -> QModel:
    """Train the constrained variant with penalty-shaped rewards."""
    return _train(config, hyper, seed, constrained=True, on_episode=on_episode, step_hook=step_hook)


def _train(
    config: EnvConfig,
    hyper: Hyperparams,
    seed: int,
    constrained: bool,
    on_episode: Callable[[EpisodeStats], None] | None,
    step_hook: StepHook | None,
) -> QModel:
    rng = random.Random(seed)
    if constrained:
        kind = "ecadql"
    else:
        kind = "adql" if hyper.epsilon >= 1.0 else "eadql"
    model = QModel(hyper, kind=kind)
    lag = LagrangeState()
    episode = Episode(config, rng=rng)
    eps = hyper.epsilon
    tau = hyper.tau
    n_episodes = hyper.episodes
    key_params = hyper.levels

    for o in range(n_episodes):
        p = hyper.p0 * (1.0 - o / n_episodes)
        state = episode.reset()
        key = levelise(state, key_params)
        scored = score_actions(state, config)
        steps = 0
        raw_sum = 0.0
        violations = 0
        while not episode.done:
            adm = admissible_from(scored, eps)
            if p > 0.0 and rng.random() < p:
                pool = adm if hyper.explore_admissible_only else scored
                action = pool[rng.randrange(len(pool))].action
                explored = True
            else:
                action = _argmax_q(model, key, [sa.action for sa in adm])
                explored = False
            if step_hook is not None:
                step_hook(o, state, scored, adm, action, explored)
            outcome = episode.step(action)
            reward = outcome.reward
            raw_sum += reward
            if constrained and reward < tau:
                violations += 1
                reward = reward - lag.lam
            next_state = outcome.next_state
            next_key = levelise(next_state, key_params)
            next_scored = score_actions(next_state, config)
            next_adm = admissible_from(next_scored, eps)
            double_q_update(
                model, key, action, next_key, [sa.action for sa in next_adm], reward, rng
            )
            state, key, scored = next_state, next_key, next_scored
            steps += 1

        clamped = False
        if constrained:
            v_hat = hyper.beta_v * (violations / steps) + (1.0 - hyper.beta_v) * lag.violation_estimate
            r_hat = hyper.beta_r * (raw_sum / steps) + (1.0 - hyper.beta_r) * lag.reward_estimate
            lag = LagrangeState(lag.lam, r_hat, v_hat)
            unclamped = lag.lam + hyper.alpha_lambda * violations
            lag = lagrange_update(lag, violations, hyper.alpha_lambda)
            clamped = lag.lam < unclamped
        if on_episode is not None:
            on_episode(
                EpisodeStats(
                    episode=o,
                    length=steps,
                    reward_mean=raw_sum / steps if steps else 0.0,
                    violations=violations,
                    exploration=p,
                    avg_reward_estimate=model.avg_reward,
                    lam=lag.lam,
                    reward_estimate=lag.reward_estimate,
                    violation_estimate=lag.violation_estimate,
                    clamped=clamped,
                )
            )
    if constrained:
        model.lagrange = lag
    return model


# ---------------------------------------------------------------------------
# Persistence

_FORMAT = "equiflow-qmodel"
_VERSION = 1


def _encode_state_key(key: LevelisedState) -> str:
    return f"{','.join(str(b) for b in key.levels)}|{key.position}|{key.load}"


def _decode_state_key(text: str) -> LevelisedState:
    bands, position, load = text.split("|")
    return LevelisedState(
        tuple(int(b) for b in bands.split(",")), int(position), int(load)
    )


def _encode_action(action: Action) -> str:
    return f"{action.destination},{action.dispense}"


def _decode_action(text: str) -> Action:
    dest, dispense = text.split(",")
    return Action(int(dest), int(dispense))


def _table_to_rows(table: dict) -> list[list]:
    rows = [
        [_encode_state_key(key), _encode_action(action), value]
        for (key, action), value in table.items()
    ]
    rows.sort(key=lambda row: (row[0], row[1]))
    return rows


def _rows_to_table(rows: list) -> dict:
    return {
        (_decode_state_key(key), _decode_action(action)): float(value)
        for key, action, value in rows
    }


def _level_params_to_dict(params: LevelParams) -> dict:
    out = {
        "min_requirement": params.min_requirement,
        "desired": params.desired,
        "hidden": params.hidden,
    }
    if params.red_override is not None:
        out["red_override"] = params.red_override
    if params.green_override is not None:
        out["green_override"] = params.green_override
    return out


def _level_params_from_dict(data: dict) -> LevelParams:
    return LevelParams(
        min_requirement=float(data["min_requirement"]),
        desired=float(data["desired"]),
        hidden=int(data["hidden"]),
        red_override=data.get("red_override"),
        green_override=data.get("green_override"),
    )


def hyper_to_dict(hyper: Hyperparams) -> dict:
    return {
        "alpha": hyper.alpha,
        "beta": hyper.beta,
        "alpha_lambda": hyper.alpha_lambda,
        "beta_v": hyper.beta_v,
        "beta_r": hyper.beta_r,
        "epsilon": hyper.epsilon,
        "tau": hyper.tau,
        "episodes": hyper.episodes,
        "p0": hyper.p0,
        "explore_admissible_only": hyper.explore_admissible_only,
        "levels": _level_params_to_dict(hyper.levels),
    }


def hyper_from_dict(data: dict) -> Hyperparams:
    return Hyperparams(
        alpha=float(data["alpha"]),
        beta=float(data["beta"]),
        alpha_lambda=float(data["alpha_lambda"]),
        beta_v=float(data["beta_v"]),
        beta_r=float(data["beta_r"]),
        epsilon=float(data["epsilon"]),
        tau=float(data["tau"]),
        episodes=int(data["episodes"]),
        p0=float(data["p0"]),
        explore_admissible_only=bool(data.get("explore_admissible_only", False)),
        levels=_level_params_from_dict(data["levels"]),
    )


def save_model(model: QModel, path: str | Path) -> None:
    """Write the model as JSON; loading reproduces evaluation bit-exactly."""
    doc = {
        "format": _FORMAT,
        "version": _VERSION,
        "kind": model.kind,
        "hyper": hyper_to_dict(model.hyper),
        "avg_reward": model.avg_reward,
        "lagrange": None
        if model.lagrange is None
        else {
            "lam": model.lagrange.lam,
            "reward_estimate": model.lagrange.reward_estimate,
            "violation_estimate": model.lagrange.violation_estimate,
        },
        "qa": _table_to_rows(model.qa),
        "qb": _table_to_rows(model.qb),
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> QModel:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != _FORMAT or doc.get("version") != _VERSION:
        raise ValueError(f"{path}: not a recognised model file")
    model = QModel(hyper_from_dict(doc["hyper"]), kind=doc["kind"])
    model.avg_reward = float(doc["avg_reward"])
    if doc.get("lagrange") is not None:
        lag = doc["lagrange"]
        model.lagrange = LagrangeState(
            lam=float(lag["lam"]),
            reward_estimate=float(lag["reward_estimate"]),
            violation_estimate=float(lag["violation_estimate"]),
        )
    model.qa = _rows_to_table(doc["qa"])
    model.qb = _rows_to_table(doc["qb"])
    return model
