"""Policy evaluation: greedy rollouts, aggregate statistics, CSV export.

Evaluation is always greedy (no exploration).  A run records the per-step
equity rewards and violation flags; the score of a run is the plain mean of
its rewards over the run's own length.  When many runs of different lengths
are averaged into one reward series, the series are first cropped to 1.2x a
reference run's length and the shorter ones padded by repeating their final
value -- scores and violation ratios are never computed on padded series.
"""
from __future__ import annotations

import csv
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence

from .admissible import (
    BehaviourParams,
    ScoredAction,
    admissible_from,
    best_scored,
    score_actions,
)
from .env import Action, EnvConfig, Episode, RandomReset, WorldState
from .qlearn import QModel, _argmax_q, levelise

__all__ = [
    "Trajectory",
    "RunMetrics",
    "Policy",
    "LocalPolicy",
    "ModelPolicy",
    "run_episode",
    "AggregateResult",
    "aggregate_runs",
    "normalize_series",
    "write_series_csv",
    "write_summary_csv",
    "write_compare_series_csv",
    "SummaryRow",
]


@dataclass
class Trajectory:
    """One evaluated episode: the action taken and the state it produced."""

    initial: WorldState
    actions: list[Action]
    rewards: list[float]
    violations: list[bool]
    states: list[WorldState]

    @property
    def length(self) -> int:
        return len(self.rewards)


@dataclass
class RunMetrics:
    score: float  # mean per-step reward over the original length
    violation_ratio: float
    final_distribution: tuple[float, ...]
    running_average: list[float]


class Policy(Protocol):
    name: str

    def choose(
        self, state: WorldState, scored: Sequence[ScoredAction], epsilon: float
    ) -> Action: ...


class LocalPolicy:
    """Greedy one-step equity maximizer; the non-learned baseline."""

    name = "local"

    def choose(
        self, state: WorldState, scored: Sequence[ScoredAction], epsilon: float
    ) -> Action:
        return best_scored(scored).action


class ModelPolicy:
    """Greedy Q-model policy restricted to the epsilon-admissible set."""

    def __init__(self, model: QModel, name: str | None = None) -> None:
        self.model = model
        self.name = name if name is not None else model.kind

    def choose(
        self, state: WorldState, scored: Sequence[ScoredAction], epsilon: float
    ) -> Action:
        adm = admissible_from(scored, epsilon)
        key = levelise(state, self.model.hyper.levels)
        return _argmax_q(self.model, key, [sa.action for sa in adm])


def run_episode(
    policy: Policy,
    config: EnvConfig,
    initial: WorldState,
    epsilon_eval: float,
    tau: float,
    max_steps: int = 100_000,
) -> tuple[Trajectory, RunMetrics]:
    """Roll the policy greedily from ``initial`` until the budget is delivered."""
    behaviour = BehaviourParams(epsilon_eval, tau)
    episode = Episode(config)
    state = episode.reset_to(initial)
    traj = Trajectory(initial=initial, actions=[], rewards=[], violations=[], states=[])
    while not episode.done:
        if traj.length >= max_steps:
            raise RuntimeError(f"episode exceeded {max_steps} steps without finishing")
        scored = score_actions(state, config)
        action = policy.choose(state, scored, epsilon_eval)
        chosen = next(sa for sa in scored if sa.action == action)
        best = best_scored(scored).successor_alignment
        if chosen.successor_alignment < best - epsilon_eval:
            raise AssertionError(
                f"policy {policy.name} chose an inadmissible action {action}"
            )
        outcome = episode.step(action)
        traj.actions.append(action)
        traj.rewards.append(outcome.reward)
        traj.violations.append(behaviour.violated_by(outcome.reward))
        traj.states.append(outcome.next_state)
        state = outcome.next_state
    return traj, compute_metrics(traj)


def compute_metrics(traj: Trajectory) -> RunMetrics:
    running: list[float] = []
    acc = 0.0
    for k, r in enumerate(traj.rewards, start=1):
        acc += r
        running.append(acc / k)
    n = traj.length
    return RunMetrics(
        score=running[-1] if n else 0.0,
        violation_ratio=sum(traj.violations) / n if n else 0.0,
        final_distribution=traj.states[-1].levels if n else traj.initial.levels,
        running_average=running,
    )


def normalize_series(
    series_list: Sequence[Sequence[float]], reference_length: int
) -> list[list[float]]:
    """Crop at floor(1.2 x reference length), then pad with each last value."""
    if not series_list or any(len(s) == 0 for s in series_list):
        raise ValueError("series list must be non-empty with non-empty series")
    if reference_length < 1:
        raise ValueError("reference_length must be >= 1")
    cap = (12 * reference_length) // 10
    cropped = [list(s[:cap]) for s in series_list]
    target = max(len(c) for c in cropped)
    return [c + [c[-1]] * (target - len(c)) for c in cropped]


@dataclass
class AggregateResult:
    mean_series: list[float]
    mean_score: float
    mean_violation_ratio: float
    mean_length: float
    reference_length: int
    reference_trajectory: Trajectory
    reference_metrics: RunMetrics
    runs: list[RunMetrics]


def aggregate_runs(
    policy: Policy,
    config: EnvConfig,
    n_runs: int,
    seed: int,
    epsilon_eval: float,
    tau: float,
    reference_initial: WorldState,
) -> AggregateResult:
    """Evaluate over random initial states; per-run seeds derive from ``seed``.

    The reference run from ``reference_initial`` sets the series crop length.
    Metrics are averaged over original (uncropped, unpadded) run lengths.
    """
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    ref_traj, ref_metrics = run_episode(policy, config, reference_initial, epsilon_eval, tau)
    reset = config.reset_mode if isinstance(config.reset_mode, RandomReset) else RandomReset()
    master = random.Random(seed)
    run_seeds = [master.randrange(2**63) for _ in range(n_runs)]

    series: list[list[float]] = []
    runs: list[RunMetrics] = []
    lengths: list[int] = []
    for run_seed in run_seeds:
        rng = random.Random(run_seed)
        levels = tuple(rng.uniform(reset.low, reset.high) for _ in range(config.n_villages))
        initial = WorldState(levels, -1, config.capacity, 0)
        traj, metrics = run_episode(policy, config, initial, epsilon_eval, tau)
        series.append(traj.rewards)
        runs.append(metrics)
        lengths.append(traj.length)

    normalized = normalize_series(series, ref_traj.length)
    mean_series = [sum(col) / n_runs for col in zip(*normalized)]
    return AggregateResult(
        mean_series=mean_series,
        mean_score=sum(m.score for m in runs) / n_runs,
        mean_violation_ratio=sum(m.violation_ratio for m in runs) / n_runs,
        mean_length=sum(lengths) / n_runs,
        reference_length=ref_traj.length,
        reference_trajectory=ref_traj,
        reference_metrics=ref_metrics,
        runs=runs,
    )


# ---------------------------------------------------------------------------
# CSV export

@dataclass
class SummaryRow:
    policy: str
    epsilon_train: float
    epsilon_eval: float
    tau: float
    score: float
    violation_ratio: float
    episode_length: float
    seed: int


def write_series_csv(path: str | Path, traj: Trajectory, metrics: RunMetrics) -> None:
    n_villages = len(traj.initial.levels)
    header = ["step", "reward", "running_average", "violation", "position", "load"]
    header += [f"x{i}" for i in range(n_villages)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(traj.length):
            state = traj.states[i]
            writer.writerow(
                [
                    i + 1,
                    repr(traj.rewards[i]),
                    repr(metrics.running_average[i]),
                    int(traj.violations[i]),
                    state.position,
                    state.load,
                ]
                + [repr(x) for x in state.levels]
            )


def write_summary_csv(path: str | Path, rows: Sequence[SummaryRow]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "policy",
                "epsilon_train",
                "epsilon_eval",
                "tau",
                "score",
                "violation_ratio",
                "episode_length",
                "seed",
            ]
        )
        for row in rows:
            writer.writerow(
                [
                    row.policy,
                    repr(row.epsilon_train),
                    repr(row.epsilon_eval),
                    repr(row.tau),
                    repr(row.score),
                    repr(row.violation_ratio),
                    repr(row.episode_length),
                    row.seed,
                ]
            )


def write_compare_series_csv(
    path: str | Path, named_series: Sequence[tuple[str, Sequence[float]]]
) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["policy", "step", "mean_reward"])
        for name, series in named_series:
            for i, value in enumerate(series, start=1):
                writer.writerow([name, i, repr(value)])
