"""Independent reference implementations and state generators for tests.

Everything here deliberately avoids the library's own computation paths so
that agreement between the two is meaningful.
"""
from __future__ import annotations

import random

import numpy as np

from equiflow import Action, Episode, EnvConfig, WorldState, available_actions


def expanded_gini_rank(values, weights) -> float:
    """Gini via the sorted-rank formula on the fully expanded per-person list."""
    person = np.repeat(np.asarray(values, dtype=float), np.asarray(weights, dtype=np.int64))
    n = person.size
    total = float(person.sum())
    if total == 0.0:
        return 1.0  # drained-state convention, mirrored from the library
    s = np.sort(person)
    ranks = np.arange(1, n + 1, dtype=float)
    return float((2.0 * np.dot(ranks, s) - (n + 1) * total) / (n * total))


def expanded_gini_pairwise(values, weights) -> float:
    """Literal O(n^2) mean-absolute-difference Gini over the expanded list."""
    person = []
    for v, w in zip(values, weights):
        person.extend([float(v)] * int(w))
    n = len(person)
    total = sum(person)
    if total == 0.0:
        return 1.0
    spread = 0.0
    for i in range(n):
        for j in range(n):
            spread += abs(person[i] - person[j])
    return spread / (2.0 * n * total)


def optimal_average_reward(transitions: dict, sweeps: int = 200_000, tol: float = 1e-13):
    """Relative value iteration on a tiny deterministic MDP.

    ``transitions[state][action] == (next_state, reward)``.  Returns the
    optimal long-run average reward and the relative values.  A half-weight
    self-loop blend keeps the iteration from oscillating on periodic optimal
    cycles; it leaves the stationary distribution (and hence the gain)
    unchanged.
    """
    kappa = 0.5
    states = sorted(transitions)
    ref = states[0]
    h = {s: 0.0 for s in states}
    rho = 0.0
    for _ in range(sweeps):
        t = {
            s: max(r + (1.0 - kappa) * h[s] + kappa * h[ns] for ns, r in transitions[s].values())
            for s in states
        }
        rho_new = t[ref]
        h_new = {s: t[s] - rho_new for s in states}
        drift = max(abs(h_new[s] - h[s]) for s in states)
        h, rho = h_new, rho_new
        if drift < tol:
            break
    return rho, h


def random_walk_states(
    config: EnvConfig, seed: int, count: int, max_steps_per_episode: int = 60
) -> list[WorldState]:
    """Reachable states sampled by random-action walks with periodic resets."""
    rng = random.Random(seed)
    episode = Episode(config, rng=rng)
    states: list[WorldState] = []
    state = episode.reset()
    steps = 0
    while len(states) < count:
        states.append(state)
        if episode.done or steps >= max_steps_per_episode:
            state = episode.reset()
            steps = 0
            continue
        acts = available_actions(state, config)
        state = episode.step(acts[rng.randrange(len(acts))]).next_state
        steps += 1
    return states


def random_legal_action(state: WorldState, config: EnvConfig, rng: random.Random) -> Action:
    acts = available_actions(state, config)
    return acts[rng.randrange(len(acts))]
