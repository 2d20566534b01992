"""Tabular TD control over box-discretized states.

Q-learning (off-policy target) and SARSA(0) (on-policy target) share one
update kernel.  Behavior is greedy with uniform random tie-breaking; an
optional epsilon-greedy flag exists for ablations and defaults to 0.

The fused episode kernel consumes exactly two pre-drawn uniforms per
executed step (explore coin, pick/tie-break coin), so results are
independent of the chunk size used to feed it random numbers.
"""

from dataclasses import dataclass

import numpy as np

from ._accel import maybe_njit
from .codec import FAILURE, BoxScheme, get_box, get_box_kernel
from .env import Action
from .physics import PhysicsParams, State, integrator_code, plant_step_kernel
from .runner import EpisodeResult, finish_stats, make_stats, terminal_cause

QLEARNING = 0
SARSA = 1

_MODES = {"qlearning": QLEARNING, "sarsa": SARSA}


def td_mode(name: str) -> int:
    try:
        return _MODES[name]
    except KeyError:
        raise ValueError(f"unknown tabular mode {name!r}") from None


@dataclass
class TdHyper:
    alpha: float = 0.5
    gamma: float = 0.99
    epsilon: float = 0.0

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be > 0")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must be in [0, 1]")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must be in [0, 1]")


@dataclass
class QTable:
    """Dense action-value table, one row per box, columns (LEFT, RIGHT)."""

    values: np.ndarray
    scheme: str

    @classmethod
    def zeros(cls, scheme: BoxScheme) -> "QTable":
        return cls(np.zeros((scheme.box_count, 2)), scheme.name)


@maybe_njit
def select_kernel(q_left, q_right, u_explore, u_pick, eps):
    if eps > 0.0 and u_explore < eps:
        return 0 if u_pick < 0.5 else 1
    if q_left == q_right:
        return 0 if u_pick < 0.5 else 1
    return 0 if q_left > q_right else 1


@maybe_njit
def q_update_kernel(q, box, a, reward, next_box, next_a, alpha, gamma, mode):
    """One TD backup; FAILURE next_box bootstraps 0 (terminal)."""
    if next_box == FAILURE:
        boot = 0.0
    elif mode == SARSA:
        boot = q[next_box, next_a]
    else:
        boot = max(q[next_box, 0], q[next_box, 1])
    q[box, a] += alpha * (reward + gamma * boot - q[box, a])


def select_action(q: QTable, box: int, rng: np.random.Generator,
                  eps: float = 0.0) -> Action:
    """Greedy action with uniform random tie-breaking."""
    if box == FAILURE:
        raise ValueError("cannot select an action for the FAILURE box")
    u = rng.random(2)
    return Action(select_kernel(q.values[box, 0], q.values[box, 1], u[0], u[1], eps))


def q_update(q: QTable, box: int, a: Action, reward: float, next_box: int,
             h: TdHyper, mode: str = "qlearning", next_a: Action | None = None) -> None:
    """Apply one Q-learning or SARSA(0) backup in place."""
    if box == FAILURE:
        raise ValueError("cannot update the FAILURE box")
    m = td_mode(mode)
    if m == SARSA and next_box != FAILURE and next_a is None:
        raise ValueError("SARSA requires next_a for non-terminal transitions")
    q_update_kernel(q.values, box, int(a), reward, next_box,
                    -1 if next_a is None else int(next_a),
                    h.alpha, h.gamma, m)


@maybe_njit
def tabular_chunk(q, s, cursor, uniforms, n_steps, alpha, gamma, mode, eps,
                  M, m, g, l, tau, force_mag, integ, substeps,
                  th_e, td_e, x_e, xd_e, stats, step_offset, track_from):
    """Run up to ``n_steps`` learning steps of one episode.

    ``s`` is the (4,) state vector and ``cursor`` the (box, action) pair,
    both mutated in place.  Returns (steps_done, terminated).
    """
    box = cursor[0]
    a = cursor[1]
    for i in range(n_steps):
        force = force_mag if a == 1 else -force_mag
        s[0], s[1], s[2], s[3] = plant_step_kernel(
            s[0], s[1], s[2], s[3], force, M, m, g, l, tau, integ, substeps)
        u_explore = uniforms[2 * i]
        u_pick = uniforms[2 * i + 1]
        next_box = get_box_kernel(s[0], s[1], s[2], s[3], th_e, td_e, x_e, xd_e)
        step_no = step_offset + i
        if step_no >= track_from:
            if s[0] < stats[0]:
                stats[0] = s[0]
            if s[0] > stats[1]:
                stats[1] = s[0]
            if s[2] < stats[2]:
                stats[2] = s[2]
            if s[2] > stats[3]:
                stats[3] = s[2]
        if next_box == FAILURE:
            q_update_kernel(q, box, a, -1.0, FAILURE, -1, alpha, gamma, mode)
            cursor[0] = box
            cursor[1] = a
            return i + 1, True
        next_a = select_kernel(q[next_box, 0], q[next_box, 1], u_explore, u_pick, eps)
        q_update_kernel(q, box, a, 0.0, next_box, next_a, alpha, gamma, mode)
        box = next_box
        a = next_a
    cursor[0] = box
    cursor[1] = a
    return n_steps, False


def run_episode(q: QTable, start: State, rng: np.random.Generator,
                h: TdHyper, p: PhysicsParams, scheme: BoxScheme,
                success_steps: int, mode: str = "qlearning",
                track_from: int | None = None, learn: bool = True,
                trace: list | None = None, chunk: int = 4096,
                integrator: str = "euler", substeps: int = 1) -> EpisodeResult:
    """Run one learning episode from ``start`` until failure or truncation."""
    s = np.array(start, dtype=np.float64)
    box = get_box(State(*s), scheme)
    if box == FAILURE:
        raise ValueError("episode cannot start out of bounds")
    u = rng.random(2)
    a = select_kernel(q.values[box, 0], q.values[box, 1], u[0], u[1], h.epsilon)
    cursor = np.array([box, a], dtype=np.int64)
    stats = make_stats()
    if track_from is None:
        track_from = success_steps  # disabled
    alpha = h.alpha if learn else 0.0
    steps = 0
    terminated = False
    if trace is not None:
        chunk = 1
    while steps < success_steps and not terminated:
        n = min(chunk, success_steps - steps)
        uniforms = rng.random(2 * n)
        prev_a = int(cursor[1])
        done, terminated = tabular_chunk(
            q.values, s, cursor, uniforms, n, alpha, h.gamma,
            td_mode(mode), h.epsilon,
            p.M, p.m, p.g, p.l, p.tau, p.force_mag,
            integrator_code(integrator), substeps,
            scheme.theta_edges, scheme.theta_dot_edges,
            scheme.x_edges, scheme.x_dot_edges,
            stats, steps, track_from)
        if trace is not None and done:
            force = p.force_mag if prev_a == 1 else -p.force_mag
            trace.append((State(*s), force, -1.0 if terminated else 0.0, terminated))
        steps += done
    cause = terminal_cause(State(*s), terminated, steps, success_steps)
    return EpisodeResult(steps, cause, State(*s), finish_stats(stats))
