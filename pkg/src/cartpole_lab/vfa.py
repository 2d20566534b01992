"""Semi-gradient TD control with linear action-value approximation.

q_hat(s, a) is the dot product of a 4-component normalized feature vector
with a per-action weight vector (two 4-vectors in total; a single shared
vector could not rank the two actions on the same state).  The update is
semi-gradient: no gradient flows through the bootstrap target, and only
the acted action's weights move.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._accel import maybe_njit
from .codec import (THETA_LIMIT_DEG, X_LIMIT, FeatureScales, features,
                    features_kernel)
from .env import Action
from .physics import PhysicsParams, State, integrator_code, plant_step_kernel
from .runner import EpisodeResult, finish_stats, make_stats, terminal_cause

_TH_LIM = math.radians(THETA_LIMIT_DEG)

SARSA_TARGET = 0
MAX_TARGET = 1

_TARGETS = {"sarsa": SARSA_TARGET, "max": MAX_TARGET}


@dataclass
class VfaHyper:
    alpha: float = 0.07
    gamma: float = 0.992
    epsilon: float = 0.0
    target: str = "sarsa"  # "sarsa" | "max"

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be > 0")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must be in [0, 1]")
        if self.target not in _TARGETS:
            raise ValueError(f"unknown target {self.target!r}")


@dataclass
class VfaWeights:
    """Per-action weight vectors, shape (2, 4); row index is the Action."""

    per_action_w: np.ndarray
    scales: FeatureScales = FeatureScales()

    @classmethod
    def zeros(cls, scales: FeatureScales = FeatureScales()) -> "VfaWeights":
        return cls(np.zeros((2, 4)), scales)


@maybe_njit
def dot4(w, f0, f1, f2, f3):
    return w[0] * f0 + w[1] * f1 + w[2] * f2 + w[3] * f3


@maybe_njit
def vfa_select_kernel(w, f0, f1, f2, f3, u_explore, u_pick, eps):
    if eps > 0.0 and u_explore < eps:
        return 0 if u_pick < 0.5 else 1
    q_left = dot4(w[0], f0, f1, f2, f3)
    q_right = dot4(w[1], f0, f1, f2, f3)
    if q_left == q_right:
        return 0 if u_pick < 0.5 else 1
    return 0 if q_left > q_right else 1


def q_hat(w: VfaWeights, s: State, a: Action) -> float:
    """Approximate action value: features(s) . w[a]."""
    f = features(s, w.scales)
    return float(dot4(w.per_action_w[int(a)], f[0], f[1], f[2], f[3]))


def vfa_select_action(w: VfaWeights, s: State, rng: np.random.Generator,
                      eps: float = 0.0) -> Action:
    """Greedy over the two approximate values, uniform tie-breaking."""
    f = features(s, w.scales)
    u = rng.random(2)
    return Action(vfa_select_kernel(w.per_action_w, f[0], f[1], f[2], f[3],
                                    u[0], u[1], eps))


def vfa_update(w: VfaWeights, s: State, a: Action, reward: float,
               s_next: State | None, a_next: Action | None,
               h: VfaHyper) -> None:
    """One semi-gradient backup; ``s_next is None`` means terminal."""
    f = features(s, w.scales)
    if s_next is None:
        boot = 0.0
    elif _TARGETS[h.target] == MAX_TARGET:
        boot = max(q_hat(w, s_next, Action.LEFT), q_hat(w, s_next, Action.RIGHT))
    else:
        if a_next is None:
            raise ValueError("on-policy target requires a_next")
        boot = q_hat(w, s_next, a_next)
    delta = h.alpha * (reward + h.gamma * boot - q_hat(w, s, a))
    w.per_action_w[int(a)] += delta * f


@maybe_njit
def vfa_chunk(w, s, f_cur, cursor, uniforms, n_steps, alpha, gamma, eps,
              target_mode, td_scale, xd_scale,
              M, m, g, l, tau, force_mag, integ, substeps,
              stats, step_offset, track_from):
    """Up to ``n_steps`` semi-gradient learning steps of one episode."""
    a = cursor[0]
    for i in range(n_steps):
        force = force_mag if a == 1 else -force_mag
        s[0], s[1], s[2], s[3] = plant_step_kernel(
            s[0], s[1], s[2], s[3], force, M, m, g, l, tau, integ, substeps)
        u_explore = uniforms[2 * i]
        u_pick = uniforms[2 * i + 1]
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
        q_cur = dot4(w[a], f_cur[0], f_cur[1], f_cur[2], f_cur[3])
        terminal = s[0] > _TH_LIM or s[0] < -_TH_LIM or s[2] > X_LIMIT or s[2] < -X_LIMIT
        if terminal:
            delta = alpha * (-1.0 - q_cur)
            for j in range(4):
                w[a, j] += delta * f_cur[j]
            cursor[0] = a
            return i + 1, True
        g0, g1, g2, g3 = features_kernel(s[0], s[1], s[2], s[3], td_scale, xd_scale)
        if target_mode == MAX_TARGET:
            # Off-policy target needs no next action: back up first, then pick
            # the next action from the freshly updated weights.
            boot = max(dot4(w[0], g0, g1, g2, g3), dot4(w[1], g0, g1, g2, g3))
            delta = alpha * (gamma * boot - q_cur)
            for j in range(4):
                w[a, j] += delta * f_cur[j]
            next_a = vfa_select_kernel(w, g0, g1, g2, g3, u_explore, u_pick, eps)
        else:
            next_a = vfa_select_kernel(w, g0, g1, g2, g3, u_explore, u_pick, eps)
            boot = dot4(w[next_a], g0, g1, g2, g3)
            delta = alpha * (gamma * boot - q_cur)
            for j in range(4):
                w[a, j] += delta * f_cur[j]
        f_cur[0], f_cur[1], f_cur[2], f_cur[3] = g0, g1, g2, g3
        a = next_a
    cursor[0] = a
    return n_steps, False


def run_episode(w: VfaWeights, start: State, rng: np.random.Generator,
                h: VfaHyper, p: PhysicsParams, success_steps: int,
                track_from: int | None = None, learn: bool = True,
                trace: list | None = None, chunk: int = 4096,
                integrator: str = "euler", substeps: int = 1) -> EpisodeResult:
    """One learning episode from ``start`` until failure or truncation."""
    s = np.array(start, dtype=np.float64)
    if abs(s[0]) > _TH_LIM or abs(s[2]) > X_LIMIT:
        raise ValueError("episode cannot start out of bounds")
    scales = w.scales
    f_cur = np.array(features_kernel(s[0], s[1], s[2], s[3],
                                     scales.theta_dot_scale, scales.x_dot_scale))
    u = rng.random(2)
    a = vfa_select_kernel(w.per_action_w, f_cur[0], f_cur[1], f_cur[2], f_cur[3],
                          u[0], u[1], h.epsilon)
    cursor = np.array([a], dtype=np.int64)
    stats = make_stats()
    if track_from is None:
        track_from = success_steps
    alpha = h.alpha if learn else 0.0
    steps = 0
    terminated = False
    if trace is not None:
        chunk = 1
    while steps < success_steps and not terminated:
        n = min(chunk, success_steps - steps)
        uniforms = rng.random(2 * n)
        prev_a = int(cursor[0])
        done, terminated = vfa_chunk(
            w.per_action_w, s, f_cur, cursor, uniforms, n, alpha, h.gamma,
            h.epsilon, _TARGETS[h.target],
            scales.theta_dot_scale, scales.x_dot_scale,
            p.M, p.m, p.g, p.l, p.tau, p.force_mag,
            integrator_code(integrator), substeps,
            stats, steps, track_from)
        if trace is not None and done:
            force = p.force_mag if prev_a == 1 else -p.force_mag
            trace.append((State(*s), force, -1.0 if terminated else 0.0, terminated))
        steps += done
    cause = terminal_cause(State(*s), terminated, steps, success_steps)
    return EpisodeResult(steps, cause, State(*s), finish_stats(stats))
