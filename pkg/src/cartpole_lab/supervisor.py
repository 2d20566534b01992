"""Mode-switching controller: energy swing-up composed with a stabilizer.

Starting from hanging rest, the supervisor alternates SWINGUP and
STABILIZE phases.  Each STABILIZE phase with an RL stabilizer is one
learning episode that starts at the handover state with fresh traces; the
switch back to SWINGUP on leaving the handover cone is the RL failure
event (reward -1, terminal update).  No manual reset to upright ever
occurs: after a pole failure the swing-up controller takes over in place,
and after a cart-bound failure the pendulum is restarted from hanging rest
(the physical pendulum would be recentered by hand anyway once the cart
runs off the rail).
"""

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import actor_critic, tabular, vfa
from .classical import (KICK_DURATION_S, SWINGUP_CART_VIOLATION,
                        SWINGUP_HANDOVER, LqrSolution, SwingupParams,
                        lqr_chunk, lqr_force, swingup_chunk, swingup_force)
from .codec import THETA_LIMIT_DEG, X_LIMIT, BoxScheme, get_box
from .physics import PhysicsParams, State, wrap_angle
from .runner import (CART, SUCCESS, EpisodeResult, episode_rng, finish_stats,
                     make_stats, terminal_cause)

SWINGUP = "SWINGUP"
STABILIZE = "STABILIZE"

RL_STABILIZERS = ("qlearning", "sarsa", "actor_critic", "vfa")


class SwingupAbortError(Exception):
    """Cart bound violated (or budget exhausted) during a SWINGUP phase;
    the swing-up gains are misconfigured for this plant."""


@dataclass
class SupervisorConfig:
    stabilizer: str = "lqr"  # "lqr" or one of RL_STABILIZERS
    switch_angle_deg: float = 12.0
    theta_dot_gate: float | None = None  # rad/s cap on handover, off by default
    learning_enabled: bool = True
    swingup: SwingupParams = field(default_factory=SwingupParams)
    success_steps: int = 100_000
    episode_budget: int = 500
    swingup_phase_cap: int = 30_000  # steps per phase before aborting
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.switch_angle_deg <= THETA_LIMIT_DEG:
            raise ValueError("switch_angle_deg must be in (0, 12]")
        if self.stabilizer != "lqr" and self.stabilizer not in RL_STABILIZERS:
            raise ValueError(f"unknown stabilizer {self.stabilizer!r}")


@dataclass(frozen=True)
class StabilizePhase:
    """One stabilization episode of a full-control run."""

    index: int
    handover_state: State
    handover_box: int
    steps: int
    cause: str  # POLE | CART | SUCCESS
    stats: "object" = None  # RangeStats of the tracked steps


@dataclass
class FullControlResult:
    timeline: list[tuple[float, str]]  # (sim time s, mode) transitions
    phases: list[StabilizePhase]
    success: bool


def supervise_step(s: State, cfg: SupervisorConfig, mode: str,
                   p: PhysicsParams,
                   stabilizer_force: Callable[[State], float]) -> tuple[float, str, bool]:
    """Single-step mode logic: (force, next_mode, rl_failure_event).

    SWINGUP hands over when the wrapped angle enters the switch cone (and
    the optional theta_dot gate passes); STABILIZE falls back to SWINGUP
    when the angle leaves the cone or the cart leaves the track, which is
    the failure event for a learning stabilizer.
    """
    switch_rad = math.radians(cfg.switch_angle_deg)
    if mode == SWINGUP:
        w = wrap_angle(s.theta)
        gated = cfg.theta_dot_gate is not None and abs(s.theta_dot) > cfg.theta_dot_gate
        if abs(w) <= switch_rad and not gated:
            return stabilizer_force(s), STABILIZE, False
        return swingup_force(s, cfg.swingup, p), SWINGUP, False
    failed = abs(s.theta) > switch_rad or abs(s.x) > X_LIMIT
    if failed:
        return swingup_force(s, cfg.swingup, p), SWINGUP, True
    return stabilizer_force(s), STABILIZE, False


def _run_swingup_phase(s: np.ndarray, cfg: SupervisorConfig, p: PhysicsParams,
                      trace: list | None, t0: int) -> int:
    """Advance ``s`` through one SWINGUP phase in place; returns steps done."""
    sp = cfg.swingup
    switch_rad = math.radians(cfg.switch_angle_deg)
    gate = cfg.theta_dot_gate if cfg.theta_dot_gate is not None else math.inf
    kick = math.ceil(KICK_DURATION_S / p.tau) if abs(s[1]) < 1e-6 else 0
    steps = 0
    chunk = 1 if trace is not None else 2048
    while steps < cfg.swingup_phase_cap:
        n = min(chunk, cfg.swingup_phase_cap - steps)
        before = State(*s)
        kick_before = kick
        done, status, kick = swingup_chunk(
            s, n, kick, sp.k, sp.lam, sp.E0, switch_rad, gate,
            p.M, p.m, p.g, p.l, p.tau, p.force_mag)
        if trace is not None and done:
            force = p.force_mag if kick_before > 0 else swingup_force(before, sp, p)
            trace.append((State(*s), force, 0.0, False, SWINGUP))
        steps += done
        if status == SWINGUP_CART_VIOLATION:
            raise SwingupAbortError(
                f"cart bound violated during swing-up at t={(t0 + steps) * p.tau:.2f}s; "
                f"check swing-up gains (k={sp.k}, lam={sp.lam})")
        if status == SWINGUP_HANDOVER:
            # Normalize the possibly multi-revolution angle so the
            # stabilizer (and the MDP failure cone) see theta near 0.
            s[0] = wrap_angle(s[0])
            return steps
    raise SwingupAbortError(
        f"swing-up did not reach the handover cone within {cfg.swingup_phase_cap} steps")


def _run_lqr_phase(s: np.ndarray, sol: LqrSolution, cfg: SupervisorConfig,
                   p: PhysicsParams, stats: np.ndarray, track_from: int,
                   trace: list | None) -> EpisodeResult:
    switch_rad = math.radians(cfg.switch_angle_deg)
    k = sol.K[0]
    steps = 0
    terminated = False
    chunk = 1 if trace is not None else 8192
    while steps < cfg.success_steps and not terminated:
        n = min(chunk, cfg.success_steps - steps)
        before = State(*s)
        done, terminated = lqr_chunk(
            s, n, k[0], k[1], k[2], k[3], switch_rad,
            p.M, p.m, p.g, p.l, p.tau, p.force_mag, stats, steps, track_from)
        if trace is not None and done:
            trace.append((State(*s), lqr_force(before, sol, p.force_mag),
                          0.0, terminated, STABILIZE))
        steps += done
    # re-use env cause classification against the switch cone
    final = State(*s)
    if terminated:
        cause = "POLE" if abs(final.theta) > switch_rad else CART
    else:
        cause = SUCCESS
    return EpisodeResult(steps, cause, final, finish_stats(stats))


def run_full_control(cfg: SupervisorConfig, p: PhysicsParams, scheme: BoxScheme,
                     agent, hyper, track_from: int | None = None,
                     trace: list | None = None) -> FullControlResult:
    """Automated swing-up / stabilize alternation from hanging rest.

    ``agent`` is an LqrSolution or the weight container of an RL
    stabilizer (mutated in place when learning is enabled); ``hyper`` is
    the matching hyperparameter object (ignored for LQR).  Each STABILIZE
    phase draws its random stream from (cfg.seed, phase index), so
    replaying the recorded handover states through the bare environment
    reproduces the weight trajectory exactly.
    """
    if cfg.stabilizer in RL_STABILIZERS and cfg.switch_angle_deg != THETA_LIMIT_DEG:
        raise NotImplementedError(
            "RL stabilizers run with the MDP failure cone (switch angle 12 deg)")
    s = np.array([math.pi, 0.0, 0.0, 0.0])
    timeline: list[tuple[float, str]] = [(0.0, SWINGUP)]
    phases: list[StabilizePhase] = []
    t = 0  # global step counter
    success = False
    for index in range(cfg.episode_budget):
        t += _run_swingup_phase(s, cfg, p, trace, t)
        timeline.append((t * p.tau, STABILIZE))
        handover = State(*s)
        box = get_box(handover, scheme) if scheme is not None else -2
        tf = track_from if track_from is not None else cfg.success_steps
        if cfg.stabilizer == "lqr":
            stats = make_stats()
            result = _run_lqr_phase(s, agent, cfg, p, stats, tf, trace)
        else:
            rng = episode_rng(cfg.seed, index)
            result = _run_stabilize_episode(
                cfg.stabilizer, agent, hyper, handover, rng, p, scheme,
                cfg.success_steps, tf, cfg.learning_enabled, trace)
            s[:] = result.final_state
        phases.append(StabilizePhase(index, handover, box, result.steps,
                                     result.cause, result.stats))
        t += result.steps
        if result.cause == SUCCESS:
            success = True
            break
        timeline.append((t * p.tau, SWINGUP))
        if result.cause == CART:
            s[:] = (math.pi, 0.0, 0.0, 0.0)
    return FullControlResult(timeline, phases, success)


def _run_stabilize_episode(kind, agent, hyper, start, rng, p, scheme,
                           success_steps, track_from, learn, trace):
    agent_trace = [] if trace is not None else None
    if kind in ("qlearning", "sarsa"):
        result = tabular.run_episode(agent, start, rng, hyper, p, scheme,
                                     success_steps, mode=kind,
                                     track_from=track_from, learn=learn,
                                     trace=agent_trace)
    elif kind == "actor_critic":
        result = actor_critic.run_episode(agent, start, rng, hyper, p, scheme,
                                          success_steps, track_from=track_from,
                                          learn=learn, trace=agent_trace)
    elif kind == "vfa":
        result = vfa.run_episode(agent, start, rng, hyper, p, success_steps,
                                 track_from=track_from, learn=learn,
                                 trace=agent_trace)
    else:
        raise ValueError(f"unknown stabilizer {kind!r}")
    if trace is not None:
        for state, force, reward, terminal in agent_trace:
            trace.append((state, force, reward, terminal, STABILIZE))
    return result
