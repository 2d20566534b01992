"""Single-neuron actor / single-neuron critic with eligibility traces.

ASE/ACE-style elements over one-hot box vectors: the actor holds one
preference weight per box and picks RIGHT when its weighted sum plus
Gaussian noise is positive; the critic holds one value weight per box and
supplies the one-step TD error ("internal reinforcement") that scales both
weight updates through their eligibility traces.

Traces decay-and-deposit *before* the weight update each step, so the
immediately preceding action is eligible for the failure signal it caused.
"""

from dataclasses import dataclass

import numpy as np

from ._accel import maybe_njit
from .codec import FAILURE, BoxScheme, get_box, get_box_kernel
from .env import Action
from .physics import PhysicsParams, State, integrator_code, plant_step_kernel
from .runner import EpisodeResult, finish_stats, make_stats, terminal_cause

NOISE_RULE = 0
SOFTMAX_RULE = 1

_RULES = {"noise": NOISE_RULE, "softmax": SOFTMAX_RULE}


@dataclass
class AcHyper:
    alpha: float = 1000.0  # actor rate
    beta: float = 0.5  # critic rate
    gamma: float = 0.95
    lambda_w: float = 0.9  # actor trace decay
    lambda_v: float = 0.8  # critic trace decay
    noise_sigma: float = 0.1
    trace_form: str = "decay"  # "decay" | "convex"
    action_rule: str = "noise"  # "noise" | "softmax"

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("learning rates must be > 0")
        for v in (self.gamma, self.lambda_w, self.lambda_v):
            if not 0.0 <= v <= 1.0:
                raise ValueError("gamma and trace decays must be in [0, 1]")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if self.trace_form not in ("decay", "convex"):
            raise ValueError(f"unknown trace_form {self.trace_form!r}")
        if self.action_rule not in _RULES:
            raise ValueError(f"unknown action_rule {self.action_rule!r}")

    def trace_coeffs(self) -> tuple[float, float, float, float]:
        """(actor decay, actor deposit gain, critic decay, critic deposit gain)."""
        if self.trace_form == "decay":
            return self.lambda_w, 1.0, self.lambda_v, 1.0
        return 1.0 - self.lambda_w, self.lambda_w, 1.0 - self.lambda_v, self.lambda_v


@dataclass
class AcWeights:
    actor_w: np.ndarray
    critic_w: np.ndarray
    actor_trace: np.ndarray
    critic_trace: np.ndarray
    scheme: str

    @classmethod
    def zeros(cls, scheme: BoxScheme) -> "AcWeights":
        n = scheme.box_count
        return cls(np.zeros(n), np.zeros(n), np.zeros(n), np.zeros(n), scheme.name)

    def reset_traces(self) -> None:
        self.actor_trace[:] = 0.0
        self.critic_trace[:] = 0.0


@maybe_njit
def ac_select_kernel(pref, eta, u, sigma, rule):
    """Binary output y: 1 -> RIGHT (+F), 0 -> LEFT (-F)."""
    if rule == SOFTMAX_RULE:
        p_right = 1.0 / (1.0 + np.exp(-2.0 * pref))
        return 1 if u < p_right else 0
    return 1 if pref + sigma * eta > 0.0 else 0


@maybe_njit
def ac_update_kernel(actor_w, critic_w, actor_tr, critic_tr, box, y, reward,
                     next_box, alpha, beta, gamma,
                     decay_w, gain_w, decay_v, gain_v):
    """Deposit traces for (box, y), then apply the TD-error-scaled updates.

    Returns the internal reinforcement (TD error) of the transition.
    """
    n = actor_w.shape[0]
    for i in range(n):
        actor_tr[i] *= decay_w
        critic_tr[i] *= decay_v
    actor_tr[box] += gain_w * (y - 0.5)
    critic_tr[box] += gain_v
    p_now = critic_w[box]
    p_next = 0.0 if next_box == FAILURE else critic_w[next_box]
    r_hat = reward + gamma * p_next - p_now
    for i in range(n):
        actor_w[i] += alpha * r_hat * actor_tr[i]
        critic_w[i] += beta * r_hat * critic_tr[i]
    return r_hat


def ac_select_action(w: AcWeights, box: int, rng: np.random.Generator,
                     h: AcHyper) -> tuple[Action, int]:
    if box == FAILURE:
        raise ValueError("cannot select an action for the FAILURE box")
    eta = rng.standard_normal()
    u = rng.random()
    y = ac_select_kernel(w.actor_w[box], eta, u, h.noise_sigma, _RULES[h.action_rule])
    return Action(y), y


def ac_update(w: AcWeights, box: int, y: int, reward: float, next_box: int,
              h: AcHyper) -> float:
    if box == FAILURE:
        raise ValueError("cannot update the FAILURE box")
    dw, gw, dv, gv = h.trace_coeffs()
    return float(ac_update_kernel(w.actor_w, w.critic_w, w.actor_trace,
                                  w.critic_trace, box, y, reward, next_box,
                                  h.alpha, h.beta, h.gamma, dw, gw, dv, gv))


@maybe_njit
def ac_chunk(actor_w, critic_w, actor_tr, critic_tr, s, cursor,
             normals, uniforms, n_steps, alpha, beta, gamma,
             decay_w, gain_w, decay_v, gain_v, sigma, rule,
             M, m, g, l, tau, force_mag, integ, substeps,
             th_e, td_e, x_e, xd_e, stats, step_offset, track_from):
    """Up to ``n_steps`` actor-critic learning steps of one episode."""
    box = cursor[0]
    y = cursor[1]
    for i in range(n_steps):
        force = force_mag if y == 1 else -force_mag
        s[0], s[1], s[2], s[3] = plant_step_kernel(
            s[0], s[1], s[2], s[3], force, M, m, g, l, tau, integ, substeps)
        eta = normals[i]
        u = uniforms[i]
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
            ac_update_kernel(actor_w, critic_w, actor_tr, critic_tr, box, y,
                             -1.0, FAILURE, alpha, beta, gamma,
                             decay_w, gain_w, decay_v, gain_v)
            cursor[0] = box
            cursor[1] = y
            return i + 1, True
        ac_update_kernel(actor_w, critic_w, actor_tr, critic_tr, box, y,
                         0.0, next_box, alpha, beta, gamma,
                         decay_w, gain_w, decay_v, gain_v)
        box = next_box
        y = ac_select_kernel(actor_w[box], eta, u, sigma, rule)
    cursor[0] = box
    cursor[1] = y
    return n_steps, False


def run_episode(w: AcWeights, start: State, rng: np.random.Generator,
                h: AcHyper, p: PhysicsParams, scheme: BoxScheme,
                success_steps: int, track_from: int | None = None,
                learn: bool = True, trace: list | None = None,
                chunk: int = 4096, integrator: str = "euler",
                substeps: int = 1) -> EpisodeResult:
    """One learning episode; traces start and end at zero."""
    s = np.array(start, dtype=np.float64)
    box = get_box(State(*s), scheme)
    if box == FAILURE:
        raise ValueError("episode cannot start out of bounds")
    # Normals and uniforms come from separate child streams so that batched
    # chunk draws consume each stream contiguously; results are then
    # independent of the chunk size (interleaving both kinds of draw on one
    # stream would make the raw-draw order depend on the batch length).
    rng_normal, rng_uniform = rng.spawn(2)
    eta = rng_normal.standard_normal()
    u = rng_uniform.random()
    rule = _RULES[h.action_rule]
    y = ac_select_kernel(w.actor_w[box], eta, u, h.noise_sigma, rule)
    cursor = np.array([box, y], dtype=np.int64)
    stats = make_stats()
    if track_from is None:
        track_from = success_steps
    dw, gw, dv, gv = h.trace_coeffs()
    alpha = h.alpha if learn else 0.0
    beta = h.beta if learn else 0.0
    steps = 0
    terminated = False
    if trace is not None:
        chunk = 1
    while steps < success_steps and not terminated:
        n = min(chunk, success_steps - steps)
        normals = rng_normal.standard_normal(n)
        uniforms = rng_uniform.random(n)
        prev_y = int(cursor[1])
        done, terminated = ac_chunk(
            w.actor_w, w.critic_w, w.actor_trace, w.critic_trace, s, cursor,
            normals, uniforms, n, alpha, beta, h.gamma,
            dw, gw, dv, gv, h.noise_sigma, rule,
            p.M, p.m, p.g, p.l, p.tau, p.force_mag,
            integrator_code(integrator), substeps,
            scheme.theta_edges, scheme.theta_dot_edges,
            scheme.x_edges, scheme.x_dot_edges,
            stats, steps, track_from)
        if trace is not None and done:
            force = p.force_mag if prev_y == 1 else -p.force_mag
            trace.append((State(*s), force, -1.0 if terminated else 0.0, terminated))
        steps += done
    w.reset_traces()
    cause = terminal_cause(State(*s), terminated, steps, success_steps)
    return EpisodeResult(steps, cause, State(*s), finish_stats(stats))
