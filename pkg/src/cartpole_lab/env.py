"""Episodic MDP wrapper: two-action force set, reward, termination, resets.

The reward is -1 on the transition that leaves the allowed region
(|theta| <= 12 deg, |x| <= 2.4 m) and 0 otherwise.  Reaching
``success_steps`` non-terminal steps truncates the episode as a SUCCESS
without emitting the failure reward.
"""

import enum
import math
from dataclasses import dataclass

from .codec import THETA_LIMIT_DEG, X_LIMIT
from .physics import PhysicsParams, State, step

THETA_LIMIT_RAD = math.radians(THETA_LIMIT_DEG)


class Action(enum.IntEnum):
    LEFT = 0  # -force_mag
    RIGHT = 1  # +force_mag


class ResetMode(enum.Enum):
    UPRIGHT = "upright"
    SWINGUP = "swingup"


@dataclass(frozen=True)
class StepOutcome:
    next_state: State
    reward: float
    terminal: bool


@dataclass(frozen=True)
class EpisodeConfig:
    success_steps: int = 100_000
    reset_mode: ResetMode = ResetMode.UPRIGHT
    seed: int = 0
    init_noise: float = 0.0  # optional uniform +-init_noise on UPRIGHT reset

    def __post_init__(self):
        if self.success_steps < 1:
            raise ValueError("success_steps must be >= 1")
        if self.init_noise < 0:
            raise ValueError("init_noise must be >= 0")


class UsageError(Exception):
    """Raised on contract violations such as stepping a terminal state."""


def action_force(a: Action, p: PhysicsParams) -> float:
    return p.force_mag if a == Action.RIGHT else -p.force_mag


def is_out_of_bounds(s: State) -> bool:
    return abs(s.theta) > THETA_LIMIT_RAD or abs(s.x) > X_LIMIT


def env_step(s: State, a: Action, p: PhysicsParams) -> StepOutcome:
    """One MDP transition; terminality is checked on the successor state."""
    if is_out_of_bounds(s):
        raise UsageError("env_step called on a terminal state")
    s_next = step(s, action_force(a, p), p)
    terminal = is_out_of_bounds(s_next)
    return StepOutcome(s_next, -1.0 if terminal else 0.0, terminal)


def reset(cfg: EpisodeConfig, rng=None) -> State:
    """Initial state: exact upright rest, or hanging rest for swing-up runs.

    With ``init_noise`` enabled (off by default), UPRIGHT resets draw each
    component uniformly from +-init_noise using ``rng``.
    """
    if cfg.reset_mode is ResetMode.UPRIGHT:
        if cfg.init_noise > 0.0:
            if rng is None:
                raise UsageError("init_noise requires an rng")
            return State(*rng.uniform(-cfg.init_noise, cfg.init_noise, 4))
        return State(0.0, 0.0, 0.0, 0.0)
    return State(math.pi, 0.0, 0.0, 0.0)


class CartPoleEnv:
    """Thin stateful wrapper over :func:`env_step` / :func:`reset`."""

    def __init__(self, params: PhysicsParams = PhysicsParams(),
                 config: EpisodeConfig = EpisodeConfig()):
        self.params = params
        self.config = config
        self.state: State | None = None
        self.steps = 0

    def reset(self) -> State:
        self.state = reset(self.config)
        self.steps = 0
        return self.state

    def step(self, a: Action) -> StepOutcome:
        if self.state is None:
            raise UsageError("step called before reset")
        out = env_step(self.state, a, self.params)
        self.state = out.next_state
        self.steps += 1
        return out

    @property
    def succeeded(self) -> bool:
        return self.steps >= self.config.success_steps
