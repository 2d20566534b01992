"""Shared episode bookkeeping for the agent episode runners."""

import math
from dataclasses import dataclass

import numpy as np

from .codec import THETA_LIMIT_DEG, X_LIMIT
from .physics import State

POLE = "POLE"
CART = "CART"
SUCCESS = "SUCCESS"


@dataclass(frozen=True)
class RangeStats:
    """Observed theta (deg) and x (m) ranges over the tracked steps."""

    theta_min_deg: float
    theta_max_deg: float
    x_min: float
    x_max: float

    @property
    def empty(self) -> bool:
        return math.isnan(self.theta_min_deg)


@dataclass(frozen=True)
class EpisodeResult:
    steps: int
    cause: str  # POLE | CART | SUCCESS
    final_state: State
    stats: RangeStats


def make_stats() -> np.ndarray:
    return np.array([np.inf, -np.inf, np.inf, -np.inf])


def finish_stats(stats: np.ndarray) -> RangeStats:
    if stats[0] > stats[1]:  # nothing tracked
        return RangeStats(math.nan, math.nan, math.nan, math.nan)
    return RangeStats(math.degrees(stats[0]), math.degrees(stats[1]),
                      float(stats[2]), float(stats[3]))


def terminal_cause(final: State, terminated: bool, steps: int,
                   success_steps: int) -> str:
    if not terminated:
        if steps < success_steps:
            raise RuntimeError("episode ended non-terminal below success_steps")
        return SUCCESS
    if abs(final.theta) > math.radians(THETA_LIMIT_DEG):
        return POLE
    if abs(final.x) > X_LIMIT:
        return CART
    raise RuntimeError("terminated episode with in-bounds final state")


def episode_rng(master_seed: int, episode_index: int) -> np.random.Generator:
    """Per-episode counter-style stream: Philox keyed on (seed, episode).

    Parallel and serial execution agree because each episode derives its
    stream from the pair, never from generator state carried across
    episodes.
    """
    ss = np.random.SeedSequence([int(master_seed), int(episode_index)])
    return np.random.Generator(np.random.Philox(ss))
