"""Episodic MDP semantics: reward, termination, resets, wrapper contract."""

import math

import numpy as np
import pytest

from cartpole_lab.env import (Action, CartPoleEnv, EpisodeConfig, ResetMode,
                              UsageError, action_force, env_step,
                              is_out_of_bounds, reset)
from cartpole_lab.physics import PhysicsParams, State, step

P = PhysicsParams()


def test_action_forces():
    assert action_force(Action.RIGHT, P) == P.force_mag
    assert action_force(Action.LEFT, P) == -P.force_mag


def test_env_step_matches_plant():
    s = State(0.05, 0.1, -0.3, 0.2)
    out = env_step(s, Action.RIGHT, P)
    assert out.next_state == step(s, P.force_mag, P)
    assert out.reward == 0.0 and not out.terminal


def test_terminal_transition_reward():
    # a state about to leave the cart bound under any action
    s = State(0.0, 0.0, 2.399, 3.0)
    out = env_step(s, Action.RIGHT, P)
    assert out.terminal and out.reward == -1.0
    assert is_out_of_bounds(out.next_state)


def test_step_on_terminal_state_rejected():
    with pytest.raises(UsageError):
        env_step(State(0.3, 0, 0, 0), Action.LEFT, P)  # ~17 deg: out of cone
    with pytest.raises(UsageError):
        env_step(State(0, 0, 2.5, 0), Action.LEFT, P)


def test_reset_modes():
    assert reset(EpisodeConfig()) == State(0.0, 0.0, 0.0, 0.0)
    assert reset(EpisodeConfig(reset_mode=ResetMode.SWINGUP)) == \
        State(math.pi, 0.0, 0.0, 0.0)


def test_reset_noise_requires_rng():
    cfg = EpisodeConfig(init_noise=0.05)
    with pytest.raises(UsageError):
        reset(cfg)
    s = reset(cfg, np.random.default_rng(0))
    assert all(abs(v) <= 0.05 for v in s)
    assert s != State(0.0, 0.0, 0.0, 0.0)


def test_episode_config_validation():
    with pytest.raises(ValueError):
        EpisodeConfig(success_steps=0)
    with pytest.raises(ValueError):
        EpisodeConfig(init_noise=-0.1)


def test_env_wrapper_contract():
    env = CartPoleEnv(P, EpisodeConfig(success_steps=3))
    with pytest.raises(UsageError):
        env.step(Action.LEFT)  # step before reset
    s0 = env.reset()
    assert s0 == State(0.0, 0.0, 0.0, 0.0)
    assert not env.succeeded
    for _ in range(3):
        env.step(Action.RIGHT)
    assert env.steps == 3 and env.succeeded


def test_env_wrapper_tracks_state():
    env = CartPoleEnv(P, EpisodeConfig())
    env.reset()
    out = env.step(Action.LEFT)
    assert env.state == out.next_state
    out2 = env.step(Action.LEFT)
    assert out2.next_state == step(out.next_state, -P.force_mag, P)
