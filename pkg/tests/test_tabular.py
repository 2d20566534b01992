"""Tabular TD control: update oracles, tie-breaking, chunk invariance."""

import numpy as np
import pytest

from cartpole_lab import tabular
from cartpole_lab.codec import FAILURE, box_scheme, get_box
from cartpole_lab.env import Action
from cartpole_lab.physics import PhysicsParams, State
from cartpole_lab.runner import POLE, SUCCESS, episode_rng
from cartpole_lab.tabular import (QTable, TdHyper, q_update, run_episode,
                                  select_action, td_mode)

P = PhysicsParams()
SCHEME = box_scheme("getBox")


def test_td_mode_lookup():
    assert td_mode("qlearning") != td_mode("sarsa")
    with pytest.raises(ValueError):
        td_mode("expected_sarsa")


def test_hyper_validation():
    with pytest.raises(ValueError):
        TdHyper(alpha=0.0)
    with pytest.raises(ValueError):
        TdHyper(gamma=1.5)
    with pytest.raises(ValueError):
        TdHyper(epsilon=-0.1)


def test_q_update_hand_oracle_qlearning():
    q = QTable.zeros(SCHEME)
    q.values[5] = [0.2, -0.4]
    q.values[9] = [-1.0, 0.3]
    h = TdHyper(alpha=0.25, gamma=0.9)
    q_update(q, 5, Action.LEFT, 0.0, 9, h, mode="qlearning")
    # target = r + gamma * max Q(next) = 0 + 0.9 * 0.3
    want = 0.2 + 0.25 * (0.9 * 0.3 - 0.2)
    assert abs(q.values[5, 0] - want) < 1e-12
    assert q.values[5, 1] == -0.4  # other action untouched


def test_q_update_hand_oracle_sarsa():
    q = QTable.zeros(SCHEME)
    q.values[5] = [0.2, -0.4]
    q.values[9] = [-1.0, 0.3]
    h = TdHyper(alpha=0.25, gamma=0.9)
    q_update(q, 5, Action.LEFT, 0.0, 9, h, mode="sarsa", next_a=Action.LEFT)
    # target bootstraps the chosen next action, not the max
    want = 0.2 + 0.25 * (0.9 * -1.0 - 0.2)
    assert abs(q.values[5, 0] - want) < 1e-12


def test_q_update_terminal_bootstraps_zero():
    q = QTable.zeros(SCHEME)
    q.values[5] = [0.6, 0.0]
    h = TdHyper(alpha=1.0, gamma=0.99)
    q_update(q, 5, Action.LEFT, -1.0, FAILURE, h)
    # alpha=1: value becomes exactly the target r + gamma * 0
    assert q.values[5, 0] == -1.0


def test_q_update_errors():
    q = QTable.zeros(SCHEME)
    h = TdHyper()
    with pytest.raises(ValueError):
        q_update(q, FAILURE, Action.LEFT, 0.0, 5, h)
    with pytest.raises(ValueError):
        q_update(q, 5, Action.LEFT, 0.0, 9, h, mode="sarsa")  # missing next_a


def test_select_action_greedy_and_ties():
    q = QTable.zeros(SCHEME)
    q.values[3] = [1.0, 0.0]
    q.values[4] = [0.0, 1.0]
    rng = np.random.default_rng(0)
    assert select_action(q, 3, rng) == Action.LEFT
    assert select_action(q, 4, rng) == Action.RIGHT
    # exact tie: resolved by the second uniform of the pair
    picks = set()
    for seed in range(16):
        rng2 = np.random.default_rng(seed)
        u = np.random.default_rng(seed).random(2)
        got = select_action(q, 0, rng2)  # box 0 has q_left == q_right
        picks.add(got)
        assert got == (Action.LEFT if u[1] < 0.5 else Action.RIGHT)
    assert picks == {Action.LEFT, Action.RIGHT}  # both outcomes occur
    with pytest.raises(ValueError):
        select_action(q, FAILURE, rng)


def test_select_action_epsilon_explores():
    q = QTable.zeros(SCHEME)
    q.values[3] = [100.0, 0.0]
    rng = np.random.default_rng(1)
    picks = {select_action(q, 3, rng, eps=1.0) for _ in range(64)}
    assert picks == {Action.LEFT, Action.RIGHT}


def start_state(seed):
    rng = np.random.default_rng(seed)
    s = State(*rng.uniform(-0.05, 0.05, 4))
    assert get_box(s, SCHEME) != FAILURE
    return s


@pytest.mark.parametrize("mode", ["qlearning", "sarsa"])
def test_chunk_invariance(mode):
    """Identical results and identical final Q table for chunk 1 vs 4096,
    because the kernel consumes exactly two uniforms per executed step."""
    h = TdHyper(alpha=0.5, gamma=0.99)
    results = []
    tables = []
    for chunk in (1, 7, 4096):
        q = QTable.zeros(SCHEME)
        for ep in range(8):
            r = run_episode(q, start_state(ep), episode_rng(42, ep), h, P,
                            SCHEME, 5000, mode=mode, chunk=chunk)
        results.append((r.steps, r.cause, r.final_state))
        tables.append(q.values.copy())
    assert results[0] == results[1] == results[2]
    np.testing.assert_array_equal(tables[0], tables[1])
    np.testing.assert_array_equal(tables[0], tables[2])


def test_run_episode_determinism():
    h = TdHyper()
    outs = []
    for _ in range(2):
        q = QTable.zeros(SCHEME)
        r = run_episode(q, start_state(3), episode_rng(7, 0), h, P, SCHEME, 5000)
        outs.append((r.steps, r.final_state, q.values.copy()))
    assert outs[0][0] == outs[1][0]
    assert outs[0][1] == outs[1][1]
    np.testing.assert_array_equal(outs[0][2], outs[1][2])


def test_run_episode_oob_start_rejected():
    q = QTable.zeros(SCHEME)
    with pytest.raises(ValueError):
        run_episode(q, State(0.5, 0, 0, 0), episode_rng(0, 0), TdHyper(), P,
                    SCHEME, 100)


def test_learn_false_freezes_table():
    q = QTable.zeros(SCHEME)
    q.values[:] = 0.25
    before = q.values.copy()
    run_episode(q, start_state(1), episode_rng(0, 0), TdHyper(), P, SCHEME,
                500, learn=False)
    np.testing.assert_array_equal(q.values, before)


def test_trace_records_every_step():
    q = QTable.zeros(SCHEME)
    trace = []
    r = run_episode(q, start_state(2), episode_rng(5, 0), TdHyper(), P,
                    SCHEME, 500, trace=trace)
    assert len(trace) == r.steps
    # the last traced transition carries the failure reward iff terminal
    last = trace[-1]
    assert last[3] == (r.cause != SUCCESS)
    assert last[0] == r.final_state
    assert all(f in (P.force_mag, -P.force_mag) for _, f, _, _ in trace)


def test_untrained_episode_fails_by_pole():
    q = QTable.zeros(SCHEME)
    r = run_episode(q, State(0.0, 0.0, 0.0, 0.0), episode_rng(0, 0),
                    TdHyper(), P, SCHEME, 100_000)
    assert r.cause == POLE
    assert r.steps < 500  # random policy drops the pole quickly


def test_stats_tracking_window():
    q = QTable.zeros(SCHEME)
    r = run_episode(q, start_state(4), episode_rng(1, 0), TdHyper(), P,
                    SCHEME, 100_000, track_from=0)
    assert not r.stats.empty
    assert r.stats.theta_min_deg <= r.stats.theta_max_deg
    assert r.stats.x_min <= r.stats.x_max
    # tracking disabled by default
    r2 = run_episode(QTable.zeros(SCHEME), start_state(4), episode_rng(1, 0),
                     TdHyper(), P, SCHEME, 100_000)
    assert r2.stats.empty
