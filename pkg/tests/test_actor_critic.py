"""Actor-critic elements: update oracle, trace algebra, chunk invariance."""

import numpy as np
import pytest

from cartpole_lab.actor_critic import (AcHyper, AcWeights, ac_select_action,
                                       ac_update, run_episode)
from cartpole_lab.codec import FAILURE, box_scheme
from cartpole_lab.env import Action
from cartpole_lab.physics import PhysicsParams, State
from cartpole_lab.runner import POLE, episode_rng

P = PhysicsParams()
SCHEME = box_scheme("getBox")


def test_hyper_validation():
    with pytest.raises(ValueError):
        AcHyper(alpha=0.0)
    with pytest.raises(ValueError):
        AcHyper(beta=-1.0)
    with pytest.raises(ValueError):
        AcHyper(lambda_w=1.2)
    with pytest.raises(ValueError):
        AcHyper(noise_sigma=-0.1)
    with pytest.raises(ValueError):
        AcHyper(trace_form="replace")
    with pytest.raises(ValueError):
        AcHyper(action_rule="argmax")


def test_trace_coeffs():
    h = AcHyper(lambda_w=0.9, lambda_v=0.8, trace_form="decay")
    assert h.trace_coeffs() == (0.9, 1.0, 0.8, 1.0)
    h2 = AcHyper(lambda_w=0.9, lambda_v=0.8, trace_form="convex")
    got = h2.trace_coeffs()
    np.testing.assert_allclose(got, (0.1, 0.9, 0.2, 0.8), atol=1e-12)


def oracle_update(actor_w, critic_w, actor_tr, critic_tr, box, y, reward,
                  next_box, h):
    """Independent numpy re-derivation of one actor-critic step."""
    dw, gw, dv, gv = h.trace_coeffs()
    actor_tr = actor_tr * dw
    critic_tr = critic_tr * dv
    actor_tr[box] += gw * (y - 0.5)
    critic_tr[box] += gv
    p_next = 0.0 if next_box == FAILURE else critic_w[next_box]
    r_hat = reward + h.gamma * p_next - critic_w[box]
    actor_w = actor_w + h.alpha * r_hat * actor_tr
    critic_w = critic_w + h.beta * r_hat * critic_tr
    return actor_w, critic_w, actor_tr, critic_tr, r_hat


@pytest.mark.parametrize("trace_form", ["decay", "convex"])
def test_ac_update_matches_oracle(trace_form):
    rng = np.random.default_rng(11)
    h = AcHyper(alpha=2.0, beta=0.5, gamma=0.95, lambda_w=0.9, lambda_v=0.8,
                trace_form=trace_form)
    w = AcWeights.zeros(SCHEME)
    w.actor_w[:] = rng.normal(size=SCHEME.box_count)
    w.critic_w[:] = rng.normal(size=SCHEME.box_count)
    w.actor_trace[:] = rng.normal(size=SCHEME.box_count) * 0.1
    w.critic_trace[:] = rng.normal(size=SCHEME.box_count) * 0.1
    ref = (w.actor_w.copy(), w.critic_w.copy(),
           w.actor_trace.copy(), w.critic_trace.copy())
    transitions = [(5, 1, 0.0, 9), (9, 0, 0.0, 5), (5, 1, -1.0, FAILURE)]
    for box, y, reward, next_box in transitions:
        r_hat = ac_update(w, box, y, reward, next_box, h)
        ref = oracle_update(*ref, box, y, reward, next_box, h)
        assert abs(r_hat - ref[4]) < 1e-12
        np.testing.assert_allclose(w.actor_w, ref[0], atol=1e-12)
        np.testing.assert_allclose(w.critic_w, ref[1], atol=1e-12)
        np.testing.assert_allclose(w.actor_trace, ref[2], atol=1e-12)
        np.testing.assert_allclose(w.critic_trace, ref[3], atol=1e-12)


def test_ac_update_failure_box_rejected():
    with pytest.raises(ValueError):
        ac_update(AcWeights.zeros(SCHEME), FAILURE, 1, -1.0, FAILURE, AcHyper())


def test_ac_select_rules():
    h = AcHyper(noise_sigma=0.1)
    w = AcWeights.zeros(SCHEME)
    w.actor_w[3] = 10.0  # overwhelms sigma=0.1 noise
    w.actor_w[4] = -10.0
    rng = np.random.default_rng(0)
    for _ in range(32):
        assert ac_select_action(w, 3, rng, h)[0] == Action.RIGHT
        assert ac_select_action(w, 4, rng, h)[0] == Action.LEFT
    # zero preference + noise: both actions occur
    picks = {ac_select_action(w, 0, rng, h)[0] for _ in range(64)}
    assert picks == {Action.LEFT, Action.RIGHT}
    # softmax rule saturates the same way for large preferences
    hs = AcHyper(action_rule="softmax")
    for _ in range(32):
        assert ac_select_action(w, 3, rng, hs)[0] == Action.RIGHT
        assert ac_select_action(w, 4, rng, hs)[0] == Action.LEFT
    with pytest.raises(ValueError):
        ac_select_action(w, FAILURE, rng, h)


def test_traces_reset_after_episode():
    w = AcWeights.zeros(SCHEME)
    run_episode(w, State(0, 0, 0, 0), episode_rng(0, 0), AcHyper(), P,
                SCHEME, 5000)
    assert np.all(w.actor_trace == 0.0)
    assert np.all(w.critic_trace == 0.0)
    assert np.any(w.critic_w != 0.0)  # but learning happened


def test_chunk_invariance():
    """One normal + one uniform per executed step: the chunk size feeding
    the kernel cannot change the trajectory or the weights."""
    outs = []
    for chunk in (1, 13, 4096):
        w = AcWeights.zeros(SCHEME)
        for ep in range(6):
            r = run_episode(w, State(0, 0, 0, 0), episode_rng(21, ep),
                            AcHyper(), P, SCHEME, 5000, chunk=chunk)
        outs.append((r.steps, r.final_state, w.actor_w.copy(), w.critic_w.copy()))
    for other in outs[1:]:
        assert outs[0][0] == other[0]
        assert outs[0][1] == other[1]
        np.testing.assert_array_equal(outs[0][2], other[2])
        np.testing.assert_array_equal(outs[0][3], other[3])


def test_determinism_and_learning_progress():
    runs = []
    for _ in range(2):
        w = AcWeights.zeros(SCHEME)
        steps = [run_episode(w, State(0, 0, 0, 0), episode_rng(3, ep),
                             AcHyper(), P, SCHEME, 100_000).steps
                 for ep in range(10)]
        runs.append(steps)
    assert runs[0] == runs[1]


def test_untrained_fails_by_pole():
    w = AcWeights.zeros(SCHEME)
    r = run_episode(w, State(0, 0, 0, 0), episode_rng(0, 0), AcHyper(), P,
                    SCHEME, 100_000)
    assert r.cause == POLE


def test_learn_false_freezes_weights():
    w = AcWeights.zeros(SCHEME)
    w.actor_w[:] = 0.01
    before = (w.actor_w.copy(), w.critic_w.copy())
    run_episode(w, State(0, 0, 0, 0), episode_rng(1, 0), AcHyper(), P,
                SCHEME, 500, learn=False)
    np.testing.assert_array_equal(w.actor_w, before[0])
    np.testing.assert_array_equal(w.critic_w, before[1])


def test_oob_start_rejected():
    with pytest.raises(ValueError):
        run_episode(AcWeights.zeros(SCHEME), State(0.5, 0, 0, 0),
                    episode_rng(0, 0), AcHyper(), P, SCHEME, 100)
