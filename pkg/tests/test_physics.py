"""Plant dynamics against an independent high-precision oracle."""

import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cartpole_lab.physics import (PhysicsParams, State, accelerations,
                                  integrator_code, step, wrap_angle)

P = PhysicsParams()


def oracle_accel(theta, theta_dot, force, p=P, dps=40):
    """Accelerations re-derived symbolically in mpmath, independent of the
    package kernels."""
    with mp.workdps(dps):
        th, thd, F = mp.mpf(theta), mp.mpf(theta_dot), mp.mpf(force)
        M, m, g, l = (mp.mpf(p.M), mp.mpf(p.m), mp.mpf(p.g), mp.mpf(p.l))
        s, c = mp.sin(th), mp.cos(th)
        num = (M + m) * g * s - c * (F + m * l * thd ** 2 * s)
        den = mp.mpf(4) / 3 * (M + m) * l - m * l * c ** 2
        thdd = num / den
        xdd = (F + m * l * (thd ** 2 * s - thdd * c)) / (M + m)
        return float(thdd), float(xdd)


def random_states(n, rng):
    return [State(rng.uniform(-math.pi, math.pi), rng.uniform(-8, 8),
                  rng.uniform(-2.4, 2.4), rng.uniform(-3, 3))
            for _ in range(n)]


def test_accelerations_match_oracle():
    rng = np.random.default_rng(7)
    for s in random_states(50, rng):
        for force in (-10.0, -3.3, 0.0, 5.7, 10.0):
            got = accelerations(s, force, P)
            want = oracle_accel(s.theta, s.theta_dot, force)
            for g, w in zip(got, want):
                assert abs(g - w) <= 1e-12 * max(1.0, abs(w))


def test_accelerations_upright_rest():
    # unforced upright rest is an equilibrium
    assert accelerations(State(0, 0, 0, 0), 0.0, P) == (0.0, 0.0)
    # hanging rest is an equilibrium too
    thdd, xdd = accelerations(State(math.pi, 0, 0, 0), 0.0, P)
    assert abs(thdd) < 1e-15 and abs(xdd) < 1e-15


@settings(max_examples=200, deadline=None)
@given(theta=st.floats(-math.pi, math.pi), theta_dot=st.floats(-10, 10),
       force=st.floats(-30, 30))
def test_acceleration_mirror_symmetry(theta, theta_dot, force):
    """Negating (theta, theta_dot, force) negates both accelerations
    exactly (every term flips sign bit for bit)."""
    a = accelerations(State(theta, theta_dot, 0, 0), force, P)
    b = accelerations(State(-theta, -theta_dot, 0, 0), -force, P)
    assert a[0] == -b[0] and a[1] == -b[1]


def test_euler_step_is_explicit():
    """Positions advance with the pre-step velocities; velocities with the
    pre-step accelerations."""
    s = State(0.1, -0.4, 0.3, 0.8)
    thdd, xdd = accelerations(s, 5.0, P)
    out = step(s, 5.0, P)  # default integrator: euler
    assert out.theta == s.theta + P.tau * s.theta_dot
    assert out.x == s.x + P.tau * s.x_dot
    assert out.theta_dot == s.theta_dot + P.tau * thdd
    assert out.x_dot == s.x_dot + P.tau * xdd


def test_rk4_substep_convergence():
    s = State(0.4, 1.0, -0.2, 0.5)
    a = step(s, 10.0, P, integrator="rk4", substeps=4)
    b = step(s, 10.0, P, integrator="rk4", substeps=8)
    for u, v in zip(a, b):
        assert abs(u - v) < 1e-10


def test_rk4_agrees_with_euler_to_first_order():
    s = State(0.05, 0.0, 0.0, 0.0)
    a = step(s, 0.0, P)
    b = step(s, 0.0, P, integrator="rk4")
    for u, v in zip(a, b):
        assert abs(u - v) < 1e-3


def test_unknown_integrator_rejected():
    with pytest.raises(ValueError):
        step(State(0, 0, 0, 0), 0.0, P, integrator="verlet")
    with pytest.raises(ValueError):
        integrator_code("verlet")
    assert integrator_code("euler") != integrator_code("rk4")


def test_params_validation():
    with pytest.raises(ValueError):
        PhysicsParams(M=0.0)
    with pytest.raises(ValueError):
        PhysicsParams(tau=-0.01)
    with pytest.raises(ValueError):
        PhysicsParams(b=-1.0)
    PhysicsParams(b=0.5)  # friction coefficient may be positive


def test_wrap_angle_basics():
    assert wrap_angle(0.0) == 0.0
    assert wrap_angle(math.pi) == pytest.approx(math.pi)
    assert wrap_angle(-math.pi) == pytest.approx(math.pi)  # (-pi, pi] closure
    assert wrap_angle(3 * math.pi) == pytest.approx(math.pi)


@settings(max_examples=200, deadline=None)
@given(theta=st.floats(-1e6, 1e6, allow_nan=False))
def test_wrap_angle_range_and_idempotence(theta):
    w = wrap_angle(theta)
    assert -math.pi < w <= math.pi
    assert wrap_angle(w) == pytest.approx(w, abs=1e-9)
    assert wrap_angle(theta + 2 * math.pi) == pytest.approx(w, abs=1e-6)
