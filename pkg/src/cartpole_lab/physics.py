"""Deterministic fixed-timestep cart-pole dynamics.

State convention: theta = 0 is the upright position, theta = pi is hanging;
theta is kept unwrapped.  Force is continuous at this layer; the two-action
restriction belongs to :mod:`cartpole_lab.env`.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

from ._accel import maybe_njit

EULER = 0
RK4 = 1

_INTEGRATORS = {"euler": EULER, "rk4": RK4}


class State(NamedTuple):
    """Continuous plant state (theta rad, theta_dot rad/s, x m, x_dot m/s)."""

    theta: float
    theta_dot: float
    x: float
    x_dot: float


@dataclass(frozen=True)
class PhysicsParams:
    """Plant parameters.

    ``b`` is a cart viscous friction coefficient (N.s/m) used only by the
    linearization in :mod:`cartpole_lab.classical`; the nonlinear equations
    of motion are frictionless.
    """

    M: float = 0.711  # cart mass, kg
    m: float = 0.209  # pole mass, kg
    g: float = 9.8  # gravity, m/s^2
    l: float = 0.326  # pivot to pole centre of mass, m
    tau: float = 0.02  # control / integration timestep, s
    force_mag: float = 10.0  # actuation magnitude, N
    b: float = 0.0  # cart viscous friction, N.s/m

    def __post_init__(self):
        if min(self.M, self.m, self.g, self.l, self.tau, self.force_mag) <= 0:
            raise ValueError("M, m, g, l, tau, force_mag must all be positive")
        if self.b < 0:
            raise ValueError("friction coefficient b must be >= 0")


@maybe_njit
def accel_kernel(theta, theta_dot, force, M, m, g, l):
    """Angular and linear accelerations of the nonlinear plant."""
    sin_t = math.sin(theta)
    cos_t = math.cos(theta)
    num = (M + m) * g * sin_t - cos_t * (force + m * l * theta_dot * theta_dot * sin_t)
    den = (4.0 / 3.0) * (M + m) * l - m * l * cos_t * cos_t
    theta_dd = num / den
    x_dd = (force + m * l * (theta_dot * theta_dot * sin_t - theta_dd * cos_t)) / (M + m)
    return theta_dd, x_dd


@maybe_njit
def euler_step_kernel(theta, theta_dot, x, x_dot, force, M, m, g, l, tau):
    """One explicit-Euler step: positions with old velocities, velocities
    with accelerations evaluated at the pre-step state."""
    theta_dd, x_dd = accel_kernel(theta, theta_dot, force, M, m, g, l)
    theta_new = theta + tau * theta_dot
    x_new = x + tau * x_dot
    theta_dot_new = theta_dot + tau * theta_dd
    x_dot_new = x_dot + tau * x_dd
    return theta_new, theta_dot_new, x_new, x_dot_new


@maybe_njit
def rk4_step_kernel(theta, theta_dot, x, x_dot, force, M, m, g, l, tau, substeps):
    """Classic RK4 with zero-order-hold force, ``substeps`` per period."""
    h = tau / substeps
    for _ in range(substeps):
        a1, b1 = accel_kernel(theta, theta_dot, force, M, m, g, l)
        k1 = (theta_dot, a1, x_dot, b1)
        a2, b2 = accel_kernel(theta + 0.5 * h * k1[0], theta_dot + 0.5 * h * k1[1], force, M, m, g, l)
        k2 = (theta_dot + 0.5 * h * k1[1], a2, x_dot + 0.5 * h * k1[3], b2)
        a3, b3 = accel_kernel(theta + 0.5 * h * k2[0], theta_dot + 0.5 * h * k2[1], force, M, m, g, l)
        k3 = (theta_dot + 0.5 * h * k2[1], a3, x_dot + 0.5 * h * k2[3], b3)
        a4, b4 = accel_kernel(theta + h * k3[0], theta_dot + h * k3[1], force, M, m, g, l)
        k4 = (theta_dot + h * k3[1], a4, x_dot + h * k3[3], b4)
        theta += (h / 6.0) * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
        theta_dot += (h / 6.0) * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
        x += (h / 6.0) * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
        x_dot += (h / 6.0) * (k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3])
    return theta, theta_dot, x, x_dot


@maybe_njit
def plant_step_kernel(theta, theta_dot, x, x_dot, force, M, m, g, l, tau,
                      integ, substeps):
    """Dispatch one control-period step to the selected integrator."""
    if integ == RK4:
        return rk4_step_kernel(theta, theta_dot, x, x_dot, force, M, m, g, l,
                               tau, substeps)
    return euler_step_kernel(theta, theta_dot, x, x_dot, force, M, m, g, l, tau)


def integrator_code(name: str) -> int:
    try:
        return _INTEGRATORS[name]
    except KeyError:
        raise ValueError(f"unknown integrator {name!r}") from None


def accelerations(s: State, force: float, p: PhysicsParams) -> tuple[float, float]:
    """(theta_ddot, x_ddot) at state ``s`` under applied force (N)."""
    return accel_kernel(s.theta, s.theta_dot, force, p.M, p.m, p.g, p.l)


def step(s: State, force: float, p: PhysicsParams,
         integrator: str = "euler", substeps: int = 1) -> State:
    """Advance the plant one control period.

    Explicit Euler is the default and the integrator used by all training
    kernels; RK4 with configurable substeps is opt-in.
    """
    if integrator == "euler":
        out = euler_step_kernel(s.theta, s.theta_dot, s.x, s.x_dot, force,
                                p.M, p.m, p.g, p.l, p.tau)
    elif integrator == "rk4":
        out = rk4_step_kernel(s.theta, s.theta_dot, s.x, s.x_dot, force,
                              p.M, p.m, p.g, p.l, p.tau, substeps)
    else:
        raise ValueError(f"unknown integrator {integrator!r}")
    return State(*out)


@maybe_njit
def wrap_angle(theta: float) -> float:
    """Wrap an unwrapped angle into (-pi, pi]."""
    wrapped = (theta + math.pi) % (2.0 * math.pi)
    if wrapped <= 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi
