"""Classical control: energy-method swing-up, linearization, CARE, LQR.

The swing-up law drives the pendulum's mechanical energy toward the
upright value (0 by normalization) while damping cart velocity; LQR
stabilizes the linearized plant with a gain from the continuous algebraic
Riccati equation, solved by Newton-Kleinman iteration with Bartels-Stewart
Lyapunov solves.

Both controllers saturate their commanded force to ``+-force_mag`` so all
controllers share the actuator envelope.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ._accel import maybe_njit
from .codec import X_LIMIT
from .physics import PhysicsParams, State, euler_step_kernel, wrap_angle

SWINGUP_RUNNING = 0
SWINGUP_HANDOVER = 1
SWINGUP_CART_VIOLATION = 2

KICK_DURATION_S = 0.25  # fixed nudge out of the hanging dead point


@dataclass(frozen=True)
class SwingupParams:
    """Energy-control gains; defaults chosen to swing up the default plant
    without hitting the track ends."""

    k: float = 1.5  # force per J.rad/s
    lam: float = 2.0  # cart-velocity restriction weight, s/m
    E0: float = 0.0  # target energy (upright value), J

    def __post_init__(self):
        if self.k <= 0:
            raise ValueError("k must be > 0")
        if self.lam < 0:
            raise ValueError("lam must be >= 0")


def pole_inertia(p: PhysicsParams) -> tuple[float, float]:
    """(I_p, I_bar_p) inertia terms of the swing-up energy model.

    I_p is the pole's moment of inertia about the pivot; I_bar_p reduces
    it by the cart-recoil term (ml)^2/(M+m) so that the energy level
    E = 0 coincides with the separatrix of the coupled cart-pole plant.
    With the unreduced inertia the energy target is reached while the
    swing amplitude is still ~75 deg short of upright and the pump shuts
    off early.
    """
    I_p = (4.0 / 3.0) * p.m * p.l * p.l
    return I_p, I_p - (p.m * p.l) ** 2 / (p.M + p.m)


@maybe_njit
def energy_kernel(theta, theta_dot, M, m, g, l):
    I_bar = (4.0 / 3.0) * m * l * l - (m * l) ** 2 / (M + m)
    return 0.5 * I_bar * theta_dot * theta_dot + m * g * l * (math.cos(theta) - 1.0)


@maybe_njit
def swingup_force_kernel(theta, theta_dot, x_dot, k, lam, E0, M, m, g, l, force_mag):
    E = energy_kernel(theta, theta_dot, M, m, g, l)
    u = k * ((E - E0) * theta_dot * math.cos(theta) - lam * x_dot)
    if u > force_mag:
        u = force_mag
    elif u < -force_mag:
        u = -force_mag
    return u


def pendulum_energy(s: State, p: PhysicsParams) -> float:
    """Total pendulum energy, normalized to 0 at upright rest (J)."""
    return energy_kernel(s.theta, s.theta_dot, p.M, p.m, p.g, p.l)


def tilted_rest_energy(p: PhysicsParams, tilt_deg: float) -> float:
    """Energy of a motionless pole ``tilt_deg`` away from upright (J, < 0).

    Used as a slightly negative swing-up target E0: the pump then stalls
    just inside the handover cone instead of at the separatrix, which
    hands the stabilizer a slow mid-cone state rather than a cone-edge
    crossing."""
    return p.m * p.g * p.l * (math.cos(math.radians(tilt_deg)) - 1.0)


def swingup_force(s: State, sp: SwingupParams, p: PhysicsParams) -> float:
    """Energy-shaping force, saturated to the actuator envelope (N)."""
    return swingup_force_kernel(s.theta, s.theta_dot, s.x_dot,
                                sp.k, sp.lam, sp.E0,
                                p.M, p.m, p.g, p.l, p.force_mag)


@maybe_njit
def swingup_chunk(s, n_steps, kick_remaining, k, lam, E0, switch_rad, gate,
                  M, m, g, l, tau, force_mag):
    """Run swing-up until handover, cart violation, or ``n_steps`` steps.

    Returns (steps_done, status, kick_remaining).  The handover predicate
    is |wrap(theta)| <= switch_rad and |theta_dot| <= gate, evaluated on
    the post-step state.
    """
    for i in range(n_steps):
        if kick_remaining > 0:
            force = force_mag
            kick_remaining -= 1
        else:
            force = swingup_force_kernel(s[0], s[1], s[3], k, lam, E0,
                                         M, m, g, l, force_mag)
        s[0], s[1], s[2], s[3] = euler_step_kernel(
            s[0], s[1], s[2], s[3], force, M, m, g, l, tau)
        if s[2] > X_LIMIT or s[2] < -X_LIMIT:
            return i + 1, SWINGUP_CART_VIOLATION, kick_remaining
        w = wrap_angle(s[0])
        if -switch_rad <= w <= switch_rad and -gate <= s[1] <= gate:
            return i + 1, SWINGUP_HANDOVER, kick_remaining
    return n_steps, SWINGUP_RUNNING, kick_remaining


# --- Linearization ----------------------------------------------------------

JACOBIAN = "jacobian"
PAPER = "paper"


def linearize_upright(p: PhysicsParams, mode: str = JACOBIAN) -> tuple[np.ndarray, np.ndarray]:
    """(A, B) of the plant linearized at the upright equilibrium.

    JACOBIAN mode differentiates the nonlinear equations of motion
    analytically (with cart friction b entering as force -b*x_dot).
    PAPER mode returns an alternative published matrix pair kept for
    comparison; it is not dimensionally consistent with JACOBIAN mode and
    is never the default.
    """
    M, m, g, l, b = p.M, p.m, p.g, p.l, p.b
    if mode == JACOBIAN:
        den0 = (4.0 / 3.0) * (M + m) * l - m * l
        A = np.array([
            [0.0, 1.0, 0.0, 0.0],
            [(M + m) * g / den0, 0.0, 0.0, b / den0],
            [0.0, 0.0, 0.0, 1.0],
            [-m * l * g / den0, 0.0, 0.0, -b * (1.0 + m * l / den0) / (M + m)],
        ])
        B = np.array([[0.0], [-1.0 / den0], [0.0], [(1.0 + m * l / den0) / (M + m)]])
        return A, B
    if mode == PAPER:
        I_p, _ = pole_inertia(p)
        d1 = M + m + m * m * l * l
        d2 = (M + m) * I_p / (m * l) + m * l
        A = np.array([
            [0.0, 1.0, 0.0, 0.0],
            [0.0, I_p / d1, (m * m * l * l * g / I_p) / (M + m + m * m * l * l / I_p), 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [0.0, b / d2, (M + m) * g / d2, 0.0],
        ])
        B = np.array([[I_p / d1], [0.0], [-1.0], [1.0 / d2]])
        return A, B
    raise ValueError(f"unknown linearization mode {mode!r}")


def default_cost() -> tuple[np.ndarray, np.ndarray]:
    """Q = C^T C with C selecting theta and x; R = 1."""
    C = np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]])
    return C.T @ C, np.array([[1.0]])


# --- CARE solver ------------------------------------------------------------

class CareError(Exception):
    """Riccati solve failed; message carries iteration diagnostics."""


def care_residual(A, B, Q, R, P) -> float:
    Rinv = np.linalg.inv(R)
    return float(np.linalg.norm(A.T @ P + P @ A - P @ B @ Rinv @ B.T @ P + Q))


def _initial_stabilizing_gain(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Bass's method: K0 = B^T W^-1 with (A+beta I)W + W(A+beta I)^T = 2BB^T."""
    n = A.shape[0]
    if np.max(np.linalg.eigvals(A).real) < 0:
        return np.zeros((B.shape[1], n))
    beta = 1.0 + np.linalg.norm(A, ord="fro")
    Ash = A + beta * np.eye(n)
    W = scipy.linalg.solve_continuous_lyapunov(Ash, 2.0 * B @ B.T)
    try:
        K0 = np.linalg.solve(W.T, B).T
    except np.linalg.LinAlgError as exc:
        raise CareError(f"could not build an initial stabilizing gain: {exc}") from exc
    if np.max(np.linalg.eigvals(A - B @ K0).real) >= 0:
        raise CareError("initial gain does not stabilize A; (A, B) may not be stabilizable")
    return K0


def solve_care(A, B, Q, R, rel_tol: float = 1e-8, max_iter: int = 60) -> np.ndarray:
    """Stabilizing solution of A'P + PA - PB R^-1 B'P + Q = 0.

    Newton-Kleinman iteration: each step solves a Lyapunov equation for the
    current closed loop (Bartels-Stewart via scipy).  Raises
    :class:`CareError` when no stabilizing solution is reached within
    ``max_iter`` iterations at the residual bound
    ``rel_tol * (1 + ||P||_F)``.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.asarray(B, dtype=float).reshape(A.shape[0], -1)
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    R = np.atleast_2d(np.asarray(R, dtype=float))
    if np.min(np.linalg.eigvalsh(R)) <= 0:
        raise CareError("R must be positive definite")
    Rinv = np.linalg.inv(R)
    K = _initial_stabilizing_gain(A, B)
    P = np.zeros_like(A)
    residual = math.inf
    for it in range(1, max_iter + 1):
        Ac = A - B @ K
        S = Q + K.T @ R @ K
        P = scipy.linalg.solve_continuous_lyapunov(Ac.T, -S)
        P = 0.5 * (P + P.T)
        K = Rinv @ B.T @ P
        residual = care_residual(A, B, Q, R, P)
        if residual <= rel_tol * (1.0 + np.linalg.norm(P)):
            if np.max(np.linalg.eigvals(A - B @ K).real) >= 0:
                raise CareError(
                    f"converged to a non-stabilizing solution after {it} iterations")
            return P
    raise CareError(
        f"no convergence after {max_iter} iterations, final residual {residual:.3e}")


@dataclass(frozen=True)
class LqrSolution:
    A: np.ndarray
    B: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    P: np.ndarray
    K: np.ndarray  # shape (1, 4)

    @property
    def residual(self) -> float:
        return care_residual(self.A, self.B, self.Q, self.R, self.P)

    @property
    def closed_loop_eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvals(self.A - self.B @ self.K)


def lqr_solution(p: PhysicsParams, mode: str = JACOBIAN) -> LqrSolution:
    """Full LQR bundle for the upright-linearized plant."""
    A, B = linearize_upright(p, mode)
    Q, R = default_cost()
    P = solve_care(A, B, Q, R)
    K = np.linalg.inv(R) @ B.T @ P
    return LqrSolution(A, B, Q, R, P, K)


def lqr_force(s: State, sol: LqrSolution, force_mag: float) -> float:
    """u = -K x, saturated to the actuator envelope."""
    x = np.array([s.theta, s.theta_dot, s.x, s.x_dot])
    u = float(-(sol.K @ x)[0])
    return max(-force_mag, min(force_mag, u))


@maybe_njit
def lqr_chunk(s, n_steps, k0, k1, k2, k3, theta_lim_rad,
              M, m, g, l, tau, force_mag, stats, step_offset, track_from):
    """Closed-loop LQR simulation for up to ``n_steps`` steps.

    Returns (steps_done, terminated) where terminated means the state left
    |theta| <= theta_lim_rad or |x| <= 2.4 m.
    """
    for i in range(n_steps):
        u = -(k0 * s[0] + k1 * s[1] + k2 * s[2] + k3 * s[3])
        if u > force_mag:
            u = force_mag
        elif u < -force_mag:
            u = -force_mag
        s[0], s[1], s[2], s[3] = euler_step_kernel(
            s[0], s[1], s[2], s[3], u, M, m, g, l, tau)
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
        if (s[0] > theta_lim_rad or s[0] < -theta_lim_rad
                or s[2] > X_LIMIT or s[2] < -X_LIMIT):
            return i + 1, True
    return n_steps, False


# The paper's printed gain for its example system; reported as a diagnostic
# next to the computed gain, never used as a pass/fail reference.
PAPER_PRINTED_K = np.array([-1.0000, -1.7788, -26.3106, -3.8440])
