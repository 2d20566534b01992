"""State coding: box discretization (getBox / getBox2) and VFA features.

Boxes follow the BOXES tradition: the pole angle and angular velocity are
binned in degrees and degrees/second, the cart position and velocity in
metres and metres/second.  Interval closure is half-open, ``(a, b]``, with
the outermost intervals closed at the failure bounds; any state with
``|theta| > 12 deg`` or ``|x| > 2.4 m`` codes to the FAILURE sentinel.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ._accel import maybe_njit
from .physics import State

FAILURE = -1

THETA_LIMIT_DEG = 12.0
X_LIMIT = 2.4

RAD2DEG = 180.0 / math.pi

# Interior bin boundaries (upper edge of every bin but the last).
_GETBOX_THETA = (-6.0, -1.0, 0.0, 1.0, 6.0)
_GETBOX2_THETA = (-6.0, -4.0, -3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0, 4.0, 6.0)
_THETA_DOT = (-50.0, 50.0)  # deg/s
_X = (-0.8, 0.8)  # m
_X_DOT = (-0.5, 0.5)  # m/s


@dataclass(frozen=True)
class BoxScheme:
    """A box quantization of the 4-D state space.

    ``*_edges`` hold interior boundaries only; a variable with ``k`` edges
    has ``k + 1`` bins.  Index composition is row-major with the theta bin
    outermost.
    """

    name: str
    theta_edges: np.ndarray  # deg
    theta_dot_edges: np.ndarray  # deg/s
    x_edges: np.ndarray  # m
    x_dot_edges: np.ndarray  # m/s

    def __post_init__(self):
        for edges in (self.theta_edges, self.theta_dot_edges, self.x_edges, self.x_dot_edges):
            if not np.all(np.diff(edges) > 0):
                raise ValueError("bin edges must be strictly increasing")

    @property
    def box_count(self) -> int:
        return ((len(self.theta_edges) + 1) * (len(self.theta_dot_edges) + 1)
                * (len(self.x_edges) + 1) * (len(self.x_dot_edges) + 1))


_SCHEMES = {
    "getBox": BoxScheme("getBox",
                        np.array(_GETBOX_THETA), np.array(_THETA_DOT),
                        np.array(_X), np.array(_X_DOT)),
    "getBox2": BoxScheme("getBox2",
                         np.array(_GETBOX2_THETA), np.array(_THETA_DOT),
                         np.array(_X), np.array(_X_DOT)),
}


def box_scheme(name: str) -> BoxScheme:
    """Look up a scheme by name ("getBox": 162 boxes, "getBox2": 324)."""
    try:
        return _SCHEMES[name]
    except KeyError:
        raise ValueError(f"unknown box scheme {name!r}") from None


@maybe_njit
def _bin_index(value, edges):
    i = 0
    while i < edges.shape[0] and value > edges[i]:
        i += 1
    return i


@maybe_njit
def get_box_kernel(theta, theta_dot, x, x_dot,
                   theta_edges, theta_dot_edges, x_edges, x_dot_edges):
    """Box index of a state, or FAILURE (-1) when out of bounds."""
    theta_deg = theta * RAD2DEG
    if theta_deg > THETA_LIMIT_DEG or theta_deg < -THETA_LIMIT_DEG:
        return FAILURE
    if x > X_LIMIT or x < -X_LIMIT:
        return FAILURE
    theta_dot_deg = theta_dot * RAD2DEG
    idx = _bin_index(theta_deg, theta_edges)
    idx = idx * (theta_dot_edges.shape[0] + 1) + _bin_index(theta_dot_deg, theta_dot_edges)
    idx = idx * (x_edges.shape[0] + 1) + _bin_index(x, x_edges)
    idx = idx * (x_dot_edges.shape[0] + 1) + _bin_index(x_dot, x_dot_edges)
    return idx


def get_box(s: State, scheme: BoxScheme) -> int:
    """Discretize ``s`` under ``scheme``; FAILURE for out-of-bounds states."""
    return int(get_box_kernel(s.theta, s.theta_dot, s.x, s.x_dot,
                              scheme.theta_edges, scheme.theta_dot_edges,
                              scheme.x_edges, scheme.x_dot_edges))


@dataclass(frozen=True)
class FeatureScales:
    """Normalization scales for the two unbounded state variables.

    Bounded variables are normalized by their failure bounds; the velocity
    scales are soft bounds observed in balanced runs and are configurable.
    """

    theta_dot_scale: float = 115.0  # deg/s
    x_dot_scale: float = 1.5  # m/s


@maybe_njit
def features_kernel(theta, theta_dot, x, x_dot, theta_dot_scale_deg, x_dot_scale):
    f0 = theta * RAD2DEG / THETA_LIMIT_DEG
    f1 = theta_dot * RAD2DEG / theta_dot_scale_deg
    f2 = x / X_LIMIT
    f3 = x_dot / x_dot_scale
    return f0, f1, f2, f3


def features(s: State, scales: FeatureScales = FeatureScales()) -> np.ndarray:
    """Normalized feature vector (theta, theta_dot, x, x_dot)."""
    return np.array(features_kernel(s.theta, s.theta_dot, s.x, s.x_dot,
                                    scales.theta_dot_scale, scales.x_dot_scale))
