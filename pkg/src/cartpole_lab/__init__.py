"""cartpole-lab: a deterministic cart-pole control laboratory.

Plant physics, BOXES state quantization, tabular / actor-critic / linear
function-approximation reinforcement learning, energy-method swing-up with
LQR stabilization, and a reproducible experiment harness.  Hot loops are
numba-compiled with a pure-numpy fallback (set CARTPOLE_LAB_NUMBA=0).
"""

from ._accel import NUMBA_ENABLED
from .codec import FAILURE, BoxScheme, FeatureScales, box_scheme, features, get_box
from .env import Action, CartPoleEnv, EpisodeConfig, ResetMode, env_step, reset
from .physics import PhysicsParams, State, accelerations, step, wrap_angle

__version__ = "1.0.0"

__all__ = [
    "NUMBA_ENABLED", "FAILURE", "BoxScheme", "FeatureScales", "box_scheme",
    "features", "get_box", "Action", "CartPoleEnv", "EpisodeConfig",
    "ResetMode", "env_step", "reset", "PhysicsParams", "State",
    "accelerations", "step", "wrap_angle", "__version__",
]
