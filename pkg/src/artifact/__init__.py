"""Online learning algorithms with regret-bound checks."""

from . import bandit, classification, core, environments, first_order, ftrl, geometry, mirror_descent
from . import parameter_free, second_order
from .core import play, regret
from .environments import next_loss, online_to_batch, stream
from .geometry import lambert_w, project

__version__ = "0.1.0"

__all__ = [
    "bandit",
    "classification",
    "core",
    "environments",
    "first_order",
    "ftrl",
    "geometry",
    "lambert_w",
    "mirror_descent",
    "next_loss",
    "online_to_batch",
    "parameter_free",
    "play",
    "project",
    "regret",
    "second_order",
    "stream",
]
