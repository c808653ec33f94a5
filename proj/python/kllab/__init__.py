"""KL-regularized imitation toolkit: Bayes mixtures, planners, divergences and the pessimistic imitator."""

from ._core import *  # noqa: F401,F403
from ._core import __doc__  # noqa: F401
