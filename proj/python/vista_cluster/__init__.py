"""Mixture-of-state-space clustering of irregular emotion time series."""

from ._core import *  # noqa: F401,F403
from ._core import __version__, EMOTIONS  # noqa: F401
