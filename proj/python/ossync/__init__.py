"""Optimal stationary synchronisation of heterogeneous multi-agent networks."""

from ._ossync import *  # noqa: F401,F403
from ._ossync import OssError

__all__ = [name for name in dir() if not name.startswith("_")]
