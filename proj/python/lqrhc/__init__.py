"""Receding-horizon control of linear-quadratic problems with turnpike
structure."""

from lqrhc._core import *  # noqa: F401,F403
from lqrhc._core import __doc__  # noqa: F401

__version__ = "0.1.0"
