"""Differentiable Gaussian splatting with pixel-anchored 4D alignment."""

from _splatalign import *  # noqa: F401,F403
from _splatalign import __doc__  # noqa: F401
