"""Deformable cardiac registration, strain analysis and disease classification."""

from cardiomech._core import *  # noqa: F401,F403
from cardiomech import _core as core  # noqa: F401

__all__ = [name for name in dir(core) if not name.startswith("_")]
