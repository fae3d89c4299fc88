"""Binary energy-based models trained by ratio matching with gradient-guided importance sampling."""

from ._core import *  # noqa: F401,F403
from ._core import __doc__  # noqa: F401

__version__ = "0.1.0"
