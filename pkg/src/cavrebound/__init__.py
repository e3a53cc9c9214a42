"""Household VMT demand under fuel and time prices, and CAV induced-travel
and energy-rebound forecasts."""

__version__ = "0.1.0"

from . import core_model, design, estimator, forecast, ingest, synthetic  # noqa: E402,F401
from ._kernels import BACKEND as KERNEL_BACKEND  # noqa: E402,F401
