"""System-level simulator for NB-IoT cellular networks."""

from .config import ConfigError, ConfigParseError, SimConfig, load_config
from .engine import SimResult, SimulationError, Simulator, run

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ConfigParseError",
    "SimConfig",
    "SimResult",
    "SimulationError",
    "Simulator",
    "load_config",
    "run",
]
