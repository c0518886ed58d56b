"""ecasim: slot-accurate dense-WLAN MAC simulator.

Compares CSMA/CA (binary exponential backoff), CSMA/ECA (Hysteresis +
Fair Share deterministic backoff) and CSMA/ECA-DR (distributed reservation
plus contender-count-driven contention windows) under four-category
differentiated traffic on a single-hop, error-free channel.
"""

from .config import (
    AC,
    MacConfig,
    PhyConfig,
    Protocol,
    ScenarioConfig,
    ScenarioError,
    TrafficProfile,
    default_sim_config,
    load_scenario,
    parse_scenario,
    serialize_scenario,
)
from .engine import Simulation, run
from .metrics import RunMetrics, aggregate, jain

__all__ = [
    "AC",
    "MacConfig",
    "PhyConfig",
    "Protocol",
    "ScenarioConfig",
    "ScenarioError",
    "TrafficProfile",
    "default_sim_config",
    "load_scenario",
    "parse_scenario",
    "serialize_scenario",
    "Simulation",
    "run",
    "RunMetrics",
    "aggregate",
    "jain",
]

__version__ = "0.1.0"
