"""Round-based simulator of body area sensor networks comparing plain
multi-hop routing against the thermal-aware ATTEMPT scheme and its
mobility-supporting M-ATTEMPT variant."""

from .engine import MetricsRow, RunSummary, generate_traffic, run, step_round
from .model import (ConfigError, NodeClass, Packet, PacketKind, Protocol,
                    RadioParams, Route, SensorNode, SimConfig, ThermalParams,
                    World, build_topology, validate_config)

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "MetricsRow", "NodeClass", "Packet", "PacketKind",
    "Protocol", "RadioParams", "Route", "RunSummary", "SensorNode",
    "SimConfig", "ThermalParams", "World", "build_topology",
    "generate_traffic", "run", "step_round", "validate_config",
    "__version__",
]
