"""Edge and cloud services, the wire protocol between them, the conveyor
simulator and its synthetic frame generator."""

from .cloud import CloudConfig, CloudService, serve_cloud
from .edge import EdgeConfig, EdgeService, serve_edge
from .simulator import ConveyorSimulator, LineItem, SimulatorConfig, run_simulator
from .synthetic import GroundTruth, SyntheticSpec, generate_synthetic, make_spec

__all__ = [
    "CloudConfig", "CloudService", "ConveyorSimulator", "EdgeConfig", "EdgeService",
    "GroundTruth", "LineItem", "SimulatorConfig", "SyntheticSpec",
    "generate_synthetic", "make_spec", "run_simulator", "serve_cloud", "serve_edge",
]
