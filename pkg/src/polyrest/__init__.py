"""Polyhedral inner restrictions of power-flow feasibility regions.

Builds linear constraint systems whose feasible loads are guaranteed to
admit a power-flow solution within a chosen voltage band on radial
distribution networks, and runs a sequential linear-programming loop
over them so every iterate stays power-flow feasible.
"""

from importlib import resources

from .errors import (
    DeltaOutOfRange,
    Divergence,
    Infeasible,
    InfeasibleCenter,
    InvalidInitialPoint,
    NoFeasiblePoint,
    NonConvergence,
    ParseError,
    PolyrestError,
    TopologyError,
    Unbounded,
    ZeroVoltage,
)
from .linprog import BoxBounds, LinearObjective
from .network import BusMatrices, NetworkTopology, build_bus_matrices, parse_network
from .powerflow import (
    FixedPointConfig,
    OperatingPoint,
    SplitLoadVector,
    VoltageProfile,
    fixed_point_solve,
    is_delta_stable,
    make_operating_point,
    pf_residual,
    slack_injection,
)
from .restriction import (
    PolyhedralRestriction,
    build_restriction,
    build_restriction_nominal,
    contains,
    normalize_split,
)
from .seqopt import SeqOptConfig, SeqOptTrace, Termination
from .seqopt import run as run_seqopt

__version__ = "0.1.0"

__all__ = [
    "BoxBounds",
    "BusMatrices",
    "DeltaOutOfRange",
    "Divergence",
    "FixedPointConfig",
    "Infeasible",
    "InfeasibleCenter",
    "InvalidInitialPoint",
    "LinearObjective",
    "NetworkTopology",
    "NoFeasiblePoint",
    "NonConvergence",
    "OperatingPoint",
    "ParseError",
    "PolyhedralRestriction",
    "PolyrestError",
    "SeqOptConfig",
    "SeqOptTrace",
    "SplitLoadVector",
    "Termination",
    "TopologyError",
    "Unbounded",
    "VoltageProfile",
    "ZeroVoltage",
    "bundled_network",
    "build_bus_matrices",
    "build_restriction",
    "build_restriction_nominal",
    "contains",
    "fixed_point_solve",
    "is_delta_stable",
    "make_operating_point",
    "normalize_split",
    "parse_network",
    "pf_residual",
    "run_seqopt",
    "slack_injection",
]


def bundled_network(name: str) -> str:
    """Return the JSON text of a bundled example network."""
    return resources.files("polyrest.data").joinpath(f"{name}.json").read_text()
