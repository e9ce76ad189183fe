"""Distributed consensus on social situations.

A library and simulation harness in which mobile agents agree on the
existence, membership and head of social situations by fusing pairwise
subjective-logic opinions, evaluated against ground truth with
partition-agreement metrics.
"""

from .opinions import (
    EvidenceCounts,
    Opinion,
    decide,
    expectation,
    floor_uncertainty,
    fuse_averaging,
    fuse_averaging_multi,
    fuse_cumulative,
    vacuous,
)
from .protocol import Agent, AgentKind, ProtocolConfig, Role, resolve_conflict

__version__ = "0.1.0"

__all__ = [
    "Agent",
    "AgentKind",
    "EvidenceCounts",
    "Opinion",
    "ProtocolConfig",
    "Role",
    "decide",
    "expectation",
    "floor_uncertainty",
    "fuse_averaging",
    "fuse_averaging_multi",
    "fuse_cumulative",
    "resolve_conflict",
    "vacuous",
    "__version__",
]
