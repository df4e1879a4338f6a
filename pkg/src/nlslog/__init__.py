"""Positive single-lobe standing waves of the logarithmic NLS on a tadpole graph."""

from .errors import DimensionError, DomainError, IntegrationError, StepError
from .graph import GraphDomain, GraphFunction, VertexCondition
from .profile import StandingWave, assemble_standing_wave, matched_r0

__all__ = [
    "DimensionError", "DomainError", "IntegrationError", "StepError",
    "GraphDomain", "GraphFunction", "VertexCondition",
    "StandingWave", "assemble_standing_wave", "matched_r0",
]
__version__ = "0.1.0"
