"""Parabolic motions, Melnikov potentials, scattering maps and drift chains
for the restricted planar elliptic three-body problem."""
from .errors import CollisionError, ConvergenceError, DomainError, NoiseFloorError, StripExitError
from .primaries import PrimaryEphemeris
from .scattering import CylinderPoint

__version__ = "0.1.0"

__all__ = ["CollisionError", "ConvergenceError", "DomainError", "NoiseFloorError", "StripExitError",
           "PrimaryEphemeris", "CylinderPoint", "__version__"]
