"""Grand-canonical statistical mechanics of test-particle gases on spacetimes with timelike Killing fields."""

from .errors import (
    DomainError,
    ModelError,
    NumericError,
    RelGasError,
    TruncationError,
    UnsupportedLimitError,
    ValidationError,
)
from .geometry import (
    AntiDeSitter,
    Ball,
    Box,
    DeSitter,
    EinsteinStatic,
    GasSpec,
    KerrCircularOrbit,
    Minkowski,
    PhysicalConstants,
    Shell,
)

__all__ = [
    "AntiDeSitter",
    "Ball",
    "Box",
    "DeSitter",
    "DomainError",
    "EinsteinStatic",
    "GasSpec",
    "KerrCircularOrbit",
    "Minkowski",
    "ModelError",
    "NumericError",
    "PhysicalConstants",
    "RelGasError",
    "Shell",
    "TruncationError",
    "UnsupportedLimitError",
    "ValidationError",
]
