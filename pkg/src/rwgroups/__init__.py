"""Exact and Monte Carlo computations for random walks on free groups and lattices."""

from .errors import (
    CapExceeded,
    DepthError,
    HarmonicityError,
    NoContractionCertificate,
    NonSymmetricMeasure,
    ParseError,
    QuasiHarmonicityError,
    RadiusExceeded,
    RandomWalkError,
    Status,
    StructuralError,
)
from .groups import FreeGroup, Lattice, WordMetric, parse_group

__version__ = "0.1.0"
