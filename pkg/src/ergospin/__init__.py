"""Disordered quantum spin lattices at finite volume: ergodic interactions,
Lieb-Robinson certificates, ground states, Cesaro-averaged states and GNS
intertwiners."""

__version__ = "0.1.0"

from .config import TOL, CertificationError, ConstructionError, ErgospinError, InputError, ResourceError
from .disorder import DisorderField, EnsembleSpec, Law
from .ffunction import FFunction, convolution_constant, uniform_norm
from .interaction import Interaction, assemble, f_norm, rough_norm_bound
from .lattice import Volume, ball, chain
from .operators import LocalOperator, StateFunctional

__all__ = [
    "TOL",
    "CertificationError",
    "ConstructionError",
    "DisorderField",
    "EnsembleSpec",
    "ErgospinError",
    "FFunction",
    "InputError",
    "Interaction",
    "Law",
    "LocalOperator",
    "ResourceError",
    "StateFunctional",
    "Volume",
    "assemble",
    "ball",
    "chain",
    "convolution_constant",
    "f_norm",
    "rough_norm_bound",
    "uniform_norm",
]
