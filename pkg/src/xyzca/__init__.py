"""Simulation and decoding laboratory for a noise-bias tailored color code."""

from .errors import (
    ConfigError,
    DecoderFailure,
    DegenerateFit,
    DimensionError,
    DomainError,
    EmptyInput,
    InconsistentSystem,
    InvalidSyndrome,
    NegativeRate,
    NotInNormalizer,
    NotNeutral,
    ProbabilityError,
    UsageError,
    XyzcaError,
)
from .lattice import (
    BLACK,
    WHITE,
    LatticeDims,
    NoiseParams,
    PauliFrame,
    QubitCoord,
    Sublattice,
    Syndrome,
    apply_pauli,
    build_lattice,
    energy,
    local_energy_change,
    stabilizer_support,
    syndrome,
)

__version__ = "0.1.0"
