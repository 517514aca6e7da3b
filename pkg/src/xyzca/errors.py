"""Exception types shared across the package."""


class XyzcaError(Exception):
    """Base class for all package errors."""


class DimensionError(XyzcaError):
    """Lattice dimensions violate the three-colorability constraint."""


class InconsistentSystem(XyzcaError):
    """A GF(2) linear system has no solution."""


class InvalidSyndrome(XyzcaError):
    """Syndrome cannot be produced by the modeled error set."""


class NotInNormalizer(XyzcaError):
    """Operation requires a zero-syndrome (normalizer) frame."""


class NotNeutral(XyzcaError):
    """Cluster cannot be neutralized by a correction inside its box."""


class DecoderFailure(XyzcaError):
    """Heralded decoder failure: defects survived every scale."""


class DomainError(XyzcaError):
    """Numeric argument outside the valid domain."""


class NegativeRate(XyzcaError):
    """Rate table misconfiguration produced a negative rate."""


class ConfigError(XyzcaError):
    """Inconsistent simulation or experiment configuration."""


class ProbabilityError(XyzcaError):
    """Probabilities are negative or sum beyond one."""


class EmptyInput(XyzcaError):
    """Statistic requested over an empty sample list."""


class DegenerateFit(XyzcaError):
    """Insufficient or collinear data for the requested fit."""


class UsageError(XyzcaError):
    """Bad command line or config file input."""
