"""Exception hierarchy shared by the library and the CLI."""


class TkmError(Exception):
    """Base class for all library errors."""

    exit_code = 3


class ArgumentError(TkmError, ValueError):
    """Invalid argument: bad shapes, ranks, parameters or labels."""


class DomainError(TkmError, ValueError):
    """Input value lies outside the domain of the feature map."""


class SizeError(TkmError, ValueError):
    """A dense object would exceed the configured size cap."""


class FeatureMapMismatch(ArgumentError):
    """Source and target models do not share a feature map."""


class GenerationError(TkmError, RuntimeError):
    """Synthetic data generation failed (rejection sampling exhausted)."""


class NumericalError(TkmError, ArithmeticError):
    """A linear system could not be solved even with jitter."""

    exit_code = 4
