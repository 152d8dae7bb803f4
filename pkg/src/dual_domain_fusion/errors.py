"""Exception hierarchy shared by the library and the command-line interface."""

from typing import Optional


class FusionError(Exception):
    """Base class for every error raised by dual_domain_fusion."""

    exit_code = 1


class UsageError(FusionError):
    """Command-line arguments could not be parsed."""

    exit_code = 1


class FileFormatError(FusionError):
    """A file on disk does not follow the expected format."""

    exit_code = 2


class TensorFormatError(FileFormatError):
    """Invalid D2FT tensor file."""

    pass


class ImageFormatError(FileFormatError):
    """Unsupported or damaged image file."""

    pass


class ScoreFileError(FileFormatError):
    """Score CSV without the expected columns or with invalid labels."""

    pass


class ContractViolation(FusionError):
    """Inputs violate a precondition of an operation."""

    exit_code = 3


class ShapeError(ContractViolation, ValueError):
    """Tensor or image extents do not match."""

    pass


class InvalidShapeError(ShapeError):
    """Zero, negative or missing extents."""

    pass


class ConfigurationError(ContractViolation, ValueError):
    """Configuration values are inconsistent with each other or with the input."""

    pass


class DomainError(ContractViolation, ValueError):
    """An argument lies outside the domain of an operation."""

    pass


class NonFiniteError(DomainError):
    """An operation produced NaN or Inf."""

    pass


class ContractError(ContractViolation):
    """An operation was invoked in a state it does not support."""

    pass


class AcceptanceFailure(FusionError):
    """A verification or training run did not meet its acceptance criterion."""

    exit_code = 4


class EvaluationError(AcceptanceFailure):
    """The checked function was non-finite at a perturbed point."""

    def __init__(self, message: str, index: Optional[int] = None):
        super().__init__(message)
        self.index = index


class TrainingError(AcceptanceFailure):
    """Training diverged."""

    def __init__(self, message: str, step: Optional[int] = None):
        super().__init__(message)
        self.step = step


class GradientCheckFailure(AcceptanceFailure):
    """At least one module exceeded the gradient-check tolerance."""

    pass
