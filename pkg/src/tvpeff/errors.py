"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class TvpEffError(Exception):
    exit_code = 1


class ValidationError(TvpEffError, ValueError):
    exit_code = 2


class DomainError(ValidationError):
    pass


class AlignmentError(ValidationError):
    pass


class ImputationError(ValidationError):
    def __init__(self, message, positions=()):
        self.positions = list(positions)
        if self.positions:
            message = f"{message} (positions: {self.positions})"
        super().__init__(message)


class ConfigError(ValidationError):
    pass


class NumericalError(TvpEffError, ArithmeticError):
    exit_code = 3


class CollinearityError(NumericalError):
    pass


class IdentificationError(NumericalError):
    pass


class StageError(TvpEffError):
    """Wraps an error raised inside a pipeline stage, keeping its exit code."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 1)
        super().__init__(f"stage '{stage}' failed: {cause}")
