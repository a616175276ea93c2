"""Exception hierarchy shared by the analysis, simulation and CLI layers."""


class PhaselockError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(PhaselockError, ValueError):
    """Vector has too few entries for the operation."""


class ValidationError(PhaselockError, ValueError):
    """Input violates a value constraint (non-finite entries, bad signs, malformed file)."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ParameterError(PhaselockError, ValueError):
    """A scalar parameter is outside its admissible range."""


class DegenerateInputError(PhaselockError, ValueError):
    """Centered frequencies are identically zero where a nonzero vector is needed."""


class CertificationError(PhaselockError):
    """A candidate fixed point failed its residual check."""

    def __init__(self, message: str, defect: float):
        super().__init__(f"{message} (defect={defect:.3e})")
        self.defect = defect


class CapacityError(PhaselockError):
    """Requested enumeration exceeds the configured size cap."""


class DivergenceError(PhaselockError, ArithmeticError):
    """Integration produced a non-finite state."""

    def __init__(self, message: str, last_time: float):
        super().__init__(f"{message} (last finite state at t={last_time:.6g})")
        self.last_time = last_time
