"""Exception types raised across the simulator."""


class TangleFLError(Exception):
    """Base class for all simulator errors."""


class ConfigError(TangleFLError, ValueError):
    """Invalid configuration value or malformed config file."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InvalidReferenceError(TangleFLError, KeyError):
    """A node id that does not exist in the ledger."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class PayloadError(TangleFLError, ValueError):
    """Payload vector with the wrong dimension."""


class ShapeError(TangleFLError, ValueError):
    """Inconsistent array shapes between model, parameters and data."""


class NonFiniteError(TangleFLError, ArithmeticError):
    """A parameter vector acquired NaN or Inf entries."""
