"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid user-supplied parameters (maps to CLI exit code 2)."""


class ConvergenceError(RuntimeError):
    """A numerical routine hit its iteration cap (maps to CLI exit code 3)."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual
