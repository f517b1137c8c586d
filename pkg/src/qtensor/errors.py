class InvalidArgument(ValueError):
    """Raised for inputs outside an operation's domain."""


class SolverError(RuntimeError):
    """Raised when an iterative solve misses its tolerance."""

    def __init__(self, message: str, residual: float, iterations: int = 0):
        super().__init__(f"{message} (relative residual {residual:.3e})")
        self.residual = residual
        self.iterations = iterations
