"""Exception types shared across the package."""


class DomainError(ValueError):
    """A closed-form quantity was requested outside the window where it holds."""

    def __init__(self, message, reason=None):
        super().__init__(message)
        self.reason = reason or message


class SingularityError(ValueError):
    """A field touches the singular value u = 1."""

    def __init__(self, message, node=None, value=None):
        super().__init__(message)
        self.node = node
        self.value = value


class ConvergenceError(RuntimeError):
    """An iterative solve failed to converge.

    ``residual`` holds the last residual norm and ``iterations`` the number of
    iterations performed; ``state`` optionally carries the last iterate.
    """

    def __init__(self, message, residual=None, iterations=None, state=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
        self.state = state
