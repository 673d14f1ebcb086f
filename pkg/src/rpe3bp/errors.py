"""Exception types shared across the package."""


class DomainError(ValueError):
    """Input outside the domain where a quantity is defined."""


class ConvergenceError(RuntimeError):
    """A numerical procedure did not reach its tolerance.

    ``estimate`` carries the best value obtained, when one exists.
    """

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class CollisionError(RuntimeError):
    """Trajectory came closer to a primary than the collision floor."""

    def __init__(self, message, state=None, time=None):
        super().__init__(message)
        self.state = state
        self.time = time


class NoiseFloorError(RuntimeError):
    """Signal smaller than the estimated numerical noise."""

    def __init__(self, message, signal=None, noise=None):
        super().__init__(message)
        self.signal = signal
        self.noise = noise


class StripExitError(RuntimeError):
    """A map iterate left the admissible angular-momentum strip."""

    def __init__(self, message, chain=None):
        super().__init__(message)
        self.chain = chain
