"""Exception types raised across the package."""


class RepresentationError(ValueError):
    """Field is in the wrong (physical/spectral) representation for the call."""


class DomainError(ValueError):
    """A numeric argument lies outside the admissible range."""


class ResolutionError(ValueError):
    """The grid is too coarse for the requested object."""


class GeometryError(ValueError):
    """An object does not fit inside the periodic box."""


class StepSizeError(RuntimeError):
    """The nonlinear phase accumulated in one step exceeds the guard."""


class StiffnessError(RuntimeError):
    """Adaptive step halving underflowed; carries the partial trajectory."""

    def __init__(self, message, trajectory=None, conservation=None):
        super().__init__(message)
        self.trajectory = trajectory
        self.conservation = conservation


class InsufficientDataError(ValueError):
    """Not enough samples or time stamps to evaluate a statistic."""


class ConfigError(ValueError):
    """Malformed or unknown configuration entry."""
