"""Exception hierarchy shared by the library and the CLI."""


class ShadowCorrError(Exception):
    """Base class for all errors raised by shadowcorr."""


class DomainError(ShadowCorrError, ValueError):
    """An argument lies outside the domain of the operation (NaN, inf, out of range)."""


class DegenerateInputError(DomainError):
    """|rho_h| = 1 was passed to a routine that needs a non-singular covariance."""


class DegenerateScenarioError(DomainError):
    """A link failure probability is 0 or 1, so its indicator has no variance."""


class AttainableRangeError(DomainError):
    """Requested event correlation cannot be produced by any rho_h in [-1, 1]."""

    def __init__(self, target: float, rho_min: float, rho_max: float):
        self.target = target
        self.rho_min = rho_min
        self.rho_max = rho_max
        super().__init__(
            f"event correlation {target!r} is not attainable; "
            f"attainable range is [{rho_min!r}, {rho_max!r}]"
        )


class ConfigError(ShadowCorrError, ValueError):
    """Invalid simulation configuration."""


class InsufficientEventsError(ShadowCorrError):
    """Too few failures were observed to form a correlation estimate."""

    def __init__(self, message: str, failures1: int, failures2: int, n_samples: int):
        self.failures1 = failures1
        self.failures2 = failures2
        self.n_samples = n_samples
        super().__init__(
            f"{message} (observed failures: link1={failures1}, "
            f"link2={failures2}, n_samples={n_samples})"
        )
