"""Exception and warning types raised across the package."""


class DKHOError(Exception):
    """Base class for all package errors."""


class InvalidResonanceError(DKHOError, ValueError):
    pass


class AdiabaticValidityError(DKHOError, ValueError):
    """A physical parameter set violates a bound needed for the delta-kick reduction."""

    def __init__(self, bound: str, value: float, limit: float):
        self.bound = bound
        self.value = value
        self.limit = limit
        super().__init__(f"adiabatic validity violated: {bound} = {value:.6g} (limit {limit:.6g})")


class NotPeriodicError(DKHOError, ValueError):
    pass


class TruncationError(DKHOError):
    """The truncated Fock basis is too small for the requested state or evolution."""

    def __init__(self, message: str, suggested_dim: int | None = None):
        self.suggested_dim = suggested_dim
        if suggested_dim is not None:
            message = f"{message} (suggested fock_dim >= {suggested_dim})"
        super().__init__(message)


class TruncationWarning(UserWarning):
    pass


class SingularKickIndexError(DKHOError, ValueError):
    """The Ramsey linear system cannot be inverted at this kick index."""

    def __init__(self, n: int, det: float):
        self.n = n
        self.det = det
        super().__init__(
            f"kick index n={n} is near-singular for overlap reconstruction "
            f"(|cos 2phi| = {det:.3g}); skip or interpolate this n"
        )


class ConsistencyError(DKHOError, ArithmeticError):
    pass


class ConfigError(DKHOError, ValueError):
    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"config key '{key}': {message}")
