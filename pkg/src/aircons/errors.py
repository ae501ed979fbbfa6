"""Exception hierarchy shared by all subpackages."""


class AirConsError(Exception):
    """Base class for every error raised by this package."""


class DomainError(AirConsError, ValueError):
    """An argument is outside the domain an operation is defined on."""


class DegenerateChannelError(AirConsError, ArithmeticError):
    """A receiver sees zero total in-phase channel magnitude."""


class ConvergenceError(AirConsError, ArithmeticError):
    """An iterative numerical routine ran out of steps."""


class ConfigError(AirConsError, ValueError):
    """Malformed or invalid simulation configuration."""

    def __init__(self, message, *, line=None, field=None):
        self.line = line
        self.field = field
        prefix = []
        if line is not None:
            prefix.append(f"line {line}")
        if field is not None:
            prefix.append(f"field {field!r}")
        super().__init__(f"{', '.join(prefix)}: {message}" if prefix else message)


class CollisionError(AirConsError, RuntimeError):
    """Two vehicles overlapped (follower reached or passed its predecessor)."""

    def __init__(self, index, time=None, detail=None):
        self.index = index
        self.time = time
        self.detail = detail
        when = "" if time is None else f" at t={time:.3f} s"
        what = f"AV {index} collided with AV {index - 1}" if index is not None else "collision"
        super().__init__(f"{what}{when}" + (f" ({detail})" if detail else ""))


class AllocationError(AirConsError, RuntimeError):
    """Subcarrier demand exceeds the available grid."""
