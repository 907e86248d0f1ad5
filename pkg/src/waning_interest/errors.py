from __future__ import annotations


class WaningError(Exception):
    """Base class for every error the library raises on bad data or parameters."""


class DomainError(WaningError, ValueError):
    """Argument outside the domain of a model function (negative time, n out of range)."""


class InvalidParameterError(DomainError):
    """ModelParams or SimulationSpec that violates its invariants."""


class EmptySampleError(WaningError):
    pass


class TooFewEventsError(WaningError):
    def __init__(self, needed: int, got: int, what: str = "operation"):
        super().__init__(f"{what} needs at least {needed} events, got {got}")
        self.needed = needed
        self.got = got


class InsufficientDataError(WaningError):
    pass


class UnsupportedConfigurationError(WaningError):
    pass


class ConfigurationError(WaningError):
    pass


class ParseError(WaningError):
    def __init__(self, message: str, line_number: int | None = None):
        where = f"line {line_number}: " if line_number is not None else ""
        super().__init__(f"{where}{message}")
        self.line_number = line_number
