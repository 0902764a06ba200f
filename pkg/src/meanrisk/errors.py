"""Exception types shared across the package."""


class ModelError(Exception):
    """The optimization model is ill-posed (infeasible set, non-PSD covariance)."""


class CapacityError(Exception):
    """An enumeration or node budget guard was exceeded."""


class ParseError(Exception):
    """Malformed instance document; the message carries line/field context."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)
