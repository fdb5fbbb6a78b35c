"""Exception types shared across the package."""


class DomainError(ValueError):
    """Invalid arguments: bad axis indices, overlapping axis sets, shape mismatch."""


class ParseError(ValueError):
    """An instance document could not be parsed."""


class ValidationError(ValueError):
    """An instance document parsed but violates one or more invariants."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class InfeasibleError(ValueError):
    """Distortion targets lie below what any reconstruction can reach."""


class ResourceCapError(RuntimeError):
    """An enumeration would exceed its configured size cap."""
