"""Exception types shared across the package."""


class InputError(ValueError):
    """Raised for invalid arguments, malformed files and contract violations."""


class PopulationCapError(RuntimeError):
    """Raised when a particle simulation exceeds its live-population guard."""
