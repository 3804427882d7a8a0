"""Shared exception types."""


class CapacityError(Exception):
    """A request exceeds the configured memory or enumeration budget."""


class ConfigError(Exception):
    """An experiment configuration violates its invariants."""


class NonConvergenceError(Exception):
    """Adaptive quadrature failed to reach tolerance within the depth cap."""


class LemmaViolationError(Exception):
    """No admissible case verified for an exponent vector.

    Raised by the partition classifier; it never fires on valid input, so
    seeing it means an implementation bug upstream.
    """
