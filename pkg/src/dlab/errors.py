"""Exception types shared across the library."""


class DlabError(Exception):
    """Base class for library errors."""


class ScaleExceeded(DlabError):
    """Input is larger than an exhaustive/exact routine is willing to handle."""


class WindowTooSmall(DlabError):
    """A windowed operation needs a margin the given window does not provide."""


class ZeroSupport(DlabError):
    """A disorder distribution with min support 0 was passed where positivity is required."""


class CapacityOverflow(DlabError):
    """A sampled capacity does not fit the fixed-point range."""


class InfeasibleBounds(DlabError):
    """Layering bounds exclude even the flat Dobrushin configuration."""


class InvalidConfig(DlabError):
    """Malformed experiment configuration."""


class InvariantViolation(DlabError):
    """An internal invariant that should be unreachable was violated."""


class SearchExhausted(DlabError):
    """An exhaustive search finished without finding an element that must exist."""
