"""Exception types shared across the package."""


class DomainError(ValueError):
    """Input lies outside an operation's mathematical domain."""


class ConfigError(ValueError):
    """Invalid configuration (shape prior, bounds, optimiser settings)."""


class ProtocolError(RuntimeError):
    """Ask/tell discipline violated (unknown, stale or incomplete tokens)."""


class StateError(RuntimeError):
    """Campaign state is missing, inconsistent or fails schema checks."""


class NumericalError(RuntimeError):
    """A linear-algebra routine failed beyond the recoverable jitter budget."""
