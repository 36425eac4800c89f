"""Exception types shared across the package.

The CLI maps these onto exit codes: ``ConfigError`` -> 2,
``ResourceLimitError`` -> 3.  ``TruncationError`` is a numerical failure and
is reported as a failed check (exit 1).
"""


class ConfigError(ValueError):
    """Invalid lattice, scaling or run parameters."""


class ResourceLimitError(RuntimeError):
    """Refusal to run an enumeration or dense computation that is too large."""


class TruncationError(RuntimeError):
    """A truncated expansion failed its a-posteriori accuracy check."""
